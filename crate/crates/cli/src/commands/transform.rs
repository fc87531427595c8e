use std::path::PathBuf;

use serde_json::json;
use tora_core::io::{encode, ArrayFile};
use tora_core::transform::{apply_tora, SemanticVector};
use tora_core::{Result, ToraError};

use crate::args::TransformArgs;
use crate::common::{emit, load_array, load_semantic, tora_config};

pub fn run(args: &TransformArgs) -> Result<()> {
    let loaded = load_array(&args.input)?;
    let array = &loaded.array;
    let stacked = match array.shape.len() {
        2 => false,
        3 => true,
        _ => {
            return Err(ToraError::Validation(format!(
                "expected a (V, d) or (B, V, d) array, got shape {:?}",
                array.shape
            )))
        }
    };
    let matrices = array.to_stack()?;
    let dim = matrices[0].dim();
    let semantic = load_semantic(&args.semantic, dim)?;
    let s = semantic.clone().unwrap_or_else(|| SemanticVector::zero(dim));
    let config = tora_config(args.sigma, &args.align);

    let mut outputs = Vec::with_capacity(matrices.len());
    let mut entries = Vec::with_capacity(matrices.len());
    for (index, m) in matrices.iter().enumerate() {
        let out = apply_tora(m, &s, &config)?;
        log::info!(
            "matrix {index}: k = {}, alignment {}",
            out.k,
            out.alignment.label()
        );
        entries.push(json!({
            "alignment": out.alignment.label(),
            "angle": out.alignment.angle(),
            "index": index,
            "k": out.k,
        }));
        outputs.push(out.embedding);
    }

    let dtype = array.dtype();
    let result = if stacked {
        ArrayFile::from_stack(&outputs, dtype)?
    } else {
        ArrayFile::from_matrix(&outputs[0], dtype)?
    };
    emit(Some(&args.output), &encode(&result)?)?;

    let manifest = json!({
        "alignment_enabled": config.enable_alignment,
        "blocks": entries,
        "dtype": dtype.descr(),
        "elbow_k": config.elbow_override,
        "input": args.input.display().to_string(),
        "input_digest": loaded.digest,
        "output": args.output.display().to_string(),
        "semantic": if semantic.is_some() { "mean_pooled" } else { "none" },
        "shape": array.shape,
        "sigma": config.sigma,
    });
    let manifest_path = args.report.clone().unwrap_or_else(|| {
        let mut name = args.output.clone().into_os_string();
        name.push(".manifest.json");
        PathBuf::from(name)
    });
    let mut bytes = serde_json::to_vec_pretty(&manifest)
        .map_err(|e| ToraError::Validation(format!("cannot serialize manifest: {e}")))?;
    bytes.push(b'\n');
    emit(Some(&manifest_path), &bytes)
}
