use std::collections::BTreeMap;
use std::fs;

use tora_core::io::{encode, render_report, ArrayFile, MetricReport, ReportFormat, ReportMetadata};
use tora_core::sim::{
    generate, generate_latents, AttentionCombine, init_weights, run_pipeline, BlockSelection, Intervention,
    InterventionKind, PipelineConfig, PipelineRun, SyntheticSpec, ToyModelWeights,
};
use tora_core::transform::{pool_semantic_vector, SemanticVector};
use tora_core::{EmbeddingMatrix, Result, ToraError};

use crate::args::{InterventionArg, ModelArgs, SimulateArgs};
use crate::common::{digest, emit, io_error, load_array, load_semantic, path_label, tora_config};

pub const DEFAULT_TOKENS: usize = 8;
pub const DEFAULT_DIM: usize = 64;

/// Inputs, weights and semantic direction shared by every run of one model
/// configuration.
pub struct Prepared {
    pub e_init: EmbeddingMatrix,
    pub x_init: EmbeddingMatrix,
    pub weights: ToyModelWeights,
    pub semantic: SemanticVector,
    pub metadata: ReportMetadata,
}

/// Loads or generates the initial embeddings.
///
/// Without `--input` the text comes from the synthetic cluster generator and
/// the digest covers its encoded bytes. Without `--cond/--null` the semantic
/// direction is pooled against a second synthetic draw (seed + 1), standing
/// in for a null-prompt embedding.
pub fn prepare(model: &ModelArgs) -> Result<Prepared> {
    let (e_init, input_digest) = match &model.input {
        Some(path) => {
            let loaded = load_array(path)?;
            let e = loaded.array.to_matrix()?;
            for (flag, given, actual) in [
                ("--tokens", model.tokens, e.tokens()),
                ("--dim", model.dim, e.dim()),
            ] {
                if given.is_some_and(|g| g != actual) {
                    return Err(ToraError::Configuration(format!(
                        "{flag} conflicts with the {}x{} input",
                        e.tokens(),
                        e.dim()
                    )));
                }
            }
            (e, loaded.digest)
        }
        None => {
            let spec = synthetic_spec(model);
            let e = generate(&spec, model.seed)?.embedding;
            let bytes = encode(&ArrayFile::from(e.as_matrix()))?;
            (e, digest(&bytes))
        }
    };
    let (tokens, dim) = (e_init.tokens(), e_init.dim());
    let x_init = generate_latents(model.latents, dim, model.seed)?;
    let weights = init_weights(model.seed, model.blocks, dim)?;

    let semantic = match load_semantic(&model.semantic, dim)? {
        Some(s) => s,
        None if model.align.no_align => SemanticVector::zero(dim),
        None => {
            let mut spec = synthetic_spec(model);
            (spec.tokens, spec.dim) = (tokens, dim);
            let null = generate(&spec, model.seed.wrapping_add(1))?.embedding;
            pool_semantic_vector(&e_init, &null)?
        }
    };

    let mut config = BTreeMap::new();
    let mut put = |k: &str, v: String| {
        config.insert(k.to_owned(), v);
    };
    put("attn_combine", AttentionCombine::from(model.attn_combine).label().to_owned());
    put("align", (!model.align.no_align).to_string());
    put("blocks", model.blocks.to_string());
    put("clusters", model.clusters.map_or_else(|| "default".into(), |c| c.to_string()));
    put("cond", path_label(model.semantic.cond.as_ref()));
    put("dim", dim.to_string());
    put("elbow_k", model.align.elbow_k.map_or_else(|| "elbow".into(), |k| k.to_string()));
    put("input", path_label(model.input.as_ref()));
    put("intervention", model.intervention.label().to_owned());
    put("latents", model.latents.to_string());
    put("null", path_label(model.semantic.null.as_ref()));
    put("timesteps", model.timesteps.to_string());
    put("tokens", tokens.to_string());

    Ok(Prepared {
        e_init,
        x_init,
        weights,
        semantic,
        metadata: ReportMetadata {
            config,
            seed: model.seed,
            input_digest,
        },
    })
}

fn synthetic_spec(model: &ModelArgs) -> SyntheticSpec {
    SyntheticSpec::new(
        model.tokens.unwrap_or(DEFAULT_TOKENS),
        model.dim.unwrap_or(DEFAULT_DIM),
    )
}

fn pipeline_config(model: &ModelArgs, intervention: Option<Intervention>) -> PipelineConfig {
    PipelineConfig {
        timesteps: model.timesteps,
        combine: model.attn_combine.into(),
        clusters: model.clusters,
        seed: model.seed,
        intervention,
    }
}

pub fn run_baseline(model: &ModelArgs, prepared: &Prepared) -> Result<PipelineRun> {
    run_pipeline(
        &prepared.e_init,
        &prepared.x_init,
        &prepared.weights,
        &pipeline_config(model, None),
    )
}

pub fn run_intervened(model: &ModelArgs, prepared: &Prepared, sigma: f64) -> Result<PipelineRun> {
    let kind = match model.intervention {
        InterventionArg::Tora => InterventionKind::Tora {
            config: tora_config(sigma, &model.align),
            semantic: prepared.semantic.clone(),
        },
        InterventionArg::ScaleUp => InterventionKind::ScaleUp { sigma },
    };
    let intervention = Intervention {
        kind,
        blocks: BlockSelection::All,
    };
    run_pipeline(
        &prepared.e_init,
        &prepared.x_init,
        &prepared.weights,
        &pipeline_config(model, Some(intervention)),
    )
}

fn with_metadata(mut report: MetricReport, metadata: ReportMetadata) -> MetricReport {
    report.metadata = metadata;
    report
}

pub fn run(args: &SimulateArgs) -> Result<()> {
    let prepared = prepare(&args.model)?;
    let baseline = run_baseline(&args.model, &prepared)?;
    let intervened = run_intervened(&args.model, &prepared, args.sigma)?;
    log::info!(
        "simulated {} timesteps x {} blocks",
        args.model.timesteps,
        args.model.blocks
    );

    fs::create_dir_all(&args.output).map_err(|e| io_error(&args.output, e))?;
    let format = args.format.into();
    let ext = ReportFormat::extension(format);
    let mut intervened_meta = prepared.metadata.clone();
    intervened_meta
        .config
        .insert("sigma".to_owned(), args.sigma.to_string());

    for (name, run, meta) in [
        ("baseline", &baseline, prepared.metadata.clone()),
        ("intervened", &intervened, intervened_meta),
    ] {
        let report = with_metadata(run.report.clone(), meta);
        let report_path = args.output.join(format!("{name}_report.{ext}"));
        emit(Some(&report_path), &render_report(&report, format)?)?;
        let map_path = args.output.join(format!("{name}_attention.npy"));
        emit(
            Some(&map_path),
            &encode(&ArrayFile::from(&run.attention.text_to_text))?,
        )?;
    }
    Ok(())
}
