use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use tora_core::io::{decode, ArrayFile};
use tora_core::transform::{pool_semantic_vector, SemanticVector, ToraConfig};
use tora_core::{EmbeddingMatrix, Result, ToraError};

use crate::args::{AlignArgs, SemanticArgs};

pub fn io_error(path: &Path, source: std::io::Error) -> ToraError {
    ToraError::Io {
        path: path.display().to_string(),
        source,
    }
}

pub fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| io_error(path, e))
}

/// Lowercase hex SHA-256.
pub fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// A decoded array together with the digest of its file bytes.
pub struct LoadedArray {
    pub array: ArrayFile,
    pub digest: String,
}

pub fn load_array(path: &Path) -> Result<LoadedArray> {
    let bytes = read_bytes(path)?;
    let array = decode(&bytes)?;
    log::debug!("read {} with shape {:?}", path.display(), array.shape);
    Ok(LoadedArray {
        digest: digest(&bytes),
        array,
    })
}

pub fn load_matrix(path: &Path) -> Result<EmbeddingMatrix> {
    load_array(path)?.array.to_matrix()
}

/// Writes to `path`, or to standard output when `path` is `None`.
pub fn emit(path: Option<&PathBuf>, bytes: &[u8]) -> Result<()> {
    match path {
        Some(p) => fs::write(p, bytes).map_err(|e| io_error(p, e)),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes)
                .and_then(|_| out.flush())
                .map_err(|e| io_error(Path::new("<stdout>"), e))
        }
    }
}

/// Pools the conditional/null pair into a semantic vector, if one was given.
pub fn load_semantic(args: &SemanticArgs, dim: usize) -> Result<Option<SemanticVector>> {
    let (Some(cond), Some(null)) = (&args.cond, &args.null) else {
        return Ok(None);
    };
    let cond = load_matrix(cond)?;
    let null = load_matrix(null)?;
    if cond.dim() != dim {
        return Err(ToraError::Validation(format!(
            "semantic pair has dimension {}, embeddings have {dim}",
            cond.dim()
        )));
    }
    pool_semantic_vector(&cond, &null).map(Some)
}

pub fn tora_config(sigma: f64, align: &AlignArgs) -> ToraConfig {
    let mut config = ToraConfig::with_sigma(sigma);
    config.enable_alignment = !align.no_align;
    config.elbow_override = align.elbow_k;
    config
}

pub fn path_label(path: Option<&PathBuf>) -> String {
    path.map_or_else(|| "-".to_owned(), |p| p.display().to_string())
}
