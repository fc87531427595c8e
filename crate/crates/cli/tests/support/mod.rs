#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tora_core::io::{read_array, write_array, ArrayFile, Dtype};
use tora_core::sim::{generate, SyntheticSpec};
use tora_core::EmbeddingMatrix;

pub fn tora(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tora"))
        .args(args)
        .output()
        .expect("binary runs")
}

/// Runs and asserts success, returning stdout.
pub fn tora_ok(args: &[&str]) -> Vec<u8> {
    let out = tora(args);
    assert!(
        out.status.success(),
        "tora {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out.stdout
}

/// Parses the single JSON error line from stderr.
pub fn error_code(out: &Output) -> String {
    let line = String::from_utf8_lossy(&out.stderr);
    let v: Value = serde_json::from_str(line.trim()).expect("stderr is one JSON line");
    v["error"].as_str().unwrap().to_owned()
}

pub fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

pub fn sample(tokens: usize, dim: usize, seed: u64) -> EmbeddingMatrix {
    generate(&SyntheticSpec::new(tokens, dim), seed)
        .unwrap()
        .embedding
}

pub fn write_matrix(dir: &Path, name: &str, m: &EmbeddingMatrix) -> PathBuf {
    let path = dir.join(name);
    write_array(&path, &ArrayFile::from_matrix(m, Dtype::F64).unwrap()).unwrap();
    path
}

pub fn write_stack(dir: &Path, name: &str, ms: &[EmbeddingMatrix]) -> PathBuf {
    let path = dir.join(name);
    write_array(&path, &ArrayFile::from_stack(ms, Dtype::F64).unwrap()).unwrap();
    path
}

pub fn read_matrix(path: &Path) -> EmbeddingMatrix {
    read_array(path).unwrap().to_matrix().unwrap()
}

/// (timestep, block, metric, value) rows of a JSON report.
pub fn json_entries(bytes: &[u8]) -> Vec<(usize, usize, String, f64)> {
    let v: Value = serde_json::from_slice(bytes).unwrap();
    v["entries"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| {
            (
                e["timestep"].as_u64().unwrap() as usize,
                e["block"].as_u64().unwrap() as usize,
                e["metric"].as_str().unwrap().to_owned(),
                e["value"].as_f64().unwrap(),
            )
        })
        .collect()
}

pub fn lookup(entries: &[(usize, usize, String, f64)], t: usize, b: usize, metric: &str) -> Option<f64> {
    entries
        .iter()
        .find(|e| e.0 == t && e.1 == b && e.2 == metric)
        .map(|e| e.3)
}
