//! Metric reports and their deterministic JSON / CSV renderings.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Serialize, Serializer};
use serde_json::value::RawValue;

use crate::error::{validation, Result, ToraError};

/// Metric names as they appear in reports.
pub mod metric {
    pub const EIGEN_SUM: &str = "eigen_sum";
    pub const XI_LOCAL: &str = "xi_local";
    pub const ISO_SCORE: &str = "iso_score";
    pub const GLOBAL_ANISOTROPY: &str = "global_anisotropy";
    pub const DELTA_GAMMA: &str = "delta_gamma";
    pub const GAMMA_BEFORE: &str = "gamma_before";
    pub const GAMMA_AFTER: &str = "gamma_after";
    pub const SIGN_RULE: &str = "sign_rule_value";
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

impl ReportFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ReportFormat::Json => "json",
            ReportFormat::Csv => "csv",
        }
    }
}

impl FromStr for ReportFormat {
    type Err = ToraError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(validation!("unknown report format '{other}'")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricEntry {
    pub timestep: usize,
    pub block: usize,
    pub metric: String,
    pub value: f64,
}

impl MetricEntry {
    fn key(&self) -> (usize, usize, &str) {
        (self.timestep, self.block, self.metric.as_str())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReportMetadata {
    /// Echo of the configuration that produced the report.
    pub config: BTreeMap<String, String>,
    pub seed: u64,
    /// Hex digest identifying the input data.
    pub input_digest: String,
}

/// Per-(timestep, block) scalar metrics plus run metadata.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricReport {
    pub metadata: ReportMetadata,
    entries: Vec<MetricEntry>,
}

impl MetricReport {
    pub fn new(metadata: ReportMetadata) -> Self {
        Self {
            metadata,
            entries: Vec::new(),
        }
    }

    pub fn push(&mut self, timestep: usize, block: usize, metric: &str, value: f64) {
        self.entries.push(MetricEntry {
            timestep,
            block,
            metric: metric.to_owned(),
            value,
        });
    }

    pub fn extend(&mut self, other: &MetricReport) {
        self.entries.extend(other.entries.iter().cloned());
    }

    /// Entries in (timestep, block, metric) order.
    pub fn entries(&self) -> Vec<MetricEntry> {
        let mut sorted = self.entries.clone();
        sorted.sort_by(|a, b| a.key().cmp(&b.key()));
        sorted
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn value(&self, timestep: usize, block: usize, metric: &str) -> Option<f64> {
        self.entries
            .iter()
            .find(|e| e.key() == (timestep, block, metric))
            .map(|e| e.value)
    }

    pub fn validate(&self) -> Result<()> {
        let sorted = self.entries();
        for e in &sorted {
            if !e.value.is_finite() {
                return Err(validation!(
                    "non-finite value {} for {} at timestep {}, block {}",
                    e.value,
                    e.metric,
                    e.timestep,
                    e.block
                ));
            }
        }
        if let Some(w) = sorted.windows(2).find(|w| w[0].key() == w[1].key()) {
            return Err(validation!(
                "duplicate entry for {} at timestep {}, block {}",
                w[0].metric,
                w[0].timestep,
                w[0].block
            ));
        }
        Ok(())
    }
}

/// Fixed 17-significant-digit float formatting.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

struct Fixed17(f64);

impl Serialize for Fixed17 {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let raw = RawValue::from_string(format_float(self.0)).map_err(serde::ser::Error::custom)?;
        raw.serialize(serializer)
    }
}

// field order is alphabetical so the emitted keys are sorted
#[derive(Serialize)]
struct JsonEntry<'a> {
    block: usize,
    metric: &'a str,
    timestep: usize,
    value: Fixed17,
}

#[derive(Serialize)]
struct JsonMetadata<'a> {
    config: &'a BTreeMap<String, String>,
    input_digest: &'a str,
    seed: u64,
}

#[derive(Serialize)]
struct JsonReport<'a> {
    entries: Vec<JsonEntry<'a>>,
    metadata: JsonMetadata<'a>,
}

/// Renders a report to bytes. Identical reports always give identical bytes.
pub fn render_report(report: &MetricReport, format: ReportFormat) -> Result<Vec<u8>> {
    report.validate()?;
    let entries = report.entries();
    match format {
        ReportFormat::Json => {
            let doc = JsonReport {
                entries: entries
                    .iter()
                    .map(|e| JsonEntry {
                        block: e.block,
                        metric: &e.metric,
                        timestep: e.timestep,
                        value: Fixed17(e.value),
                    })
                    .collect(),
                metadata: JsonMetadata {
                    config: &report.metadata.config,
                    input_digest: &report.metadata.input_digest,
                    seed: report.metadata.seed,
                },
            };
            let mut bytes = serde_json::to_vec_pretty(&doc)
                .map_err(|e| validation!("cannot serialize report: {e}"))?;
            bytes.push(b'\n');
            Ok(bytes)
        }
        ReportFormat::Csv => {
            let mut out = metadata_comment_block(&report.metadata);
            let mut writer = csv::Writer::from_writer(Vec::new());
            let csv_err = |e: csv::Error| validation!("cannot serialize report: {e}");
            writer
                .write_record(["timestep", "block", "metric", "value"])
                .map_err(csv_err)?;
            for e in &entries {
                writer
                    .write_record([
                        e.timestep.to_string(),
                        e.block.to_string(),
                        e.metric.clone(),
                        format_float(e.value),
                    ])
                    .map_err(csv_err)?;
            }
            out.extend(
                writer
                    .into_inner()
                    .map_err(|e| validation!("cannot flush report: {e}"))?,
            );
            Ok(out)
        }
    }
}

/// `# key=value` lines preceding the CSV header.
pub fn metadata_comment_block(metadata: &ReportMetadata) -> Vec<u8> {
    let mut out = String::new();
    out.push_str(&format!("# seed={}\n", metadata.seed));
    out.push_str(&format!("# input_digest={}\n", metadata.input_digest));
    for (k, v) in &metadata.config {
        out.push_str(&format!("# config.{k}={v}\n"));
    }
    out.into_bytes()
}

pub fn write_report(path: impl AsRef<Path>, report: &MetricReport, format: ReportFormat) -> Result<()> {
    let path = path.as_ref();
    let bytes = render_report(report, format)?;
    fs::write(path, bytes).map_err(|e| ToraError::io(path, e))
}
