use rayon::prelude::*;
use tora_core::io::{format_float, metadata_comment_block, MetricEntry};
use tora_core::{Result, ToraError};

use crate::args::SweepArgs;
use crate::commands::simulate::{prepare, run_intervened};
use crate::common::emit;

/// Parses `A:B:STEP` (inclusive, `round((B - A) / STEP) + 1` points) or a
/// single value. Points are rounded to 10 decimals so `1.0:1.5:0.1` yields
/// 1.2 rather than 1.2000000000000002.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let bad = |why: &str| ToraError::Configuration(format!("invalid grid '{spec}': {why}"));
    let parts: Vec<f64> = spec
        .split(':')
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| bad("expected numbers"))?;
    if parts.iter().any(|v| !v.is_finite()) {
        return Err(bad("values must be finite"));
    }
    let points = match *parts.as_slice() {
        [single] => vec![single],
        [start, end, step] => {
            if step <= 0.0 {
                return Err(bad("step must be positive"));
            }
            if end < start {
                return Err(bad("end must not precede start"));
            }
            let n = ((end - start) / step).round() as usize;
            (0..=n)
                .map(|i| ((start + i as f64 * step) * 1e10).round() / 1e10)
                .collect()
        }
        _ => return Err(bad("expected A:B:STEP or a single value")),
    };
    if points.windows(2).any(|w| w[1] <= w[0]) {
        return Err(bad("points must be strictly increasing"));
    }
    if points.iter().any(|&s| s <= 0.0) {
        return Err(bad("sigma must be positive"));
    }
    Ok(points)
}

pub fn run(args: &SweepArgs) -> Result<()> {
    let grid = parse_grid(&args.grid)?;
    let prepared = prepare(&args.model)?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs.unwrap_or(0))
        .build()
        .map_err(|e| ToraError::Configuration(format!("cannot start worker pool: {e}")))?;
    // par_iter + collect keeps grid order regardless of completion order
    let sections: Vec<Vec<MetricEntry>> = pool.install(|| {
        grid.par_iter()
            .map(|&sigma| {
                log::info!("sweep point sigma = {sigma}");
                run_intervened(&args.model, &prepared, sigma).map(|r| r.report.entries())
            })
            .collect::<Result<_>>()
    })?;

    let mut metadata = prepared.metadata.clone();
    metadata.config.insert("grid".to_owned(), args.grid.clone());
    let mut out = metadata_comment_block(&metadata);
    let mut writer = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| ToraError::Validation(format!("cannot write sweep CSV: {e}"));
    writer
        .write_record(["sigma", "timestep", "block", "metric", "value"])
        .map_err(csv_err)?;
    for (sigma, entries) in grid.iter().zip(&sections) {
        for e in entries {
            if !e.value.is_finite() {
                return Err(ToraError::Validation(format!(
                    "non-finite {} at sigma {sigma}, timestep {}, block {}",
                    e.metric, e.timestep, e.block
                )));
            }
            writer
                .write_record([
                    format_float(*sigma),
                    e.timestep.to_string(),
                    e.block.to_string(),
                    e.metric.clone(),
                    format_float(e.value),
                ])
                .map_err(csv_err)?;
        }
    }
    out.extend(
        writer
            .into_inner()
            .map_err(|e| ToraError::Validation(format!("cannot flush sweep CSV: {e}")))?,
    );
    emit(args.output.as_ref(), &out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid() {
        assert_eq!(
            parse_grid("1.0:1.5:0.1").unwrap(),
            vec![1.0, 1.1, 1.2, 1.3, 1.4, 1.5]
        );
    }

    #[test]
    fn single_and_degenerate_ranges() {
        assert_eq!(parse_grid("1.0").unwrap(), vec![1.0]);
        assert_eq!(parse_grid("1.3:1.3:0.1").unwrap(), vec![1.3]);
    }

    #[test]
    fn rejects_bad_grids() {
        for bad in ["", "1.0:2.0", "1.0:2.0:0", "2.0:1.0:0.1", "a:b:c", "0:1:0.5", "1:2:-0.1"] {
            assert!(parse_grid(bad).is_err(), "{bad}");
        }
    }
}
