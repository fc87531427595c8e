use std::collections::BTreeMap;

use tora_core::gmm::{assign, default_components, fit_gmm};
use tora_core::io::{metric, render_report, MetricReport, ReportMetadata};
use tora_core::metrics::{delta_gamma, isotropy_scores, IsotropyScores};
use tora_core::{Result, ToraError};

use crate::args::AnalyzeArgs;
use crate::common::{emit, load_array, load_semantic, path_label};

/// Prefix for metrics of the `--after` matrix.
pub const AFTER_PREFIX: &str = "after_";

fn push_scores(report: &mut MetricReport, block: usize, prefix: &str, s: &IsotropyScores) {
    for (name, value) in [
        (metric::EIGEN_SUM, s.eigen_sum),
        (metric::XI_LOCAL, s.xi_local),
        (metric::ISO_SCORE, s.iso_score),
        (metric::GLOBAL_ANISOTROPY, s.global_anisotropy),
    ] {
        report.push(0, block, &format!("{prefix}{name}"), value);
    }
}

/// Metrics go under timestep 0 and the matrix's index in the stack as block.
pub fn run(args: &AnalyzeArgs) -> Result<()> {
    let loaded = load_array(&args.input)?;
    let before = loaded.array.to_stack()?;
    let after = match &args.after {
        Some(path) => {
            let m = load_array(path)?.array.to_stack()?;
            let shape = |v: &[tora_core::EmbeddingMatrix]| (v.len(), v[0].tokens(), v[0].dim());
            if shape(&m) != shape(&before) {
                return Err(ToraError::Validation(format!(
                    "--after holds {:?} (count, V, d), --input holds {:?}",
                    shape(&m),
                    shape(&before)
                )));
            }
            Some(m)
        }
        None => None,
    };
    let semantic = load_semantic(&args.semantic, before[0].dim())?;
    let tokens = before[0].tokens();
    let clusters = args.clusters.unwrap_or_else(|| default_components(tokens));

    let mut config = BTreeMap::new();
    config.insert("after".to_owned(), path_label(args.after.as_ref()));
    config.insert("clusters".to_owned(), clusters.to_string());
    config.insert("cond".to_owned(), path_label(args.semantic.cond.as_ref()));
    config.insert("input".to_owned(), args.input.display().to_string());
    config.insert("null".to_owned(), path_label(args.semantic.null.as_ref()));
    let mut report = MetricReport::new(ReportMetadata {
        config,
        seed: args.seed,
        input_digest: loaded.digest,
    });

    for (block, e) in before.iter().enumerate() {
        let labels = assign(&fit_gmm(e, clusters, args.seed)?, e)?.labels;
        push_scores(&mut report, block, "", &isotropy_scores(e, &labels)?);
        let Some(after) = &after else { continue };
        let a = &after[block];
        // clusters from the before matrix so both sides share one grouping
        push_scores(&mut report, block, AFTER_PREFIX, &isotropy_scores(a, &labels)?);
        if let Some(s) = &semantic {
            let rec = delta_gamma(s, e, a)?;
            report.push(0, block, metric::GAMMA_BEFORE, rec.gamma_before);
            report.push(0, block, metric::GAMMA_AFTER, rec.gamma_after);
            report.push(0, block, metric::DELTA_GAMMA, rec.delta);
            report.push(0, block, metric::SIGN_RULE, rec.sign_rule_value);
        }
    }
    emit(args.output.as_ref(), &render_report(&report, args.format.into())?)
}
