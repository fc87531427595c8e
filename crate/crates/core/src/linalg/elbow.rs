use crate::error::{validation, Result};

/// Maximum-distance-to-chord elbow of a non-increasing sequence.
///
/// Points are `(i, values[i-1])` for `i = 1..=n`; the chord joins the first
/// and last points. Returns the 1-based index with the largest perpendicular
/// distance to the chord (smallest index on ties), clamped to `1..=n-1` so
/// that at least one trailing element is left over.
pub fn mdc_elbow(values: &[f64]) -> Result<usize> {
    let n = values.len();
    if n < 2 {
        return Err(validation!("elbow detection needs at least 2 values, got {n}"));
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(validation!("non-finite value at position {i}"));
    }
    if let Some(i) = values.windows(2).position(|w| w[1] > w[0]) {
        return Err(validation!(
            "sequence increases at position {}: {} -> {}",
            i + 1,
            values[i],
            values[i + 1]
        ));
    }

    let first = values[0];
    let last = values[n - 1];
    let run = (n - 1) as f64;
    let rise = last - first;
    let chord_len = run.hypot(rise);

    let mut best = 1;
    let mut best_dist = f64::NEG_INFINITY;
    for (offset, &y) in values.iter().enumerate() {
        let x = offset as f64;
        // |cross((run, rise), (x, y - first))| / |chord|
        let dist = (run * (y - first) - rise * x).abs() / chord_len;
        if dist > best_dist {
            best_dist = dist;
            best = offset + 1;
        }
    }
    Ok(best.clamp(1, n - 1))
}
