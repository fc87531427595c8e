//! Acceptance suite: prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use tora_core::gmm::{assign, default_components, fit_gmm};
use tora_core::io::{decode, encode, render_report, ArrayData, ArrayFile, ReportFormat};
use tora_core::linalg::{build_plane_rotation, mdc_elbow, svd, PrincipalSplit};
use tora_core::metrics::{
    all_but_the_top, default_removal_count, eigen_sum, global_anisotropy, iso_score,
    local_isotropy, sign_rule_check,
};
use tora_core::sim::{
    generate, generate_latents, init_weights, joint_attention_block, run_pipeline,
    AttentionCombine, BlockState, BlockWeights, ModalityWeights, PipelineConfig,
    SyntheticSpec, LAYER_NORM_EPS,
};
use tora_core::transform::{apply_tora, residual_alignment, SemanticVector, ToraConfig};
use tora_core::{EmbeddingMatrix, ToraError};

type Outcome = Result<String, String>;

fn gaussian_vector(rng: &mut ChaCha8Rng, d: usize) -> DVector<f64> {
    DVector::from_fn(d, |_, _| rng.sample(StandardNormal))
}

fn gaussian_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> EmbeddingMatrix {
    EmbeddingMatrix::new(DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))).unwrap()
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit_secs: u64) -> Result<(), String> {
    ensure(elapsed < Duration::from_secs(limit_secs), || {
        format!("runtime {elapsed:.2?} exceeds {limit_secs} s")
    })
}

fn rotation_correctness() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for case in 0..1000 {
        let d = [8, 64, 512][case % 3];
        let from = gaussian_vector(&mut rng, d).normalize();
        let to = gaussian_vector(&mut rng, d).normalize();
        let rot = build_plane_rotation(&from, &to).map_err(|e| e.to_string())?;
        let mapped = (rot.apply(&from).unwrap() - &to).norm();

        let x = gaussian_vector(&mut rng, d);
        let y = gaussian_vector(&mut rng, d);
        let (gx, gy) = (rot.apply(&x).unwrap(), rot.apply(&y).unwrap());
        let gram = (gx.dot(&gy) - x.dot(&y))
            .abs()
            .max(gx.dot(&gx) - x.dot(&x))
            .abs()
            .max((gy.dot(&gy) - y.dot(&y)).abs());
        let scale = x.norm() * y.norm().max(x.norm());

        // component of a probe orthogonal to span(from, to), via explicit QR
        let plane = DMatrix::from_columns(&[from.clone(), to.clone()]).qr().q();
        let z = gaussian_vector(&mut rng, d);
        let z_perp = &z - &plane * plane.tr_mul(&z);
        let fixed = (rot.apply(&z_perp).unwrap() - &z_perp).amax();

        worst = worst.max(mapped).max(gram / scale).max(fixed);
        ensure(mapped < 1e-10 && gram < 1e-10 * scale && fixed < 1e-10, || {
            format!("case {case} (d={d}): map {mapped:e}, gram {gram:e}, fixed {fixed:e}")
        })?;
    }
    within(start.elapsed(), 10)?;
    Ok(format!("1000 cases, worst residual {worst:.1e}, {:.2?}", start.elapsed()))
}

fn basis_integrity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for case in 0..1000 {
        let v = rng.random_range(3..=24);
        let d = rng.random_range(3..=48);
        let e = gaussian_matrix(&mut rng, v, d);
        let factors = svd(&e).map_err(|e| e.to_string())?;
        let split = PrincipalSplit::from_elbow(&factors).map_err(|e| e.to_string())?;
        let s = SemanticVector::new(gaussian_vector(&mut rng, d)).unwrap();
        let outcome = residual_alignment(&split, &s).map_err(|e| e.to_string())?;
        let mut basis = split.clone();
        basis.residual = outcome.residual;
        let full = basis.full_basis();
        let r = full.ncols();
        let err = (full.tr_mul(&full) - DMatrix::<f64>::identity(r, r)).amax();
        worst = worst.max(err);
        ensure(err < 1e-8, || format!("case {case} ({v}x{d}): Gram error {err:e}"))?;
    }
    Ok(format!("1000 cases, worst Gram deviation {worst:.1e}"))
}

fn pipeline_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for case in 0..100 {
        let v = rng.random_range(2..=32);
        let d = rng.random_range(2..=64);
        let e = gaussian_matrix(&mut rng, v, d);
        let out = apply_tora(&e, &SemanticVector::zero(d), &ToraConfig::with_sigma(1.0))
            .map_err(|e| e.to_string())?;
        let err = (out.embedding.as_matrix() - e.as_matrix()).amax();
        worst = worst.max(err);
        ensure(err < 1e-8, || format!("case {case} ({v}x{d}): max-abs {err:e}"))?;
    }
    Ok(format!("100 matrices, worst max-abs {worst:.1e}"))
}

fn norm_bookkeeping() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst_energy = 0.0f64;
    let mut worst_iso = 0.0f64;
    for case in 0..200 {
        let v = rng.random_range(3..=24);
        let d = rng.random_range(3..=48);
        let sigma = rng.random_range(0.5..2.0);
        let e = gaussian_matrix(&mut rng, v, d);
        let s = SemanticVector::new(gaussian_vector(&mut rng, d)).unwrap();
        let mut on = ToraConfig::with_sigma(sigma);
        on.enable_alignment = true;
        let mut off = on.clone();
        off.enable_alignment = false;
        let a = apply_tora(&e, &s, &on).map_err(|e| e.to_string())?;
        let b = apply_tora(&e, &s, &off).map_err(|e| e.to_string())?;
        let energy: f64 = a.scaled_values.iter().map(|x| x * x).sum();
        let fro2 = a.embedding.frobenius_norm().powi(2);
        let rel = (fro2 - energy).abs() / energy;
        let iso = (a.embedding.frobenius_norm() - b.embedding.frobenius_norm()).abs();
        worst_energy = worst_energy.max(rel);
        worst_iso = worst_iso.max(iso);
        ensure(rel < 1e-10 && iso < 1e-10, || {
            format!("case {case}: energy rel {rel:e}, on/off norm gap {iso:e}")
        })?;
    }
    Ok(format!(
        "200 cases, energy rel {worst_energy:.1e}, on/off gap {worst_iso:.1e}"
    ))
}

fn sign_rule() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut checked, mut excluded) = (0, 0);
    for case in 0..10_000 {
        let d = rng.random_range(2..=16);
        let mean = gaussian_vector(&mut rng, d);
        let u = gaussian_vector(&mut rng, d) * rng.random_range(0.1..3.0);
        let s = gaussian_vector(&mut rng, d);
        let sigma = rng.random_range(0.2..3.0);
        let rec = sign_rule_check(&mean, &u, &s, sigma).map_err(|e| e.to_string())?;
        // direct Δγ from the raw cosine definitions
        let e = &mean + &u;
        let e_hat = &mean + &u * sigma;
        let cos = |a: &DVector<f64>, b: &DVector<f64>| a.dot(b) / (a.norm() * b.norm());
        let delta = cos(&s, &e_hat) - cos(&s, &e);
        if delta.abs() < 1e-12 {
            excluded += 1;
            continue;
        }
        checked += 1;
        ensure(delta.signum() == rec.sign_rule_value.signum(), || {
            format!("case {case}: Δγ {delta:e} vs rule {:e}", rec.sign_rule_value)
        })?;
    }
    within(start.elapsed(), 5)?;
    Ok(format!("{checked} agree, {excluded} excluded as |Δγ| < 1e-12"))
}

fn iso_score_anchors() -> Outcome {
    let mut details = Vec::new();
    for k in 2..=6 {
        // ±e_i for i < k: equal variance along k principal axes
        let mut rows = Vec::new();
        for i in 0..k {
            for sign in [1.0, -1.0] {
                let mut r = vec![0.0; k + 2];
                r[i] = sign;
                rows.push(r);
            }
        }
        let iso = EmbeddingMatrix::from_rows(&rows).unwrap();
        let score = iso_score(&iso, k).map_err(|e| e.to_string())?;
        ensure((score - 1.0).abs() < 1e-9, || format!("isotropic k={k}: {score}"))?;

        // variance along one axis only, offset away from the origin
        let line: Vec<Vec<f64>> = (0..2 * k)
            .map(|i| {
                let mut r = vec![3.0; k + 2];
                r[0] = i as f64 - k as f64;
                r
            })
            .collect();
        let one = EmbeddingMatrix::from_rows(&line).unwrap();
        let score = iso_score(&one, k).map_err(|e| e.to_string())?;
        ensure(score.abs() < 1e-9, || format!("single-direction k={k}: {score}"))?;
        details.push(k);
    }
    let e = EmbeddingMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]]).unwrap();
    ensure(matches!(iso_score(&e, 1), Err(ToraError::Validation(_))), || {
        "k = 1 was not rejected".into()
    })?;
    Ok(format!("k = {details:?} isotropic 1, single-direction 0, k = 1 rejected"))
}

fn local_isotropy_anchors() -> Outcome {
    let two = EmbeddingMatrix::from_rows(&[vec![1.0, 2.0, -1.0], vec![0.5, -3.0, 2.0]]).unwrap();
    let xi = local_isotropy(&two, &[0, 0]).map_err(|e| e.to_string())?;
    ensure(xi == 0.0, || format!("2-token cluster gave {xi:e}"))?;

    let h = 3f64.sqrt() / 2.0;
    let tri = EmbeddingMatrix::from_rows(&[vec![1.0, 0.0], vec![-0.5, h], vec![-0.5, -h]]).unwrap();
    let xi = local_isotropy(&tri, &[0, 0, 0]).map_err(|e| e.to_string())?;
    ensure((xi - 0.5).abs() < 1e-9, || format!("equilateral cluster gave {xi}"))?;

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for case in 0..50 {
        let v = rng.random_range(4..=20);
        let d = rng.random_range(2..=12);
        let c = rng.random_range(1..=3);
        let e = gaussian_matrix(&mut rng, v, d);
        let labels: Vec<usize> = (0..v).map(|i| i % c).collect();
        let mut cluster_means = Vec::new();
        for cl in 0..c {
            let members: Vec<DVector<f64>> = (0..v).filter(|&i| labels[i] == cl).map(|i| e.row(i)).collect();
            let m = members.len();
            if m < 2 {
                continue;
            }
            let mean = members.iter().fold(DVector::zeros(d), |acc, r| acc + r) / m as f64;
            let centered: Vec<DVector<f64>> = members.iter().map(|r| r - &mean).collect();
            let mut acc = 0.0;
            for i in 0..m {
                for j in 0..m {
                    if i != j {
                        acc += centered[i].dot(&centered[j]) / (centered[i].norm() * centered[j].norm());
                    }
                }
            }
            cluster_means.push(acc / (m * (m - 1)) as f64);
        }
        let expected = 1.0 - (cluster_means.iter().sum::<f64>() / cluster_means.len() as f64).abs();
        let got = local_isotropy(&e, &labels).map_err(|e| e.to_string())?;
        let err = (got - expected).abs();
        worst = worst.max(err);
        ensure(err < 1e-10, || format!("case {case}: {got} vs {expected}"))?;
    }
    Ok(format!("anchors exact, 50 random cases worst {worst:.1e}"))
}

/// Independent elbow oracle: point-to-line distance via vector projection.
fn elbow_oracle(values: &[f64]) -> usize {
    let n = values.len();
    let (x0, y0) = (1.0, values[0]);
    let (x1, y1) = (n as f64, values[n - 1]);
    let (dx, dy) = (x1 - x0, y1 - y0);
    let len2 = dx * dx + dy * dy;
    let mut best = (0usize, -1.0f64);
    for (i, &y) in values.iter().enumerate() {
        let (px, py) = ((i + 1) as f64 - x0, y - y0);
        let t = (px * dx + py * dy) / len2;
        let dist = ((px - t * dx).powi(2) + (py - t * dy).powi(2)).sqrt();
        if dist > best.1 + 1e-12 {
            best = (i + 1, dist);
        }
    }
    best.0.clamp(1, n - 1)
}

fn mdc_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for case in 0..100 {
        let n = rng.random_range(2..=64);
        let mut values: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..10.0f64).powi(2)).collect();
        values.sort_by(|a, b| b.total_cmp(a));
        let got = mdc_elbow(&values).map_err(|e| e.to_string())?;
        let expected = elbow_oracle(&values);
        ensure(got == expected, || format!("case {case} (n={n}): {got} vs {expected}"))?;
    }
    Ok("100/100 sequences agree".into())
}

fn all_but_the_top_check() -> Outcome {
    ensure(default_removal_count(1536) == 15, || {
        format!("d = 1536 gave D = {}", default_removal_count(1536))
    })?;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let e = gaussian_matrix(&mut rng, 32, 1536);
    let out = all_but_the_top(&e, None).map_err(|e| e.to_string())?;
    ensure(out.removed.ncols() == 15, || format!("removed {} directions", out.removed.ncols()))?;
    let leak = (out.embedding.as_matrix() * &out.removed).amax();
    let mean = out.embedding.mean_row().amax();
    ensure(leak < 1e-8, || format!("projection onto removed directions {leak:e}"))?;
    ensure(mean < 1e-10, || format!("output mean {mean:e}"))?;
    Ok(format!("D = 15, leak {leak:.1e}, mean {mean:.1e}"))
}

fn directional_trends() -> Outcome {
    let start = Instant::now();
    let spec = SyntheticSpec::new(8, 64);
    let (mut eig, mut xi, mut ga) = (0, 0, 0);
    for seed in 0..100u64 {
        let e = generate(&spec, seed).map_err(|e| e.to_string())?.embedding;
        let labels = assign(&fit_gmm(&e, default_components(8), seed).map_err(|e| e.to_string())?, &e)
            .map_err(|e| e.to_string())?
            .labels;
        let mut config = ToraConfig::with_sigma(1.3);
        config.enable_alignment = false;
        let out = apply_tora(&e, &SemanticVector::zero(64), &config)
            .map_err(|e| e.to_string())?
            .embedding;
        let m = |f: &dyn Fn(&EmbeddingMatrix) -> tora_core::Result<f64>| -> Result<bool, String> {
            Ok(f(&out).map_err(|e| e.to_string())? > f(&e).map_err(|e| e.to_string())?)
        };
        eig += m(&|x| eigen_sum(x))? as u32;
        xi += m(&|x| local_isotropy(x, &labels))? as u32;
        ga += m(&|x| global_anisotropy(x))? as u32;
    }
    within(start.elapsed(), 120)?;
    ensure(eig == 100 && xi >= 90 && ga >= 90, || {
        format!("eigen_sum {eig}/100, xi_local {xi}/100, global_anisotropy {ga}/100")
    })?;
    Ok(format!(
        "eigen_sum {eig}/100, xi_local {xi}/100, global_anisotropy {ga}/100, {:.2?}",
        start.elapsed()
    ))
}

fn simulator() -> Outcome {
    // row sums at every block, both combination modes
    let weights = init_weights(11, 4, 16).unwrap();
    let e = generate(&SyntheticSpec::new(8, 16), 11).unwrap().embedding;
    let x = generate_latents(6, 16, 11).unwrap();
    let mut worst = 0.0f64;
    for combine in [AttentionCombine::Concat, AttentionCombine::Sum] {
        let mut state = BlockState {
            text: e.as_matrix().clone(),
            latent: x.as_matrix().clone(),
            block: 1,
            timestep: 1,
        };
        for bw in &weights.blocks {
            let (next, map) = joint_attention_block(&state, bw, combine).map_err(|e| e.to_string())?;
            for m in [&map.text_to_text, &map.joint] {
                for row in m.row_iter() {
                    worst = worst.max((row.sum() - 1.0).abs());
                }
            }
            state = next;
        }
    }
    ensure(worst < 1e-12, || format!("row sum error {worst:e}"))?;

    // zero output projection leaves every consumed state untouched
    let config = PipelineConfig::new(3, 0);
    let run = run_pipeline(&e, &x, &weights.clone().zero_output(), &config).map_err(|e| e.to_string())?;
    ensure(
        run.consumed
            .iter()
            .all(|s| &s.text == e.as_matrix() && &s.latent == x.as_matrix()),
        || "zero W_out changed the state".into(),
    )?;

    // byte-identical reports
    let render = || -> Result<(Vec<u8>, Vec<u8>), String> {
        let run = run_pipeline(&e, &x, &weights, &config).map_err(|e| e.to_string())?;
        Ok((
            render_report(&run.report, ReportFormat::Json).map_err(|e| e.to_string())?,
            render_report(&run.report, ReportFormat::Csv).map_err(|e| e.to_string())?,
        ))
    };
    ensure(render()? == render()?, || "reports differ between runs".into())?;

    // hand-computed forward pass, V=2, N=1, d=2: identity projections,
    // swapped output projection with gate 1/2; see the block unit tests
    let a = 0.5 / (0.25f64 + LAYER_NORM_EPS).sqrt();
    let p = 2.0 * a * a / 2f64.sqrt();
    let c = (p.exp() - (-p).exp()) / (1.0 + p.exp() + (-p).exp());
    let mut text = ModalityWeights::identity(2);
    text.w_out = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
    text.gate = 0.5;
    let bw = BlockWeights {
        text,
        latent: ModalityWeights::identity(2),
    };
    let state = BlockState {
        text: DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]),
        latent: DMatrix::from_row_slice(1, 2, &[1.0, 1.0]),
        block: 1,
        timestep: 1,
    };
    let (next, _) = joint_attention_block(&state, &bw, AttentionCombine::Concat).map_err(|e| e.to_string())?;
    let h = 0.5 * c * a;
    let expected = DMatrix::from_row_slice(2, 2, &[1.0 - h, h, h, 1.0 - h]);
    let err = (&next.text - expected).amax().max((&next.latent - &state.latent).amax());
    ensure(err < 1e-10, || format!("hand-computed pass off by {err:e}"))?;
    Ok(format!("row sums {worst:.1e}, zero W_out identity, reports stable, hand pass {err:.1e}"))
}

fn gmm() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut worst_drop = 0.0f64;
    for case in 0..20 {
        let v = rng.random_range(8..=40);
        let d = rng.random_range(2..=16);
        let e = gaussian_matrix(&mut rng, v, d);
        let c = rng.random_range(1..=4);
        let model = fit_gmm(&e, c, case).map_err(|e| e.to_string())?;
        for w in model.trace.windows(2) {
            worst_drop = worst_drop.max(w[0] - w[1]);
        }
        ensure(worst_drop <= 1e-8, || format!("case {case}: log-likelihood dropped {worst_drop:e}"))?;
        ensure(model == fit_gmm(&e, c, case).unwrap(), || format!("case {case}: not deterministic"))?;
    }

    for seed in 0..20u64 {
        let d = 8;
        let mut offset = DVector::zeros(d);
        offset[(seed % d as u64) as usize] = 20.0;
        let rows: Vec<Vec<f64>> = (0..24)
            .map(|i| {
                let base = if i < 12 { DVector::zeros(d) } else { offset.clone() };
                (base + gaussian_vector(&mut rng, d)).iter().copied().collect()
            })
            .collect();
        let e = EmbeddingMatrix::from_rows(&rows).unwrap();
        let labels = assign(&fit_gmm(&e, 2, seed).map_err(|e| e.to_string())?, &e)
            .map_err(|e| e.to_string())?
            .labels;
        // nearest true center oracle
        let truth: Vec<bool> = rows
            .iter()
            .map(|r| {
                let r = DVector::from_column_slice(r);
                (&r - &offset).norm() < r.norm()
            })
            .collect();
        let recovered = (0..24).all(|i| (0..24).all(|j| (labels[i] == labels[j]) == (truth[i] == truth[j])));
        ensure(recovered, || format!("blob seed {seed}: partition not recovered"))?;
    }
    Ok(format!("20 monotone deterministic fits (max drop {worst_drop:.1e}), 20/20 blob pairs recovered"))
}

fn io_roundtrip() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for case in 0..100 {
        let ndim = rng.random_range(1..=3);
        let shape: Vec<usize> = (0..ndim).map(|_| rng.random_range(1..=9)).collect();
        let n: usize = shape.iter().product();
        let data = if rng.random_bool(0.5) {
            ArrayData::F32((0..n).map(|_| f32::from_bits(rng.random::<u32>() & 0x7f7f_ffff)).collect())
        } else {
            ArrayData::F64((0..n).map(|_| rng.random::<f64>() * 1e6 - 5e5).collect())
        };
        let array = ArrayFile::new(shape.clone(), data).map_err(|e| e.to_string())?;
        let bytes = encode(&array).map_err(|e| e.to_string())?;
        let back = decode(&bytes).map_err(|e| e.to_string())?;
        let same_bits = match (&array.data, &back.data) {
            (ArrayData::F32(a), ArrayData::F32(b)) => a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits()),
            (ArrayData::F64(a), ArrayData::F64(b)) => a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits()),
            _ => false,
        };
        ensure(back.shape == shape && same_bits, || format!("case {case}: roundtrip mismatch"))?;
        ensure(encode(&back).unwrap() == bytes, || format!("case {case}: re-encoding differs"))?;
    }

    let good = encode(&ArrayFile::from_f64(vec![2, 2], vec![1.0, 2.0, 3.0, 4.0], tora_core::io::Dtype::F64).unwrap()).unwrap();
    let mut bad_magic = good.clone();
    bad_magic[1] = b'X';
    ensure(matches!(decode(&bad_magic), Err(ToraError::Format(_))), || "bad magic accepted".into())?;
    let short = &good[..good.len() - 3];
    ensure(matches!(decode(short), Err(ToraError::Truncated { .. })), || "short payload accepted".into())?;
    let mut long = good.clone();
    long.push(0);
    ensure(matches!(decode(&long), Err(ToraError::Truncated { .. })), || "long payload accepted".into())?;
    Ok("100 random arrays bit-exact, bad magic and wrong lengths rejected".into())
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 13] = [
        ("rotation correctness", rotation_correctness),
        ("basis integrity", basis_integrity),
        ("pipeline identity", pipeline_identity),
        ("norm bookkeeping", norm_bookkeeping),
        ("sign rule", sign_rule),
        ("IsoScore anchors", iso_score_anchors),
        ("local isotropy anchors", local_isotropy_anchors),
        ("MDC oracle", mdc_oracle),
        ("all-but-the-top", all_but_the_top_check),
        ("directional trends", directional_trends),
        ("simulator", simulator),
        ("GMM", gmm),
        ("I/O", io_roundtrip),
    ];
    let mut failures = 0;
    for (name, check) in criteria {
        match check() {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                failures += 1;
                println!("FAIL {name}: {detail}");
            }
        }
    }
    println!("{} passed, {failures} failed", criteria.len() - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
