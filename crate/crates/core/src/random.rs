//! Seeded random instances for property suites.
//!
//! Spectra are valid step functions built from sorted positive increments;
//! variables are step quantiles with values in `[-10, 10]`.

use rand::Rng;

use crate::distmodel::{PairRow, PairedSample, StepQuantile};
use crate::spectrum::Spectrum;

/// Largest absolute value produced by [`step_quantile`].
pub const VALUE_BOUND: f64 = 10.0;

fn sorted_cuts(rng: &mut impl Rng, count: usize) -> Vec<f64> {
    let mut cuts: Vec<f64> = (0..count).map(|_| rng.random_range(0.001..0.999)).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-6);
    cuts
}

/// A random valid step spectrum with at most `max_segments` pieces.
pub fn step_spectrum(rng: &mut impl Rng, max_segments: usize) -> Spectrum {
    let n = rng.random_range(1..=max_segments.max(1));
    let mut breakpoints = vec![0.0];
    breakpoints.extend(sorted_cuts(rng, n - 1));
    breakpoints.push(1.0);
    let n = breakpoints.len() - 1;

    let mut level = if n > 1 && rng.random_bool(0.3) { 0.0 } else { rng.random_range(0.01..1.0) };
    let mut raw = Vec::with_capacity(n);
    for _ in 0..n {
        raw.push(level);
        level += rng.random_range(0.01..2.0);
    }
    let integral: f64 = raw.iter().zip(breakpoints.windows(2)).map(|(c, w)| c * (w[1] - w[0])).sum();
    let values = raw.into_iter().map(|c| c / integral).collect();
    Spectrum::step(breakpoints, values).expect("generated spectrum has a valid shape")
}

/// A random step quantile with at most `max_segments` atoms in `[-10, 10]`.
pub fn step_quantile(rng: &mut impl Rng, max_segments: usize) -> StepQuantile {
    let n = rng.random_range(1..=max_segments.max(1));
    let values: Vec<f64> = (0..n).map(|_| rng.random_range(-VALUE_BOUND..=VALUE_BOUND)).collect();
    let weights: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
    StepQuantile::from_samples(&values, Some(&weights)).expect("generated sample is valid")
}

/// Like [`step_quantile`] with values in `[0, 10]`.
pub fn nonnegative_quantile(rng: &mut impl Rng, max_segments: usize) -> StepQuantile {
    step_quantile(rng, max_segments).abs_value()
}

/// A random joint law built from shared uniform draws: `Y = F^{-1}(U)` and
/// `Z = G^{-1}(V)` where `V` equals `U`, `1 - U` or an independent draw.
pub fn joint(rng: &mut impl Rng, max_rows: usize) -> PairedSample {
    let fy = step_quantile(rng, max_rows);
    let fz = step_quantile(rng, max_rows);
    let mode = rng.random_range(0..3);
    let n = rng.random_range(1..=max_rows.max(1));
    let rows = (0..n)
        .map(|_| {
            let u: f64 = rng.random();
            let v = match mode {
                0 => u,
                1 => (1.0 - u).min(1.0 - f64::EPSILON),
                _ => rng.random(),
            };
            PairRow {
                y: fy.quantile(u).expect("u in [0, 1)"),
                z: fz.quantile(v).expect("v in [0, 1)"),
                w: rng.random_range(0.05..1.0),
            }
        })
        .collect();
    PairedSample::normalized(rows).expect("generated rows are valid")
}

fn lattice_cuts(rng: &mut impl Rng, count: usize, denom: u32) -> Vec<u32> {
    let mut cuts: Vec<u32> = (0..count).map(|_| rng.random_range(1..denom)).collect();
    cuts.sort_unstable();
    cuts.dedup();
    cuts
}

/// A random step spectrum whose breakpoints are multiples of `1 / denom`.
pub fn lattice_step_spectrum(rng: &mut impl Rng, max_segments: usize, denom: u32) -> Spectrum {
    let n = rng.random_range(1..=max_segments.max(1));
    let mut breakpoints = vec![0.0];
    breakpoints.extend(lattice_cuts(rng, n - 1, denom).into_iter().map(|k| k as f64 / denom as f64));
    breakpoints.push(1.0);
    let n = breakpoints.len() - 1;
    let mut level = rng.random_range(0.0..1.0);
    let mut raw = Vec::with_capacity(n);
    for _ in 0..n {
        raw.push(level);
        level += rng.random_range(0.01..2.0);
    }
    let integral: f64 = raw.iter().zip(breakpoints.windows(2)).map(|(c, w)| c * (w[1] - w[0])).sum();
    let values = raw.into_iter().map(|c| c / integral).collect();
    Spectrum::step(breakpoints, values).expect("generated spectrum has a valid shape")
}

/// A random step quantile whose breakpoints are multiples of `1 / denom`.
pub fn lattice_quantile(rng: &mut impl Rng, max_segments: usize, denom: u32) -> StepQuantile {
    let mut cuts = vec![0];
    cuts.extend(lattice_cuts(rng, max_segments.max(1) - 1, denom));
    cuts.push(denom);
    let breakpoints: Vec<f64> = cuts.iter().map(|&k| k as f64 / denom as f64).collect();
    let mut values: Vec<f64> = (1..cuts.len()).map(|_| rng.random_range(-VALUE_BOUND..=VALUE_BOUND)).collect();
    values.sort_by(f64::total_cmp);
    StepQuantile::from_parts(&breakpoints, &values).expect("generated parts are valid")
}
