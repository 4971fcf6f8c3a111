//! The dominance relation `Z ≼ ησ`, the dual gauge norm
//! `‖Z‖_σ* = inf{η > 0 : |Z| ≼ ησ}` and the norming functional.
//!
//! With `G(r) = ∫_{1-r}^1 F_{|Z|}^{-1}` and `T(r) = S(1 - r)`,
//! `‖Z‖_σ* = sup_r G(r) / T(r)`. `G` is piecewise linear with kinks at the
//! breakpoints of `Z` and `T` is concave, so `G - cT` is convex between
//! kinks and the supremum is attained at a kink or in the limit `r → 0`.
//! Near 0 the ratio is nondecreasing in `r`, so the limit never exceeds
//! the value at the smallest kink.

use serde::Serialize;

use crate::distmodel::{PairRow, PairedSample, StepQuantile};
use crate::error::{domain, Error, Result};
use crate::spectrum::Spectrum;
use crate::SEGMENT_TOL;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DominanceCertificate {
    pub holds: bool,
    /// Level where the margin is smallest; 1 stands for the limit `α → 1`.
    pub witness_alpha: f64,
    /// `η S(α)/(1-α) - AVaR_α(|Z|)` at the witness.
    pub margin: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DualNorm {
    pub value: f64,
    /// Level attaining the supremum; 1 stands for the limit `α → 1`.
    pub attaining_alpha: f64,
    /// Whether the `α → 1` behaviour of `σ` is known (step spectra, closed
    /// forms, and general spectra with a declared tail order).
    pub limit_verified: bool,
}

/// Complement levels `r > 0` where the ratio can peak, in decreasing order.
fn check_points(abs_z: &StepQuantile, sigma: &Spectrum) -> Vec<f64> {
    let comps = abs_z.complements();
    let mut points: Vec<f64> = comps[..comps.len() - 1].to_vec();
    if let Some(step) = sigma.as_step() {
        points.extend(step.complements().iter().copied().filter(|&r| r > 0.0));
    }
    points.sort_by(|a, b| b.total_cmp(a));
    points.dedup();
    points
}

/// Checks `AVaR_α(|Z|) ≤ η S(α) / (1-α)` for all `α ∈ [0, 1)` and in the limit.
pub fn dominates(z: &StepQuantile, sigma: &Spectrum, eta: f64) -> Result<DominanceCertificate> {
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(domain("eta", eta, "(0, ∞)"));
    }
    sigma.ensure_valid()?;
    let abs = z.abs_value();
    let mut witness = (f64::INFINITY, 0.0);
    for r in check_points(&abs, sigma) {
        let margin = (eta * sigma.tail_complement(r) - abs.upper_integral_complement(r)) / r;
        if margin <= witness.0 {
            witness = (margin, 1.0 - r);
        }
    }
    let top = sigma.sup_density();
    if top.is_finite() {
        let margin = eta * top - abs.esssup();
        if margin <= witness.0 {
            witness = (margin, 1.0);
        }
    }
    Ok(DominanceCertificate {
        holds: witness.0 >= -SEGMENT_TOL,
        witness_alpha: witness.1,
        margin: witness.0,
    })
}

/// `‖Z‖_σ* = sup_α (1-α) AVaR_α(|Z|) / S(α)`, together with the attaining level.
pub fn dual_norm(z: &StepQuantile, sigma: &Spectrum) -> Result<DualNorm> {
    sigma.ensure_valid()?;
    let abs = z.abs_value();
    let mut best = (0.0_f64, 0.0);
    for r in check_points(&abs, sigma) {
        let ratio = abs.upper_integral_complement(r) / sigma.tail_complement(r);
        if ratio > best.0 {
            best = (ratio, 1.0 - r);
        }
    }
    let top = sigma.sup_density();
    let limit = if top.is_finite() { abs.esssup() / top } else { 0.0 };
    if limit > best.0 {
        best = (limit, 1.0);
    }
    Ok(DualNorm {
        value: best.0,
        attaining_alpha: best.1,
        limit_verified: sigma.tail_order().is_some(),
    })
}

/// `‖1_A‖_σ* = P(A) / S(1 - P(A))`.
pub fn indicator_dual_norm(sigma: &Spectrum, p_a: f64) -> Result<f64> {
    if !(p_a > 0.0 && p_a <= 1.0) {
        return Err(domain("pA", p_a, "(0, 1]"));
    }
    sigma.ensure_valid()?;
    Ok(p_a / sigma.tail_complement(p_a))
}

/// The norming pair `(Y, Z_Y)` with `Z_Y = sign(Y) σ(U)` and `U` comonotone
/// with `|Y|`, so that `E[Y Z_Y] = ‖Y‖_σ` and `‖Z_Y‖_σ* = 1`.
pub fn hahn_banach_witness(sigma: &Spectrum, d: &StepQuantile) -> Result<PairedSample> {
    sigma.ensure_valid()?;
    let step = sigma.as_step().ok_or(Error::NotStep)?;
    let mut atoms: Vec<(f64, f64)> = d.atoms().collect();
    atoms.sort_by(|a, b| a.0.abs().total_cmp(&b.0.abs()).then(a.0.total_cmp(&b.0)));
    let m = atoms.len();
    let mut comps = vec![0.0; m + 1];
    for k in (1..m).rev() {
        comps[k] = comps[k + 1] + atoms[k].1;
    }
    comps[0] = 1.0;

    let (s_comps, s_values) = (step.complements(), step.values());
    let mut rows = Vec::with_capacity(m + s_values.len());
    let (mut i, mut j) = (0, 0);
    let mut a = 1.0_f64;
    while i < m && j < s_values.len() {
        let b = comps[i + 1].max(s_comps[j + 1]);
        if a > b {
            let y = atoms[i].0;
            let sign = if y < 0.0 { -1.0 } else { 1.0 };
            rows.push(PairRow {
                y,
                z: sign * s_values[j],
                w: a - b,
            });
        }
        a = b;
        if comps[i + 1] == b {
            i += 1;
        }
        if s_comps[j + 1] == b {
            j += 1;
        }
    }
    PairedSample::normalized(rows)
}

/// `E[YZ]`.
pub fn pairing(p: &PairedSample) -> f64 {
    p.pairing()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random;
    use crate::riskcore::sigma_norm;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn indicator(p_a: f64) -> StepQuantile {
        StepQuantile::from_parts(&[0.0, 1.0 - p_a, 1.0], &[0.0, 1.0]).unwrap()
    }

    fn sigma_of_u(sigma: &Spectrum) -> StepQuantile {
        let step = sigma.as_step().unwrap();
        StepQuantile::from_parts(step.breakpoints(), step.values()).unwrap()
    }

    fn grid_sup(z: &StepQuantile, sigma: &Spectrum, n: usize) -> f64 {
        let abs = z.abs_value();
        (0..n)
            .map(|i| {
                let r = 1.0 - i as f64 / n as f64;
                abs.upper_integral_complement(r) / sigma.tail_complement(r)
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn dominance_examples() {
        let one = StepQuantile::constant(1.0);
        for sigma in [Spectrum::uniform(), Spectrum::avar(0.7).unwrap(), Spectrum::power_sqrt()] {
            assert!(dominates(&one, &sigma, 1.0).unwrap().holds);
        }
        let sigma = Spectrum::step(vec![0.0, 0.4, 0.9, 1.0], vec![0.25, 1.0, 4.0]).unwrap();
        let cert = dominates(&sigma_of_u(&sigma), &sigma, 1.0).unwrap();
        assert!(cert.holds);
        assert!(cert.margin.abs() < 1e-12);

        let cert = dominates(&StepQuantile::constant(2.0), &Spectrum::uniform(), 1.0).unwrap();
        assert!(!cert.holds);
        assert_eq!(cert.witness_alpha, 1.0);
        assert_eq!(cert.margin, -1.0);
        assert!(dominates(&one, &sigma, 0.0).is_err());
    }

    #[test]
    fn dual_norm_examples() {
        let half = Spectrum::avar(0.5).unwrap();
        let v = dual_norm(&indicator(0.25), &half).unwrap();
        assert_eq!(v.value, 0.5);
        assert_eq!(v.attaining_alpha, 0.75);
        assert!((grid_sup(&indicator(0.25), &half, 10_000) - 0.5).abs() < 1e-12);

        let sigma = Spectrum::step(vec![0.0, 0.4, 0.9, 1.0], vec![0.25, 1.0, 4.0]).unwrap();
        assert!((dual_norm(&sigma_of_u(&sigma), &sigma).unwrap().value - 1.0).abs() < 1e-12);

        let v = dual_norm(&StepQuantile::constant(-3.0), &Spectrum::uniform()).unwrap();
        assert_eq!(v.value, 3.0);
        assert!(v.limit_verified);
    }

    #[test]
    fn indicator_examples() {
        for sigma in [Spectrum::uniform(), Spectrum::avar(0.5).unwrap(), Spectrum::power_sqrt()] {
            assert_eq!(indicator_dual_norm(&sigma, 1.0).unwrap(), 1.0);
        }
        assert_eq!(indicator_dual_norm(&Spectrum::avar(0.5).unwrap(), 0.25).unwrap(), 0.5);
        assert_eq!(indicator_dual_norm(&Spectrum::power_sqrt(), 0.25).unwrap(), 0.5);
        assert!(indicator_dual_norm(&Spectrum::power_sqrt(), 0.0).is_err());
    }

    #[test]
    fn witness_examples() {
        let d = StepQuantile::from_samples(&[-1.5, 0.0, 2.0, 3.0], None).unwrap();
        let w = hahn_banach_witness(&Spectrum::uniform(), &d).unwrap();
        assert!(w.rows().iter().all(|r| r.z == if r.y < 0.0 { -1.0 } else { 1.0 }));
        assert!((pairing(&w) - d.lp_norm(1.0).unwrap()).abs() < 1e-15);

        let d = StepQuantile::from_samples(&[1.0, 2.0], None).unwrap();
        let w = hahn_banach_witness(&Spectrum::avar(0.5).unwrap(), &d).unwrap();
        assert_eq!(pairing(&w), 2.0);

        let sigma = Spectrum::step(vec![0.0, 0.4, 0.9, 1.0], vec![0.25, 1.0, 4.0]).unwrap();
        let d = StepQuantile::from_samples(&[-4.0, -1.0, 0.5, 2.0, 3.5], None).unwrap();
        let w = hahn_banach_witness(&sigma, &d).unwrap();
        assert!((pairing(&w) - sigma_norm(&sigma, &d).unwrap()).abs() < 1e-12);
        assert!(matches!(hahn_banach_witness(&Spectrum::power_sqrt(), &d), Err(Error::NotStep)));
    }

    #[test]
    fn pairing_examples() {
        let p = PairedSample::couple(&[(1.0, 0.5), (2.0, 0.5)], &[(2.0, 0.5), (0.0, 0.5)]).unwrap();
        assert_eq!(pairing(&p), 1.0);
    }

    proptest! {
        #[test]
        fn generalized_holder(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let sigma = random::step_spectrum(&mut rng, 12);
            let joint = random::joint(&mut rng, 24);
            let lhs = pairing(&joint).abs();
            let rhs = sigma_norm(&sigma, &joint.y_marginal()).unwrap() * dual_norm(&joint.z_marginal(), &sigma).unwrap().value;
            prop_assert!(lhs <= rhs + 1e-9);
        }

        #[test]
        fn comparison_with_lebesgue_norms(seed in any::<u64>(), q in 1.0..6.0f64) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let sigma = random::step_spectrum(&mut rng, 12);
            let z = random::step_quantile(&mut rng, 24);
            let dn = dual_norm(&z, &sigma).unwrap().value;
            prop_assert!(z.lp_norm(1.0).unwrap() <= dn + 1e-12);
            let inf = sigma.lq_norm(f64::INFINITY).unwrap();
            prop_assert!(z.lp_norm(f64::INFINITY).unwrap() <= dn * inf * (1.0 + 1e-12));
            let qn = sigma.lq_norm(q).unwrap();
            prop_assert!(z.lp_norm(q).unwrap() <= dn * qn * (1.0 + 1e-12) + 1e-12);
            // the pointwise ratio bound
            let abs = z.abs_value();
            let mut upper: f64 = 0.0;
            let mut pts: Vec<f64> = abs.breakpoints()[..abs.len()].to_vec();
            pts.extend_from_slice(&sigma.as_step().unwrap().breakpoints()[..sigma.as_step().unwrap().values().len()]);
            for u in pts {
                let s = sigma.density(u);
                let v = abs.quantile(u).unwrap();
                if s > 0.0 { upper = upper.max(v / s); } else if v > 0.0 { upper = f64::INFINITY; }
            }
            prop_assert!(dn <= upper * (1.0 + 1e-12));
        }

        #[test]
        fn gauge_is_a_norm(seed in any::<u64>(), t in -4.0..4.0f64) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let sigma = random::step_spectrum(&mut rng, 12);
            let joint = random::joint(&mut rng, 24);
            let n = |z: &StepQuantile| dual_norm(z, &sigma).unwrap().value;
            let (a, b) = (joint.y_marginal(), joint.z_marginal());
            prop_assert!(n(&joint.combine(|y, z| y + z)) <= n(&a) + n(&b) + 1e-9);
            prop_assert!((n(&a.scale(t)) - t.abs() * n(&a)).abs() <= 1e-9 * (1.0 + n(&a)));
            let bigger = a.map(|v| v * 1.5);
            prop_assert!(n(&a) <= n(&bigger) + 1e-12);
        }

        #[test]
        fn breakpoints_match_grid_oracle(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let sigma = random::lattice_step_spectrum(&mut rng, 10, 10_000);
            let z = random::lattice_quantile(&mut rng, 20, 10_000);
            let exact = dual_norm(&z, &sigma).unwrap().value;
            let abs = z.abs_value();
            let limit = abs.esssup() / sigma.sup_density();
            let grid = grid_sup(&z, &sigma, 10_000).max(limit);
            prop_assert!((exact - grid).abs() <= 1e-9, "{} vs {}", exact, grid);
        }
    }
}
