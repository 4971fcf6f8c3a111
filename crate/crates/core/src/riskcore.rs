//! Spectral risk `ρ_σ(Y) = ∫_0^1 σ(u) F_Y^{-1}(u) du`, AVaR, the associated
//! norm `‖Y‖_σ = ρ_σ(|Y|)` and related evaluations.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::distmodel::{comonotone_pair, for_each_cell, PairedSample, StepQuantile};
use crate::error::{domain, Result};
use crate::spectrum::Spectrum;
use crate::SEGMENT_TOL;

/// Number of shuffled couplings tried by [`representation_sup_check`].
pub const RANDOM_COUPLINGS: usize = 64;

/// How a [`RiskReport`] value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EvalMethod {
    QuantileIntegral,
    CdfTailIntegral,
    ComonotoneSup,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RiskReport {
    pub value: f64,
    pub method: EvalMethod,
    /// Absolute discrepancy against an independent evaluation.
    pub residual: f64,
}

fn finite_or_inf(x: f64) -> f64 {
    if x.is_nan() {
        f64::INFINITY
    } else {
        x
    }
}

/// `ρ_σ(Y)`. Exact refinement sum for step spectra; otherwise each quantile
/// segment is integrated in closed form against the tail weight. Overflow
/// of an unbounded spectrum against large values is reported as `+∞`.
pub fn spectral_risk(sigma: &Spectrum, d: &StepQuantile) -> Result<f64> {
    sigma.ensure_valid()?;
    Ok(spectral_risk_unchecked(sigma, d))
}

pub(crate) fn spectral_risk_unchecked(sigma: &Spectrum, d: &StepQuantile) -> f64 {
    let mut acc = 0.0;
    if sigma.is_step() {
        for_each_cell(d, sigma, |y, z, w| acc += y * z * w);
    } else {
        let comps = d.complements();
        for (k, &v) in d.values().iter().enumerate() {
            let weight = sigma.tail_complement(comps[k]) - sigma.tail_complement(comps[k + 1]);
            if weight != 0.0 {
                acc += v * weight;
            }
        }
    }
    finite_or_inf(acc)
}

/// `ρ_σ(Y)` in layer form: `v_1 + Σ_k (v_{k+1} - v_k) S(F(v_k))`.
pub fn spectral_risk_via_cdf(sigma: &Spectrum, d: &StepQuantile) -> Result<f64> {
    sigma.ensure_valid()?;
    Ok(via_cdf_unchecked(sigma, d))
}

fn via_cdf_unchecked(sigma: &Spectrum, d: &StepQuantile) -> f64 {
    let values = d.values();
    let comps = d.complements();
    let mut acc = values[0];
    for k in 0..values.len() - 1 {
        acc += (values[k + 1] - values[k]) * sigma.tail_complement(comps[k + 1]);
    }
    finite_or_inf(acc)
}

/// `AVaR_α(Y) = (1-α)^{-1} ∫_α^1 F^{-1}`; `α = 1` gives the essential supremum.
pub fn avar(alpha: f64, d: &StepQuantile) -> Result<f64> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(domain("alpha", alpha, "[0, 1]"));
    }
    Ok(avar_complement(1.0 - alpha, d))
}

/// AVaR at level `1 - r`, with `r = 0` meaning the essential supremum.
pub(crate) fn avar_complement(r: f64, d: &StepQuantile) -> f64 {
    if r <= 0.0 {
        d.esssup()
    } else {
        d.upper_integral_complement(r) / r
    }
}

/// `‖Y‖_σ = ρ_σ(|Y|)`.
pub fn sigma_norm(sigma: &Spectrum, d: &StepQuantile) -> Result<f64> {
    spectral_risk(sigma, &d.abs_value())
}

/// `‖Y‖_σ = ∫_0^∞ S(F_{|Y|}(y)) dy`, summed over the gaps between the
/// distinct values of `|Y|`.
pub fn sigma_norm_via_cdf(sigma: &Spectrum, d: &StepQuantile) -> Result<f64> {
    let abs = d.abs_value();
    sigma.ensure_valid()?;
    Ok(via_cdf_unchecked(sigma, &abs))
}

/// Evaluates `ρ_σ(Y)` (or `‖Y‖_σ` when `norm` is set) by `method` and
/// reports the discrepancy against the other exact method.
pub fn evaluate(sigma: &Spectrum, d: &StepQuantile, method: EvalMethod, norm: bool) -> Result<RiskReport> {
    sigma.ensure_valid()?;
    let target = if norm { d.abs_value() } else { d.clone() };
    let quantile = spectral_risk_unchecked(sigma, &target);
    let cdf = via_cdf_unchecked(sigma, &target);
    let (value, other) = match method {
        EvalMethod::QuantileIntegral => (quantile, cdf),
        EvalMethod::CdfTailIntegral => (cdf, quantile),
        EvalMethod::ComonotoneSup => (comonotone_pair(&target, sigma)?.pairing(), quantile),
    };
    let residual = if value == other { 0.0 } else { (value - other).abs() };
    Ok(RiskReport {
        value,
        method,
        residual,
    })
}

/// Outcome of [`representation_sup_check`].
#[derive(Debug, Clone, Serialize)]
pub struct RepresentationCheck {
    /// Comonotone value, with residual against [`spectral_risk`].
    pub report: RiskReport,
    /// Largest `E[Y σ(U)]` over the shuffled couplings.
    pub max_shuffled: f64,
    /// Value of the antitone coupling.
    pub antitone: f64,
    /// Every shuffled value is at most the comonotone value plus `1e-12`.
    pub holds: bool,
}

/// Compares `E[Y σ(U)]` under the comonotone coupling with 64 seeded random
/// couplings and the antitone coupling of the same marginals.
pub fn representation_sup_check(sigma: &Spectrum, d: &StepQuantile, seed: u64) -> Result<RepresentationCheck> {
    let pair = comonotone_pair(d, sigma)?;
    let comonotone = pair.pairing();
    let direct = spectral_risk_unchecked(sigma, d);
    let ys: Vec<(f64, f64)> = d.atoms().collect();
    let zs: Vec<(f64, f64)> = pair.rows().iter().map(|r| (r.z, r.w)).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_shuffled = f64::NEG_INFINITY;
    for _ in 0..RANDOM_COUPLINGS {
        let mut ys = ys.clone();
        let mut zs = zs.clone();
        ys.shuffle(&mut rng);
        zs.shuffle(&mut rng);
        max_shuffled = max_shuffled.max(PairedSample::couple(&ys, &zs)?.pairing());
    }
    let reversed: Vec<(f64, f64)> = zs.iter().rev().copied().collect();
    let antitone = PairedSample::couple(&ys, &reversed)?.pairing();
    let bound = comonotone + SEGMENT_TOL;
    Ok(RepresentationCheck {
        report: RiskReport {
            value: comonotone,
            method: EvalMethod::ComonotoneSup,
            residual: (comonotone - direct).abs(),
        },
        max_shuffled,
        antitone,
        holds: max_shuffled <= bound && antitone <= bound,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Semideviation {
    /// `E[Y] + λ ‖(Y - E[Y])_+‖_p`.
    pub value: f64,
    /// `(1 + λ) ‖Y‖_p`, an upper bound for nonnegative `Y`.
    pub bound: f64,
}

/// The upper `p`-semideviation risk measure.
pub fn semideviation(d: &StepQuantile, p: f64, lambda: f64) -> Result<Semideviation> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(domain("p", p, "[1, ∞)"));
    }
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(domain("lambda", lambda, "(0, 1]"));
    }
    let mean = d.mean();
    let upside = d.map(|v| (v - mean).max(0.0));
    Ok(Semideviation {
        value: mean + lambda * upside.lp_norm(p)?,
        bound: (1.0 + lambda) * d.lp_norm(p)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random;
    use proptest::prelude::*;

    fn four() -> StepQuantile {
        StepQuantile::from_samples(&[1.0, 2.0, 3.0, 4.0], None).unwrap()
    }

    fn avar_half() -> Spectrum {
        Spectrum::avar(0.5).unwrap()
    }

    #[test]
    fn spectral_risk_examples() {
        let d = four();
        assert_eq!(spectral_risk(&Spectrum::uniform(), &d).unwrap(), 2.5);
        assert_eq!(spectral_risk(&avar_half(), &d).unwrap(), 3.5);
        let bad = Spectrum::step(vec![0.0, 1.0], vec![-1.0]).unwrap();
        assert!(spectral_risk(&bad, &d).is_err());
    }

    #[test]
    fn power_sqrt_on_uniform_grid_tends_to_two_thirds() {
        let mut prev = f64::INFINITY;
        for k in [4, 8, 12, 16] {
            let n = 1usize << k;
            let values: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
            let d = StepQuantile::from_samples(&values, None).unwrap();
            let err = (spectral_risk(&Spectrum::power_sqrt(), &d).unwrap() - 2.0 / 3.0).abs();
            assert!(err < prev);
            prev = err;
        }
        assert!(prev < 1e-5);
    }

    #[test]
    fn avar_examples() {
        let d = four();
        assert_eq!(avar(0.0, &d).unwrap(), 2.5);
        assert_eq!(avar(0.5, &d).unwrap(), 3.5);
        assert_eq!(avar(1.0, &d).unwrap(), 4.0);
        assert!(avar(1.5, &d).is_err());
    }

    #[test]
    fn sigma_norm_examples() {
        let d = StepQuantile::from_samples(&[-2.0, 1.0], None).unwrap();
        assert_eq!(sigma_norm(&avar_half(), &d).unwrap(), 2.0);
        assert_eq!(sigma_norm_via_cdf(&avar_half(), &d).unwrap(), 2.0);
        assert_eq!(sigma_norm(&Spectrum::uniform(), &d).unwrap(), 1.5);
        let zero = StepQuantile::constant(0.0);
        assert_eq!(sigma_norm(&Spectrum::power_sqrt(), &zero).unwrap(), 0.0);
        let c = StepQuantile::constant(3.25);
        assert_eq!(sigma_norm_via_cdf(&Spectrum::power_sqrt(), &c).unwrap(), 3.25);
    }

    #[test]
    fn representation_examples() {
        let d = StepQuantile::from_samples(&[1.0, 2.0], None).unwrap();
        let check = representation_sup_check(&avar_half(), &d, 1).unwrap();
        assert_eq!(check.report.value, 2.0);
        assert_eq!(check.antitone, 1.0);
        assert!(check.holds);

        let check = representation_sup_check(&Spectrum::uniform(), &four(), 2).unwrap();
        assert!((check.max_shuffled - 2.5).abs() < 1e-12);

        let sigma = Spectrum::step(vec![0.0, 0.3, 0.8, 1.0], vec![0.2, 1.0, 2.2]).unwrap();
        let check = representation_sup_check(&sigma, &four(), 3).unwrap();
        assert!(check.report.residual <= 1e-12);
        assert!(check.holds);
    }

    #[test]
    fn semideviation_examples() {
        let c = StepQuantile::constant(4.0);
        assert_eq!(semideviation(&c, 2.0, 0.5).unwrap().value, 4.0);
        let d = StepQuantile::from_samples(&[0.0, 2.0], None).unwrap();
        assert_eq!(semideviation(&d, 1.0, 1.0).unwrap().value, 1.5);
        assert!(semideviation(&d, 0.5, 1.0).is_err());
        assert!(semideviation(&d, 1.0, 0.0).is_err());
    }

    #[test]
    fn evaluate_reports_cross_method_residual() {
        let r = evaluate(&avar_half(), &four(), EvalMethod::CdfTailIntegral, false).unwrap();
        assert_eq!(r.value, 3.5);
        assert!(r.residual <= 1e-12);
        let r = evaluate(&avar_half(), &four(), EvalMethod::ComonotoneSup, true).unwrap();
        assert_eq!(r.value, 3.5);
    }

    proptest! {
        #[test]
        fn axioms_hold(seed in any::<u64>(), c in -5.0..5.0f64, lambda in 0.01..10.0f64) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let sigma = random::step_spectrum(&mut rng, 12);
            let d = random::step_quantile(&mut rng, 24);
            let base = spectral_risk(&sigma, &d).unwrap();
            let shifted = spectral_risk(&sigma, &d.shift(c)).unwrap();
            prop_assert!((shifted - base - c).abs() <= 1e-12 * (1.0 + base.abs() + c.abs()) * 10.0);
            let scaled = spectral_risk(&sigma, &d.scale(lambda)).unwrap();
            prop_assert!((scaled - lambda * base).abs() <= 1e-11 * (1.0 + lambda * base.abs()));
            let up = d.map(|v| v + v.abs() * 0.1 + 0.01);
            prop_assert!(spectral_risk(&sigma, &up).unwrap() >= base - 1e-12);
        }

        #[test]
        fn norm_methods_agree(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let sigma = random::step_spectrum(&mut rng, 12);
            let d = random::step_quantile(&mut rng, 24);
            let a = sigma_norm(&sigma, &d).unwrap();
            let b = sigma_norm_via_cdf(&sigma, &d).unwrap();
            prop_assert!((a - b).abs() <= 1e-9);
            prop_assert!(d.lp_norm(1.0).unwrap() <= a + 1e-12);
        }

        #[test]
        fn norm_is_subadditive_and_lipschitz(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let sigma = random::step_spectrum(&mut rng, 12);
            let joint = random::joint(&mut rng, 24);
            let y1 = joint.y_marginal();
            let y2 = joint.z_marginal();
            let sum = joint.combine(|a, b| a + b);
            let diff = joint.combine(|a, b| b - a);
            let n = |d: &StepQuantile| sigma_norm(&sigma, d).unwrap();
            prop_assert!(n(&sum) <= n(&y1) + n(&y2) + 1e-9);
            let gap = (spectral_risk(&sigma, &y2).unwrap() - spectral_risk(&sigma, &y1).unwrap()).abs();
            prop_assert!(gap <= n(&diff) + 1e-9);
        }
    }
}
