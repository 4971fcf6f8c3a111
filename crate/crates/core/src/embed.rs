//! Comparability constants `c = sup_α S2(α) / S1(α)`: the norm of the
//! identity `L_{σ1} → L_{σ2}`.

use serde::Serialize;

use crate::distmodel::StepQuantile;
use crate::error::{domain, Result};
use crate::kusuoka::SpectrumSet;
use crate::riskcore::avar_complement;
use crate::spectrum::Spectrum;
use crate::SEGMENT_TOL;

/// Geometric mesh `r = 2^{-k/8}` used for non-step spectra.
const MESH_PER_OCTAVE: i32 = 8;
/// Smallest mesh level for closed-form tails (exact near 0).
const CLOSED_MESH_OCTAVES: i32 = 200;
/// Smallest mesh level for general spectra, whose tails are evaluated at `1 - r`.
const GENERAL_MESH_OCTAVES: i32 = 40;

fn ratio(s1: &Spectrum, s2: &Spectrum, r: f64) -> f64 {
    s2.tail_complement(r) / s1.tail_complement(r)
}

fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut best = f(a).max(f(b));
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if b - a <= 1e-15 * b.abs().max(f64::MIN_POSITIVE) {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
        best = best.max(fc).max(fd);
    }
    best
}

/// Limit of `S2(α) / S1(α)` as `α → 1`.
fn limit_ratio(s1: &Spectrum, s2: &Spectrum, smallest: f64) -> f64 {
    let (top1, top2) = (s1.sup_density(), s2.sup_density());
    if s1.is_step() && s2.is_step() {
        return if top1 > 0.0 {
            top2 / top1
        } else if top2 > 0.0 {
            f64::INFINITY
        } else {
            0.0
        };
    }
    match (s1.tail_order(), s2.tail_order()) {
        (Some(g1), Some(g2)) if g1 > g2 => f64::INFINITY,
        (Some(g1), Some(g2)) if g1 < g2 => 0.0,
        // equal orders: both bounded gives the ratio of the top values;
        // otherwise the ratio at the finest mesh point stands in for the limit
        _ if top1.is_finite() && top2.is_finite() && top1 > 0.0 => top2 / top1,
        _ => ratio(s1, s2, smallest),
    }
}

/// `c = sup_{α ∈ [0,1)} S2(α) / S1(α) ≥ 1`, possibly `+∞`.
///
/// For two step spectra both tails are affine between the union of their
/// breakpoints and the ratio is monotone on each piece, so endpoints and the
/// limit `σ2(1⁻) / σ1(1⁻)` are exact. Otherwise the ratio is taken on a
/// geometric mesh and refined by golden-section search on each piece where
/// `S1` is affine (there `S2 / S1` is quasiconcave).
pub fn comparability_constant(s1: &Spectrum, s2: &Spectrum) -> Result<f64> {
    s1.ensure_valid()?;
    s2.ensure_valid()?;
    let mut points: Vec<f64> = vec![1.0];
    for s in [s1, s2] {
        if let Some(step) = s.as_step() {
            points.extend(step.complements().iter().copied().filter(|&r| r > 0.0));
        }
    }
    let both_step = s1.is_step() && s2.is_step();
    if !both_step {
        let general = matches!(s1, Spectrum::General(_)) || matches!(s2, Spectrum::General(_));
        let octaves = if general { GENERAL_MESH_OCTAVES } else { CLOSED_MESH_OCTAVES };
        points.extend((1..=octaves * MESH_PER_OCTAVE).map(|k| (-(k as f64) / MESH_PER_OCTAVE as f64).exp2()));
    }
    points.sort_by(|a, b| b.total_cmp(a));
    points.dedup();

    let smallest = *points.last().expect("mesh is nonempty");
    let limit = limit_ratio(s1, s2, smallest);
    if limit.is_infinite() {
        return Ok(f64::INFINITY);
    }
    let mut best = limit.max(1.0);
    for &r in &points {
        best = best.max(ratio(s1, s2, r));
    }
    if !both_step {
        let refine = s1.is_step() || !s2.is_step();
        if refine {
            for w in points.windows(2) {
                best = best.max(golden_max(|r| ratio(s1, s2, r), w[1], w[0]));
            }
        }
    }
    Ok(best)
}

/// `S2(pA) / S1(pA)`: the norm ratio of the indicator of an event of
/// probability `1 - pA`.
pub fn sharpness_witness(s1: &Spectrum, s2: &Spectrum, p_a: f64) -> Result<f64> {
    if !(p_a > 0.0 && p_a < 1.0) {
        return Err(domain("pA", p_a, "(0, 1)"));
    }
    Ok(ratio(s1, s2, 1.0 - p_a))
}

/// `max_{σ2 ∈ S2} min_{σ1 ∈ S1} c(σ1, σ2)`, the norm of `id: L_{S1} → L_{S2}`.
pub fn identity_norm(set1: &SpectrumSet, set2: &SpectrumSet) -> Result<f64> {
    let mut worst = 0.0_f64;
    for s2 in set2.members() {
        let mut best = f64::INFINITY;
        for s1 in set1.members() {
            best = best.min(comparability_constant(s1, s2)?);
        }
        worst = worst.max(best);
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AvarSandwich {
    /// `AVaR_{α1}(|Y|)`.
    pub lower: f64,
    /// `AVaR_{α2}(|Y|)`.
    pub middle: f64,
    /// `(1-α1)/(1-α2) · AVaR_{α1}(|Y|)`.
    pub upper: f64,
    /// `(1-α1)/(1-α2)`, the comparability constant of the two AVaR spectra.
    pub factor: f64,
    pub holds: bool,
}

/// `AVaR_{α1}(|Y|) ≤ AVaR_{α2}(|Y|) ≤ (1-α1)/(1-α2) AVaR_{α1}(|Y|)`.
pub fn avar_sandwich_check(alpha1: f64, alpha2: f64, d: &StepQuantile) -> Result<AvarSandwich> {
    if !(0.0..1.0).contains(&alpha1) {
        return Err(domain("alpha1", alpha1, "[0, 1)"));
    }
    if !(alpha1..1.0).contains(&alpha2) {
        return Err(domain("alpha2", alpha2, "[alpha1, 1)"));
    }
    let abs = d.abs_value();
    let lower = avar_complement(1.0 - alpha1, &abs);
    let middle = avar_complement(1.0 - alpha2, &abs);
    let factor = (1.0 - alpha1) / (1.0 - alpha2);
    let upper = factor * lower;
    let slack = SEGMENT_TOL * (1.0 + upper.abs());
    Ok(AvarSandwich {
        lower,
        middle,
        upper,
        factor,
        holds: lower <= middle + slack && middle <= upper + slack,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random;
    use crate::riskcore::sigma_norm;
    use crate::spectrum::GeneralSpectrum;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn avar(a: f64) -> Spectrum {
        Spectrum::avar(a).unwrap()
    }

    fn grid_sup(s1: &Spectrum, s2: &Spectrum, n: usize) -> f64 {
        (0..n).map(|i| ratio(s1, s2, 1.0 - i as f64 / n as f64)).fold(0.0, f64::max)
    }

    #[test]
    fn constant_examples() {
        for s in [Spectrum::uniform(), avar(0.3), Spectrum::power_sqrt()] {
            assert_eq!(comparability_constant(&s, &s).unwrap(), 1.0);
        }
        // (1 - 0.5) / (1 - 0.9) for the binary inputs rounds to 5 + 1 ulp
        let c = comparability_constant(&avar(0.5), &avar(0.9)).unwrap();
        assert_eq!(c, 0.5 / (1.0 - 0.9));
        assert!((c - 5.0).abs() <= 5.0 * f64::EPSILON);
        assert_eq!(comparability_constant(&Spectrum::uniform(), &avar(0.5)).unwrap(), 2.0);
        assert_eq!(comparability_constant(&avar(0.9), &avar(0.5)).unwrap(), 1.0);
    }

    #[test]
    fn unbounded_spectra_use_tail_orders() {
        let sqrt = Spectrum::power_sqrt();
        assert_eq!(comparability_constant(&avar(0.5), &sqrt).unwrap(), f64::INFINITY);
        // √r / min(r, 1/2)·2 peaks where the AVaR tail saturates
        let c = comparability_constant(&sqrt, &avar(0.5)).unwrap();
        assert!((c - 2f64.sqrt()).abs() < 1e-12, "{c}");
        let g = GeneralSpectrum::new("cube-root", |u: f64| (1.0 - u).powf(-2.0 / 3.0) / 3.0, |a: f64| (1.0 - a).cbrt(), 1.5)
            .with_tail_order(1.0 / 3.0);
        let g = Spectrum::General(g);
        assert_eq!(comparability_constant(&sqrt, &g).unwrap(), f64::INFINITY);
        assert_eq!(comparability_constant(&g, &sqrt).unwrap(), 1.0);
    }

    #[test]
    fn sharpness_examples() {
        assert_eq!(sharpness_witness(&avar(0.2), &avar(0.2), 0.6).unwrap(), 1.0);
        assert!((sharpness_witness(&avar(0.5), &avar(0.9), 0.95).unwrap() - 5.0).abs() < 1e-12);
        assert_eq!(sharpness_witness(&Spectrum::uniform(), &avar(0.5), 0.75).unwrap(), 2.0);
        assert!(sharpness_witness(&avar(0.5), &avar(0.9), 1.0).is_err());
    }

    #[test]
    fn identity_norm_examples() {
        let set = |v: Vec<Spectrum>| SpectrumSet::new(v).unwrap();
        assert_eq!(identity_norm(&set(vec![avar(0.3)]), &set(vec![avar(0.3)])).unwrap(), 1.0);
        assert_eq!(identity_norm(&set(vec![avar(0.5)]), &set(vec![avar(0.9)])).unwrap(), 0.5 / (1.0 - 0.9));
        assert_eq!(identity_norm(&set(vec![avar(0.5), avar(0.9)]), &set(vec![avar(0.9)])).unwrap(), 1.0);
    }

    #[test]
    fn sandwich_examples() {
        let four = StepQuantile::from_samples(&[1.0, 2.0, 3.0, 4.0], None).unwrap();
        let s = avar_sandwich_check(0.5, 0.75, &four).unwrap();
        assert_eq!((s.lower, s.middle, s.upper), (3.5, 4.0, 7.0));
        assert!(s.holds);
        let s = avar_sandwich_check(0.3, 0.3, &four).unwrap();
        assert_eq!(s.lower, s.middle);
        assert_eq!(s.factor, 1.0);
        let c = StepQuantile::constant(2.5);
        let s = avar_sandwich_check(0.0, 0.5, &c).unwrap();
        assert_eq!((s.lower, s.middle, s.upper), (2.5, 2.5, 5.0));
        assert!(avar_sandwich_check(0.6, 0.5, &c).is_err());
        for (a1, a2) in [(0.1, 0.4), (0.5, 0.9), (0.0, 0.99)] {
            let s = avar_sandwich_check(a1, a2, &four).unwrap();
            assert!((s.factor - comparability_constant(&avar(a1), &avar(a2)).unwrap()).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn embedding_inequality(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s1 = random::step_spectrum(&mut rng, 10);
            let s2 = random::step_spectrum(&mut rng, 10);
            let d = random::nonnegative_quantile(&mut rng, 24);
            let c = comparability_constant(&s1, &s2).unwrap();
            prop_assert!(c >= 1.0);
            prop_assert!(sigma_norm(&s2, &d).unwrap() <= c * sigma_norm(&s1, &d).unwrap() + 1e-9);
        }

        #[test]
        fn constants_compose(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s: Vec<Spectrum> = (0..3).map(|_| random::step_spectrum(&mut rng, 8)).collect();
            let c12 = comparability_constant(&s[0], &s[1]).unwrap();
            let c23 = comparability_constant(&s[1], &s[2]).unwrap();
            let c13 = comparability_constant(&s[0], &s[2]).unwrap();
            prop_assert!(c12 * c23 >= c13 * (1.0 - 1e-12));
        }

        #[test]
        fn breakpoints_match_grid_oracle(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s1 = random::lattice_step_spectrum(&mut rng, 10, 10_000);
            let s2 = random::lattice_step_spectrum(&mut rng, 10, 10_000);
            let exact = comparability_constant(&s1, &s2).unwrap();
            let grid = grid_sup(&s1, &s2, 10_000).max(s2.sup_density() / s1.sup_density());
            prop_assert!((exact - grid).abs() <= 1e-9, "{} vs {}", exact, grid);
        }
    }
}
