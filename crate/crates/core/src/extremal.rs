//! Constructions separating `L_σ` from `L^p` and `L^∞`, the divergence of
//! truncations of a variable with infinite mean, and step approximation of
//! a quantile in `‖·‖_σ`.
//!
//! Band radii are computed in complement coordinates `r = 1 - t`, so the
//! deep bands near `u = 1` (radii far below machine epsilon) stay exact.

use serde::Serialize;

use crate::distmodel::StepQuantile;
use crate::error::{domain, Error, Result};
use crate::riskcore::{sigma_norm, spectral_risk_unchecked};
use crate::spectrum::Spectrum;

/// Default number of cells per band when `σ` is not a step function.
pub const CELLS_PER_BAND: usize = 32;
/// Accuracy required of each band radius in [`lp_escape`].
pub const ROOT_TOL: f64 = 1e-10;
/// Largest number of doublings tried by [`l1_divergence_demo`].
pub const MAX_DOUBLINGS: usize = 1000;

/// `Σ_{j > n} j^{-s}` for `s > 1`: direct summation up to `max(n + 1, 32)`
/// and an Euler–Maclaurin tail beyond.
pub fn zeta_tail(s: f64, n: u64) -> f64 {
    assert!(s > 1.0, "zeta needs s > 1, got {s}");
    let start = (n + 1).max(32);
    let mut head = 0.0;
    for j in (n + 1..start).rev() {
        head += (j as f64).powf(-s);
    }
    let x = start as f64;
    let xs = x.powf(-s);
    let tail = x * xs / (s - 1.0) + 0.5 * xs + s * xs / (12.0 * x)
        - s * (s + 1.0) * (s + 2.0) * xs / (720.0 * x.powi(3))
        + s * (s + 1.0) * (s + 2.0) * (s + 3.0) * (s + 4.0) * xs / (30240.0 * x.powi(5));
    head + tail
}

/// Riemann's `ζ(s)` for `s > 1`.
pub fn zeta(s: f64) -> f64 {
    zeta_tail(s, 0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EscapeBand {
    pub n: u64,
    /// Complement radius `1 - t_{n-1}`.
    pub r_hi: f64,
    /// Complement radius `1 - t_n`.
    pub r_lo: f64,
    /// `∫_{t_{n-1}}^{t_n} σ^q`.
    pub mass: f64,
}

/// The variable `Y = n σ(U)^{q-1}` on band `n`, which has finite `‖·‖_σ`
/// but infinite `p`-th moment.
#[derive(Debug, Clone, Serialize)]
pub struct LpEscape {
    #[serde(skip)]
    spectrum: Spectrum,
    pub q: f64,
    pub p: f64,
    /// `‖σ‖_q^q`.
    pub norm_pow: f64,
    /// `‖σ‖_q^q / ζ(p+1)`.
    pub scale: f64,
    /// `‖σ‖_q^q ζ(p) / ζ(p+1)`, the risk of the untruncated variable.
    pub limit_risk: f64,
    pub bands: Vec<EscapeBand>,
    /// `Σ_n n · mass_n = ∫_0^{t_N} σ Y`.
    pub predicted_risk: f64,
    /// `Σ_n n^p · mass_n = ∫_0^{t_N} Y^p`.
    pub lp_partial_pow: f64,
}

/// Builds the first `depth` bands for `σ ∈ L^q`, `1 < q < ∞`.
pub fn lp_escape(sigma: &Spectrum, q: f64, depth: u64) -> Result<LpEscape> {
    if !(q > 1.0 && q.is_finite()) {
        return Err(domain("q", q, "(1, ∞)"));
    }
    if depth == 0 {
        return Err(domain("depth", 0.0, "depth ≥ 1"));
    }
    sigma.ensure_valid()?;
    let norm_pow = sigma.power_tail_integral(q, 1.0);
    if !norm_pow.is_finite() {
        return Err(domain("q", q, "exponents with ‖σ‖_q < ∞"));
    }
    let p = q / (q - 1.0);
    let scale = norm_pow / zeta(p + 1.0);
    let mut bands = Vec::with_capacity(depth as usize);
    let (mut r_hi, mut g_hi) = (1.0, norm_pow);
    let (mut predicted_risk, mut lp_partial_pow) = (0.0, 0.0);
    for n in 1..=depth {
        let target = scale * zeta_tail(p + 1.0, n);
        let r_lo = sigma.power_tail_inverse(q, target);
        let g_lo = sigma.power_tail_integral(q, r_lo);
        if (g_lo - target).abs() >= ROOT_TOL {
            return Err(Error::RootFinding(format!(
                "band {n}: ∫σ^q = {g_lo} at r = {r_lo}, target {target}"
            )));
        }
        if !(r_lo > 0.0 && r_lo < r_hi) {
            return Err(Error::Stalled(format!("band {n} radius {r_lo} is not below {r_hi}")));
        }
        let mass = g_hi - g_lo;
        let nf = n as f64;
        predicted_risk += nf * mass;
        lp_partial_pow += nf.powf(p) * mass;
        bands.push(EscapeBand { n, r_hi, r_lo, mass });
        r_hi = r_lo;
        g_hi = g_lo;
    }
    Ok(LpEscape {
        spectrum: sigma.clone(),
        q,
        p,
        norm_pow,
        scale,
        limit_risk: scale * zeta(p),
        bands,
        predicted_risk,
        lp_partial_pow,
    })
}

impl LpEscape {
    /// The truncated variable as a step quantile, with [`CELLS_PER_BAND`]
    /// cells per band for non-step spectra.
    pub fn truncation(&self) -> StepQuantile {
        self.truncation_with(CELLS_PER_BAND)
    }

    /// The truncation with `cells` geometric cells per band (step spectra
    /// are split at their own breakpoints instead). Each cell carries the
    /// infimum of `Y` on it, and the mass above `t_N` is placed at 0, so the
    /// result is pointwise below the untruncated variable.
    pub fn truncation_with(&self, cells: usize) -> StepQuantile {
        let sigma = &self.spectrum;
        let cells = cells.max(1);
        let step_points: Vec<f64> = sigma
            .as_step()
            .map(|s| s.complements().to_vec())
            .unwrap_or_default();
        let mut atoms = Vec::with_capacity(self.bands.len() * cells + 1);
        for band in &self.bands {
            let mut points = vec![band.r_hi];
            if sigma.is_step() {
                points.extend(step_points.iter().copied().filter(|&c| c < band.r_hi && c > band.r_lo));
            } else {
                let ratio = band.r_lo / band.r_hi;
                points.extend((1..cells).map(|i| band.r_hi * ratio.powf(i as f64 / cells as f64)));
            }
            points.push(band.r_lo);
            for w in points.windows(2) {
                let density = sigma.density_complement(w[0]);
                let value = band.n as f64 * density.powf(self.q - 1.0);
                atoms.push((value, w[0] - w[1]));
            }
        }
        let last = self.bands.last().expect("depth ≥ 1").r_lo;
        atoms.push((0.0, last));
        StepQuantile::from_atoms(atoms)
    }

    /// `ρ_σ` of [`LpEscape::truncation`].
    pub fn truncation_risk(&self) -> f64 {
        spectral_risk_unchecked(&self.spectrum, &self.truncation())
    }
}

/// The variable `Y = n` on `[t_{n-1}, t_n)` with `S(t_n) = 2^{-n}`, which is
/// unbounded in `n` but has `ρ_σ(Y) ≤ Σ n 2^{1-n} = 4`.
#[derive(Debug, Clone, Serialize)]
pub struct LinfEscape {
    /// Complement radii `1 - t_n` for `n = 0..=N`.
    pub radii: Vec<f64>,
    #[serde(skip)]
    pub variable: StepQuantile,
    pub risk: f64,
    /// `Σ_{n ≤ N} n 2^{1-n}`.
    pub bound: f64,
    pub esssup: f64,
}

pub fn linf_escape(sigma: &Spectrum, depth: u32) -> Result<LinfEscape> {
    if depth == 0 {
        return Err(domain("depth", 0.0, "depth ≥ 1"));
    }
    sigma.ensure_valid()?;
    let mut radii = vec![1.0];
    let mut atoms = Vec::with_capacity(depth as usize + 1);
    for n in 1..=depth {
        let r = sigma.tail_inverse_complement((-(n as f64)).exp2());
        let prev = radii[n as usize - 1];
        if !(r > 0.0 && r < prev) {
            return Err(Error::Stalled(format!("radius {r} at band {n} does not shrink below {prev}")));
        }
        atoms.push((n as f64, prev - r));
        radii.push(r);
    }
    atoms.push((0.0, radii[depth as usize]));
    let variable = StepQuantile::from_atoms(atoms);
    let bound = (1..=depth).map(|n| n as f64 * (1.0 - n as f64).exp2()).sum();
    Ok(LinfEscape {
        risk: spectral_risk_unchecked(sigma, &variable),
        esssup: variable.esssup(),
        radii,
        variable,
        bound,
    })
}

/// A variable that can be truncated at any level.
pub trait Truncatable {
    /// The law of `min(level, |Y|)`.
    fn truncate(&self, level: f64) -> StepQuantile;
    /// `esssup |Y|`, possibly infinite.
    fn esssup(&self) -> f64;
}

impl Truncatable for StepQuantile {
    fn truncate(&self, level: f64) -> StepQuantile {
        self.abs_value().map(|v| v.min(level))
    }

    fn esssup(&self) -> f64 {
        self.abs_value().esssup()
    }
}

/// Dyadic discretization of `F^{-1}(u) = 1/(1-u)`: the value `2^k` on
/// `[1 - 2^{-k}, 1 - 2^{-k-1})`. Its mean is infinite.
#[derive(Debug, Clone, Copy, Default)]
pub struct DyadicPareto;

impl Truncatable for DyadicPareto {
    fn truncate(&self, level: f64) -> StepQuantile {
        let mut atoms = Vec::new();
        let mut k = 0;
        loop {
            let value = (k as f64).exp2();
            if value >= level || k >= 1070 {
                atoms.push((level.min(value), (-(k as f64)).exp2()));
                break;
            }
            atoms.push((value, (-(k as f64) - 1.0).exp2()));
            k += 1;
        }
        StepQuantile::from_atoms(atoms)
    }

    fn esssup(&self) -> f64 {
        f64::INFINITY
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DivergenceRow {
    pub level: f64,
    pub l1: f64,
    pub sigma_norm: f64,
    /// `‖Y_n‖_σ ≥ ‖Y_n‖_1`.
    pub chebyshev: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DivergenceDemo {
    pub target: f64,
    pub rows: Vec<DivergenceRow>,
    /// Some row has `‖Y_n‖_1 > target`.
    pub exceeded: bool,
    /// The truncations stopped changing: the variable is bounded.
    pub vacuous: bool,
}

/// Evaluates `Y_n = min(n, |Y|)` at levels `n = 1, 2, 4, …` until
/// `‖Y_n‖_1` exceeds `target` or the truncation level passes `esssup |Y|`.
pub fn l1_divergence_demo(heavy: &dyn Truncatable, sigma: &Spectrum, target: f64) -> Result<DivergenceDemo> {
    if !target.is_finite() {
        return Err(domain("target", target, "finite reals"));
    }
    sigma.ensure_valid()?;
    let top = heavy.esssup();
    let mut rows = Vec::new();
    let (mut exceeded, mut vacuous) = (false, false);
    for j in 0..MAX_DOUBLINGS {
        let level = (j as f64).exp2();
        let y = heavy.truncate(level);
        let l1 = y.lp_norm(1.0)?;
        let norm = sigma_norm(sigma, &y)?;
        rows.push(DivergenceRow {
            level,
            l1,
            sigma_norm: norm,
            chebyshev: norm >= l1 - 1e-12 * l1.max(1.0),
        });
        if l1 > target {
            exceeded = true;
            break;
        }
        if level >= top {
            vacuous = true;
            break;
        }
    }
    Ok(DivergenceDemo {
        target,
        rows,
        exceeded,
        vacuous,
    })
}

/// A step approximation `s(U)` of `Y = F^{-1}(U)` in `‖·‖_σ`.
#[derive(Debug, Clone, Serialize)]
pub struct DensityApprox {
    #[serde(skip)]
    pub step: StepQuantile,
    /// `‖Y - s(U)‖_σ` under the comonotone coupling.
    pub error: f64,
    /// Number of distinct values of `s`.
    pub steps: usize,
    /// Values below the lower clip level were raised to it.
    pub lower_clip: f64,
    /// Values above the upper clip level were lowered to it.
    pub upper_clip: f64,
}

fn residual_norm(sigma: &Spectrum, atoms: &[(f64, f64)], s: impl Fn(usize, f64) -> f64) -> f64 {
    let residual = StepQuantile::from_atoms(atoms.iter().enumerate().map(|(j, &(v, m))| ((v - s(j, v)).abs(), m)));
    spectral_risk_unchecked(sigma, &residual)
}

/// Clips `Y` below and above so that each clipped tail contributes less
/// than `ε/3` to `‖·‖_σ`, then merges neighbouring values whose spread is
/// below `ε/3` into one step at their midpoint.
pub fn step_density_approx(sigma: &Spectrum, d: &StepQuantile, eps: f64) -> Result<DensityApprox> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(domain("eps", eps, "(0, ∞)"));
    }
    sigma.ensure_valid()?;
    let atoms: Vec<(f64, f64)> = d.atoms().collect();
    let values: Vec<f64> = atoms.iter().map(|a| a.0).collect();
    let m = atoms.len();
    let third = eps / 3.0;

    // largest i0 whose lower clip costs less than ε/3 (the cost grows with i0)
    let lower_cost = |i0: usize| residual_norm(sigma, &atoms, |_, v| v.max(values[i0]));
    let (mut lo, mut hi) = (0, m - 1);
    while lo < hi {
        let mid = (lo + hi).div_ceil(2);
        if lower_cost(mid) < third {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    let i0 = lo;
    // smallest i1 ≥ i0 whose upper clip costs less than ε/3
    let upper_cost = |i1: usize| residual_norm(sigma, &atoms, |_, v| v.min(values[i1]));
    let (mut lo, mut hi) = (i0, m - 1);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if upper_cost(mid) < third {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    let i1 = lo;

    let mut representative = vec![0.0; m];
    let mut start = i0;
    let mut steps = 0;
    while start <= i1 {
        let mut end = start;
        while end < i1 && values[end + 1] - values[start] < third {
            end += 1;
        }
        let mid = 0.5 * (values[start] + values[end]);
        representative[start..=end].iter_mut().for_each(|r| *r = mid);
        steps += 1;
        start = end + 1;
    }
    let s_of = |j: usize| representative[j.clamp(i0, i1)];
    let error = residual_norm(sigma, &atoms, |j, _| s_of(j));
    if error.is_nan() || error >= eps {
        return Err(Error::Stalled(format!("step approximation error {error} is not below {eps}")));
    }
    let step = StepQuantile::from_atoms(atoms.iter().enumerate().map(|(j, &(_, mass))| (s_of(j), mass)));
    Ok(DensityApprox {
        step,
        error,
        steps,
        lower_clip: values[i0],
        upper_clip: values[i1],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random;
    use crate::riskcore::spectral_risk;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zeta_values() {
        assert!((zeta(2.0) - std::f64::consts::PI.powi(2) / 6.0).abs() < 1e-13);
        assert!((zeta(4.0) - std::f64::consts::PI.powi(4) / 90.0).abs() < 1e-13);
        assert!((zeta(3.0) - 1.202_056_903_159_594_2).abs() < 1e-13);
        let direct: f64 = (1..=5u32).map(|j| (j as f64).powi(-3)).sum();
        assert!((zeta_tail(3.0, 5) - (zeta(3.0) - direct)).abs() < 1e-14);
    }

    #[test]
    fn lp_escape_single_band() {
        let sigma = Spectrum::power_sqrt();
        let e = lp_escape(&sigma, 1.5, 1).unwrap();
        assert!((e.norm_pow - 2f64.sqrt()).abs() < 1e-14);
        assert!((e.lp_partial_pow - e.scale).abs() < 1e-12);
        assert!((e.predicted_risk - e.scale).abs() < 1e-12);
        let step = Spectrum::step(vec![0.0, 0.5, 1.0], vec![0.5, 1.5]).unwrap();
        let e = lp_escape(&step, 3.0, 1).unwrap();
        assert!((e.lp_partial_pow - e.scale).abs() < 1e-12);
    }

    #[test]
    fn lp_escape_harmonic_growth() {
        let sigma = Spectrum::power_sqrt();
        let (n, m) = (40, 80);
        let a = lp_escape(&sigma, 1.5, n).unwrap();
        let b = lp_escape(&sigma, 1.5, m).unwrap();
        let harmonic: f64 = (n + 1..=m).map(|j| 1.0 / j as f64).sum();
        assert!((b.lp_partial_pow - a.lp_partial_pow - a.scale * harmonic).abs() < 1e-9);
        assert!(b.lp_partial_pow - a.lp_partial_pow >= a.scale * 0.5);
    }

    #[test]
    fn lp_escape_risk_approaches_limit() {
        let sigma = Spectrum::power_sqrt();
        let expected = 2f64.sqrt() * zeta(3.0) / zeta(4.0);
        let e = lp_escape(&sigma, 1.5, 1000).unwrap();
        assert!((e.limit_risk - expected).abs() < 1e-12);
        assert!(e.predicted_risk < expected && expected - e.predicted_risk < 1e-5);
        let t = e.truncation_risk();
        assert!(t <= expected + 1e-6, "{t}");
        // the truncation is a rearranged, cell-wise lower version of Y
        assert!(t >= 0.95 * e.predicted_risk, "{t} vs {}", e.predicted_risk);
    }

    #[test]
    fn lp_escape_rejects_bad_exponents() {
        assert!(lp_escape(&Spectrum::power_sqrt(), 1.0, 3).is_err());
        assert!(lp_escape(&Spectrum::power_sqrt(), 2.0, 3).is_err());
        assert!(lp_escape(&Spectrum::power_sqrt(), f64::INFINITY, 3).is_err());
        assert!(lp_escape(&Spectrum::power_sqrt(), 1.5, 0).is_err());
    }

    #[test]
    fn step_truncation_is_exact() {
        let sigma = Spectrum::step(vec![0.0, 0.5, 0.9, 1.0], vec![0.2, 1.0, 5.0]).unwrap();
        let e = lp_escape(&sigma, 2.0, 6).unwrap();
        let y = e.truncation();
        // spectral risk after moving the zero mass to the bottom is at least the band sum
        assert!(spectral_risk(&sigma, &y).unwrap() >= e.predicted_risk - 1e-12);
        let pow: f64 = y.atoms().map(|(v, m)| v.powf(e.p) * m).sum();
        assert!((pow - e.lp_partial_pow).abs() < 1e-12 * e.lp_partial_pow);
    }

    #[test]
    fn linf_escape_examples() {
        let sigma = Spectrum::power_sqrt();
        let one = linf_escape(&sigma, 1).unwrap();
        assert_eq!(one.esssup, 1.0);
        assert!(one.risk <= 2.0);
        for n in [5, 20, 30] {
            let e = linf_escape(&sigma, n).unwrap();
            assert!(e.risk <= e.bound && e.bound <= 4.0);
            assert_eq!(e.esssup, n as f64);
        }
        let step = Spectrum::step(vec![0.0, 0.5, 1.0], vec![0.5, 1.5]).unwrap();
        let e = linf_escape(&step, 30).unwrap();
        assert_eq!(e.esssup, 30.0);
        assert!(e.risk <= 4.0);
        assert!(linf_escape(&sigma, 0).is_err());
    }

    #[test]
    fn divergence_examples() {
        let demo = l1_divergence_demo(&DyadicPareto, &Spectrum::uniform(), 10.0).unwrap();
        assert!(demo.exceeded && !demo.vacuous);
        assert_eq!(demo.rows.last().unwrap().l1, 10.5);
        assert!(demo.rows.windows(2).all(|w| w[1].l1 > w[0].l1));

        let demo = l1_divergence_demo(&DyadicPareto, &Spectrum::power_sqrt(), 10.0).unwrap();
        assert!(demo.exceeded);
        assert!(demo.rows.iter().all(|r| r.chebyshev && r.sigma_norm >= r.l1));

        let bounded = StepQuantile::from_samples(&[1.0, -3.0, 2.0], None).unwrap();
        let demo = l1_divergence_demo(&bounded, &Spectrum::power_sqrt(), 10.0).unwrap();
        assert!(demo.vacuous && !demo.exceeded);
    }

    #[test]
    fn density_examples() {
        let four = StepQuantile::from_samples(&[1.0, 2.0, 3.0, 4.0], None).unwrap();
        let a = step_density_approx(&Spectrum::avar(0.5).unwrap(), &four, 0.01).unwrap();
        assert!(a.error < 0.01);
        assert_eq!(a.error, 0.0);
        assert_eq!(a.step, four);

        let a = step_density_approx(&Spectrum::uniform(), &four, 1e-6).unwrap();
        assert_eq!(a.error, 0.0);

        let n = 1 << 10;
        let grid: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        let uniform = StepQuantile::from_samples(&grid, None).unwrap();
        let sigma = Spectrum::step(vec![0.0, 0.3, 0.8, 1.0], vec![0.2, 1.0, 2.2]).unwrap();
        let a = step_density_approx(&sigma, &uniform, 0.1).unwrap();
        assert!(a.error < 0.1);
        assert!(a.steps < 40, "{}", a.steps);
        assert!(step_density_approx(&sigma, &uniform, 0.0).is_err());
    }

    proptest! {
        #[test]
        fn density_error_below_eps(seed in any::<u64>(), eps in 1e-3..2.0f64) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let sigma = random::step_spectrum(&mut rng, 10);
            let d = random::step_quantile(&mut rng, 48);
            let a = step_density_approx(&sigma, &d, eps).unwrap();
            prop_assert!(a.error < eps);
            prop_assert!(a.steps >= 1 && a.steps <= d.len());
        }

        #[test]
        fn lp_escape_monotone_in_depth(n in 1u64..60) {
            let sigma = Spectrum::power_sqrt();
            let a = lp_escape(&sigma, 1.5, n).unwrap();
            let b = lp_escape(&sigma, 1.5, n + 1).unwrap();
            prop_assert!(a.predicted_risk <= b.predicted_risk);
            prop_assert!(a.truncation_risk() <= b.truncation_risk() + 1e-12);
            prop_assert!(b.truncation_risk() <= b.limit_risk + 1e-6);
        }
    }
}
