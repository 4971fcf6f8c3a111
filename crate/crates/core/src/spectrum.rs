//! Spectral weight functions `σ` and their tail weights `S(α) = ∫_α^1 σ(u) du`.
//!
//! Tail weights are evaluated in complement coordinates, `T(r) = S(1 - r)`,
//! so that bands of tiny probability near `u = 1` keep full relative
//! precision.

use std::borrow::Cow;
use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::numeric::{bisect_largest, integrate_toward_zero};
use crate::NORMALIZATION_TOL;

/// Number of points in the monotonicity mesh for [`GeneralSpectrum`].
pub const VALIDATION_MESH: usize = 4096;

/// Nondecreasing step density: value `values[k]` on `[s_k, s_{k+1})`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepSpectrum {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
    comps: Vec<f64>,
    tails: Vec<f64>,
}

impl StepSpectrum {
    /// Checks the shape (breakpoints `0 = s_0 < … < s_n = 1`, finite values)
    /// and rescales to unit integral when the raw integral is within
    /// `1e-10` of 1. Sign and monotonicity are left to [`Spectrum::validate`].
    pub fn new(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty);
        }
        if breakpoints.len() != values.len() + 1 {
            return Err(Error::Malformed(format!(
                "{} breakpoints for {} values (need values + 1)",
                breakpoints.len(),
                values.len()
            )));
        }
        if breakpoints[0] != 0.0 || breakpoints[values.len()] != 1.0 {
            return Err(Error::Malformed("spectrum breakpoints must start at 0 and end at 1".into()));
        }
        if breakpoints.windows(2).any(|w| w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Greater)) {
            return Err(Error::Malformed("spectrum breakpoints must be strictly increasing".into()));
        }
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { index, value });
        }
        let mut s = Self::assemble(breakpoints, values);
        let total = s.tails[0];
        if total != 1.0 && (total - 1.0).abs() <= NORMALIZATION_TOL {
            log::debug!("rescaling step spectrum by {}", 1.0 / total);
            let values = s.values.iter().map(|c| c / total).collect();
            s = Self::assemble(s.breakpoints, values);
        }
        Ok(s)
    }

    fn assemble(breakpoints: Vec<f64>, values: Vec<f64>) -> Self {
        let n = values.len();
        let comps: Vec<f64> = breakpoints.iter().map(|s| 1.0 - s).collect();
        let mut tails = vec![0.0; n + 1];
        for k in (0..n).rev() {
            tails[k] = tails[k + 1] + values[k] * (breakpoints[k + 1] - breakpoints[k]);
        }
        Self {
            breakpoints,
            values,
            comps,
            tails,
        }
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `1 - s_k` for every breakpoint.
    pub fn complements(&self) -> &[f64] {
        &self.comps
    }

    /// `∫_0^1 σ` as stored.
    pub fn integral(&self) -> f64 {
        self.tails[0]
    }

    fn segment_of_complement(&self, r: f64) -> usize {
        // first index with comps[idx] <= r; the segment below it
        let idx = self.comps.partition_point(|&c| c > r);
        idx.saturating_sub(1).min(self.values.len() - 1)
    }

    fn tail_complement(&self, r: f64) -> f64 {
        let k = self.segment_of_complement(r);
        self.tails[k + 1] + self.values[k] * (r - self.comps[k + 1])
    }

    fn tail(&self, alpha: f64) -> f64 {
        let idx = self.breakpoints.partition_point(|&s| s <= alpha);
        let k = idx.saturating_sub(1).min(self.values.len() - 1);
        self.tails[k + 1] + self.values[k] * (self.breakpoints[k + 1] - alpha)
    }

    fn density(&self, u: f64) -> f64 {
        let idx = self.breakpoints.partition_point(|&s| s <= u);
        self.values[idx.saturating_sub(1).min(self.values.len() - 1)]
    }

    fn density_complement(&self, r: f64) -> f64 {
        let idx = self.comps.partition_point(|&c| c >= r);
        self.values[idx.saturating_sub(1).min(self.values.len() - 1)]
    }

    fn power_tail(&self, q: f64, r: f64) -> f64 {
        let mut acc = 0.0;
        for k in (0..self.values.len()).rev() {
            let (lo, hi) = (self.comps[k + 1], self.comps[k]);
            let c = self.values[k].powf(q);
            if r >= hi {
                acc += c * (hi - lo);
            } else {
                if r > lo {
                    acc += c * (r - lo);
                }
                break;
            }
        }
        acc
    }

    fn power_tail_inverse(&self, q: f64, level: f64) -> f64 {
        let mut acc = 0.0;
        for k in (0..self.values.len()).rev() {
            let c = self.values[k].powf(q);
            let seg = c * (self.comps[k] - self.comps[k + 1]);
            if level < acc + seg {
                let r = self.comps[k + 1] + (level - acc) / c;
                return r.clamp(self.comps[k + 1], self.comps[k]);
            }
            acc += seg;
        }
        1.0
    }

    fn tail_inverse(&self, level: f64) -> f64 {
        for k in (0..self.values.len()).rev() {
            if level < self.tails[k] {
                let r = self.comps[k + 1] + (level - self.tails[k + 1]) / self.values[k];
                return r.clamp(self.comps[k + 1], self.comps[k]);
            }
        }
        1.0
    }
}

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A spectrum given by closures: the density `u ↦ σ(u)` and its closed-form
/// tail `α ↦ S(α)`.
#[derive(Clone)]
pub struct GeneralSpectrum {
    name: String,
    density: RealFn,
    tail: RealFn,
    integrability: f64,
    tail_order: Option<f64>,
}

impl GeneralSpectrum {
    /// `integrability` is the exponent `q*` such that `σ ∈ L^q` exactly for
    /// `q < q*` (pass `f64::INFINITY` for bounded densities).
    pub fn new(
        name: impl Into<String>,
        density: impl Fn(f64) -> f64 + Send + Sync + 'static,
        tail: impl Fn(f64) -> f64 + Send + Sync + 'static,
        integrability: f64,
    ) -> Self {
        Self {
            name: name.into(),
            density: Arc::new(density),
            tail: Arc::new(tail),
            integrability,
            tail_order: None,
        }
    }

    /// Declares `S(1 - r) ~ C r^order` as `r → 0` (1 for bounded densities).
    pub fn with_tail_order(mut self, order: f64) -> Self {
        self.tail_order = Some(order);
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }
}

impl fmt::Debug for GeneralSpectrum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GeneralSpectrum")
            .field("name", &self.name)
            .field("integrability", &self.integrability)
            .field("tail_order", &self.tail_order)
            .finish_non_exhaustive()
    }
}

/// A spectral function: nonnegative, nondecreasing, with unit integral.
#[derive(Debug, Clone)]
pub enum Spectrum {
    Step(StepSpectrum),
    /// The AVaR spectrum `σ = 1/(1-α)` on `[α, 1)`, zero below.
    Avar(f64),
    /// `σ(u) = 1 / (2 √(1-u))`, integrable for every `q < 2`.
    PowerSqrt,
    General(GeneralSpectrum),
}

/// Which defining property of a spectrum failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Property {
    Nonnegativity,
    Monotonicity,
    Normalization,
    Domain,
}

/// A failed property together with a witness point `u`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub property: Property,
    pub at: f64,
    pub detail: String,
}

/// Output of [`Spectrum::step_approx`].
#[derive(Debug, Clone)]
pub struct StepApprox {
    pub spectrum: Spectrum,
    /// Factor applied to the cell infima to restore unit integral.
    pub scale: f64,
}

/// A cell of constant (or averaged) density. Cells are listed from `u = 0`
/// upward; each ends at complement coordinate `lo` and starts where the
/// previous one ended.
#[derive(Debug, Clone, Copy)]
pub(crate) struct DensityCell {
    pub lo: f64,
    pub value: f64,
}

/// Smallest `1 - u` at which a general density is sampled; below it the
/// integrand is extrapolated.
const GENERAL_FLOOR: f64 = 1.0 / (1u64 << 40) as f64;

/// Depth of the geometric cell mesh used for non-step spectra.
const CELL_MESH_DEPTH: i32 = 52;

impl Spectrum {
    pub fn step(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        StepSpectrum::new(breakpoints, values).map(Spectrum::Step)
    }

    pub fn avar(alpha: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&alpha) {
            return Err(domain("alpha", alpha, "[0, 1)"));
        }
        Ok(Spectrum::Avar(alpha))
    }

    pub fn power_sqrt() -> Self {
        Spectrum::PowerSqrt
    }

    /// `σ ≡ 1`, for which `ρ_σ = E`.
    pub fn uniform() -> Self {
        Spectrum::Avar(0.0)
    }

    /// The step representation, when `σ` is a step function.
    pub fn as_step(&self) -> Option<Cow<'_, StepSpectrum>> {
        match self {
            Spectrum::Step(s) => Some(Cow::Borrowed(s)),
            Spectrum::Avar(alpha) => Some(Cow::Owned(if *alpha == 0.0 {
                StepSpectrum::assemble(vec![0.0, 1.0], vec![1.0])
            } else {
                StepSpectrum::assemble(vec![0.0, *alpha, 1.0], vec![0.0, 1.0 / (1.0 - alpha)])
            })),
            _ => None,
        }
    }

    pub fn is_step(&self) -> bool {
        matches!(self, Spectrum::Step(_) | Spectrum::Avar(_))
    }

    /// `σ(u)`, right-continuous at jumps.
    pub fn density(&self, u: f64) -> f64 {
        match self {
            Spectrum::Step(s) => s.density(u),
            Spectrum::Avar(alpha) => {
                if u >= *alpha {
                    1.0 / (1.0 - alpha)
                } else {
                    0.0
                }
            }
            Spectrum::PowerSqrt => 0.5 / (1.0 - u).sqrt(),
            Spectrum::General(g) => (g.density)(u),
        }
    }

    /// `σ(1 - r)`.
    pub fn density_complement(&self, r: f64) -> f64 {
        match self {
            Spectrum::Step(s) => s.density_complement(r),
            Spectrum::Avar(alpha) => {
                if r <= 1.0 - alpha {
                    1.0 / (1.0 - alpha)
                } else {
                    0.0
                }
            }
            Spectrum::PowerSqrt => 0.5 / r.sqrt(),
            Spectrum::General(g) => (g.density)(1.0 - r),
        }
    }

    /// `σ(1⁻) = sup σ`, possibly infinite.
    pub fn sup_density(&self) -> f64 {
        match self {
            Spectrum::Step(s) => s.values[s.values.len() - 1],
            Spectrum::Avar(alpha) => 1.0 / (1.0 - alpha),
            Spectrum::PowerSqrt => f64::INFINITY,
            Spectrum::General(g) => match g.tail_order {
                Some(order) if order < 1.0 => f64::INFINITY,
                _ if g.integrability.is_infinite() => (g.density)(1.0),
                _ => f64::INFINITY,
            },
        }
    }

    /// Exponent `γ` with `S(1 - r) ~ C r^γ`; 1 for bounded spectra.
    pub fn tail_order(&self) -> Option<f64> {
        match self {
            Spectrum::Step(_) | Spectrum::Avar(_) => Some(1.0),
            Spectrum::PowerSqrt => Some(0.5),
            Spectrum::General(g) => g.tail_order,
        }
    }

    /// `S(α) = ∫_α^1 σ(u) du` for `α ∈ [0, 1]`.
    pub fn tail_weight(&self, alpha: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(domain("alpha", alpha, "[0, 1]"));
        }
        Ok(self.tail(alpha))
    }

    pub(crate) fn tail(&self, alpha: f64) -> f64 {
        match self {
            Spectrum::Step(s) => s.tail(alpha),
            Spectrum::General(g) => (g.tail)(alpha),
            _ => self.tail_complement(1.0 - alpha),
        }
    }

    /// `S(1 - r)`, exact for small `r` on every closed-form variant.
    pub fn tail_complement(&self, r: f64) -> f64 {
        let r = r.clamp(0.0, 1.0);
        match self {
            Spectrum::Step(s) => s.tail_complement(r),
            Spectrum::Avar(alpha) => r.min(1.0 - alpha) / (1.0 - alpha),
            Spectrum::PowerSqrt => r.sqrt(),
            Spectrum::General(g) => (g.tail)(1.0 - r),
        }
    }

    /// Largest `r` with `S(1 - r) ≤ level`, i.e. the smallest `t` with
    /// `∫_0^t σ ≥ 1 - level`.
    pub(crate) fn tail_inverse_complement(&self, level: f64) -> f64 {
        if level >= 1.0 {
            return 1.0;
        }
        match self {
            Spectrum::Step(s) => s.tail_inverse(level),
            Spectrum::Avar(alpha) => level * (1.0 - alpha),
            Spectrum::PowerSqrt => level * level,
            Spectrum::General(_) => bisect_largest(|r| self.tail_complement(r), level, 0.0, 1.0),
        }
    }

    /// Diagnostics for nonnegativity, monotonicity and `∫σ = 1`; empty iff valid.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        match self {
            Spectrum::Step(s) => {
                for (k, &c) in s.values.iter().enumerate() {
                    if c < 0.0 {
                        out.push(Violation {
                            property: Property::Nonnegativity,
                            at: s.breakpoints[k],
                            detail: format!("σ = {c} < 0"),
                        });
                    }
                    if k > 0 && c < s.values[k - 1] {
                        out.push(Violation {
                            property: Property::Monotonicity,
                            at: s.breakpoints[k],
                            detail: format!("σ drops from {} to {c}", s.values[k - 1]),
                        });
                    }
                }
                let total = s.integral();
                if (total - 1.0).abs() > NORMALIZATION_TOL {
                    out.push(Violation {
                        property: Property::Normalization,
                        at: 0.0,
                        detail: format!("∫σ = {total}"),
                    });
                }
            }
            Spectrum::Avar(alpha) => {
                if !(0.0..1.0).contains(alpha) {
                    out.push(Violation {
                        property: Property::Domain,
                        at: *alpha,
                        detail: format!("AVaR level {alpha} outside [0, 1)"),
                    });
                }
            }
            Spectrum::PowerSqrt => {}
            Spectrum::General(g) => {
                let mut prev: Option<(f64, f64)> = None;
                for i in 0..VALIDATION_MESH {
                    let u = 1.0 - (-40.0 * i as f64 / (VALIDATION_MESH - 1) as f64).exp2();
                    let c = (g.density)(u);
                    if c.is_nan() || c < 0.0 {
                        out.push(Violation {
                            property: Property::Nonnegativity,
                            at: u,
                            detail: format!("σ = {c}"),
                        });
                        break;
                    }
                    if let Some((pu, pc)) = prev {
                        if c < pc - 1e-12 * pc.abs().max(1.0) {
                            out.push(Violation {
                                property: Property::Monotonicity,
                                at: u,
                                detail: format!("σ drops from {pc} at {pu} to {c}"),
                            });
                            break;
                        }
                    }
                    prev = Some((u, c));
                }
                let (s0, s1) = ((g.tail)(0.0), (g.tail)(1.0));
                if (s0 - 1.0).abs() > NORMALIZATION_TOL || s1.abs() > NORMALIZATION_TOL {
                    out.push(Violation {
                        property: Property::Normalization,
                        at: 0.0,
                        detail: format!("S(0) = {s0}, S(1) = {s1}"),
                    });
                }
            }
        }
        out
    }

    pub(crate) fn ensure_valid(&self) -> Result<()> {
        let violations = self.validate();
        if violations.is_empty() {
            return Ok(());
        }
        let msg = violations
            .iter()
            .map(|v| format!("{:?} at u = {}: {}", v.property, v.at, v.detail))
            .collect::<Vec<_>>()
            .join("; ");
        Err(Error::InvalidSpectrum(msg))
    }

    /// `‖σ‖_q`; `+∞` when `σ ∉ L^q`.
    pub fn lq_norm(&self, q: f64) -> Result<f64> {
        if q.is_nan() || q < 1.0 {
            return Err(domain("q", q, "[1, ∞]"));
        }
        if let Some(s) = self.as_step() {
            let max = s.values.iter().fold(0.0_f64, |a, &c| a.max(c));
            if q.is_infinite() || max == 0.0 {
                return Ok(max);
            }
            let sum: f64 = s
                .values
                .iter()
                .zip(s.breakpoints.windows(2))
                .map(|(&c, w)| (c / max).powf(q) * (w[1] - w[0]))
                .sum();
            return Ok(max * sum.powf(1.0 / q));
        }
        match self {
            Spectrum::PowerSqrt => Ok(if q < 2.0 {
                0.5 * (2.0 / (2.0 - q)).powf(1.0 / q)
            } else {
                f64::INFINITY
            }),
            Spectrum::General(g) => {
                if q >= g.integrability {
                    Ok(f64::INFINITY)
                } else if q.is_infinite() {
                    Ok(self.sup_density())
                } else {
                    Ok(self.power_tail_integral(q, 1.0).powf(1.0 / q))
                }
            }
            _ => unreachable!("step variants handled above"),
        }
    }

    /// `∫_{1-r}^1 σ(u)^q du` for finite `q ≥ 1`.
    pub fn power_tail_integral(&self, q: f64, r: f64) -> f64 {
        let r = r.clamp(0.0, 1.0);
        if let Some(s) = self.as_step() {
            return s.power_tail(q, r);
        }
        match self {
            Spectrum::PowerSqrt => {
                if q < 2.0 {
                    (-q).exp2() * r.powf(1.0 - 0.5 * q) / (1.0 - 0.5 * q)
                } else {
                    f64::INFINITY
                }
            }
            Spectrum::General(g) => {
                if q >= g.integrability {
                    return f64::INFINITY;
                }
                let density = g.density.clone();
                integrate_toward_zero(&move |x: f64| density(1.0 - x).powf(q), r, 1e-11, GENERAL_FLOOR)
            }
            _ => unreachable!("step variants handled above"),
        }
    }

    /// Largest `r` with `∫_{1-r}^1 σ^q ≤ level`: exact for step spectra and
    /// PowerSqrt, bisection otherwise.
    pub(crate) fn power_tail_inverse(&self, q: f64, level: f64) -> f64 {
        if let Some(s) = self.as_step() {
            return s.power_tail_inverse(q, level);
        }
        match self {
            Spectrum::PowerSqrt => {
                let e = 1.0 - 0.5 * q;
                (level * e * q.exp2()).powf(1.0 / e).min(1.0)
            }
            _ => bisect_largest(|r| self.power_tail_integral(q, r), level, 0.0, 1.0),
        }
    }

    /// Nondecreasing step under-approximation on the cells
    /// `[1 - 2^{-k}, 1 - 2^{-k-1})`, each carrying the infimum of `σ` on the
    /// cell, rescaled to unit integral. Step spectra are returned unchanged.
    /// At most 52 cells are used (the last cell then starts at `1 - 2^{-51}`).
    pub fn step_approx(&self, n: usize) -> Result<StepApprox> {
        if n == 0 {
            return Err(domain("n", 0.0, "n ≥ 1"));
        }
        self.ensure_valid()?;
        if let Some(s) = self.as_step() {
            return Ok(StepApprox {
                spectrum: Spectrum::Step(s.into_owned()),
                scale: 1.0,
            });
        }
        let n = n.min(52) as i32;
        let mut breakpoints = Vec::with_capacity(n as usize + 1);
        let mut infima = Vec::with_capacity(n as usize);
        let mut integral = 0.0;
        for k in 0..n {
            let r_hi = (-k as f64).exp2();
            let width = if k + 1 == n { r_hi } else { 0.5 * r_hi };
            let c = self.density_complement(r_hi);
            breakpoints.push(1.0 - r_hi);
            infima.push(c);
            integral += c * width;
        }
        breakpoints.push(1.0);
        if !(integral > 0.0 && integral.is_finite()) {
            return Err(Error::InvalidSpectrum(format!(
                "step approximation with {n} cells has integral {integral}"
            )));
        }
        let scale = 1.0 / integral;
        let values = infima.into_iter().map(|c| c * scale).collect();
        Ok(StepApprox {
            spectrum: Spectrum::Step(StepSpectrum::assemble(breakpoints, values)),
            scale,
        })
    }

    /// Density cells from `u = 0` upward. Step spectra give their own
    /// segments; other spectra give a geometric mesh toward `u = 1` with the
    /// cell average of `σ`.
    pub(crate) fn cells(&self) -> Vec<DensityCell> {
        if let Some(s) = self.as_step() {
            return (0..s.values.len())
                .map(|k| DensityCell {
                    lo: s.comps[k + 1],
                    value: s.values[k],
                })
                .collect();
        }
        let mut cells = Vec::with_capacity(CELL_MESH_DEPTH as usize + 1);
        let mut hi = 1.0_f64;
        let mut t_hi = self.tail_complement(hi);
        for k in 1..=CELL_MESH_DEPTH + 1 {
            let lo = if k > CELL_MESH_DEPTH { 0.0 } else { (-k as f64).exp2() };
            let t_lo = self.tail_complement(lo);
            cells.push(DensityCell {
                lo,
                value: (t_hi - t_lo) / (hi - lo),
            });
            hi = lo;
            t_hi = t_lo;
        }
        cells
    }

    /// Short label used in reports.
    pub fn label(&self) -> String {
        match self {
            Spectrum::Step(s) => format!("step[{}]", s.values.len()),
            Spectrum::Avar(alpha) => format!("avar({alpha})"),
            Spectrum::PowerSqrt => "power_sqrt".into(),
            Spectrum::General(g) => g.name.clone(),
        }
    }
}
