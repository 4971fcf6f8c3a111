//! Random variables as left-continuous step quantile functions.
//!
//! A [`StepQuantile`] stores the segment values together with the segment
//! masses. Breakpoints `u_k` are prefix sums of the masses; complements
//! `1 - u_k` are suffix sums taken from the top, so that very small upper
//! tail masses keep full relative precision. Everything that weighs the
//! upper tail (spectral risk, AVaR, dual norms) works in complement
//! coordinates.

use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::spectrum::Spectrum;
use crate::SEGMENT_TOL;

/// Quantile function of a random variable with finitely many values.
///
/// The value `values[k]` is held on `[u_k, u_{k+1})`. Values are strictly
/// increasing after construction; equal values are merged into one atom.
#[derive(Debug, Clone, PartialEq)]
pub struct StepQuantile {
    values: Vec<f64>,
    masses: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl StepQuantile {
    /// Weighted empirical distribution of `values`; missing weights mean uniform.
    pub fn from_samples(values: &[f64], weights: Option<&[f64]>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty);
        }
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { index, value });
        }
        match weights {
            None => Ok(Self::from_atoms(values.iter().map(|&v| (v, 1.0)))),
            Some(w) => {
                if w.len() != values.len() {
                    return Err(Error::LengthMismatch {
                        values: values.len(),
                        weights: w.len(),
                    });
                }
                if let Some((index, &weight)) = w
                    .iter()
                    .enumerate()
                    .find(|(_, &w)| !(w > 0.0 && w.is_finite()))
                {
                    return Err(Error::NonPositiveWeight { index, weight });
                }
                Ok(Self::from_atoms(values.iter().copied().zip(w.iter().copied())))
            }
        }
    }

    /// Builds a quantile from explicit breakpoints `0 = u_0 < … < u_m = 1`
    /// and nondecreasing values `v_1 ≤ … ≤ v_m`.
    pub fn from_parts(breakpoints: &[f64], values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty);
        }
        if breakpoints.len() != values.len() + 1 {
            return Err(Error::Malformed(format!(
                "{} breakpoints for {} values",
                breakpoints.len(),
                values.len()
            )));
        }
        if breakpoints[0] != 0.0 || *breakpoints.last().unwrap() != 1.0 {
            return Err(Error::Malformed("breakpoints must start at 0 and end at 1".into()));
        }
        if breakpoints.windows(2).any(|w| w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Greater)) {
            return Err(Error::Malformed("breakpoints must be strictly increasing".into()));
        }
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { index, value });
        }
        if values.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Malformed("quantile values must be nondecreasing".into()));
        }
        Ok(Self::from_atoms(
            values
                .iter()
                .zip(breakpoints.windows(2))
                .map(|(&v, w)| (v, w[1] - w[0])),
        ))
    }

    /// The degenerate variable `Y ≡ c`.
    pub fn constant(c: f64) -> Self {
        Self::from_atoms(std::iter::once((c, 1.0)))
    }

    /// Collects `(value, mass)` atoms, drops empty ones, sorts, merges ties and
    /// normalizes the total mass to 1.
    pub(crate) fn from_atoms(atoms: impl IntoIterator<Item = (f64, f64)>) -> Self {
        let mut atoms: Vec<(f64, f64)> = atoms.into_iter().filter(|&(_, m)| m > 0.0).collect();
        assert!(!atoms.is_empty(), "step quantile needs at least one atom of positive mass");
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut values: Vec<f64> = Vec::with_capacity(atoms.len());
        let mut masses: Vec<f64> = Vec::with_capacity(atoms.len());
        for (v, m) in atoms {
            match values.last() {
                Some(&last) if last == v => *masses.last_mut().unwrap() += m,
                _ => {
                    values.push(v);
                    masses.push(m);
                }
            }
        }
        let total: f64 = masses.iter().sum();
        masses.iter_mut().for_each(|m| *m /= total);
        Self::assemble(values, masses)
    }

    fn assemble(values: Vec<f64>, masses: Vec<f64>) -> Self {
        let m = values.len();
        let mut lower = Vec::with_capacity(m + 1);
        let mut acc = 0.0;
        lower.push(0.0);
        for &mass in &masses[..m - 1] {
            acc += mass;
            lower.push(acc.min(1.0));
        }
        lower.push(1.0);

        let mut upper = vec![0.0; m + 1];
        let mut acc = 0.0;
        for k in (1..m).rev() {
            acc += masses[k];
            upper[k] = acc.min(1.0);
        }
        upper[0] = 1.0;
        Self {
            values,
            masses,
            lower,
            upper,
        }
    }

    /// Segment values `v_1 < … < v_m`.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Segment masses `u_k - u_{k-1}`, summing to 1.
    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    /// Breakpoints `0 = u_0 < … < u_m = 1`.
    pub fn breakpoints(&self) -> &[f64] {
        &self.lower
    }

    /// Complements `1 - u_k`, accumulated from the top.
    pub fn complements(&self) -> &[f64] {
        &self.upper
    }

    /// Number of segments.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `(value, mass)` pairs in ascending value order.
    pub fn atoms(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.values.iter().copied().zip(self.masses.iter().copied())
    }

    /// Left-continuous quantile `F^{-1}(p) = inf{y : P(Y ≤ y) ≥ p}` for `p ∈ [0, 1)`.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(0.0..1.0).contains(&p) {
            return Err(domain("p", p, "[0, 1)"));
        }
        let idx = self.lower.partition_point(|&u| u <= p);
        Ok(self.values[(idx - 1).min(self.len() - 1)])
    }

    pub fn mean(&self) -> f64 {
        self.atoms().map(|(v, m)| v * m).sum()
    }

    /// Largest value, `esssup Y`.
    pub fn esssup(&self) -> f64 {
        self.values[self.len() - 1]
    }

    /// Smallest value, `essinf Y`.
    pub fn essinf(&self) -> f64 {
        self.values[0]
    }

    /// True if every value is zero.
    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    /// Quantile function of `|Y|`.
    pub fn abs_value(&self) -> Self {
        if self.essinf() >= 0.0 {
            return self.clone();
        }
        self.map(f64::abs)
    }

    /// Distribution of `f(Y)`; values are re-sorted, so `f` need not be monotone.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::from_atoms(self.atoms().map(|(v, m)| (f(v), m)))
    }

    /// `Y + c`.
    pub fn shift(&self, c: f64) -> Self {
        self.map(|v| v + c)
    }

    /// `λ·Y`.
    pub fn scale(&self, lambda: f64) -> Self {
        self.map(|v| lambda * v)
    }

    /// `‖Y‖_p = (E|Y|^p)^{1/p}`, or `max |v_k|` for `p = ∞`.
    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        if p.is_nan() || p < 1.0 {
            return Err(domain("p", p, "[1, ∞]"));
        }
        let max = self.values.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
        if p.is_infinite() || max == 0.0 {
            return Ok(max);
        }
        let sum: f64 = self.atoms().map(|(v, m)| (v.abs() / max).powf(p) * m).sum();
        Ok(max * sum.powf(1.0 / p))
    }

    /// `∫_{1-r}^1 F^{-1}(u) du`, the upper partial expectation over a top
    /// band of probability `r`.
    pub fn upper_integral_complement(&self, r: f64) -> f64 {
        let mut acc = 0.0;
        for k in (0..self.len()).rev() {
            let (lo, hi) = (self.upper[k + 1], self.upper[k]);
            if r >= hi {
                acc += self.values[k] * self.masses[k];
            } else {
                if r > lo {
                    acc += self.values[k] * (r - lo);
                }
                break;
            }
        }
        acc
    }
}

/// One observation of a weighted joint sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairRow {
    pub y: f64,
    pub z: f64,
    pub w: f64,
}

/// Weighted joint observations `(y_i, z_i, w_i)` on a common probability space.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedSample {
    rows: Vec<PairRow>,
}

impl PairedSample {
    /// Rows with positive weights summing to 1 within `1e-12`.
    pub fn new(rows: Vec<PairRow>) -> Result<Self> {
        Self::check_rows(&rows)?;
        let total: f64 = rows.iter().map(|r| r.w).sum();
        if (total - 1.0).abs() > SEGMENT_TOL {
            return Err(Error::Unnormalized(total));
        }
        Ok(Self { rows })
    }

    /// Rows with arbitrary positive weights, rescaled to total mass 1.
    pub fn normalized(mut rows: Vec<PairRow>) -> Result<Self> {
        Self::check_rows(&rows)?;
        let total: f64 = rows.iter().map(|r| r.w).sum();
        rows.iter_mut().for_each(|r| r.w /= total);
        Ok(Self { rows })
    }

    fn check_rows(rows: &[PairRow]) -> Result<()> {
        if rows.is_empty() {
            return Err(Error::Empty);
        }
        for (index, r) in rows.iter().enumerate() {
            if !(r.w > 0.0 && r.w.is_finite()) {
                return Err(Error::NonPositiveWeight { index, weight: r.w });
            }
            if !r.y.is_finite() {
                return Err(Error::NonFinite { index, value: r.y });
            }
            if !r.z.is_finite() {
                return Err(Error::NonFinite { index, value: r.z });
            }
        }
        Ok(())
    }

    /// Couples two discrete laws by stacking their atoms on `[0, 1)` in the
    /// given orders. Ascending orders on both sides give the comonotone
    /// coupling; opposite orders give the antitone one.
    pub fn couple(ys: &[(f64, f64)], zs: &[(f64, f64)]) -> Result<Self> {
        if ys.is_empty() || zs.is_empty() {
            return Err(Error::Empty);
        }
        let total_y: f64 = ys.iter().map(|a| a.1).sum();
        let total_z: f64 = zs.iter().map(|a| a.1).sum();
        let mut rows = Vec::with_capacity(ys.len() + zs.len());
        let (mut i, mut j) = (0, 0);
        let mut rest_y = ys[0].1 / total_y;
        let mut rest_z = zs[0].1 / total_z;
        while i < ys.len() && j < zs.len() {
            let w = rest_y.min(rest_z);
            if w > 0.0 {
                rows.push(PairRow {
                    y: ys[i].0,
                    z: zs[j].0,
                    w,
                });
            }
            let y_done = rest_y <= rest_z;
            rest_y -= w;
            rest_z -= w;
            if y_done || rest_y <= f64::EPSILON * 1e-3 {
                i += 1;
                if i < ys.len() {
                    rest_y = ys[i].1 / total_y;
                }
            }
            if !y_done || rest_z <= f64::EPSILON * 1e-3 {
                j += 1;
                if j < zs.len() {
                    rest_z = zs[j].1 / total_z;
                }
            }
        }
        Self::normalized(rows)
    }

    pub fn rows(&self) -> &[PairRow] {
        &self.rows
    }

    /// `E[YZ] = Σ w_i y_i z_i`.
    pub fn pairing(&self) -> f64 {
        self.rows.iter().map(|r| r.w * r.y * r.z).sum()
    }

    /// Law of the first coordinate.
    pub fn y_marginal(&self) -> StepQuantile {
        StepQuantile::from_atoms(self.rows.iter().map(|r| (r.y, r.w)))
    }

    /// Law of the second coordinate.
    pub fn z_marginal(&self) -> StepQuantile {
        StepQuantile::from_atoms(self.rows.iter().map(|r| (r.z, r.w)))
    }

    /// Law of `f(Y, Z)` under this joint distribution.
    pub fn combine(&self, f: impl Fn(f64, f64) -> f64) -> StepQuantile {
        StepQuantile::from_atoms(self.rows.iter().map(|r| (f(r.y, r.z), r.w)))
    }
}

/// Walks the common refinement of a quantile's segments and a spectrum's
/// density cells, from `u = 0` upward, calling `f(y, z, width)` per piece.
/// For non-step spectra `z` is the exact average of `σ` over the piece.
pub(crate) fn for_each_cell(d: &StepQuantile, sigma: &Spectrum, mut f: impl FnMut(f64, f64, f64)) {
    let cells = sigma.cells();
    let exact = sigma.is_step();
    let comps = d.complements();
    let (mut i, mut j) = (0, 0);
    let mut a = 1.0_f64;
    while i < d.len() && j < cells.len() {
        let (d_lo, c_lo) = (comps[i + 1], cells[j].lo);
        let b = d_lo.max(c_lo);
        if a > b {
            let z = if exact {
                cells[j].value
            } else {
                (sigma.tail_complement(a) - sigma.tail_complement(b)) / (a - b)
            };
            f(d.values[i], z, a - b);
        }
        a = b;
        if d_lo == b {
            i += 1;
        }
        if c_lo == b {
            j += 1;
        }
    }
}

/// Pairs `(F_Y^{-1}(u), σ(u))` on the common refinement of the quantile's
/// breakpoints and the spectrum's cells, weighted by cell length.
///
/// For step spectra `σ` is exact on each cell; otherwise each piece carries
/// the average of `σ` over it, which leaves `E[yz] = ∫ F^{-1} σ` unchanged.
pub fn comonotone_pair(d: &StepQuantile, sigma: &Spectrum) -> Result<PairedSample> {
    sigma.ensure_valid()?;
    let mut rows = Vec::with_capacity(d.len() + sigma.cells().len());
    for_each_cell(d, sigma, |y, z, w| rows.push(PairRow { y, z, w }));
    PairedSample::normalized(rows)
}
