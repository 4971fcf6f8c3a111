//! Kusuoka representation `ρ_σ = ∫ AVaR_α dμ_σ(α)` for step spectra, and
//! finite suprema `ρ_S = sup_{σ ∈ S} ρ_σ`.

use serde::Serialize;

use crate::distmodel::StepQuantile;
use crate::error::{domain, Error, Result};
use crate::riskcore::{avar_complement, spectral_risk_unchecked};
use crate::spectrum::Spectrum;
use crate::NORMALIZATION_TOL;

/// A discrete probability measure on `[0, 1]` with atoms `(α_i, w_i)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KusuokaMeasure {
    atoms: Vec<(f64, f64)>,
}

impl KusuokaMeasure {
    /// Sorts the atoms, merges equal levels and rescales a total mass within
    /// `1e-10` of 1 to exactly 1.
    pub fn new(atoms: Vec<(f64, f64)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::Empty);
        }
        for (index, &(alpha, weight)) in atoms.iter().enumerate() {
            if !(0.0..=1.0).contains(&alpha) {
                return Err(domain("alpha", alpha, "[0, 1]"));
            }
            if !(weight > 0.0 && weight.is_finite()) {
                return Err(Error::NonPositiveWeight { index, weight });
            }
        }
        let mut atoms = atoms;
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(atoms.len());
        for (alpha, weight) in atoms {
            match merged.last_mut() {
                Some(last) if last.0 == alpha => last.1 += weight,
                _ => merged.push((alpha, weight)),
            }
        }
        let total: f64 = merged.iter().map(|a| a.1).sum();
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::Unnormalized(total));
        }
        if total != 1.0 {
            merged.iter_mut().for_each(|a| a.1 /= total);
        }
        Ok(Self { atoms: merged })
    }

    /// `(α_i, w_i)` with strictly increasing `α_i`.
    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    /// `μ({1})`, the weight on the essential supremum.
    pub fn mass_at_one(&self) -> f64 {
        self.atoms.iter().filter(|a| a.0 == 1.0).map(|a| a.1).sum()
    }
}

/// `μ_σ`: weight `σ(0)` at 0 plus `(1 - s) Δσ(s)` at each jump `s`.
pub fn mu_from_sigma(sigma: &Spectrum) -> Result<KusuokaMeasure> {
    sigma.ensure_valid()?;
    if let Spectrum::Avar(alpha) = sigma {
        return Ok(KusuokaMeasure {
            atoms: vec![(*alpha, 1.0)],
        });
    }
    let step = sigma.as_step().ok_or(Error::NotStep)?;
    let (s, c, comps) = (step.breakpoints(), step.values(), step.complements());
    let mut atoms = Vec::with_capacity(c.len());
    if c[0] > 0.0 {
        atoms.push((0.0, c[0]));
    }
    for k in 1..c.len() {
        let jump = c[k] - c[k - 1];
        if jump > 0.0 {
            atoms.push((s[k], comps[k] * jump));
        }
    }
    let total: f64 = atoms.iter().map(|a| a.1).sum();
    atoms.iter_mut().for_each(|a| a.1 /= total);
    Ok(KusuokaMeasure { atoms })
}

/// `σ_μ(β) = Σ_{α_i ≤ β} w_i / (1 - α_i)`; defined only when `μ({1}) = 0`.
pub fn sigma_from_mu(mu: &KusuokaMeasure) -> Result<Spectrum> {
    if let Some(&(alpha, weight)) = mu.atoms.iter().find(|a| a.0 == 1.0) {
        debug_assert_eq!(alpha, 1.0);
        return Err(Error::AtomAtOne(weight));
    }
    if let [(alpha, _)] = mu.atoms[..] {
        return Spectrum::avar(alpha);
    }
    let mut breakpoints = vec![0.0];
    let mut values = Vec::with_capacity(mu.atoms.len() + 1);
    let mut level = 0.0;
    for &(alpha, weight) in &mu.atoms {
        if alpha > 0.0 {
            breakpoints.push(alpha);
            values.push(level);
        }
        level += weight / (1.0 - alpha);
    }
    values.push(level);
    breakpoints.push(1.0);
    Spectrum::step(breakpoints, values)
}

/// `Σ_i w_i AVaR_{α_i}(Y)`, with an atom at 1 contributing `esssup Y`.
pub fn mixture_risk(mu: &KusuokaMeasure, d: &StepQuantile) -> f64 {
    mu.atoms.iter().map(|&(alpha, w)| w * avar_complement(1.0 - alpha, d)).sum()
}

/// A nonempty finite set of valid spectra.
#[derive(Debug, Clone)]
pub struct SpectrumSet {
    members: Vec<Spectrum>,
}

impl SpectrumSet {
    pub fn new(members: Vec<Spectrum>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::EmptySet);
        }
        for m in &members {
            m.ensure_valid()?;
        }
        Ok(Self { members })
    }

    pub fn members(&self) -> &[Spectrum] {
        &self.members
    }
}

/// `ρ_S(Y) = max_j ρ_{σ_j}(Y)` and the first index attaining it.
pub fn sup_risk(set: &SpectrumSet, d: &StepQuantile) -> (f64, usize) {
    let mut best = (f64::NEG_INFINITY, 0);
    for (j, sigma) in set.members.iter().enumerate() {
        let v = spectral_risk_unchecked(sigma, d);
        if v > best.0 {
            best = (v, j);
        }
    }
    best
}

/// `‖Y‖_S = ρ_S(|Y|)`.
pub fn set_norm(set: &SpectrumSet, d: &StepQuantile) -> f64 {
    sup_risk(set, &d.abs_value()).0
}
