//! Spectral risk measures and the Banach spaces they live on.
//!
//! Random variables are represented exactly by their left-continuous
//! quantile functions ([`StepQuantile`]); spectral weight functions by
//! [`Spectrum`]. On these inputs every quantity in the crate (the risk
//! value, the associated norm `‖Y‖_σ = ρ_σ(|Y|)`, the dual gauge norm,
//! Kusuoka mixtures, embedding constants) is a finite sum and is computed
//! without quadrature.
//!
//! Module map:
//!
//! * [`distmodel`]: step quantiles, paired samples, comonotone coupling
//! * [`spectrum`]: spectral functions and their tail weights `S(α) = ∫_α^1 σ`
//! * [`riskcore`]: `ρ_σ`, AVaR, `‖·‖_σ`, the representation supremum, semideviation
//! * [`kusuoka`]: spectrum/measure conversions, `ρ_S = sup_σ ρ_σ`
//! * [`dualspace`]: dominance relation, dual gauge norm, Hahn–Banach witness
//! * [`embed`]: comparability constants between natural-domain spaces
//! * [`extremal`]: constructive separation results and step approximation
//! * [`io`]: CSV samples, spectrum and measure JSON files
//! * [`random`]: seeded generators for property suites

pub mod distmodel;
pub mod dualspace;
pub mod embed;
mod error;
pub mod extremal;
pub mod io;
pub mod kusuoka;
mod numeric;
pub mod random;
pub mod riskcore;
pub mod spectrum;

pub use distmodel::{comonotone_pair, PairRow, PairedSample, StepQuantile};
pub use dualspace::{DominanceCertificate, DualNorm};
pub use error::{Error, Result};
pub use kusuoka::{KusuokaMeasure, SpectrumSet};
pub use riskcore::{EvalMethod, RiskReport};
pub use spectrum::{GeneralSpectrum, Spectrum, StepSpectrum, Violation};

/// Absolute tolerance for segment arithmetic and breakpoint comparisons.
pub const SEGMENT_TOL: f64 = 1e-12;

/// Absolute tolerance on `∫σ = 1` and on Kusuoka measure mass.
pub const NORMALIZATION_TOL: f64 = 1e-10;
