//! The seeded property suite behind `riskspace verify`.
//!
//! Each invariant maps a random instance to a margin; the case passes when
//! the margin is nonnegative. Every invariant draws from its own generator,
//! seeded from the suite seed and the invariant id, so the report does not
//! depend on the order in which invariants run.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use riskspace::distmodel::comonotone_pair;
use riskspace::dualspace::{dual_norm, hahn_banach_witness, indicator_dual_norm};
use riskspace::embed::{avar_sandwich_check, comparability_constant};
use riskspace::extremal::step_density_approx;
use riskspace::kusuoka::{mixture_risk, mu_from_sigma, set_norm, sigma_from_mu, sup_risk, SpectrumSet};
use riskspace::random::{joint, nonnegative_quantile, step_quantile, step_spectrum};
use riskspace::riskcore::{
    representation_sup_check, semideviation, sigma_norm, sigma_norm_via_cdf, spectral_risk,
};
use riskspace::{Spectrum, StepQuantile};

use crate::number;

const MAX_SEGMENTS: usize = 64;

type Check = fn(&mut ChaCha8Rng) -> f64;

struct Invariant {
    id: &'static str,
    anchor: &'static str,
    check: Check,
}

/// Outcome of one invariant over all cases.
#[derive(Debug, Clone, PartialEq)]
pub struct InvariantResult {
    pub id: &'static str,
    pub anchor: &'static str,
    pub passed: usize,
    pub failed: usize,
    pub worst_margin: f64,
    pub worst_case: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub seed: u64,
    pub cases: usize,
    pub failures: usize,
    pub invariants: Vec<InvariantResult>,
}

impl SuiteReport {
    pub fn to_json(&self) -> Value {
        let entries: Vec<Value> = self
            .invariants
            .iter()
            .map(|r| {
                json!({
                    "id": r.id,
                    "anchor": r.anchor,
                    "passed": r.passed,
                    "failed": r.failed,
                    "worst_margin": number(r.worst_margin),
                    "worst_case": r.worst_case,
                })
            })
            .collect();
        json!({
            "seed": self.seed,
            "cases": self.cases,
            "failures": self.failures,
            "invariants": entries,
        })
    }
}

fn sigma(rng: &mut ChaCha8Rng) -> Spectrum {
    step_spectrum(rng, 16)
}

fn variable(rng: &mut ChaCha8Rng) -> StepQuantile {
    step_quantile(rng, MAX_SEGMENTS)
}

fn norm(s: &Spectrum, d: &StepQuantile) -> f64 {
    sigma_norm(s, d).expect("generated spectra are valid")
}

fn risk(s: &Spectrum, d: &StepQuantile) -> f64 {
    spectral_risk(s, d).expect("generated spectra are valid")
}

fn dual(z: &StepQuantile, s: &Spectrum) -> f64 {
    dual_norm(z, s).expect("generated spectra are valid").value
}

fn abs_value_mass(rng: &mut ChaCha8Rng) -> f64 {
    let a = variable(rng).abs_value();
    let mass: f64 = a.masses().iter().sum();
    (1e-12 - (mass - 1.0).abs()).min(a.essinf())
}

fn avar_sandwich(rng: &mut ChaCha8Rng) -> f64 {
    let a1 = rng.random_range(0.0..0.99);
    let a2 = a1 + rng.random_range(0.0..1.0) * (0.999 - a1);
    let s = avar_sandwich_check(a1, a2, &variable(rng)).expect("ordered levels");
    (s.middle - s.lower).min(s.upper - s.middle) + 1e-12 * (1.0 + s.upper)
}

fn chebyshev_bound(rng: &mut ChaCha8Rng) -> f64 {
    let (s, d) = (sigma(rng), variable(rng));
    norm(&s, &d) - d.lp_norm(1.0).unwrap() + 1e-12
}

fn comparability_chain(rng: &mut ChaCha8Rng) -> f64 {
    let s: Vec<Spectrum> = (0..3).map(|_| step_spectrum(rng, 8)).collect();
    let c = |a: &Spectrum, b: &Spectrum| comparability_constant(a, b).unwrap();
    let c13 = c(&s[0], &s[2]);
    c(&s[0], &s[1]) * c(&s[1], &s[2]) - c13 + 1e-12 * c13
}

fn cross_method_agreement(rng: &mut ChaCha8Rng) -> f64 {
    let (s, d) = (sigma(rng), variable(rng));
    1e-9 - (norm(&s, &d) - sigma_norm_via_cdf(&s, &d).unwrap()).abs()
}

fn dual_l1_comparison(rng: &mut ChaCha8Rng) -> f64 {
    let (s, z) = (sigma(rng), variable(rng));
    dual(&z, &s) - z.lp_norm(1.0).unwrap() + 1e-12
}

fn dual_linf_comparison(rng: &mut ChaCha8Rng) -> f64 {
    let (s, z) = (sigma(rng), variable(rng));
    let top = z.lp_norm(f64::INFINITY).unwrap();
    dual(&z, &s) * s.lq_norm(f64::INFINITY).unwrap() - top + 1e-12 * (1.0 + top)
}

fn dual_lq_comparison(rng: &mut ChaCha8Rng) -> f64 {
    let q = rng.random_range(1.0..6.0);
    let (s, z) = (sigma(rng), variable(rng));
    let lhs = z.lp_norm(q).unwrap();
    dual(&z, &s) * s.lq_norm(q).unwrap() - lhs + 1e-12 * (1.0 + lhs)
}

fn dual_upper_bound(rng: &mut ChaCha8Rng) -> f64 {
    let (s, z) = (sigma(rng), variable(rng));
    let abs = z.abs_value();
    let step = s.as_step().unwrap();
    let mut points: Vec<f64> = abs.breakpoints()[..abs.len()].to_vec();
    points.extend_from_slice(&step.breakpoints()[..step.values().len()]);
    let mut bound: f64 = 0.0;
    for u in points {
        let (v, c) = (abs.quantile(u).unwrap(), s.density(u));
        bound = bound.max(if c > 0.0 {
            v / c
        } else if v > 0.0 {
            f64::INFINITY
        } else {
            0.0
        });
    }
    let d = dual(&z, &s);
    if bound.is_infinite() {
        return 1.0;
    }
    bound - d + 1e-12 * (1.0 + d)
}

fn dual_gauge_norm(rng: &mut ChaCha8Rng) -> f64 {
    let s = sigma(rng);
    let j = joint(rng, MAX_SEGMENTS);
    let (a, b) = (j.y_marginal(), j.z_marginal());
    let triangle = dual(&a, &s) + dual(&b, &s) - dual(&j.combine(|y, z| y + z), &s) + 1e-9;
    let t = rng.random_range(-4.0..4.0);
    let homogeneity = 1e-9 * (1.0 + dual(&a, &s)) - (dual(&a.scale(t), &s) - t.abs() * dual(&a, &s)).abs();
    let monotone = dual(&a.map(|v| 1.5 * v), &s) - dual(&a, &s) + 1e-12;
    triangle.min(homogeneity).min(monotone)
}

fn duality_holder(rng: &mut ChaCha8Rng) -> f64 {
    let s = sigma(rng);
    let j = joint(rng, MAX_SEGMENTS);
    norm(&s, &j.y_marginal()) * dual(&j.z_marginal(), &s) - j.pairing().abs() + 1e-9
}

fn embedding_inequality(rng: &mut ChaCha8Rng) -> f64 {
    let (s1, s2) = (sigma(rng), sigma(rng));
    let d = nonnegative_quantile(rng, MAX_SEGMENTS);
    comparability_constant(&s1, &s2).unwrap() * norm(&s1, &d) - norm(&s2, &d) + 1e-9
}

fn hahn_banach_attainment(rng: &mut ChaCha8Rng) -> f64 {
    let (s, d) = (sigma(rng), variable(rng));
    let w = hahn_banach_witness(&s, &d).unwrap();
    let attained = (w.pairing() - norm(&s, &d)).abs();
    let unit = (dual(&w.z_marginal(), &s) - 1.0).abs();
    1e-10 - attained.max(unit)
}

fn holder_bound(rng: &mut ChaCha8Rng) -> f64 {
    let q = [1.5, 2.0, 4.0][rng.random_range(0..3)];
    let p = q / (q - 1.0);
    let (s, d) = (sigma(rng), variable(rng));
    s.lq_norm(q).unwrap() * d.lp_norm(p).unwrap() - norm(&s, &d) + 1e-9
}

fn indicator_closed_form(rng: &mut ChaCha8Rng) -> f64 {
    let s = sigma(rng);
    let p_a: f64 = rng.random_range(0.01..1.0);
    let ind = StepQuantile::from_samples(&[0.0, 1.0], Some(&[1.0 - p_a, p_a])).unwrap();
    let closed = indicator_dual_norm(&s, p_a).unwrap();
    let agree = 1e-12 - (closed - dual(&ind, &s)).abs();
    agree.min(closed - p_a + 1e-12).min(1.0 - closed + 1e-12)
}

fn kusuoka_mixture_identity(rng: &mut ChaCha8Rng) -> f64 {
    let (s, d) = (sigma(rng), variable(rng));
    let mu = mu_from_sigma(&s).unwrap();
    1e-10 - (mixture_risk(&mu, &d) - risk(&s, &d)).abs()
}

fn kusuoka_round_trip(rng: &mut ChaCha8Rng) -> f64 {
    let s = sigma(rng);
    let back = sigma_from_mu(&mu_from_sigma(&s).unwrap()).unwrap();
    let worst = s
        .as_step()
        .unwrap()
        .breakpoints()
        .iter()
        .map(|&a| (back.tail_weight(a).unwrap() - s.tail_weight(a).unwrap()).abs())
        .fold(0.0, f64::max);
    1e-10 - worst
}

fn lipschitz_continuity(rng: &mut ChaCha8Rng) -> f64 {
    let s = sigma(rng);
    let j = joint(rng, MAX_SEGMENTS);
    let gap = (risk(&s, &j.z_marginal()) - risk(&s, &j.y_marginal())).abs();
    norm(&s, &j.combine(|y, z| z - y)) - gap + 1e-9
}

fn lp_monotone_in_p(rng: &mut ChaCha8Rng) -> f64 {
    let d = variable(rng);
    let p1 = rng.random_range(1.0..8.0);
    let p2 = p1 + rng.random_range(0.0..8.0);
    d.lp_norm(p2).unwrap() - d.lp_norm(p1).unwrap() + 1e-12
}

fn lq_monotone_in_q(rng: &mut ChaCha8Rng) -> f64 {
    let s = sigma(rng);
    let q1 = rng.random_range(1.0..8.0);
    let q2 = q1 + rng.random_range(0.0..8.0);
    s.lq_norm(q2).unwrap() - s.lq_norm(q1).unwrap() + 1e-12
}

fn monotonicity_axiom(rng: &mut ChaCha8Rng) -> f64 {
    let (s, d) = (sigma(rng), variable(rng));
    let bump = rng.random_range(0.0..2.0);
    let up = d.map(|v| v + bump * (1.0 + v.abs()));
    risk(&s, &up) - risk(&s, &d) + 1e-12
}

fn positive_homogeneity(rng: &mut ChaCha8Rng) -> f64 {
    let (s, d) = (sigma(rng), variable(rng));
    let lambda = rng.random_range(0.01..10.0);
    let base = risk(&s, &d);
    1e-12 * (1.0 + (lambda * base).abs()) - (risk(&s, &d.scale(lambda)) - lambda * base).abs()
}

fn quantile_monotone(rng: &mut ChaCha8Rng) -> f64 {
    let d = variable(rng);
    let u = &d.breakpoints()[..d.len()];
    u.windows(2)
        .map(|w| d.quantile(w[1]).unwrap() - d.quantile(w[0]).unwrap())
        .fold(f64::INFINITY, f64::min)
        .min(1.0)
}

fn representation_supremum(rng: &mut ChaCha8Rng) -> f64 {
    let (s, d) = (sigma(rng), variable(rng));
    let seed = rng.random();
    let c = representation_sup_check(&s, &d, seed).unwrap();
    let pair = comonotone_pair(&d, &s).unwrap().pairing();
    let sup_margin = c.report.value + 1e-12 - c.max_shuffled.max(c.antitone);
    sup_margin.min(1e-12 - c.report.residual).min(1e-12 - (pair - risk(&s, &d)).abs())
}

fn self_dual_spectrum(rng: &mut ChaCha8Rng) -> f64 {
    let s = sigma(rng);
    let step = s.as_step().unwrap();
    let z = StepQuantile::from_parts(step.breakpoints(), step.values()).unwrap();
    1e-9 - (dual(&z, &s) - 1.0).abs()
}

fn semideviation_bound(rng: &mut ChaCha8Rng) -> f64 {
    let d = nonnegative_quantile(rng, MAX_SEGMENTS);
    let p = rng.random_range(1.0..6.0);
    let lambda = rng.random_range(0.01..=1.0);
    let s = semideviation(&d, p, lambda).unwrap();
    s.bound - s.value + 1e-12 * (1.0 + s.bound)
}

fn set_norm_bounds(rng: &mut ChaCha8Rng) -> f64 {
    let count = rng.random_range(1..5);
    let set = SpectrumSet::new((0..count).map(|_| step_spectrum(rng, 8)).collect()).unwrap();
    let d = variable(rng);
    let v = set_norm(&set, &d);
    (v - d.lp_norm(1.0).unwrap() + 1e-12).min(d.lp_norm(f64::INFINITY).unwrap() - v + 1e-12)
}

fn step_density_error(rng: &mut ChaCha8Rng) -> f64 {
    let (s, d) = (sigma(rng), variable(rng));
    let eps = [0.1, 0.01][rng.random_range(0..2)];
    match step_density_approx(&s, &d, eps) {
        Ok(a) => eps - a.error,
        Err(_) => -eps,
    }
}

fn subadditivity(rng: &mut ChaCha8Rng) -> f64 {
    let s = sigma(rng);
    let j = joint(rng, MAX_SEGMENTS);
    norm(&s, &j.y_marginal()) + norm(&s, &j.z_marginal()) - norm(&s, &j.combine(|y, z| y + z)) + 1e-9
}

fn sup_risk_dominance(rng: &mut ChaCha8Rng) -> f64 {
    let count = rng.random_range(1..6);
    let set = SpectrumSet::new((0..count).map(|_| step_spectrum(rng, 8)).collect()).unwrap();
    let d = variable(rng);
    let (best, _) = sup_risk(&set, &d);
    set.members().iter().map(|s| best - risk(s, &d)).fold(f64::INFINITY, f64::min)
}

fn tail_concavity(rng: &mut ChaCha8Rng) -> f64 {
    let s = sigma(rng);
    let step = s.as_step().unwrap();
    let mut points: Vec<f64> = step.breakpoints().to_vec();
    points.extend((0..32).map(|_| rng.random_range(0.0..1.0)));
    points.sort_by(f64::total_cmp);
    let t = |a: f64| s.tail_weight(a).unwrap();
    let mut margin = f64::INFINITY;
    for w in points.windows(3) {
        if w[2] - w[0] > 1e-12 {
            let interp = t(w[0]) + (t(w[2]) - t(w[0])) * (w[1] - w[0]) / (w[2] - w[0]);
            margin = margin.min(t(w[1]) - interp + 1e-12);
        }
    }
    for &a in &step.breakpoints()[..step.values().len()] {
        margin = margin.min(t(a) / (1.0 - a) - 1.0 + 1e-12);
    }
    margin
}

fn translation_equivariance(rng: &mut ChaCha8Rng) -> f64 {
    let (s, d) = (sigma(rng), variable(rng));
    let c = rng.random_range(-10.0..10.0);
    1e-12 - (risk(&s, &d.shift(c)) - risk(&s, &d) - c).abs()
}

const ROSTER: &[Invariant] = &[
    Invariant { id: "abs_value_mass", anchor: "|Y| has total mass 1 and nonnegative values", check: abs_value_mass },
    Invariant { id: "avar_sandwich", anchor: "AVaR_a1(|Y|) ≤ AVaR_a2(|Y|) ≤ (1-a1)/(1-a2) AVaR_a1(|Y|)", check: avar_sandwich },
    Invariant { id: "chebyshev_bound", anchor: "‖Y‖_1 ≤ ‖Y‖_σ", check: chebyshev_bound },
    Invariant { id: "comparability_chain", anchor: "c(σ1,σ3) ≤ c(σ1,σ2) c(σ2,σ3)", check: comparability_chain },
    Invariant { id: "cross_method_agreement", anchor: "ρ_σ(|Y|) = ∫_0^∞ S(F_|Y|(y)) dy", check: cross_method_agreement },
    Invariant { id: "dual_gauge_norm", anchor: "‖·‖_σ* is a monotone absolutely homogeneous gauge", check: dual_gauge_norm },
    Invariant { id: "dual_l1_comparison", anchor: "‖Z‖_1 ≤ ‖Z‖_σ*", check: dual_l1_comparison },
    Invariant { id: "dual_linf_comparison", anchor: "‖Z‖_∞ ≤ ‖Z‖_σ* ‖σ‖_∞", check: dual_linf_comparison },
    Invariant { id: "dual_lq_comparison", anchor: "‖Z‖_q ≤ ‖Z‖_σ* ‖σ‖_q", check: dual_lq_comparison },
    Invariant { id: "dual_upper_bound", anchor: "‖Z‖_σ* ≤ sup_u F_|Z|^{-1}(u) / σ(u)", check: dual_upper_bound },
    Invariant { id: "duality_holder", anchor: "|E[YZ]| ≤ ‖Y‖_σ ‖Z‖_σ*", check: duality_holder },
    Invariant { id: "embedding_inequality", anchor: "‖Y‖_σ2 ≤ sup_α S2(α)/S1(α) · ‖Y‖_σ1", check: embedding_inequality },
    Invariant { id: "hahn_banach_attainment", anchor: "E[Y sign(Y) σ(U)] = ‖Y‖_σ and ‖σ(U)‖_σ* = 1", check: hahn_banach_attainment },
    Invariant { id: "holder_bound", anchor: "‖Y‖_σ ≤ ‖σ‖_q ‖Y‖_p, 1/p + 1/q = 1", check: holder_bound },
    Invariant { id: "indicator_closed_form", anchor: "‖1_A‖_σ* = P(A) / S(1 - P(A)) ∈ [P(A), 1]", check: indicator_closed_form },
    Invariant { id: "kusuoka_mixture_identity", anchor: "ρ_σ(Y) = ∫ AVaR_α(Y) dμ_σ(α)", check: kusuoka_mixture_identity },
    Invariant { id: "kusuoka_round_trip", anchor: "σ_μ for μ = μ_σ has the tail weight of σ", check: kusuoka_round_trip },
    Invariant { id: "lipschitz_continuity", anchor: "|ρ_σ(Y2) - ρ_σ(Y1)| ≤ ‖Y2 - Y1‖_σ", check: lipschitz_continuity },
    Invariant { id: "lp_monotone_in_p", anchor: "p1 ≤ p2 ⇒ ‖Y‖_p1 ≤ ‖Y‖_p2", check: lp_monotone_in_p },
    Invariant { id: "lq_monotone_in_q", anchor: "q1 ≤ q2 ⇒ ‖σ‖_q1 ≤ ‖σ‖_q2", check: lq_monotone_in_q },
    Invariant { id: "monotonicity_axiom", anchor: "Y1 ≤ Y2 ⇒ ρ_σ(Y1) ≤ ρ_σ(Y2)", check: monotonicity_axiom },
    Invariant { id: "positive_homogeneity", anchor: "ρ_σ(λY) = λ ρ_σ(Y), λ > 0", check: positive_homogeneity },
    Invariant { id: "quantile_monotone", anchor: "p ↦ F^{-1}(p) is nondecreasing", check: quantile_monotone },
    Invariant { id: "representation_supremum", anchor: "ρ_σ(Y) = sup E[Y σ(U)], attained comonotonically", check: representation_supremum },
    Invariant { id: "self_dual_spectrum", anchor: "‖σ(U)‖_σ* = 1", check: self_dual_spectrum },
    Invariant { id: "semideviation_bound", anchor: "E Y + λ‖(Y - E Y)_+‖_p ≤ (1 + λ)‖Y‖_p for Y ≥ 0", check: semideviation_bound },
    Invariant { id: "set_norm_bounds", anchor: "‖Y‖_1 ≤ ‖Y‖_S ≤ ‖Y‖_∞", check: set_norm_bounds },
    Invariant { id: "step_density_approx", anchor: "‖Y - s(U)‖_σ < ε for a finite step s", check: step_density_error },
    Invariant { id: "subadditivity", anchor: "‖Y1 + Y2‖_σ ≤ ‖Y1‖_σ + ‖Y2‖_σ", check: subadditivity },
    Invariant { id: "sup_risk_dominance", anchor: "ρ_S(Y) ≥ ρ_σ(Y) for σ ∈ S", check: sup_risk_dominance },
    Invariant { id: "tail_concavity", anchor: "S concave and S(α)/(1-α) ≥ 1", check: tail_concavity },
    Invariant { id: "translation_equivariance", anchor: "ρ_σ(Y + c) = ρ_σ(Y) + c", check: translation_equivariance },
];

/// Ids of every invariant in the suite, sorted.
pub fn invariant_ids() -> Vec<&'static str> {
    let mut ids: Vec<&'static str> = ROSTER.iter().map(|i| i.id).collect();
    ids.sort_unstable();
    ids
}

fn stream_seed(seed: u64, id: &str) -> u64 {
    // FNV-1a over the id, mixed with the suite seed
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in id.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h ^ seed.rotate_left(17)
}

/// Runs every invariant on `cases` seeded instances.
pub fn run_suite(seed: u64, cases: usize) -> SuiteReport {
    let mut invariants: Vec<InvariantResult> = ROSTER
        .iter()
        .map(|inv| {
            let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(seed, inv.id));
            let mut result = InvariantResult {
                id: inv.id,
                anchor: inv.anchor,
                passed: 0,
                failed: 0,
                worst_margin: f64::INFINITY,
                worst_case: 0,
            };
            for case in 0..cases {
                let margin = (inv.check)(&mut rng);
                if margin >= 0.0 {
                    result.passed += 1;
                } else {
                    result.failed += 1;
                }
                if margin < result.worst_margin || margin.is_nan() {
                    result.worst_margin = margin;
                    result.worst_case = case;
                }
            }
            result
        })
        .collect();
    invariants.sort_by(|a, b| a.id.cmp(b.id));
    SuiteReport {
        seed,
        cases,
        failures: invariants.iter().map(|r| r.failed).sum(),
        invariants,
    }
}
