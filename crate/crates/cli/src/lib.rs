//! Command-line frontend for the `riskspace` library.
//!
//! Every invocation prints one JSON document on standard output and
//! diagnostics on standard error. Exit codes: 0 success, 1 a property or
//! dominance violation, 2 a usage or input error.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use riskspace::extremal::{self, DyadicPareto, Truncatable};
use riskspace::io::{self, MeasureSpec, SpectrumSpec};
use riskspace::kusuoka::{self, SpectrumSet};
use riskspace::riskcore::{self, EvalMethod};
use riskspace::{dualspace, embed, Error, Spectrum};

mod verify;

pub use verify::{invariant_ids, run_suite, InvariantResult, SuiteReport};

/// Exit code for a successful run.
pub const EXIT_OK: u8 = 0;
/// Exit code when a checked property or dominance relation fails.
pub const EXIT_VIOLATION: u8 = 1;
/// Exit code for usage errors and unreadable or malformed input.
pub const EXIT_INPUT: u8 = 2;

#[derive(Debug, Parser)]
#[command(name = "riskspace", version, about = "Spectral risk measures, their norms and dual norms on step inputs")]
struct Cli {
    /// Tolerance for cross-method residuals.
    #[arg(long, global = true, default_value_t = 1e-9)]
    tol: f64,
    /// Seed for randomized checks.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Pretty-print the JSON output with this many spaces.
    #[arg(long, global = true)]
    json_indent: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Inputs {
    /// Spectrum JSON file.
    #[arg(long)]
    spectrum: PathBuf,
    /// CSV file of `value` or `value,weight` rows.
    #[arg(long)]
    samples: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MethodArg {
    Quantile,
    Cdf,
    Both,
    Comonotone,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum EscapeMode {
    Lp,
    Linf,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Spectral risk of a sample (or its norm with --norm).
    Eval {
        #[command(flatten)]
        inputs: Inputs,
        /// Evaluate ‖Y‖_σ = ρ_σ(|Y|) instead of ρ_σ(Y).
        #[arg(long)]
        norm: bool,
        #[arg(long, value_enum, default_value = "quantile")]
        method: MethodArg,
    },
    /// The associated norm ‖Y‖_σ.
    Norm {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long, value_enum, default_value = "both")]
        method: MethodArg,
    },
    /// The dual gauge norm ‖Z‖_σ*.
    DualNorm {
        #[command(flatten)]
        inputs: Inputs,
    },
    /// Checks the dominance relation |Z| ≼ ησ.
    Dominate {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long, default_value_t = 1.0)]
        eta: f64,
    },
    /// Conversions between step spectra and Kusuoka measures.
    Kusuoka {
        #[command(subcommand)]
        direction: KusuokaCommand,
    },
    /// Comparability constant between two spectra or two spectrum sets.
    Embed {
        #[arg(long, requires = "to", conflicts_with_all = ["set_from", "set_to"])]
        from: Option<PathBuf>,
        #[arg(long, requires = "from")]
        to: Option<PathBuf>,
        /// Directory of spectrum JSON files.
        #[arg(long, requires = "set_to")]
        set_from: Option<PathBuf>,
        #[arg(long, requires = "set_from")]
        set_to: Option<PathBuf>,
    },
    /// Variables in L_σ outside L^p (lp) or outside L^∞ (linf).
    Escape {
        #[arg(long)]
        spectrum: PathBuf,
        #[arg(long, default_value_t = 1.5)]
        q: f64,
        #[arg(long, default_value_t = 40)]
        depth: u32,
        #[arg(long, value_enum, default_value = "lp")]
        mode: EscapeMode,
    },
    /// Truncations min(n, |Y|) of a variable with infinite mean.
    Diverge {
        #[arg(long)]
        spectrum: PathBuf,
        #[arg(long, default_value_t = 10.0)]
        target: f64,
        /// Use this (bounded) sample instead of the dyadic 1/(1-u) variable.
        #[arg(long)]
        samples: Option<PathBuf>,
    },
    /// Step approximation of a sample to accuracy ε in ‖·‖_σ.
    Approx {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long)]
        eps: f64,
    },
    /// Runs the seeded property suite.
    Verify {
        #[arg(long, default_value_t = 500)]
        cases: usize,
    },
}

#[derive(Debug, Subcommand)]
enum KusuokaCommand {
    /// Kusuoka measure of a step spectrum.
    ToMeasure {
        #[arg(long)]
        spectrum: PathBuf,
    },
    /// Spectrum of a measure without an atom at 1.
    ToSpectrum {
        #[arg(long)]
        measure: PathBuf,
    },
}

/// JSON number, with non-finite values written as the strings `"inf"`,
/// `"-inf"` and `"nan"`.
pub fn number(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else if x.is_nan() {
        json!("nan")
    } else if x > 0.0 {
        json!("inf")
    } else {
        json!("-inf")
    }
}

fn numbers(xs: &[f64]) -> Value {
    Value::Array(xs.iter().map(|&x| number(x)).collect())
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Stalled(_) | Error::RootFinding(_) => EXIT_VIOLATION,
            _ => EXIT_INPUT,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn with_path<T>(path: &Path, r: riskspace::Result<T>) -> Result<T, Failure> {
    r.map_err(|e| {
        let mut f = Failure::from(e);
        f.message = format!("{}: {}", path.display(), f.message);
        f
    })
}

struct Outcome {
    document: Value,
    code: u8,
}

impl Outcome {
    fn ok(document: Value) -> Self {
        Self { document, code: EXIT_OK }
    }

    fn checked(document: Value, holds: bool) -> Self {
        Self {
            document,
            code: if holds { EXIT_OK } else { EXIT_VIOLATION },
        }
    }
}

fn read_set(dir: &Path) -> Result<SpectrumSet, Failure> {
    let entries = fs::read_dir(dir).map_err(|e| Failure {
        code: EXIT_INPUT,
        message: format!("{}: {e}", dir.display()),
    })?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    let mut members = Vec::with_capacity(paths.len());
    for p in &paths {
        members.push(with_path(p, io::read_spectrum(p))?);
    }
    with_path(dir, SpectrumSet::new(members))
}

fn report(r: &riskcore::RiskReport) -> Value {
    json!({
        "value": number(r.value),
        "method": r.method,
        "residual": number(r.residual),
    })
}

fn eval(sigma: &Spectrum, inputs: &Inputs, norm: bool, method: MethodArg, tol: f64) -> Result<Outcome, Failure> {
    let d = with_path(&inputs.samples, io::read_samples(&inputs.samples))?;
    let m = match method {
        MethodArg::Quantile | MethodArg::Both => EvalMethod::QuantileIntegral,
        MethodArg::Cdf => EvalMethod::CdfTailIntegral,
        MethodArg::Comonotone => EvalMethod::ComonotoneSup,
    };
    let r = riskcore::evaluate(sigma, &d, m, norm)?;
    let holds = !matches!(method, MethodArg::Both) || r.residual <= tol;
    Ok(Outcome::checked(report(&r), holds))
}

fn dispatch(cli: &Cli) -> Result<Outcome, Failure> {
    let spectrum = |p: &Path| with_path(p, io::read_spectrum(p));
    let samples = |p: &Path| with_path(p, io::read_samples(p));
    match &cli.command {
        Command::Eval { inputs, norm, method } => eval(&spectrum(&inputs.spectrum)?, inputs, *norm, *method, cli.tol),
        Command::Norm { inputs, method } => eval(&spectrum(&inputs.spectrum)?, inputs, true, *method, cli.tol),
        Command::DualNorm { inputs } => {
            let sigma = spectrum(&inputs.spectrum)?;
            let z = samples(&inputs.samples)?;
            let v = dualspace::dual_norm(&z, &sigma)?;
            Ok(Outcome::ok(json!({
                "value": number(v.value),
                "attaining_alpha": number(v.attaining_alpha),
                "limit_verified": v.limit_verified,
            })))
        }
        Command::Dominate { inputs, eta } => {
            let sigma = spectrum(&inputs.spectrum)?;
            let z = samples(&inputs.samples)?;
            let c = dualspace::dominates(&z, &sigma, *eta)?;
            Ok(Outcome::checked(
                json!({
                    "holds": c.holds,
                    "witness_alpha": number(c.witness_alpha),
                    "margin": number(c.margin),
                    "eta": number(*eta),
                }),
                c.holds,
            ))
        }
        Command::Kusuoka { direction } => match direction {
            KusuokaCommand::ToMeasure { spectrum: path } => {
                let mu = with_path(path, kusuoka::mu_from_sigma(&spectrum(path)?))?;
                let spec = MeasureSpec {
                    atoms: mu.atoms().to_vec(),
                };
                Ok(Outcome::ok(serde_json::to_value(spec).expect("finite atoms serialize")))
            }
            KusuokaCommand::ToSpectrum { measure } => {
                let mu = with_path(measure, io::read_measure(measure))?;
                let sigma = with_path(measure, kusuoka::sigma_from_mu(&mu))?;
                let spec = SpectrumSpec::from_spectrum(&sigma).expect("step spectra have a file form");
                Ok(Outcome::ok(serde_json::to_value(spec).expect("finite spectra serialize")))
            }
        },
        Command::Embed {
            from,
            to,
            set_from,
            set_to,
        } => match (from, to, set_from, set_to) {
            (Some(a), Some(b), _, _) => {
                let (s1, s2) = (spectrum(a)?, spectrum(b)?);
                let c = embed::comparability_constant(&s1, &s2)?;
                Ok(Outcome::ok(json!({
                    "constant": number(c),
                    "from": s1.label(),
                    "to": s2.label(),
                })))
            }
            (_, _, Some(a), Some(b)) => {
                let (s1, s2) = (read_set(a)?, read_set(b)?);
                let c = embed::identity_norm(&s1, &s2)?;
                Ok(Outcome::ok(json!({
                    "constant": number(c),
                    "from_size": s1.members().len(),
                    "to_size": s2.members().len(),
                })))
            }
            _ => Err(Failure {
                code: EXIT_INPUT,
                message: "embed needs --from/--to or --set-from/--set-to".into(),
            }),
        },
        Command::Escape {
            spectrum: path,
            q,
            depth,
            mode,
        } => {
            let sigma = spectrum(path)?;
            match mode {
                EscapeMode::Lp => escape_lp(&sigma, *q, *depth),
                EscapeMode::Linf => {
                    let e = extremal::linf_escape(&sigma, *depth)?;
                    Ok(Outcome::checked(
                        json!({
                            "mode": "linf",
                            "depth": depth,
                            "risk": number(e.risk),
                            "bound": number(e.bound),
                            "esssup": number(e.esssup),
                            "radii": numbers(&e.radii),
                        }),
                        e.risk <= e.bound && e.esssup == *depth as f64,
                    ))
                }
            }
        }
        Command::Diverge {
            spectrum: path,
            target,
            samples: sample_path,
        } => {
            let sigma = spectrum(path)?;
            let bounded = match sample_path {
                Some(p) => Some(samples(p)?),
                None => None,
            };
            let heavy: &dyn Truncatable = match &bounded {
                Some(d) => d,
                None => &DyadicPareto,
            };
            let demo = extremal::l1_divergence_demo(heavy, &sigma, *target)?;
            let rows: Vec<Value> = demo
                .rows
                .iter()
                .map(|r| {
                    json!({
                        "level": number(r.level),
                        "l1": number(r.l1),
                        "sigma_norm": number(r.sigma_norm),
                        "chebyshev": r.chebyshev,
                    })
                })
                .collect();
            let holds = demo.rows.iter().all(|r| r.chebyshev);
            Ok(Outcome::checked(
                json!({
                    "target": number(demo.target),
                    "exceeded": demo.exceeded,
                    "vacuous": demo.vacuous,
                    "rows": rows,
                }),
                holds,
            ))
        }
        Command::Approx { inputs, eps } => {
            let sigma = spectrum(&inputs.spectrum)?;
            let d = samples(&inputs.samples)?;
            let a = extremal::step_density_approx(&sigma, &d, *eps)?;
            Ok(Outcome::ok(json!({
                "eps": number(*eps),
                "error": number(a.error),
                "steps": a.steps,
                "lower_clip": number(a.lower_clip),
                "upper_clip": number(a.upper_clip),
                "breakpoints": numbers(a.step.breakpoints()),
                "values": numbers(a.step.values()),
            })))
        }
        Command::Verify { cases } => {
            if *cases == 0 {
                return Err(Failure {
                    code: EXIT_INPUT,
                    message: "--cases must be at least 1".into(),
                });
            }
            let report = run_suite(cli.seed.unwrap_or(0), *cases);
            let failures = report.failures;
            Ok(Outcome::checked(report.to_json(), failures == 0))
        }
    }
}

fn escape_lp(sigma: &Spectrum, q: f64, depth: u32) -> Result<Outcome, Failure> {
    let e = extremal::lp_escape(sigma, q, depth as u64)?;
    let truncation_risk = e.truncation_risk();
    let (mut risk, mut pow) = (0.0, 0.0);
    let bands: Vec<Value> = e
        .bands
        .iter()
        .map(|b| {
            let n = b.n as f64;
            risk += n * b.mass;
            pow += n.powf(e.p) * b.mass;
            json!({
                "n": b.n,
                "r_hi": number(b.r_hi),
                "r_lo": number(b.r_lo),
                "mass": number(b.mass),
                "risk": number(risk),
                "lp_partial_pow": number(pow),
            })
        })
        .collect();
    let holds = truncation_risk <= e.limit_risk + 1e-6;
    Ok(Outcome::checked(
        json!({
            "mode": "lp",
            "q": number(e.q),
            "p": number(e.p),
            "norm_pow": number(e.norm_pow),
            "scale": number(e.scale),
            "limit_risk": number(e.limit_risk),
            "predicted_risk": number(e.predicted_risk),
            "truncation_risk": number(truncation_risk),
            "lp_partial_pow": number(e.lp_partial_pow),
            "bands": bands,
        }),
        holds,
    ))
}

fn render(value: &Value, indent: Option<usize>) -> String {
    match indent {
        None => value.to_string(),
        Some(n) => {
            let pad = vec![b' '; n];
            let mut out = Vec::new();
            let formatter = serde_json::ser::PrettyFormatter::with_indent(&pad);
            let mut ser = serde_json::Serializer::with_formatter(&mut out, formatter);
            value.serialize(&mut ser).expect("JSON values serialize");
            String::from_utf8(out).expect("serde_json writes UTF-8")
        }
    }
}

/// Parses `args` (including the program name), runs the command and
/// returns the exit code.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(&cli) {
        Ok(outcome) => {
            let mut stdout = std::io::stdout().lock();
            let _ = writeln!(stdout, "{}", render(&outcome.document, cli.json_indent));
            outcome.code
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}
