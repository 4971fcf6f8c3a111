//! File formats: CSV samples, spectrum JSON and Kusuoka measure JSON.
//!
//! Samples are one observation per row, `value` or `value,weight`, with an
//! optional header detected by a non-numeric first row. Spectra are JSON
//! objects tagged by `kind`:
//!
//! ```json
//! {"kind": "avar", "alpha": 0.5}
//! {"kind": "power_sqrt"}
//! {"kind": "step", "breakpoints": [0, 0.5, 1], "values": [0, 2]}
//! ```
//!
//! Measures are `{"atoms": [[alpha, weight], ...]}`.

use std::fs;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::distmodel::StepQuantile;
use crate::error::{Error, Result};
use crate::kusuoka::KusuokaMeasure;
use crate::spectrum::Spectrum;

/// Serialized form of a [`Spectrum`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpectrumSpec {
    Avar { alpha: f64 },
    PowerSqrt,
    Step { breakpoints: Vec<f64>, values: Vec<f64> },
}

impl SpectrumSpec {
    pub fn build(&self) -> Result<Spectrum> {
        match self {
            SpectrumSpec::Avar { alpha } => Spectrum::avar(*alpha),
            SpectrumSpec::PowerSqrt => Ok(Spectrum::power_sqrt()),
            SpectrumSpec::Step { breakpoints, values } => Spectrum::step(breakpoints.clone(), values.clone()),
        }
    }

    /// The file form of `sigma`; general spectra have none.
    pub fn from_spectrum(sigma: &Spectrum) -> Option<Self> {
        match sigma {
            Spectrum::Avar(alpha) => Some(SpectrumSpec::Avar { alpha: *alpha }),
            Spectrum::PowerSqrt => Some(SpectrumSpec::PowerSqrt),
            Spectrum::Step(s) => Some(SpectrumSpec::Step {
                breakpoints: s.breakpoints().to_vec(),
                values: s.values().to_vec(),
            }),
            Spectrum::General(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureSpec {
    pub atoms: Vec<(f64, f64)>,
}

fn json_error(e: serde_json::Error) -> Error {
    Error::Parse {
        line: e.line() as u64,
        message: e.to_string(),
    }
}

/// Parses a spectrum document and validates the result.
pub fn parse_spectrum(text: &str) -> Result<Spectrum> {
    let spec: SpectrumSpec = serde_json::from_str(text).map_err(json_error)?;
    let sigma = spec.build()?;
    sigma.ensure_valid()?;
    Ok(sigma)
}

pub fn read_spectrum(path: impl AsRef<Path>) -> Result<Spectrum> {
    parse_spectrum(&fs::read_to_string(path)?)
}

pub fn parse_measure(text: &str) -> Result<KusuokaMeasure> {
    let spec: MeasureSpec = serde_json::from_str(text).map_err(json_error)?;
    KusuokaMeasure::new(spec.atoms)
}

pub fn read_measure(path: impl AsRef<Path>) -> Result<KusuokaMeasure> {
    parse_measure(&fs::read_to_string(path)?)
}

/// Reads `value` or `value,weight` rows. A first row that does not parse
/// as numbers is taken as a header.
pub fn parse_samples(reader: impl Read) -> Result<StepQuantile> {
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);
    let mut values = Vec::new();
    let mut weights = Vec::new();
    let mut weighted: Option<bool> = None;
    for (row, record) in csv.records().enumerate() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(row as u64 + 1, |p| p.line());
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        let fields: Vec<&str> = record.iter().collect();
        let parsed: std::result::Result<Vec<f64>, _> = fields.iter().map(|f| f.parse::<f64>()).collect();
        let numbers = match parsed {
            Ok(n) => n,
            Err(_) if values.is_empty() && weighted.is_none() => {
                weighted = Some(fields.len() == 2);
                continue;
            }
            Err(e) => {
                return Err(Error::Parse {
                    line,
                    message: format!("expected numbers, found {:?}: {e}", record.as_slice()),
                })
            }
        };
        if numbers.len() > 2 {
            return Err(Error::Parse {
                line,
                message: format!("expected `value` or `value,weight`, found {} fields", numbers.len()),
            });
        }
        let has_weight = numbers.len() == 2;
        match weighted {
            Some(w) if w != has_weight && !values.is_empty() => {
                return Err(Error::Parse {
                    line,
                    message: "rows mix weighted and unweighted observations".into(),
                })
            }
            _ => weighted = Some(has_weight),
        }
        if let Some(bad) = numbers.iter().find(|x| !x.is_finite()) {
            return Err(Error::Parse {
                line,
                message: format!("non-finite entry {bad}"),
            });
        }
        values.push(numbers[0]);
        if has_weight {
            if numbers[1] <= 0.0 {
                return Err(Error::Parse {
                    line,
                    message: format!("weight {} is not positive", numbers[1]),
                });
            }
            weights.push(numbers[1]);
        }
    }
    if values.is_empty() {
        return Err(Error::Empty);
    }
    StepQuantile::from_samples(&values, (weighted == Some(true)).then_some(&weights[..]))
}

pub fn read_samples(path: impl AsRef<Path>) -> Result<StepQuantile> {
    parse_samples(fs::File::open(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spectrum_documents() {
        assert!(matches!(parse_spectrum(r#"{"kind":"avar","alpha":0.5}"#).unwrap(), Spectrum::Avar(a) if a == 0.5));
        assert!(matches!(parse_spectrum(r#"{"kind":"power_sqrt"}"#).unwrap(), Spectrum::PowerSqrt));
        let s = parse_spectrum(r#"{"kind":"step","breakpoints":[0,0.5,1],"values":[0,2]}"#).unwrap();
        assert_eq!(s.as_step().unwrap().values(), &[0.0, 2.0]);
        assert!(parse_spectrum(r#"{"kind":"step","breakpoints":[0,1],"values":[0,2]}"#).is_err());
        assert!(parse_spectrum(r#"{"kind":"step","breakpoints":[0,0.5,1],"values":[2,0]}"#).is_err());
        let err = parse_spectrum("{\n\"kind\": \"avar\",\n\"alpha\": }").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        let spec = SpectrumSpec::from_spectrum(&Spectrum::avar(0.25).unwrap()).unwrap();
        assert_eq!(serde_json::to_string(&spec).unwrap(), r#"{"kind":"avar","alpha":0.25}"#);
    }

    #[test]
    fn measure_documents() {
        let mu = parse_measure(r#"{"atoms":[[0.5,1.0]]}"#).unwrap();
        assert_eq!(mu.atoms(), &[(0.5, 1.0)]);
        assert!(parse_measure(r#"{"atoms":[[0.5,0.7]]}"#).is_err());
        assert!(parse_measure(r#"{"atoms":[]}"#).is_err());
    }

    #[test]
    fn csv_samples() {
        let d = parse_samples("4\n1\n3\n2\n".as_bytes()).unwrap();
        assert_eq!(d.values(), &[1.0, 2.0, 3.0, 4.0]);
        let d = parse_samples("value,weight\r\n1,1\r\n2,3\r\n".as_bytes()).unwrap();
        assert_eq!(d.breakpoints(), &[0.0, 0.25, 1.0]);
        let d = parse_samples("loss\n2\n\n5\n".as_bytes()).unwrap();
        assert_eq!(d.values(), &[2.0, 5.0]);
        let err = parse_samples("1\n2\nabc\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        let err = parse_samples("1,1\n2,-1\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        assert!(parse_samples("1,1\n2\n".as_bytes()).is_err());
        assert!(matches!(parse_samples("value\n".as_bytes()), Err(Error::Empty)));
    }
}
