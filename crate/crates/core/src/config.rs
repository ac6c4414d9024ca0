//! Plain-text propagator definitions.
//!
//! ```text
//! # a named family
//! [family]
//! name = bda
//! t1 = 0.27564
//! alpha = 0.171438
//! ```
//!
//! or an explicit sequence, one step per row:
//!
//! ```text
//! [steps]
//! label = my-pa
//! V 0.5
//! T 1
//! V 0.5
//! ```

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::propagator::{presets, ContractedPropagator, FamilyParams, Step, StepSequence};

/// Optional family parameters as given on the command line or in a file.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ParamOverrides {
    pub alpha: Option<f64>,
    pub t0: Option<f64>,
    pub t1: Option<f64>,
    pub a1: Option<f64>,
}

impl ParamOverrides {
    fn given(&self) -> Vec<&'static str> {
        [("alpha", self.alpha), ("t0", self.t0), ("t1", self.t1), ("a1", self.a1)]
            .into_iter()
            .filter_map(|(k, v)| v.map(|_| k))
            .collect()
    }
}

fn require(v: Option<f64>, name: &str, family: &str) -> Result<f64> {
    v.ok_or_else(|| Error::InvalidArgument(format!("family {family} needs {name}")))
}

/// Resolves a family or preset name plus overrides into parameters and a label.
///
/// Presets (`ti`, `bd*`, `ca1`, ...) supply defaults that overrides replace;
/// the bare families `bda` and `acb` need both of their parameters.
pub fn resolve_family(name: &str, ov: ParamOverrides) -> Result<(String, FamilyParams)> {
    let key = name.trim().to_ascii_lowercase();
    let base = match key.as_str() {
        "pa_ti" | "pati" | "pa-ti" => Some(FamilyParams::PaTi { alpha: 0.0 }),
        "foura" | "4a_family" => Some(FamilyParams::FourA { alpha: 0.0 }),
        "bda" => Some(FamilyParams::Bda {
            t1: require(ov.t1, "t1", "bda")?,
            alpha: require(ov.alpha, "alpha", "bda")?,
        }),
        "acb" | "ca" => Some(FamilyParams::Acb {
            t0: require(ov.t0, "t0", "acb")?,
            a1: require(ov.a1, "a1", "acb")?,
        }),
        _ => None,
    };
    let (label, start) = match base {
        Some(p) => (None, p),
        None => match presets::by_name(&key) {
            Some((label, p)) => (Some(label.to_string()), p),
            None => {
                return Err(Error::InvalidArgument(format!(
                    "unknown family {name:?}; expected pa_ti, 4a, bda, acb, exact or one of {}",
                    presets::NAMES.join(", ")
                )))
            }
        },
    };
    let bad = |k: &str| Error::InvalidArgument(format!("{k} does not apply to family {name}"));
    let p = match start {
        FamilyParams::PaTi { alpha } => {
            if let Some(k) = ov.given().into_iter().find(|&k| k != "alpha") {
                return Err(bad(k));
            }
            FamilyParams::PaTi { alpha: ov.alpha.unwrap_or(alpha) }
        }
        FamilyParams::FourA { alpha } => {
            if let Some(k) = ov.given().into_iter().find(|&k| k != "alpha") {
                return Err(bad(k));
            }
            FamilyParams::FourA { alpha: ov.alpha.unwrap_or(alpha) }
        }
        FamilyParams::Bda { t1, alpha } => {
            if let Some(k) = ov.given().into_iter().find(|&k| k != "alpha" && k != "t1") {
                return Err(bad(k));
            }
            FamilyParams::Bda { t1: ov.t1.unwrap_or(t1), alpha: ov.alpha.unwrap_or(alpha) }
        }
        FamilyParams::Acb { t0, a1 } => {
            if let Some(k) = ov.given().into_iter().find(|&k| k != "t0" && k != "a1") {
                return Err(bad(k));
            }
            FamilyParams::Acb { t0: ov.t0.unwrap_or(t0), a1: ov.a1.unwrap_or(a1) }
        }
        FamilyParams::Exact => {
            if let Some(k) = ov.given().first() {
                return Err(bad(k));
            }
            FamilyParams::Exact
        }
    };
    p.validate()?;
    let label = match label {
        Some(l) if p == start => l,
        _ => p.default_label(),
    };
    Ok((label, p))
}

/// A propagator definition read from text.
#[derive(Clone, Debug, PartialEq)]
pub enum PropagatorConfig {
    Family { label: String, params: FamilyParams },
    Steps(StepSequence),
}

impl PropagatorConfig {
    pub fn into_propagator(self) -> Result<ContractedPropagator> {
        match self {
            PropagatorConfig::Family { label, params } => {
                Ok(ContractedPropagator::from_family(&params)?.with_label(label))
            }
            PropagatorConfig::Steps(seq) => Ok(ContractedPropagator::from_sequence(seq)),
        }
    }
}

pub fn load_config(path: &Path) -> Result<PropagatorConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::Config {
        line: 0,
        message: format!("cannot read {}: {e}", path.display()),
    })?;
    parse_config(&text)
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    None,
    Family,
    Steps,
}

fn number(s: &str, line: usize, what: &str) -> Result<f64> {
    s.parse::<f64>().map_err(|_| Error::Config {
        line,
        message: format!("{what}: expected a decimal number, got {s:?}"),
    })
}

pub fn parse_config(text: &str) -> Result<PropagatorConfig> {
    let mut section = Section::None;
    let mut seen: Option<Section> = None;
    let mut name: Option<(usize, String)> = None;
    let mut label: Option<String> = None;
    let mut ov = ParamOverrides::default();
    let mut steps = Vec::new();
    let mut last_line = 0;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        last_line = line;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if content.starts_with('[') {
            let s = match content {
                "[family]" => Section::Family,
                "[steps]" => Section::Steps,
                other => {
                    return Err(Error::Config { line, message: format!("unknown section {other}") })
                }
            };
            if seen.is_some() {
                return Err(Error::Config {
                    line,
                    message: "only one [family] or [steps] section is allowed".into(),
                });
            }
            seen = Some(s);
            section = s;
            continue;
        }
        if let Some((k, v)) = content.split_once('=') {
            let (k, v) = (k.trim(), v.trim());
            match (&section, k) {
                (Section::None, _) => {
                    return Err(Error::Config {
                        line,
                        message: "key outside a [family] or [steps] section".into(),
                    })
                }
                (_, "label") => label = Some(v.to_string()),
                (Section::Family, "name") => name = Some((line, v.to_string())),
                (Section::Family, "alpha") => ov.alpha = Some(number(v, line, "alpha")?),
                (Section::Family, "t0") => ov.t0 = Some(number(v, line, "t0")?),
                (Section::Family, "t1") => ov.t1 = Some(number(v, line, "t1")?),
                (Section::Family, "a1") => ov.a1 = Some(number(v, line, "a1")?),
                _ => return Err(Error::Config { line, message: format!("unknown key {k:?}") }),
            }
            continue;
        }
        if section != Section::Steps {
            return Err(Error::Config { line, message: format!("unexpected row {content:?}") });
        }
        let fields: Vec<&str> = content.split_whitespace().collect();
        let step = match fields.as_slice() {
            ["T", a] => Step::kinetic(number(a, line, "kinetic weight")?),
            ["V", b] => Step::potential(number(b, line, "potential weight")?),
            ["V", b, c] => Step::potential_with_commutator(
                number(b, line, "potential weight")?,
                number(c, line, "commutator weight")?,
            ),
            _ => {
                return Err(Error::Config {
                    line,
                    message: format!("expected `T a`, `V b` or `V b c`, got {content:?}"),
                })
            }
        };
        steps.push(step);
    }

    match seen {
        Some(Section::Family) => {
            let (line, n) = name.ok_or(Error::Config {
                line: last_line,
                message: "[family] needs a name".into(),
            })?;
            let (default_label, params) = resolve_family(&n, ov).map_err(|e| Error::Config {
                line,
                message: e.to_string(),
            })?;
            Ok(PropagatorConfig::Family { label: label.unwrap_or(default_label), params })
        }
        Some(_) => {
            let seq = StepSequence::new(label.unwrap_or_else(|| "custom".into()), steps)
                .map_err(|e| Error::Config { line: last_line, message: e.to_string() })?;
            Ok(PropagatorConfig::Steps(seq))
        }
        None => Err(Error::Config { line: last_line, message: "no [family] or [steps] section".into() }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn family_section() {
        let c = parse_config("# BD'\n[family]\nname = bda\nt1 = 0.27564\nalpha = 0.171438 # printed\n")
            .unwrap();
        assert_eq!(
            c,
            PropagatorConfig::Family {
                label: FamilyParams::Bda { t1: 0.27564, alpha: 0.171438 }.default_label(),
                params: FamilyParams::Bda { t1: 0.27564, alpha: 0.171438 },
            }
        );
        let c = parse_config("[family]\nname = ti\n").unwrap();
        assert!(matches!(c, PropagatorConfig::Family { ref label, .. } if label == "TI"));
    }

    #[test]
    fn steps_section() {
        let c = parse_config("[steps]\nlabel = pa\nV 0.5\nT 1\nV 0.5 0\n").unwrap();
        let PropagatorConfig::Steps(seq) = c else { panic!() };
        assert_eq!(seq.label(), "pa");
        assert_eq!(seq.steps().len(), 3);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let e = parse_config("[steps]\nV 0.5\nX 1\n").unwrap_err();
        assert!(matches!(e, Error::Config { line: 3, .. }), "{e:?}");
        let e = parse_config("[family]\nname = bda\nt1 = abc\n").unwrap_err();
        assert!(matches!(e, Error::Config { line: 3, .. }), "{e:?}");
        let e = parse_config("[steps]\nV 0.3\nT 1\nV 0.7\n").unwrap_err();
        assert!(matches!(e, Error::Config { .. }));
        let e = parse_config("name = pa\n").unwrap_err();
        assert!(matches!(e, Error::Config { line: 1, .. }));
        let e = parse_config("[family]\nname = bda\nt1 = 0.3\n").unwrap_err();
        assert!(matches!(e, Error::Config { line: 2, .. }), "{e:?}");
    }

    #[test]
    fn resolution() {
        let (l, p) = resolve_family("pa", ParamOverrides { alpha: Some(0.01), ..Default::default() })
            .unwrap();
        assert_eq!(p, FamilyParams::PaTi { alpha: 0.01 });
        assert!(l.contains("0.01"));
        assert!(resolve_family("pa", ParamOverrides { t0: Some(0.1), ..Default::default() }).is_err());
        assert!(resolve_family("nope", ParamOverrides::default()).is_err());
        let (l, _) = resolve_family("BD*", ParamOverrides::default()).unwrap();
        assert_eq!(l, "BD*");
        assert!(matches!(
            resolve_family("acb", ParamOverrides { t0: Some(0.6), a1: Some(0.0), ..Default::default() }),
            Err(Error::ParameterOutOfRange { .. })
        ));
    }
}
