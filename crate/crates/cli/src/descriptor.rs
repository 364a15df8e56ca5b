//! JSON data descriptors, schema `nvk-1`.
//!
//! ```json
//! {
//!   "schema": "nvk-1",
//!   "a": 0.0,
//!   "b": [0.0],
//!   "measure": { "type": "atomic", "dim": 1, "atoms": [[0.0, 3.141592653589793]] }
//! }
//! ```
//!
//! Measure blocks are tagged by `type`: `atomic` (atoms as `[location…, weight]`),
//! `lebesgue` (optional `density` expression over `t1..tn`), `product`,
//! `pushforward2d`, `ladder` and `padded`.

use std::fmt;
use std::path::Path;

use nvk_core::convex_transform::{beta_n, LadderCoefficients};
use nvk_core::measures::{Atom, Density, DensityExpr, Measure};
use nvk_core::representation::RepresentationData;
use serde::{Deserialize, Serialize};

pub const SCHEMA: &str = "nvk-1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Descriptor {
    pub schema: String,
    pub a: f64,
    pub b: Vec<f64>,
    pub measure: MeasureSpec,
}

/// A measure-only document, as taken by `classify --mu`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureDocument {
    pub schema: String,
    pub measure: MeasureSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum MeasureSpec {
    Atomic {
        dim: usize,
        atoms: Vec<Vec<f64>>,
    },
    Lebesgue {
        dim: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        density: Option<String>,
    },
    Product {
        factors: Vec<MeasureSpec>,
    },
    Pushforward2d {
        coefficients: [f64; 4],
        base: Box<MeasureSpec>,
    },
    Ladder {
        b: Vec<f64>,
        /// Recorded for readers; checked against `b` when present.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        beta: Option<f64>,
        #[serde(default = "unit_scale")]
        scale: f64,
        base: Box<MeasureSpec>,
    },
    Padded {
        dim: usize,
        axes: Vec<usize>,
        inner: Box<MeasureSpec>,
    },
}

fn unit_scale() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq)]
pub enum DescriptorError {
    Io { path: String, message: String },
    /// Malformed JSON or a field of the wrong shape.
    Syntax { line: usize, column: usize, message: String },
    /// Well-formed JSON describing invalid data; `at` is a path like `measure.factors[1]`.
    Invalid { at: String, message: String },
    /// A measure with no descriptor form, such as a density given as a closure.
    Unrepresentable(String),
}

impl fmt::Display for DescriptorError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DescriptorError::Io { path, message } => write!(f, "cannot read {path}: {message}"),
            DescriptorError::Syntax { line, column, message } => {
                write!(f, "invalid descriptor at line {line}, column {column}: {message}")
            }
            DescriptorError::Invalid { at, message } => write!(f, "invalid descriptor at {at}: {message}"),
            DescriptorError::Unrepresentable(m) => write!(f, "measure has no descriptor form: {m}"),
        }
    }
}

impl std::error::Error for DescriptorError {}

fn syntax(e: serde_json::Error) -> DescriptorError {
    // serde_json appends its own position; keep the bare message
    let message = e.to_string();
    let message = match message.rfind(" at line ") {
        Some(p) => message[..p].to_string(),
        None => message,
    };
    DescriptorError::Syntax {
        line: e.line(),
        column: e.column(),
        message,
    }
}

fn invalid(at: &str, message: impl fmt::Display) -> DescriptorError {
    DescriptorError::Invalid {
        at: at.to_string(),
        message: message.to_string(),
    }
}

fn check_schema(schema: &str) -> Result<(), DescriptorError> {
    if schema != SCHEMA {
        return Err(invalid("schema", format!("expected {SCHEMA:?}, found {schema:?}")));
    }
    Ok(())
}

fn read(path: &Path) -> Result<String, DescriptorError> {
    std::fs::read_to_string(path).map_err(|e| DescriptorError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

impl Descriptor {
    pub fn parse(text: &str) -> Result<Self, DescriptorError> {
        let d: Descriptor = serde_json::from_str(text).map_err(syntax)?;
        check_schema(&d.schema)?;
        Ok(d)
    }

    pub fn load(path: &Path) -> Result<Self, DescriptorError> {
        Self::parse(&read(path)?)
    }

    pub fn to_data(&self) -> Result<RepresentationData, DescriptorError> {
        let mu = self.measure.to_measure("measure")?;
        // point at the offending field when the data itself is rejected
        let at = if !self.a.is_finite() {
            "a".to_string()
        } else if let Some(i) = self.b.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            format!("b[{i}]")
        } else if mu.dim() != self.b.len() {
            "measure.dim".to_string()
        } else {
            "$".to_string()
        };
        RepresentationData::new(self.a, self.b.clone(), mu).map_err(|e| invalid(&at, e))
    }

    pub fn from_data(data: &RepresentationData) -> Result<Self, DescriptorError> {
        Ok(Self {
            schema: SCHEMA.into(),
            a: data.a(),
            b: data.b().to_vec(),
            measure: MeasureSpec::from_measure(data.mu())?,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("descriptors serialize")
    }
}

/// Loads a measure from either a full descriptor or a measure-only document.
pub fn load_measure(path: &Path) -> Result<Measure, DescriptorError> {
    let text = read(path)?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(syntax)?;
    let spec = if value.get("a").is_some() || value.get("b").is_some() {
        let d = Descriptor::parse(&text)?;
        d.measure
    } else {
        let d: MeasureDocument = serde_json::from_str(&text).map_err(syntax)?;
        check_schema(&d.schema)?;
        d.measure
    };
    spec.to_measure("measure")
}

impl MeasureSpec {
    pub fn to_measure(&self, at: &str) -> Result<Measure, DescriptorError> {
        let fail = |e: &dyn fmt::Display| invalid(at, e);
        match self {
            MeasureSpec::Atomic { dim, atoms } => {
                let mut parsed = Vec::with_capacity(atoms.len());
                for (i, entry) in atoms.iter().enumerate() {
                    if entry.len() != dim + 1 {
                        return Err(invalid(
                            &format!("{at}.atoms[{i}]"),
                            format!("expected {} location entries and a weight, found {} numbers", dim, entry.len()),
                        ));
                    }
                    parsed.push(Atom::new(entry[..*dim].to_vec(), entry[*dim]));
                }
                Measure::atomic(*dim, parsed).map_err(|e| fail(&e))
            }
            MeasureSpec::Lebesgue { dim, density: None } => {
                if *dim == 0 {
                    return Err(invalid(at, "dimension must be at least 1"));
                }
                Ok(Measure::lebesgue(*dim))
            }
            MeasureSpec::Lebesgue { dim, density: Some(src) } => {
                let expr = DensityExpr::parse(src).map_err(|e| invalid(&format!("{at}.density"), e))?;
                Measure::with_density(*dim, Density::Expr(expr)).map_err(|e| fail(&e))
            }
            MeasureSpec::Product { factors } => {
                let built = factors
                    .iter()
                    .enumerate()
                    .map(|(i, f)| f.to_measure(&format!("{at}.factors[{i}]")))
                    .collect::<Result<Vec<_>, _>>()?;
                Measure::product(built).map_err(|e| fail(&e))
            }
            MeasureSpec::Pushforward2d { coefficients, base } => {
                let base = base.to_measure(&format!("{at}.base"))?;
                Measure::pushforward_2d(base, *coefficients).map_err(|e| fail(&e))
            }
            MeasureSpec::Ladder { b, beta, scale, base } => {
                let coeffs = LadderCoefficients::new(b.clone()).map_err(|e| invalid(&format!("{at}.b"), e))?;
                if let Some(beta) = beta {
                    let expect = beta_n(&coeffs);
                    if (beta - expect).abs() > 1e-12 * expect {
                        return Err(invalid(&format!("{at}.beta"), format!("recorded {beta} but b gives {expect}")));
                    }
                }
                let base = base.to_measure(&format!("{at}.base"))?;
                Measure::pushforward_ladder(base, coeffs, *scale).map_err(|e| fail(&e))
            }
            MeasureSpec::Padded { dim, axes, inner } => {
                let inner = inner.to_measure(&format!("{at}.inner"))?;
                Measure::padded(*dim, axes.clone(), inner).map_err(|e| fail(&e))
            }
        }
    }

    pub fn from_measure(mu: &Measure) -> Result<Self, DescriptorError> {
        Ok(match mu {
            Measure::Atomic { dim, atoms } => MeasureSpec::Atomic {
                dim: *dim,
                atoms: atoms
                    .iter()
                    .map(|a| a.location.iter().copied().chain([a.weight]).collect())
                    .collect(),
            },
            Measure::LebesgueDensity { dim, density } => MeasureSpec::Lebesgue {
                dim: *dim,
                density: match density {
                    Density::Unit => None,
                    Density::Expr(e) => Some(e.source().to_string()),
                    Density::Function(_) => return Err(DescriptorError::Unrepresentable("closure density".into())),
                },
            },
            Measure::Product { factors } => MeasureSpec::Product {
                factors: factors.iter().map(Self::from_measure).collect::<Result<_, _>>()?,
            },
            Measure::Pushforward2D { base, coefficients } => MeasureSpec::Pushforward2d {
                coefficients: *coefficients,
                base: Box::new(Self::from_measure(base)?),
            },
            Measure::PushforwardLadder { base, b, scale } => MeasureSpec::Ladder {
                b: b.values().to_vec(),
                beta: Some(beta_n(b)),
                scale: *scale,
                base: Box::new(Self::from_measure(base)?),
            },
            Measure::Padded { dim, inner_axes, inner } => MeasureSpec::Padded {
                dim: *dim,
                axes: inner_axes.clone(),
                inner: Box::new(Self::from_measure(inner)?),
            },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const HALFWAY: &str = r#"{
  "schema": "nvk-1",
  "a": 0.0,
  "b": [0.0],
  "measure": {"type": "atomic", "dim": 1, "atoms": [[0.0, 3.141592653589793]]}
}"#;

    #[test]
    fn parses_and_roundtrips() {
        let d = Descriptor::parse(HALFWAY).unwrap();
        let data = d.to_data().unwrap();
        assert_eq!(Descriptor::from_data(&data).unwrap(), d);
        assert_eq!(Descriptor::parse(&d.to_json()).unwrap(), d);
    }

    #[test]
    fn syntax_errors_carry_line_and_column() {
        let broken = HALFWAY.replace("\"b\": [0.0],", "\"b\": [0.0]");
        match Descriptor::parse(&broken).unwrap_err() {
            DescriptorError::Syntax { line, column, .. } => assert_eq!((line, column), (5, 3)),
            e => panic!("{e}"),
        }
        let wrong_type = HALFWAY.replace("\"type\": \"atomic\"", "\"type\": \"atomik\"");
        assert!(matches!(Descriptor::parse(&wrong_type), Err(DescriptorError::Syntax { line: 5, .. })));
    }

    #[test]
    fn invalid_data_names_the_field() {
        let bad_weight = HALFWAY.replace("3.141592653589793", "-1.0");
        let e = Descriptor::parse(&bad_weight).unwrap().to_data().unwrap_err();
        assert!(matches!(&e, DescriptorError::Invalid { at, .. } if at == "measure"), "{e}");
        let nested = r#"{"schema":"nvk-1","a":0,"b":[1,1],"measure":{"type":"product","factors":[
            {"type":"lebesgue","dim":1},{"type":"lebesgue","dim":1,"density":"exp(-t1^"}]}}"#;
        let e = Descriptor::parse(nested).unwrap().to_data().unwrap_err();
        assert!(e.to_string().starts_with("invalid descriptor at measure.factors[1].density"), "{e}");
        let schema = HALFWAY.replace("nvk-1", "nvk-0");
        assert!(matches!(Descriptor::parse(&schema), Err(DescriptorError::Invalid { .. })));
    }

    #[test]
    fn recorded_beta_is_checked() {
        let text = r#"{"schema":"nvk-1","a":0,"b":[0,0],"measure":{"type":"ladder","b":[1],"beta":3,"scale":2,
            "base":{"type":"atomic","dim":1,"atoms":[[0,1]]}}}"#;
        assert!(Descriptor::parse(text).unwrap().to_data().is_err());
        let ok = text.replace("\"beta\":3", "\"beta\":2");
        assert!(Descriptor::parse(&ok).unwrap().to_data().is_ok());
    }
}
