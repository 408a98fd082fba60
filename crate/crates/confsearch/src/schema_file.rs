//! JSON schema documents: parameters with their settings plus extra linear
//! constraints over named settings. One-hot rows are implicit.

use std::fmt;
use std::path::Path;

use confsearch_core::config_space::{
    build_constraints, ConstraintSystem, LinearInequality, Parameter, ParameterSchema, Rational64, Term,
};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A setting or coefficient that may be written as a JSON number or string.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Scalar {
    Int(i64),
    Float(f64),
    Text(String),
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Int(v) => write!(f, "{v}"),
            Scalar::Float(v) => write!(f, "{v}"),
            Scalar::Text(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterDoc {
    pub name: String,
    pub settings: Vec<Scalar>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermDoc {
    pub param: String,
    pub setting: Scalar,
    /// Integer, or a `"p/q"` string.
    pub coeff: Scalar,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintDoc {
    pub label: String,
    pub terms: Vec<TermDoc>,
    pub rhs: Scalar,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemaDoc {
    pub parameters: Vec<ParameterDoc>,
    #[serde(default)]
    pub constraints: Vec<ConstraintDoc>,
}

/// A parsed schema document.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemaSpec {
    pub schema: ParameterSchema,
    pub extra: Vec<LinearInequality>,
    pub constraints: ConstraintSystem,
}

pub fn parse_rational(s: &Scalar) -> Result<Rational64> {
    let bad = || {
        Error::Core(confsearch_core::Error::Schema(format!(
            "`{s}` is not an integer or p/q rational"
        )))
    };
    match s {
        Scalar::Int(v) => Ok(Rational64::from_integer(*v)),
        Scalar::Float(v) if v.fract() == 0.0 && v.abs() < 9.0e15 => Ok(Rational64::from_integer(*v as i64)),
        Scalar::Float(_) => Err(bad()),
        Scalar::Text(t) => {
            let t = t.trim();
            match t.split_once('/') {
                Some((p, q)) => {
                    let p: i64 = p.trim().parse().map_err(|_| bad())?;
                    let q: i64 = q.trim().parse().map_err(|_| bad())?;
                    if q == 0 {
                        return Err(bad());
                    }
                    Ok(Rational64::new(p, q))
                }
                None => t.parse().map(Rational64::from_integer).map_err(|_| bad()),
            }
        }
    }
}

pub fn format_rational(r: Rational64) -> Scalar {
    if r.is_integer() {
        Scalar::Int(*r.numer())
    } else {
        Scalar::Text(format!("{}/{}", r.numer(), r.denom()))
    }
}

impl SchemaDoc {
    pub fn to_spec(&self) -> Result<SchemaSpec> {
        let schema = ParameterSchema::new(
            self.parameters
                .iter()
                .map(|p| Parameter::new(p.name.clone(), p.settings.iter().map(ToString::to_string)))
                .collect(),
        )?;
        let extra = self
            .constraints
            .iter()
            .map(|c| {
                let terms = c
                    .terms
                    .iter()
                    .map(|t| {
                        Ok(Term {
                            parameter: t.param.clone(),
                            setting: t.setting.to_string(),
                            coeff: parse_rational(&t.coeff)?,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(LinearInequality {
                    label: c.label.clone(),
                    terms,
                    rhs: parse_rational(&c.rhs)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let constraints = build_constraints(&schema, &extra)?;
        Ok(SchemaSpec {
            schema,
            extra,
            constraints,
        })
    }

    pub fn from_spec(schema: &ParameterSchema, extra: &[LinearInequality]) -> Self {
        Self {
            parameters: schema
                .parameters()
                .iter()
                .map(|p| ParameterDoc {
                    name: p.name.clone(),
                    settings: p.settings.iter().cloned().map(Scalar::Text).collect(),
                })
                .collect(),
            constraints: extra
                .iter()
                .map(|c| ConstraintDoc {
                    label: c.label.clone(),
                    terms: c
                        .terms
                        .iter()
                        .map(|t| TermDoc {
                            param: t.parameter.clone(),
                            setting: Scalar::Text(t.setting.clone()),
                            coeff: format_rational(t.coeff),
                        })
                        .collect(),
                    rhs: format_rational(c.rhs),
                })
                .collect(),
        }
    }
}

pub fn parse_schema(text: &str) -> Result<SchemaSpec> {
    let doc: SchemaDoc = serde_json::from_str(text)
        .map_err(|e| Error::Core(confsearch_core::Error::Schema(format!("invalid schema document: {e}"))))?;
    doc.to_spec()
}

pub fn load_schema(path: &Path) -> Result<SchemaSpec> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_schema(&text).map_err(|e| match e {
        Error::Core(confsearch_core::Error::Schema(m)) => {
            Error::Core(confsearch_core::Error::Schema(format!("{}: {m}", path.display())))
        }
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_settings_and_rational_coefficients() {
        let spec = parse_schema(
            r#"{"parameters":[{"name":"a","settings":[0,1]},{"name":"b","settings":["x","y","z"]}],
                "constraints":[{"label":"half","terms":[{"param":"a","setting":1,"coeff":"1/2"},
                                {"param":"b","setting":"z","coeff":1}],"rhs":1}]}"#,
        )
        .unwrap();
        assert_eq!(spec.schema.dimension(), 5);
        assert_eq!(spec.extra[0].terms[0].coeff, Rational64::new(1, 2));
        assert_eq!(spec.constraints.row_count(), 5);
    }

    #[test]
    fn round_trips_through_the_document_form() {
        let spec = parse_schema(
            r#"{"parameters":[{"name":"a","settings":["0","1"]},{"name":"b","settings":["0","1"]}],
                "constraints":[{"label":"r","terms":[{"param":"a","setting":"1","coeff":"-3/4"}],"rhs":"2/3"}]}"#,
        )
        .unwrap();
        let doc = SchemaDoc::from_spec(&spec.schema, &spec.extra);
        let text = serde_json::to_string(&doc).unwrap();
        assert_eq!(parse_schema(&text).unwrap(), spec);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(parse_schema("{").is_err());
        assert!(parse_schema(r#"{"parameters":[{"name":"a","settings":["0"]}]}"#).is_err());
        assert!(parse_rational(&Scalar::Text("1/0".into())).is_err());
        assert!(parse_rational(&Scalar::Float(0.5)).is_err());
        let unknown = r#"{"parameters":[{"name":"a","settings":["0","1"]}],
            "constraints":[{"label":"r","terms":[{"param":"zz","setting":"1","coeff":1}],"rhs":0}]}"#;
        assert!(parse_schema(unknown).is_err());
    }
}
