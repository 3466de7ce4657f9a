//! The repository's JSON model format.
//!
//! ```json
//! {
//!   "variables": [{"id": "x1", "type": "binary"},
//!                 {"id": "p", "type": "continuous", "lower": 0, "upper": 5}],
//!   "objective": {"linear": {"x1": 0.5}, "quadratic": [["x1", "p", 1.0]], "offset": 0},
//!   "constraints": [{"label": "c", "lhs": {...}, "sense": "le", "rhs": 1}]
//! }
//! ```

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{ConstrainedModel, Constraint, Domain, QuadraticExpr, Sense, Variable};
use crate::error::{Error, Result};

#[derive(Serialize, Deserialize)]
struct VariableDoc {
    id: String,
    #[serde(rename = "type")]
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lower: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    upper: Option<f64>,
}

#[derive(Serialize, Deserialize, Default)]
pub(crate) struct ExprDoc {
    #[serde(default)]
    linear: BTreeMap<String, f64>,
    #[serde(default)]
    quadratic: Vec<(String, String, f64)>,
    #[serde(default)]
    offset: f64,
}

#[derive(Serialize, Deserialize)]
struct ConstraintDoc {
    label: String,
    lhs: ExprDoc,
    sense: String,
    rhs: f64,
}

#[derive(Serialize, Deserialize)]
struct ModelDoc {
    variables: Vec<VariableDoc>,
    #[serde(default)]
    objective: ExprDoc,
    #[serde(default)]
    constraints: Vec<ConstraintDoc>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    metadata: BTreeMap<String, String>,
}

impl From<&QuadraticExpr> for ExprDoc {
    fn from(e: &QuadraticExpr) -> Self {
        ExprDoc {
            linear: e.linear().clone(),
            quadratic: e
                .quadratic()
                .iter()
                .map(|((a, b), c)| (a.clone(), b.clone(), *c))
                .collect(),
            offset: e.offset(),
        }
    }
}

impl From<ExprDoc> for QuadraticExpr {
    fn from(d: ExprDoc) -> Self {
        let mut e = QuadraticExpr::constant(d.offset);
        for (id, c) in &d.linear {
            e.add_linear(id, *c);
        }
        for (a, b, c) in &d.quadratic {
            e.add_quadratic(a, b, *c);
        }
        e
    }
}

fn variable_doc(v: &Variable) -> VariableDoc {
    let (lower, upper) = match v.domain {
        Domain::Binary => (None, None),
        d => (Some(d.lower()), Some(d.upper())),
    };
    VariableDoc {
        id: v.id.clone(),
        kind: v.domain.type_name().to_string(),
        lower,
        upper,
    }
}

fn variable_from_doc(d: VariableDoc) -> Result<Variable> {
    let bound = |b: Option<f64>, which: &str| {
        b.ok_or_else(|| {
            Error::Validation(format!("variable `{}` is missing its {which} bound", d.id))
        })
    };
    let domain = match d.kind.as_str() {
        "binary" => Domain::Binary,
        "integer" => {
            let (lo, hi) = (bound(d.lower, "lower")?, bound(d.upper, "upper")?);
            if lo.fract() != 0.0 || hi.fract() != 0.0 {
                return Err(Error::Validation(format!(
                    "integer variable `{}` has fractional bounds",
                    d.id
                )));
            }
            Domain::Integer {
                lower: lo as i64,
                upper: hi as i64,
            }
        }
        "continuous" => Domain::Continuous {
            lower: bound(d.lower, "lower")?,
            upper: bound(d.upper, "upper")?,
        },
        other => {
            return Err(Error::Validation(format!(
                "variable `{}` has unknown type `{other}`",
                d.id
            )))
        }
    };
    Ok(Variable { id: d.id, domain })
}

pub(crate) fn model_to_json(m: &ConstrainedModel) -> String {
    let doc = ModelDoc {
        variables: m.variables().iter().map(variable_doc).collect(),
        objective: m.objective().into(),
        constraints: m
            .constraints()
            .iter()
            .map(|c| ConstraintDoc {
                label: c.label.clone(),
                lhs: (&c.lhs).into(),
                sense: c.sense.as_str().to_string(),
                rhs: c.rhs,
            })
            .collect(),
        metadata: m.metadata().clone(),
    };
    serde_json::to_string_pretty(&doc).expect("model documents always serialize")
}

pub(crate) fn model_from_json(text: &str) -> Result<ConstrainedModel> {
    let doc: ModelDoc = serde_json::from_str(text)?;
    let variables = doc
        .variables
        .into_iter()
        .map(variable_from_doc)
        .collect::<Result<Vec<_>>>()?;
    let constraints = doc
        .constraints
        .into_iter()
        .map(|c| {
            Ok(Constraint {
                sense: Sense::parse(&c.sense)
                    .map_err(|e| Error::Validation(format!("constraint `{}`: {e}", c.label)))?,
                label: c.label,
                lhs: c.lhs.into(),
                rhs: c.rhs,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    ConstrainedModel::with_metadata(variables, doc.objective.into(), constraints, doc.metadata)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelBuilder;

    #[test]
    fn empty_model_round_trips() {
        let m = ConstrainedModel::empty();
        let text = m.to_json();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["variables"], serde_json::json!([]));
        assert_eq!(v["constraints"], serde_json::json!([]));
        assert_eq!(ConstrainedModel::from_json(&text).unwrap(), m);
    }

    #[test]
    fn mixed_domains_round_trip() {
        let mut b = ModelBuilder::new();
        b.binary("x")
            .integer("z", -2, 7)
            .continuous("p", 0.25, 1e3)
            .metadata("family", "toy");
        let mut obj = QuadraticExpr::constant(0.1);
        obj.add_linear("x", 1.0 / 3.0).add_quadratic("p", "z", -2.5e-7);
        b.objective(obj);
        b.constraint(
            "mix",
            QuadraticExpr::linear_sum([("x", 1.0), ("p", 0.1)]),
            Sense::Ge,
            0.3,
        );
        let m = b.finish().unwrap();
        let back = ConstrainedModel::from_json(&m.to_json()).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.objective().linear()["x"].to_bits(), (1.0f64 / 3.0).to_bits());
    }

    #[test]
    fn undeclared_variable_is_a_validation_error() {
        let text = r#"{"variables":[{"id":"x","type":"binary"}],
            "objective":{"linear":{"y":1.0}},"constraints":[]}"#;
        assert!(matches!(
            ConstrainedModel::from_json(text),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn unknown_sense_is_a_validation_error() {
        let text = r#"{"variables":[{"id":"x","type":"binary"}],
            "constraints":[{"label":"c","lhs":{"linear":{"x":1}},"sense":"lt","rhs":1}]}"#;
        match ConstrainedModel::from_json(text) {
            Err(Error::Validation(msg)) => assert!(msg.contains("lt")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_document_reports_position() {
        let text = "{\n  \"variables\": [\n    {\"id\": 3}\n  ]\n}";
        match ConstrainedModel::from_json(text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }
}
