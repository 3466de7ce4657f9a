use std::collections::HashMap;

use serde::Serialize;

use super::slack::log_weights;
use crate::error::Result;
use crate::model::{ConstrainedModel, Constraint, Domain, QuadraticExpr, Variable};

/// `z = lower + Σ w_j b_j` for one integer variable.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IntegerEncoding {
    pub id: String,
    pub lower: i64,
    pub bit_ids: Vec<String>,
    pub weights: Vec<u64>,
}

impl IntegerEncoding {
    /// Integer value represented by the given bit values.
    pub fn decode(&self, bits: impl IntoIterator<Item = f64>) -> f64 {
        self.lower as f64
            + bits
                .into_iter()
                .zip(&self.weights)
                .map(|(b, &w)| b * w as f64)
                .sum::<f64>()
    }
}

/// `constant + Σ coeff · var`.
type Affine = (f64, Vec<(String, f64)>);

fn substitute(e: &QuadraticExpr, subst: &HashMap<&str, Affine>) -> QuadraticExpr {
    let form = |id: &str| -> Affine {
        subst
            .get(id)
            .cloned()
            .unwrap_or_else(|| (0.0, vec![(id.to_string(), 1.0)]))
    };
    let mut out = QuadraticExpr::constant(e.offset());
    for (id, &c) in e.linear() {
        let (k, terms) = form(id);
        out.add_offset(c * k);
        for (v, w) in terms {
            out.add_linear(&v, c * w);
        }
    }
    for ((a, b), &c) in e.quadratic() {
        let (ka, ta) = form(a);
        let (kb, tb) = form(b);
        out.add_offset(c * ka * kb);
        for (v, w) in &tb {
            out.add_linear(v, c * ka * w);
        }
        for (v, w) in &ta {
            out.add_linear(v, c * kb * w);
        }
        for (va, wa) in &ta {
            for (vb, wb) in &tb {
                out.add_quadratic(va, vb, c * wa * wb);
            }
        }
    }
    out
}

/// Replaces every integer variable by a bounded log expansion over fresh
/// binaries `"{id}::bit{j}"`. Binary and continuous variables are untouched.
pub fn binarize(model: &ConstrainedModel) -> Result<(ConstrainedModel, Vec<IntegerEncoding>)> {
    let mut encodings = Vec::new();
    let mut variables = Vec::with_capacity(model.num_variables());
    for v in model.variables() {
        match v.domain {
            Domain::Integer { lower, upper } => {
                let weights = log_weights((upper - lower) as u64);
                let bit_ids: Vec<String> = (0..weights.len())
                    .map(|j| format!("{}::bit{j}", v.id))
                    .collect();
                variables.extend(bit_ids.iter().cloned().map(Variable::binary));
                encodings.push(IntegerEncoding {
                    id: v.id.clone(),
                    lower,
                    bit_ids,
                    weights,
                });
            }
            _ => variables.push(v.clone()),
        }
    }
    if encodings.is_empty() {
        return Ok((model.clone(), encodings));
    }
    let subst: HashMap<&str, Affine> = encodings
        .iter()
        .map(|enc| {
            let terms = enc
                .bit_ids
                .iter()
                .zip(&enc.weights)
                .map(|(b, &w)| (b.clone(), w as f64))
                .collect();
            (enc.id.as_str(), (enc.lower as f64, terms))
        })
        .collect();
    let objective = substitute(model.objective(), &subst);
    let constraints = model
        .constraints()
        .iter()
        .map(|c| Constraint::new(c.label.clone(), substitute(&c.lhs, &subst), c.sense, c.rhs))
        .collect();
    let out = ConstrainedModel::with_metadata(
        variables,
        objective,
        constraints,
        model.metadata().clone(),
    )?;
    Ok((out, encodings))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Assignment, ModelBuilder, Sense};

    #[test]
    fn integer_products_expand_exactly() {
        let mut b = ModelBuilder::new();
        b.integer("z", -1, 4).binary("x");
        let mut obj = QuadraticExpr::constant(0.5);
        obj.add_quadratic("z", "z", 1.0)
            .add_quadratic("z", "x", -2.0)
            .add_linear("z", 3.0);
        b.objective(obj);
        b.constraint("lim", QuadraticExpr::linear_sum([("z", 2.0), ("x", 1.0)]), Sense::Le, 5.0);
        let m = b.finish().unwrap();
        let (bin, encs) = binarize(&m).unwrap();
        assert!(bin.is_all_binary());
        let enc = &encs[0];
        assert_eq!(enc.weights.iter().sum::<u64>(), 5);
        let nb = enc.bit_ids.len();
        for mask in 0u32..(1 << (nb + 1)) {
            let bits: Vec<f64> = (0..nb).map(|j| (mask >> j & 1) as f64).collect();
            let x = (mask >> nb & 1) as f64;
            let z = enc.decode(bits.iter().copied());
            let mut pairs: Vec<(String, f64)> = enc.bit_ids.iter().cloned().zip(bits).collect();
            pairs.push(("x".into(), x));
            let a = Assignment::from_pairs(pairs);
            let orig = Assignment::from_pairs([("z", z), ("x", x)]);
            assert_eq!(
                bin.evaluate_objective(&a).unwrap(),
                m.evaluate_objective(&orig).unwrap()
            );
            assert_eq!(
                bin.constraints()[0].lhs.evaluate(&a).unwrap(),
                m.constraints()[0].lhs.evaluate(&orig).unwrap()
            );
        }
    }
}
