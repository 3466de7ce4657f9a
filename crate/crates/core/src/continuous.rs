//! The linear program left over once every binary is fixed.
//!
//! Objective terms and constraints touching a continuous variable must be
//! linear in the continuous variables; their coefficients may depend on
//! binaries (`u · p` terms). Everything else belongs to the caller.

use microlp::{ComparisonOp, LinearExpr, OptimizationDirection, Problem};

use crate::error::{Error, Result};
use crate::model::{ConstrainedModel, Domain, Sense};

/// `base + Σ w · x_b` over binaries.
#[derive(Clone, Debug, Default)]
struct Coef {
    base: f64,
    bin: Vec<(usize, f64)>,
}

impl Coef {
    fn eval(&self, x: &impl Fn(usize) -> f64) -> f64 {
        self.base + self.bin.iter().map(|&(b, w)| w * x(b)).sum::<f64>()
    }
}

/// Binary-only part of a row: `offset + Σ a x + Σ b x x`.
#[derive(Clone, Debug, Default)]
struct BinExpr {
    offset: f64,
    linear: Vec<(usize, f64)>,
    pairs: Vec<(usize, usize, f64)>,
}

impl BinExpr {
    fn eval(&self, x: &impl Fn(usize) -> f64) -> f64 {
        self.offset
            + self.linear.iter().map(|&(i, a)| a * x(i)).sum::<f64>()
            + self.pairs.iter().map(|&(i, j, b)| b * x(i) * x(j)).sum::<f64>()
    }
}

#[derive(Clone, Debug)]
struct Row {
    sense: Sense,
    rhs: f64,
    konst: BinExpr,
    coefs: Vec<(usize, Coef)>,
}

#[derive(Clone, Debug, PartialEq)]
pub(crate) struct LpSolution {
    /// Continuous objective plus the elastic penalty, if any.
    pub value: f64,
    /// Values per continuous slot.
    pub values: Vec<f64>,
    /// Total elastic violation.
    pub violation: f64,
}

#[derive(Clone, Debug, Default)]
pub(crate) struct ContinuousPart {
    /// Model indices of continuous variables; slot `k` is `cont[k]`.
    pub cont: Vec<usize>,
    bounds: Vec<(f64, f64)>,
    cost: Vec<Coef>,
    rows: Vec<Row>,
    /// Constraint indices handled here.
    pub linked_rows: Vec<usize>,
    /// Binaries whose value changes the LP, sorted.
    pub linked_binaries: Vec<usize>,
}

fn unsupported(what: &str) -> Error {
    Error::Unsupported(format!(
        "{what}: only terms linear in the continuous variables are supported"
    ))
}

impl ContinuousPart {
    /// Splits off the continuous part of a model whose other variables are
    /// all binary.
    pub(crate) fn new(model: &ConstrainedModel) -> Result<Self> {
        let idx = model.index();
        let mut slot = vec![None; model.num_variables()];
        let mut part = ContinuousPart::default();
        for (i, v) in model.variables().iter().enumerate() {
            match v.domain {
                Domain::Continuous { lower, upper } => {
                    slot[i] = Some(part.cont.len());
                    part.cont.push(i);
                    part.bounds.push((lower, upper));
                    part.cost.push(Coef::default());
                }
                Domain::Integer { .. } => {
                    return Err(Error::MustBinarize(v.id.clone()));
                }
                Domain::Binary => {}
            }
        }
        if part.cont.is_empty() {
            return Ok(part);
        }
        let pos = |id: &str| idx.get(id).expect("model references are validated");
        let mut linked = vec![false; model.num_variables()];

        let obj = model.objective();
        for (id, &c) in obj.linear() {
            if let Some(k) = slot[pos(id)] {
                part.cost[k].base += c;
            }
        }
        for ((a, b), &c) in obj.quadratic() {
            match (slot[pos(a)], slot[pos(b)]) {
                (Some(_), Some(_)) => return Err(unsupported("objective")),
                (Some(k), None) | (None, Some(k)) => {
                    let bin = if slot[pos(a)].is_some() { pos(b) } else { pos(a) };
                    part.cost[k].bin.push((bin, c));
                    linked[bin] = true;
                }
                (None, None) => {}
            }
        }

        for (ci, c) in model.constraints().iter().enumerate() {
            if !c.lhs.variables().iter().any(|id| slot[pos(id)].is_some()) {
                continue;
            }
            let mut row = Row {
                sense: c.sense,
                rhs: c.rhs,
                konst: BinExpr {
                    offset: c.lhs.offset(),
                    ..BinExpr::default()
                },
                coefs: Vec::new(),
            };
            let coef_of = |k: usize, row: &mut Row| -> usize {
                match row.coefs.iter().position(|(s, _)| *s == k) {
                    Some(p) => p,
                    None => {
                        row.coefs.push((k, Coef::default()));
                        row.coefs.len() - 1
                    }
                }
            };
            for (id, &a) in c.lhs.linear() {
                let i = pos(id);
                match slot[i] {
                    Some(k) => {
                        let p = coef_of(k, &mut row);
                        row.coefs[p].1.base += a;
                    }
                    None => {
                        row.konst.linear.push((i, a));
                        linked[i] = true;
                    }
                }
            }
            for ((a, b), &w) in c.lhs.quadratic() {
                let (i, j) = (pos(a), pos(b));
                match (slot[i], slot[j]) {
                    (Some(_), Some(_)) => {
                        return Err(unsupported(&format!("constraint `{}`", c.label)))
                    }
                    (Some(k), None) | (None, Some(k)) => {
                        let bin = if slot[i].is_some() { j } else { i };
                        let p = coef_of(k, &mut row);
                        row.coefs[p].1.bin.push((bin, w));
                        linked[bin] = true;
                    }
                    (None, None) => {
                        row.konst.pairs.push((i, j, w));
                        linked[i] = true;
                        linked[j] = true;
                    }
                }
            }
            part.rows.push(row);
            part.linked_rows.push(ci);
        }
        part.linked_binaries = (0..linked.len()).filter(|&i| linked[i]).collect();
        Ok(part)
    }

    pub(crate) fn is_empty(&self) -> bool {
        self.cont.is_empty()
    }

    /// Solves the LP for binaries `x` (by model index). With `elastic =
    /// Some(λ)` every row may be violated at cost `λ` per unit, so a solution
    /// always exists; otherwise an infeasible LP gives `None`.
    pub(crate) fn solve(&self, x: impl Fn(usize) -> f64, elastic: Option<f64>) -> Option<LpSolution> {
        if self.cont.is_empty() {
            return Some(LpSolution {
                value: 0.0,
                values: Vec::new(),
                violation: 0.0,
            });
        }
        let mut lp = Problem::new(OptimizationDirection::Minimize);
        let vars: Vec<_> = self
            .cost
            .iter()
            .zip(&self.bounds)
            .map(|(c, &b)| lp.add_var(c.eval(&x), b))
            .collect();
        let mut fixed_violation = 0.0;
        let mut elastic_vars = Vec::new();
        for row in &self.rows {
            let rhs = row.rhs - row.konst.eval(&x);
            let mut terms: Vec<(microlp::Variable, f64)> = row
                .coefs
                .iter()
                .map(|(k, c)| (vars[*k], c.eval(&x)))
                .filter(|&(_, a)| a != 0.0)
                .collect();
            if terms.is_empty() {
                let v = row.sense.violation(0.0, rhs);
                if v > 0.0 {
                    if elastic.is_none() {
                        return None;
                    }
                    fixed_violation += v;
                }
                continue;
            }
            if let Some(lambda) = elastic {
                if row.sense != Sense::Le {
                    let up = lp.add_var(lambda, (0.0, f64::INFINITY));
                    terms.push((up, 1.0));
                    elastic_vars.push(up);
                }
                if row.sense != Sense::Ge {
                    let down = lp.add_var(lambda, (0.0, f64::INFINITY));
                    terms.push((down, -1.0));
                    elastic_vars.push(down);
                }
            }
            let op = match row.sense {
                Sense::Eq => ComparisonOp::Eq,
                Sense::Le => ComparisonOp::Le,
                Sense::Ge => ComparisonOp::Ge,
            };
            lp.add_constraint(terms.into_iter().collect::<LinearExpr>(), op, rhs);
        }
        let outcome = lp.solve().ok()?;
        let sol = outcome.solution()?;
        let values: Vec<f64> = vars
            .iter()
            .zip(&self.bounds)
            .map(|(&v, &(lo, hi))| sol.var_value(v).clamp(lo, hi))
            .collect();
        let violation = fixed_violation + elastic_vars.iter().map(|&v| sol.var_value(v)).sum::<f64>();
        Some(LpSolution {
            value: sol.objective() + elastic.unwrap_or(0.0) * fixed_violation,
            values,
            violation,
        })
    }
}
