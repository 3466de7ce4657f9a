//! Constrained quadratic models, QUBO/Ising containers, assignments and
//! samplesets.

mod assignment;
mod expr;
mod json;
mod qubo;
mod sample;

use std::collections::{BTreeMap, HashSet};
use std::sync::Arc;

pub use assignment::{Assignment, Lookup, VarIndex};
pub use expr::{evaluate, QuadraticExpr};
pub use qubo::{IsingModel, QuboModel};
pub use sample::{Sample, SampleSet};

use crate::error::{Error, Result};

/// Absolute tolerance used for constraints that involve continuous variables
/// or non-integral coefficients.
pub const DEFAULT_FEASIBILITY_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Domain {
    Binary,
    Integer { lower: i64, upper: i64 },
    Continuous { lower: f64, upper: f64 },
}

impl Domain {
    pub fn lower(&self) -> f64 {
        match *self {
            Domain::Binary => 0.0,
            Domain::Integer { lower, .. } => lower as f64,
            Domain::Continuous { lower, .. } => lower,
        }
    }

    pub fn upper(&self) -> f64 {
        match *self {
            Domain::Binary => 1.0,
            Domain::Integer { upper, .. } => upper as f64,
            Domain::Continuous { upper, .. } => upper,
        }
    }

    pub fn is_binary(&self) -> bool {
        matches!(self, Domain::Binary)
    }

    pub fn is_continuous(&self) -> bool {
        matches!(self, Domain::Continuous { .. })
    }

    pub fn type_name(&self) -> &'static str {
        match self {
            Domain::Binary => "binary",
            Domain::Integer { .. } => "integer",
            Domain::Continuous { .. } => "continuous",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Variable {
    pub id: String,
    pub domain: Domain,
}

impl Variable {
    pub fn binary(id: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            domain: Domain::Binary,
        }
    }

    fn validate(&self) -> Result<()> {
        let (lo, hi) = (self.domain.lower(), self.domain.upper());
        if !lo.is_finite() || !hi.is_finite() || lo > hi {
            return Err(Error::InvalidBounds {
                id: self.id.clone(),
                lower: lo,
                upper: hi,
            });
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Sense {
    Eq,
    Le,
    Ge,
}

impl Sense {
    pub fn as_str(&self) -> &'static str {
        match self {
            Sense::Eq => "eq",
            Sense::Le => "le",
            Sense::Ge => "ge",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "eq" => Ok(Sense::Eq),
            "le" => Ok(Sense::Le),
            "ge" => Ok(Sense::Ge),
            other => Err(Error::Validation(format!(
                "unknown constraint sense `{other}` (expected eq, le or ge)"
            ))),
        }
    }

    /// Non-negative amount by which `lhs sense rhs` is violated.
    pub fn violation(&self, lhs: f64, rhs: f64) -> f64 {
        match self {
            Sense::Eq => (lhs - rhs).abs(),
            Sense::Le => (lhs - rhs).max(0.0),
            Sense::Ge => (rhs - lhs).max(0.0),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub label: String,
    pub lhs: QuadraticExpr,
    pub sense: Sense,
    pub rhs: f64,
}

impl Constraint {
    pub fn new(label: impl Into<String>, lhs: QuadraticExpr, sense: Sense, rhs: f64) -> Self {
        Self {
            label: label.into(),
            lhs,
            sense,
            rhs,
        }
    }

    pub fn is_quadratic(&self) -> bool {
        !self.lhs.is_linear()
    }

    /// True when every coefficient, the offset and the right-hand side are
    /// whole numbers.
    pub fn has_integral_coefficients(&self) -> bool {
        let int = |v: f64| v.fract() == 0.0;
        int(self.rhs)
            && int(self.lhs.offset())
            && self.lhs.linear().values().all(|&c| int(c))
            && self.lhs.quadratic().values().all(|&c| int(c))
    }
}

/// How strictly [`ConstrainedModel::check_feasibility`] compares.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Tolerance {
    /// Exact for constraints over integer/binary variables with integral
    /// coefficients, [`DEFAULT_FEASIBILITY_TOL`] otherwise.
    Default,
    /// One absolute tolerance for every constraint.
    Absolute(f64),
}

/// Variables with typed domains, a quadratic objective and sensed
/// constraints. Immutable once built; see [`ModelBuilder`].
#[derive(Clone, Debug)]
pub struct ConstrainedModel {
    variables: Vec<Variable>,
    objective: QuadraticExpr,
    constraints: Vec<Constraint>,
    metadata: BTreeMap<String, String>,
    index: Arc<VarIndex>,
    exact: Vec<bool>,
}

impl PartialEq for ConstrainedModel {
    fn eq(&self, other: &Self) -> bool {
        self.variables == other.variables
            && self.objective == other.objective
            && self.constraints == other.constraints
            && self.metadata == other.metadata
    }
}

impl ConstrainedModel {
    pub fn new(
        variables: Vec<Variable>,
        objective: QuadraticExpr,
        constraints: Vec<Constraint>,
    ) -> Result<Self> {
        Self::with_metadata(variables, objective, constraints, BTreeMap::new())
    }

    pub fn with_metadata(
        variables: Vec<Variable>,
        mut objective: QuadraticExpr,
        mut constraints: Vec<Constraint>,
        metadata: BTreeMap<String, String>,
    ) -> Result<Self> {
        let mut ids = HashSet::with_capacity(variables.len());
        for v in &variables {
            v.validate()?;
            if !ids.insert(v.id.as_str()) {
                return Err(Error::DuplicateVariable(v.id.clone()));
            }
        }
        let index = Arc::new(VarIndex::new(
            variables.iter().map(|v| v.id.clone()).collect(),
        ));
        let is_binary = |id: &str| {
            index
                .get(id)
                .map(|i| variables[i].domain.is_binary())
                .unwrap_or(false)
        };
        let check_refs = |e: &QuadraticExpr, what: &str| -> Result<()> {
            for id in e.variables() {
                if index.get(id).is_none() {
                    return Err(Error::Validation(format!(
                        "{what} references undeclared variable `{id}`"
                    )));
                }
            }
            Ok(())
        };

        check_refs(&objective, "objective")?;
        objective.fold_self_pairs(is_binary);
        let mut labels = HashSet::with_capacity(constraints.len());
        for c in &mut constraints {
            if !labels.insert(c.label.clone()) {
                return Err(Error::DuplicateLabel(c.label.clone()));
            }
            if !c.rhs.is_finite() {
                return Err(Error::Validation(format!(
                    "constraint `{}` has a non-finite right-hand side",
                    c.label
                )));
            }
            check_refs(&c.lhs, &format!("constraint `{}`", c.label))?;
            c.lhs.fold_self_pairs(is_binary);
        }
        let exact = constraints
            .iter()
            .map(|c| {
                c.has_integral_coefficients()
                    && c.lhs
                        .variables()
                        .iter()
                        .all(|id| !variables[index.get(id).unwrap()].domain.is_continuous())
            })
            .collect();
        Ok(Self {
            variables,
            objective,
            constraints,
            metadata,
            index,
            exact,
        })
    }

    pub fn empty() -> Self {
        Self::new(Vec::new(), QuadraticExpr::new(), Vec::new()).expect("empty model is valid")
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn objective(&self) -> &QuadraticExpr {
        &self.objective
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn metadata(&self) -> &BTreeMap<String, String> {
        &self.metadata
    }

    pub fn index(&self) -> &Arc<VarIndex> {
        &self.index
    }

    pub fn variable(&self, id: &str) -> Option<&Variable> {
        self.index.get(id).map(|i| &self.variables[i])
    }

    pub fn num_variables(&self) -> usize {
        self.variables.len()
    }

    pub fn is_all_binary(&self) -> bool {
        self.variables.iter().all(|v| v.domain.is_binary())
    }

    /// Tolerance applied to constraint `k` under [`Tolerance::Default`].
    pub fn default_tolerance(&self, k: usize) -> f64 {
        if self.exact[k] {
            0.0
        } else {
            DEFAULT_FEASIBILITY_TOL
        }
    }

    /// Assignment over this model's variables, in declaration order.
    pub fn assignment(&self, values: Vec<f64>) -> Assignment {
        Assignment::new(Arc::clone(&self.index), values)
    }

    pub fn evaluate_objective<L: Lookup + ?Sized>(&self, assignment: &L) -> Result<f64> {
        self.objective.evaluate(assignment)
    }

    /// Per-constraint violations that exceed the tolerance. The assignment
    /// is feasible iff the returned map is empty.
    pub fn check_feasibility<L: Lookup + ?Sized>(
        &self,
        assignment: &L,
        tol: Tolerance,
    ) -> Result<(bool, BTreeMap<String, f64>)> {
        if let Tolerance::Absolute(t) = tol {
            if !(t > 0.0) {
                return Err(Error::InvalidParams(format!(
                    "feasibility tolerance must be positive, got {t}"
                )));
            }
        }
        for v in &self.variables {
            if assignment.lookup(&v.id).is_none() {
                return Err(Error::UnknownVariable(v.id.clone()));
            }
        }
        let mut violations = BTreeMap::new();
        for (k, c) in self.constraints.iter().enumerate() {
            let lhs = c.lhs.evaluate(assignment)?;
            let v = c.sense.violation(lhs, c.rhs);
            let t = match tol {
                Tolerance::Default => self.default_tolerance(k),
                Tolerance::Absolute(t) => t,
            };
            if v > t {
                violations.insert(c.label.clone(), v);
            }
        }
        Ok((violations.is_empty(), violations))
    }

    /// Objective plus feasibility of one assignment, packaged as a sample.
    pub fn sample(&self, assignment: Assignment) -> Result<Sample> {
        let energy = self.evaluate_objective(&assignment)?;
        let (feasible, violations) = self.check_feasibility(&assignment, Tolerance::Default)?;
        Ok(Sample {
            assignment,
            energy,
            feasible,
            violations,
        })
    }

    pub fn to_json(&self) -> String {
        json::model_to_json(self)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        json::model_from_json(text)
    }
}

/// Free-function form of [`ConstrainedModel::check_feasibility`] with an
/// absolute tolerance.
pub fn check_feasibility<L: Lookup + ?Sized>(
    model: &ConstrainedModel,
    assignment: &L,
    tol: f64,
) -> Result<(bool, BTreeMap<String, f64>)> {
    model.check_feasibility(assignment, Tolerance::Absolute(tol))
}

pub fn serialize(model: &ConstrainedModel) -> String {
    model.to_json()
}

pub fn deserialize(text: &str) -> Result<ConstrainedModel> {
    ConstrainedModel::from_json(text)
}

/// Single-owner builder for [`ConstrainedModel`].
#[derive(Clone, Debug, Default)]
pub struct ModelBuilder {
    variables: Vec<Variable>,
    objective: QuadraticExpr,
    constraints: Vec<Constraint>,
    metadata: BTreeMap<String, String>,
}

impl ModelBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn binary(&mut self, id: impl Into<String>) -> &mut Self {
        self.variables.push(Variable::binary(id));
        self
    }

    pub fn integer(&mut self, id: impl Into<String>, lower: i64, upper: i64) -> &mut Self {
        self.variables.push(Variable {
            id: id.into(),
            domain: Domain::Integer { lower, upper },
        });
        self
    }

    pub fn continuous(&mut self, id: impl Into<String>, lower: f64, upper: f64) -> &mut Self {
        self.variables.push(Variable {
            id: id.into(),
            domain: Domain::Continuous { lower, upper },
        });
        self
    }

    pub fn objective(&mut self, objective: QuadraticExpr) -> &mut Self {
        self.objective = objective;
        self
    }

    pub fn objective_mut(&mut self) -> &mut QuadraticExpr {
        &mut self.objective
    }

    pub fn constraint(
        &mut self,
        label: impl Into<String>,
        lhs: QuadraticExpr,
        sense: Sense,
        rhs: f64,
    ) -> &mut Self {
        self.constraints.push(Constraint::new(label, lhs, sense, rhs));
        self
    }

    pub fn metadata(&mut self, key: impl Into<String>, value: impl Into<String>) -> &mut Self {
        self.metadata.insert(key.into(), value.into());
        self
    }

    pub fn build(&self) -> Result<ConstrainedModel> {
        ConstrainedModel::with_metadata(
            self.variables.clone(),
            self.objective.clone(),
            self.constraints.clone(),
            self.metadata.clone(),
        )
    }

    /// Like [`build`](Self::build) but consumes the builder, avoiding copies
    /// of large expressions.
    pub fn finish(self) -> Result<ConstrainedModel> {
        ConstrainedModel::with_metadata(
            self.variables,
            self.objective,
            self.constraints,
            self.metadata,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cardinality_model(n: usize, c: f64) -> ConstrainedModel {
        let mut b = ModelBuilder::new();
        let ids: Vec<String> = (0..n).map(|i| format!("x{i}")).collect();
        for id in &ids {
            b.binary(id.clone());
        }
        let lhs = QuadraticExpr::linear_sum(ids.iter().map(|id| (id.as_str(), 1.0)));
        b.constraint("card", lhs, Sense::Eq, c);
        b.finish().unwrap()
    }

    fn ones(model: &ConstrainedModel, k: usize) -> Assignment {
        let n = model.num_variables();
        model.assignment((0..n).map(|i| if i < k { 1.0 } else { 0.0 }).collect())
    }

    #[test]
    fn cardinality_met_is_feasible() {
        let m = cardinality_model(6, 3.0);
        let (ok, v) = m.check_feasibility(&ones(&m, 3), Tolerance::Default).unwrap();
        assert!(ok);
        assert!(v.is_empty());
    }

    #[test]
    fn cardinality_short_by_one() {
        let m = cardinality_model(6, 3.0);
        let (ok, v) = m.check_feasibility(&ones(&m, 2), Tolerance::Default).unwrap();
        assert!(!ok);
        assert_eq!(v["card"], 1.0);
    }

    #[test]
    fn exhaustive_feasibility_matches_direct_evaluation() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 10;
        let ids: Vec<String> = (0..n).map(|i| format!("x{i}")).collect();
        let mut b = ModelBuilder::new();
        for id in &ids {
            b.binary(id.clone());
        }
        // integer-coefficient rows so the exact tolerance applies
        let mut rows = Vec::new();
        for (k, sense) in [Sense::Le, Sense::Ge, Sense::Eq].into_iter().enumerate() {
            let coeffs: Vec<i32> = (0..n).map(|_| rng.random_range(-3..=3)).collect();
            let rhs = rng.random_range(-2..=4) as f64;
            let lhs = QuadraticExpr::linear_sum(
                ids.iter().zip(&coeffs).map(|(id, &c)| (id.as_str(), c as f64)),
            );
            b.constraint(format!("c{k}"), lhs, sense, rhs);
            rows.push((coeffs, sense, rhs));
        }
        let m = b.finish().unwrap();
        for mask in 0u32..(1 << n) {
            let x: Vec<f64> = (0..n).map(|i| ((mask >> i) & 1) as f64).collect();
            let direct = rows.iter().all(|(coeffs, sense, rhs)| {
                let lhs: f64 = coeffs.iter().zip(&x).map(|(&c, &v)| c as f64 * v).sum();
                match sense {
                    Sense::Eq => lhs == *rhs,
                    Sense::Le => lhs <= *rhs,
                    Sense::Ge => lhs >= *rhs,
                }
            });
            let (ok, _) = m
                .check_feasibility(&m.assignment(x), Tolerance::Default)
                .unwrap();
            assert_eq!(ok, direct, "mask {mask:b}");
        }
    }

    #[test]
    fn binary_self_pairs_fold_into_linear() {
        let mut obj = QuadraticExpr::new();
        obj.add_quadratic("x", "x", 2.0).add_quadratic("z", "z", 1.0);
        let mut b = ModelBuilder::new();
        b.binary("x").integer("z", 0, 3).objective(obj);
        let m = b.finish().unwrap();
        assert_eq!(m.objective().linear()["x"], 2.0);
        assert_eq!(m.objective().quadratic().len(), 1);
        for x in [0.0, 1.0] {
            let a = Assignment::from_pairs([("x", x), ("z", 2.0)]);
            assert_eq!(m.evaluate_objective(&a).unwrap(), 2.0 * x * x + 4.0);
        }
    }

    #[test]
    fn undeclared_reference_is_rejected() {
        let mut b = ModelBuilder::new();
        b.binary("x")
            .objective(QuadraticExpr::linear_sum([("y", 1.0)]));
        assert!(matches!(b.build(), Err(Error::Validation(_))));
    }

    #[test]
    fn duplicates_are_rejected() {
        let mut b = ModelBuilder::new();
        b.binary("x").binary("x");
        assert!(matches!(b.build(), Err(Error::DuplicateVariable(_))));
        let mut b = ModelBuilder::new();
        b.binary("x")
            .constraint("c", QuadraticExpr::new(), Sense::Le, 1.0)
            .constraint("c", QuadraticExpr::new(), Sense::Le, 1.0);
        assert!(matches!(b.build(), Err(Error::DuplicateLabel(_))));
    }

    #[test]
    fn bounds_are_validated() {
        let mut b = ModelBuilder::new();
        b.continuous("p", 2.0, 1.0);
        assert!(matches!(b.build(), Err(Error::InvalidBounds { .. })));
        let mut b = ModelBuilder::new();
        b.continuous("p", 0.0, f64::INFINITY);
        assert!(matches!(b.build(), Err(Error::InvalidBounds { .. })));
    }

    #[test]
    fn continuous_constraints_use_default_tolerance() {
        let mut b = ModelBuilder::new();
        b.continuous("p", 0.0, 10.0).constraint(
            "bal",
            QuadraticExpr::linear_sum([("p", 1.0)]),
            Sense::Eq,
            5.0,
        );
        let m = b.finish().unwrap();
        let near = Assignment::from_pairs([("p", 5.0 + 5e-7)]);
        assert!(m.check_feasibility(&near, Tolerance::Default).unwrap().0);
        let far = Assignment::from_pairs([("p", 5.0 + 5e-6)]);
        assert!(!m.check_feasibility(&far, Tolerance::Default).unwrap().0);
        assert!(m.check_feasibility(&far, Tolerance::Absolute(0.0)).is_err());
    }
}
