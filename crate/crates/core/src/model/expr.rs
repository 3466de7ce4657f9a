use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::model::assignment::Lookup;

/// `offset + Σ a_i x_i + Σ b_ij x_i x_j` over named variables.
///
/// Pair keys are stored with the lexicographically smaller id first, repeated
/// insertions accumulate, and coefficients that cancel to exactly zero are
/// dropped. A self-pair `(x, x)` is kept as a quadratic term here; the model
/// builder folds it into the linear part when `x` is binary.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct QuadraticExpr {
    linear: BTreeMap<String, f64>,
    quadratic: BTreeMap<(String, String), f64>,
    offset: f64,
}

fn accumulate<K: Ord + Clone>(map: &mut BTreeMap<K, f64>, key: K, coeff: f64) {
    if coeff == 0.0 {
        return;
    }
    let entry = map.entry(key.clone()).or_insert(0.0);
    *entry += coeff;
    if *entry == 0.0 {
        map.remove(&key);
    }
}

pub(crate) fn pair_key(a: &str, b: &str) -> (String, String) {
    if a <= b {
        (a.to_string(), b.to_string())
    } else {
        (b.to_string(), a.to_string())
    }
}

impl QuadraticExpr {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn constant(offset: f64) -> Self {
        Self {
            offset,
            ..Self::default()
        }
    }

    /// `Σ coeff_i · id_i`.
    pub fn linear_sum<S: AsRef<str>>(terms: impl IntoIterator<Item = (S, f64)>) -> Self {
        let mut e = Self::new();
        for (id, c) in terms {
            e.add_linear(id.as_ref(), c);
        }
        e
    }

    pub fn add_linear(&mut self, id: &str, coeff: f64) -> &mut Self {
        if coeff != 0.0 {
            match self.linear.get_mut(id) {
                Some(v) => {
                    *v += coeff;
                    if *v == 0.0 {
                        self.linear.remove(id);
                    }
                }
                None => {
                    self.linear.insert(id.to_string(), coeff);
                }
            }
        }
        self
    }

    pub fn add_quadratic(&mut self, a: &str, b: &str, coeff: f64) -> &mut Self {
        if coeff != 0.0 {
            let key = pair_key(a, b);
            match self.quadratic.get_mut(&key) {
                Some(v) => {
                    *v += coeff;
                    if *v == 0.0 {
                        self.quadratic.remove(&key);
                    }
                }
                None => {
                    self.quadratic.insert(key, coeff);
                }
            }
        }
        self
    }

    pub fn add_offset(&mut self, c: f64) -> &mut Self {
        self.offset += c;
        self
    }

    pub fn set_offset(&mut self, c: f64) -> &mut Self {
        self.offset = c;
        self
    }

    pub fn linear(&self) -> &BTreeMap<String, f64> {
        &self.linear
    }

    pub fn quadratic(&self) -> &BTreeMap<(String, String), f64> {
        &self.quadratic
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn is_linear(&self) -> bool {
        self.quadratic.is_empty()
    }

    pub fn is_empty(&self) -> bool {
        self.linear.is_empty() && self.quadratic.is_empty() && self.offset == 0.0
    }

    /// Number of stored linear plus quadratic coefficients.
    pub fn num_terms(&self) -> usize {
        self.linear.len() + self.quadratic.len()
    }

    /// Every variable id referenced, deduplicated and sorted.
    pub fn variables(&self) -> Vec<&str> {
        let mut ids: Vec<&str> = self.linear.keys().map(String::as_str).collect();
        for (a, b) in self.quadratic.keys() {
            ids.push(a);
            ids.push(b);
        }
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    /// Σ|coefficient| over linear and quadratic terms (offset excluded).
    pub fn abs_coefficient_sum(&self) -> f64 {
        self.linear.values().map(|c| c.abs()).sum::<f64>()
            + self.quadratic.values().map(|c| c.abs()).sum::<f64>()
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        let mut out = Self::constant(self.offset * alpha);
        for (k, c) in &self.linear {
            accumulate(&mut out.linear, k.clone(), c * alpha);
        }
        for (k, c) in &self.quadratic {
            accumulate(&mut out.quadratic, k.clone(), c * alpha);
        }
        out
    }

    pub fn add_expr(&mut self, other: &QuadraticExpr) -> &mut Self {
        self.offset += other.offset;
        for (k, c) in &other.linear {
            self.add_linear(k, *c);
        }
        for ((a, b), c) in &other.quadratic {
            self.add_quadratic(a, b, *c);
        }
        self
    }

    /// Moves self-pairs `(x, x)` of the listed variables into the linear part
    /// (`x² = x` for binary `x`).
    pub(crate) fn fold_self_pairs(&mut self, is_binary: impl Fn(&str) -> bool) {
        let folded: Vec<(String, f64)> = self
            .quadratic
            .iter()
            .filter(|((a, b), _)| a == b && is_binary(a))
            .map(|((a, _), c)| (a.clone(), *c))
            .collect();
        for (id, c) in folded {
            self.quadratic.remove(&(id.clone(), id.clone()));
            self.add_linear(&id, c);
        }
    }

    /// `offset + Σ linear + Σ quadratic` under `assignment`.
    pub fn evaluate<L: Lookup + ?Sized>(&self, assignment: &L) -> Result<f64> {
        let get = |id: &str| {
            assignment
                .lookup(id)
                .ok_or_else(|| Error::UnknownVariable(id.to_string()))
        };
        let mut total = self.offset;
        for (id, c) in &self.linear {
            total += c * get(id)?;
        }
        for ((a, b), c) in &self.quadratic {
            total += c * get(a)? * get(b)?;
        }
        Ok(total)
    }
}

/// Free-function form of [`QuadraticExpr::evaluate`].
pub fn evaluate<L: Lookup + ?Sized>(expr: &QuadraticExpr, assignment: &L) -> Result<f64> {
    expr.evaluate(assignment)
}
