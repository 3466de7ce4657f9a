//! Constraint-to-penalty compilation, slack encoding, integer binarization
//! and the QUBO ↔ Ising change of variables.

mod binarize;
mod penalty;
mod slack;

pub use binarize::{binarize, IntegerEncoding};
pub(crate) use penalty::resolve_lambdas;
pub use penalty::{
    auto_lambda, compile_penalties, suggest_lambda, CompiledQubo, LambdaEntry, LambdaRule,
    LambdaSuggestion, PenaltyConfig, BISECTION_MAX_BINARIES, BISECTION_STEPS,
};
pub use slack::{encode_inequality, log_weights, SlackEncoding};

use crate::model::{IsingModel, QuboModel};

/// Substitutes `x = (s + 1) / 2`.
pub fn qubo_to_ising(q: &QuboModel) -> IsingModel {
    let n = q.n();
    let mut h: Vec<f64> = q.linear().iter().map(|v| v / 2.0).collect();
    let mut offset = q.offset() + q.linear().iter().sum::<f64>() / 2.0;
    let mut j = Vec::with_capacity(q.quadratic().len());
    for (&(a, b), &c) in q.quadratic() {
        let quarter = c / 4.0;
        h[a] += quarter;
        h[b] += quarter;
        offset += quarter;
        j.push(((a, b), quarter));
    }
    let m = IsingModel::from_parts(h, j, offset).expect("indices come from a valid qubo");
    debug_assert_eq!(m.n(), n);
    if q.has_labels() {
        m.with_labels(q.labels()).expect("same length")
    } else {
        m
    }
}

/// Substitutes `s = 2x − 1`.
pub fn ising_to_qubo(m: &IsingModel) -> QuboModel {
    let mut lin: Vec<f64> = m.h().iter().map(|v| 2.0 * v).collect();
    let mut offset = m.offset() - m.h().iter().sum::<f64>();
    let mut pairs = Vec::with_capacity(m.j().len());
    for (&(a, b), &c) in m.j() {
        lin[a] -= 2.0 * c;
        lin[b] -= 2.0 * c;
        offset += c;
        pairs.push(((a, b), 4.0 * c));
    }
    let q = QuboModel::from_parts(lin, pairs, offset).expect("indices come from a valid ising model");
    match m.labels_opt() {
        Some(l) => q.with_labels(l.clone()).expect("same length"),
        None => q,
    }
}

/// `x ∈ {0,1}` ↦ `s = 2x − 1`.
pub fn binary_to_spin(x: &[u8]) -> Vec<i8> {
    x.iter().map(|&v| if v != 0 { 1 } else { -1 }).collect()
}

pub fn spin_to_binary(s: &[i8]) -> Vec<u8> {
    s.iter().map(|&v| u8::from(v > 0)).collect()
}
