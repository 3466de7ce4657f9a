//! Exhaustive enumeration, the exactness oracle for small instances.

use std::collections::HashMap;
use std::time::Instant;

use super::{spin_labels, Csr};
use crate::compile::{binarize, IntegerEncoding};
use crate::continuous::{ContinuousPart, LpSolution};
use crate::error::{Error, Result};
use crate::model::{ConstrainedModel, QuadraticExpr, QuboModel, Sample, SampleSet, Sense};

/// Largest number of binaries enumerated exhaustively.
pub const MAX_BINARIES: usize = 24;

/// Largest `n` for fixed-cardinality subset enumeration.
pub const MAX_SUBSET_BINARIES: usize = 30;

/// At most this many tied minimizers are returned (lexicographically
/// smallest first).
pub const MAX_MINIMIZERS: usize = 1 << 16;

fn tie_tolerance(best: f64) -> f64 {
    1e-9 * best.abs().max(1.0)
}

/// Running argmin set over enumerated states.
struct Argmin {
    best: f64,
    states: Vec<(f64, u32)>,
}

impl Argmin {
    fn new() -> Self {
        Self {
            best: f64::INFINITY,
            states: Vec::new(),
        }
    }

    fn offer(&mut self, e: f64, mask: u32) {
        if e < self.best - tie_tolerance(self.best) {
            self.best = e;
            let cut = e + tie_tolerance(e);
            self.states.retain(|&(v, _)| v <= cut);
            self.states.push((e, mask));
        } else if e <= self.best + tie_tolerance(self.best) {
            self.best = self.best.min(e);
            self.states.push((e, mask));
        }
    }

    /// Masks within tolerance of the best, in lexicographic order of the
    /// state `(x_0, x_1, …)`.
    fn finish(mut self, n: usize) -> (f64, Vec<u32>) {
        let cut = self.best + tie_tolerance(self.best);
        self.states.retain(|&(v, _)| v <= cut);
        let rev = |m: u32| m.reverse_bits() >> (32 - n.max(1)) as u32;
        let mut masks: Vec<u32> = self.states.into_iter().map(|(_, m)| m).collect();
        masks.sort_unstable_by_key(|&m| if n == 0 { 0 } else { rev(m) });
        masks.dedup();
        masks.truncate(MAX_MINIMIZERS);
        (self.best, masks)
    }
}

fn bits(mask: u32, n: usize) -> Vec<u8> {
    (0..n).map(|i| (mask >> i & 1) as u8).collect()
}

/// Visits all `2^n` states in Gray-code order with each expression's value
/// kept up to date incrementally.
fn gray_walk(n: usize, exprs: &[QuboModel], mut visit: impl FnMut(u32, &[f64])) {
    let csrs: Vec<Csr> = exprs.iter().map(|q| Csr::new(&q.adjacency())).collect();
    let mut x = vec![0u8; n];
    let mut values: Vec<f64> = exprs.iter().map(|q| q.offset()).collect();
    let mut mask = 0u32;
    visit(mask, &values);
    for k in 1u64..(1u64 << n) {
        let i = k.trailing_zeros() as usize;
        for (e, (q, csr)) in exprs.iter().zip(&csrs).enumerate() {
            let field = q.linear()[i]
                + csr
                    .row(i)
                    .filter(|&(j, _)| x[j] != 0)
                    .map(|(_, w)| w)
                    .sum::<f64>();
            values[e] += if x[i] == 0 { field } else { -field };
        }
        x[i] ^= 1;
        mask ^= 1 << i;
        visit(mask, &values);
    }
}

/// Exact minimum of a QUBO and every minimizer (within `1e-9` relative).
pub fn qubo_minimizers(q: &QuboModel) -> Result<(f64, Vec<Vec<u8>>)> {
    let n = q.n();
    if n > MAX_BINARIES {
        return Err(Error::SizeExceeded {
            size: n,
            limit: MAX_BINARIES,
        });
    }
    let mut argmin = Argmin::new();
    gray_walk(n, std::slice::from_ref(q), |mask, v| argmin.offer(v[0], mask));
    let (_, masks) = argmin.finish(n);
    let states: Vec<Vec<u8>> = masks.iter().map(|&m| bits(m, n)).collect();
    // report the exactly recomputed optimum
    let best = states
        .iter()
        .map(|x| q.energy(x))
        .fold(f64::INFINITY, f64::min);
    Ok((best, states))
}

/// All minimizers of a QUBO as a sampleset.
pub fn brute_force_qubo(q: &QuboModel) -> Result<SampleSet> {
    let start = Instant::now();
    let (_, states) = qubo_minimizers(q)?;
    let index = spin_labels(q.n(), q.labels());
    let samples = states
        .iter()
        .map(|x| {
            let values = x.iter().map(|&v| v as f64).collect();
            Sample::unconstrained(crate::model::Assignment::new(index.clone(), values), q.energy(x))
        })
        .collect();
    Ok(SampleSet::new("brute", samples, start.elapsed().as_secs_f64(), 0))
}

/// Minimum over states with exactly `c` ones, for `n ≤ 30`.
pub fn cardinality_minimizers(q: &QuboModel, c: usize) -> Result<(f64, Vec<Vec<u8>>)> {
    let n = q.n();
    if n > MAX_SUBSET_BINARIES || c > n {
        return Err(Error::SizeExceeded {
            size: n,
            limit: MAX_SUBSET_BINARIES,
        });
    }
    let mut dense = vec![0.0; n * n];
    for (&(i, j), &w) in q.quadratic() {
        dense[i * n + j] = w;
        dense[j * n + i] = w;
    }
    let mut argmin = Argmin::new();
    let mut pick: Vec<usize> = (0..c).collect();
    loop {
        let mut e = q.offset();
        for (a, &i) in pick.iter().enumerate() {
            e += q.linear()[i];
            for &j in &pick[a + 1..] {
                e += dense[i * n + j];
            }
        }
        argmin.offer(e, pick.iter().fold(0u32, |m, &i| m | 1 << i));
        // next combination in lexicographic order
        let Some(k) = (0..c).rev().find(|&k| pick[k] < n - c + k) else {
            break;
        };
        pick[k] += 1;
        for t in k + 1..c {
            pick[t] = pick[t - 1] + 1;
        }
    }
    let (best, masks) = argmin.finish(n);
    Ok((best, masks.iter().map(|&m| bits(m, n)).collect()))
}

fn as_qubo(e: &QuadraticExpr, slot: &impl Fn(&str) -> usize, n: usize) -> QuboModel {
    let mut q = QuboModel::new(n);
    q.add_offset(e.offset());
    for (id, &c) in e.linear() {
        q.add_linear(slot(id), c);
    }
    for ((a, b), &c) in e.quadratic() {
        q.add_quadratic(slot(a), slot(b), c);
    }
    q
}

/// Recombines integer bits into integer values for the original model.
pub(crate) fn unbinarize(
    original: &ConstrainedModel,
    binarized: &ConstrainedModel,
    encodings: &[IntegerEncoding],
    values: &[f64],
) -> Vec<f64> {
    let get = |id: &str| values[binarized.index().get(id).expect("binarized id")];
    original
        .variables()
        .iter()
        .map(|v| match encodings.iter().find(|e| e.id == v.id) {
            Some(enc) => enc.decode(enc.bit_ids.iter().map(|b| get(b))),
            None => get(&v.id),
        })
        .collect()
}

/// Every feasible minimizer of a constrained model.
///
/// Integers are expanded to bits first; the binaries (at most
/// [`MAX_BINARIES`]) are enumerated and, when continuous variables are
/// present, the remaining linear program is solved for each binary pattern.
/// An empty sampleset means the model is infeasible.
pub fn brute_force(model: &ConstrainedModel) -> Result<SampleSet> {
    let start = Instant::now();
    let (bin_model, encodings) = binarize(model)?;
    let part = ContinuousPart::new(&bin_model)?;
    let mut is_cont = vec![false; bin_model.num_variables()];
    for &i in &part.cont {
        is_cont[i] = true;
    }
    let bin_vars: Vec<usize> = (0..bin_model.num_variables()).filter(|&i| !is_cont[i]).collect();
    let n = bin_vars.len();
    if n > MAX_BINARIES {
        return Err(Error::SizeExceeded {
            size: n,
            limit: MAX_BINARIES,
        });
    }
    let mut slot_of = vec![usize::MAX; bin_model.num_variables()];
    for (s, &i) in bin_vars.iter().enumerate() {
        slot_of[i] = s;
    }
    let slot = |id: &str| slot_of[bin_model.index().get(id).expect("declared")];
    let touches_cont = |e: &QuadraticExpr| {
        e.variables()
            .iter()
            .any(|id| is_cont[bin_model.index().get(id).expect("declared")])
    };

    // binary-only part of the objective
    let obj = bin_model.objective();
    let mut obj_bin = QuadraticExpr::constant(obj.offset());
    for (id, &c) in obj.linear() {
        if !is_cont[bin_model.index().get(id).unwrap()] {
            obj_bin.add_linear(id, c);
        }
    }
    for ((a, b), &c) in obj.quadratic() {
        let ia = bin_model.index().get(a).unwrap();
        let ib = bin_model.index().get(b).unwrap();
        if !is_cont[ia] && !is_cont[ib] {
            obj_bin.add_quadratic(a, b, c);
        }
    }
    let mut exprs = vec![as_qubo(&obj_bin, &slot, n)];
    let mut rows: Vec<(Sense, f64, f64)> = Vec::new();
    for (k, c) in bin_model.constraints().iter().enumerate() {
        if touches_cont(&c.lhs) {
            continue;
        }
        exprs.push(as_qubo(&c.lhs, &slot, n));
        rows.push((c.sense, c.rhs, bin_model.default_tolerance(k)));
    }

    let linked: Vec<usize> = part.linked_binaries.iter().map(|&i| slot_of[i]).collect();
    let mut lp_cache: HashMap<u32, Option<LpSolution>> = HashMap::new();
    let value_of = |mask: u32| {
        let slot_of = &slot_of;
        move |i: usize| (mask >> slot_of[i] & 1) as f64
    };
    let mut argmin = Argmin::new();
    gray_walk(n, &exprs, |mask, v| {
        let ok = rows
            .iter()
            .zip(&v[1..])
            .all(|(&(sense, rhs, tol), &lhs)| sense.violation(lhs, rhs) <= tol.max(1e-9 * rhs.abs()));
        if !ok {
            return;
        }
        let mut e = v[0];
        if !part.is_empty() {
            let key = linked.iter().fold(0u32, |k, &s| k << 1 | (mask >> s & 1));
            let sol = lp_cache
                .entry(key)
                .or_insert_with(|| part.solve(value_of(mask), None));
            match sol {
                Some(s) => e += s.value,
                None => return,
            }
        }
        argmin.offer(e, mask);
    });
    let (_, masks) = argmin.finish(n);

    let mut samples = Vec::with_capacity(masks.len());
    for mask in masks {
        let mut values = vec![0.0; bin_model.num_variables()];
        for (s, &i) in bin_vars.iter().enumerate() {
            values[i] = (mask >> s & 1) as f64;
        }
        if !part.is_empty() {
            let Some(sol) = part.solve(value_of(mask), None) else { continue };
            for (k, &i) in part.cont.iter().enumerate() {
                values[i] = sol.values[k];
            }
        }
        let original = unbinarize(model, &bin_model, &encodings, &values);
        let sample = model.sample(model.assignment(original))?;
        if sample.feasible {
            samples.push(sample);
        }
    }
    Ok(SampleSet::new("brute", samples, start.elapsed().as_secs_f64(), 0))
}
