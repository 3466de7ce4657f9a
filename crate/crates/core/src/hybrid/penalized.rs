//! The penalized binary view of a constrained model that the hybrid loop
//! searches over.
//!
//! Rows are kept implicit: each row's value is maintained under flips, so a
//! cardinality constraint over `n` variables costs `O(1)` per flip instead
//! of the `n²/2` pair terms of its squared expansion.

use std::cell::RefCell;
use std::collections::HashMap;

use super::subproblem::clamp;
use crate::compile::{auto_lambda, binarize, resolve_lambdas, IntegerEncoding, PenaltyConfig};
use crate::continuous::ContinuousPart;
use crate::error::Result;
use crate::model::{ConstrainedModel, QuadraticExpr, QuboModel, Sense};
use crate::solvers::brute::unbinarize;
use crate::solvers::Csr;

/// Cached linear programs before the cache is flushed.
const LP_CACHE_LIMIT: usize = 1 << 16;

pub(crate) struct Row {
    sense: Sense,
    rhs: f64,
    tol: f64,
    lambda: f64,
    offset: f64,
    linear: Vec<(usize, f64)>,
    quad: Vec<(usize, usize, f64)>,
}

impl Row {
    /// Linear equalities enter sub-QUBOs exactly as `λ (lhs − rhs)²`.
    pub(crate) fn is_squared_linear(&self) -> bool {
        self.sense == Sense::Eq && self.quad.is_empty()
    }

    fn penalty(&self, v: f64) -> f64 {
        match self.sense {
            Sense::Eq => self.lambda * (v - self.rhs) * (v - self.rhs),
            _ => self.lambda * self.sense.violation(v, self.rhs),
        }
    }

    fn value(&self, x: &[u8]) -> f64 {
        self.offset
            + self.linear.iter().map(|&(i, a)| a * x[i] as f64).sum::<f64>()
            + self
                .quad
                .iter()
                .map(|&(i, j, b)| b * (x[i] & x[j]) as f64)
                .sum::<f64>()
    }
}

/// How flipping one variable moves one row.
struct Touch {
    row: usize,
    a: f64,
    pairs: Vec<(usize, f64)>,
}

struct Linked {
    part: ContinuousPart,
    /// Binary slot of every model index (`usize::MAX` for continuous).
    slot_of: Vec<usize>,
    /// Slots whose value changes the LP.
    slots: Vec<usize>,
    is_linked: Vec<bool>,
    elastic: f64,
    cache: RefCell<HashMap<Vec<u64>, (f64, f64)>>,
}

impl Linked {
    fn key(&self, x: &[u8]) -> Vec<u64> {
        let mut key = vec![0u64; self.slots.len().div_ceil(64)];
        for (k, &s) in self.slots.iter().enumerate() {
            key[k / 64] |= (x[s] as u64) << (k % 64);
        }
        key
    }

    /// `(LP value with elastic penalty, violation)` for binaries `x`.
    fn eval(&self, x: &[u8]) -> (f64, f64) {
        let key = self.key(x);
        if let Some(&v) = self.cache.borrow().get(&key) {
            return v;
        }
        let v = match self.part.solve(|i| x[self.slot_of[i]] as f64, Some(self.elastic)) {
            Some(sol) => (sol.value, sol.violation),
            // not expected with finite bounds; priced as a hopeless pattern
            None => (self.elastic * 1e6, f64::INFINITY),
        };
        let mut cache = self.cache.borrow_mut();
        if cache.len() >= LP_CACHE_LIMIT {
            cache.clear();
        }
        cache.insert(key, v);
        v
    }
}

/// Incremental search state over the penalized binaries.
#[derive(Clone)]
pub(crate) struct State {
    pub x: Vec<u8>,
    fields: Vec<f64>,
    rows: Vec<f64>,
    lp: (f64, f64),
    pub energy: f64,
}

pub(crate) struct Penalized {
    pub n: usize,
    pub obj: QuboModel,
    csr: Csr,
    pub rows: Vec<Row>,
    touches: Vec<Vec<Touch>>,
    linked: Option<Linked>,
    /// The binarized model; binary slot `s` is variable `binaries[s]` of it.
    binarized: ConstrainedModel,
    encodings: Vec<IntegerEncoding>,
    pub binaries: Vec<usize>,
    scale: f64,
}

fn to_slots(
    e: &QuadraticExpr,
    pos: &impl Fn(&str) -> usize,
) -> (f64, Vec<(usize, f64)>, Vec<(usize, usize, f64)>) {
    let linear = e.linear().iter().map(|(id, &a)| (pos(id), a)).collect();
    let quad = e
        .quadratic()
        .iter()
        .map(|((a, b), &w)| (pos(a), pos(b), w))
        .collect();
    (e.offset(), linear, quad)
}

fn touch(m: &mut HashMap<usize, Touch>, i: usize, row: usize) -> &mut Touch {
    m.entry(i).or_insert_with(|| Touch {
        row,
        a: 0.0,
        pairs: Vec::new(),
    })
}

impl Penalized {
    pub(crate) fn new(model: &ConstrainedModel, cfg: &PenaltyConfig) -> Result<Self> {
        let lambdas = resolve_lambdas(model, cfg)?;
        let (binarized, encodings) = binarize(model)?;
        let part = ContinuousPart::new(&binarized)?;
        let nv = binarized.num_variables();
        let mut slot_of = vec![usize::MAX; nv];
        let mut binaries = Vec::new();
        for (i, v) in binarized.variables().iter().enumerate() {
            if !v.domain.is_continuous() {
                slot_of[i] = binaries.len();
                binaries.push(i);
            }
        }
        let n = binaries.len();
        let idx = binarized.index().clone();
        let is_bin = |id: &str| slot_of[idx.get(id).expect("declared")] != usize::MAX;
        let pos = |id: &str| slot_of[idx.get(id).expect("declared")];

        let objective = binarized.objective();
        let mut obj = QuboModel::new(n);
        obj.add_offset(objective.offset());
        for (id, &c) in objective.linear() {
            if is_bin(id) {
                obj.add_linear(pos(id), c);
            }
        }
        for ((a, b), &c) in objective.quadratic() {
            if is_bin(a) && is_bin(b) {
                obj.add_quadratic(pos(a), pos(b), c);
            }
        }

        let lambda_auto = auto_lambda(&binarized);
        let mut rows = Vec::new();
        for (k, c) in binarized.constraints().iter().enumerate() {
            if part.linked_rows.contains(&k) {
                continue;
            }
            let (offset, linear, quad) = to_slots(&c.lhs, &pos);
            let mut lambda = lambdas[&c.label].lambda;
            if !c.has_integral_coefficients() {
                // a violation can be smaller than one unit; scale so the
                // smallest single-coefficient miss still costs `λ`
                let min = linear
                    .iter()
                    .map(|&(_, a): &(usize, f64)| a.abs())
                    .chain(quad.iter().map(|&(_, _, b): &(usize, usize, f64)| b.abs()))
                    .fold(f64::INFINITY, f64::min);
                if min.is_finite() && min > 0.0 && min < 1.0 {
                    lambda /= min;
                }
            }
            rows.push(Row {
                sense: c.sense,
                rhs: c.rhs,
                tol: binarized.default_tolerance(k),
                lambda,
                offset,
                linear,
                quad,
            });
        }

        let mut touches: Vec<Vec<Touch>> = (0..n).map(|_| Vec::new()).collect();
        for (r, row) in rows.iter().enumerate() {
            let mut by_var: HashMap<usize, Touch> = HashMap::new();
            for &(i, a) in &row.linear {
                touch(&mut by_var, i, r).a += a;
            }
            for &(i, j, b) in &row.quad {
                touch(&mut by_var, i, r).pairs.push((j, b));
                touch(&mut by_var, j, r).pairs.push((i, b));
            }
            let mut vars: Vec<_> = by_var.into_iter().collect();
            vars.sort_by_key(|(i, _)| *i);
            for (i, t) in vars {
                touches[i].push(t);
            }
        }

        let linked = (!part.is_empty()).then(|| {
            let slots: Vec<usize> = part.linked_binaries.iter().map(|&i| slot_of[i]).collect();
            let mut is_linked = vec![false; n];
            for &s in &slots {
                is_linked[s] = true;
            }
            Linked {
                part,
                slot_of: slot_of.clone(),
                slots,
                is_linked,
                elastic: lambda_auto,
                cache: RefCell::new(HashMap::new()),
            }
        });

        let scale = obj.max_abs_coefficient().max(1.0);
        Ok(Self {
            n,
            csr: Csr::new(&obj.adjacency()),
            obj,
            rows,
            touches,
            linked,
            binarized,
            encodings,
            binaries,
            scale,
        })
    }

    pub(crate) fn state(&self, x: Vec<u8>) -> State {
        let fields = (0..self.n)
            .map(|i| {
                self.obj.linear()[i]
                    + self
                        .csr
                        .row(i)
                        .filter(|&(j, _)| x[j] != 0)
                        .map(|(_, w)| w)
                        .sum::<f64>()
            })
            .collect();
        let rows: Vec<f64> = self.rows.iter().map(|r| r.value(&x)).collect();
        let lp = self.linked.as_ref().map_or((0.0, 0.0), |l| l.eval(&x));
        let energy = self.obj.energy(&x)
            + self
                .rows
                .iter()
                .zip(&rows)
                .map(|(r, &v)| r.penalty(v))
                .sum::<f64>()
            + lp.0;
        State {
            x,
            fields,
            rows,
            lp,
            energy,
        }
    }

    /// Row value changes `(row, dv)` caused by flipping `i`.
    fn row_moves<'a>(&'a self, st: &'a State, i: usize) -> impl Iterator<Item = (usize, f64)> + 'a {
        let d = if st.x[i] == 0 { 1.0 } else { -1.0 };
        self.touches[i].iter().map(move |t| {
            let q: f64 = t.pairs.iter().map(|&(j, b)| b * st.x[j] as f64).sum();
            (t.row, d * (t.a + q))
        })
    }

    fn lp_delta(&self, st: &mut State, i: usize) -> f64 {
        match &self.linked {
            Some(l) if l.is_linked[i] => {
                st.x[i] ^= 1;
                let v = l.eval(&st.x).0;
                st.x[i] ^= 1;
                v - st.lp.0
            }
            _ => 0.0,
        }
    }

    /// Energy change of flipping `i`, split into the part that a sub-QUBO
    /// represents exactly and the rest.
    pub(crate) fn delta_parts(&self, st: &mut State, i: usize) -> (f64, f64) {
        let obj = if st.x[i] == 0 { st.fields[i] } else { -st.fields[i] };
        let mut exact = obj;
        let mut other = 0.0;
        for (r, dv) in self.row_moves(st, i) {
            let row = &self.rows[r];
            let v = st.rows[r];
            let d = row.penalty(v + dv) - row.penalty(v);
            if row.is_squared_linear() {
                exact += d;
            } else {
                other += d;
            }
        }
        other += self.lp_delta(st, i);
        (exact, other)
    }

    pub(crate) fn delta(&self, st: &mut State, i: usize) -> f64 {
        let (a, b) = self.delta_parts(st, i);
        a + b
    }

    /// Flips `i` given its precomputed `delta`.
    pub(crate) fn flip(&self, st: &mut State, i: usize, delta: f64) {
        let moves: Vec<(usize, f64)> = self.row_moves(st, i).collect();
        for (r, dv) in moves {
            st.rows[r] += dv;
        }
        let sign = if st.x[i] == 0 { 1.0 } else { -1.0 };
        st.x[i] ^= 1;
        for (j, w) in self.csr.row(i) {
            st.fields[j] += sign * w;
        }
        if let Some(l) = &self.linked {
            if l.is_linked[i] {
                st.lp = l.eval(&st.x);
            }
        }
        st.energy += delta;
    }

    /// Whether the state satisfies every constraint at the model's
    /// tolerances.
    pub(crate) fn feasible(&self, st: &State) -> bool {
        self.rows
            .iter()
            .zip(&st.rows)
            .all(|(r, &v)| r.sense.violation(v, r.rhs) <= r.tol.max(1e-9 * r.rhs.abs()))
            && st.lp.1 <= crate::model::DEFAULT_FEASIBILITY_TOL
    }

    /// Round-off guard proportional to the coefficient scale.
    pub(crate) fn eps(&self) -> f64 {
        1e-9 * self.scale
    }

    /// Values of every variable of the original model for binaries `x`.
    /// Continuous variables come from the LP, exact when it is feasible and
    /// elastic otherwise.
    pub(crate) fn model_values(&self, x: &[u8]) -> Vec<f64> {
        let mut values = vec![0.0; self.binarized.num_variables()];
        for (s, &i) in self.binaries.iter().enumerate() {
            values[i] = x[s] as f64;
        }
        if let Some(l) = &self.linked {
            let get = |i: usize| x[l.slot_of[i]] as f64;
            let sol = l
                .part
                .solve(get, None)
                .or_else(|| l.part.solve(get, Some(l.elastic)));
            for (k, &i) in l.part.cont.iter().enumerate() {
                values[i] = match &sol {
                    Some(s) => s.values[k],
                    None => self.binarized.variables()[i].domain.lower(),
                };
            }
        }
        values
    }

    pub(crate) fn original_values(&self, model: &ConstrainedModel, x: &[u8]) -> Vec<f64> {
        unbinarize(model, &self.binarized, &self.encodings, &self.model_values(x))
    }

    /// Sub-QUBO over `vars` (ascending) around `st`: the objective and the
    /// linear equalities exactly, every other term as its single-flip change
    /// at `st`. Constants are dropped.
    pub(crate) fn sub_qubo(&self, st: &mut State, vars: &[usize]) -> QuboModel {
        let (mut sub, _) = clamp(&self.obj, &st.x, vars);
        let mut pos = vec![usize::MAX; self.n];
        for (a, &i) in vars.iter().enumerate() {
            pos[i] = a;
        }
        for (r, row) in self.rows.iter().enumerate() {
            if !row.is_squared_linear() {
                continue;
            }
            let free: Vec<(usize, f64, f64)> = row
                .linear
                .iter()
                .filter(|&&(i, _)| pos[i] != usize::MAX)
                .map(|&(i, a)| (pos[i], a, st.x[i] as f64))
                .collect();
            if free.is_empty() {
                continue;
            }
            let k = st.rows[r] - free.iter().map(|&(_, a, v)| a * v).sum::<f64>() - row.rhs;
            let l = row.lambda;
            for (u, &(pu, au, _)) in free.iter().enumerate() {
                sub.add_linear(pu, l * (au * au + 2.0 * k * au));
                for &(pv, av, _) in &free[u + 1..] {
                    sub.add_quadratic(pu, pv, 2.0 * l * au * av);
                }
            }
        }
        for (a, &i) in vars.iter().enumerate() {
            let (_, other) = self.delta_parts(st, i);
            if other != 0.0 {
                sub.add_linear(a, if st.x[i] == 0 { other } else { -other });
            }
        }
        sub
    }
}
