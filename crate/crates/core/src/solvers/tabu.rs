use std::time::Instant;

use rand::Rng;

use super::{drift_ok, map_reads, spin_labels, stream_rng, BestTracker, Csr, Deadline, SolverParams};
use crate::error::Result;
use crate::model::{Assignment, QuboModel, Sample, SampleSet};

/// `max(1, min(20, n / 4))`.
pub fn default_tenure(n: usize) -> usize {
    (n / 4).clamp(1, 20)
}

/// `h_i + Σ_j Q_ij x_j` for every `i`.
pub(crate) fn qubo_fields(q: &QuboModel, csr: &Csr, x: &[u8]) -> Vec<f64> {
    (0..q.n())
        .map(|i| {
            q.linear()[i]
                + csr
                    .row(i)
                    .filter(|&(j, _)| x[j] != 0)
                    .map(|(_, w)| w)
                    .sum::<f64>()
        })
        .collect()
}

#[inline]
pub(crate) fn flip_delta(x: u8, field: f64) -> f64 {
    if x == 0 {
        field
    } else {
        -field
    }
}

pub(crate) fn tabu_walk(
    q: &QuboModel,
    csr: &Csr,
    mut x: Vec<u8>,
    moves: usize,
    tenure: usize,
    deadline: Deadline,
) -> (Vec<u8>, f64) {
    let n = q.n();
    let mut f = qubo_fields(q, csr, &x);
    let mut e = q.energy(&x);
    let mut best = BestTracker::new(&x, e);
    let mut tabu_until = vec![0usize; n];
    let scale = q.max_abs_coefficient() * (n.max(1) as f64);
    for it in 1..=moves {
        if it % 256 == 0 && deadline.passed() {
            break;
        }
        let mut pick: Option<(usize, f64)> = None;
        let mut fallback: Option<(usize, f64)> = None;
        for i in 0..n {
            let d = flip_delta(x[i], f[i]);
            if fallback.is_none_or(|(_, b)| d < b) {
                fallback = Some((i, d));
            }
            let allowed = tabu_until[i] < it || e + d < best.energy;
            if allowed && pick.is_none_or(|(_, b)| d < b) {
                pick = Some((i, d));
            }
        }
        let Some((i, d)) = pick.or(fallback) else { break };
        let sign = if x[i] == 0 { 1.0 } else { -1.0 };
        x[i] ^= 1;
        for (j, w) in csr.row(i) {
            f[j] += sign * w;
        }
        e += d;
        tabu_until[i] = it + tenure;
        best.flipped(i);
        best.observe(&x, e);
        if cfg!(debug_assertions) && it % 64 == 0 {
            debug_assert!(drift_ok(e, q.energy(&x), scale), "tabu energy drift");
        }
    }
    let energy = q.energy(&best.state);
    (best.state, energy)
}

/// Single-flip tabu search from a random start per read; `sweeps · n`
/// moves per read, stopping early at the time limit. The best non-tabu move
/// is always taken (lowest index on ties); a tabu move is allowed when it
/// would beat the read's best.
pub fn tabu_search(q: &QuboModel, p: &SolverParams) -> Result<SampleSet> {
    p.validate()?;
    let start = Instant::now();
    let n = q.n();
    let csr = Csr::new(&q.adjacency());
    let tenure = p.tenure.unwrap_or_else(|| default_tenure(n));
    let deadline = Deadline::after(p.time_limit);
    let moves = p.sweeps.saturating_mul(n.max(1));
    let states = map_reads(p.reads, |r| {
        let mut rng = stream_rng(p.seed, r as u64);
        let x: Vec<u8> = (0..n).map(|_| rng.random::<bool>() as u8).collect();
        tabu_walk(q, &csr, x, moves, tenure, deadline)
    });
    let index = spin_labels(n, q.labels());
    let samples = states
        .into_iter()
        .map(|(x, e)| {
            let values = x.iter().map(|&v| v as f64).collect();
            Sample::unconstrained(Assignment::new(index.clone(), values), e)
        })
        .collect();
    Ok(SampleSet::new("tabu", samples, start.elapsed().as_secs_f64(), p.seed))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_variable() {
        let q = QuboModel::from_parts(vec![-3.0], [], 1.0).unwrap();
        let ss = tabu_search(&q, &SolverParams::default().with_reads(4)).unwrap();
        assert!(ss.samples().iter().all(|s| s.energy == -2.0));
    }

    #[test]
    fn all_zero_model_keeps_offset() {
        let q = QuboModel::from_parts(vec![0.0; 5], [], 0.75).unwrap();
        let ss = tabu_search(&q, &SolverParams::default().with_reads(2)).unwrap();
        assert!(ss.samples().iter().all(|s| s.energy == 0.75));
    }

    #[test]
    fn tenure_rule() {
        assert_eq!(default_tenure(1), 1);
        assert_eq!(default_tenure(40), 10);
        assert_eq!(default_tenure(1000), 20);
    }
}
