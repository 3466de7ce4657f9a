//! Solvers over [`IsingModel`](crate::model::IsingModel) and
//! [`QuboModel`](crate::model::QuboModel): simulated annealing, simulated
//! quantum annealing, tabu search, greedy descent and brute force.
//!
//! Every stochastic solver draws read `r` from its own ChaCha8 stream
//! `(seed, r)`, so results do not depend on how reads are scheduled across
//! threads.

pub mod brute;
mod greedy;
mod params;
mod sa;
mod schedule;
mod sqa;
mod tabu;

pub use brute::{brute_force, brute_force_qubo};
pub use greedy::{greedy_descent, greedy_descent_state};
pub use params::{show_params, SolverParams, DEFAULT_SEED};
pub use sa::{simulated_annealing, simulated_annealing_qubo};
pub use schedule::{AnnealSchedule, SchedulePoint};
pub use sqa::{replica_coupling, simulated_quantum_annealing, simulated_quantum_annealing_qubo};
pub use tabu::{default_tenure, tabu_search};

use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::model::VarIndex;

/// Independent generator for `(seed, stream)`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Runs `f(0..reads)` across the available cores and returns results in
/// read order.
pub(crate) fn map_reads<T: Send>(reads: usize, f: impl Fn(usize) -> T + Sync) -> Vec<T> {
    let workers = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
        .min(reads);
    if workers <= 1 {
        return (0..reads).map(f).collect();
    }
    let f = &f;
    let mut slots: Vec<Option<T>> = (0..reads).map(|_| None).collect();
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                scope.spawn(move || {
                    (w..reads)
                        .step_by(workers)
                        .map(|r| (r, f(r)))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        for h in handles {
            for (r, v) in h.join().expect("solver worker panicked") {
                slots[r] = Some(v);
            }
        }
    });
    slots.into_iter().map(|s| s.expect("every read ran")).collect()
}

/// Compressed neighbour lists.
pub(crate) struct Csr {
    start: Vec<usize>,
    nbr: Vec<u32>,
    weight: Vec<f64>,
}

impl Csr {
    pub(crate) fn new(adj: &[Vec<(usize, f64)>]) -> Self {
        let mut start = Vec::with_capacity(adj.len() + 1);
        start.push(0);
        let mut nbr = Vec::new();
        let mut weight = Vec::new();
        for list in adj {
            for &(j, w) in list {
                nbr.push(j as u32);
                weight.push(w);
            }
            start.push(nbr.len());
        }
        Self { start, nbr, weight }
    }

    #[inline]
    pub(crate) fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.start[i]..self.start[i + 1];
        self.nbr[r.clone()]
            .iter()
            .zip(&self.weight[r])
            .map(|(&j, &w)| (j as usize, w))
    }
}

/// Wall-clock budget shared by all reads of one solve.
#[derive(Clone, Copy)]
pub(crate) struct Deadline(Option<Instant>);

impl Deadline {
    pub(crate) fn after(limit: Option<f64>) -> Self {
        Deadline(limit.map(|s| Instant::now() + Duration::from_secs_f64(s)))
    }

    pub(crate) fn at(t: Instant) -> Self {
        Deadline(Some(t))
    }

    pub(crate) fn passed(&self) -> bool {
        self.0.is_some_and(|d| Instant::now() >= d)
    }
}

/// Best state seen so far, updated lazily from the flips made since the
/// last snapshot so that recording a new best costs O(flips), not O(n).
pub(crate) struct BestTracker<T: Copy> {
    pub(crate) state: Vec<T>,
    pub(crate) energy: f64,
    pending: Vec<usize>,
}

impl<T: Copy> BestTracker<T> {
    pub(crate) fn new(state: &[T], energy: f64) -> Self {
        Self {
            state: state.to_vec(),
            energy,
            pending: Vec::new(),
        }
    }

    #[inline]
    pub(crate) fn flipped(&mut self, i: usize) {
        self.pending.push(i);
    }

    /// Call after every accepted move with the current state and energy.
    #[inline]
    pub(crate) fn observe(&mut self, current: &[T], energy: f64) {
        if energy < self.energy {
            self.energy = energy;
            if self.pending.len() * 4 > self.state.len() {
                self.state.copy_from_slice(current);
            } else {
                for &i in &self.pending {
                    self.state[i] = current[i];
                }
            }
            self.pending.clear();
        } else if self.pending.len() > 4 * self.state.len() + 64 {
            // flips since the snapshot are not reconstructible from `current`
            // alone, so compact the log by dropping duplicate indices
            self.pending.sort_unstable();
            self.pending.dedup();
        }
    }
}

pub(crate) fn spin_labels(n: usize, labels: Vec<String>) -> Arc<VarIndex> {
    debug_assert_eq!(labels.len(), n);
    Arc::new(VarIndex::new(labels))
}

/// Relative tolerance for spot checks of incremental energies.
pub(crate) fn drift_ok(incremental: f64, exact: f64, scale: f64) -> bool {
    (incremental - exact).abs() <= 1e-9 * scale.max(1.0)
}
