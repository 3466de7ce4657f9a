use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::penalized::{Penalized, State};
use crate::solvers::{BestTracker, Deadline};

/// Steepest single-flip descent to a local minimum.
pub(crate) fn greedy(p: &Penalized, st: &mut State) {
    let eps = p.eps();
    loop {
        let mut pick: Option<(usize, f64)> = None;
        for i in 0..p.n {
            let d = p.delta(st, i);
            if d < -eps && pick.is_none_or(|(_, b)| d < b) {
                pick = Some((i, d));
            }
        }
        let Some((i, d)) = pick else { break };
        p.flip(st, i, d);
    }
}

/// Tabu walk from `st`; returns the best state met, recomputed exactly.
pub(crate) fn tabu(p: &Penalized, mut st: State, moves: usize, tenure: usize, deadline: Deadline) -> State {
    let n = p.n;
    let eps = p.eps();
    let mut best = BestTracker::new(&st.x, st.energy);
    let mut tabu_until = vec![0usize; n];
    for it in 1..=moves {
        if it % 64 == 0 && deadline.passed() {
            break;
        }
        let mut pick: Option<(usize, f64)> = None;
        let mut fallback: Option<(usize, f64)> = None;
        for i in 0..n {
            let d = p.delta(&mut st, i);
            if fallback.is_none_or(|(_, b)| d < b) {
                fallback = Some((i, d));
            }
            let allowed = tabu_until[i] < it || st.energy + d < best.energy - eps;
            if allowed && pick.is_none_or(|(_, b)| d < b) {
                pick = Some((i, d));
            }
        }
        let Some((i, d)) = pick.or(fallback) else { break };
        p.flip(&mut st, i, d);
        tabu_until[i] = it + tenure;
        best.flipped(i);
        best.observe(&st.x, st.energy);
    }
    p.state(best.state)
}

/// Flips each bit with probability `rate`, and at least one bit.
pub(crate) fn perturb(x: &mut [u8], rate: f64, rng: &mut ChaCha8Rng) {
    if x.is_empty() {
        return;
    }
    let mut flipped = false;
    for v in x.iter_mut() {
        if rng.random::<f64>() < rate {
            *v ^= 1;
            flipped = true;
        }
    }
    if !flipped {
        let i = rng.random_range(0..x.len());
        x[i] ^= 1;
    }
}

/// Flips `count` distinct random bits.
pub(crate) fn kick(x: &mut [u8], count: usize, rng: &mut ChaCha8Rng) {
    let count = count.min(x.len());
    for i in rand::seq::index::sample(rng, x.len(), count) {
        x[i] ^= 1;
    }
}
