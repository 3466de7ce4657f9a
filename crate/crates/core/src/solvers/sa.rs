use std::time::Instant;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{drift_ok, map_reads, spin_labels, stream_rng, BestTracker, Csr, Deadline, SolverParams};
use crate::compile::{qubo_to_ising, spin_to_binary};
use crate::error::Result;
use crate::model::{Assignment, IsingModel, QuboModel, Sample, SampleSet};

/// Stream reserved for temperature estimation; reads use `0..reads`.
const CALIBRATION_STREAM: u64 = u64::MAX;

pub(crate) fn random_spins(rng: &mut ChaCha8Rng, n: usize) -> Vec<i8> {
    (0..n).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect()
}

pub(crate) fn local_fields(m: &IsingModel, csr: &Csr, s: &[i8]) -> Vec<f64> {
    (0..m.n())
        .map(|i| m.h()[i] + csr.row(i).map(|(j, w)| w * s[j] as f64).sum::<f64>())
        .collect()
}

/// `T_hot` such that an average uphill move is accepted with probability 0.8,
/// estimated from 100 random single flips.
pub(crate) fn auto_hot_temperature(m: &IsingModel, csr: &Csr, seed: u64) -> f64 {
    let n = m.n();
    let mut rng = stream_rng(seed, CALIBRATION_STREAM);
    let s = random_spins(&mut rng, n);
    let f = local_fields(m, csr, &s);
    let deltas: Vec<f64> = (0..100)
        .map(|_| {
            let i = rng.random_range(0..n);
            -2.0 * s[i] as f64 * f[i]
        })
        .collect();
    let uphill: Vec<f64> = deltas.iter().copied().filter(|&d| d > 0.0).collect();
    let mean = if uphill.is_empty() {
        deltas.iter().map(|d| d.abs()).sum::<f64>() / deltas.len() as f64
    } else {
        uphill.iter().sum::<f64>() / uphill.len() as f64
    };
    if mean > 0.0 {
        -mean / 0.8f64.ln()
    } else {
        1.0
    }
}

fn one_read(m: &IsingModel, csr: &Csr, temps: &[f64], rng: &mut ChaCha8Rng, deadline: Deadline) -> (Vec<i8>, f64) {
    let n = m.n();
    let mut s = random_spins(rng, n);
    let mut f = local_fields(m, csr, &s);
    let mut e = m.energy(&s);
    let mut best = BestTracker::new(&s, e);
    let scale = m.max_abs_coefficient() * (n.max(1) as f64);
    let mut accepted = 0u64;
    for &t in temps {
        if deadline.passed() {
            break;
        }
        for i in 0..n {
            let de = -2.0 * s[i] as f64 * f[i];
            if de <= 0.0 || rng.random::<f64>() < (-de / t).exp() {
                s[i] = -s[i];
                let si = s[i] as f64;
                for (j, w) in csr.row(i) {
                    f[j] += 2.0 * w * si;
                }
                e += de;
                best.flipped(i);
                best.observe(&s, e);
                accepted += 1;
                if cfg!(debug_assertions) && accepted % 64 == 0 {
                    debug_assert!(drift_ok(e, m.energy(&s), scale), "SA energy drift");
                }
            }
        }
    }
    let energy = m.energy(&best.state);
    (best.state, energy)
}

/// Geometric temperature ladder, one entry per sweep.
pub(crate) fn temperature_ladder(t_hot: f64, t_cold: f64, sweeps: usize) -> Vec<f64> {
    if sweeps == 1 {
        return vec![t_cold];
    }
    let ratio = (t_cold / t_hot).powf(1.0 / (sweeps - 1) as f64);
    (0..sweeps).map(|k| t_hot * ratio.powi(k as i32)).collect()
}

pub(crate) fn sa_states(m: &IsingModel, p: &SolverParams) -> Result<Vec<(Vec<i8>, f64)>> {
    p.validate()?;
    let n = m.n();
    if n == 0 {
        return Ok(vec![(Vec::new(), m.offset())]);
    }
    let csr = Csr::new(&m.adjacency());
    let t_hot = p.t_hot.unwrap_or_else(|| auto_hot_temperature(m, &csr, p.seed));
    let t_cold = p.t_cold.unwrap_or(1e-3 * t_hot).min(t_hot);
    let temps = temperature_ladder(t_hot, t_cold, p.sweeps);
    let deadline = Deadline::after(p.time_limit);
    Ok(map_reads(p.reads, |r| {
        let mut rng = stream_rng(p.seed, r as u64);
        one_read(m, &csr, &temps, &mut rng, deadline)
    }))
}

/// Metropolis single-spin-flip annealing with a geometric temperature
/// schedule; one sample (the best state of the read) per read.
///
/// ```
/// use cqmkit::model::IsingModel;
/// use cqmkit::solvers::{simulated_annealing, SolverParams};
///
/// let m = IsingModel::from_parts(vec![2.0], [], 0.0).unwrap();
/// let ss = simulated_annealing(&m, &SolverParams::default().with_reads(3)).unwrap();
/// assert!(ss.samples().iter().all(|s| s.energy == -2.0));
/// ```
pub fn simulated_annealing(m: &IsingModel, p: &SolverParams) -> Result<SampleSet> {
    let start = Instant::now();
    let states = sa_states(m, p)?;
    let index = spin_labels(m.n(), m.labels());
    let samples = states
        .into_iter()
        .map(|(s, e)| {
            let values = s.iter().map(|&v| v as f64).collect();
            Sample::unconstrained(Assignment::new(index.clone(), values), e)
        })
        .collect();
    Ok(SampleSet::new("sa", samples, start.elapsed().as_secs_f64(), p.seed))
}

/// [`simulated_annealing`] on the Ising image, mapped back to binaries.
pub fn simulated_annealing_qubo(q: &QuboModel, p: &SolverParams) -> Result<SampleSet> {
    let start = Instant::now();
    let states = sa_states(&qubo_to_ising(q), p)?;
    Ok(qubo_sampleset("sa", q, states, start, p.seed))
}

pub(crate) fn qubo_sampleset(
    solver: &str,
    q: &QuboModel,
    states: Vec<(Vec<i8>, f64)>,
    start: Instant,
    seed: u64,
) -> SampleSet {
    let index = spin_labels(q.n(), q.labels());
    let samples = states
        .into_iter()
        .map(|(s, _)| {
            let x = spin_to_binary(&s);
            let e = q.energy(&x);
            let values = x.iter().map(|&v| v as f64).collect();
            Sample::unconstrained(Assignment::new(index.clone(), values), e)
        })
        .collect();
    SampleSet::new(solver, samples, start.elapsed().as_secs_f64(), seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_model_gives_offset() {
        let m = IsingModel::from_parts(vec![], [], 1.25).unwrap();
        let ss = simulated_annealing(&m, &SolverParams::default()).unwrap();
        assert_eq!(ss.len(), 1);
        assert_eq!(ss.samples()[0].energy, 1.25);
    }

    #[test]
    fn ladder_is_geometric() {
        let t = temperature_ladder(10.0, 0.01, 4);
        assert_eq!(t.len(), 4);
        assert!((t[3] - 0.01).abs() < 1e-12);
        assert!((t[1] / t[0] - t[2] / t[1]).abs() < 1e-12);
    }

    #[test]
    fn deterministic_for_a_seed() {
        let m = IsingModel::from_parts(
            vec![0.3, -0.1, 0.2, 0.0],
            [((0, 1), -1.0), ((1, 2), 0.5), ((2, 3), -0.7), ((0, 3), 0.4)],
            0.0,
        )
        .unwrap();
        let p = SolverParams::default().with_reads(5).with_sweeps(50).with_seed(9);
        assert_eq!(simulated_annealing(&m, &p).unwrap().samples(), simulated_annealing(&m, &p).unwrap().samples());
    }
}
