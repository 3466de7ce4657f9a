use std::time::Instant;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::sa::{local_fields, qubo_sampleset, random_spins};
use super::{map_reads, spin_labels, stream_rng, AnnealSchedule, Csr, Deadline, SolverParams};
use crate::compile::qubo_to_ising;
use crate::error::Result;
use crate::model::{Assignment, IsingModel, QuboModel, Sample, SampleSet};

/// Coupling between neighbouring Trotter replicas that reproduces a
/// transverse field of strength `a / 2` at simulation temperature `t` with
/// `p` slices, in the convention `+J⊥ · s_k s_{k+1}` at temperature `p · t`.
///
/// `J⊥ = (p·t / 2) · ln tanh(a / (2·p·t))` is never positive and diverges as
/// `a → 0`; `None` stands for that infinite coupling.
pub fn replica_coupling(a: f64, p: usize, t: f64) -> Option<f64> {
    let pt = p as f64 * t;
    let j = 0.5 * pt * (a / (2.0 * pt)).tanh().ln();
    j.is_finite().then_some(j)
}

struct Replicas {
    n: usize,
    spins: Vec<i8>,
    fields: Vec<f64>,
    energies: Vec<f64>,
}

impl Replicas {
    fn new(m: &IsingModel, csr: &Csr, p: usize, rng: &mut ChaCha8Rng) -> Self {
        let n = m.n();
        let mut spins = Vec::with_capacity(n * p);
        let mut fields = Vec::with_capacity(n * p);
        let mut energies = Vec::with_capacity(p);
        for _ in 0..p {
            let s = random_spins(rng, n);
            fields.extend(local_fields(m, csr, &s));
            energies.push(m.energy(&s));
            spins.extend(s);
        }
        Self {
            n,
            spins,
            fields,
            energies,
        }
    }

    #[inline]
    fn flip(&mut self, csr: &Csr, k: usize, i: usize) {
        let base = k * self.n;
        let de = -2.0 * self.spins[base + i] as f64 * self.fields[base + i];
        self.energies[k] += de;
        self.spins[base + i] = -self.spins[base + i];
        let si = self.spins[base + i] as f64;
        for (j, w) in csr.row(i) {
            self.fields[base + j] += 2.0 * w * si;
        }
    }

    fn replica(&self, k: usize) -> &[i8] {
        &self.spins[k * self.n..(k + 1) * self.n]
    }
}

fn one_read(
    m: &IsingModel,
    csr: &Csr,
    sched: &AnnealSchedule,
    p: &SolverParams,
    rng: &mut ChaCha8Rng,
    deadline: Deadline,
) -> Vec<i8> {
    let n = m.n();
    let slices = p.trotter_slices;
    let t_eff = slices as f64 * p.sqa_temperature;
    let mut r = Replicas::new(m, csr, slices, rng);
    let mut best_energy = f64::INFINITY;
    let mut best = Vec::new();
    let mut record = |r: &Replicas, best: &mut Vec<i8>| {
        for k in 0..slices {
            if r.energies[k] < best_energy {
                best_energy = r.energies[k];
                *best = r.replica(k).to_vec();
            }
        }
    };
    record(&r, &mut best);
    for sweep in 0..p.sweeps {
        if deadline.passed() {
            break;
        }
        let s = if p.sweeps == 1 {
            1.0
        } else {
            sweep as f64 / (p.sweeps - 1) as f64
        };
        let (a, b) = sched.at(s);
        let half_b = 0.5 * b;
        // local moves; skipped when the replicas are rigidly locked
        if let Some(jp) = replica_coupling(a, slices, p.sqa_temperature) {
            for k in 0..slices {
                let up = ((k + 1) % slices) * n;
                let down = ((k + slices - 1) % slices) * n;
                let base = k * n;
                for i in 0..n {
                    let si = r.spins[base + i] as f64;
                    let de = half_b * (-2.0 * si * r.fields[base + i])
                        - 2.0 * si * jp * (r.spins[up + i] + r.spins[down + i]) as f64;
                    if de <= 0.0 || rng.random::<f64>() < (-de / t_eff).exp() {
                        r.flip(csr, k, i);
                    }
                }
            }
        }
        // global moves: the same spin in every replica, leaving the replica
        // coupling unchanged
        for i in 0..n {
            let de: f64 = (0..slices)
                .map(|k| -2.0 * r.spins[k * n + i] as f64 * r.fields[k * n + i])
                .sum::<f64>()
                * half_b;
            if de <= 0.0 || rng.random::<f64>() < (-de / t_eff).exp() {
                for k in 0..slices {
                    r.flip(csr, k, i);
                }
            }
        }
        record(&r, &mut best);
    }
    best
}

pub(crate) fn sqa_states(
    m: &IsingModel,
    sched: &AnnealSchedule,
    p: &SolverParams,
) -> Result<Vec<(Vec<i8>, f64)>> {
    p.validate()?;
    if m.n() == 0 {
        return Ok(vec![(Vec::new(), m.offset())]);
    }
    // work in units of the largest coefficient so the schedule and the
    // simulation temperature are scale-free
    let scale = match m.max_abs_coefficient() {
        c if c > 0.0 => c,
        _ => 1.0,
    };
    let scaled = IsingModel::from_parts(
        m.h().iter().map(|v| v / scale).collect(),
        m.j().iter().map(|(&k, &v)| (k, v / scale)),
        0.0,
    )?;
    let csr = Csr::new(&scaled.adjacency());
    let deadline = Deadline::after(p.time_limit);
    Ok(map_reads(p.reads, |read| {
        let mut rng = stream_rng(p.seed, read as u64);
        let s = one_read(&scaled, &csr, sched, p, &mut rng, deadline);
        let e = m.energy(&s);
        (s, e)
    }))
}

/// Path-integral Monte Carlo over `P` Trotter replicas following the
/// schedule; the answer of each read is its best single replica.
pub fn simulated_quantum_annealing(
    m: &IsingModel,
    sched: &AnnealSchedule,
    p: &SolverParams,
) -> Result<SampleSet> {
    let start = Instant::now();
    let states = sqa_states(m, sched, p)?;
    let index = spin_labels(m.n(), m.labels());
    let samples = states
        .into_iter()
        .map(|(s, e)| {
            let values = s.iter().map(|&v| v as f64).collect();
            Sample::unconstrained(Assignment::new(index.clone(), values), e)
        })
        .collect();
    Ok(SampleSet::new("sqa", samples, start.elapsed().as_secs_f64(), p.seed))
}

/// [`simulated_quantum_annealing`] on the Ising image, mapped back.
pub fn simulated_quantum_annealing_qubo(
    q: &QuboModel,
    sched: &AnnealSchedule,
    p: &SolverParams,
) -> Result<SampleSet> {
    let start = Instant::now();
    let states = sqa_states(&qubo_to_ising(q), sched, p)?;
    Ok(qubo_sampleset("sqa", q, states, start, p.seed))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coupling_is_ferromagnetic_and_diverges() {
        let mut prev = 0.0;
        for a in [1.0, 0.5, 0.1, 0.01, 1e-4] {
            let j = replica_coupling(a, 20, 0.05).unwrap();
            assert!(j <= 0.0);
            assert!(j < prev);
            prev = j;
        }
        assert!(replica_coupling(0.0, 20, 0.05).is_none());
    }

    #[test]
    fn fields_only_model_reaches_aligned_state() {
        let m = IsingModel::from_parts(vec![1.0, -1.0, 0.5], [], 0.0).unwrap();
        let p = SolverParams::default().with_reads(2).with_sweeps(100);
        let ss = simulated_quantum_annealing(&m, &AnnealSchedule::default(), &p).unwrap();
        assert_eq!(ss.first().unwrap().energy, -2.5);
    }
}
