use super::tabu::{flip_delta, qubo_fields};
use super::Csr;
use crate::model::{Assignment, QuboModel, Sample};

/// Steepest single-flip descent in place; returns the final energy.
///
/// Each step takes the most negative flip delta (lowest index on ties) and
/// stops when no flip lowers the energy.
pub fn greedy_descent_state(q: &QuboModel, x: &mut [u8]) -> f64 {
    let csr = Csr::new(&q.adjacency());
    let mut f = qubo_fields(q, &csr, x);
    // guards against cycling on round-off when deltas are ~0
    let eps = 1e-12 * q.max_abs_coefficient().max(1.0);
    loop {
        let mut pick: Option<(usize, f64)> = None;
        for i in 0..q.n() {
            let d = flip_delta(x[i], f[i]);
            if d < -eps && pick.is_none_or(|(_, b)| d < b) {
                pick = Some((i, d));
            }
        }
        let Some((i, _)) = pick else { break };
        let sign = if x[i] == 0 { 1.0 } else { -1.0 };
        x[i] ^= 1;
        for (j, w) in csr.row(i) {
            f[j] += sign * w;
        }
    }
    q.energy(x)
}

/// [`greedy_descent_state`] from `start`, packaged as a sample.
pub fn greedy_descent(q: &QuboModel, start: &[u8]) -> Sample {
    let mut x = start.to_vec();
    let e = greedy_descent_state(q, &mut x);
    let a = Assignment::from_pairs(q.labels().into_iter().zip(x.iter().map(|&v| v as f64)));
    Sample::unconstrained(a, e)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separable_model_is_solved_from_any_start() {
        let q = QuboModel::from_parts(vec![1.0, -2.0, 0.5, -0.1], [], 0.0).unwrap();
        for mask in 0u8..16 {
            let x: Vec<u8> = (0..4).map(|i| mask >> i & 1).collect();
            let s = greedy_descent(&q, &x);
            assert_eq!(s.assignment.values(), &[0.0, 1.0, 0.0, 1.0]);
        }
    }

    #[test]
    fn optimum_is_a_fixed_point() {
        let q = QuboModel::from_parts(vec![-1.0, -1.0], [((0, 1), 3.0)], 0.0).unwrap();
        let s = greedy_descent(&q, &[1, 0]);
        assert_eq!(s.assignment.values(), &[1.0, 0.0]);
        assert_eq!(s.energy, -1.0);
    }
}
