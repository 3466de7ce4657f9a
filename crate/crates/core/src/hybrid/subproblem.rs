use crate::error::{Error, Result};
use crate::model::QuboModel;
use crate::solvers::Csr;

/// A sub-QUBO over `variables` with every other variable clamped to its
/// incumbent value.
///
/// For every assignment `y` of the free variables,
/// `qubo.energy(y) + clamp_offset` equals the full energy of the incumbent
/// with `variables` overwritten by `y`.
#[derive(Clone, Debug)]
pub struct Subproblem {
    /// Offset is zero; the constant part lives in `clamp_offset`.
    pub qubo: QuboModel,
    /// Indices into the full model, ascending; sub-variable `a` is
    /// `variables[a]`.
    pub variables: Vec<usize>,
    pub clamp_offset: f64,
}

impl Subproblem {
    /// The incumbent with the free variables overwritten by `sub`.
    pub fn merge(&self, incumbent: &[u8], sub: &[u8]) -> Vec<u8> {
        let mut x = incumbent.to_vec();
        for (a, &i) in self.variables.iter().enumerate() {
            x[i] = sub[a];
        }
        x
    }
}

/// `|energy change|` of flipping each variable at `x`.
pub(crate) fn flip_gains(q: &QuboModel, x: &[u8]) -> Vec<f64> {
    let csr = Csr::new(&q.adjacency());
    (0..q.n())
        .map(|i| {
            let f = q.linear()[i]
                + csr
                    .row(i)
                    .filter(|&(j, _)| x[j] != 0)
                    .map(|(_, w)| w)
                    .sum::<f64>();
            f.abs()
        })
        .collect()
}

/// Variables ordered by decreasing `gain`, lowest index first on ties.
pub(crate) fn rank_by_gain(gain: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..gain.len()).collect();
    order.sort_by(|&a, &b| gain[b].total_cmp(&gain[a]).then(a.cmp(&b)));
    order
}

/// Clamps every variable outside `vars` (ascending) to its value in `x`.
pub(crate) fn clamp(q: &QuboModel, x: &[u8], vars: &[usize]) -> (QuboModel, f64) {
    let mut pos = vec![usize::MAX; q.n()];
    for (a, &i) in vars.iter().enumerate() {
        pos[i] = a;
    }
    let mut sub = QuboModel::new(vars.len());
    let mut constant = q.offset();
    for (i, &h) in q.linear().iter().enumerate() {
        if pos[i] != usize::MAX {
            sub.add_linear(pos[i], h);
        } else if x[i] != 0 {
            constant += h;
        }
    }
    for (&(i, j), &w) in q.quadratic() {
        match (pos[i] != usize::MAX, pos[j] != usize::MAX) {
            (true, true) => sub.add_quadratic(pos[i], pos[j], w),
            (true, false) if x[j] != 0 => sub.add_linear(pos[i], w),
            (false, true) if x[i] != 0 => sub.add_linear(pos[j], w),
            (false, false) if x[i] != 0 && x[j] != 0 => constant += w,
            _ => {}
        }
    }
    (sub, constant)
}

/// Frees the `k` variables whose flip changes the energy of `incumbent` the
/// most (lowest index first on ties) and clamps the rest.
///
/// ```
/// use cqmkit::hybrid::extract_subproblem;
/// use cqmkit::model::QuboModel;
///
/// let q = QuboModel::from_parts(vec![1.0, -2.0], [((0, 1), 3.0)], 0.5).unwrap();
/// let sub = extract_subproblem(&q, &[0, 1], 1).unwrap();
/// // x1 is clamped to 1, so x0 sees 1 + 3
/// assert_eq!(sub.variables, vec![0]);
/// assert_eq!(sub.qubo.linear(), &[4.0]);
/// assert_eq!(sub.clamp_offset, 0.5 - 2.0);
/// ```
pub fn extract_subproblem(q: &QuboModel, incumbent: &[u8], k: usize) -> Result<Subproblem> {
    let n = q.n();
    if incumbent.len() != n {
        return Err(Error::InvalidParams(format!(
            "incumbent has {} values for {n} variables",
            incumbent.len()
        )));
    }
    if k == 0 || k > n {
        return Err(Error::InvalidParams(format!(
            "subproblem size must be in 1..={n}, got {k}"
        )));
    }
    let mut variables = rank_by_gain(&flip_gains(q, incumbent));
    variables.truncate(k);
    variables.sort_unstable();
    let (mut qubo, clamp_offset) = clamp(q, incumbent, &variables);
    if q.has_labels() {
        qubo = qubo.with_labels(variables.iter().map(|&i| q.label(i)).collect())?;
    }
    Ok(Subproblem {
        qubo,
        variables,
        clamp_offset,
    })
}
