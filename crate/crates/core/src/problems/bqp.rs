use rand::distr::Open01;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::blp::{blp_var, certify};
use crate::error::{Error, Result};
use crate::model::{ConstrainedModel, ModelBuilder, QuadraticExpr, QuboModel, Sense};
use crate::solvers::brute::cardinality_minimizers;
use crate::solvers::stream_rng;

/// `min Σ_i Σ_j μ_ij x_i x_j  s.t.  Σ x_i = C`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BqpSpec {
    pub n: usize,
    pub c: usize,
    pub seed: u64,
}

impl BqpSpec {
    pub fn new(n: usize, c: usize, seed: u64) -> Self {
        Self { n, c, seed }
    }
}

/// The `N × N` weights, uniform on (0, 1), drawn row by row.
pub fn bqp_weights(n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = stream_rng(seed, 0);
    (0..n)
        .map(|_| (0..n).map(|_| rng.sample(Open01)).collect())
        .collect()
}

/// Dense objective folded to canonical form: `μ_ii` on `x_i`, and
/// `μ_ij + μ_ji` on each unordered pair.
pub fn gen_bqp(spec: &BqpSpec) -> Result<ConstrainedModel> {
    let (n, c) = (spec.n, spec.c);
    if c > n {
        return Err(Error::InvalidParams(format!("cardinality C = {c} exceeds N = {n}")));
    }
    let mu = bqp_weights(n, spec.seed);
    let mut b = ModelBuilder::new();
    let ids: Vec<String> = (1..=n).map(blp_var).collect();
    for id in &ids {
        b.binary(id.clone());
    }
    let mut obj = QuadraticExpr::new();
    for i in 0..n {
        obj.add_linear(&ids[i], mu[i][i]);
        for j in i + 1..n {
            obj.add_quadratic(&ids[i], &ids[j], mu[i][j] + mu[j][i]);
        }
    }
    b.objective(obj);
    b.constraint(
        "cardinality",
        QuadraticExpr::linear_sum(ids.iter().map(|id| (id.as_str(), 1.0))),
        Sense::Eq,
        c as f64,
    );
    b.metadata("family", "bqp")
        .metadata("n", n.to_string())
        .metadata("c", c.to_string())
        .metadata("seed", spec.seed.to_string())
        .metadata("weights", "mu_ij ~ U(0,1) open, ChaCha8 seed_from_u64(seed), row-major");
    let model = b.finish()?;
    let mut x = vec![0.0; n];
    x[..c].fill(1.0);
    certify(&model, Some(x))?;
    Ok(model)
}

/// Exact optimum by enumerating every `C`-subset (`N` up to 30).
pub fn bqp_oracle(spec: &BqpSpec) -> Result<f64> {
    let mu = bqp_weights(spec.n, spec.seed);
    let mut q = QuboModel::new(spec.n);
    for i in 0..spec.n {
        q.add_linear(i, mu[i][i]);
        for j in i + 1..spec.n {
            q.add_quadratic(i, j, mu[i][j] + mu[j][i]);
        }
    }
    Ok(cardinality_minimizers(&q, spec.c)?.0)
}
