use rand::distr::Open01;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ConstrainedModel, ModelBuilder, QuadraticExpr, Sense};
use crate::solvers::stream_rng;

/// Extra constraint sets available on top of the cardinality constraint.
pub const MAX_EXTRA_CONSTRAINTS: usize = 5;

/// `min Σ μ_i x_i  s.t.  Σ x_i = C`, plus the first `extra` of the extra
/// constraint sets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlpSpec {
    pub n: usize,
    pub c: usize,
    pub seed: u64,
    #[serde(default)]
    pub extra: usize,
}

impl BlpSpec {
    pub fn new(n: usize, c: usize, seed: u64) -> Self {
        Self { n, c, seed, extra: 0 }
    }

    pub fn with_extra(mut self, extra: usize) -> Self {
        self.extra = extra;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.c > self.n {
            return Err(Error::InvalidParams(format!(
                "cardinality C = {} exceeds N = {}",
                self.c, self.n
            )));
        }
        if self.extra > MAX_EXTRA_CONSTRAINTS {
            return Err(Error::InvalidParams(format!(
                "at most {MAX_EXTRA_CONSTRAINTS} extra constraints, got {}",
                self.extra
            )));
        }
        Ok(())
    }
}

/// Variable id of the `i`-th (1-based) decision variable.
pub fn blp_var(i: usize) -> String {
    format!("x{i}")
}

/// The weights `μ_1..μ_N`, uniform on the open interval (0, 1), drawn in
/// index order from the ChaCha8 stream of `seed`.
pub fn blp_weights(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = stream_rng(seed, 0);
    (0..n).map(|_| rng.sample(Open01)).collect()
}

fn linear_objective(mu: &[f64]) -> QuadraticExpr {
    let mut obj = QuadraticExpr::new();
    for (k, &m) in mu.iter().enumerate() {
        obj.add_linear(&blp_var(k + 1), m);
    }
    obj
}

fn sum_where(n: usize, keep: impl Fn(usize) -> bool) -> QuadraticExpr {
    let mut e = QuadraticExpr::new();
    for i in (1..=n).filter(|&i| keep(i)) {
        e.add_linear(&blp_var(i), 1.0);
    }
    e
}

/// `μ_{i+1} − μ_{i−1}` for 1-based `i`, wrapping cyclically.
fn shifted_weight(mu: &[f64], i: usize) -> f64 {
    let n = mu.len();
    let next = if i == n { 1 } else { i + 1 };
    let prev = if i == 1 { n } else { i - 1 };
    mu[next - 1] - mu[prev - 1]
}

fn extra_constraints(b: &mut ModelBuilder, spec: &BlpSpec, mu: &[f64]) {
    let n = spec.n;
    let half = n / 2;
    for k in 1..=spec.extra {
        match k {
            1 => b.constraint("at_least_c", sum_where(n, |_| true), Sense::Ge, spec.c as f64),
            2 => {
                let mut e = QuadraticExpr::new();
                for i in 1..=n {
                    e.add_linear(&blp_var(i), if i % 2 == 0 { 1.0 } else { -1.0 });
                }
                b.constraint("even_equals_odd", e, Sense::Eq, 0.0)
            }
            3 => {
                // both sums include x_{N/2}, which therefore cancels
                let mut e = QuadraticExpr::new();
                for i in 1..=half {
                    e.add_linear(&blp_var(i), 1.0);
                }
                for i in half.max(1)..=n {
                    e.add_linear(&blp_var(i), -1.0);
                }
                b.constraint("first_half_le_second", e, Sense::Le, 0.0)
            }
            4 => b.constraint("every_fifth_zero", sum_where(n, |i| i % 5 == 0), Sense::Eq, 0.0),
            _ => {
                let mut e = QuadraticExpr::new();
                for i in 1..=n {
                    e.add_linear(&blp_var(i), shifted_weight(mu, i));
                }
                b.constraint("shifted_weights", e, Sense::Le, 0.0)
            }
        };
    }
}

/// A feasible point for the constraint sets in `spec`, built greedily.
fn witness(spec: &BlpSpec, mu: &[f64]) -> Option<Vec<f64>> {
    let (n, c, k) = (spec.n, spec.c, spec.extra);
    let allowed = |i: usize| !(k >= 4 && i % 5 == 0);
    let key = |i: usize| if k >= 5 { shifted_weight(mu, i) } else { 0.0 };
    // by key, then later indices first so the second half fills first
    let ranked = |parity: Option<usize>| {
        let mut v: Vec<usize> = (1..=n)
            .filter(|&i| allowed(i) && parity.is_none_or(|p| i % 2 == p))
            .collect();
        v.sort_by(|&a, &b| key(a).total_cmp(&key(b)).then(b.cmp(&a)));
        v
    };
    let mut x = vec![0.0; n];
    if k < 2 {
        for i in ranked(None).into_iter().take(c) {
            x[i - 1] = 1.0;
        }
        return Some(x);
    }
    if c % 2 == 1 {
        return None;
    }
    for parity in [0, 1] {
        let pool = ranked(Some(parity));
        if pool.len() < c / 2 {
            return None;
        }
        for &i in &pool[..c / 2] {
            x[i - 1] = 1.0;
        }
    }
    if k >= 3 {
        // x_{N/2} sits on both sides, so only i < N/2 and i > N/2 count
        let half = n / 2;
        let count = |x: &[f64], r: std::ops::RangeInclusive<usize>| r.filter(|&i| x[i - 1] == 1.0).count();
        while count(&x, 1..=half.saturating_sub(1)) > count(&x, half + 1..=n) {
            // swap the worst first-half pick for the best free second-half
            // index of the same parity
            let swap = [0, 1].into_iter().find_map(|parity| {
                let pool = ranked(Some(parity));
                let f = pool.iter().rev().find(|&&i| i < half && x[i - 1] == 1.0)?;
                let s = pool.iter().find(|&&i| i > half && x[i - 1] == 0.0)?;
                Some((*f, *s))
            });
            let (f, s) = swap?;
            x[f - 1] = 0.0;
            x[s - 1] = 1.0;
        }
    }
    Some(x)
}

/// Generates the linear-objective family, certifying that the result is
/// feasible.
pub fn gen_blp(spec: &BlpSpec) -> Result<ConstrainedModel> {
    spec.validate()?;
    let mu = blp_weights(spec.n, spec.seed);
    let mut b = ModelBuilder::new();
    for i in 1..=spec.n {
        b.binary(blp_var(i));
    }
    b.objective(linear_objective(&mu));
    b.constraint("cardinality", sum_where(spec.n, |_| true), Sense::Eq, spec.c as f64);
    extra_constraints(&mut b, spec, &mu);
    b.metadata("family", if spec.extra == 0 { "blp" } else { "blp-k" })
        .metadata("n", spec.n.to_string())
        .metadata("c", spec.c.to_string())
        .metadata("k", spec.extra.to_string())
        .metadata("seed", spec.seed.to_string())
        .metadata("weights", "mu_i ~ U(0,1) open, ChaCha8 seed_from_u64(seed), drawn for i = 1..N")
        .metadata(
            "indexing",
            "variables x1..xN are 1-based; even/odd refers to the index; every fifth means \
             index divisible by 5; halves split at floor(N/2) with x_{N/2} on both sides; \
             shifted weights mu_{i+1} - mu_{i-1} wrap cyclically",
        );
    let model = b.finish()?;
    certify(&model, witness(spec, &mu))?;
    Ok(model)
}

pub(crate) fn certify(model: &ConstrainedModel, point: Option<Vec<f64>>) -> Result<()> {
    let unproven = || {
        Error::InfeasibleSpec(format!(
            "could not find a feasible point for the generated `{}` model",
            model.metadata().get("family").map_or("", String::as_str)
        ))
    };
    let point = point.ok_or_else(unproven)?;
    let (ok, _) = model.check_feasibility(&model.assignment(point), crate::model::Tolerance::Default)?;
    if ok {
        Ok(())
    } else {
        Err(unproven())
    }
}

/// Exact optimum of the `extra = 0` family: the sum of the `C` smallest
/// weights.
pub fn blp_oracle(spec: &BlpSpec) -> Result<f64> {
    spec.validate()?;
    if spec.extra > 0 {
        return Err(Error::Unsupported(
            "the sort oracle only covers the cardinality constraint alone; use brute force".into(),
        ));
    }
    let mut mu = blp_weights(spec.n, spec.seed);
    mu.sort_by(f64::total_cmp);
    Ok(mu[..spec.c].iter().sum())
}

/// Same objective under the single quadratic constraint
/// `Σ_i Σ_j x_i x_j ≥ C`, stored term by term (`x_i x_i` as `x_i`, each
/// unordered pair once with coefficient 2).
pub fn gen_blp_quadratic_constraint(n: usize, c: usize, seed: u64) -> Result<ConstrainedModel> {
    if c > n * n {
        return Err(Error::InvalidParams(format!("C = {c} exceeds N² = {}", n * n)));
    }
    let mu = blp_weights(n, seed);
    let mut b = ModelBuilder::new();
    for i in 1..=n {
        b.binary(blp_var(i));
    }
    b.objective(linear_objective(&mu));
    let mut lhs = QuadraticExpr::new();
    for i in 1..=n {
        lhs.add_linear(&blp_var(i), 1.0);
        for j in i + 1..=n {
            lhs.add_quadratic(&blp_var(i), &blp_var(j), 2.0);
        }
    }
    b.constraint("pairs_at_least_c", lhs, Sense::Ge, c as f64);
    b.metadata("family", "blp-quad")
        .metadata("n", n.to_string())
        .metadata("c", c.to_string())
        .metadata("seed", seed.to_string());
    let model = b.finish()?;
    certify(&model, Some(vec![1.0; n]))?;
    Ok(model)
}

/// Optimum of [`gen_blp_quadratic_constraint`]: `(Σx)² ≥ C` forces at least
/// `⌈√C⌉` ones, so the answer is the sum of that many smallest weights.
pub fn blp_quadratic_oracle(n: usize, c: usize, seed: u64) -> Result<f64> {
    if c > n * n {
        return Err(Error::InvalidParams(format!("C = {c} exceeds N² = {}", n * n)));
    }
    let mut m = 0usize;
    while m * m < c {
        m += 1;
    }
    let mut mu = blp_weights(n, seed);
    mu.sort_by(f64::total_cmp);
    Ok(mu[..m].iter().sum())
}
