use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::slack::{encode_inequality, SlackEncoding};
use crate::error::{Error, Result};
use crate::model::{ConstrainedModel, QuboModel, Sense, Tolerance};
use crate::solvers::brute;

/// Post-slack binaries up to which [`suggest_lambda`] refines by exhaustive
/// search.
pub const BISECTION_MAX_BINARIES: usize = 20;

/// The refinement grid is `λ_auto · 2^-k` for `k = 0..=BISECTION_STEPS`.
pub const BISECTION_STEPS: u32 = 24;

/// Per-constraint penalty weights. Labels absent from `lambdas` get the auto
/// rule when `auto` is set and are an error otherwise.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PenaltyConfig {
    #[serde(default)]
    pub lambdas: BTreeMap<String, f64>,
    #[serde(default = "yes")]
    pub auto: bool,
}

fn yes() -> bool {
    true
}

impl Default for PenaltyConfig {
    fn default() -> Self {
        Self {
            lambdas: BTreeMap::new(),
            auto: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LambdaRule {
    Auto,
    Bisection,
    User,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LambdaEntry {
    pub lambda: f64,
    pub rule: LambdaRule,
}

/// `2 · (Σ|objective coefficients| + |offset|) + 1`: a unit violation then
/// outweighs the whole objective range.
pub fn auto_lambda(model: &ConstrainedModel) -> f64 {
    let obj = model.objective();
    2.0 * (obj.abs_coefficient_sum() + obj.offset().abs()) + 1.0
}

/// Penalized QUBO `F = Obj + Σ λ_k P_k²` and what went into it.
#[derive(Clone, Debug)]
pub struct CompiledQubo {
    /// Model binaries in declaration order, then slacks in constraint order.
    pub qubo: QuboModel,
    pub num_original: usize,
    pub slacks: Vec<SlackEncoding>,
    pub lambdas: BTreeMap<String, LambdaEntry>,
    /// Quadratic constraints, which are left out of `F` because squaring
    /// them is quartic.
    pub retained: Vec<String>,
}

impl CompiledQubo {
    /// Values of the original model variables for a QUBO assignment.
    pub fn original_values(&self, x: &[u8]) -> Vec<f64> {
        x[..self.num_original].iter().map(|&v| v as f64).collect()
    }

    pub fn lambda_report_json(&self) -> String {
        serde_json::to_string_pretty(&self.lambdas).expect("report serializes")
    }
}

pub(crate) fn resolve_lambdas(
    model: &ConstrainedModel,
    cfg: &PenaltyConfig,
) -> Result<BTreeMap<String, LambdaEntry>> {
    for (label, &l) in &cfg.lambdas {
        if !model.constraints().iter().any(|c| &c.label == label) {
            return Err(Error::InvalidParams(format!(
                "penalty given for unknown constraint `{label}`"
            )));
        }
        if !(l > 0.0 && l.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "penalty for `{label}` must be positive and finite, got {l}"
            )));
        }
    }
    let auto = auto_lambda(model);
    model
        .constraints()
        .iter()
        .map(|c| {
            let entry = match cfg.lambdas.get(&c.label) {
                Some(&lambda) => LambdaEntry {
                    lambda,
                    rule: LambdaRule::User,
                },
                None if cfg.auto => LambdaEntry {
                    lambda: auto,
                    rule: LambdaRule::Auto,
                },
                None => {
                    return Err(Error::InvalidParams(format!(
                        "no penalty for `{}` and auto is off",
                        c.label
                    )))
                }
            };
            Ok((c.label.clone(), entry))
        })
        .collect()
}

/// Compiles an all-binary model into `F(x) = Obj(x) + Σ_k λ_k P_k(x)²`.
///
/// Inequalities are slack-encoded first (see
/// [`encode_inequality`](super::encode_inequality)); `P_k` is
/// `lhs − rhs` of the resulting equality. Quadratic constraints are listed in
/// [`CompiledQubo::retained`] instead.
pub fn compile_penalties(model: &ConstrainedModel, cfg: &PenaltyConfig) -> Result<CompiledQubo> {
    if let Some(v) = model.variables().iter().find(|v| !v.domain.is_binary()) {
        return Err(Error::MustBinarize(v.id.clone()));
    }
    let lambdas = resolve_lambdas(model, cfg)?;
    let mut labels: Vec<String> = model.variables().iter().map(|v| v.id.clone()).collect();
    let mut index: HashMap<String, usize> =
        labels.iter().enumerate().map(|(i, l)| (l.clone(), i)).collect();

    let mut rows = Vec::new();
    let mut slacks = Vec::new();
    let mut retained = Vec::new();
    for c in model.constraints() {
        if c.is_quadratic() {
            retained.push(c.label.clone());
            continue;
        }
        let eq = if c.sense == Sense::Eq {
            c.clone()
        } else {
            let (eq, enc) = encode_inequality(c)?;
            for id in &enc.slack_ids {
                if index.contains_key(id) {
                    return Err(Error::Validation(format!(
                        "slack id `{id}` collides with a model variable"
                    )));
                }
                index.insert(id.clone(), labels.len());
                labels.push(id.clone());
            }
            slacks.push(enc);
            eq
        };
        rows.push((lambdas[&c.label].lambda, eq));
    }

    let mut q = QuboModel::new(labels.len());
    let obj = model.objective();
    q.add_offset(obj.offset());
    for (id, &c) in obj.linear() {
        q.add_linear(index[id], c);
    }
    for ((a, b), &c) in obj.quadratic() {
        q.add_quadratic(index[a], index[b], c);
    }
    for (lambda, eq) in &rows {
        let k = eq.lhs.offset() - eq.rhs;
        let terms: Vec<(usize, f64)> = eq.lhs.linear().iter().map(|(id, &a)| (index[id], a)).collect();
        q.add_offset(lambda * k * k);
        for (t, &(i, a)) in terms.iter().enumerate() {
            q.add_linear(i, lambda * (a * a + 2.0 * a * k));
            for &(j, b) in &terms[t + 1..] {
                q.add_quadratic(i, j, 2.0 * lambda * a * b);
            }
        }
    }
    let num_original = model.num_variables();
    Ok(CompiledQubo {
        qubo: q.with_labels(labels)?,
        num_original,
        slacks,
        lambdas,
        retained,
    })
}

/// Penalty weights per constraint, possibly refined below the auto rule.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LambdaSuggestion {
    pub lambdas: BTreeMap<String, LambdaEntry>,
    /// False when the model was too large (or otherwise unsuitable) for the
    /// exhaustive refinement; the auto rule is returned unchanged.
    pub refined: bool,
}

fn argmin_is_feasible(model: &ConstrainedModel, cfg: &PenaltyConfig) -> Result<bool> {
    let compiled = compile_penalties(model, cfg)?;
    let (_, minimizers) = brute::qubo_minimizers(&compiled.qubo)?;
    for x in &minimizers {
        let a = model.assignment(compiled.original_values(x));
        if !model.check_feasibility(&a, Tolerance::Default)?.0 {
            return Ok(false);
        }
    }
    Ok(true)
}

/// The auto rule, refined for small models to the smallest uniform
/// `λ_auto · 2^-k` on the grid whose penalized minimizers are all feasible.
///
/// Feasibility of the minimizers is monotone in λ, so the grid is bisected.
pub fn suggest_lambda(model: &ConstrainedModel) -> Result<LambdaSuggestion> {
    let base = compile_penalties(model, &PenaltyConfig::default())?;
    let auto = LambdaSuggestion {
        lambdas: base.lambdas.clone(),
        refined: false,
    };
    if model.constraints().is_empty()
        || base.qubo.n() > BISECTION_MAX_BINARIES
        || !base.retained.is_empty()
    {
        return Ok(auto);
    }
    let lambda_auto = auto_lambda(model);
    let at = |k: u32| PenaltyConfig {
        lambdas: model
            .constraints()
            .iter()
            .map(|c| (c.label.clone(), lambda_auto * 0.5f64.powi(k as i32)))
            .collect(),
        auto: false,
    };
    if !argmin_is_feasible(model, &at(0))? {
        return Ok(auto);
    }
    // invariant: `lo` feasible, `hi` infeasible or past the grid
    let (mut lo, mut hi) = (0u32, BISECTION_STEPS + 1);
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if argmin_is_feasible(model, &at(mid))? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let lambda = lambda_auto * 0.5f64.powi(lo as i32);
    Ok(LambdaSuggestion {
        lambdas: model
            .constraints()
            .iter()
            .map(|c| {
                (
                    c.label.clone(),
                    LambdaEntry {
                        lambda,
                        rule: LambdaRule::Bisection,
                    },
                )
            })
            .collect(),
        refined: true,
    })
}
