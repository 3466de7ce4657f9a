//! Decompose-sample-merge orchestration over a constrained model.
//!
//! The model is viewed as a penalized function over its binaries (integers
//! expanded to bits): linear equalities cost `λ (lhs − rhs)²`, inequalities
//! and quadratic constraints cost `λ · violation`, and constraints that touch
//! continuous variables are settled by a linear program for the current
//! binaries. The loop alternates a tabu pass over all binaries with a
//! subproblem step that frees the binaries whose flip matters most, solves
//! that sub-QUBO with the configured subsolver and keeps the merge only if it
//! strictly improves the incumbent.

mod penalized;
mod search;
mod subproblem;

pub use subproblem::{extract_subproblem, Subproblem};

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::compile::PenaltyConfig;
use crate::error::{Error, Result};
use crate::model::{ConstrainedModel, QuboModel, Sample, SampleSet};
use crate::solvers::{
    default_tenure, simulated_annealing_qubo, simulated_quantum_annealing_qubo, stream_rng,
    tabu_search, AnnealSchedule, Deadline, SolverParams, DEFAULT_SEED,
};
use penalized::{Penalized, State};

/// Entries kept in [`HybridReport::log`]; later iterations are counted but
/// not logged.
pub const LOG_LIMIT: usize = 4096;

/// Placeholder time-sharing policy, reported in every [`HybridReport`].
pub const POLICY: &str =
    "alternate one tabu pass over all binaries with one subproblem solve (50/50 by iteration)";

/// Solver used on extracted subproblems.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Subsolver {
    #[default]
    Sa,
    Sqa,
    Tabu,
}

impl Subsolver {
    pub fn as_str(&self) -> &'static str {
        match self {
            Subsolver::Sa => "sa",
            Subsolver::Sqa => "sqa",
            Subsolver::Tabu => "tabu",
        }
    }
}

impl fmt::Display for Subsolver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Subsolver {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sa" => Ok(Subsolver::Sa),
            "sqa" => Ok(Subsolver::Sqa),
            "tabu" => Ok(Subsolver::Tabu),
            _ => Err(Error::InvalidParams(format!(
                "unknown subsolver `{s}` (expected sa, sqa or tabu)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HybridConfig {
    /// Seconds; `None` means `max(time_floor, variables / 5000)`.
    pub time_limit: Option<f64>,
    /// Minimum run time in seconds; shorter limits are raised to it.
    pub time_floor: f64,
    /// Samples returned.
    pub target: usize,
    /// Binaries freed per subproblem.
    pub subproblem_size: usize,
    pub subsolver: Subsolver,
    pub penalty: PenaltyConfig,
    pub seed: u64,
    /// Stop after this many loop iterations even if time remains.
    pub max_iterations: Option<usize>,
}

impl Default for HybridConfig {
    fn default() -> Self {
        Self {
            time_limit: None,
            time_floor: 5.0,
            target: 100,
            subproblem_size: 180,
            subsolver: Subsolver::Sa,
            penalty: PenaltyConfig::default(),
            seed: DEFAULT_SEED,
            max_iterations: None,
        }
    }
}

impl HybridConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_time_limit(mut self, seconds: f64) -> Self {
        self.time_limit = Some(seconds);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParams(m));
        if !(self.time_floor >= 1.0 && self.time_floor.is_finite()) {
            return bad(format!("time_floor must be at least 1 s, got {}", self.time_floor));
        }
        if let Some(t) = self.time_limit {
            if !(t > 0.0 && t.is_finite()) {
                return bad(format!("time_limit must be positive and finite, got {t}"));
            }
        }
        if self.target == 0 {
            return bad("target must be at least 1".into());
        }
        if self.subproblem_size == 0 {
            return bad("subproblem_size must be at least 1".into());
        }
        Ok(())
    }

    /// The limit actually used for a model with `variables` variables, and a
    /// warning when the requested one was raised to the floor.
    pub fn effective_time_limit(&self, variables: usize) -> (f64, Option<String>) {
        let default = self.time_floor.max(variables as f64 / 5000.0);
        match self.time_limit {
            None => (default, None),
            Some(t) if t < self.time_floor => (
                self.time_floor,
                Some(format!(
                    "time limit {t} s is below the {} s minimum; using the minimum",
                    self.time_floor
                )),
            ),
            Some(t) => (t, None),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Initial,
    Classical,
    Subproblem,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub seq: usize,
    pub phase: Phase,
    /// Penalized energy of the incumbent after this step.
    pub incumbent_energy: f64,
    pub incumbent_feasible: bool,
    /// Binaries freed by a subproblem step (indices into the model's binary
    /// expansion); empty for other phases.
    pub subproblem: Vec<usize>,
    pub improved: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct HybridReport {
    pub sampleset: SampleSet,
    pub log: Vec<IterationRecord>,
    pub iterations: usize,
    pub wall_time: f64,
    pub time_limit: f64,
    pub feasible_count: usize,
    pub warnings: Vec<String>,
    pub policy: String,
}

impl HybridReport {
    pub fn best_feasible(&self) -> Option<&Sample> {
        self.sampleset.best_feasible()
    }
}

/// Lowest-energy feasible sample; `None` when no sample is feasible.
pub fn select_best_feasible(ss: &SampleSet) -> Option<Sample> {
    ss.samples()
        .iter()
        .filter(|s| s.feasible)
        .min_by(|a, b| a.energy.total_cmp(&b.energy))
        .cloned()
}

/// Distinct states seen, by penalized energy.
struct Pool {
    states: HashMap<Vec<u8>, f64>,
    keep: usize,
}

impl Pool {
    fn new(keep: usize) -> Self {
        Self {
            states: HashMap::new(),
            keep,
        }
    }

    fn insert(&mut self, st: &State) -> bool {
        if self.states.contains_key(&st.x) {
            return false;
        }
        self.states.insert(st.x.clone(), st.energy);
        if self.states.len() > 4 * self.keep {
            let best = self.best(self.keep);
            self.states = best.into_iter().collect();
        }
        true
    }

    /// Up to `k` states, lowest energy first, ties by state.
    fn best(&self, k: usize) -> Vec<(Vec<u8>, f64)> {
        let mut v: Vec<(Vec<u8>, f64)> = self.states.iter().map(|(x, &e)| (x.clone(), e)).collect();
        v.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
        v.truncate(k);
        v
    }
}

struct Run<'a> {
    p: &'a Penalized,
    cfg: &'a HybridConfig,
    incumbent: State,
    log: Vec<IterationRecord>,
    seq: usize,
    pool: Pool,
}

impl Run<'_> {
    fn record(&mut self, phase: Phase, subproblem: Vec<usize>, improved: bool) {
        self.seq += 1;
        if self.log.len() < LOG_LIMIT {
            self.log.push(IterationRecord {
                seq: self.seq,
                phase,
                incumbent_energy: self.incumbent.energy,
                incumbent_feasible: self.p.feasible(&self.incumbent),
                subproblem,
                improved,
            });
        }
    }

    /// Adopts `st` if it is strictly better; it joins the pool either way.
    fn offer(&mut self, st: State) -> bool {
        self.pool.insert(&st);
        if st.energy < self.incumbent.energy - self.p.eps() {
            self.incumbent = st;
            true
        } else {
            false
        }
    }

    fn solve_sub(&self, q: &QuboModel, seed: u64, remaining: f64) -> Result<Vec<u8>> {
        let mut params = SolverParams::default().with_seed(seed);
        params.time_limit = Some(remaining.max(1e-3));
        let ss = match self.cfg.subsolver {
            Subsolver::Sa => simulated_annealing_qubo(q, &params.with_reads(4).with_sweeps(256))?,
            Subsolver::Sqa => {
                params.trotter_slices = 8;
                simulated_quantum_annealing_qubo(
                    q,
                    &AnnealSchedule::default(),
                    &params.with_reads(1).with_sweeps(64),
                )?
            }
            Subsolver::Tabu => tabu_search(q, &params.with_reads(1).with_sweeps(20))?,
        };
        let best = ss.first().expect("subsolvers return at least one read");
        Ok(best.assignment.values().iter().map(|&v| v as u8).collect())
    }
}

fn empty_report(cfg: &HybridConfig, start: Instant, time_limit: f64, warnings: Vec<String>) -> HybridReport {
    HybridReport {
        sampleset: SampleSet::empty("hybrid", cfg.seed),
        log: Vec::new(),
        iterations: 0,
        wall_time: start.elapsed().as_secs_f64(),
        time_limit,
        feasible_count: 0,
        warnings,
        policy: POLICY.into(),
    }
}

/// Anytime hybrid solve of a constrained model.
///
/// Runs until the time limit (or `max_iterations`) and returns up to
/// `target` samples, each carrying the model objective as its energy and
/// feasibility from [`ConstrainedModel::check_feasibility`].
///
/// ```
/// use cqmkit::hybrid::{hybrid_solve, HybridConfig};
/// use cqmkit::model::{ModelBuilder, QuadraticExpr, Sense};
///
/// let mut b = ModelBuilder::new();
/// b.binary("a").binary("b").binary("c");
/// b.objective(QuadraticExpr::linear_sum([("a", 3.0), ("b", 1.0), ("c", 2.0)]));
/// b.constraint("pick2", QuadraticExpr::linear_sum([("a", 1.0), ("b", 1.0), ("c", 1.0)]), Sense::Eq, 2.0);
/// let model = b.finish().unwrap();
///
/// let cfg = HybridConfig { time_floor: 1.0, max_iterations: Some(4), target: 5, ..Default::default() };
/// let report = hybrid_solve(&model, &cfg).unwrap();
/// assert_eq!(report.best_feasible().unwrap().energy, 3.0);
/// ```
pub fn hybrid_solve(model: &ConstrainedModel, cfg: &HybridConfig) -> Result<HybridReport> {
    let start = Instant::now();
    cfg.validate()?;
    let (time_limit, warning) = cfg.effective_time_limit(model.num_variables());
    let mut warnings = Vec::new();
    if let Some(w) = warning {
        log::warn!("{w}");
        warnings.push(w);
    }
    if model.num_variables() == 0 {
        return Ok(empty_report(cfg, start, time_limit, warnings));
    }
    let p = Penalized::new(model, &cfg.penalty)?;
    let n = p.n;
    let end = start + Duration::from_secs_f64(time_limit);
    let loop_end = start + Duration::from_secs_f64(0.9 * time_limit);
    let pad_end = start + Duration::from_secs_f64(0.97 * time_limit);
    let loop_deadline = Deadline::at(loop_end);
    let mut rng = stream_rng(cfg.seed, 0);

    let mut first = p.state(vec![0; n]);
    search::greedy(&p, &mut first);
    let mut run = Run {
        p: &p,
        cfg,
        pool: Pool::new(cfg.target),
        incumbent: first.clone(),
        log: Vec::new(),
        seq: 0,
    };
    run.pool.insert(&first);
    run.record(Phase::Initial, Vec::new(), true);

    let k = cfg.subproblem_size.min(n);
    let tenure = default_tenure(n);
    let moves = (10 * n).clamp(1_000, 50_000);
    let max_iter = cfg.max_iterations.unwrap_or(usize::MAX);
    let mut iterations = 0;
    let (mut stall_classical, mut stall_sub) = (0usize, 0usize);
    while n > 0 && iterations < max_iter && Instant::now() < loop_end {
        iterations += 1;
        if iterations % 2 == 1 {
            let mut x = run.incumbent.x.clone();
            search::kick(&mut x, stall_classical.min((n / 20).max(1)), &mut rng);
            let st = search::tabu(&p, p.state(x), moves, tenure, loop_deadline);
            let improved = run.offer(st);
            stall_classical = if improved { 0 } else { stall_classical + 1 };
            run.record(Phase::Classical, Vec::new(), improved);
        } else {
            let mut inc = run.incumbent.clone();
            let gains: Vec<f64> = (0..n).map(|i| p.delta(&mut inc, i).abs()).collect();
            let order = subproblem::rank_by_gain(&gains);
            // rotate through the ranking while subproblems keep failing
            let offset = if k == n { 0 } else { (stall_sub * k.div_ceil(2)) % n };
            let mut vars: Vec<usize> = (0..k).map(|a| order[(offset + a) % n]).collect();
            vars.sort_unstable();
            let sub = p.sub_qubo(&mut inc, &vars);
            let remaining = loop_end.saturating_duration_since(Instant::now()).as_secs_f64();
            let y = run.solve_sub(&sub, cfg.seed.wrapping_add(iterations as u64), remaining)?;
            let mut x = inc.x.clone();
            for (a, &i) in vars.iter().enumerate() {
                x[i] = y[a];
            }
            let mut st = p.state(x);
            search::greedy(&p, &mut st);
            let st = p.state(st.x);
            let improved = run.offer(st);
            stall_sub = if improved { 0 } else { stall_sub + 1 };
            run.record(Phase::Subproblem, vars, improved);
        }
    }

    // pad with perturbed re-descents of the best states seen
    let mut chosen = run.pool.best(cfg.target);
    let mut seen: HashSet<Vec<u8>> = chosen.iter().map(|(x, _)| x.clone()).collect();
    let mut attempts = 0;
    let rate = 2.0 / n.max(1) as f64;
    while n > 0 && chosen.len() < cfg.target && attempts < 10 * cfg.target && Instant::now() < pad_end {
        let base = &chosen[attempts % chosen.len()].0;
        let mut x = base.clone();
        search::perturb(&mut x, rate, &mut rng);
        let mut st = p.state(x);
        search::greedy(&p, &mut st);
        let st = p.state(st.x);
        attempts += 1;
        if st.energy < run.incumbent.energy - p.eps() {
            run.incumbent = st.clone();
            run.record(Phase::Classical, Vec::new(), true);
        }
        if seen.insert(st.x.clone()) {
            chosen.push((st.x, st.energy));
        }
    }
    // small models run out of distinct states: repeat the best ones
    let distinct = chosen.len();
    for a in 0..cfg.target.saturating_sub(distinct) {
        chosen.push(chosen[a % distinct].clone());
    }

    let mut built: HashMap<Vec<u8>, Sample> = HashMap::new();
    let mut samples = Vec::with_capacity(chosen.len());
    for (x, _) in &chosen {
        let sample = match built.get(x) {
            Some(s) => s.clone(),
            None => {
                let s = model.sample(model.assignment(p.original_values(model, x)))?;
                built.insert(x.clone(), s.clone());
                s
            }
        };
        samples.push(sample);
    }
    let wall_time = start.elapsed().as_secs_f64();
    if Instant::now() > end + Duration::from_secs(1) {
        log::warn!("hybrid solve overran its time limit: {wall_time:.3} s of {time_limit} s");
    }
    let sampleset = SampleSet::new("hybrid", samples, wall_time, cfg.seed);
    Ok(HybridReport {
        feasible_count: sampleset.feasible_count(),
        sampleset,
        log: run.log,
        iterations,
        wall_time,
        time_limit,
        warnings,
        policy: POLICY.into(),
    })
}
