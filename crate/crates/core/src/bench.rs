//! Benchmark matrices: (family × size × solver) cells run with repeats,
//! aggregated to mean/min/max and written as CSV and JSON.
//!
//! Solver wall time spans the solver call only. Picking the best feasible
//! sample is timed separately and reported as `selection_time_s`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::compile::{compile_penalties, PenaltyConfig};
use crate::error::{Error, Result};
use crate::hybrid::{hybrid_solve, select_best_feasible, HybridConfig};
use crate::model::{ConstrainedModel, SampleSet};
use crate::problems::{
    blp_oracle, blp_quadratic_oracle, bqp_oracle, gen_blp, gen_blp_quadratic_constraint, gen_bqp,
    gen_unit_commitment, uc_oracle, BlpSpec, BqpSpec, UcSpec,
};
use crate::solvers::{
    simulated_annealing_qubo, simulated_quantum_annealing_qubo, tabu_search, AnnealSchedule,
    SolverParams, DEFAULT_SEED,
};

/// Header of the per-run CSV.
pub const RECORD_HEADER: &str = "family,N,C,k,solver,seed,objective,feasible,wall_time_s";

/// Header of the per-cell CSV.
pub const AGGREGATE_HEADER: &str =
    "family,N,C,k,solver,obj_mean,obj_min,obj_max,time_mean,time_min,time_max,gap_to_oracle";

/// Problem instance of a cell. `seed` fixes the instance; the run seeds of
/// the plan only drive the solver.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FamilySpec {
    Blp {
        #[serde(alias = "N")]
        n: usize,
        #[serde(alias = "C")]
        c: usize,
        #[serde(default)]
        k: usize,
        #[serde(default = "default_seed")]
        seed: u64,
    },
    BlpQuad {
        #[serde(alias = "N")]
        n: usize,
        #[serde(alias = "C")]
        c: usize,
        #[serde(default = "default_seed")]
        seed: u64,
    },
    Bqp {
        #[serde(alias = "N")]
        n: usize,
        #[serde(alias = "C")]
        c: usize,
        #[serde(default = "default_seed")]
        seed: u64,
    },
    /// Random fleet; reported as `N` = generators, `C` = periods.
    Uc {
        generators: usize,
        periods: usize,
        #[serde(default = "one")]
        categories: usize,
        #[serde(default = "one")]
        segments: usize,
        #[serde(default = "default_seed")]
        seed: u64,
    },
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

fn one() -> usize {
    1
}

impl FamilySpec {
    pub fn name(&self) -> &'static str {
        match self {
            FamilySpec::Blp { .. } => "blp",
            FamilySpec::BlpQuad { .. } => "blp-quad",
            FamilySpec::Bqp { .. } => "bqp",
            FamilySpec::Uc { .. } => "uc",
        }
    }

    /// `(N, C, k)` as reported in records.
    pub fn dims(&self) -> (usize, usize, usize) {
        match *self {
            FamilySpec::Blp { n, c, k, .. } => (n, c, k),
            FamilySpec::BlpQuad { n, c, .. } | FamilySpec::Bqp { n, c, .. } => (n, c, 0),
            FamilySpec::Uc {
                generators, periods, ..
            } => (generators, periods, 0),
        }
    }

    pub fn build(&self) -> Result<ConstrainedModel> {
        match *self {
            FamilySpec::Blp { n, c, k, seed } => gen_blp(&BlpSpec::new(n, c, seed).with_extra(k)),
            FamilySpec::BlpQuad { n, c, seed } => gen_blp_quadratic_constraint(n, c, seed),
            FamilySpec::Bqp { n, c, seed } => gen_bqp(&BqpSpec::new(n, c, seed)),
            FamilySpec::Uc { .. } => gen_unit_commitment(&self.uc_spec()?),
        }
    }

    fn uc_spec(&self) -> Result<UcSpec> {
        match *self {
            FamilySpec::Uc {
                generators,
                periods,
                categories,
                segments,
                seed,
            } => UcSpec::random(generators, periods, categories, segments, seed),
            _ => unreachable!("uc_spec on a non-UC family"),
        }
    }

    /// Exact optimum where an in-repo oracle covers the instance.
    pub fn oracle(&self) -> Option<f64> {
        match *self {
            FamilySpec::Blp { n, c, k, seed } => blp_oracle(&BlpSpec::new(n, c, seed).with_extra(k)).ok(),
            FamilySpec::BlpQuad { n, c, seed } => blp_quadratic_oracle(n, c, seed).ok(),
            FamilySpec::Bqp { n, c, seed } => bqp_oracle(&BqpSpec::new(n, c, seed)).ok(),
            FamilySpec::Uc { .. } => self.uc_spec().and_then(|s| uc_oracle(&s)).ok().map(|s| s.cost),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BenchSolver {
    Hybrid,
    Sa,
    Sqa,
    Tabu,
}

impl BenchSolver {
    pub fn as_str(&self) -> &'static str {
        match self {
            BenchSolver::Hybrid => "hybrid",
            BenchSolver::Sa => "sa",
            BenchSolver::Sqa => "sqa",
            BenchSolver::Tabu => "tabu",
        }
    }
}

/// One matrix entry. `params` is a [`HybridConfig`] for the hybrid solver
/// and a [`SolverParams`] otherwise; its seed is overridden per run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchCell {
    pub problem: FamilySpec,
    pub solver: BenchSolver,
    #[serde(default)]
    pub params: serde_json::Value,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchPlan {
    pub cells: Vec<BenchCell>,
    #[serde(default = "five")]
    pub repeats: usize,
    /// One run seed per repeat; `None` means `DEFAULT_SEED + r`.
    #[serde(default)]
    pub seeds: Option<Vec<u64>>,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

fn five() -> usize {
    5
}

impl BenchPlan {
    pub fn new(cells: Vec<BenchCell>) -> Self {
        Self {
            cells,
            repeats: 5,
            seeds: None,
            out: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let plan: Self = serde_json::from_str(text)?;
        plan.validate()?;
        Ok(plan)
    }

    pub fn run_seeds(&self) -> Vec<u64> {
        match &self.seeds {
            Some(s) => s.clone(),
            None => (0..self.repeats as u64).map(|r| DEFAULT_SEED + r).collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParams(m));
        if self.cells.is_empty() {
            return bad("plan has no cells".into());
        }
        if self.repeats == 0 {
            return bad("repeats must be at least 1".into());
        }
        if let Some(seeds) = &self.seeds {
            if seeds.len() != self.repeats {
                return bad(format!("{} seeds given for {} repeats", seeds.len(), self.repeats));
            }
            let mut sorted = seeds.clone();
            sorted.sort_unstable();
            if sorted.windows(2).any(|w| w[0] == w[1]) {
                return bad("seeds must be distinct".into());
            }
        }
        for cell in &self.cells {
            cell_solver(cell, DEFAULT_SEED)?;
        }
        Ok(())
    }
}

/// One (cell, repeat) observation. Failed runs keep their position with
/// `error` set and no objective.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub cell: usize,
    pub repeat: usize,
    pub family: String,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "C")]
    pub c: usize,
    pub k: usize,
    pub solver: String,
    pub seed: u64,
    /// Best feasible objective.
    pub objective: Option<f64>,
    pub wall_time_s: f64,
    pub selection_time_s: f64,
    pub feasible_count: usize,
    pub sampleset_size: usize,
    pub oracle: Option<f64>,
    pub error: Option<String>,
}

impl BenchRecord {
    pub fn feasible(&self) -> bool {
        self.objective.is_some()
    }
}

/// Statistics of one cell over its records.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub family: String,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "C")]
    pub c: usize,
    pub k: usize,
    pub solver: String,
    pub runs: usize,
    pub failures: usize,
    /// Over runs with a feasible objective.
    pub obj_mean: Option<f64>,
    pub obj_min: Option<f64>,
    pub obj_max: Option<f64>,
    /// Over runs that did not error.
    pub time_mean: Option<f64>,
    pub time_min: Option<f64>,
    pub time_max: Option<f64>,
    /// `(obj_min − oracle) / |oracle|`, or the plain difference when the
    /// oracle is zero.
    pub gap_to_oracle: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub records: Vec<BenchRecord>,
    pub aggregates: Vec<Aggregate>,
}

impl BenchReport {
    pub fn failures(&self) -> usize {
        self.records.iter().filter(|r| r.error.is_some()).count()
    }
}

enum CellSolver {
    Hybrid(HybridConfig),
    Classical(BenchSolver, SolverParams),
}

fn cell_solver(cell: &BenchCell, seed: u64) -> Result<CellSolver> {
    let params = if cell.params.is_null() {
        serde_json::json!({})
    } else {
        cell.params.clone()
    };
    Ok(match cell.solver {
        BenchSolver::Hybrid => {
            let cfg: HybridConfig = serde_json::from_value(params)?;
            cfg.validate()?;
            CellSolver::Hybrid(cfg.with_seed(seed))
        }
        s => {
            let p: SolverParams = serde_json::from_value(params)?;
            p.validate()?;
            CellSolver::Classical(s, p.with_seed(seed))
        }
    })
}

/// Solves and returns the sampleset plus the wall time of the solver call.
fn solve(model: &ConstrainedModel, solver: &CellSolver) -> Result<(SampleSet, f64)> {
    match solver {
        CellSolver::Hybrid(cfg) => {
            let start = Instant::now();
            let report = hybrid_solve(model, cfg)?;
            Ok((report.sampleset, start.elapsed().as_secs_f64()))
        }
        CellSolver::Classical(kind, p) => {
            let ss = solve_penalized(model, *kind, p)?;
            let wall = ss.wall_time;
            Ok((ss, wall))
        }
    }
}

/// Compiles an all-binary model to its penalized QUBO, samples it with a
/// classical solver and scores every read against the original model. The
/// sampleset wall time covers compilation and sampling.
pub fn solve_penalized(model: &ConstrainedModel, solver: BenchSolver, p: &SolverParams) -> Result<SampleSet> {
    let start = Instant::now();
    let compiled = compile_penalties(model, &PenaltyConfig::default())?;
    let raw = match solver {
        BenchSolver::Sa => simulated_annealing_qubo(&compiled.qubo, p)?,
        BenchSolver::Sqa => simulated_quantum_annealing_qubo(&compiled.qubo, &AnnealSchedule::default(), p)?,
        BenchSolver::Tabu => tabu_search(&compiled.qubo, p)?,
        BenchSolver::Hybrid => {
            return Err(Error::InvalidParams("use hybrid_solve for the hybrid solver".into()));
        }
    };
    let wall = start.elapsed().as_secs_f64();
    let samples = raw
        .samples()
        .iter()
        .map(|s| {
            let x: Vec<u8> = s.assignment.values().iter().map(|&v| v as u8).collect();
            model.sample(model.assignment(compiled.original_values(&x)))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SampleSet::new(solver.as_str(), samples, wall, p.seed))
}

fn run_one(cell: &BenchCell, model: &Result<ConstrainedModel>, seed: u64) -> Result<(SampleSet, f64)> {
    let model = model.as_ref().map_err(|e| Error::Validation(e.to_string()))?;
    solve(model, &cell_solver(cell, seed)?)
}

/// Runs every cell `repeats` times on up to `workers` threads. Records come
/// back ordered by (cell, repeat) whatever the scheduling; a failing run is
/// recorded and the rest continue.
pub fn run_plan(plan: &BenchPlan, workers: usize) -> Result<BenchReport> {
    plan.validate()?;
    let seeds = plan.run_seeds();
    let models: Vec<Result<ConstrainedModel>> = plan.cells.iter().map(|c| c.problem.build()).collect();
    let oracles: Vec<Option<f64>> = plan.cells.iter().map(|c| c.problem.oracle()).collect();
    let jobs: Vec<(usize, usize)> = (0..plan.cells.len())
        .flat_map(|c| (0..plan.repeats).map(move |r| (c, r)))
        .collect();
    let next = AtomicUsize::new(0);
    let (tx, rx) = mpsc::channel();
    std::thread::scope(|scope| {
        for _ in 0..workers.clamp(1, jobs.len()) {
            let tx = tx.clone();
            let (next, jobs, models, oracles, seeds) = (&next, &jobs, &models, &oracles, &seeds);
            scope.spawn(move || loop {
                let j = next.fetch_add(1, Ordering::Relaxed);
                let Some(&(c, r)) = jobs.get(j) else { break };
                let cell = &plan.cells[c];
                let (n, cc, k) = cell.problem.dims();
                let mut rec = BenchRecord {
                    cell: c,
                    repeat: r,
                    family: cell.problem.name().into(),
                    n,
                    c: cc,
                    k,
                    solver: cell.solver.as_str().into(),
                    seed: seeds[r],
                    objective: None,
                    wall_time_s: 0.0,
                    selection_time_s: 0.0,
                    feasible_count: 0,
                    sampleset_size: 0,
                    oracle: oracles[c],
                    error: None,
                };
                match run_one(cell, &models[c], seeds[r]) {
                    Ok((ss, wall)) => {
                        let t = Instant::now();
                        let best = select_best_feasible(&ss);
                        rec.selection_time_s = t.elapsed().as_secs_f64();
                        rec.objective = best.map(|s| s.energy);
                        rec.wall_time_s = wall;
                        rec.feasible_count = ss.feasible_count();
                        rec.sampleset_size = ss.len();
                    }
                    Err(e) => rec.error = Some(format!("{}: {e}", e.kind())),
                }
                if tx.send(rec).is_err() {
                    break;
                }
            });
        }
    });
    drop(tx);
    let mut records: Vec<BenchRecord> = rx.into_iter().collect();
    records.sort_by_key(|r| (r.cell, r.repeat));
    let aggregates = aggregate(&records)?;
    Ok(BenchReport { records, aggregates })
}

fn stats(values: &[f64]) -> (Option<f64>, Option<f64>, Option<f64>) {
    if values.is_empty() {
        return (None, None, None);
    }
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    // rounding can push the sum of equal values an ulp past them
    let mean = (values.iter().sum::<f64>() / values.len() as f64).clamp(min, max);
    (Some(mean), Some(min), Some(max))
}

/// Relative gap of `best` to `oracle`; the plain difference for a zero
/// oracle.
pub fn gap(best: f64, oracle: f64) -> f64 {
    if oracle == 0.0 {
        best - oracle
    } else {
        (best - oracle) / oracle.abs()
    }
}

/// One aggregate per cell, in cell order. Records of a cell are grouped by
/// `cell`; mean is the left-to-right sum over repeats divided by the count,
/// clamped to `[min, max]`.
pub fn aggregate(records: &[BenchRecord]) -> Result<Vec<Aggregate>> {
    if records.is_empty() {
        return Err(Error::InvalidParams("no records to aggregate".into()));
    }
    let mut cells: Vec<usize> = records.iter().map(|r| r.cell).collect();
    cells.sort_unstable();
    cells.dedup();
    Ok(cells
        .into_iter()
        .map(|cell| {
            let mut rs: Vec<&BenchRecord> = records.iter().filter(|r| r.cell == cell).collect();
            rs.sort_by_key(|r| r.repeat);
            let objs: Vec<f64> = rs.iter().filter_map(|r| r.objective).collect();
            let times: Vec<f64> = rs.iter().filter(|r| r.error.is_none()).map(|r| r.wall_time_s).collect();
            let (obj_mean, obj_min, obj_max) = stats(&objs);
            let (time_mean, time_min, time_max) = stats(&times);
            let first = rs[0];
            Aggregate {
                family: first.family.clone(),
                n: first.n,
                c: first.c,
                k: first.k,
                solver: first.solver.clone(),
                runs: rs.len(),
                failures: rs.iter().filter(|r| r.error.is_some()).count(),
                obj_mean,
                obj_min,
                obj_max,
                time_mean,
                time_min,
                time_max,
                gap_to_oracle: obj_min.zip(first.oracle).map(|(b, o)| gap(b, o)),
            }
        })
        .collect())
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "none".into(), |x| x.to_string())
}

/// Raw CSV, one row per record. Floats use shortest round-trip form.
pub fn records_csv(records: &[BenchRecord]) -> String {
    let mut out = format!("{RECORD_HEADER}\n");
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.family,
            r.n,
            r.c,
            r.k,
            r.solver,
            r.seed,
            cell(r.objective),
            r.feasible(),
            r.wall_time_s
        );
    }
    out
}

pub fn aggregates_csv(aggregates: &[Aggregate]) -> String {
    let mut out = format!("{AGGREGATE_HEADER}\n");
    for a in aggregates {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            a.family,
            a.n,
            a.c,
            a.k,
            a.solver,
            cell(a.obj_mean),
            cell(a.obj_min),
            cell(a.obj_max),
            cell(a.time_mean),
            cell(a.time_min),
            cell(a.time_max),
            cell(a.gap_to_oracle)
        );
    }
    out
}

/// Long format for plotting `metric` against `N`: one row per (cell, stat).
fn plot_csv(aggregates: &[Aggregate], pick: impl Fn(&Aggregate) -> [Option<f64>; 3]) -> String {
    let mut out = String::from("family,solver,C,k,N,stat,value\n");
    for a in aggregates {
        for (stat, v) in ["mean", "min", "max"].iter().zip(pick(a)) {
            let _ = writeln!(out, "{},{},{},{},{},{stat},{}", a.family, a.solver, a.c, a.k, a.n, cell(v));
        }
    }
    out
}

/// Files written by [`emit`].
#[derive(Clone, Debug, PartialEq)]
pub struct EmittedFiles {
    pub records: PathBuf,
    pub aggregates: PathBuf,
    pub json: PathBuf,
    pub objective_plot: PathBuf,
    pub time_plot: PathBuf,
}

/// Writes `records.csv`, `aggregate.csv`, `bench.json`,
/// `plot_objective_vs_n.csv` and `plot_time_vs_n.csv` into `dir`. Every file
/// is staged under a temporary name first, so a failure leaves none of them
/// behind.
pub fn emit(records: &[BenchRecord], dir: &Path) -> Result<EmittedFiles> {
    let aggregates = aggregate(records)?;
    let report = BenchReport {
        records: records.to_vec(),
        aggregates,
    };
    let json = serde_json::to_string_pretty(&report).map_err(|e| Error::Validation(e.to_string()))?;
    let files = EmittedFiles {
        records: dir.join("records.csv"),
        aggregates: dir.join("aggregate.csv"),
        json: dir.join("bench.json"),
        objective_plot: dir.join("plot_objective_vs_n.csv"),
        time_plot: dir.join("plot_time_vs_n.csv"),
    };
    let contents = [
        (&files.records, records_csv(records)),
        (&files.aggregates, aggregates_csv(&report.aggregates)),
        (&files.json, json + "\n"),
        (&files.objective_plot, plot_csv(&report.aggregates, |a| [a.obj_mean, a.obj_min, a.obj_max])),
        (&files.time_plot, plot_csv(&report.aggregates, |a| [a.time_mean, a.time_min, a.time_max])),
    ];
    fs::create_dir_all(dir)?;
    let mut staged = Vec::new();
    let result = (|| {
        for (path, text) in &contents {
            let tmp = path.with_extension("tmp");
            staged.push(tmp.clone());
            fs::write(&tmp, text)?;
        }
        for (path, _) in &contents {
            fs::rename(path.with_extension("tmp"), path)?;
        }
        Ok(())
    })();
    if result.is_err() {
        for tmp in &staged {
            let _ = fs::remove_file(tmp);
        }
    }
    result.map(|_| files)
}

/// Parses a raw CSV written by [`records_csv`] back into
/// `(family, N, C, k, solver, seed, objective, wall_time_s)` rows.
#[allow(clippy::type_complexity)]
pub fn parse_records_csv(text: &str) -> Result<Vec<(String, usize, usize, usize, String, u64, Option<f64>, f64)>> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let bad = |e: csv::Error| Error::Validation(format!("bad records CSV: {e}"));
    let header = rdr.headers().map_err(bad)?.iter().collect::<Vec<_>>().join(",");
    if header != RECORD_HEADER {
        return Err(Error::Validation(format!("unexpected header `{header}`")));
    }
    rdr.records()
        .map(|row| {
            let row = row.map_err(bad)?;
            let num = |i: usize| -> Result<f64> {
                row[i]
                    .parse::<f64>()
                    .map_err(|e| Error::Validation(format!("column {i}: {e}")))
            };
            let int = |i: usize| -> Result<u64> {
                row[i]
                    .parse::<u64>()
                    .map_err(|e| Error::Validation(format!("column {i}: {e}")))
            };
            let objective = if &row[6] == "none" { None } else { Some(num(6)?) };
            Ok((
                row[0].to_string(),
                int(1)? as usize,
                int(2)? as usize,
                int(3)? as usize,
                row[4].to_string(),
                int(5)?,
                objective,
                num(8)?,
            ))
        })
        .collect()
}
