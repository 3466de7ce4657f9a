//! `cqmkit` command line. Exit codes: 0 success, 1 domain error, 2 usage
//! error. Every error is one JSON line on stderr.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use cqmkit::bench::{emit, run_plan, solve_penalized, BenchPlan, BenchSolver};
use cqmkit::compile::{binarize, compile_penalties, PenaltyConfig};
use cqmkit::hybrid::{hybrid_solve, HybridConfig, Subsolver};
use cqmkit::model::{ConstrainedModel, SampleSet};
use cqmkit::problems::{
    blp_oracle, blp_quadratic_oracle, bqp_oracle, gen_blp, gen_blp_quadratic_constraint, gen_bqp,
    gen_unit_commitment, uc_oracle, BlpSpec, BqpSpec, UcSpec,
};
use cqmkit::solvers::{brute_force, show_params, SolverParams, DEFAULT_SEED};
use cqmkit::topology::{build_pegasus, embed_clique};
use cqmkit::Error;

#[derive(Parser)]
#[command(name = "cqmkit", version, about = "Constrained quadratic models: generate, compile, solve, benchmark")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Log to stderr; repeat for more detail.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    /// Write the primary output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Family {
    Blp,
    BlpK,
    BlpQuad,
    Bqp,
    Uc,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SolverKind {
    Hybrid,
    Sa,
    Sqa,
    Tabu,
}

#[derive(Args)]
struct FamilyArgs {
    #[arg(long, value_enum)]
    family: Family,
    #[arg(long = "N", alias = "n")]
    n: Option<usize>,
    #[arg(long = "C", alias = "c")]
    c: Option<usize>,
    /// Extra constraints for `blp-k`.
    #[arg(long, default_value_t = 0)]
    k: usize,
    /// Fleet spec JSON for `uc`; a random fleet is drawn when absent.
    #[arg(long)]
    fleet: Option<PathBuf>,
    #[arg(long, default_value_t = 3)]
    generators: usize,
    #[arg(long, default_value_t = 4)]
    periods: usize,
    #[arg(long, default_value_t = 1)]
    categories: usize,
    #[arg(long, default_value_t = 1)]
    segments: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Write a problem instance as model JSON.
    Generate(FamilyArgs),
    /// Compile a model to its penalized QUBO plus λ report.
    Compile {
        #[arg(long)]
        model: PathBuf,
        /// JSON object of per-constraint λ overrides.
        #[arg(long)]
        lambdas: Option<PathBuf>,
    },
    /// Solve a model; prints the sampleset with its best feasible sample.
    Solve {
        #[arg(long, required_unless_present = "show_params")]
        model: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = SolverKind::Hybrid)]
        solver: SolverKind,
        #[arg(long)]
        time_limit: Option<f64>,
        /// Samples returned.
        #[arg(long)]
        reads: Option<usize>,
        #[arg(long)]
        subsolver: Option<Subsolver>,
        /// JSON params block: a hybrid config or solver params.
        #[arg(long)]
        params: Option<PathBuf>,
        /// Print every default and exit.
        #[arg(long)]
        show_params: bool,
    },
    /// Exact optimum of a small instance.
    Oracle(FamilyArgs),
    /// Hardware graph statistics and clique embedding.
    Topo {
        #[arg(long, default_value = "pegasus")]
        family: String,
        #[arg(long, default_value_t = 16)]
        m: usize,
        #[arg(long, default_value_t = 0.0)]
        defect_rate: f64,
        #[arg(long)]
        stats: bool,
        /// Try to embed a clique of this size.
        #[arg(long)]
        clique: Option<usize>,
    },
    /// Run a benchmark plan and write CSV/JSON artifacts.
    Bench {
        #[arg(long)]
        plan: PathBuf,
        #[arg(long, default_value_t = 1)]
        workers: usize,
    },
}

/// Failure of a subcommand, already classified by exit code.
struct Failure {
    code: u8,
    kind: String,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            code: 1,
            kind: e.kind().into(),
            message: e.to_string(),
        }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        kind: "usage".into(),
        message: message.into(),
    }
}

type Outcome = Result<(), Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| {
        Failure::from(Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
    })
}

fn write_out(global: &Global, text: &str) -> Outcome {
    match &global.out {
        Some(p) => fs::write(p, text).map_err(|e| Error::Io(e).into()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn json_line(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("json value serializes") + "\n"
}

fn parse_json<T: serde::de::DeserializeOwned>(text: &str) -> Result<T, Failure> {
    serde_json::from_str(text).map_err(|e| Error::from(e).into())
}

fn uc_spec(a: &FamilyArgs, seed: u64) -> Result<UcSpec, Failure> {
    let spec = match &a.fleet {
        Some(p) => parse_json::<UcSpec>(&read(p)?)?,
        None => UcSpec::random(a.generators, a.periods, a.categories, a.segments, seed)?,
    };
    spec.validate()?;
    Ok(spec)
}

fn sizes(a: &FamilyArgs) -> Result<(usize, usize), Failure> {
    match (a.n, a.c) {
        (Some(n), Some(c)) => Ok((n, c)),
        _ => Err(usage("--N and --C are required for this family")),
    }
}

fn build_model(a: &FamilyArgs, seed: u64) -> Result<ConstrainedModel, Failure> {
    Ok(match a.family {
        Family::Blp => {
            let (n, c) = sizes(a)?;
            gen_blp(&BlpSpec::new(n, c, seed))?
        }
        Family::BlpK => {
            let (n, c) = sizes(a)?;
            gen_blp(&BlpSpec::new(n, c, seed).with_extra(a.k))?
        }
        Family::BlpQuad => {
            let (n, c) = sizes(a)?;
            gen_blp_quadratic_constraint(n, c, seed)?
        }
        Family::Bqp => {
            let (n, c) = sizes(a)?;
            gen_bqp(&BqpSpec::new(n, c, seed))?
        }
        Family::Uc => gen_unit_commitment(&uc_spec(a, seed)?)?,
    })
}

fn generate(a: &FamilyArgs, g: &Global) -> Outcome {
    let model = build_model(a, g.seed)?;
    write_out(g, &(model.to_json() + "\n"))
}

fn oracle(a: &FamilyArgs, g: &Global) -> Outcome {
    let (optimum, method) = match a.family {
        Family::Blp => {
            let (n, c) = sizes(a)?;
            (blp_oracle(&BlpSpec::new(n, c, g.seed))?, "sort")
        }
        Family::BlpK => {
            let (n, c) = sizes(a)?;
            let spec = BlpSpec::new(n, c, g.seed).with_extra(a.k);
            match blp_oracle(&spec) {
                Ok(v) => (v, "sort"),
                Err(_) => {
                    let ss = brute_force(&gen_blp(&spec)?)?;
                    let best = ss
                        .best_feasible()
                        .ok_or_else(|| Failure::from(Error::InfeasibleSpec("no feasible assignment".into())))?;
                    (best.energy, "enumeration")
                }
            }
        }
        Family::BlpQuad => {
            let (n, c) = sizes(a)?;
            (blp_quadratic_oracle(n, c, g.seed)?, "sort")
        }
        Family::Bqp => {
            let (n, c) = sizes(a)?;
            (bqp_oracle(&BqpSpec::new(n, c, g.seed))?, "subset enumeration")
        }
        Family::Uc => (uc_oracle(&uc_spec(a, g.seed)?)?.cost, "commitment enumeration + merit order"),
    };
    let v = json!({
        "family": a.family.to_possible_value().map(|p| p.get_name().to_string()),
        "N": a.n,
        "C": a.c,
        "k": a.k,
        "seed": g.seed,
        "optimum": optimum,
        "method": method,
    });
    write_out(g, &json_line(&v))
}

fn compile(model: &Path, lambdas: Option<&Path>, g: &Global) -> Outcome {
    let model = ConstrainedModel::from_json(&read(model)?)?;
    let (binary, _) = binarize(&model)?;
    let mut cfg = PenaltyConfig::default();
    if let Some(p) = lambdas {
        cfg.lambdas = parse_json(&read(p)?)?;
    }
    let compiled = compile_penalties(&binary, &cfg)?;
    let v = json!({
        "qubo": parse_json::<Value>(&compiled.qubo.to_json())?,
        "num_original": compiled.num_original,
        "lambdas": parse_json::<Value>(&compiled.lambda_report_json())?,
        "retained": compiled.retained,
    });
    write_out(g, &json_line(&v))
}

fn samples_csv(ss: &SampleSet) -> String {
    let mut out = String::from("energy,feasible,wall_time\n");
    for s in ss.samples() {
        out.push_str(&format!("{},{},{}\n", s.energy, s.feasible, ss.wall_time));
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn solve(
    model: Option<&Path>,
    solver: SolverKind,
    time_limit: Option<f64>,
    reads: Option<usize>,
    subsolver: Option<Subsolver>,
    params: Option<&Path>,
    show: bool,
    g: &Global,
) -> Outcome {
    let params: Option<Value> = params.map(|p| read(p).and_then(|t| parse_json(&t))).transpose()?;
    if show {
        let v = json!({
            "hybrid": HybridConfig::default(),
            "solver": parse_json::<Value>(&show_params())?,
        });
        return write_out(g, &json_line(&v));
    }
    let model = ConstrainedModel::from_json(&read(model.expect("clap requires --model"))?)?;
    let (ss, extra) = if solver == SolverKind::Hybrid {
        let mut cfg: HybridConfig = match params {
            Some(v) => parse_json(&v.to_string())?,
            None => HybridConfig::default(),
        };
        cfg.seed = g.seed;
        if time_limit.is_some() {
            cfg.time_limit = time_limit;
        }
        if let Some(r) = reads {
            cfg.target = r;
        }
        if let Some(s) = subsolver {
            cfg.subsolver = s;
        }
        let report = hybrid_solve(&model, &cfg)?;
        let extra = json!({
            "time_limit": report.time_limit,
            "iterations": report.iterations,
            "warnings": report.warnings,
            "policy": report.policy,
        });
        (report.sampleset, extra)
    } else {
        let mut p: SolverParams = match params {
            Some(v) => parse_json(&v.to_string())?,
            None => SolverParams::default(),
        };
        p.seed = g.seed;
        if let Some(r) = reads {
            p.reads = r;
        }
        if time_limit.is_some() {
            p.time_limit = time_limit;
        }
        let kind = match solver {
            SolverKind::Sa => BenchSolver::Sa,
            SolverKind::Sqa => BenchSolver::Sqa,
            _ => BenchSolver::Tabu,
        };
        (solve_penalized(&model, kind, &p)?, json!({}))
    };
    let v = json!({
        "best_feasible": ss.best_feasible(),
        "feasible_count": ss.feasible_count(),
        "solver_info": extra,
        "sampleset": ss,
    });
    let csv = samples_csv(&ss);
    match (&g.out, g.format) {
        (Some(path), _) => {
            fs::write(path, json_line(&v)).map_err(Error::Io)?;
            fs::write(path.with_extension("csv"), csv).map_err(Error::Io)?;
            Ok(())
        }
        (None, Format::Json) => write_out(g, &json_line(&v)),
        (None, Format::Csv) => write_out(g, &csv),
    }
}

fn topo(family: &str, m: usize, rate: f64, stats: bool, clique: Option<usize>, g: &Global) -> Outcome {
    if family != "pegasus" {
        return Err(usage(format!("unknown topology family `{family}`; only `pegasus` is available")));
    }
    let graph = build_pegasus(m, rate, g.seed)?;
    let mut v = json!({});
    if stats || clique.is_none() {
        v["stats"] = serde_json::to_value(graph.stats()).expect("stats serialize");
    }
    if let Some(k) = clique {
        if k == 0 {
            return Err(usage("--clique must be at least 1"));
        }
        let emb = embed_clique(k, &graph);
        v["clique"] = json!({
            "k": k,
            "embedded": emb.is_some(),
            "max_chain": emb.as_ref().and_then(|e| e.chains.iter().map(Vec::len).max()),
            "qubits": emb.as_ref().map(|e| e.chains.iter().map(Vec::len).sum::<usize>()),
            "embedding": emb,
        });
    }
    write_out(g, &json_line(&v))
}

fn bench(plan: &Path, workers: usize, g: &Global) -> Outcome {
    let plan = BenchPlan::from_json(&read(plan)?)?;
    let dir = g
        .out
        .clone()
        .or_else(|| plan.out.clone())
        .ok_or_else(|| usage("bench needs --out or an `out` entry in the plan"))?;
    let report = run_plan(&plan, workers)?;
    let files = emit(&report.records, &dir)?;
    let failures = report.failures();
    println!(
        "{}",
        json!({
            "records": report.records.len(),
            "failures": failures,
            "aggregate": files.aggregates,
            "raw": files.records,
            "json": files.json,
        })
    );
    if failures > 0 {
        return Err(Failure {
            code: 1,
            kind: "bench_failures".into(),
            message: format!("{failures} of {} runs failed", report.records.len()),
        });
    }
    Ok(())
}

fn run(cli: Cli) -> Outcome {
    let g = &cli.global;
    match &cli.command {
        Command::Generate(a) => generate(a, g),
        Command::Compile { model, lambdas } => compile(model, lambdas.as_deref(), g),
        Command::Solve {
            model,
            solver,
            time_limit,
            reads,
            subsolver,
            params,
            show_params,
        } => solve(
            model.as_deref(),
            *solver,
            *time_limit,
            *reads,
            *subsolver,
            params.as_deref(),
            *show_params,
            g,
        ),
        Command::Oracle(a) => oracle(a, g),
        Command::Topo {
            family,
            m,
            defect_rate,
            stats,
            clique,
        } => topo(family, *m, *defect_rate, *stats, *clique, g),
        Command::Bench { plan, workers } => bench(plan, *workers, g),
    }
}

fn report(f: &Failure) -> ExitCode {
    eprintln!("{}", json!({"error": f.kind, "message": f.message, "exit_code": f.code}));
    ExitCode::from(f.code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{e}");
                    return ExitCode::SUCCESS;
                }
                ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand | ErrorKind::MissingSubcommand => {
                    print!("{e}");
                    return report(&usage("a subcommand is required"));
                }
                _ => {
                    let msg = e.to_string();
                    let first = msg.lines().next().unwrap_or("usage error").trim_start_matches("error: ");
                    return report(&usage(first));
                }
            }
        }
    };
    let level = match cli.global.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => report(&f),
    }
}
