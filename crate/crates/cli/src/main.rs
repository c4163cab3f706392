//! Command-line front end: generate instances, solve them, run parameter
//! sweeps and self-check suites.
//!
//! Exit codes: 0 success, 1 usage, I/O or validation error, 2 infeasible.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value as Json};

use watermarket::datagen::{build_geo_compatibility, gen_synthetic, ingest_water_rights, read_water_rights_csv, SyntheticConfig};
use watermarket::experiment::{
    run_fair_sweep, run_sweep, write_fair_csv, write_sweep_csv, SweepConfig, FAIR_COLUMNS, SWEEP_COLUMNS,
};
use watermarket::fairness::{singleton_bounds, solve_fair, solve_fair_singleton, FairnessSpec};
use watermarket::io::{
    instance_to_json, leximin_solution_json, parse_fairness_spec, parse_instance, parse_leximin, parse_topology,
    solution_json,
};
use watermarket::leximin::{cardinality_report, solve_leximin};
use watermarket::verify::{run_suite, Suite};
use watermarket::welfare::{solve_max_welfare, SolveOptions};
use watermarket::{satisfaction_vector, Error, MarketInstance, TradingAssignment};

#[derive(Parser, Debug)]
#[command(name = "watermarket", version, about = "Water-rights market clearing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a market instance: synthetic by default, or ingested from a
    /// water-rights CSV with --csv.
    Generate(GenerateArgs),
    /// Solve an instance file and write the solution with its metrics.
    Solve(SolveArgs),
    /// Sweep the synthetic family over a parameter grid and write CSV.
    Sweep(SweepArgs),
    /// Run self-check suites; exits 0 iff every check passes.
    Verify(VerifyArgs),
}

#[derive(Args, Debug)]
struct GenerateArgs {
    /// Number of agents (synthetic).
    #[arg(long, default_value_t = 10)]
    n: usize,
    /// Units per agent (synthetic).
    #[arg(long, default_value_t = 5)]
    k: usize,
    /// Water availability in [0, 1].
    #[arg(long, default_value_t = 0.5)]
    delta: f64,
    /// Seniority-value correlation in [0, 1] (synthetic).
    #[arg(long, default_value_t = 0.0)]
    lambda: f64,
    /// High-value slope in [0.5, 1] (synthetic).
    #[arg(long = "beta-h", default_value_t = 0.9)]
    beta_h: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Water-rights CSV to ingest instead of generating.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Acre-feet per unit when ingesting.
    #[arg(long = "unit-size", default_value_t = 10)]
    unit_size: u32,
    /// Stream topology JSON; without it every seller may sell to every buyer.
    #[arg(long, requires = "csv")]
    topology: Option<PathBuf>,
    /// Output file (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Mode {
    /// Maximum welfare.
    Welfare,
    /// Group lower bounds via LP and dependent rounding (needs --spec).
    Fair,
    /// Exact per-buyer lower bounds (needs --spec with one buyer per group).
    FairSingleton,
    /// Leximin allocation of a single seller's units (leximin instance file).
    Leximin,
}

#[derive(Args, Debug)]
struct SolveArgs {
    /// Instance JSON (a leximin instance for --mode leximin).
    instance: PathBuf,
    #[arg(long, value_enum, default_value_t = Mode::Welfare)]
    mode: Mode,
    /// Fairness spec JSON.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Seed for the rounding in fair mode.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[arg(long, default_value_t = 10)]
    n: usize,
    #[arg(long, default_value_t = 5)]
    k: usize,
    /// Comma-separated availability grid.
    #[arg(long, value_delimiter = ',', default_value = "0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1")]
    delta: Vec<f64>,
    /// Comma-separated seniority-value correlation grid.
    #[arg(long, value_delimiter = ',', default_value = "0,0.5,1")]
    lambda: Vec<f64>,
    /// Comma-separated high-value slope grid.
    #[arg(long = "beta-h", value_delimiter = ',', default_value = "0.9")]
    beta_h: Vec<f64>,
    #[arg(long, default_value_t = 100)]
    replicates: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Comma-separated per-buyer lower bounds; switches to the tradeoff CSV.
    #[arg(long = "fair-r", value_delimiter = ',')]
    fair_r: Option<Vec<u32>>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// Suite to run; all suites when omitted.
    #[arg(long, value_parser = ["oracles", "rounding", "reductions", "leximin"])]
    suite: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn columns_help() -> String {
    let mut s = String::from("Columns of the sweep CSV:\n");
    for (name, desc) in SWEEP_COLUMNS {
        if !desc.is_empty() {
            s.push_str(&format!("  {name:<18} {desc}\n"));
        } else {
            s.push_str(&format!("  {name:<18} standard deviation over replicates\n"));
        }
    }
    s.push_str("\nColumns with --fair-r:\n");
    for (name, desc) in FAIR_COLUMNS {
        let desc = if desc.is_empty() { "standard deviation over replicates" } else { desc };
        s.push_str(&format!("  {name:<18} {desc}\n"));
    }
    s
}

enum Failure {
    Usage(String),
    Solver(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Solver(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Solver(Error::Io(e))
    }
}

type CmdResult = Result<ExitCode, Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))
}

fn write_out(out: Option<&Path>, bytes: &[u8]) -> Result<(), Failure> {
    match out {
        Some(p) => fs::write(p, bytes).map_err(|e| Failure::Usage(format!("cannot write {}: {e}", p.display()))),
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(bytes)?;
            stdout.flush()?;
            Ok(())
        }
    }
}

fn pretty(v: &Json) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(v).expect("json value serializes");
    s.push('\n');
    s.into_bytes()
}

fn generate(a: GenerateArgs) -> CmdResult {
    let instance = match &a.csv {
        None => gen_synthetic(&SyntheticConfig {
            n: a.n,
            k: a.k,
            delta: a.delta,
            lambda: a.lambda,
            beta_h: a.beta_h,
            seed: a.seed,
        })?,
        Some(path) => {
            let file = fs::File::open(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
            let records = read_water_rights_csv(file)?;
            let market = ingest_water_rights(&records, a.unit_size, a.delta)?;
            match &a.topology {
                None => market.instance,
                Some(t) => build_geo_compatibility(&market.instance, &market.stream_of(), &parse_topology(&read(t)?)?)?,
            }
        }
    };
    let mut text = instance_to_json(&instance);
    text.push('\n');
    write_out(a.out.as_deref(), text.as_bytes())?;
    Ok(ExitCode::SUCCESS)
}

fn market_metrics(assignment: &TradingAssignment, inst: &MarketInstance) -> Json {
    let sat = satisfaction_vector(assignment, inst).to_f64();
    let min = sat.iter().copied().fold(f64::INFINITY, f64::min);
    json!({
        "trades": assignment.len(),
        "sellers": inst.sellers().len(),
        "buyers": inst.buyers().len(),
        "satisfaction": sat,
        "min_satisfaction": if sat.is_empty() { 1.0 } else { min },
        "buyers_fully_satisfied": sat.iter().filter(|&&s| s >= 1.0).count(),
    })
}

fn spec_of(a: &SolveArgs) -> Result<FairnessSpec, Failure> {
    match &a.spec {
        Some(p) => Ok(parse_fairness_spec(&read(p)?)?),
        None => Err(Failure::Usage(format!("--mode {:?} needs --spec", a.mode).to_lowercase())),
    }
}

fn solve(a: SolveArgs) -> CmdResult {
    let text = read(&a.instance)?;
    let doc = match a.mode {
        Mode::Leximin => {
            let inst = parse_leximin(&text)?;
            let sol = solve_leximin(&inst);
            let report = cardinality_report(&inst, &sol);
            let mut doc = serde_json::to_value(leximin_solution_json(&inst, &sol)).map_err(Error::from)?;
            doc["mode"] = json!("leximin");
            doc["metrics"] = json!({
                "units_assigned": report.leximin_units,
                "max_units_assignable": report.max_units,
            });
            doc
        }
        mode => {
            let inst = parse_instance(&text)?;
            let (assignment, extra) = match mode {
                Mode::Welfare => {
                    let sol = solve_max_welfare(&inst, SolveOptions::default())?;
                    (sol.assignment, json!({}))
                }
                Mode::Fair => {
                    let spec = spec_of(&a)?;
                    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
                    let sol = solve_fair(&inst, &spec, &mut rng)?;
                    let report = serde_json::to_value(&sol.report).map_err(Error::from)?;
                    (sol.assignment, json!({ "fairness": report }))
                }
                Mode::FairSingleton => {
                    let spec = spec_of(&a)?;
                    let lower = singleton_bounds(&inst, &spec)?
                        .ok_or_else(|| Failure::Usage("fair-singleton mode needs one buyer per group".into()))?;
                    (solve_fair_singleton(&inst, &lower)?, json!({ "lower_bounds": lower }))
                }
                Mode::Leximin => unreachable!(),
            };
            let mut doc = serde_json::to_value(solution_json(&assignment, &inst)?).map_err(Error::from)?;
            let mut metrics = market_metrics(&assignment, &inst);
            if let (Json::Object(m), Json::Object(x)) = (&mut metrics, extra) {
                m.extend(x);
            }
            doc["mode"] = serde_json::to_value(mode).unwrap_or(Json::Null);
            doc["metrics"] = metrics;
            doc
        }
    };
    write_out(a.out.as_deref(), &pretty(&doc))?;
    Ok(ExitCode::SUCCESS)
}

impl serde::Serialize for Mode {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.to_possible_value().expect("no skipped variants").get_name())
    }
}

fn sweep(a: SweepArgs) -> CmdResult {
    let cfg = SweepConfig {
        n: a.n,
        k: a.k,
        deltas: a.delta,
        lambdas: a.lambda,
        beta_hs: a.beta_h,
        replicates: a.replicates,
        seed: a.seed,
    };
    let mut buf = Vec::new();
    match &a.fair_r {
        None => write_sweep_csv(&run_sweep(&cfg)?, &mut buf)?,
        Some(rs) => write_fair_csv(&run_fair_sweep(&cfg, rs)?, &mut buf)?,
    }
    write_out(a.out.as_deref(), &buf)?;
    Ok(ExitCode::SUCCESS)
}

fn verify(a: VerifyArgs) -> CmdResult {
    let suites = match &a.suite {
        Some(s) => vec![s.parse::<Suite>()?],
        None => Suite::ALL.to_vec(),
    };
    let mut all = true;
    let mut stdout = io::stdout().lock();
    for suite in suites {
        for c in run_suite(suite, a.seed)? {
            all &= c.passed;
            writeln!(stdout, "{} {suite}: {} ({})", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail)?;
        }
    }
    Ok(if all { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn main() -> ExitCode {
    let cmd = Cli::command().mut_subcommand("sweep", |c| c.after_long_help(columns_help()));
    let cli = match cmd.try_get_matches().and_then(|m| Cli::from_arg_matches(&m)) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Generate(a) => generate(a),
        Command::Solve(a) => solve(a),
        Command::Sweep(a) => sweep(a),
        Command::Verify(a) => verify(a),
    };
    match result {
        Ok(code) => code,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Solver(e)) if e.is_infeasible() => {
            println!("{}", json!({ "status": "infeasible", "message": e.to_string() }));
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(Failure::Solver(e)) => {
            match &e {
                Error::Validation(problems) => {
                    eprintln!("error: invalid input");
                    for p in problems {
                        eprintln!("  {p}");
                    }
                }
                other => eprintln!("error: {other}"),
            }
            ExitCode::from(1)
        }
    }
}
