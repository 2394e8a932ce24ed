use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{ArgAction, Args, Parser, Subcommand};
use invsynth_core::frontend::{parse_problem, FrontendError, ProblemSource};
use invsynth_core::learner::parse_rational;
use invsynth_core::orchestrator::{oasis_solve, run_benchmarks, Mode, OasisConfig, Verdict};
use invsynth_core::smt::QueryLog;
use invsynth_core::trace::Trace;
use tracing_subscriber::EnvFilter;

const EXIT_UNSOLVED: u8 = 1;
const EXIT_INPUT: u8 = 2;

#[derive(Parser)]
#[command(name = "invsynth", version, about = "Loop invariant inference with sparse ILP classifiers")]
struct Cli {
    /// More log output on stderr (-v info, -vv debug).
    #[arg(short, long, action = ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Infer an invariant for one problem file.
    Solve {
        file: PathBuf,
        #[command(flatten)]
        opts: Opts,
        /// Write run statistics as JSON.
        #[arg(long, value_name = "PATH")]
        stats_json: Option<PathBuf>,
    },
    /// Solve every problem in a directory and write a CSV report.
    Bench {
        dir: PathBuf,
        #[command(flatten)]
        opts: Opts,
        #[arg(long, value_name = "PATH", default_value = "report.csv")]
        out: PathBuf,
    },
}

#[derive(Args)]
struct Opts {
    #[arg(long, default_value = "oasis", value_parser = parse_mode)]
    mode: Mode,
    /// Seconds per relevance-restricted inference run.
    #[arg(long, default_value_t = 60.0)]
    tau: f64,
    /// Seconds per problem.
    #[arg(long, default_value_t = 300.0)]
    timeout: f64,
    /// Maximum unrolling depth for counterexample search.
    #[arg(long, default_value_t = invsynth_core::sampler::DEFAULT_K_MAX)]
    kmax: usize,
    /// Per-variable sparsity weight, e.g. 100, 1/2 or 0.5.
    #[arg(long)]
    lambda: Option<String>,
    #[arg(long)]
    coeff_bound: Option<i64>,
    #[arg(long = "bigM", value_name = "M")]
    big_m: Option<i64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Solver command line, e.g. "z3 -in -smt2".
    #[arg(long)]
    solver_cmd: Option<String>,
    /// Echo solver traffic on stderr.
    #[arg(long)]
    log_smt: bool,
    /// Write every learner ILP in LP format to this directory.
    #[arg(long, value_name = "DIR")]
    dump_ilp: Option<PathBuf>,
    /// Write a JSON-lines event trace.
    #[arg(long, value_name = "PATH")]
    trace: Option<PathBuf>,
    /// Report parse errors as JSON on stderr.
    #[arg(long)]
    json_diagnostics: bool,
    /// Feasibility only: drop the sparsity objective.
    #[arg(long)]
    no_objective: bool,
    /// Fill unknown coordinates with seeded random values before learning.
    #[arg(long)]
    complete_maps: bool,
    /// Reuse classifier optima across rounds as ILP bounds.
    #[arg(long)]
    warm_start: bool,
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    s.parse().map_err(|e: invsynth_core::orchestrator::ParseModeError| e.to_string())
}

fn seconds(value: f64, flag: &str) -> Result<Duration> {
    if !value.is_finite() || value <= 0.0 {
        bail!("--{flag} must be a positive number of seconds");
    }
    Ok(Duration::from_secs_f64(value))
}

impl Opts {
    fn config(&self) -> Result<OasisConfig> {
        let mut cfg = OasisConfig {
            tau: seconds(self.tau, "tau")?,
            timeout: seconds(self.timeout, "timeout")?,
            k_max: self.kmax,
            mode: self.mode,
            seed: self.seed,
            warm_start: self.warm_start,
            complete_maps: self.complete_maps,
            ..OasisConfig::default()
        };
        if let Some(text) = &self.lambda {
            cfg.learn.base.lambda = parse_rational(text).with_context(|| format!("bad --lambda `{text}`"))?;
        }
        if let Some(k) = self.coeff_bound {
            cfg.learn.base.coeff_bound = k;
        }
        if let Some(m) = self.big_m {
            if m <= 0 {
                bail!("--bigM must be positive");
            }
            cfg.learn.base.big_m = Some(m);
        }
        cfg.learn.base.objective = !self.no_objective;
        if let Some(dir) = &self.dump_ilp {
            std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
            cfg.learn.dump_dir = Some(dir.clone());
        }
        if let Some(cmd) = &self.solver_cmd {
            cfg.smt = cfg.smt.with_command_line(cmd);
            if cfg.smt.command.is_empty() {
                bail!("--solver-cmd is empty");
            }
        }
        if self.log_smt {
            cfg.smt.log = QueryLog::Stderr;
        }
        if let Some(path) = &self.trace {
            cfg.trace = Trace::to_file(path).with_context(|| format!("cannot create {}", path.display()))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

enum Failure {
    Input(anyhow::Error),
    Unsolved,
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Input(e)
    }
}

fn report_parse_error(path: &Path, e: &FrontendError, json: bool) {
    if json {
        let mut d = serde_json::to_value(e.diagnostic()).expect("diagnostic serializes");
        d["file"] = path.display().to_string().into();
        eprintln!("{d}");
    } else {
        eprintln!("{}:{e}", path.display());
    }
}

fn solve(file: &Path, opts: &Opts, stats_json: Option<&Path>) -> Result<(), Failure> {
    let cfg = opts.config()?;
    let source = ProblemSource::from_path(file).with_context(|| format!("cannot read {}", file.display()))?;
    let problem = match parse_problem(&source) {
        Ok(p) => p,
        Err(e) => {
            report_parse_error(file, &e, opts.json_diagnostics);
            return Err(Failure::Input(anyhow::anyhow!("invalid problem")));
        }
    };
    let report = oasis_solve(&problem, &cfg);
    if let Some(path) = stats_json {
        let text = serde_json::to_string_pretty(&report.to_json()).expect("stats serialize");
        std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))?;
    }
    match &report.verdict {
        Verdict::Solved(_) => {
            println!("{}", report.define_fun().expect("solved report has an invariant"));
            Ok(())
        }
        Verdict::Unsolved(reason) => {
            eprintln!("unsolved: {reason}");
            Err(Failure::Unsolved)
        }
    }
}

fn bench(dir: &Path, opts: &Opts, out: &Path) -> Result<(), Failure> {
    let cfg = opts.config()?;
    if !dir.is_dir() {
        return Err(Failure::Input(anyhow::anyhow!("{} is not a directory", dir.display())));
    }
    let summary = run_benchmarks(dir, &cfg, out).context("benchmark run failed")?;
    println!("{summary}");
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new(level)))
        .with_writer(std::io::stderr)
        .init();
    let result = match &cli.command {
        Command::Solve { file, opts, stats_json } => solve(file, opts, stats_json.as_deref()),
        Command::Bench { dir, opts, out } => bench(dir, opts, out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Unsolved) => ExitCode::from(EXIT_UNSOLVED),
        Err(Failure::Input(e)) => {
            if !matches!(e.to_string().as_str(), "invalid problem") {
                eprintln!("error: {e:#}");
            }
            ExitCode::from(EXIT_INPUT)
        }
    }
}
