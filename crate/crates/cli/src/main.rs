//! `rankbound`: file-backed stages of the rank-bound pipeline.

mod config;
mod log;
mod stages;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{CommandFactory, FromArgMatches, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "rankbound", version, about = "Rank bounds for elliptic curves over Q")]
pub struct Cli {
    /// Worker threads; defaults to the available parallelism.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// `key = value` file of defaults; command-line flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Directory for artifacts and logs.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    #[command(subcommand)]
    pub cmd: Cmd,
}

#[derive(Subcommand)]
pub enum Cmd {
    /// Discriminant, local data, conductor and the cubic field of a curve.
    CurveAnalyze(stages::CurveArgs),
    /// Explicit-formula bound on the analytic rank.
    AnalyticBound(stages::AnalyticArgs),
    /// Maximal, reduced form for the field of a binary cubic form.
    FieldReduce(stages::FieldArgs),
    /// Degree-one primes below a bound.
    FactorBase(stages::FactorBaseArgs),
    /// Skewness, Murphy alpha and the expected relation yield.
    SievePlan(stages::PlanArgs),
    /// Line sieve over a region, writing relations.
    SieveRun(stages::SieveArgs),
    /// GRH upper bound on the 2-rank of the class group.
    ClassgroupUpper(stages::UpperArgs),
    /// Unconditional lower bound on the 2-rank from quadratic characters.
    ClassgroupLower(stages::LowerArgs),
    /// Brumer–Kramer bound on the 2-Selmer rank.
    RankReport(stages::RankArgs),
}

/// Exit status classes.
#[derive(Debug)]
pub enum Fail {
    Usage(String),
    Data(String),
    Budget(String),
}

impl Fail {
    fn code(&self) -> u8 {
        match self {
            Fail::Usage(_) => 1,
            Fail::Data(_) => 2,
            Fail::Budget(_) => 3,
        }
    }
}

impl std::fmt::Display for Fail {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Fail::Usage(m) | Fail::Data(m) | Fail::Budget(m) => f.write_str(m),
        }
    }
}

impl From<rankbound::Error> for Fail {
    fn from(e: rankbound::Error) -> Self {
        use rankbound::Error::*;
        let msg = e.to_string();
        match e {
            BudgetExceeded { .. } | RegionTooLarge(_) | TargetedNotFound { .. } => Fail::Budget(msg),
            Io(_) | Domain { .. } | NotPrime(_) | NotOddPrime(_) => Fail::Usage(msg),
            _ => Fail::Data(msg),
        }
    }
}

fn run(cli: Cli) -> Result<(), Fail> {
    if let Some(n) = cli.workers {
        if n == 0 {
            return Err(Fail::Usage("--workers must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Fail::Usage(e.to_string()))?;
    }
    std::fs::create_dir_all(&cli.out).map_err(|e| Fail::Usage(format!("{}: {e}", cli.out.display())))?;
    let out = cli.out.as_path();
    match cli.cmd {
        Cmd::CurveAnalyze(a) => stages::curve_analyze(&a, out),
        Cmd::AnalyticBound(a) => stages::analytic_bound(&a, out),
        Cmd::FieldReduce(a) => stages::field_reduce(&a, out),
        Cmd::FactorBase(a) => stages::factor_base(&a, out),
        Cmd::SievePlan(a) => stages::sieve_plan(&a, out),
        Cmd::SieveRun(a) => stages::sieve_run(&a, out),
        Cmd::ClassgroupUpper(a) => stages::classgroup_upper(&a, out),
        Cmd::ClassgroupLower(a) => stages::classgroup_lower(&a, out),
        Cmd::RankReport(a) => stages::rank_report(&a, out),
    }
}

fn main() -> ExitCode {
    let cmd = Cli::command();
    let args = match config::merge(&cmd, std::env::args_os().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let cli = match cmd.try_get_matches_from(args).and_then(|m| Cli::from_arg_matches(&m)) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
