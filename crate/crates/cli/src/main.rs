//! `hkdelta`: integrate on time scales, build tagged partitions and run the
//! built-in theorem checks. Reports go to stdout as JSON, summaries to stderr.

mod job;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use hkdelta::gauge::DeltaGauge;
use hkdelta::integrator::{hk_integrate, oracle_integrate, Integrand, OracleConfig};
use hkdelta::partition::{cousin_partition, fineness_report, random_fine_partition, Coverage};
use hkdelta::verify::{self, VerifyConfig, SUITES};

use job::{ConfigError, JobConfig};

const THREADS_VAR: &str = "HK_TS_THREADS";

#[derive(Parser, Debug)]
#[command(name = "hkdelta", version, about = "Gauge integration on time scales")]
struct Cli {
    /// Overrides the seed of the config file or the verify suites.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Print only the JSON report; no summary on stderr.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Integrate the configured expression over the configured interval.
    Integrate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Build a tagged partition fine for a constant gauge. With --seed the
    /// partition is random, otherwise it is the Cousin partition.
    Partition {
        #[arg(long)]
        config: PathBuf,
        #[arg(long = "dL", allow_negative_numbers = true)]
        left: f64,
        #[arg(long = "dR", allow_negative_numbers = true)]
        right: f64,
    },
    /// Run a theorem suite over the built-in catalog.
    Verify {
        #[arg(long = "suite", value_name = "NAME")]
        suite: Option<String>,
        #[arg(value_name = "SUITE", conflicts_with = "suite")]
        positional: Option<String>,
    },
}

/// Everything that ends the process with a diagnostic and exit code 1.
enum Failure {
    Config(ConfigError),
    Usage(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e)
    }
}

fn usage(msg: impl std::fmt::Display) -> Failure {
    Failure::Usage(msg.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Config(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: &Cli) -> Result<u8, Failure> {
    configure_threads()?;
    match &cli.command {
        Command::Integrate { config } => integrate(cli, &JobConfig::load(config)?),
        Command::Partition { config, left, right } => partition(cli, &JobConfig::load(config)?, *left, *right),
        Command::Verify { suite, positional } => {
            let name = suite.as_deref().or(positional.as_deref()).ok_or_else(|| {
                usage(format!("verify needs a suite: one of {}, all", SUITES.join(", ")))
            })?;
            run_verify(cli, name)
        }
    }
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let n: usize = match raw.trim().parse() {
        Ok(n) if n > 0 => n,
        _ => return Err(usage(format!("{THREADS_VAR} must be a positive integer, got `{raw}`"))),
    };
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(usage)
}

/// Writes the report to stdout. A closed pipe is not an error.
fn emit(report: &Value) {
    let text = serde_json::to_string_pretty(report).unwrap_or_else(|e| format!("{{\"error\": \"{e}\"}}"));
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

fn integrate(cli: &Cli, job: &JobConfig) -> Result<u8, Failure> {
    let interval = job.interval()?;
    let f = job.integrand()?;
    let tol = job.tolerance(f.space())?;
    let engine = job.engine(cli.seed);
    let result = hk_integrate(&f, &interval, &tol, &engine).map_err(usage)?;

    let mut report = json!({
        "expr": f.expr().to_string(),
        "interval": [interval.a(), interval.b()],
        "seed": engine.seed,
        "tolerance": tol,
    });
    report["result"] = result.to_json();
    if job.oracle {
        report["oracle"] = match oracle_integrate(&f, &interval, &OracleConfig::default()) {
            Ok(o) => {
                let gap = result.value.sub(&o).map(|d| d.abs()).map_err(usage)?;
                json!({ "value": o, "gap": gap })
            }
            Err(e) => json!({ "error": e.to_string() }),
        };
    }
    emit(&report);
    if !cli.json {
        eprintln!(
            "value {}  spread {}  level {}  partitions {}  {}",
            result.value,
            result.spread,
            result.level,
            result.partitions_evaluated,
            if result.converged { "converged" } else { "NOT converged" }
        );
        if let Some(gap) = report.get("oracle").and_then(|o| o.get("gap")) {
            eprintln!("oracle gap {gap}");
        }
    }
    Ok(if result.converged { 0 } else { 2 })
}

fn partition(cli: &Cli, job: &JobConfig, left: f64, right: f64) -> Result<u8, Failure> {
    let interval = job.interval()?;
    let gauge = DeltaGauge::constant(interval.clone(), left, right).map_err(usage)?;
    let (method, p) = match cli.seed {
        Some(seed) => ("random", random_fine_partition(&gauge, seed)),
        None => ("cousin", cousin_partition(&gauge)),
    };
    let p = p.map_err(usage)?;
    let coverage = p.classify(&interval).map_err(usage)?;
    let cert = fineness_report(&p, &gauge).map_err(usage)?;
    let ok = cert.fine && coverage == Coverage::Full;

    let report = json!({
        "interval": [interval.a(), interval.b()],
        "gauge": { "dL": left, "dR": right },
        "method": method,
        "seed": cli.seed,
        "partition": p.to_json(coverage),
        "certificate": cert,
    });
    emit(&report);
    if !cli.json {
        eprintln!(
            "{} items  {}  {}",
            p.len(),
            if coverage == Coverage::Full { "full" } else { "partial" },
            if cert.fine { "fine" } else { "NOT fine" }
        );
    }
    Ok(if ok { 0 } else { 2 })
}

fn run_verify(cli: &Cli, name: &str) -> Result<u8, Failure> {
    let cfg = VerifyConfig::with_seed(cli.seed.unwrap_or(0));
    let reports = verify::run(name, &cfg)
        .ok_or_else(|| usage(format!("unknown suite `{name}`; expected one of {}, all", SUITES.join(", "))))?;
    let pass = reports.iter().all(|r| r.pass);
    emit(&json!({ "seed": cfg.seed, "pass": pass, "suites": reports }));
    if !cli.json {
        for r in &reports {
            for c in &r.cases {
                eprintln!("{:<14} {:<48} {}", r.suite, c.case, if c.pass { "ok" } else { "FAIL" });
            }
            eprintln!("{:<14} {}/{} passed", r.suite, r.cases.len() - r.failures(), r.cases.len());
        }
    }
    Ok(if pass { 0 } else { 2 })
}
