//! Command-line front end: runs named experiments and writes CSV/JSON
//! reports.
//!
//! Exit codes: 0 all declared checks passed, 1 at least one check failed,
//! 2 usage or configuration error, 3 I/O error. Report bodies are
//! deterministic for a fixed (seed, worker count); wall-clock time goes to
//! a sidecar `<out>.log` (or stderr when printing to stdout).

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;

use petersburg::experiments::{run, ExperimentKind, RunSettings};
use petersburg::Error;

const EXIT_CHECK_FAILURE: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_IO: u8 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "petersburg",
    about = "Simulation and closed-form analytics for the truncated and interest-bearing Petersburg games",
    after_help = "Experiments: truncated-limit, discounted-fairness, u-cross-check, u-tail, \
                  char-fn, premium, ruin, doubling, all.\n\
                  Per-experiment parameters are passed as repeated `--param key=value`;\n\
                  a config file holds one `key = value` per line with `#` comments.\n\
                  Precedence: command-line flags > config file > built-in defaults."
)]
struct Cli {
    /// Experiment to run.
    #[arg(long)]
    experiment: Option<String>,

    /// Seed for every random stream of the run.
    #[arg(long)]
    seed: Option<u64>,

    /// Overrides the experiment's primary sample count.
    #[arg(long)]
    samples: Option<u64>,

    /// Worker threads (default: one per logical CPU).
    #[arg(long)]
    workers: Option<usize>,

    /// Report path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Report format: csv or json.
    #[arg(long)]
    format: Option<String>,

    /// Config file with `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Experiment parameter, repeatable: --param c=20 --param draws=100000
    #[arg(long = "param", value_name = "KEY=VALUE")]
    params: Vec<String>,
}

#[derive(Debug, Default)]
struct FileConfig {
    experiment: Option<String>,
    seed: Option<u64>,
    samples: Option<u64>,
    workers: Option<usize>,
    out: Option<PathBuf>,
    format: Option<String>,
    params: BTreeMap<String, String>,
}

fn usage_error(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(EXIT_USAGE)
}

fn io_error(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("I/O error: {msg}");
    ExitCode::from(EXIT_IO)
}

fn parse_config_file(path: &Path) -> Result<FileConfig, ExitCode> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| io_error(format!("cannot read config {}: {e}", path.display())))?;
    let mut cfg = FileConfig::default();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(usage_error(format!(
                "{}:{}: expected `key = value`, got `{raw}`",
                path.display(),
                lineno + 1
            )));
        };
        let key = key.trim();
        let value = value.trim().to_string();
        let bad_num = |k: &str| {
            usage_error(format!(
                "{}:{}: `{k}` expects a number, got `{value}`",
                path.display(),
                lineno + 1
            ))
        };
        match key {
            "experiment" => cfg.experiment = Some(value),
            "seed" => cfg.seed = Some(value.parse().map_err(|_| bad_num("seed"))?),
            "samples" => cfg.samples = Some(value.parse().map_err(|_| bad_num("samples"))?),
            "workers" => cfg.workers = Some(value.parse().map_err(|_| bad_num("workers"))?),
            "out" => cfg.out = Some(PathBuf::from(value)),
            "format" => cfg.format = Some(value),
            other => {
                cfg.params.insert(other.to_string(), value);
            }
        }
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();

    let file_cfg = match &cli.config {
        Some(path) => match parse_config_file(path) {
            Ok(cfg) => cfg,
            Err(code) => return code,
        },
        None => FileConfig::default(),
    };

    // Flags override config-file values override defaults.
    let experiment_name = cli
        .experiment
        .or(file_cfg.experiment)
        .unwrap_or_else(|| "all".to_string());
    let Some(kind) = ExperimentKind::from_name(&experiment_name) else {
        return usage_error(format!(
            "unknown experiment `{experiment_name}`; expected one of truncated-limit, \
             discounted-fairness, u-cross-check, u-tail, char-fn, premium, ruin, doubling, all"
        ));
    };
    let format = cli
        .format
        .or(file_cfg.format)
        .unwrap_or_else(|| "csv".to_string());
    if format != "csv" && format != "json" {
        return usage_error(format!("unknown format `{format}`; expected csv or json"));
    }

    let mut params = file_cfg.params;
    for raw in &cli.params {
        let Some((key, value)) = raw.split_once('=') else {
            return usage_error(format!("--param expects KEY=VALUE, got `{raw}`"));
        };
        params.insert(key.trim().to_string(), value.trim().to_string());
    }

    let settings = RunSettings {
        seed: cli.seed.or(file_cfg.seed).unwrap_or(42),
        samples: cli.samples.or(file_cfg.samples),
        workers: cli.workers.or(file_cfg.workers),
        params,
    };
    let out = cli.out.or(file_cfg.out);

    let started = Instant::now();
    let report = match run(kind, &settings) {
        Ok(report) => report,
        Err(err @ (Error::InvalidParam { .. } | Error::EmptyBatch)) => return usage_error(err),
        Err(err @ Error::NonConvergence { .. }) => return usage_error(err),
    };
    let elapsed = started.elapsed();

    let body = match format.as_str() {
        "csv" => report.to_csv(),
        _ => report.to_json(),
    };

    match &out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, &body) {
                return io_error(format!("cannot write report {}: {e}", path.display()));
            }
            // Wall-clock goes to a sidecar so report bodies stay
            // byte-reproducible.
            let log_path = sidecar_log_path(path);
            let line = format!(
                "experiment = {}, seed = {}, wall_clock_ms = {}\n",
                kind.name(),
                settings.seed,
                elapsed.as_millis()
            );
            if let Err(e) = std::fs::write(&log_path, line) {
                return io_error(format!("cannot write log {}: {e}", log_path.display()));
            }
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            if let Err(e) = stdout.write_all(body.as_bytes()) {
                return io_error(e);
            }
            eprintln!(
                "experiment = {}, seed = {}, wall_clock_ms = {}",
                kind.name(),
                settings.seed,
                elapsed.as_millis()
            );
        }
    }

    if report.all_pass() {
        ExitCode::SUCCESS
    } else {
        let failures = report.rows.iter().filter(|r| !r.pass).count();
        eprintln!("{failures} check(s) failed; see the report");
        ExitCode::from(EXIT_CHECK_FAILURE)
    }
}

fn sidecar_log_path(report: &Path) -> PathBuf {
    let mut name = report
        .file_name()
        .map(|n| n.to_os_string())
        .unwrap_or_default();
    name.push(".log");
    report.with_file_name(name)
}
