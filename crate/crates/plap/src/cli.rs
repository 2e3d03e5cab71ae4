//! The command line: `run <file>`, `suite <dir>` and `--list-tasks`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;

use crate::output::{self, Cell, Manifest, Table, Versions};
use crate::scenario::{ConfigError, Scenario, TASKS};
use crate::tasks::{self, Check, TaskError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Parser, Debug)]
#[command(
    name = "plap",
    version,
    about = "Scenario runner for lattice t-Laplacian potential theory"
)]
pub struct Cli {
    /// Worker threads (defaults to the number of cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Seed overriding the scenario's.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Print the available tasks and exit.
    #[arg(long)]
    pub list_tasks: bool,
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run one scenario file.
    Run { file: PathBuf },
    /// Run every `*.json` scenario in a directory.
    Suite { dir: PathBuf },
}

#[derive(Serialize)]
struct Report<'a> {
    name: &'a str,
    task: &'a str,
    seed: u64,
    config_sha256: &'a str,
    passed: bool,
    converged: bool,
    status: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    key_metric: Option<&'a (String, f64)>,
    checks: &'a [Check],
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<&'a str>,
    config: &'a Scenario,
    result: &'a Value,
}

/// Outcome of one scenario, as listed in `summary.csv`.
#[derive(Clone, Debug)]
pub struct RunSummary {
    pub name: String,
    pub task: String,
    pub status: String,
    pub passed: bool,
    pub key_metric: Option<(String, f64)>,
    pub wall_time: f64,
    pub exit_code: i32,
    pub message: Option<String>,
}

fn now_unix() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs())
}

/// Executes a validated scenario and writes its artifacts into `dir`.
pub fn run_scenario(s: &Scenario, dir: &Path) -> RunSummary {
    let started = now_unix();
    let clock = Instant::now();
    let canonical = s.canonical_json();
    let hash = output::sha256_hex(canonical.as_bytes());
    let outcome = tasks::execute(s);
    let wall = clock.elapsed().as_secs_f64();
    let (outcome, error) = match outcome {
        Ok(o) => (Some(o), None),
        Err(TaskError::Config(m)) => {
            return RunSummary {
                name: s.name.clone(),
                task: s.task.name().into(),
                status: "config-error".into(),
                passed: false,
                key_metric: None,
                wall_time: wall,
                exit_code: EXIT_CONFIG,
                message: Some(m),
            }
        }
        Err(TaskError::Run(m)) => (None, Some(m)),
    };
    let null = Value::Null;
    let (result, checks, converged, status, key, tables) = match &outcome {
        Some(o) => (
            &o.result,
            o.checks.as_slice(),
            o.converged,
            o.status.as_str(),
            o.key_metric.as_ref(),
            o.tables.as_slice(),
        ),
        None => (&null, &[][..], false, "error", None, &[][..]),
    };
    let passed = outcome.as_ref().is_some_and(|o| o.passed());
    let report = Report {
        name: &s.name,
        task: s.task.name(),
        seed: s.seed,
        config_sha256: &hash,
        passed,
        converged,
        status,
        key_metric: key,
        checks,
        error: error.as_deref(),
        config: s,
        result,
    };
    // Going through `Value` sorts every object's keys.
    let sorted = serde_json::to_value(&report).expect("report serializes");
    let mut bytes = serde_json::to_vec_pretty(&sorted).expect("report serializes");
    bytes.push(b'\n');
    let mut manifest = Manifest {
        name: s.name.clone(),
        task: s.task.name().into(),
        config_sha256: hash.clone(),
        seed: s.seed,
        versions: Versions::default(),
        started_unix_seconds: started,
        wall_time_seconds: wall,
        artifacts: Vec::new(),
    };
    let mut message = error.clone();
    if let Err(e) = output::write_artifacts(dir, &bytes, tables, &mut manifest) {
        message = Some(format!("writing artifacts to {}: {e}", dir.display()));
    }
    if message.is_none() && !passed {
        let failed: Vec<&str> = checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.name.as_str())
            .collect();
        message = Some(if !converged {
            "solver did not converge".to_string()
        } else {
            format!("failed checks: {}", failed.join("; "))
        });
    }
    RunSummary {
        name: s.name.clone(),
        task: s.task.name().into(),
        status: status.into(),
        passed,
        key_metric: key.cloned(),
        wall_time: wall,
        exit_code: if passed { EXIT_OK } else { EXIT_FAILED },
        message,
    }
}

fn load(path: &Path, seed: Option<u64>) -> Result<Scenario, ConfigError> {
    let s = Scenario::load(path)?;
    Ok(match seed {
        Some(seed) => s.with_seed(seed),
        None => s,
    })
}

fn run_file(file: &Path, out: Option<&Path>, seed: Option<u64>) -> i32 {
    let s = match load(file, seed) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {}: {e}", file.display());
            return EXIT_CONFIG;
        }
    };
    let dir = match (out, &s.output) {
        (Some(o), _) => o.to_path_buf(),
        (None, Some(o)) => PathBuf::from(o),
        (None, None) => Path::new("plap-out").join(&s.name),
    };
    let r = run_scenario(&s, &dir);
    report_line(&r);
    r.exit_code
}

fn report_line(r: &RunSummary) {
    let metric = r
        .key_metric
        .as_ref()
        .map(|(k, v)| format!(" {k}={}", output::format_f64(*v)))
        .unwrap_or_default();
    println!(
        "{}: {} [{}]{metric} ({:.2}s)",
        r.name,
        r.status,
        if r.passed { "pass" } else { "FAIL" },
        r.wall_time
    );
    if let Some(m) = &r.message {
        eprintln!("  {}: {m}", r.name);
    }
}

/// Runs a directory of scenarios; returns the exit code.
pub fn run_suite(
    dir: &Path,
    out: &Path,
    seed: Option<u64>,
) -> Result<(i32, Vec<RunSummary>), String> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| format!("cannot read {}: {e}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(format!("no scenarios in {}", dir.display()));
    }
    let mut loaded = Vec::new();
    let mut summaries = Vec::new();
    for f in &files {
        match load(f, seed) {
            Ok(s) => loaded.push(s),
            Err(e) => summaries.push(RunSummary {
                name: f
                    .file_stem()
                    .map_or_else(String::new, |n| n.to_string_lossy().into_owned()),
                task: String::new(),
                status: "config-error".into(),
                passed: false,
                key_metric: None,
                wall_time: 0.0,
                exit_code: EXIT_CONFIG,
                message: Some(format!("{}: {e}", f.display())),
            }),
        }
    }
    let mut seen: BTreeMap<&str, usize> = BTreeMap::new();
    for s in &loaded {
        *seen.entry(s.name.as_str()).or_default() += 1;
    }
    let dups: Vec<&str> = seen
        .into_iter()
        .filter(|(_, n)| *n > 1)
        .map(|(k, _)| k)
        .collect();
    if !dups.is_empty() {
        return Err(format!("duplicate scenario names: {}", dups.join(", ")));
    }
    let ran: Vec<RunSummary> = loaded
        .par_iter()
        .map(|s| run_scenario(s, &out.join(&s.name)))
        .collect();
    summaries.extend(ran);
    summaries.sort_by(|a, b| a.name.cmp(&b.name));
    let mut t = Table::new(
        "summary",
        &[
            "scenario",
            "task",
            "status",
            "passed",
            "key_metric",
            "key_value",
            "wall_time_seconds",
        ],
    );
    for r in &summaries {
        t.push(vec![
            r.name.as_str().into(),
            r.task.as_str().into(),
            r.status.as_str().into(),
            r.passed.into(),
            r.key_metric.as_ref().map(|k| k.0.as_str()).into(),
            r.key_metric.as_ref().map(|k| k.1).into(),
            Cell::Num(r.wall_time),
        ]);
    }
    fs::create_dir_all(out).map_err(|e| format!("cannot create {}: {e}", out.display()))?;
    let bytes = t.to_csv().map_err(|e| e.to_string())?;
    fs::write(out.join("summary.csv"), bytes)
        .map_err(|e| format!("cannot write summary.csv: {e}"))?;
    let code = if summaries.iter().any(|r| r.exit_code == EXIT_CONFIG) {
        EXIT_CONFIG
    } else if summaries.iter().any(|r| !r.passed) {
        EXIT_FAILED
    } else {
        EXIT_OK
    };
    Ok((code, summaries))
}

pub fn main_with(cli: Cli) -> i32 {
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be positive");
            return EXIT_CONFIG;
        }
        // Fails only if a pool already exists, which keeps the old one.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    if cli.list_tasks {
        for (name, about) in TASKS {
            println!("{name:<22} {about}");
        }
        return EXIT_OK;
    }
    match cli.command {
        Some(Command::Run { file }) => run_file(&file, cli.out.as_deref(), cli.seed),
        Some(Command::Suite { dir }) => {
            let out = cli.out.unwrap_or_else(|| PathBuf::from("plap-out"));
            match run_suite(&dir, &out, cli.seed) {
                Ok((code, rows)) => {
                    for r in &rows {
                        report_line(r);
                    }
                    code
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    EXIT_CONFIG
                }
            }
        }
        None => {
            eprintln!("error: expected a subcommand (run, suite) or --list-tasks");
            EXIT_CONFIG
        }
    }
}
