//! Command-line front end: scenario runs, seed sweeps, the quick
//! verification suite and preset listing.
//!
//! Exit codes: 0 success, 1 verification failure, 2 configuration error,
//! 3 simulation divergence, 4 I/O error. Failures also emit one line of
//! machine-readable JSON on stderr.

use std::collections::VecDeque;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use clap::{Args, Parser, Subcommand};

use crate::config::{parse_config, ScenarioConfig};
use crate::error::Error;
use crate::harness::run_experiment;
use crate::output::write_artifacts;
use crate::verify::run_checks;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DIVERGENCE: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Parser)]
#[command(
    name = "pcid",
    about = "Online identification of piecewise-constant regression parameters: \
             switching-instant detection and exponentially convergent estimation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write its artifacts.
    Run(RunArgs),
    /// Run a scenario across consecutive seeds on a bounded worker pool.
    Sweep(SweepArgs),
    /// Run the quick invariant suite and print a pass/fail table.
    Verify,
    /// List the built-in scenario presets.
    ListScenarios,
}

#[derive(Args, Clone)]
struct RunArgs {
    /// Scenario JSON; defaults come from the preset named by its
    /// `scenario` key. Omitted entirely: the noise-free preset.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (env: PCID_OUT).
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Seed override (env: PCID_SEED).
    #[arg(long)]
    seed: Option<u64>,
    /// Configuration overrides, `key=value` with dotted paths.
    #[arg(long = "set")]
    set: Vec<String>,
    /// Keep every Nth trace row in the CSV output.
    #[arg(long)]
    decimate: Option<usize>,
    /// Law selection: proposed, gradient, concurrent, purging,
    /// efficient_drem or all (baselines run alongside the proposed law).
    #[arg(long)]
    law: Option<String>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Number of consecutive seeds to run, starting at 0 (or at --seed).
    #[arg(long, default_value_t = 8)]
    seeds: u64,
    /// Worker pool size.
    #[arg(long, default_value_t = 4)]
    jobs: usize,
}

fn error_json(code: i32, err: &str) -> String {
    serde_json::json!({ "error": { "exit_code": code, "message": err } }).to_string()
}

fn fail(code: i32, err: impl std::fmt::Display) -> i32 {
    eprintln!("{}", error_json(code, &err.to_string()));
    code
}

fn law_overrides(law: &str) -> Result<Vec<String>, String> {
    let all = ["gradient", "concurrent", "purging", "efficient_drem"];
    let selected: Vec<&str> = match law {
        "proposed" => vec![],
        "all" => all.to_vec(),
        one if all.contains(&one) => vec![one],
        other => return Err(format!("unknown law '{other}'; expected proposed, gradient, concurrent, purging, efficient_drem or all")),
    };
    Ok(selected
        .into_iter()
        .map(|l| format!("baselines.{l}.enabled=true"))
        .collect())
}

fn resolve_config(args: &RunArgs) -> Result<ScenarioConfig, (i32, String)> {
    let file_text = match &args.config {
        Some(path) => Some(
            std::fs::read_to_string(path)
                .map_err(|e| (EXIT_CONFIG, format!("config file {}: {e}", path.display())))?,
        ),
        None => None,
    };
    let mut overrides = args.set.clone();
    if let Some(law) = &args.law {
        overrides.extend(law_overrides(law).map_err(|e| (EXIT_CONFIG, e))?);
    }
    if let Some(d) = args.decimate {
        overrides.push(format!("decimate={d}"));
    }
    let seed = args.seed.or_else(|| {
        std::env::var("PCID_SEED").ok().and_then(|s| s.parse().ok())
    });
    if let Some(s) = seed {
        overrides.push(format!("seed={s}"));
    }
    parse_config(file_text.as_deref(), &overrides).map_err(|e| (EXIT_CONFIG, e.to_string()))
}

fn out_dir(args: &RunArgs) -> PathBuf {
    if args.out != Path::new("out") {
        return args.out.clone();
    }
    std::env::var("PCID_OUT").map(PathBuf::from).unwrap_or_else(|_| args.out.clone())
}

fn execute_run(config: &ScenarioConfig, dir: &Path) -> Result<String, (i32, String)> {
    let output = match run_experiment(config) {
        Ok(o) => o,
        Err(Error::Config(v)) => return Err((EXIT_CONFIG, Error::Config(v).to_string())),
        Err(Error::Io(e)) => return Err((EXIT_IO, e.to_string())),
        Err(e) => return Err((EXIT_CONFIG, e.to_string())),
    };
    write_artifacts(&output, dir).map_err(|e| (EXIT_IO, e.to_string()))?;
    if let Some(d) = &output.metrics.divergence {
        return Err((
            EXIT_DIVERGENCE,
            format!("divergence in {} at t = {}; last-good artifacts written to {}", d.component, d.t, dir.display()),
        ));
    }
    let summary = format!(
        "{}: seed {} | {} events ({} false) | final parameter error {} | {:.1} ms | artifacts in {}",
        config.scenario.name(),
        config.seed,
        output.metrics.event_count,
        output.metrics.false_alarms,
        output
            .metrics
            .theta_err_final
            .map(|e| format!("{e:.3e}"))
            .unwrap_or_else(|| "n/a".into()),
        output.metrics.runtime_ms,
        dir.display(),
    );
    Ok(summary)
}

fn cmd_run(args: &RunArgs) -> i32 {
    let config = match resolve_config(args) {
        Ok(c) => c,
        Err((code, msg)) => return fail(code, msg),
    };
    match execute_run(&config, &out_dir(args)) {
        Ok(summary) => {
            println!("{summary}");
            EXIT_OK
        }
        Err((code, msg)) => fail(code, msg),
    }
}

fn cmd_sweep(args: &SweepArgs) -> i32 {
    let base_seed = args.run.seed.unwrap_or(0);
    let root = out_dir(&args.run);
    let queue: Mutex<VecDeque<u64>> =
        Mutex::new((0..args.seeds).map(|i| base_seed + i).collect());
    let failures: Mutex<Vec<(u64, i32, String)>> = Mutex::new(Vec::new());

    std::thread::scope(|scope| {
        for _ in 0..args.jobs.max(1) {
            scope.spawn(|| loop {
                let seed = match queue.lock().unwrap().pop_front() {
                    Some(s) => s,
                    None => break,
                };
                let mut run_args = args.run.clone();
                run_args.seed = Some(seed);
                let dir = root.join(format!("run_{seed}"));
                match resolve_config(&run_args).and_then(|cfg| execute_run(&cfg, &dir)) {
                    Ok(summary) => println!("{summary}"),
                    Err((code, msg)) => failures.lock().unwrap().push((seed, code, msg)),
                }
            });
        }
    });

    let failures = failures.into_inner().unwrap();
    if failures.is_empty() {
        println!("sweep complete: {} runs under {}", args.seeds, root.display());
        EXIT_OK
    } else {
        let code = failures.iter().map(|(_, c, _)| *c).max().unwrap();
        for (seed, c, msg) in &failures {
            eprintln!("{}", error_json(*c, &format!("seed {seed}: {msg}")));
        }
        code
    }
}

fn cmd_verify() -> i32 {
    let checks = run_checks();
    let mut all_pass = true;
    println!("{:<55} {:<6} detail", "check", "result");
    for c in &checks {
        all_pass &= c.pass;
        println!("{:<55} {:<6} {}", c.name, if c.pass { "PASS" } else { "FAIL" }, c.detail);
    }
    if all_pass {
        EXIT_OK
    } else {
        EXIT_VERIFY
    }
}

fn cmd_list_scenarios() -> i32 {
    for (name, blurb) in ScenarioConfig::list_scenarios() {
        println!("{name:<20} {blurb}");
    }
    EXIT_OK
}

/// Parses `std::env::args` and executes; returns the process exit code.
pub fn main() -> i32 {
    let cli = Cli::parse();
    match &cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Verify => cmd_verify(),
        Command::ListScenarios => cmd_list_scenarios(),
    }
}
