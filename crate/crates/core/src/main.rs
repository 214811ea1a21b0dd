use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ts_bandit::harness::output::write_outputs;
use ts_bandit::harness::runner::{run_experiment_with_workers, worker_count};
use ts_bandit::harness::sweep::run_sweep;
use ts_bandit::harness::verify::{run_suite, Suite};
use ts_bandit::harness::ExperimentConfig;

#[derive(Parser)]
#[command(name = "ts-bandit", version, about = "Thompson Sampling simulations and bound checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write rounds.csv and report.json.
    Run {
        config: PathBuf,
        /// Output directory; overrides `output.dir` (default `out`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a verification suite; exits nonzero if any check fails.
    Verify {
        /// conjugacy, telescoping, lemma1, lemma2, lemma6, lemma8, gaussian, covers, bounds or all
        suite: String,
    },
    /// Run a config once per value of a dotted parameter path.
    Sweep {
        config: PathBuf,
        #[arg(long)]
        param: String,
        /// Comma-separated values, each parsed as JSON when possible.
        #[arg(long, value_delimiter = ',')]
        values: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run { config, out } => run(config, out),
        Command::Verify { suite } => verify(&suite),
        Command::Sweep {
            config,
            param,
            values,
            out,
        } => sweep(config, &param, &values, out),
    }
}

fn run(path: PathBuf, out: Option<PathBuf>) -> ExitCode {
    let cfg = match ExperimentConfig::load(&path) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let dir = out.or_else(|| cfg.output.dir.clone()).unwrap_or_else(|| PathBuf::from("out"));
    let result = match run_experiment_with_workers(&cfg, worker_count()) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if let Err(e) = write_outputs(&dir, &result, !cfg.output.no_rounds) {
        eprintln!("error: {e}");
        return ExitCode::FAILURE;
    }
    let r = &result.report;
    println!(
        "{} of {} runs completed, mean final regret {:.4} (se {:.4})",
        r.completed, r.runs, r.final_mean_regret, r.final_se
    );
    for a in &r.aborted {
        println!("aborted run {} (seed {:#x}): {}", a.run, a.seed, a.error);
    }
    for c in &r.checks {
        println!(
            "[{}] {}: observed {:.6}, limit {:.6}, slack {:.3e}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.observed,
            c.limit,
            c.slack
        );
    }
    println!("wrote {}", dir.display());
    ExitCode::SUCCESS
}

fn verify(name: &str) -> ExitCode {
    let suite: Suite = match name.parse() {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let checks = match run_suite(suite) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    };
    for c in &checks {
        println!("{c}");
    }
    let failed: Vec<_> = checks.iter().filter(|c| !c.passed).collect();
    if failed.is_empty() {
        println!("all {} checks passed", checks.len());
        ExitCode::SUCCESS
    } else {
        for c in failed {
            let seed = c.seed.map(|s| format!(" at seed {s:#x}")).unwrap_or_default();
            eprintln!("failed: {}/{}{seed}", c.suite, c.name);
        }
        ExitCode::FAILURE
    }
}

fn sweep(path: PathBuf, param: &str, values: &[String], out: Option<PathBuf>) -> ExitCode {
    let text = match std::fs::read_to_string(&path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {}: {e}", path.display());
            return ExitCode::from(2);
        }
    };
    let dir = out.unwrap_or_else(|| PathBuf::from("sweep"));
    match run_sweep(&text, &path.display().to_string(), param, values, Some(&dir), worker_count()) {
        Ok(points) => {
            for (raw, p) in values.iter().zip(&points) {
                println!(
                    "{param}={raw}: mean final regret {:.4} (se {:.4}){}",
                    p.final_mean_regret,
                    p.final_se,
                    if p.passed { "" } else { " [checks failed]" }
                );
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
