use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use pacoin_core::experiment::{self, ExperimentConfig, RunOptions};
use pacoin_core::metrics::MetricsRow;
use pacoin_core::oracle::{self, OracleFile};
use pacoin_core::Error;

const EXIT_SEED_FAILURE: u8 = 1;
const EXIT_CONFIG: u8 = 2;

#[derive(Parser)]
#[command(name = "pacoin", version, about = "Principal-agent Coin Game trainer")]
struct Cli {
    /// Root directory for relative experiment output paths.
    #[arg(long, env = "PACOIN_OUTPUT_ROOT", global = true)]
    output_root: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train every seed of an experiment config.
    Run {
        config: PathBuf,
        /// Seeds trained in parallel.
        #[arg(long, default_value_t = 1)]
        workers: usize,
        /// Run seeds sequentially regardless of --workers.
        #[arg(long)]
        deterministic: bool,
        /// Print a progress line every N iterations (0 disables).
        #[arg(long, default_value_t = 50)]
        log_every: usize,
    },
    /// Compare finished experiments.
    Summarize {
        #[arg(required = true)]
        dirs: Vec<PathBuf>,
        /// Write the comparison as JSON to this file.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Solve a tabular game and check the contract constraints.
    Oracle {
        game: PathBuf,
        /// Print the full report as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Write the plotting bundle for an experiment.
    PlotExport {
        dir: PathBuf,
        /// Bundle directory (default: <dir>/bundle).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            let config_error = e
                .chain()
                .filter_map(|c| c.downcast_ref::<Error>())
                .any(|c| {
                    matches!(
                        c,
                        Error::Config(_)
                            | Error::TomlDe(_)
                            | Error::TabularGame(_)
                            | Error::SchemaVersion { .. }
                            | Error::LogHeader { .. }
                    )
                });
            ExitCode::from(if config_error { EXIT_CONFIG } else { EXIT_SEED_FAILURE })
        }
    }
}

fn dispatch(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Run {
            config,
            workers,
            deterministic,
            log_every,
        } => {
            let cfg = ExperimentConfig::load(&config).with_context(|| format!("loading {}", config.display()))?;
            let dir = cfg
                .resolve_output_dir(cli.output_root.as_deref())
                .join(&cfg.name);
            let opts = RunOptions { workers, deterministic };
            let print = move |seed: u64, row: &MetricsRow| {
                if log_every > 0 && (row.iteration + 1).is_multiple_of(log_every) {
                    eprintln!(
                        "seed {seed} iter {:>5}  welfare {:7.2}  1-gini {:>6}  alpha {:.3}",
                        row.iteration + 1,
                        row.welfare,
                        row.one_minus_gini.map_or("-".into(), |g| format!("{g:.3}")),
                        row.mean_alpha,
                    );
                }
            };
            let outcome = experiment::run(&cfg, &dir, opts, Some(&print))?;
            println!("{}", experiment::Comparison {
                schema_version: experiment::SCHEMA_VERSION,
                experiments: vec![outcome.summary.clone()],
            }
            .table());
            println!("results in {}", outcome.dir.display());
            let failed = outcome.failed_seeds();
            if failed.is_empty() {
                Ok(ExitCode::SUCCESS)
            } else {
                for s in &outcome.summary.seeds {
                    if let Some(err) = &s.error {
                        eprintln!("seed {} failed: {err}", s.seed);
                    }
                }
                Ok(ExitCode::from(EXIT_SEED_FAILURE))
            }
        }
        Command::Summarize { dirs, json } => {
            let cmp = experiment::summarize(&dirs)?;
            print!("{}", cmp.table());
            if let Some(path) = json {
                let text = serde_json_pretty(&cmp)?;
                std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Oracle { game, json } => {
            let file = OracleFile::load(&game)?;
            let report = oracle::run_oracle(file)?;
            if json {
                println!("{}", serde_json_pretty(&report)?);
            } else {
                println!("initial value       {:.6}", report.initial_value);
                println!("bellman residual    {:.3e}", report.bellman_residual);
                println!("best response       {:?}", report.solution.best.action);
                println!("IR violations       {}", report.best_response_ir_violations.len());
                println!("limited liability   {}", report.limited_liability);
                if let Some(n) = &report.noise {
                    println!(
                        "noisy values ±{}   {} IR violations, policy {:?}",
                        n.magnitude,
                        n.violations.len(),
                        n.policy.action
                    );
                }
                if let Some(mc) = &report.monte_carlo {
                    println!(
                        "monte carlo         {:.6} ± {:.6} over {} rollouts",
                        mc.mean, mc.std_error, mc.rollouts
                    );
                }
            }
            Ok(if report.ok() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_SEED_FAILURE)
            })
        }
        Command::PlotExport { dir, out } => {
            let bundle = out.unwrap_or_else(|| dir.join("bundle"));
            let manifest = experiment::plot_export(&dir, &bundle)?;
            println!(
                "wrote {} logs for {} to {}",
                manifest.logs.len(),
                manifest.name,
                bundle.display()
            );
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn serde_json_pretty<T: serde::Serialize>(value: &T) -> anyhow::Result<String> {
    Ok(serde_json::to_string_pretty(value)?)
}
