use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::config::ExperimentConfig;
use super::summary::{seed_dir, SeedMetrics, SeedResult, SeedStatus, Summary};
use crate::error::{Error, Result};
use crate::metrics::{MetricsRow, CSV_HEADER};
use crate::ppo::CoinTrainer;

/// Execution settings that do not change results.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    /// Seeds trained concurrently.
    pub workers: usize,
    /// Forces sequential execution.
    pub deterministic: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            workers: 1,
            deterministic: true,
        }
    }
}

impl RunOptions {
    pub fn threads(&self) -> usize {
        if self.deterministic {
            1
        } else {
            self.workers.max(1)
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub summary: Summary,
}

impl RunOutcome {
    pub fn failed_seeds(&self) -> Vec<u64> {
        self.summary
            .seeds
            .iter()
            .filter(|s| s.status == SeedStatus::Failed)
            .map(|s| s.seed)
            .collect()
    }
}

/// Callback invoked after every logged iteration.
pub type Progress<'a> = &'a (dyn Fn(u64, &MetricsRow) + Sync);

/// Trains every seed and writes the experiment directory:
///
/// ```text
/// <dir>/config.toml
/// <dir>/summary.json
/// <dir>/seed_<s>/config.toml
/// <dir>/seed_<s>/log.csv
/// <dir>/seed_<s>/checkpoints/{principal,agent_red,agent_blue}.ckpt
/// ```
///
/// Seed failures are recorded in the summary and do not abort other seeds.
pub fn run(cfg: &ExperimentConfig, dir: &Path, opts: RunOptions, progress: Option<Progress>) -> Result<RunOutcome> {
    cfg.validate()?;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_text(&dir.join("config.toml"), &cfg.to_toml()?)?;

    let one = |seed: u64| run_seed(cfg, seed, &seed_dir(dir, seed), progress);
    let seeds: Vec<SeedResult> = if opts.threads() == 1 {
        cfg.seeds.iter().map(|&s| one(s)).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(opts.threads())
            .build()
            .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
        pool.install(|| cfg.seeds.par_iter().map(|&s| one(s)).collect())
    };
    let summary = Summary::build(cfg, seeds);
    summary.save(&dir.join("summary.json"))?;
    Ok(RunOutcome {
        dir: dir.to_path_buf(),
        summary,
    })
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn run_seed(cfg: &ExperimentConfig, seed: u64, dir: &Path, progress: Option<Progress>) -> SeedResult {
    let mut rows = Vec::with_capacity(cfg.iterations);
    let outcome = train_seed(cfg, seed, dir, progress, &mut rows);
    let (status, error) = match outcome {
        Ok(()) => (SeedStatus::Ok, None),
        Err(e) => (SeedStatus::Failed, Some(e.to_string())),
    };
    let metrics = match status {
        SeedStatus::Ok => SeedMetrics::from_rows(&rows, cfg.eval_window_fraction, cfg.objective.principal_in_metrics()),
        SeedStatus::Failed => None,
    };
    SeedResult {
        seed,
        status,
        error,
        iterations_completed: rows.len(),
        metrics,
    }
}

fn train_seed(
    cfg: &ExperimentConfig,
    seed: u64,
    dir: &Path,
    progress: Option<Progress>,
    rows: &mut Vec<MetricsRow>,
) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_text(&dir.join("config.toml"), &cfg.for_seed(seed).to_toml()?)?;
    let mut log = LogWriter::create(&dir.join("log.csv"))?;
    let mut trainer = CoinTrainer::new(cfg.game, cfg.trainer_for(seed), cfg.objective)?;
    let ckpt_dir = dir.join("checkpoints");
    for _ in 0..cfg.iterations {
        let row = match trainer.iterate() {
            Ok(row) => row,
            Err(e) => {
                // keep the last state for inspection
                trainer.save_checkpoints(&ckpt_dir)?;
                return Err(e);
            }
        };
        log.write(&row)?;
        if let Some(p) = progress {
            p(seed, &row);
        }
        rows.push(row);
    }
    trainer.save_checkpoints(&ckpt_dir)
}

/// CSV log with the header written up front, flushed after every row.
pub struct LogWriter {
    writer: csv::Writer<std::fs::File>,
}

impl LogWriter {
    pub fn create(path: &Path) -> Result<Self> {
        let mut writer = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
        writer.write_record(CSV_HEADER)?;
        writer.flush().map_err(|e| Error::io(path, e))?;
        Ok(Self { writer })
    }

    pub fn write(&mut self, row: &MetricsRow) -> Result<()> {
        self.writer.serialize(row)?;
        self.writer.flush().map_err(|e| Error::io("<log>", e))
    }
}
