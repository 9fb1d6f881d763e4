use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::{eval_window, ExperimentConfig};
use crate::error::{Error, Result};
use crate::metrics::{mean, MetricSet, MetricsRow, CSV_HEADER};

/// Version of the log and summary layout. Bumped on any column or key change.
pub const SCHEMA_VERSION: u32 = 1;

pub const STATUS_OK: &str = "ok";
pub const STATUS_PARTIAL: &str = "partial";
pub const STATUS_INSUFFICIENT: &str = "insufficient data";

/// Reported metrics, in table order.
pub const METRICS: [&str; 4] = ["one_minus_gini", "welfare", "rawlsian", "aie"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeedStatus {
    Ok,
    Failed,
}

/// Tail-window evaluation of one seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedMetrics {
    pub window: usize,
    pub wealth_red: f64,
    pub wealth_blue: f64,
    pub wealth_principal: f64,
    pub one_minus_gini: Option<f64>,
    pub welfare: f64,
    pub rawlsian: f64,
    pub aie: Option<f64>,
}

impl SeedMetrics {
    /// Metrics of the mean wealth vector over the last `window` rows.
    pub fn from_rows(rows: &[MetricsRow], fraction: f64, include_principal: bool) -> Option<Self> {
        let window = eval_window(fraction, rows.len());
        if window == 0 {
            return None;
        }
        let tail = &rows[rows.len() - window..];
        let avg = |f: fn(&MetricsRow) -> f64| tail.iter().map(f).sum::<f64>() / window as f64;
        let wealth_red = avg(|r| r.wealth_red);
        let wealth_blue = avg(|r| r.wealth_blue);
        let wealth_principal = avg(|r| r.wealth_principal);
        let mut parties = vec![wealth_red, wealth_blue];
        if include_principal {
            parties.push(wealth_principal);
        }
        let m = MetricSet::of(&parties);
        Some(Self {
            window,
            wealth_red,
            wealth_blue,
            wealth_principal,
            one_minus_gini: m.one_minus_gini,
            welfare: m.welfare,
            rawlsian: m.rawlsian,
            aie: m.aie,
        })
    }

    pub fn metric(&self, name: &str) -> Option<f64> {
        match name {
            "one_minus_gini" => self.one_minus_gini,
            "welfare" => Some(self.welfare),
            "rawlsian" => Some(self.rawlsian),
            "aie" => self.aie,
            "wealth_red" => Some(self.wealth_red),
            "wealth_blue" => Some(self.wealth_blue),
            "wealth_principal" => Some(self.wealth_principal),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedResult {
    pub seed: u64,
    pub status: SeedStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub iterations_completed: usize,
    pub metrics: Option<SeedMetrics>,
}

/// Mean and population standard deviation across seeds. `flagged` marks a
/// metric that is undefined for at least one seed; mean and std are then
/// withheld.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub mean: Option<f64>,
    pub std: Option<f64>,
    pub n: usize,
    pub flagged: bool,
}

impl Aggregate {
    pub fn of(values: &[Option<f64>]) -> Self {
        let n = values.len();
        let flagged = values.iter().any(Option::is_none);
        if flagged || n == 0 {
            return Self {
                mean: None,
                std: None,
                n,
                flagged,
            };
        }
        let xs: Vec<f64> = values.iter().flatten().copied().collect();
        let m = mean(&xs).expect("non-empty");
        let var = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n as f64;
        Self {
            mean: Some(m),
            std: Some(var.sqrt()),
            n,
            flagged,
        }
    }

    fn cell(&self) -> String {
        match (self.mean, self.std) {
            (Some(m), Some(s)) => format!("{m:.2} ± {s:.2}"),
            _ if self.flagged => "n/a (undefined)".into(),
            _ => "-".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub schema_version: u32,
    pub name: String,
    pub objective: String,
    pub label: String,
    pub lambda: f64,
    pub include_principal: bool,
    pub iterations: usize,
    pub eval_window_fraction: f64,
    pub status: String,
    pub seeds: Vec<SeedResult>,
    pub metrics: BTreeMap<String, Aggregate>,
    pub wealth: BTreeMap<String, Aggregate>,
}

impl Summary {
    pub fn build(cfg: &ExperimentConfig, seeds: Vec<SeedResult>) -> Self {
        let ok: Vec<&SeedMetrics> = seeds
            .iter()
            .filter(|s| s.status == SeedStatus::Ok)
            .filter_map(|s| s.metrics.as_ref())
            .collect();
        let agg = |name: &str| Aggregate::of(&ok.iter().map(|m| m.metric(name)).collect::<Vec<_>>());
        let metrics = METRICS.iter().map(|k| (k.to_string(), agg(k))).collect();
        let mut wealth = BTreeMap::new();
        wealth.insert("red".to_string(), agg("wealth_red"));
        wealth.insert("blue".to_string(), agg("wealth_blue"));
        if cfg.objective.principal_in_metrics() {
            wealth.insert("principal".to_string(), agg("wealth_principal"));
        }
        let status = if ok.is_empty() {
            STATUS_INSUFFICIENT
        } else if seeds.iter().any(|s| s.status == SeedStatus::Failed) {
            STATUS_PARTIAL
        } else {
            STATUS_OK
        };
        Self {
            schema_version: SCHEMA_VERSION,
            name: cfg.name.clone(),
            objective: cfg.objective.name().to_string(),
            label: cfg.objective.label(),
            lambda: cfg.objective.lambda(),
            include_principal: cfg.objective.principal_in_metrics(),
            iterations: cfg.iterations,
            eval_window_fraction: cfg.eval_window_fraction,
            status: status.to_string(),
            seeds,
            metrics,
            wealth,
        }
    }

    pub fn metric(&self, name: &str) -> &Aggregate {
        &self.metrics[name]
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let raw: serde_json::Value = serde_json::from_str(&text)?;
        let found = raw.get("schema_version").and_then(|v| v.as_u64()).unwrap_or(0) as u32;
        if found != SCHEMA_VERSION {
            return Err(Error::SchemaVersion {
                path: path.to_path_buf(),
                found,
                expected: SCHEMA_VERSION,
            });
        }
        Ok(serde_json::from_value(raw)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

pub fn seed_dir(experiment_dir: &Path, seed: u64) -> PathBuf {
    experiment_dir.join(format!("seed_{seed}"))
}

/// Reads a training log, insisting on the exact column layout.
pub fn read_log(path: &Path) -> Result<Vec<MetricsRow>> {
    let mut reader = csv::Reader::from_path(path)?;
    let header: Vec<&str> = reader.headers()?.iter().collect();
    if header != CSV_HEADER {
        return Err(Error::LogHeader {
            path: path.to_path_buf(),
            found: header.join(","),
        });
    }
    reader.deserialize().map(|r| r.map_err(Error::from)).collect()
}

/// Rebuilds an experiment's summary from its logs.
pub fn recompute(experiment_dir: &Path) -> Result<Summary> {
    let stored = Summary::load(&experiment_dir.join("summary.json"))?;
    let cfg = ExperimentConfig::load(&experiment_dir.join("config.toml"))?;
    let mut seeds = Vec::with_capacity(stored.seeds.len());
    for s in stored.seeds {
        let rows = read_log(&seed_dir(experiment_dir, s.seed).join("log.csv"))?;
        let metrics = match s.status {
            SeedStatus::Ok => SeedMetrics::from_rows(&rows, cfg.eval_window_fraction, stored.include_principal),
            SeedStatus::Failed => None,
        };
        seeds.push(SeedResult {
            iterations_completed: rows.len(),
            metrics,
            ..s
        });
    }
    Ok(Summary::build(&cfg, seeds))
}

/// Comparison of several experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub schema_version: u32,
    pub experiments: Vec<Summary>,
}

pub fn summarize(dirs: &[PathBuf]) -> Result<Comparison> {
    if dirs.is_empty() {
        return Err(Error::Config("summarize needs at least one experiment directory".into()));
    }
    let experiments = dirs.iter().map(|d| recompute(d)).collect::<Result<_>>()?;
    Ok(Comparison {
        schema_version: SCHEMA_VERSION,
        experiments,
    })
}

impl Comparison {
    /// Metrics as rows, experiments as columns.
    pub fn table(&self) -> String {
        let titles = [("one_minus_gini", "1-Gini"), ("welfare", "Welfare"), ("rawlsian", "Rawlsian"), ("aie", "AIE")];
        let mut header = vec![String::new()];
        header.extend(self.experiments.iter().map(|e| {
            if e.include_principal {
                e.name.clone()
            } else {
                format!("{}*", e.name)
            }
        }));
        let mut rows = vec![header];
        for (key, title) in titles {
            let mut row = vec![title.to_string()];
            row.extend(self.experiments.iter().map(|e| e.metric(key).cell()));
            rows.push(row);
        }
        let ncols = rows[0].len();
        let widths: Vec<usize> = (0..ncols)
            .map(|c| rows.iter().map(|r| r[c].chars().count()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for row in &rows {
            let line: Vec<String> = row
                .iter()
                .zip(&widths)
                .map(|(cell, w)| format!("{cell:<w$}", w = *w))
                .collect();
            let _ = writeln!(out, "{}", line.join("  ").trim_end());
        }
        if self.experiments.iter().any(|e| !e.include_principal) {
            out.push_str("* metrics over agents only\n");
        }
        out
    }
}
