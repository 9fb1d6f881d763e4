use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::summary::{read_log, recompute, seed_dir, SCHEMA_VERSION};
use crate::contract::ContractGame;
use crate::env::{Cell, CoinColor, GridState};
use crate::error::{Error, Result};
use crate::metrics::CSV_HEADER;
use crate::nets::{checkpoint, Dist, PolicyParams};

pub const BUNDLE_FORMAT: &str = "pacoin-plot-bundle";

pub const CONTRACT_MEANS_HEADER: [&str; 9] = [
    "seed",
    "coin_color",
    "coin_row",
    "coin_col",
    "red_row",
    "red_col",
    "blue_row",
    "blue_col",
    "mean_alpha",
];

/// Index of a plot bundle directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleManifest {
    pub format: String,
    pub schema_version: u32,
    pub name: String,
    pub objective: String,
    pub label: String,
    pub lambda: f64,
    pub include_principal: bool,
    pub seeds: Vec<u64>,
    pub csv_header: Vec<String>,
    /// Per-seed training logs, relative to the bundle.
    pub logs: Vec<PathBuf>,
    pub summary: PathBuf,
    /// Present only when the principal learns.
    pub contract_means: Option<PathBuf>,
}

impl BundleManifest {
    pub fn load(bundle: &Path) -> Result<Self> {
        let path = bundle.join("manifest.json");
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let m: Self = serde_json::from_str(&text)?;
        if m.schema_version != SCHEMA_VERSION {
            return Err(Error::SchemaVersion {
                path,
                found: m.schema_version,
                expected: SCHEMA_VERSION,
            });
        }
        Ok(m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractMean {
    pub seed: u64,
    pub coin_color: String,
    pub coin_row: usize,
    pub coin_col: usize,
    pub red_row: usize,
    pub red_col: usize,
    pub blue_row: usize,
    pub blue_col: usize,
    pub mean_alpha: f64,
}

/// Mean contract share of `principal` in every grid layout where the coin
/// sits on a cell neither agent occupies. Agents may share a cell.
pub fn contract_means(game: &ContractGame, principal: &PolicyParams, seed: u64) -> Result<Vec<ContractMean>> {
    let size = game.config().env.grid_size;
    let cells: Vec<Cell> = (0..size * size).map(|i| Cell::new(i / size, i % size)).collect();
    let mut states = Vec::new();
    for color in [CoinColor::Red, CoinColor::Blue] {
        for &coin in &cells {
            for &red in &cells {
                for &blue in &cells {
                    if coin != red && coin != blue {
                        states.push(GridState {
                            red_pos: red,
                            blue_pos: blue,
                            coin_pos: coin,
                            coin_color: color,
                            t: 0,
                        });
                    }
                }
            }
        }
    }
    let obs_len = game.config().principal_obs_len();
    if principal.obs_dim() != obs_len {
        return Err(Error::Checkpoint(format!(
            "principal expects {} inputs, game provides {obs_len}",
            principal.obs_dim()
        )));
    }
    let mut obs = Array2::zeros((states.len(), obs_len));
    for (mut row, s) in obs.rows_mut().into_iter().zip(&states) {
        row.assign(&ndarray::ArrayView1::from(&game.principal_observation(s)[..]));
    }
    let out = principal.actor_forward(obs.view());
    let dists = principal.dists(out.output());
    states
        .iter()
        .zip(dists)
        .map(|(s, d)| match d {
            Dist::Gaussian(g) => Ok(ContractMean {
                seed,
                coin_color: match s.coin_color {
                    CoinColor::Red => "red".into(),
                    CoinColor::Blue => "blue".into(),
                },
                coin_row: s.coin_pos.row,
                coin_col: s.coin_pos.col,
                red_row: s.red_pos.row,
                red_col: s.red_pos.col,
                blue_row: s.blue_pos.row,
                blue_col: s.blue_pos.col,
                mean_alpha: g.mean,
            }),
            Dist::Categorical(_) => Err(Error::Checkpoint("principal checkpoint has a categorical head".into())),
        })
        .collect()
}

/// Writes the plotting input bundle for one experiment directory:
///
/// ```text
/// <bundle>/manifest.json
/// <bundle>/summary.json
/// <bundle>/logs/seed_<s>.csv
/// <bundle>/contract_means.csv
/// ```
pub fn plot_export(experiment_dir: &Path, bundle: &Path) -> Result<BundleManifest> {
    let summary = recompute(experiment_dir)?;
    let cfg = ExperimentConfig::load(&experiment_dir.join("config.toml"))?;
    let logs_dir = bundle.join("logs");
    std::fs::create_dir_all(&logs_dir).map_err(|e| Error::io(&logs_dir, e))?;

    let mut logs = Vec::new();
    for s in &summary.seeds {
        let src = seed_dir(experiment_dir, s.seed).join("log.csv");
        read_log(&src)?;
        let rel = PathBuf::from("logs").join(format!("seed_{}.csv", s.seed));
        std::fs::copy(&src, bundle.join(&rel)).map_err(|e| Error::io(&src, e))?;
        logs.push(rel);
    }
    summary.save(&bundle.join("summary.json"))?;

    let contract_means = if cfg.objective.principal_learns() {
        let game = ContractGame::new(cfg.game)?;
        let path = bundle.join("contract_means.csv");
        let mut w = csv::WriterBuilder::new().has_headers(false).from_path(&path)?;
        w.write_record(CONTRACT_MEANS_HEADER)?;
        for s in &summary.seeds {
            let ckpt = seed_dir(experiment_dir, s.seed).join("checkpoints").join("principal.ckpt");
            if !ckpt.exists() {
                continue;
            }
            let params = checkpoint::load(&ckpt)?;
            for row in contract_means(&game, &params, s.seed)? {
                w.serialize(row)?;
            }
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
        Some(PathBuf::from("contract_means.csv"))
    } else {
        None
    };

    let manifest = BundleManifest {
        format: BUNDLE_FORMAT.into(),
        schema_version: SCHEMA_VERSION,
        name: summary.name.clone(),
        objective: summary.objective.clone(),
        label: summary.label.clone(),
        lambda: summary.lambda,
        include_principal: summary.include_principal,
        seeds: summary.seeds.iter().map(|s| s.seed).collect(),
        csv_header: CSV_HEADER.iter().map(|s| s.to_string()).collect(),
        logs,
        summary: PathBuf::from("summary.json"),
        contract_means,
    };
    let path = bundle.join("manifest.json");
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}
