//! Parameter checkpoints.
//!
//! Layout: one line of JSON header terminated by `\n`, followed by
//! `param_count` little-endian `f64` values in [`PolicyParams::tensors`]
//! order. Round trips are bit-exact.

use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::mlp::{Dense, Mlp};
use super::policy::{Head, PolicyParams};
use crate::error::{Error, Result};

pub const CHECKPOINT_FORMAT: &str = "pacoin-params";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub format: String,
    pub version: u32,
    /// `"categorical"` or `"gaussian"`.
    pub head: String,
    pub actor_sizes: Vec<usize>,
    pub critic_sizes: Vec<usize>,
    pub param_count: usize,
}

pub fn write_params<W: Write>(params: &PolicyParams, mut out: W) -> Result<()> {
    let header = CheckpointHeader {
        format: CHECKPOINT_FORMAT.into(),
        version: CHECKPOINT_VERSION,
        head: match params.head {
            Head::Categorical => "categorical".into(),
            Head::Gaussian { .. } => "gaussian".into(),
        },
        actor_sizes: params.actor.sizes(),
        critic_sizes: params.critic.sizes(),
        param_count: params.param_count(),
    };
    let io = |e| Error::io("<checkpoint>", e);
    serde_json::to_writer(&mut out, &header)?;
    out.write_all(b"\n").map_err(io)?;
    let mut bytes = Vec::with_capacity(8 * header.param_count);
    for t in params.tensors() {
        for v in t {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
    }
    out.write_all(&bytes).map_err(io)?;
    Ok(())
}

pub fn read_params<R: BufRead>(mut input: R) -> Result<PolicyParams> {
    let io = |e| Error::io("<checkpoint>", e);
    let mut line = String::new();
    input.read_line(&mut line).map_err(io)?;
    let header: CheckpointHeader = serde_json::from_str(line.trim_end())
        .map_err(|e| Error::Checkpoint(format!("bad header: {e}")))?;
    if header.format != CHECKPOINT_FORMAT || header.version != CHECKPOINT_VERSION {
        return Err(Error::Checkpoint(format!(
            "unsupported format {} v{}",
            header.format, header.version
        )));
    }
    let head = match header.head.as_str() {
        "categorical" => Head::Categorical,
        "gaussian" => Head::Gaussian { log_std: 0.0 },
        other => return Err(Error::Checkpoint(format!("unknown head {other}"))),
    };
    let mut params = PolicyParams {
        actor: zero_mlp(&header.actor_sizes)?,
        critic: zero_mlp(&header.critic_sizes)?,
        head,
    };
    if params.param_count() != header.param_count {
        return Err(Error::Checkpoint(format!(
            "header declares {} parameters, shapes imply {}",
            header.param_count,
            params.param_count()
        )));
    }
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes).map_err(io)?;
    if bytes.len() != 8 * header.param_count {
        return Err(Error::Checkpoint(format!(
            "expected {} payload bytes, found {}",
            8 * header.param_count,
            bytes.len()
        )));
    }
    let values: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    params.set_flat(&values);
    Ok(params)
}

pub fn save(params: &PolicyParams, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_params(params, std::io::BufWriter::new(file))
}

pub fn load(path: &Path) -> Result<PolicyParams> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_params(std::io::BufReader::new(file))
}

fn zero_mlp(sizes: &[usize]) -> Result<Mlp> {
    if sizes.len() < 2 || sizes.contains(&0) {
        return Err(Error::Checkpoint(format!("bad layer sizes {sizes:?}")));
    }
    Ok(Mlp {
        layers: sizes.windows(2).map(|w| Dense::zeros(w[0], w[1])).collect(),
    })
}
