//! Checkpoint files: a JSON manifest next to a flat little-endian `f32`
//! parameter blob in canonical order (inner_a, inner_b, outer; layer-major,
//! row-major weights followed by biases).

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::network::{Architecture, Network};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointManifest {
    pub architecture: Architecture,
    pub out_dim: usize,
    pub seed: u64,
    pub iteration: usize,
    pub parameter_count: usize,
    pub config_hash: String,
    /// Blob path relative to the manifest.
    pub params_file: String,
    /// Dataset manifest(s) this checkpoint was trained on.
    #[serde(default)]
    pub datasets: Vec<String>,
    /// Checkpoint this one was initialized from, if any.
    #[serde(default)]
    pub parent: Option<String>,
}

pub fn write_f32_blob(path: &Path, values: impl IntoIterator<Item = f64>) -> Result<()> {
    let bytes: Vec<u8> = values
        .into_iter()
        .flat_map(|v| (v as f32).to_le_bytes())
        .collect();
    fs::write(path, bytes)?;
    Ok(())
}

pub fn read_f32_blob(path: &Path) -> Result<Vec<f64>> {
    let bytes = fs::read(path)?;
    if bytes.len() % 4 != 0 {
        return Err(Error::contract(format!(
            "{} is not a whole number of f32 values",
            path.display()
        )));
    }
    Ok(bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect())
}

/// Write `<dir>/<name>.json` and `<dir>/<name>.bin`; returns the manifest path.
pub fn save_checkpoint(
    dir: &Path,
    name: &str,
    net: &Network,
    mut manifest: CheckpointManifest,
) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let bin = format!("{name}.bin");
    write_f32_blob(&dir.join(&bin), net.params.iter().copied())?;
    manifest.architecture = net.arch;
    manifest.out_dim = net.arch.out_dim;
    manifest.parameter_count = net.params.len();
    manifest.params_file = bin;
    let path = dir.join(format!("{name}.json"));
    fs::write(&path, serde_json::to_string_pretty(&manifest)?)?;
    Ok(path)
}

pub fn read_checkpoint_manifest(path: &Path) -> Result<CheckpointManifest> {
    Ok(serde_json::from_slice(&fs::read(path)?)?)
}

pub fn load_checkpoint(path: &Path) -> Result<(Network, CheckpointManifest)> {
    let manifest = read_checkpoint_manifest(path)?;
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let params = read_f32_blob(&dir.join(&manifest.params_file))?;
    if params.len() != manifest.parameter_count {
        return Err(Error::Dimension {
            what: "checkpoint parameters",
            expected: manifest.parameter_count,
            got: params.len(),
        });
    }
    let net = Network::from_params(manifest.architecture, params)?;
    Ok((net, manifest))
}
