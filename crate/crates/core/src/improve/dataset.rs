//! Dataset files: a JSON manifest plus a flat little-endian `f32` blob.
//!
//! Each record is laid out as
//! `features | count_a | count_b | set_a (row-major) | set_b | target`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::Team;
use crate::neural::{read_f32_blob, write_f32_blob, NetInput, NetKind, TrainingSample};

pub const RECORD_LAYOUT: &str = "features[self_dim] | count_a | count_b | set_a[count_a*element_dim] | set_b[count_b*element_dim] | target[target_dim]";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub kind: NetKind,
    pub team: Option<Team>,
    pub iteration: usize,
    pub seed: u64,
    pub config_hash: String,
    pub sample_count: usize,
    pub self_dim: usize,
    pub element_dim: usize,
    pub target_dim: usize,
    pub record_layout: String,
    pub data_file: String,
    /// Seed of the game each sample came from, in record order.
    pub source_seeds: Vec<u64>,
}

/// Round every stored number through `f32`, so in-memory training data is
/// exactly what a dataset file reloads to.
pub fn quantize(samples: &mut [TrainingSample]) {
    let q = |v: &mut f64| *v = *v as f32 as f64;
    for s in samples {
        s.input.features.iter_mut().for_each(q);
        s.input.set_a.iter_mut().flatten().for_each(q);
        s.input.set_b.iter_mut().flatten().for_each(q);
        s.target.iter_mut().for_each(q);
    }
}

fn flatten(s: &TrainingSample) -> impl Iterator<Item = f64> + '_ {
    s.input
        .features
        .iter()
        .copied()
        .chain([s.input.set_a.len() as f64, s.input.set_b.len() as f64])
        .chain(s.input.set_a.iter().flatten().copied())
        .chain(s.input.set_b.iter().flatten().copied())
        .chain(s.target.iter().copied())
}

/// Write `<dir>/<name>.json` and `<dir>/<name>.bin`; returns the manifest path.
///
/// `manifest` supplies the provenance fields; counts, dimensions and seeds
/// are filled from `samples`.
pub fn write_dataset(
    dir: &Path,
    name: &str,
    samples: &[TrainingSample],
    mut manifest: DatasetManifest,
) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    for s in samples {
        if s.input.features.len() != manifest.self_dim || s.target.len() != manifest.target_dim {
            return Err(Error::Dimension {
                what: "dataset record",
                expected: manifest.self_dim + manifest.target_dim,
                got: s.input.features.len() + s.target.len(),
            });
        }
    }
    let bin = format!("{name}.bin");
    write_f32_blob(&dir.join(&bin), samples.iter().flat_map(flatten))?;
    manifest.sample_count = samples.len();
    manifest.record_layout = RECORD_LAYOUT.to_string();
    manifest.data_file = bin;
    manifest.source_seeds = samples.iter().map(|s| s.source_seed).collect();
    let path = dir.join(format!("{name}.json"));
    fs::write(&path, serde_json::to_string_pretty(&manifest)?)?;
    Ok(path)
}

pub fn read_dataset_manifest(path: &Path) -> Result<DatasetManifest> {
    Ok(serde_json::from_slice(&fs::read(path)?)?)
}

pub fn read_dataset(path: &Path) -> Result<(Vec<TrainingSample>, DatasetManifest)> {
    let m = read_dataset_manifest(path)?;
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let flat = read_f32_blob(&dir.join(&m.data_file))?;
    let truncated = || Error::contract(format!("{} ends mid-record", m.data_file));
    let mut at = 0;
    let mut take = |n: usize| -> Result<&[f64]> {
        let s = flat.get(at..at + n).ok_or_else(truncated)?;
        at += n;
        Ok(s)
    };
    let mut samples = Vec::with_capacity(m.sample_count);
    for l in 0..m.sample_count {
        let features = take(m.self_dim)?.to_vec();
        let counts = take(2)?;
        let (na, nb) = (counts[0] as usize, counts[1] as usize);
        let set_a = take(na * m.element_dim)?.chunks(m.element_dim.max(1)).map(<[f64]>::to_vec).collect();
        let set_b = take(nb * m.element_dim)?.chunks(m.element_dim.max(1)).map(<[f64]>::to_vec).collect();
        let target = take(m.target_dim)?.to_vec();
        samples.push(TrainingSample {
            input: NetInput {
                features,
                set_a,
                set_b,
            },
            target,
            source_seed: m.source_seeds.get(l).copied().unwrap_or_default(),
        });
    }
    if at != flat.len() {
        return Err(Error::contract(format!("{} has trailing data", m.data_file)));
    }
    Ok((samples, m))
}
