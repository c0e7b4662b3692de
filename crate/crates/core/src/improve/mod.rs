//! Self-improvement: curriculum games, self-play, expert labeling, value
//! rollouts, training, and the on-disk artifacts they leave behind.

mod curriculum;
mod dataset;
mod meta;
mod play;

pub use curriculum::{make_game, make_posg, CurriculumSpec, GameInstance};
pub use dataset::{
    quantize, read_dataset, read_dataset_manifest, write_dataset, DatasetManifest, RECORD_LAYOUT,
};
pub use meta::{
    build_policy_dataset, build_value_dataset, load_networks, meta_learn, self_play_states,
    IterationArtifacts, Lineage, NetPaths, PoolState,
};
pub use play::{decide, play_game, subsample, Controller, GameRecord, TrajectoryStep};
