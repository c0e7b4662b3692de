//! Permutation-invariant policy and value networks with Gaussian heads.

mod checkpoint;
mod network;
mod train;

pub use checkpoint::{
    load_checkpoint, read_checkpoint_manifest, read_f32_blob, save_checkpoint, write_f32_blob,
    CheckpointManifest,
};
pub use network::{
    gradient, mean_loss, nll_loss, sample, Architecture, GaussianOutput, NetInput, NetKind,
    Network, TrainingSample, SIGMA_FLOOR,
};
pub use train::{loss_trace_csv, train, TrainConfig, TrainOutcome};

/// Networks available to a planner. Missing entries force the unbiased
/// branch of the corresponding gate.
#[derive(Debug, Clone, Default)]
pub struct NetworkSet {
    pub policy_a: Option<Network>,
    pub policy_b: Option<Network>,
    pub value: Option<Network>,
}

impl NetworkSet {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn policy(&self, team: crate::game::Team) -> Option<&Network> {
        match team {
            crate::game::Team::A => self.policy_a.as_ref(),
            crate::game::Team::B => self.policy_b.as_ref(),
        }
    }
}
