//! Deterministic Reach-Target-Avoid game: dynamics, admissibility,
//! observations, rewards and termination.

mod dynamics;
mod observe;
mod rules;
mod spec;
mod state;

pub use dynamics::{project_action, sample_uniform_action, step_double_integrator, step_dubins3d};
pub use observe::{
    observe, reconstruct_state, value_observation, Bookkeeping, Observation, Reconstruction,
    ValueObservation,
};
pub use rules::{
    advance_state, check_admissible, check_joint_action, game_step, is_terminal,
    normalized_value, terminal_value,
};
pub(crate) use rules::advance_state_with;
pub use spec::{DynamicsModel, GameSpec, Obstacle};
pub use state::{Deactivation, JointAction, JointState, RobotState, StepEvents, Team};
