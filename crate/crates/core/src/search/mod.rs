//! Continuous-action tree search and the planners built on it.

mod rta;
mod tree;

pub use rta::{expert_policy, learner_policy, policy_sample, PlannerConfig, RtaGame};
pub use tree::{
    acting_team, default_policy, depth_exponent, search, ChildStat, RootStats, Search, SearchConfig, SearchGame,
    SearchResult, TreeNode,
};
