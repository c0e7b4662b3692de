//! Search over the Reach-Target-Avoid game, plus the expert and learner
//! planners built on it.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::tree::{search, SearchConfig, SearchGame, SearchResult};
use crate::error::Result;
use crate::game::{
    advance_state, advance_state_with, is_terminal, normalized_value, observe, project_action,
    reconstruct_state, sample_uniform_action, value_observation, Bookkeeping, GameSpec,
    JointAction, JointState, Observation, Team,
};
use crate::neural::{NetInput, NetworkSet};
use crate::rng::Rng;

/// Binds a game spec and optional networks into a [`SearchGame`].
pub struct RtaGame<'a> {
    pub spec: &'a GameSpec,
    pub nets: &'a NetworkSet,
}

impl<'a> RtaGame<'a> {
    pub fn new(spec: &'a GameSpec, nets: &'a NetworkSet) -> Self {
        RtaGame { spec, nets }
    }
}

fn resize_joint(out: &mut JointAction, n: usize, dim: usize) {
    out.resize_with(n, Vec::new);
    for a in out.iter_mut() {
        a.clear();
        a.resize(dim, 0.0);
    }
}

/// Sample a projected action for robot `i` from its team's policy network.
pub fn policy_sample(
    i: usize,
    s: &JointState,
    spec: &GameSpec,
    nets: &NetworkSet,
    rng: &mut Rng,
) -> Result<Option<Vec<f64>>> {
    let Some(net) = nets.policy(s.robots[i].team) else {
        return Ok(None);
    };
    let z = observe(i, s, spec)?;
    let out = net.forward(&NetInput::from(&z))?;
    let eps: Vec<f64> = (0..out.mean.len()).map(|_| StandardNormal.sample(rng)).collect();
    let mut a = out.sample(&eps);
    project_action(&mut a, spec);
    Ok(Some(a))
}

impl SearchGame for RtaGame<'_> {
    type State = JointState;

    fn is_terminal(&self, s: &JointState) -> bool {
        is_terminal(s, self.spec)
    }

    fn value(&self, s: &JointState) -> f64 {
        normalized_value(s, self.spec)
    }

    fn step(&self, s: &JointState, a: &JointAction) -> JointState {
        let mut next = s.clone();
        advance_state(&mut next, a, self.spec);
        next
    }

    fn advance(&self, s: &mut JointState, a: &JointAction) {
        advance_state_with(s, a, self.spec, |_, _| {});
    }

    fn sample_uniform(&self, s: &JointState, rng: &mut Rng, out: &mut JointAction) {
        resize_joint(out, s.robots.len(), self.spec.action_dim());
        for (r, a) in s.robots.iter().zip(out.iter_mut()) {
            if r.active {
                sample_uniform_action(self.spec, rng, a);
            }
        }
    }

    fn steps_remaining(&self, s: &JointState) -> usize {
        self.spec.horizon.saturating_sub(s.step_index)
    }

    fn policy_action(&self, s: &JointState, rng: &mut Rng) -> Option<Result<JointAction>> {
        if self.nets.policy_a.is_none() && self.nets.policy_b.is_none() {
            return None;
        }
        let mut out = Vec::new();
        resize_joint(&mut out, s.robots.len(), self.spec.action_dim());
        for i in 0..s.robots.len() {
            if !s.robots[i].active {
                continue;
            }
            match policy_sample(i, s, self.spec, self.nets, rng) {
                Ok(Some(a)) => out[i] = a,
                Ok(None) => sample_uniform_action(self.spec, rng, &mut out[i]),
                Err(e) => return Some(Err(e)),
            }
        }
        Some(Ok(out))
    }

    fn value_sample(&self, s: &JointState, rng: &mut Rng) -> Option<Result<f64>> {
        let net = self.nets.value.as_ref()?;
        let y = value_observation(s, self.spec);
        Some(net.forward(&NetInput::from(&y)).map(|out| {
            let eps: f64 = StandardNormal.sample(rng);
            out.mean[0] + out.std[0] * eps
        }))
    }
}

/// Centralized planner: search the full joint state from `team`'s
/// perspective.
pub fn expert_policy(
    s: &JointState,
    team: Team,
    nets: &NetworkSet,
    spec: &GameSpec,
    cfg: &SearchConfig,
) -> Result<SearchResult> {
    search(&RtaGame::new(spec, nets), s.clone(), team, cfg)
}

/// Decentralized planner for one robot: rebuild the visible sub-game from
/// the observation and search it with a small budget.
///
/// Returns the zero action when nothing can be planned (no sensing, or a
/// sub-game that is already decided).
pub fn learner_policy(
    z: &Observation,
    team: Team,
    book: Bookkeeping,
    nets: &NetworkSet,
    spec: &GameSpec,
    cfg: &SearchConfig,
) -> Result<Vec<f64>> {
    let zero = vec![0.0; spec.action_dim()];
    if spec.sense_radius <= 0.0 {
        return Ok(zero);
    }
    let rec = reconstruct_state(z, team, book, spec);
    if is_terminal(&rec.state, &rec.spec) {
        return Ok(zero);
    }
    let result = search(&RtaGame::new(&rec.spec, nets), rec.state, team, cfg)?;
    Ok(result.action[rec.observer].clone())
}

/// Shared search settings with separate budgets for the expert and learner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlannerConfig {
    pub expert_budget: usize,
    pub learner_budget: usize,
    pub c_p: f64,
    pub c_pw: f64,
    pub alpha_pw: f64,
    pub beta_pi: f64,
    pub beta_v: f64,
    pub rollout_cap: Option<usize>,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        let s = SearchConfig::default();
        Self {
            expert_budget: 10_000,
            learner_budget: 500,
            c_p: s.c_p,
            c_pw: s.c_pw,
            alpha_pw: s.alpha_pw,
            beta_pi: s.beta_pi,
            beta_v: s.beta_v,
            rollout_cap: s.rollout_cap,
        }
    }
}

impl PlannerConfig {
    fn with_budget(&self, budget: usize) -> SearchConfig {
        SearchConfig {
            budget,
            c_p: self.c_p,
            c_pw: self.c_pw,
            alpha_pw: self.alpha_pw,
            beta_pi: self.beta_pi,
            beta_v: self.beta_v,
            rollout_cap: self.rollout_cap,
            seed: 0,
        }
    }

    pub fn expert(&self) -> SearchConfig {
        self.with_budget(self.expert_budget)
    }

    pub fn learner(&self) -> SearchConfig {
        self.with_budget(self.learner_budget)
    }

    pub fn validate_at(&self, prefix: &str) -> Result<()> {
        for (name, b) in [("expert_budget", self.expert_budget), ("learner_budget", self.learner_budget)] {
            if b == 0 {
                return Err(crate::Error::config(format!("{prefix}.{name}"), "must be >= 1"));
            }
        }
        self.expert().validate_at(prefix)
    }
}
