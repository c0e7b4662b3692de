//! Playing whole games with a controller per team.

use std::sync::Arc;
use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::curriculum::GameInstance;
use crate::error::Result;
use crate::game::{
    advance_state, is_terminal, observe, sample_uniform_action, Bookkeeping, GameSpec,
    JointAction, JointState, StepEvents, Team,
};
use crate::neural::NetworkSet;
use crate::rng::{substream, subseed};
use crate::search::{expert_policy, learner_policy, policy_sample, SearchConfig};

/// How one team picks its actions.
#[derive(Debug, Clone)]
pub enum Controller {
    /// Uniform samples from each robot's admissible action set.
    Random,
    /// Direct policy-network samples; uniform for a team without a network.
    Policy(Arc<NetworkSet>),
    /// Decentralized per-robot search over the observed sub-game.
    Learner {
        nets: Arc<NetworkSet>,
        search: SearchConfig,
    },
    /// Centralized search over the full joint state.
    Expert {
        nets: Arc<NetworkSet>,
        search: SearchConfig,
    },
}

impl Controller {
    /// Learner or expert whose gates fall back to the unbiased branch when
    /// `nets` is empty.
    pub fn planner(expert: bool, nets: Arc<NetworkSet>, mut search: SearchConfig) -> Self {
        if nets.policy_a.is_none() && nets.policy_b.is_none() {
            search.beta_pi = 0.0;
        }
        if nets.value.is_none() {
            search.beta_v = 0.0;
        }
        if expert {
            Controller::Expert { nets, search }
        } else {
            Controller::Learner { nets, search }
        }
    }
}

/// Write `team`'s actions into `joint`; returns per-decision wall-clock
/// times in milliseconds (one per robot for decentralized controllers, one
/// per team for the expert).
pub fn decide(
    ctrl: &Controller,
    team: Team,
    s: &JointState,
    spec: &GameSpec,
    seed: u64,
    joint: &mut JointAction,
) -> Result<Vec<f64>> {
    let t = s.step_index as u64;
    let tid = team as u64;
    let members: Vec<usize> = s
        .team_indices(team)
        .filter(|&i| s.robots[i].active)
        .collect();
    let mut latency = Vec::new();
    match ctrl {
        Controller::Random => {
            let mut rng = substream(seed, "act", &[t, tid]);
            for &i in &members {
                sample_uniform_action(spec, &mut rng, &mut joint[i]);
            }
        }
        Controller::Policy(nets) => {
            let mut rng = substream(seed, "act", &[t, tid]);
            for &i in &members {
                match policy_sample(i, s, spec, nets, &mut rng)? {
                    Some(a) => joint[i] = a,
                    None => sample_uniform_action(spec, &mut rng, &mut joint[i]),
                }
            }
        }
        Controller::Learner { nets, search } => {
            let book = Bookkeeping {
                step_index: s.step_index,
                reached_count: s.reached_count,
            };
            for &i in &members {
                let start = Instant::now();
                let z = observe(i, s, spec)?;
                let cfg = search.clone().with_seed(subseed(seed, "learner", &[t, i as u64]));
                joint[i] = learner_policy(&z, team, book, nets, spec, &cfg)?;
                latency.push(start.elapsed().as_secs_f64() * 1e3);
            }
        }
        Controller::Expert { nets, search } => {
            if !members.is_empty() {
                let start = Instant::now();
                let cfg = search.clone().with_seed(subseed(seed, "expert", &[t, tid]));
                let out = expert_policy(s, team, nets, spec, &cfg)?;
                for &i in &members {
                    joint[i] = out.action[i].clone();
                }
                latency.push(start.elapsed().as_secs_f64() * 1e3);
            }
        }
    }
    Ok(latency)
}

/// One timestep of a played game.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryStep {
    pub t: usize,
    /// State before the action is applied.
    pub state: JointState,
    pub action: JointAction,
    pub events: StepEvents,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GameRecord {
    pub trajectory: Vec<TrajectoryStep>,
    pub final_state: JointState,
    pub reached: usize,
    pub steps: usize,
    /// Decision latencies (ms) for team A and team B.
    pub latency_ms: [Vec<f64>; 2],
}

/// Play `game` to termination with one controller per team.
pub fn play_game(
    game: &GameInstance,
    attacker: &Controller,
    defender: &Controller,
    seed: u64,
) -> Result<GameRecord> {
    let spec = &game.spec;
    let mut s = game.initial.clone();
    let mut trajectory = Vec::new();
    let mut latency_ms = [Vec::new(), Vec::new()];
    let zero = vec![0.0; spec.action_dim()];
    while !is_terminal(&s, spec) {
        let mut joint: JointAction = vec![zero.clone(); s.robots.len()];
        latency_ms[0].extend(decide(attacker, Team::A, &s, spec, subseed(seed, "team", &[0]), &mut joint)?);
        latency_ms[1].extend(decide(defender, Team::B, &s, spec, subseed(seed, "team", &[1]), &mut joint)?);
        let before = s.clone();
        let events = advance_state(&mut s, &joint, spec);
        trajectory.push(TrajectoryStep {
            t: before.step_index,
            state: before,
            action: joint,
            events,
        });
    }
    Ok(GameRecord {
        trajectory,
        reached: s.reached_count,
        steps: s.step_index,
        final_state: s,
        latency_ms,
    })
}

/// Up to `k` distinct indices in `0..n`, sorted, drawn uniformly.
pub fn subsample(n: usize, k: usize, rng: &mut impl Rng) -> Vec<usize> {
    if k >= n {
        return (0..n).collect();
    }
    let mut idx = rand::seq::index::sample(rng, n, k).into_vec();
    idx.sort_unstable();
    idx
}
