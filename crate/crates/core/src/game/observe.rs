//! Local observations, naive state reconstruction, and the value-network
//! state representation.

use serde::{Deserialize, Serialize};

use super::spec::GameSpec;
use super::state::{JointState, RobotState, Team};
use crate::error::{Error, Result};

/// Robot-local measurement: relative goal plus relative states of sensed
/// neighbors, split by team.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    /// `g - s^i`
    pub goal_relative: Vec<f64>,
    pub neighbors_a: Vec<Vec<f64>>,
    pub neighbors_b: Vec<Vec<f64>>,
}

/// Value-network input: active robot states relative to the goal, and the
/// number of attackers that already reached it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueObservation {
    pub set_a: Vec<Vec<f64>>,
    pub set_b: Vec<Vec<f64>>,
    pub reached: usize,
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn observe(i: usize, s: &JointState, spec: &GameSpec) -> Result<Observation> {
    let me = s
        .robots
        .get(i)
        .ok_or_else(|| Error::contract(format!("robot index {i} out of range")))?;
    if !me.active {
        return Err(Error::contract(format!("robot {i} is inactive and cannot observe")));
    }
    let pd = spec.position_dim();
    let r2 = spec.sense_radius * spec.sense_radius;
    let mut obs = Observation {
        goal_relative: sub(&spec.goal_state(), &me.vector),
        neighbors_a: Vec::new(),
        neighbors_b: Vec::new(),
    };
    for (j, other) in s.robots.iter().enumerate() {
        if j == i || !other.active {
            continue;
        }
        let d2: f64 = other.vector[..pd]
            .iter()
            .zip(&me.vector[..pd])
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        if d2 > r2 {
            continue;
        }
        let rel = sub(&other.vector, &me.vector);
        match other.team {
            Team::A => obs.neighbors_a.push(rel),
            Team::B => obs.neighbors_b.push(rel),
        }
    }
    Ok(obs)
}

/// What a robot knows about the game beyond its observation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Bookkeeping {
    pub step_index: usize,
    pub reached_count: usize,
}

/// A reconstructed sub-game as seen by one robot.
#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub state: JointState,
    /// Copy of the game spec with team sizes matching `state`.
    pub spec: GameSpec,
    /// Index of the observer inside `state`.
    pub observer: usize,
}

/// Rebuild a joint state from an observation and a known goal.
///
/// The observer is first within its own team. Attackers already counted in
/// `reached_count` are carried as inactive placeholder robots parked at the
/// goal so the sub-game's value normalization stays in [0, 1].
pub fn reconstruct_state(
    obs: &Observation,
    observer_team: Team,
    book: Bookkeeping,
    spec: &GameSpec,
) -> Reconstruction {
    let g = spec.goal_state();
    let own = sub(&g, &obs.goal_relative);
    let absolute = |rel: &Vec<f64>| -> Vec<f64> { own.iter().zip(rel).map(|(a, b)| a + b).collect() };

    let mut robots = Vec::with_capacity(1 + obs.neighbors_a.len() + obs.neighbors_b.len() + book.reached_count);
    if observer_team == Team::A {
        robots.push(RobotState::new(own.clone(), Team::A));
    }
    robots.extend(obs.neighbors_a.iter().map(|r| RobotState::new(absolute(r), Team::A)));
    for _ in 0..book.reached_count {
        robots.push(RobotState {
            vector: g.clone(),
            active: false,
            team: Team::A,
        });
    }
    let team_a_count = robots.len();
    let observer = if observer_team == Team::A { 0 } else { team_a_count };
    if observer_team == Team::B {
        robots.push(RobotState::new(own.clone(), Team::B));
    }
    robots.extend(obs.neighbors_b.iter().map(|r| RobotState::new(absolute(r), Team::B)));
    let team_b_count = robots.len() - team_a_count;

    let sub_spec = GameSpec {
        team_a_count,
        team_b_count,
        ..spec.clone()
    };
    Reconstruction {
        state: JointState {
            robots,
            step_index: book.step_index,
            reached_count: book.reached_count,
        },
        spec: sub_spec,
        observer,
    }
}

pub fn value_observation(s: &JointState, spec: &GameSpec) -> ValueObservation {
    let g = spec.goal_state();
    let mut y = ValueObservation {
        set_a: Vec::new(),
        set_b: Vec::new(),
        reached: s.reached_count,
    };
    for r in s.robots.iter().filter(|r| r.active) {
        let rel = sub(&r.vector, &g);
        match r.team {
            Team::A => y.set_a.push(rel),
            Team::B => y.set_b.push(rel),
        }
    }
    y
}
