use serde::{Deserialize, Serialize};

use super::spec::GameSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Team {
    A,
    B,
}

impl Team {
    pub fn other(self) -> Team {
        match self {
            Team::A => Team::B,
            Team::B => Team::A,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobotState {
    pub vector: Vec<f64>,
    pub active: bool,
    pub team: Team,
}

impl RobotState {
    pub fn new(vector: Vec<f64>, team: Team) -> Self {
        Self {
            vector,
            active: true,
            team,
        }
    }

    pub fn position(&self, spec: &GameSpec) -> &[f64] {
        &self.vector[..spec.position_dim()]
    }
}

/// Joint state of every robot; team A occupies the leading indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointState {
    pub robots: Vec<RobotState>,
    pub step_index: usize,
    pub reached_count: usize,
}

impl JointState {
    /// Build an initial state from per-team state vectors.
    pub fn from_teams(team_a: Vec<Vec<f64>>, team_b: Vec<Vec<f64>>) -> Self {
        let robots = team_a
            .into_iter()
            .map(|v| RobotState::new(v, Team::A))
            .chain(team_b.into_iter().map(|v| RobotState::new(v, Team::B)))
            .collect();
        Self {
            robots,
            step_index: 0,
            reached_count: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.robots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.robots.is_empty()
    }

    pub fn team_indices(&self, team: Team) -> impl Iterator<Item = usize> + '_ {
        self.robots
            .iter()
            .enumerate()
            .filter(move |(_, r)| r.team == team)
            .map(|(i, _)| i)
    }

    pub fn any_active(&self, team: Team) -> bool {
        self.robots.iter().any(|r| r.team == team && r.active)
    }
}

/// Sub-action per robot, in robot index order.
pub type JointAction = Vec<Vec<f64>>;

/// Why a robot left play during a step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Deactivation {
    Reached,
    Tagged,
    Violated,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepEvents {
    pub tagged: Vec<usize>,
    pub reached: Vec<usize>,
    pub violated: Vec<usize>,
    pub terminal: bool,
}

impl StepEvents {
    pub(crate) fn record(&mut self, robot: usize, cause: Deactivation) {
        match cause {
            Deactivation::Reached => self.reached.push(robot),
            Deactivation::Tagged => self.tagged.push(robot),
            Deactivation::Violated => self.violated.push(robot),
        }
    }
}
