use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{check_admissible, DynamicsModel, GameSpec, JointState};
use crate::rng::substream;

const PLACEMENT_ATTEMPTS: usize = 1000;

/// Distribution over self-play games for each improvement iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CurriculumSpec {
    /// Inclusive range for each team's size.
    pub team_size_range: [usize; 2],
    /// Candidate position bounds (arena half-widths), in meters.
    pub arena_sizes: Vec<f64>,
    /// Games generated per batch of self-play.
    pub games_per_iteration: usize,
    /// Last iteration index; iterations `0..=iterations` are run.
    pub iterations: usize,
    /// Self-play states collected per iteration.
    pub dataset_size: usize,
    /// States subsampled from each self-play trajectory.
    pub samples_per_game: usize,
    /// Checkpoint manifests available as opponents (unused by pure self-play).
    pub opponent_pool: Vec<String>,
}

impl Default for CurriculumSpec {
    fn default() -> Self {
        Self {
            team_size_range: [1, 5],
            arena_sizes: vec![1.0, 2.0, 3.0],
            games_per_iteration: 1000,
            iterations: 5,
            dataset_size: 80_000,
            samples_per_game: 10,
            opponent_pool: Vec::new(),
        }
    }
}

impl CurriculumSpec {
    pub fn validate_at(&self, prefix: &str) -> Result<()> {
        let [lo, hi] = self.team_size_range;
        if lo == 0 || lo > hi {
            return Err(Error::config(
                format!("{prefix}.team_size_range"),
                "must be a nonempty range starting at >= 1",
            ));
        }
        if self.arena_sizes.is_empty() || self.arena_sizes.iter().any(|&a| !(a > 0.0)) {
            return Err(Error::config(
                format!("{prefix}.arena_sizes"),
                "must be a nonempty list of positive sizes",
            ));
        }
        for (name, v) in [
            ("games_per_iteration", self.games_per_iteration),
            ("dataset_size", self.dataset_size),
            ("samples_per_game", self.samples_per_game),
        ] {
            if v == 0 {
                return Err(Error::config(format!("{prefix}.{name}"), "must be > 0"));
            }
        }
        Ok(())
    }
}

/// A generated game: its parameters and admissible initial state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameInstance {
    pub spec: GameSpec,
    pub initial: JointState,
    /// Seed every sample drawn from this game is traced back to.
    pub seed: u64,
}

fn uniform(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    rng.random_range(lo..hi)
}

fn robot_vector(spec: &GameSpec, pos: [f64; 2], attacker: bool) -> Vec<f64> {
    match spec.dynamics_model {
        DynamicsModel::DoubleIntegrator2D => vec![pos[0], pos[1], 0.0, 0.0],
        DynamicsModel::Dubins3D => {
            let heading = if attacker {
                std::f64::consts::FRAC_PI_2
            } else {
                -std::f64::consts::FRAC_PI_2
            };
            let [vmin, vmax] = spec.dubins_speed_range;
            let v = (0.5 * (vmin + vmax)).min(spec.vel_bound);
            vec![pos[0], pos[1], 0.0, heading, 0.0, 0.0, v]
        }
    }
}

fn well_separated(s: &JointState, spec: &GameSpec) -> bool {
    let pd = spec.position_dim();
    let min2 = spec.tag_radius.max(spec.collision_radius).powi(2);
    for (i, a) in s.robots.iter().enumerate() {
        for b in &s.robots[i + 1..] {
            let d2: f64 = a.vector[..pd]
                .iter()
                .zip(&b.vector[..pd])
                .map(|(x, y)| (x - y) * (x - y))
                .sum();
            if d2 <= min2 {
                return false;
            }
        }
    }
    (0..s.robots.len()).all(|i| check_admissible(i, s, spec).is_none())
}

/// Game `j` of iteration `k`: team sizes, arena, goal and an admissible
/// initial state with the teams on opposite sides and the goal on the
/// defenders' side.
pub fn make_game(
    curriculum: &CurriculumSpec,
    template: &GameSpec,
    k: usize,
    seed: u64,
    j: usize,
) -> Result<GameInstance> {
    let mut rng = substream(seed, "posg", &[k as u64, j as u64]);
    let [lo, hi] = curriculum.team_size_range;
    let na = rng.random_range(lo..=hi);
    let nb = rng.random_range(lo..=hi);
    let bound = curriculum.arena_sizes[rng.random_range(0..curriculum.arena_sizes.len())];

    let mut spec = GameSpec {
        team_a_count: na,
        team_b_count: nb,
        pos_bound: bound,
        ..template.clone()
    };
    let gx = uniform(&mut rng, 0.4, 0.7) * bound;
    let gy = uniform(&mut rng, -0.4, 0.4) * bound;
    spec.goal_position = match spec.dynamics_model {
        DynamicsModel::DoubleIntegrator2D => vec![gx, gy],
        DynamicsModel::Dubins3D => vec![gx, gy, 0.0],
    };

    for _ in 0..PLACEMENT_ATTEMPTS {
        let mut place = |x: (f64, f64), y: f64, attacker: bool| {
            let px = uniform(&mut rng, x.0, x.1) * bound;
            let py = uniform(&mut rng, -y, y) * bound;
            robot_vector(&spec, [px, py], attacker)
        };
        let team_a: Vec<_> = (0..na).map(|_| place((-0.9, -0.5), 0.8, true)).collect();
        let team_b: Vec<_> = (0..nb).map(|_| place((0.1, 0.6), 0.6, false)).collect();
        let initial = JointState::from_teams(team_a, team_b);
        if well_separated(&initial, &spec) {
            let game_seed = crate::rng::subseed(seed, "game", &[k as u64, j as u64]);
            return Ok(GameInstance {
                spec,
                initial,
                seed: game_seed,
            });
        }
    }
    Err(Error::Infeasible(format!(
        "no admissible placement for {na}v{nb} in a {bound} m arena after {PLACEMENT_ATTEMPTS} attempts"
    )))
}

/// The self-play game list for iteration `k`.
pub fn make_posg(
    curriculum: &CurriculumSpec,
    template: &GameSpec,
    k: usize,
    seed: u64,
) -> Result<Vec<GameInstance>> {
    (0..curriculum.games_per_iteration)
        .map(|j| make_game(curriculum, template, k, seed, j))
        .collect()
}
