use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DynamicsModel {
    DoubleIntegrator2D,
    Dubins3D,
}

impl DynamicsModel {
    pub fn state_dim(self) -> usize {
        match self {
            DynamicsModel::DoubleIntegrator2D => 4,
            DynamicsModel::Dubins3D => 7,
        }
    }

    pub fn action_dim(self) -> usize {
        match self {
            DynamicsModel::DoubleIntegrator2D => 2,
            DynamicsModel::Dubins3D => 3,
        }
    }

    pub fn position_dim(self) -> usize {
        match self {
            DynamicsModel::DoubleIntegrator2D => 2,
            DynamicsModel::Dubins3D => 3,
        }
    }
}

/// A disc (2D) or sphere (3D) robots may not enter. A non-empty `velocity`
/// makes it a scripted moving obstacle whose center at step `t` is
/// `center + velocity * t * timestep`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Obstacle {
    pub center: Vec<f64>,
    pub radius: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub velocity: Vec<f64>,
}

impl Obstacle {
    pub fn center_at(&self, step_index: usize, timestep: f64) -> Vec<f64> {
        if self.velocity.is_empty() {
            return self.center.clone();
        }
        let t = step_index as f64 * timestep;
        self.center
            .iter()
            .zip(&self.velocity)
            .map(|(c, v)| c + v * t)
            .collect()
    }

    pub fn contains(&self, position: &[f64], step_index: usize, timestep: f64) -> bool {
        let center = self.center_at(step_index, timestep);
        let d2: f64 = position
            .iter()
            .zip(&center)
            .map(|(p, c)| (p - c) * (p - c))
            .sum();
        d2 <= self.radius * self.radius
    }
}

/// Physical and game parameters of one Reach-Target-Avoid instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GameSpec {
    pub team_a_count: usize,
    pub team_b_count: usize,
    /// Half-width of the square/cubic arena (m).
    pub pos_bound: f64,
    pub vel_bound: f64,
    pub acc_bound: f64,
    pub tag_radius: f64,
    pub collision_radius: f64,
    pub sense_radius: f64,
    pub goal_radius: f64,
    pub goal_position: Vec<f64>,
    pub timestep: f64,
    pub horizon: usize,
    pub dynamics_model: DynamicsModel,
    pub obstacles: Vec<Obstacle>,
    pub dubins_gravity: f64,
    /// Bound on |γ̇| and |φ̇| (rad/s).
    pub dubins_rate_bound: f64,
    /// Bound on |φ| (rad).
    pub dubins_bank_bound: f64,
    pub dubins_speed_range: [f64; 2],
}

impl Default for GameSpec {
    fn default() -> Self {
        Self {
            team_a_count: 1,
            team_b_count: 1,
            pos_bound: 1.0,
            vel_bound: 1.0,
            acc_bound: 2.0,
            tag_radius: 0.2,
            collision_radius: 0.1,
            sense_radius: 2.0,
            goal_radius: 0.2,
            goal_position: vec![0.5, 0.0],
            timestep: 0.1,
            horizon: 300,
            dynamics_model: DynamicsModel::DoubleIntegrator2D,
            obstacles: Vec::new(),
            dubins_gravity: 0.98,
            dubins_rate_bound: 36f64.to_radians(),
            dubins_bank_bound: 60f64.to_radians(),
            dubins_speed_range: [0.5, 2.0],
        }
    }
}

impl GameSpec {
    /// The Dubins preset used for the 2v2 airplane game (5 m arena).
    pub fn dubins_default() -> Self {
        Self {
            team_a_count: 2,
            team_b_count: 2,
            pos_bound: 5.0,
            vel_bound: 2.0,
            goal_position: vec![2.5, 0.0, 0.0],
            dynamics_model: DynamicsModel::Dubins3D,
            ..Self::default()
        }
    }

    pub fn num_robots(&self) -> usize {
        self.team_a_count + self.team_b_count
    }

    pub fn state_dim(&self) -> usize {
        self.dynamics_model.state_dim()
    }

    pub fn action_dim(&self) -> usize {
        self.dynamics_model.action_dim()
    }

    pub fn position_dim(&self) -> usize {
        self.dynamics_model.position_dim()
    }

    /// Goal embedded in state space: `[p_g; 0; ...; 0]`.
    pub fn goal_state(&self) -> Vec<f64> {
        let mut g = vec![0.0; self.state_dim()];
        g[..self.position_dim()].copy_from_slice(&self.goal_position);
        g
    }

    /// Check all invariants, reporting the first offending field.
    pub fn validate(&self) -> Result<()> {
        self.validate_at("game")
    }

    pub(crate) fn validate_at(&self, prefix: &str) -> Result<()> {
        let field = |name: &str| format!("{prefix}.{name}");
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::config(field(name), format!("must be > 0, got {v}")))
            }
        };
        positive("pos_bound", self.pos_bound)?;
        positive("vel_bound", self.vel_bound)?;
        positive("acc_bound", self.acc_bound)?;
        positive("tag_radius", self.tag_radius)?;
        positive("collision_radius", self.collision_radius)?;
        positive("goal_radius", self.goal_radius)?;
        positive("timestep", self.timestep)?;
        if !(self.sense_radius >= 0.0) {
            return Err(Error::config(field("sense_radius"), "must be >= 0"));
        }
        if self.collision_radius >= self.tag_radius {
            return Err(Error::config(
                field("collision_radius"),
                format!(
                    "must be smaller than tag_radius ({} >= {})",
                    self.collision_radius, self.tag_radius
                ),
            ));
        }
        if self.horizon < 1 {
            return Err(Error::config(field("horizon"), "must be >= 1"));
        }
        if self.goal_position.len() != self.position_dim() {
            return Err(Error::config(
                field("goal_position"),
                format!(
                    "expected {} components, got {}",
                    self.position_dim(),
                    self.goal_position.len()
                ),
            ));
        }
        for (k, ob) in self.obstacles.iter().enumerate() {
            if ob.center.len() != self.position_dim() {
                return Err(Error::config(
                    field(&format!("obstacles[{k}].center")),
                    "dimension does not match dynamics model",
                ));
            }
            if !ob.velocity.is_empty() && ob.velocity.len() != self.position_dim() {
                return Err(Error::config(
                    field(&format!("obstacles[{k}].velocity")),
                    "dimension does not match dynamics model",
                ));
            }
            if !(ob.radius > 0.0) {
                return Err(Error::config(
                    field(&format!("obstacles[{k}].radius")),
                    "must be > 0",
                ));
            }
        }
        if self.dynamics_model == DynamicsModel::Dubins3D {
            let [lo, hi] = self.dubins_speed_range;
            if !(lo > 0.0 && hi >= lo) {
                return Err(Error::config(
                    field("dubins_speed_range"),
                    "requires 0 < v_min <= v_max",
                ));
            }
            positive("dubins_gravity", self.dubins_gravity)?;
            positive("dubins_rate_bound", self.dubins_rate_bound)?;
            positive("dubins_bank_bound", self.dubins_bank_bound)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_parameters_are_defaults() {
        let s = GameSpec::default();
        assert_eq!(s.tag_radius, 0.2);
        assert_eq!(s.collision_radius, 0.1);
        assert_eq!(s.sense_radius, 2.0);
        assert_eq!(s.vel_bound, 1.0);
        assert_eq!(s.acc_bound, 2.0);
        assert_eq!(s.timestep, 0.1);
        s.validate().unwrap();
        GameSpec::dubins_default().validate().unwrap();
    }

    #[test]
    fn rejects_collision_radius_above_tag_radius() {
        let s = GameSpec {
            collision_radius: 0.3,
            ..GameSpec::default()
        };
        let err = s.validate().unwrap_err().to_string();
        assert!(err.contains("game.collision_radius"), "{err}");
    }

    #[test]
    fn rejects_nonpositive_tag_radius() {
        let s = GameSpec {
            tag_radius: 0.0,
            ..GameSpec::default()
        };
        let err = s.validate().unwrap_err().to_string();
        assert!(err.contains("game.tag_radius"), "{err}");
    }

    #[test]
    fn json_field_names_are_snake_case() {
        let json = serde_json::to_value(GameSpec::default()).unwrap();
        for key in ["pos_bound", "tag_radius", "goal_position", "dynamics_model"] {
            assert!(json.get(key).is_some(), "{key}");
        }
        let back: GameSpec = serde_json::from_value(json).unwrap();
        assert_eq!(back, GameSpec::default());
    }

    #[test]
    fn moving_obstacle_center_advances() {
        let ob = Obstacle {
            center: vec![0.0, 0.0],
            radius: 0.1,
            velocity: vec![1.0, 0.0],
        };
        assert_eq!(ob.center_at(10, 0.1), vec![1.0, 0.0]);
        assert!(ob.contains(&[1.05, 0.0], 10, 0.1));
        assert!(!ob.contains(&[1.05, 0.0], 0, 0.1));
    }
}
