//! Admissibility, inactivation and termination for the Reach-Target-Avoid game.

use super::dynamics::advance;
use super::spec::GameSpec;
use super::state::{Deactivation, JointAction, JointState, StepEvents, Team};
use crate::error::{Error, Result};

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Post-step adjudication of robot `i` against the joint state `s`.
///
/// Returns `None` when the robot remains admissible. Precedence is
/// reached > tagged > violated.
pub fn check_admissible(i: usize, s: &JointState, spec: &GameSpec) -> Option<Deactivation> {
    let pd = spec.position_dim();
    let me = &s.robots[i];
    let p = &me.vector[..pd];

    if me.team == Team::A {
        if dist2(p, &spec.goal_position) <= spec.goal_radius * spec.goal_radius {
            return Some(Deactivation::Reached);
        }
        let rt2 = spec.tag_radius * spec.tag_radius;
        let tagged = s
            .robots
            .iter()
            .any(|o| o.active && o.team == Team::B && dist2(&o.vector[..pd], p) <= rt2);
        if tagged {
            return Some(Deactivation::Tagged);
        }
    }

    if p.iter().any(|x| x.abs() > spec.pos_bound) {
        return Some(Deactivation::Violated);
    }
    if speed2(&me.vector, spec) > spec.vel_bound * spec.vel_bound {
        return Some(Deactivation::Violated);
    }
    let rp2 = spec.collision_radius * spec.collision_radius;
    let collided = s
        .robots
        .iter()
        .enumerate()
        .any(|(j, o)| j != i && o.active && dist2(&o.vector[..pd], p) <= rp2);
    if collided {
        return Some(Deactivation::Violated);
    }
    if spec
        .obstacles
        .iter()
        .any(|ob| ob.contains(p, s.step_index, spec.timestep))
    {
        return Some(Deactivation::Violated);
    }
    None
}

fn speed2(v: &[f64], spec: &GameSpec) -> f64 {
    match spec.dynamics_model {
        super::DynamicsModel::DoubleIntegrator2D => v[2] * v[2] + v[3] * v[3],
        super::DynamicsModel::Dubins3D => v[6] * v[6],
    }
}

pub fn is_terminal(s: &JointState, spec: &GameSpec) -> bool {
    !s.any_active(Team::A) || s.step_index >= spec.horizon
}

/// Validate a joint action's shape against the state and spec.
pub fn check_joint_action(s: &JointState, a: &JointAction, spec: &GameSpec) -> Result<()> {
    if a.len() != s.robots.len() {
        return Err(Error::Dimension {
            what: "joint action",
            expected: s.robots.len(),
            got: a.len(),
        });
    }
    for (r, ai) in s.robots.iter().zip(a) {
        if r.active && ai.len() != spec.action_dim() {
            return Err(Error::Dimension {
                what: "robot action",
                expected: spec.action_dim(),
                got: ai.len(),
            });
        }
        if r.vector.len() != spec.state_dim() {
            return Err(Error::Dimension {
                what: "robot state",
                expected: spec.state_dim(),
                got: r.vector.len(),
            });
        }
    }
    Ok(())
}

/// Advance the game one step, returning the successor and what happened.
pub fn game_step(
    s: &JointState,
    a: &JointAction,
    spec: &GameSpec,
) -> Result<(JointState, StepEvents)> {
    check_joint_action(s, a, spec)?;
    let mut next = s.clone();
    let events = advance_state(&mut next, a, spec);
    Ok((next, events))
}

/// In-place [`game_step`] without shape validation.
pub fn advance_state(s: &mut JointState, a: &JointAction, spec: &GameSpec) -> StepEvents {
    let mut events = StepEvents::default();
    advance_state_with(s, a, spec, |i, cause| events.record(i, cause));
    events.terminal = is_terminal(s, spec);
    events
}

/// Hot-path variant used by rollouts; reports deactivations to `on_event`.
pub(crate) fn advance_state_with(
    s: &mut JointState,
    a: &JointAction,
    spec: &GameSpec,
    mut on_event: impl FnMut(usize, Deactivation),
) {
    for (r, ai) in s.robots.iter_mut().zip(a) {
        if r.active {
            advance(&mut r.vector, ai, spec);
        }
    }
    s.step_index += 1;

    // Judge everyone on the same post-step state, then apply.
    let mut pending: [(usize, Deactivation); 16] = [(0, Deactivation::Reached); 16];
    let mut overflow = Vec::new();
    let mut n = 0;
    for i in 0..s.robots.len() {
        if !s.robots[i].active {
            continue;
        }
        if let Some(cause) = check_admissible(i, s, spec) {
            if n < pending.len() {
                pending[n] = (i, cause);
                n += 1;
            } else {
                overflow.push((i, cause));
            }
        }
    }
    for &(i, cause) in pending[..n].iter().chain(&overflow) {
        s.robots[i].active = false;
        if cause == Deactivation::Reached {
            s.reached_count += 1;
        }
        on_event(i, cause);
    }
}

/// Number of team-A robots that reached the goal; defined on terminal states.
pub fn terminal_value(s: &JointState, spec: &GameSpec) -> Result<usize> {
    if !is_terminal(s, spec) {
        return Err(Error::contract("terminal_value called on a non-terminal state"));
    }
    Ok(s.reached_count)
}

/// `n_rg / |I_A|`, the team-A-normalized game value in [0, 1].
pub fn normalized_value(s: &JointState, spec: &GameSpec) -> f64 {
    if spec.team_a_count == 0 {
        return 0.0;
    }
    s.reached_count as f64 / spec.team_a_count as f64
}
