//! Explicit-Euler robot dynamics and action-set handling.

use rand::Rng;

use super::spec::{DynamicsModel, GameSpec};
use crate::error::{Error, Result};

/// One double-integrator step: `p' = p + v dt`, `v' = v + a dt`.
pub fn step_double_integrator(state: &[f64], action: &[f64], dt: f64) -> Result<Vec<f64>> {
    check_dims(state, 4, action, 2)?;
    let mut next = state.to_vec();
    advance_double_integrator(&mut next, action, dt);
    Ok(next)
}

/// One 3D Dubins step; state `[x, y, z, ψ, γ, φ, v]`, action `[γ̇, φ̇, v̇]`.
/// Speed and bank angle are projected into their admissible ranges after
/// integration.
pub fn step_dubins3d(state: &[f64], action: &[f64], dt: f64, spec: &GameSpec) -> Result<Vec<f64>> {
    check_dims(state, 7, action, 3)?;
    if !(state[6] > 0.0) {
        return Err(Error::contract(format!(
            "dubins speed must be positive, got {}",
            state[6]
        )));
    }
    let mut next = state.to_vec();
    advance_dubins3d(&mut next, action, dt, spec);
    Ok(next)
}

fn check_dims(state: &[f64], sd: usize, action: &[f64], ad: usize) -> Result<()> {
    if state.len() != sd {
        return Err(Error::Dimension {
            what: "robot state",
            expected: sd,
            got: state.len(),
        });
    }
    if action.len() != ad {
        return Err(Error::Dimension {
            what: "robot action",
            expected: ad,
            got: action.len(),
        });
    }
    Ok(())
}

#[inline]
pub(crate) fn advance_double_integrator(s: &mut [f64], a: &[f64], dt: f64) {
    s[0] += s[2] * dt;
    s[1] += s[3] * dt;
    s[2] += a[0] * dt;
    s[3] += a[1] * dt;
}

#[inline]
pub(crate) fn advance_dubins3d(s: &mut [f64], a: &[f64], dt: f64, spec: &GameSpec) {
    let (psi, gamma, phi, v) = (s[3], s[4], s[5], s[6]);
    s[0] += v * gamma.cos() * psi.sin() * dt;
    s[1] += v * gamma.cos() * psi.cos() * dt;
    s[2] -= v * gamma.sin() * dt;
    s[3] += spec.dubins_gravity / v * phi.tan() * dt;
    s[4] += a[0] * dt;
    s[5] += a[1] * dt;
    s[6] += a[2] * dt;
    let bank = spec.dubins_bank_bound;
    s[5] = s[5].clamp(-bank, bank);
    let [lo, hi] = spec.dubins_speed_range;
    s[6] = s[6].clamp(lo, hi);
}

/// In-place step for whichever model `spec` selects. Dimensions are trusted.
#[inline]
pub(crate) fn advance(s: &mut [f64], a: &[f64], spec: &GameSpec) {
    match spec.dynamics_model {
        DynamicsModel::DoubleIntegrator2D => advance_double_integrator(s, a, spec.timestep),
        DynamicsModel::Dubins3D => advance_dubins3d(s, a, spec.timestep, spec),
    }
}

/// Project an action into the admissible set 𝒰: radial scaling onto the
/// acceleration disc for the double integrator, componentwise clamping for
/// the Dubins rate box.
pub fn project_action(action: &mut [f64], spec: &GameSpec) {
    match spec.dynamics_model {
        DynamicsModel::DoubleIntegrator2D => {
            let norm = action.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > spec.acc_bound {
                let scale = spec.acc_bound / norm;
                action.iter_mut().for_each(|x| *x *= scale);
            }
        }
        DynamicsModel::Dubins3D => {
            let r = spec.dubins_rate_bound;
            action[0] = action[0].clamp(-r, r);
            action[1] = action[1].clamp(-r, r);
            action[2] = action[2].clamp(-spec.acc_bound, spec.acc_bound);
        }
    }
    for x in action.iter_mut() {
        if !x.is_finite() {
            *x = 0.0;
        }
    }
}

/// Draw uniformly from 𝒰 into `out` (area-uniform on the disc, or uniform
/// on the Dubins box).
pub fn sample_uniform_action<R: Rng + ?Sized>(spec: &GameSpec, rng: &mut R, out: &mut [f64]) {
    match spec.dynamics_model {
        DynamicsModel::DoubleIntegrator2D => {
            let r = spec.acc_bound * rng.random::<f64>().sqrt();
            let th = rng.random::<f64>() * std::f64::consts::TAU;
            out[0] = r * th.cos();
            out[1] = r * th.sin();
        }
        DynamicsModel::Dubins3D => {
            let r = spec.dubins_rate_bound;
            out[0] = rng.random_range(-r..=r);
            out[1] = rng.random_range(-r..=r);
            out[2] = rng.random_range(-spec.acc_bound..=spec.acc_bound);
        }
    }
}
