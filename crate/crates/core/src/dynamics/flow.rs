use super::{EulerianTrajectory, LagrangianTrajectory, SprayState, Trajectory};
use crate::diffeo::{compose_field, invert, sample_at, Diffeomorphism};
use crate::error::Result;
use crate::spectral::Field;

/// Integrates `phi_t = u(t) o phi`, `phi(0) = id` through the snapshots of an
/// Eulerian run with RK4, interpolating `u` linearly in time between
/// snapshots. Accuracy assumes snapshots at every step.
pub fn flow_from_velocity(traj: &EulerianTrajectory) -> Result<LagrangianTrajectory> {
    let grid = *traj.states[0].grid();
    let nodes = grid.points();
    let velocity_at = |u: &Field, f: &[f64]| -> Vec<f64> {
        let pts: Vec<f64> = nodes.iter().zip(f).map(|(x, d)| x + d).collect();
        sample_at(u, &pts)
    };
    let shifted = |f: &[f64], a: f64, k: &[f64]| -> Vec<f64> {
        f.iter().zip(k).map(|(x, y)| x + a * y).collect()
    };

    let mut f = vec![0.0; grid.len()];
    let mut states = vec![SprayState {
        phi: Diffeomorphism::identity(grid),
        phit: traj.states[0].clone(),
    }];
    for (k, window) in traj.states.windows(2).enumerate() {
        let (u0, u1) = (&window[0], &window[1]);
        let dt = traj.times[k + 1] - traj.times[k];
        let u_mid = u0.zip_with(u1, |a, b| 0.5 * (a + b));
        let k1 = velocity_at(u0, &f);
        let k2 = velocity_at(&u_mid, &shifted(&f, 0.5 * dt, &k1));
        let k3 = velocity_at(&u_mid, &shifted(&f, 0.5 * dt, &k2));
        let k4 = velocity_at(u1, &shifted(&f, dt, &k3));
        for j in 0..f.len() {
            f[j] += dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
        let phi = Diffeomorphism::new(Field::new(grid, f.clone())?)?;
        let phit = compose_field(u1, &phi)?;
        states.push(SprayState { phi, phit });
    }
    Ok(Trajectory {
        params: traj.params,
        config: traj.config,
        times: traj.times.clone(),
        states,
        termination: traj.termination,
    })
}

/// `u = phi_t o phi^{-1}`.
pub fn eulerian_from_lagrangian(state: &SprayState) -> Result<Field> {
    if state.phi.is_identity() {
        return Ok(state.phit.clone());
    }
    if state.phit.is_zero() {
        return Ok(Field::zeros(*state.phit.grid()));
    }
    compose_field(&state.phit, &invert(&state.phi)?)
}
