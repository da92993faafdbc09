//! Checkable identities: momentum transport along the flow, its time-one
//! reconstruction, and the disjoint-support norm inequalities.

use rayon::prelude::*;

use crate::diffeo::{compose_field, invert, Diffeomorphism};
use crate::dynamics::{eulerian_from_lagrangian, BParams, LagrangianTrajectory};
use crate::error::{Error, Result};
use crate::spectral::{helmholtz, homogeneous_hs_norm, hs_norm, Field};

/// Relative threshold below which a sample counts as outside the support.
pub const SUPPORT_THRESHOLD: f64 = 1e-14;

/// `y = (1 - d_x^2) u`.
pub fn momentum(u: &Field) -> Field {
    helmholtz(u)
}

/// `||u||_{H^1}^2`, conserved by the Camassa–Holm member `b = 2`.
pub fn ch_energy(u: &Field) -> f64 {
    hs_norm(u, 1.0).powi(2)
}

/// Deviation of `(y o phi) phi_x^b` from `y_0` along a Lagrangian run.
#[derive(Debug, Clone, PartialEq)]
pub struct ConservationReport {
    pub times: Vec<f64>,
    /// In `H^{s-2}`.
    pub residual_s_minus_2: Vec<f64>,
    pub residual_sup: Vec<f64>,
    /// Whether the residuals are divided by the matching norm of `y_0`.
    pub relative: bool,
}

impl ConservationReport {
    pub fn max_residual(&self) -> f64 {
        self.residual_s_minus_2.iter().copied().fold(0.0, f64::max)
    }

    pub fn final_residual(&self) -> f64 {
        self.residual_s_minus_2.last().copied().unwrap_or(0.0)
    }
}

/// `(y o phi) * phi_x^b` for one state, with `u = phi_t o phi^{-1}`.
fn transported_momentum(state: &crate::dynamics::SprayState, b: f64) -> Result<Field> {
    let u = eulerian_from_lagrangian(state)?;
    let y = momentum(&u);
    let pulled = compose_field(&y, &state.phi)?;
    Ok(pulled.zip_with(state.phi.phi_x(), |v, p| v * p.powf(b)))
}

pub fn conservation_residual(
    traj: &LagrangianTrajectory,
    params: &BParams,
    relative: bool,
) -> Result<ConservationReport> {
    let b = params.b();
    let s2 = params.s() - 2.0;
    let y0 = momentum(&traj.states[0].phit);
    let (scale_hs, scale_sup) = if relative {
        let hs = hs_norm(&y0, s2);
        let sup = y0.max_abs();
        (
            if hs > 0.0 { hs } else { 1.0 },
            if sup > 0.0 { sup } else { 1.0 },
        )
    } else {
        (1.0, 1.0)
    };
    let rows: Vec<Result<(f64, f64)>> = traj
        .states
        .par_iter()
        .map(|state| {
            let diff = &transported_momentum(state, b)? - &y0;
            Ok((hs_norm(&diff, s2) / scale_hs, diff.max_abs() / scale_sup))
        })
        .collect();
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(ConservationReport {
        times: traj.times.clone(),
        residual_s_minus_2: rows.iter().map(|r| r.0).collect(),
        residual_sup: rows.iter().map(|r| r.1).collect(),
        relative,
    })
}

/// Time-one momentum predicted from the flow alone:
/// `y(1) = (y_0 / phi_x^b) o phi^{-1}`.
pub fn pushforward_reconstruct(y0: &Field, phi: &Diffeomorphism, b: f64) -> Result<Field> {
    if y0.grid() != phi.grid() {
        return Err(Error::GridMismatch);
    }
    let weighted = y0.zip_with(phi.phi_x(), |y, p| y / p.powf(b));
    compose_field(&weighted, &invert(phi)?)
}

/// `||R_phi^{-1}(y / phi_x^b)||_{s-2} / ||y||_{s-2}`, the quantity bounded
/// above and below for `phi` near a fixed diffeomorphism.
pub fn pushforward_norm_ratio(y: &Field, phi: &Diffeomorphism, b: f64, s: f64) -> Result<f64> {
    let pushed = pushforward_reconstruct(y, phi, b)?;
    Ok(hs_norm(&pushed, s - 2.0) / hs_norm(y, s - 2.0))
}

fn check_disjoint(f: &Field, g: &Field) -> Result<()> {
    if f.grid() != g.grid() {
        return Err(Error::GridMismatch);
    }
    let tf = SUPPORT_THRESHOLD * f.max_abs();
    let tg = SUPPORT_THRESHOLD * g.max_abs();
    let clash = f
        .values()
        .iter()
        .zip(g.values())
        .position(|(a, b)| a.abs() > tf && b.abs() > tg);
    match clash {
        Some(index) => Err(Error::OverlappingSupports { index }),
        None => Ok(()),
    }
}

fn ratio_with(f: &Field, g: &Field, norm: impl Fn(&Field) -> f64) -> Result<f64> {
    check_disjoint(f, g)?;
    let denom = norm(f).powi(2) + norm(g).powi(2);
    if denom == 0.0 {
        return Ok(1.0);
    }
    Ok(norm(&(f + g)).powi(2) / denom)
}

/// `||f + g||_s^2 / (||f||_s^2 + ||g||_s^2)` for fields with disjoint
/// numerical supports.
pub fn disjoint_support_ratio(f: &Field, g: &Field, s: f64) -> Result<f64> {
    ratio_with(f, g, |h| hs_norm(h, s))
}

/// Same ratio in the homogeneous norm.
pub fn disjoint_support_ratio_homogeneous(f: &Field, g: &Field, s: f64) -> Result<f64> {
    ratio_with(f, g, |h| homogeneous_hs_norm(h, s))
}
