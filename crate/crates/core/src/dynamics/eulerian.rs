use rustfft::num_complex::Complex64;

use super::rk4::integrate;
use super::{BParams, EulerianTrajectory, SolverConfig, Termination, Trajectory};
use crate::error::Result;
use crate::spectral::{hs_norm, Field, Grid, SpectralCoeffs};

/// Spectrally truncated copy of `u` together with its first two derivatives.
pub(super) struct Resolved {
    pub u: Field,
    pub ux: Field,
    pub uxx: Field,
}

pub(super) fn truncate(spec: SpectralCoeffs) -> SpectralCoeffs {
    let cutoff = spec.grid().dealias_cutoff();
    spec.apply(|_, m| {
        if m.abs() > cutoff {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(1.0, 0.0)
        }
    })
}

pub(super) fn resolve(u: &Field) -> Resolved {
    let spec = truncate(u.spectrum());
    let ux = spec
        .clone()
        .apply(|xi, _| Complex64::new(0.0, xi))
        .to_field();
    let uxx = spec
        .clone()
        .apply(|xi, _| Complex64::new(-xi * xi, 0.0))
        .to_field();
    Resolved {
        u: spec.to_field(),
        ux,
        uxx,
    }
}

/// Given the raw products `u u_x` and `u_x u_xx`, returns
/// `trunc(-u u_x + H^{-1}(-b u u_x + (b - 3) u_x u_xx))`.
pub(super) fn assemble(grid: Grid, uux: &Field, uxuxx: &Field, b: f64) -> Field {
    let p1 = truncate(uux.spectrum());
    let p2 = truncate(uxuxx.spectrum());
    let modes = p1
        .modes()
        .iter()
        .zip(p2.modes())
        .enumerate()
        .map(|(i, (a, c))| {
            let xi = grid.wavenumber(i);
            -a + (a * (-b) + c * (b - 3.0)) / (1.0 + xi * xi)
        })
        .collect();
    SpectralCoeffs::from_modes(grid, modes).to_field()
}

/// `u_t = -u u_x + (1 - d_x^2)^{-1}(-b u u_x + (b - 3) u_x u_xx)` with every
/// product dealiased.
pub fn rhs_eulerian(u: &Field, params: &BParams) -> Field {
    let r = resolve(u);
    let uux = r.u.zip_with(&r.ux, |a, c| a * c);
    let uxuxx = r.ux.zip_with(&r.uxx, |a, c| a * c);
    assemble(*u.grid(), &uux, &uxuxx, params.b())
}

/// Classical RK4 on [`rhs_eulerian`]. Stops with `BlowupNorm` once
/// `||u||_{H^s}` exceeds the configured cap.
pub fn solve_eulerian(
    u0: &Field,
    params: &BParams,
    config: &SolverConfig,
) -> Result<EulerianTrajectory> {
    let cap = config.blowup_norm_cap;
    let s = params.s();
    let run = integrate(
        u0.clone(),
        config,
        |u: &Field| Ok(rhs_eulerian(u, params)),
        |u: &Field| (hs_norm(u, s) > cap).then_some(Termination::BlowupNorm),
    )?;
    Ok(Trajectory {
        params: *params,
        config: *config,
        times: run.times,
        states: run.states,
        termination: run.termination,
    })
}
