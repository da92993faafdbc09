use rustfft::num_complex::Complex64;

use super::eulerian::{resolve, truncate};
use super::rk4::integrate;
use super::{
    BParams, ConjugateSolve, LagrangianTrajectory, SolverConfig, SprayState, Termination,
    Trajectory,
};
use crate::diffeo::{compose_field, delta2_from, invert, Diffeomorphism};
use crate::error::{Error, Result};
use crate::spectral::{derivative_unchecked, hs_norm, Field};

/// `H^{-1} trunc(src)`.
fn smooth_solve(src: &Field) -> Field {
    truncate(src.spectrum())
        .apply(|xi, _| Complex64::new(1.0 / (1.0 + xi * xi), 0.0))
        .to_field()
}

/// `Gamma_id(v, w) = (1 - d_x^2)^{-1} B(v, w)` with the symmetric form
/// `B(v, w) = -(b/2)(v w_x + w v_x) + ((b - 3)/2)(v_x w_xx + w_x v_xx)`,
/// whose diagonal is `-b v v_x + (b - 3) v_x v_xx`.
pub fn christoffel_id(v: &Field, w: &Field, params: &BParams) -> Result<Field> {
    if v.grid() != w.grid() {
        return Err(Error::GridMismatch);
    }
    let b = params.b();
    let rv = resolve(v);
    let rw = resolve(w);
    let source: Vec<f64> = (0..v.grid().len())
        .map(|j| {
            let (v0, v1, v2) = (rv.u.values()[j], rv.ux.values()[j], rv.uxx.values()[j]);
            let (w0, w1, w2) = (rw.u.values()[j], rw.ux.values()[j], rw.uxx.values()[j]);
            let transport = 0.5 * (v0 * w1 + w0 * v1);
            let stretch = 0.5 * (v1 * w2 + w1 * v2);
            -b * transport + (b - 3.0) * stretch
        })
        .collect();
    Ok(smooth_solve(&Field::from_raw(*v.grid(), source)))
}

pub fn christoffel_at(phi: &Diffeomorphism, v: &Field, params: &BParams) -> Result<Field> {
    christoffel_at_with(phi, v, params, &ConjugateSolve::default())
}

/// `Gamma_phi(v, v) = Gamma_id(v o phi^{-1}, v o phi^{-1}) o phi`, evaluated
/// in `phi`-coordinates without inverting `phi`.
///
/// The source is built from the conjugated derivatives of `v`. The
/// conjugated Helmholtz problem `g - R_phi d_x^2 R_{phi^{-1}} g = source` is
/// multiplied through by `phi_x`, which turns it into the symmetric positive
/// definite problem `phi_x g - (g_x / phi_x)_x = phi_x source`; that is solved
/// by conjugate gradients preconditioned with a constant-coefficient
/// Helmholtz inverse. If the iteration stalls and `opts.fallback` is set, the
/// explicit inversion pipeline is used instead.
pub fn christoffel_at_with(
    phi: &Diffeomorphism,
    v: &Field,
    params: &BParams,
    opts: &ConjugateSolve,
) -> Result<Field> {
    if phi.grid() != v.grid() {
        return Err(Error::GridMismatch);
    }
    if phi.is_identity() {
        return christoffel_id(v, v, params);
    }
    if v.is_zero() {
        return Ok(Field::zeros(*v.grid()));
    }
    let b = params.b();
    let phi_x = phi.phi_x();
    let phi_xx = phi.phi_xx();
    let rv = resolve(v);
    let d1 = rv.ux.zip_with(phi_x, |d, p| d / p);
    let d2 = delta2_from(phi, &phi_xx, &rv.ux, &rv.uxx);
    let raw: Vec<f64> = (0..v.grid().len())
        .map(|j| {
            let (v0, a, c) = (rv.u.values()[j], d1.values()[j], d2.values()[j]);
            -b * v0 * a + (b - 3.0) * a * c
        })
        .collect();
    let source = truncate(Field::from_raw(*v.grid(), raw).spectrum()).to_field();

    match conjugated_helmholtz_solve(phi_x, &source, opts) {
        Ok(g) => Ok(g),
        Err(stalled) if opts.fallback => literal_christoffel(phi, v, params).map_err(|_| stalled),
        Err(stalled) => Err(stalled),
    }
}

fn dot(a: &Field, b: &Field) -> f64 {
    a.values().iter().zip(b.values()).map(|(x, y)| x * y).sum()
}

/// Preconditioned conjugate gradients for `phi_x g - (g_x / phi_x)_x =
/// phi_x source` on the dealiased modes. The preconditioner is
/// `(alpha - beta d_x^2)^{-1}` with `alpha`, `beta` the means of `phi_x` and
/// `1 / phi_x`, so its symbol tracks the operator at low and high
/// frequencies alike.
fn conjugated_helmholtz_solve(
    phi_x: &Field,
    source: &Field,
    opts: &ConjugateSolve,
) -> Result<Field> {
    let grid = *source.grid();
    let n = grid.len() as f64;
    let inv_phi_x = phi_x.map(|p| 1.0 / p);
    let alpha = phi_x.values().iter().sum::<f64>() / n;
    let beta = inv_phi_x.values().iter().sum::<f64>() / n;
    let apply = |g: &Field| -> Field {
        let gx = derivative_unchecked(g, 1);
        let flux = derivative_unchecked(&gx.zip_with(&inv_phi_x, |a, b| a * b), 1);
        let raw: Vec<f64> = (0..g.values().len())
            .map(|j| phi_x.values()[j] * g.values()[j] - flux.values()[j])
            .collect();
        truncate(Field::from_raw(grid, raw).spectrum()).to_field()
    };
    let precondition = |r: &Field| -> Field {
        truncate(r.spectrum())
            .apply(|xi, _| Complex64::new(1.0 / (alpha + beta * xi * xi), 0.0))
            .to_field()
    };

    let rhs = truncate(source.zip_with(phi_x, |s, p| s * p).spectrum()).to_field();
    let rhs_norm = rhs.l2_norm();
    if rhs_norm == 0.0 {
        return Ok(Field::zeros(grid));
    }
    let mut g = smooth_solve(source);
    let mut r = &rhs - &apply(&g);
    let mut z = precondition(&r);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut rel = r.l2_norm() / rhs_norm;
    for it in 0..opts.max_iterations {
        if rel <= opts.tol {
            return Ok(g);
        }
        let kp = apply(&p);
        let curvature = dot(&p, &kp);
        if !(curvature > 0.0) {
            return Err(Error::ConjugateSolveStalled {
                iterations: it,
                residual: rel,
            });
        }
        let step = rz / curvature;
        g = g.axpy(step, &p);
        r = r.axpy(-step, &kp);
        rel = r.l2_norm() / rhs_norm;
        if !rel.is_finite() {
            break;
        }
        z = precondition(&r);
        let rz_next = dot(&r, &z);
        p = z.axpy(rz_next / rz, &p);
        rz = rz_next;
    }
    if rel <= opts.tol {
        return Ok(g);
    }
    Err(Error::ConjugateSolveStalled {
        iterations: opts.max_iterations,
        residual: rel,
    })
}

/// Direct evaluation through `phi^{-1}`.
fn literal_christoffel(phi: &Diffeomorphism, v: &Field, params: &BParams) -> Result<Field> {
    let inv = invert(phi)?;
    let eulerian = compose_field(v, &inv)?;
    compose_field(&christoffel_id(&eulerian, &eulerian, params)?, phi)
}

/// RK4 on `(phi, phi_t)' = (phi_t, Gamma_phi(phi_t, phi_t))` from
/// `phi = id`, `phi_t = u0`.
pub fn solve_geodesic(
    u0: &Field,
    params: &BParams,
    config: &SolverConfig,
) -> Result<LagrangianTrajectory> {
    let grid = *u0.grid();
    let cap = config.blowup_norm_cap;
    let min_phix = config.min_phix;
    let s = params.s();
    let run = integrate(
        (Field::zeros(grid), u0.clone()),
        config,
        |(f, w): &(Field, Field)| {
            let phi = Diffeomorphism::new(f.clone())?;
            let accel = christoffel_at_with(&phi, w, params, &config.conjugate)?;
            Ok((w.clone(), accel))
        },
        |(f, w): &(Field, Field)| {
            let phi_x_min = 1.0 + derivative_unchecked(f, 1).min();
            if phi_x_min < min_phix {
                Some(Termination::BlowupPhix)
            } else if hs_norm(w, s) > cap {
                Some(Termination::BlowupNorm)
            } else {
                None
            }
        },
    )?;
    let mut times = Vec::with_capacity(run.times.len());
    let mut states = Vec::with_capacity(run.states.len());
    for (t, (f, w)) in run.times.into_iter().zip(run.states) {
        match Diffeomorphism::new(f) {
            Ok(phi) => {
                times.push(t);
                states.push(SprayState { phi, phit: w });
            }
            // Only the state that tripped the guard can fail here.
            Err(_) if run.termination == Termination::BlowupPhix => break,
            Err(e) => return Err(e),
        }
    }
    Ok(Trajectory {
        params: *params,
        config: *config,
        times,
        states,
        termination: run.termination,
    })
}

/// `v -> phi_v(1)`, the time-one point of the geodesic through `id` with
/// initial velocity `v`.
pub fn exp_map(v: &Field, params: &BParams, config: &SolverConfig) -> Result<Diffeomorphism> {
    let horizon = config.with_horizon(1.0);
    let horizon = horizon.with_stride(horizon.step_count().max(1));
    let traj = solve_geodesic(v, params, &horizon)?;
    if !traj.completed() {
        return Err(Error::OutsideExpDomain {
            termination: traj.termination,
            time: traj.final_time(),
        });
    }
    Ok(traj.states.into_iter().last().unwrap().phi)
}

/// Central difference `(exp(u0 + eps v) - exp(u0 - eps v)) / (2 eps)` of the
/// displacement fields. The two geodesics run concurrently.
pub fn dexp(
    u0: &Field,
    v: &Field,
    params: &BParams,
    eps: f64,
    config: &SolverConfig,
) -> Result<Field> {
    if u0.grid() != v.grid() {
        return Err(Error::GridMismatch);
    }
    if !(eps > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "finite-difference step must be positive, got {eps}"
        )));
    }
    if v.is_zero() {
        return Ok(Field::zeros(*v.grid()));
    }
    let plus = u0.axpy(eps, v);
    let minus = u0.axpy(-eps, v);
    let (a, b) = rayon::join(
        || exp_map(&plus, params, config),
        || exp_map(&minus, params, config),
    );
    let (a, b) = (a?, b?);
    Ok(&(a.displacement() - b.displacement()) * (0.5 / eps))
}
