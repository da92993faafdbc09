//! Desk-scale witness that the time-one map `u0 -> u(1)` is not uniformly
//! continuous near a base point.
//!
//! Around `u0` two families of initial data are built,
//! `x_n = u0 + w_n` and `x~_n = x_n + v / n`, where `w_n` is a smooth bump of
//! fixed `H^s` norm whose support shrinks like `1/n` around the point `x0`
//! where the differential of the exponential map in direction `v` peaks.
//! The inputs converge to each other while the two flows move the bump to
//! separated places, so the outputs stay a fixed distance apart.

use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::diagnostics::{momentum, pushforward_reconstruct};
use crate::diffeo::Diffeomorphism;
use crate::dynamics::{dexp, exp_map, solve_eulerian, BParams, SolverConfig};
use crate::error::{Error, Result};
use crate::spectral::{hs_norm, Field, Grid};

/// Bumps narrower than this many grid cells are rejected.
pub const MIN_CELLS_PER_RADIUS: f64 = 4.0;

/// Safety factor applied to `max phi_x` when estimating the Lipschitz
/// constant of the flow.
pub const LIPSCHITZ_SAFETY: f64 = 1.5;

/// The standard mollifier `exp(-1 / (1 - t^2))`, `t = (x - c) / radius`,
/// with periodic distance to the centre.
pub fn mollifier(grid: Grid, center: f64, radius: f64) -> Field {
    let period = grid.period();
    let l = grid.half_length();
    Field::from_fn(grid, |x| {
        let d = (x - center + l).rem_euclid(period) - l;
        let t = d / radius;
        if t.abs() < 1.0 {
            (-1.0 / (1.0 - t * t)).exp()
        } else {
            0.0
        }
    })
}

/// Mollifier bump rescaled to `||bump||_{H^s} = target_norm`.
pub fn build_bump(center: f64, radius: f64, s: f64, target_norm: f64, grid: Grid) -> Result<Field> {
    let h = grid.spacing();
    if !(radius > MIN_CELLS_PER_RADIUS * h) {
        return Err(Error::UnderResolved { radius, spacing: h });
    }
    if target_norm == 0.0 {
        return Ok(Field::zeros(grid));
    }
    let profile = mollifier(grid, center, radius);
    let norm = hs_norm(&profile, s);
    Ok(&profile * (target_norm / norm))
}

/// The time-one map `Phi(u0) = u(1)` computed with the Eulerian solver.
pub fn time_one_map(u0: &Field, params: &BParams, config: &SolverConfig) -> Result<Field> {
    let cfg = final_only(config.with_horizon(1.0));
    let traj = solve_eulerian(u0, params, &cfg)?;
    if !traj.completed() {
        return Err(Error::Blowup {
            label: "time-one map (datum outside U_1)".into(),
            termination: traj.termination,
            time: traj.final_time(),
        });
    }
    Ok(traj.states.into_iter().last().unwrap())
}

fn final_only(cfg: SolverConfig) -> SolverConfig {
    let steps = cfg.step_count().max(1);
    cfg.with_stride(steps)
}

/// `||v(T / lambda) - lambda u(T)||_{H^s}`, where `u` starts from `u0` with
/// step `dt` and `v` starts from `lambda u0` with step `dt / lambda`.
pub fn scaling_check(
    u0: &Field,
    lambda: f64,
    t_final: f64,
    params: &BParams,
    config: &SolverConfig,
) -> Result<f64> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParams(format!(
            "scaling factor must be positive, got {lambda}"
        )));
    }
    if lambda == 1.0 || u0.is_zero() {
        return Ok(0.0);
    }
    let base = final_only(config.with_horizon(t_final));
    let scaled = final_only(
        config
            .with_horizon(t_final / lambda)
            .with_dt(config.dt / lambda),
    );
    let lifted = u0 * lambda;
    let (u, v) = rayon::join(
        || solve_eulerian(u0, params, &base),
        || solve_eulerian(&lifted, params, &scaled),
    );
    let (u, v) = (u?, v?);
    for (traj, label) in [(&u, "base run"), (&v, "scaled run")] {
        if !traj.completed() {
            return Err(Error::Blowup {
                label: label.into(),
                termination: traj.termination,
                time: traj.final_time(),
            });
        }
    }
    let diff = v.final_state() - &(u.final_state() * lambda);
    Ok(hs_norm(&diff, params.s()))
}

#[derive(Debug, Clone)]
pub struct NonUniformityConfig {
    /// Base point.
    pub u0: Field,
    /// Probe direction.
    pub v: Field,
    pub params: BParams,
    /// Ball radius `R`; the bumps carry `||w_n||_{H^s} = R / 4`.
    pub radius: f64,
    pub n_values: Vec<usize>,
    pub solver: SolverConfig,
    pub eps_dexp: f64,
}

impl NonUniformityConfig {
    pub fn grid(&self) -> &Grid {
        self.u0.grid()
    }

    fn validate(&self) -> Result<()> {
        if self.u0.grid() != self.v.grid() {
            return Err(Error::GridMismatch);
        }
        if !(self.radius > 0.0) {
            return Err(Error::InvalidParams(format!(
                "ball radius must be positive, got {}",
                self.radius
            )));
        }
        if self.n_values.is_empty() || self.n_values.contains(&0) {
            return Err(Error::InvalidParams("n values must be >= 1".into()));
        }
        if !(self.eps_dexp > 0.0) {
            return Err(Error::InvalidParams("eps_dexp must be positive".into()));
        }
        self.solver.validate()
    }

    /// SHA-256 over every input that influences the report.
    pub fn hash(&self) -> String {
        #[derive(Serialize)]
        struct Canonical<'a> {
            grid: &'a Grid,
            u0: &'a [f64],
            v: &'a [f64],
            params: &'a BParams,
            radius: f64,
            n_values: &'a [usize],
            solver: &'a SolverConfig,
            eps_dexp: f64,
        }
        let bytes = serde_json::to_vec(&Canonical {
            grid: self.grid(),
            u0: self.u0.values(),
            v: self.v.values(),
            params: &self.params,
            radius: self.radius,
            n_values: &self.n_values,
            solver: &self.solver,
            eps_dexp: self.eps_dexp,
        })
        .expect("config serializes");
        hex::encode(Sha256::digest(bytes))
    }
}

/// Numerical stand-ins for the point `x0`, the lower bound `m` on the
/// differential of `exp` in direction `v`, and the Lipschitz constant `L`
/// of the flow.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProbeGeometry {
    pub x0_index: usize,
    pub x0_est: f64,
    pub m_est: f64,
    pub l_est: f64,
    pub v_norm: f64,
}

pub fn estimate_probe_geometry(cfg: &NonUniformityConfig) -> Result<ProbeGeometry> {
    cfg.validate()?;
    let s = cfg.params.s();
    let v_norm = hs_norm(&cfg.v, s);
    if v_norm == 0.0 {
        return Err(Error::DegenerateProbe { m_est: 0.0 });
    }
    let (d, phi) = rayon::join(
        || dexp(&cfg.u0, &cfg.v, &cfg.params, cfg.eps_dexp, &cfg.solver),
        || exp_map(&cfg.u0, &cfg.params, &cfg.solver),
    );
    let (d, phi) = (d?, phi?);
    let (x0_index, peak) = d
        .values()
        .iter()
        .enumerate()
        .fold((0, 0.0_f64), |(bi, bv), (i, v)| {
            if v.abs() > bv {
                (i, v.abs())
            } else {
                (bi, bv)
            }
        });
    let m_est = peak / v_norm;
    if !(m_est >= 1e-12) {
        return Err(Error::DegenerateProbe { m_est });
    }
    Ok(ProbeGeometry {
        x0_index,
        x0_est: cfg.grid().x(x0_index),
        m_est,
        l_est: LIPSCHITZ_SAFETY * phi.phi_x().max(),
        v_norm,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentRow {
    pub n: usize,
    pub r_n: f64,
    pub input_dist: f64,
    pub output_dist: f64,
    pub momentum_output_dist: f64,
    pub witness_gap: f64,
    pub disjoint_ok: bool,
    pub resolved_ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub rows: Vec<ExperimentRow>,
    pub geometry: ProbeGeometry,
    pub radius: f64,
    pub config_hash: String,
}

impl ExperimentReport {
    pub fn resolved(&self) -> impl Iterator<Item = &ExperimentRow> {
        self.rows.iter().filter(|r| r.resolved_ok)
    }

    /// `m ||v|| / (2 n)`, the separation the construction guarantees.
    pub fn witness_bound(&self, n: usize) -> f64 {
        self.geometry.m_est * self.geometry.v_norm / (2.0 * n as f64)
    }

    pub fn witness_bound_holds(&self) -> bool {
        self.resolved()
            .all(|r| r.witness_gap >= self.witness_bound(r.n))
    }

    /// Every input distance equals `||v|| / n` to rounding.
    pub fn input_distance_exact(&self, rel_tol: f64) -> bool {
        self.rows.iter().all(|r| {
            let expect = self.geometry.v_norm / r.n as f64;
            (r.input_dist - expect).abs() <= rel_tol * expect
        })
    }

    pub fn disjoint_holds(&self) -> bool {
        self.resolved().all(|r| r.disjoint_ok)
    }

    /// Output distances at every resolved `n` stay above `fraction` times the
    /// value at the smallest resolved `n`.
    pub fn separation_persists(&self, fraction: f64) -> bool {
        let mut rows = self.resolved();
        let Some(first) = rows.next() else {
            return false;
        };
        let floor = fraction * first.output_dist;
        first.output_dist > 0.0 && rows.all(|r| r.output_dist >= floor)
    }
}

fn blowup(label: String, err: Error) -> Error {
    match err {
        Error::Blowup {
            termination, time, ..
        }
        | Error::OutsideExpDomain { termination, time } => Error::Blowup {
            label,
            termination,
            time,
        },
        other => other,
    }
}

fn row_for(cfg: &NonUniformityConfig, geo: &ProbeGeometry, n: usize) -> Result<ExperimentRow> {
    let grid = *cfg.grid();
    let s = cfg.params.s();
    let b = cfg.params.b();
    let nf = n as f64;
    let r_n = geo.m_est * geo.v_norm / (8.0 * nf);
    let input_dist = geo.v_norm / nf;
    let bump_radius = r_n / geo.l_est;
    let w_n = match build_bump(geo.x0_est, bump_radius, s, cfg.radius / 4.0, grid) {
        Ok(w) => w,
        Err(Error::UnderResolved { .. }) => {
            return Ok(ExperimentRow {
                n,
                r_n,
                input_dist,
                output_dist: f64::NAN,
                momentum_output_dist: f64::NAN,
                witness_gap: f64::NAN,
                disjoint_ok: false,
                resolved_ok: false,
            })
        }
        Err(e) => return Err(e),
    };
    let x_n = &cfg.u0 + &w_n;
    let x_tilde = x_n.axpy(1.0 / nf, &cfg.v);
    let input_dist = hs_norm(&(&x_tilde - &x_n), s);

    let ((out, out_t), (phi, phi_t)) = rayon::join(
        || {
            rayon::join(
                || time_one_map(&x_n, &cfg.params, &cfg.solver),
                || time_one_map(&x_tilde, &cfg.params, &cfg.solver),
            )
        },
        || {
            rayon::join(
                || exp_map(&x_n, &cfg.params, &cfg.solver),
                || exp_map(&x_tilde, &cfg.params, &cfg.solver),
            )
        },
    );
    let out = out.map_err(|e| blowup(format!("n = {n}, x_n"), e))?;
    let out_t = out_t.map_err(|e| blowup(format!("n = {n}, x~_n"), e))?;
    let phi = phi.map_err(|e| blowup(format!("n = {n}, exp(x_n)"), e))?;
    let phi_t = phi_t.map_err(|e| blowup(format!("n = {n}, exp(x~_n)"), e))?;

    let output_dist = hs_norm(&(&out - &out_t), s);
    let y_push = pushforward_reconstruct(&momentum(&x_n), &phi, b)?;
    let y_push_t = pushforward_reconstruct(&momentum(&x_tilde), &phi_t, b)?;
    let momentum_output_dist = hs_norm(&(&y_push - &y_push_t), s - 2.0);

    let j = geo.x0_index;
    let witness_gap = (phi.displacement().values()[j] - phi_t.displacement().values()[j]).abs();
    let disjoint_ok =
        r_n <= witness_gap / 4.0 && images_disjoint(&phi, &phi_t, geo.x0_est, bump_radius);

    Ok(ExperimentRow {
        n,
        r_n,
        input_dist,
        output_dist,
        momentum_output_dist,
        witness_gap,
        disjoint_ok,
        resolved_ok: true,
    })
}

/// Whether the images of `[x0 - rho, x0 + rho]` under the two flows are
/// disjoint intervals.
fn images_disjoint(phi: &Diffeomorphism, psi: &Diffeomorphism, x0: f64, rho: f64) -> bool {
    let (a0, a1) = (phi.eval(x0 - rho), phi.eval(x0 + rho));
    let (b0, b1) = (psi.eval(x0 - rho), psi.eval(x0 + rho));
    a1 < b0 || b1 < a0
}

pub fn nonuniformity_experiment(cfg: &NonUniformityConfig) -> Result<ExperimentReport> {
    let geometry = estimate_probe_geometry(cfg)?;
    let rows: Vec<Result<ExperimentRow>> = cfg
        .n_values
        .par_iter()
        .map(|&n| row_for(cfg, &geometry, n))
        .collect();
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(ExperimentReport {
        rows,
        geometry,
        radius: cfg.radius,
        config_hash: cfg.hash(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Grid {
        Grid::new(20.0, 1024).unwrap()
    }

    #[test]
    fn bump_norm_and_support() {
        let g = grid();
        let s = 2.0;
        let bump = build_bump(1.0, 0.5, s, 0.3, g).unwrap();
        assert!((hs_norm(&bump, s) / 0.3 - 1.0).abs() < 1e-10);
        let peak = bump.max_abs();
        for (j, v) in bump.values().iter().enumerate() {
            let x = g.x(j);
            if (x - 1.0).abs() >= 0.5 {
                assert!(v.abs() <= 1e-13 * peak);
            }
        }
        assert!(build_bump(0.0, 0.5, s, 0.0, g).unwrap().is_zero());
    }

    #[test]
    fn bump_rejects_under_resolved_radius() {
        let g = grid();
        let h = g.spacing();
        assert!(matches!(
            build_bump(0.0, 3.9 * h, 2.0, 1.0, g),
            Err(Error::UnderResolved { .. })
        ));
    }

    #[test]
    fn time_one_map_of_zero() {
        let g = Grid::new(20.0, 64).unwrap();
        let p = BParams::new(2.0, 2.0).unwrap();
        let cfg = SolverConfig::new(0.1, 1.0).unwrap();
        assert!(time_one_map(&Field::zeros(g), &p, &cfg).unwrap().is_zero());
    }

    #[test]
    fn scaling_check_trivial_cases() {
        let g = Grid::new(20.0, 64).unwrap();
        let p = BParams::new(2.0, 2.0).unwrap();
        let cfg = SolverConfig::new(0.05, 0.5).unwrap();
        let u0 = Field::from_fn(g, |x| 0.5 * (-(x * x) / 4.0).exp());
        assert_eq!(scaling_check(&u0, 1.0, 0.5, &p, &cfg).unwrap(), 0.0);
        assert_eq!(
            scaling_check(&Field::zeros(g), 2.0, 0.5, &p, &cfg).unwrap(),
            0.0
        );
    }

    #[test]
    fn zero_probe_is_degenerate() {
        let g = Grid::new(20.0, 64).unwrap();
        let cfg = NonUniformityConfig {
            u0: Field::zeros(g),
            v: Field::zeros(g),
            params: BParams::new(2.0, 2.0).unwrap(),
            radius: 0.1,
            n_values: vec![1],
            solver: SolverConfig::new(0.05, 1.0).unwrap(),
            eps_dexp: 1e-3,
        };
        assert!(matches!(
            estimate_probe_geometry(&cfg),
            Err(Error::DegenerateProbe { .. })
        ));
    }
}
