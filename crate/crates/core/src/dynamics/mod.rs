//! Eulerian and Lagrangian time integration of the b-family
//!
//! ```text
//! u_t + u u_x = (1 - d_x^2)^{-1} (-b u u_x + (b - 3) u_x u_xx)
//! ```
//!
//! The Eulerian solver integrates this nonlocal form directly. The Lagrangian
//! solver integrates the geodesic equation `phi_tt = Gamma_phi(phi_t, phi_t)`
//! for the flow `phi` with `phi_t = u o phi`. Both use classical RK4 with a
//! fixed step and 2/3-rule dealiasing of every quadratic product.

mod eulerian;
mod flow;
mod geodesic;
mod rk4;

use serde::{Deserialize, Serialize};

use crate::diffeo::Diffeomorphism;
use crate::error::{Error, Result};
use crate::spectral::Field;

pub use eulerian::{rhs_eulerian, solve_eulerian};
pub use flow::{eulerian_from_lagrangian, flow_from_velocity};
pub use geodesic::{
    christoffel_at, christoffel_at_with, christoffel_id, dexp, exp_map, solve_geodesic,
};

/// The family parameter `b` and the Sobolev index `s > 3/2` used for all
/// norms and guards.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BParams {
    b: f64,
    s: f64,
}

impl BParams {
    pub fn new(b: f64, s: f64) -> Result<Self> {
        if !b.is_finite() {
            return Err(Error::InvalidParams(format!("b must be finite, got {b}")));
        }
        if !(s > 1.5 && s.is_finite()) {
            return Err(Error::InvalidParams(format!("s must exceed 3/2, got {s}")));
        }
        Ok(Self { b, s })
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn s(&self) -> f64 {
        self.s
    }
}

/// Controls for the conjugated Helmholtz solve inside `christoffel_at`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConjugateSolve {
    pub tol: f64,
    pub max_iterations: usize,
    /// Fall back to the explicit-inversion pipeline when the iteration stalls.
    pub fallback: bool,
}

impl Default for ConjugateSolve {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iterations: 200,
            fallback: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub dt: f64,
    #[serde(rename = "T")]
    pub t_final: f64,
    pub snapshot_stride: usize,
    pub blowup_norm_cap: f64,
    pub min_phix: f64,
    #[serde(default)]
    pub conjugate: ConjugateSolve,
}

impl SolverConfig {
    pub fn new(dt: f64, t_final: f64) -> Result<Self> {
        let cfg = Self {
            dt,
            t_final,
            snapshot_stride: 1,
            blowup_norm_cap: 1e6,
            min_phix: 1e-6,
            conjugate: ConjugateSolve::default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// `dt = min(1e-3, 0.5 h / max|u0|)`.
    pub fn default_dt(u0: &Field) -> f64 {
        let amp = u0.max_abs();
        let cfl = if amp > 0.0 {
            0.5 * u0.grid().spacing() / amp
        } else {
            f64::INFINITY
        };
        cfl.min(1e-3)
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.snapshot_stride = stride;
        self
    }

    pub fn with_horizon(mut self, t_final: f64) -> Self {
        self.t_final = t_final;
        self
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = dt;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return bad(format!("T must be positive, got {}", self.t_final));
        }
        if self.dt > self.t_final {
            return bad(format!("dt = {} exceeds T = {}", self.dt, self.t_final));
        }
        if self.snapshot_stride == 0 {
            return bad("snapshot_stride must be at least 1".into());
        }
        if !(self.blowup_norm_cap > 0.0) {
            return bad("blowup_norm_cap must be positive".into());
        }
        if !(self.min_phix > 0.0) {
            return bad("min_phix must be positive".into());
        }
        if !(self.conjugate.tol > 0.0) || self.conjugate.max_iterations == 0 {
            return bad("conjugate solve needs a positive tolerance and iteration budget".into());
        }
        Ok(())
    }

    /// Number of steps needed to reach `T`; the last step is shortened when
    /// `T / dt` is not an integer.
    pub fn step_count(&self) -> usize {
        let ratio = self.t_final / self.dt;
        let rounded = ratio.round();
        if (ratio - rounded).abs() <= 1e-9 * ratio.max(1.0) {
            rounded as usize
        } else {
            ratio.ceil() as usize
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Completed,
    BlowupNorm,
    BlowupPhix,
}

/// A point `(phi, phi_t)` of the tangent bundle.
#[derive(Debug, Clone, PartialEq)]
pub struct SprayState {
    pub phi: Diffeomorphism,
    pub phit: Field,
}

impl SprayState {
    pub fn new(phi: Diffeomorphism, phit: Field) -> Result<Self> {
        if phi.grid() != phit.grid() {
            return Err(Error::GridMismatch);
        }
        Ok(Self { phi, phit })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<S> {
    pub params: BParams,
    pub config: SolverConfig,
    pub times: Vec<f64>,
    pub states: Vec<S>,
    pub termination: Termination,
}

impl<S> Trajectory<S> {
    pub fn final_state(&self) -> &S {
        self.states
            .last()
            .expect("trajectory holds the initial state")
    }

    pub fn final_time(&self) -> f64 {
        *self
            .times
            .last()
            .expect("trajectory holds the initial time")
    }

    pub fn completed(&self) -> bool {
        self.termination == Termination::Completed
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

pub type EulerianTrajectory = Trajectory<Field>;
pub type LagrangianTrajectory = Trajectory<SprayState>;
