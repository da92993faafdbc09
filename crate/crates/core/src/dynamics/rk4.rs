use super::{SolverConfig, Termination};
use crate::error::{Error, Result};
use crate::spectral::Field;

pub(crate) trait OdeState: Clone {
    /// `self + a * k`
    fn axpy(&self, a: f64, k: &Self) -> Self;
    fn is_finite(&self) -> bool;
}

impl OdeState for Field {
    fn axpy(&self, a: f64, k: &Self) -> Self {
        Field::axpy(self, a, k)
    }

    fn is_finite(&self) -> bool {
        Field::is_finite(self)
    }
}

impl OdeState for (Field, Field) {
    fn axpy(&self, a: f64, k: &Self) -> Self {
        (self.0.axpy(a, &k.0), self.1.axpy(a, &k.1))
    }

    fn is_finite(&self) -> bool {
        self.0.is_finite() && self.1.is_finite()
    }
}

pub(crate) fn rk4_step<S: OdeState>(y: &S, dt: f64, rhs: &impl Fn(&S) -> Result<S>) -> Result<S> {
    let k1 = rhs(y)?;
    let k2 = rhs(&y.axpy(0.5 * dt, &k1))?;
    let k3 = rhs(&y.axpy(0.5 * dt, &k2))?;
    let k4 = rhs(&y.axpy(dt, &k3))?;
    Ok(y.axpy(dt / 6.0, &k1)
        .axpy(dt / 3.0, &k2)
        .axpy(dt / 3.0, &k3)
        .axpy(dt / 6.0, &k4))
}

pub(crate) struct Integrated<S> {
    pub times: Vec<f64>,
    pub states: Vec<S>,
    pub termination: Termination,
}

/// Fixed-step RK4 from `t = 0` to `config.t_final`.
///
/// `guard` runs after every accepted step; a `Some` stops the run with that
/// termination and keeps the offending state as the last snapshot. A loss of
/// monotonicity inside a stage stops the run with `BlowupPhix` at the last
/// accepted state.
pub(crate) fn integrate<S: OdeState>(
    y0: S,
    config: &SolverConfig,
    rhs: impl Fn(&S) -> Result<S>,
    guard: impl Fn(&S) -> Option<Termination>,
) -> Result<Integrated<S>> {
    config.validate()?;
    let n = config.step_count();
    let mut times = vec![0.0];
    let mut states = vec![y0.clone()];
    let mut y = y0;
    let mut t = 0.0;
    for k in 0..n {
        let t_next = if k + 1 == n {
            config.t_final
        } else {
            (k + 1) as f64 * config.dt
        };
        let next = match rk4_step(&y, t_next - t, &rhs) {
            Ok(next) => next,
            Err(Error::NotMonotone { .. }) | Err(Error::PositivityMargin { .. }) => {
                if *times.last().unwrap() != t {
                    times.push(t);
                    states.push(y);
                }
                return Ok(Integrated {
                    times,
                    states,
                    termination: Termination::BlowupPhix,
                });
            }
            Err(e) => return Err(e),
        };
        if !next.is_finite() {
            return Err(Error::NanDetected { time: t_next });
        }
        y = next;
        t = t_next;
        if let Some(termination) = guard(&y) {
            times.push(t);
            states.push(y);
            return Ok(Integrated {
                times,
                states,
                termination,
            });
        }
        if (k + 1) % config.snapshot_stride == 0 || k + 1 == n {
            times.push(t);
            states.push(y.clone());
        }
    }
    Ok(Integrated {
        times,
        states,
        termination: Termination::Completed,
    })
}
