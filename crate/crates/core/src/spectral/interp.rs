use std::f64::consts::PI;

use rustfft::num_complex::Complex64;

use super::Field;

/// Trigonometric interpolant of a periodic [`Field`], evaluated by direct
/// summation over the modes (`O(N)` per point, exact for band-limited data).
#[derive(Debug, Clone)]
pub struct TrigInterpolant {
    half_length: f64,
    /// One-sided weights: `c_0`, `2 c_k` for `0 < k < N/2`, and `c_{N/2}`.
    weights: Vec<Complex64>,
}

// Powers of `z` are advanced by multiplication and re-anchored on this stride.
const REANCHOR: usize = 64;

impl TrigInterpolant {
    pub fn new(f: &Field) -> Self {
        let n = f.grid().len();
        let spec = f.spectrum();
        let modes = spec.modes();
        let inv_n = 1.0 / n as f64;
        let half = n / 2;
        let weights = (0..=half)
            .map(|k| {
                let c = modes[k] * inv_n;
                if k == 0 || k == half {
                    c
                } else {
                    c * 2.0
                }
            })
            .collect();
        Self {
            half_length: f.grid().half_length(),
            weights,
        }
    }

    fn phase(&self, y: f64) -> f64 {
        PI * (y + self.half_length) / self.half_length
    }

    pub fn eval(&self, y: f64) -> f64 {
        let theta = self.phase(y);
        let z = Complex64::cis(theta);
        let mut zk = Complex64::new(1.0, 0.0);
        let mut acc = 0.0;
        for (k, w) in self.weights.iter().enumerate() {
            if k % REANCHOR == 0 {
                zk = Complex64::cis(theta * k as f64);
            }
            acc += w.re * zk.re - w.im * zk.im;
            zk *= z;
        }
        acc
    }

    /// Value and first derivative of the interpolant at `y`.
    pub fn eval_with_derivative(&self, y: f64) -> (f64, f64) {
        let theta = self.phase(y);
        let z = Complex64::cis(theta);
        let dk = PI / self.half_length;
        let mut zk = Complex64::new(1.0, 0.0);
        let mut value = 0.0;
        let mut slope = 0.0;
        for (k, w) in self.weights.iter().enumerate() {
            if k % REANCHOR == 0 {
                zk = Complex64::cis(theta * k as f64);
            }
            let term = w * zk;
            value += term.re;
            // Re(i xi_k term) = -xi_k Im(term)
            slope -= dk * k as f64 * term.im;
            zk *= z;
        }
        (value, slope)
    }
}
