//! Uniform periodic grids, sampled fields and Fourier-multiplier operators.
//!
//! Everything here works on the periodic cell `[-L, L)` sampled at
//! `x_j = -L + j h`, `h = 2L / N`. Wavenumbers are `xi_k = pi k / L` for
//! `k = -N/2 .. N/2 - 1`. Transforms are unnormalized in the forward
//! direction; the Sobolev norms carry the `2L / N^2` factor so that the
//! `s = 0` norm coincides with the rectangle-rule `L^2` norm.

mod fft;
mod interp;

use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use interp::TrigInterpolant;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    half_length: f64,
    n_points: usize,
}

impl Grid {
    pub fn new(half_length: f64, n_points: usize) -> Result<Self> {
        if !(half_length.is_finite() && half_length > 0.0) {
            return Err(Error::InvalidHalfLength(half_length));
        }
        if n_points < 16 || !n_points.is_power_of_two() {
            return Err(Error::InvalidPointCount(n_points));
        }
        Ok(Self {
            half_length,
            n_points,
        })
    }

    /// `L`, half the period.
    pub fn half_length(&self) -> f64 {
        self.half_length
    }

    pub fn period(&self) -> f64 {
        2.0 * self.half_length
    }

    pub fn len(&self) -> usize {
        self.n_points
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        self.period() / self.n_points as f64
    }

    pub fn x(&self, j: usize) -> f64 {
        -self.half_length + j as f64 * self.spacing()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n_points).map(|j| self.x(j)).collect()
    }

    /// Signed integer mode number of FFT slot `i`.
    pub fn mode_number(&self, i: usize) -> i64 {
        let n = self.n_points as i64;
        let i = i as i64;
        if i < n / 2 {
            i
        } else {
            i - n
        }
    }

    /// Angular wavenumber `xi = pi k / L` of FFT slot `i`.
    pub fn wavenumber(&self, i: usize) -> f64 {
        PI * self.mode_number(i) as f64 / self.half_length
    }

    /// Largest `|k|` kept by the 2/3 truncation.
    pub fn dealias_cutoff(&self) -> i64 {
        (self.n_points / 3) as i64
    }

    /// Same grid with twice the points.
    pub fn refined(&self) -> Self {
        Self {
            half_length: self.half_length,
            n_points: 2 * self.n_points,
        }
    }
}

/// Point samples of a real function on a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { grid, values })
    }

    /// Internal constructor for values produced by our own operators.
    pub(crate) fn from_raw(grid: Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn zeros(grid: Grid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        Self::from_raw(grid, vec![c; grid.len()])
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Self {
        Self::from_raw(grid, grid.points().into_iter().map(f).collect())
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Rectangle-rule `L^2` norm.
    pub fn l2_norm(&self) -> f64 {
        (self.grid.spacing() * self.values.iter().map(|v| v * v).sum::<f64>()).sqrt()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Self::from_raw(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    /// Pointwise combination; panics when the grids differ.
    pub fn zip_with(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Field {
        assert_eq!(self.grid, other.grid, "fields live on different grids");
        Self::from_raw(
            self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }

    pub fn checked_zip_with(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Result<Field> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(self.zip_with(other, f))
    }

    /// `self + a * other`.
    pub fn axpy(&self, a: f64, other: &Field) -> Field {
        self.zip_with(other, |x, y| x + a * y)
    }

    pub fn spectrum(&self) -> SpectralCoeffs {
        SpectralCoeffs {
            grid: self.grid,
            modes: fft::forward(&self.values),
        }
    }

    /// Circular shift by `m` grid cells: `out[j] = self[j + m]`.
    pub fn shifted(&self, m: isize) -> Field {
        let n = self.grid.len() as isize;
        Self::from_raw(
            self.grid,
            (0..n)
                .map(|j| self.values[(j + m).rem_euclid(n) as usize])
                .collect(),
        )
    }
}

impl Add for &Field {
    type Output = Field;
    fn add(self, rhs: &Field) -> Field {
        self.zip_with(rhs, |a, b| a + b)
    }
}

impl Sub for &Field {
    type Output = Field;
    fn sub(self, rhs: &Field) -> Field {
        self.zip_with(rhs, |a, b| a - b)
    }
}

impl Mul<f64> for &Field {
    type Output = Field;
    fn mul(self, rhs: f64) -> Field {
        self.map(|v| v * rhs)
    }
}

impl Neg for &Field {
    type Output = Field;
    fn neg(self) -> Field {
        self.map(|v| -v)
    }
}

/// Discrete Fourier coefficients of a real [`Field`], stored in FFT order.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralCoeffs {
    grid: Grid,
    modes: Vec<Complex64>,
}

impl SpectralCoeffs {
    pub(crate) fn from_modes(grid: Grid, modes: Vec<Complex64>) -> Self {
        debug_assert_eq!(modes.len(), grid.len());
        Self { grid, modes }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn modes(&self) -> &[Complex64] {
        &self.modes
    }

    /// Coefficient for signed mode number `k` in `-N/2 ..= N/2 - 1`.
    pub fn mode(&self, k: i64) -> Complex64 {
        let n = self.grid.len() as i64;
        self.modes[k.rem_euclid(n) as usize]
    }

    /// Multiplies every mode by `symbol(xi, k)`.
    pub fn apply(mut self, symbol: impl Fn(f64, i64) -> Complex64) -> Self {
        for (i, m) in self.modes.iter_mut().enumerate() {
            *m *= symbol(self.grid.wavenumber(i), self.grid.mode_number(i));
        }
        self
    }

    pub fn to_field(self) -> Field {
        Field::from_raw(self.grid, fft::inverse_real(self.modes))
    }

    /// `sum_k weight(xi_k) |c_k|^2`, scaled so the unit weight gives `||f||_{L^2}^2`.
    fn weighted_energy(&self, weight: impl Fn(f64) -> f64) -> f64 {
        let n = self.grid.len() as f64;
        let scale = self.grid.period() / (n * n);
        let sum: f64 = self
            .modes
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let w = weight(self.grid.wavenumber(i));
                if w == 0.0 {
                    0.0
                } else {
                    w * c.norm_sqr()
                }
            })
            .sum();
        scale * sum
    }
}

/// `(i xi)^k` applied spectrally, `k` in `{1, 2, 3}`. Odd orders drop the
/// Nyquist mode so the result stays real.
pub fn derivative(f: &Field, k: u32) -> Result<Field> {
    if !(1..=3).contains(&k) {
        return Err(Error::InvalidDerivativeOrder(k));
    }
    Ok(derivative_unchecked(f, k))
}

pub(crate) fn derivative_unchecked(f: &Field, k: u32) -> Field {
    let nyquist = -(f.grid.len() as i64) / 2;
    f.spectrum()
        .apply(|xi, m| {
            if k % 2 == 1 && m == nyquist {
                return Complex64::new(0.0, 0.0);
            }
            match k {
                1 => Complex64::new(0.0, xi),
                2 => Complex64::new(-xi * xi, 0.0),
                _ => Complex64::new(0.0, -xi * xi * xi),
            }
        })
        .to_field()
}

/// First and second derivatives from a single forward transform.
pub(crate) fn first_two_derivatives(f: &Field) -> (Field, Field) {
    let spec = f.spectrum();
    let nyquist = -(f.grid.len() as i64) / 2;
    let d1 = spec
        .clone()
        .apply(|xi, m| {
            if m == nyquist {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(0.0, xi)
            }
        })
        .to_field();
    let d2 = spec.apply(|xi, _| Complex64::new(-xi * xi, 0.0)).to_field();
    (d1, d2)
}

/// `(1 - d_x^2)^{-1}`, the multiplier `1 / (1 + xi^2)`.
pub fn helmholtz_inverse(f: &Field) -> Field {
    f.spectrum()
        .apply(|xi, _| Complex64::new(1.0 / (1.0 + xi * xi), 0.0))
        .to_field()
}

/// `(1 - d_x^2)`, the multiplier `1 + xi^2`.
pub fn helmholtz(f: &Field) -> Field {
    f.spectrum()
        .apply(|xi, _| Complex64::new(1.0 + xi * xi, 0.0))
        .to_field()
}

/// Zeroes every mode with `|k| > N/3`.
pub fn dealias(f: &Field) -> Field {
    let cutoff = f.grid.dealias_cutoff();
    f.spectrum()
        .apply(|_, m| {
            if m.abs() > cutoff {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(1.0, 0.0)
            }
        })
        .to_field()
}

/// Pointwise product. With `dealias` both factors and the product are
/// truncated to `|k| <= N/3`, which removes every aliased contribution.
pub fn multiply(f: &Field, g: &Field, dealias_product: bool) -> Result<Field> {
    if f.grid != g.grid {
        return Err(Error::GridMismatch);
    }
    if !dealias_product {
        return Ok(f.zip_with(g, |a, b| a * b));
    }
    let raw = dealias(f).zip_with(&dealias(g), |a, b| a * b);
    Ok(dealias(&raw))
}

/// Inhomogeneous Sobolev norm `(sum (1 + xi^2)^s |f_hat|^2)^{1/2}`.
pub fn hs_norm(f: &Field, s: f64) -> f64 {
    f.spectrum()
        .weighted_energy(|xi| (1.0 + xi * xi).powf(s))
        .sqrt()
}

/// Homogeneous Sobolev norm over the nonzero modes.
pub fn homogeneous_hs_norm(f: &Field, s: f64) -> f64 {
    f.spectrum()
        .weighted_energy(|xi| {
            if xi == 0.0 {
                0.0
            } else {
                xi.abs().powf(2.0 * s)
            }
        })
        .sqrt()
}

/// Midpoint-rule Sobolev–Slobodeckij seminorm
/// `(iint |f(x) - f(y)|^2 / |x - y|^{1 + 2 lambda} dx dy)^{1/2}` over the
/// periodic cell, using periodic distance and skipping the diagonal.
///
/// This is an `O(N^2)` oracle for [`homogeneous_hs_norm`], not a hot path.
pub fn slobodeckij_seminorm(f: &Field, lambda: f64) -> Result<f64> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::InvalidSeminormOrder(lambda));
    }
    let n = f.grid.len();
    let h = f.grid.spacing();
    let exponent = 1.0 + 2.0 * lambda;
    // The kernel only depends on the periodic index distance.
    let kernel: Vec<f64> = (0..n)
        .map(|d| {
            let d = d.min(n - d);
            if d == 0 {
                0.0
            } else {
                (d as f64 * h).powf(-exponent)
            }
        })
        .collect();
    let v = &f.values;
    let mut total = 0.0;
    for i in 0..n {
        let fi = v[i];
        let mut row = 0.0;
        for j in (i + 1)..n {
            let diff = fi - v[j];
            row += diff * diff * kernel[j - i];
        }
        total += row;
    }
    Ok((2.0 * total * h * h).sqrt())
}
