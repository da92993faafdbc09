//! Thread-confined FFT plan cache.

use std::cell::RefCell;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Unnormalized forward transform of real samples.
pub(crate) fn forward(values: &[f64]) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let plan = PLANNER.with(|p| p.borrow_mut().plan_fft_forward(buf.len()));
    plan.process(&mut buf);
    buf
}

/// Inverse transform, scaled by `1/N`, keeping the real part.
pub(crate) fn inverse_real(mut modes: Vec<Complex64>) -> Vec<f64> {
    let n = modes.len();
    let plan = PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(n));
    plan.process(&mut modes);
    let scale = 1.0 / n as f64;
    modes.into_iter().map(|c| c.re * scale).collect()
}
