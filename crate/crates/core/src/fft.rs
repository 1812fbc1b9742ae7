//! Plan cache and the coefficient convention shared by every transform.
//!
//! Samples live on `x_j = -pi + 2 pi j / n`. Coefficients are
//! `c_m = (1/n) sum_j f_j exp(-i m x_j)`, stored in FFT order (index `k`
//! holds mode `k` for `k <= n/2` and mode `k - n` above that). The shift of
//! the grid origin to `-pi` contributes the factor `(-1)^k`.

use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

fn planner() -> &'static Mutex<FftPlanner<f64>> {
    static PLANNER: OnceLock<Mutex<FftPlanner<f64>>> = OnceLock::new();
    PLANNER.get_or_init(|| Mutex::new(FftPlanner::new()))
}

fn plan(n: usize, forward: bool) -> Arc<dyn Fft<f64>> {
    let mut guard = planner().lock().unwrap_or_else(|e| e.into_inner());
    if forward {
        guard.plan_fft_forward(n)
    } else {
        guard.plan_fft_inverse(n)
    }
}

#[inline]
fn origin_sign(k: usize) -> f64 {
    if k % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

pub(crate) fn forward(samples: &[f64]) -> Vec<Complex64> {
    let n = samples.len();
    let mut buf: Vec<Complex64> = samples.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    plan(n, true).process(&mut buf);
    let inv_n = 1.0 / n as f64;
    for (k, c) in buf.iter_mut().enumerate() {
        *c *= origin_sign(k) * inv_n;
    }
    buf
}

pub(crate) fn inverse(coeffs: &[Complex64]) -> Vec<f64> {
    let mut buf: Vec<Complex64> = coeffs
        .iter()
        .enumerate()
        .map(|(k, &c)| c * origin_sign(k))
        .collect();
    plan(buf.len(), false).process(&mut buf);
    buf.into_iter().map(|c| c.re).collect()
}

/// Mode number held at FFT index `k` for an `n`-point grid.
#[inline]
pub(crate) fn mode_of(k: usize, n: usize) -> i64 {
    if k <= n / 2 {
        k as i64
    } else {
        k as i64 - n as i64
    }
}
