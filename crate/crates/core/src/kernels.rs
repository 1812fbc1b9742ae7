//! Pointwise kernel primitives and their cancellation-safe remainders.
//!
//! With `delta = f(x) - f(x - s)`, `T = tanh(delta / 2)` and `t = tan(s / 2)`,
//! every integrand of the evolution equation is a rational expression in
//! `T`, `t` and values of `f'`, `h'` at `x` and `x - s`.

use std::f64::consts::PI;

use crate::error::{MuskatError, Result};
use crate::field::SpectralField;
use crate::quadrature::{pv_integral, QuadratureRule};

/// Below this magnitude of the argument the remainders are summed from
/// their Taylor series; above it the direct difference loses less than
/// `1e-11` relative accuracy.
const SERIES_THRESHOLD: f64 = 1e-2;

/// `f(x) - f(x - s)` for the trigonometric interpolant of `f`.
pub fn delta(x: f64, s: f64, f: &SpectralField) -> f64 {
    f.eval_at(x) - f.eval_at(x - s)
}

/// `tanh(delta / 2)`, always inside `(-1, 1)`.
pub fn big_t(x: f64, s: f64, f: &SpectralField) -> f64 {
    (0.5 * delta(x, s, f)).tanh()
}

#[inline]
pub fn small_t(s: f64) -> f64 {
    (0.5 * s).tan()
}

/// `tanh(d / 2) - d / 2` without cancellation for small `d`.
pub fn tanh_half_remainder(d: f64) -> f64 {
    let u = 0.5 * d;
    if d.abs() < SERIES_THRESHOLD {
        let u2 = u * u;
        // -u^3/3 + 2u^5/15 - 17u^7/315 + 62u^9/2835
        u * u2 * (-1.0 / 3.0 + u2 * (2.0 / 15.0 + u2 * (-17.0 / 315.0 + u2 * (62.0 / 2835.0))))
    } else {
        u.tanh() - u
    }
}

/// `tan(s / 2) - s / 2` without cancellation for small `s`. The caller
/// guarantees `|s| < pi`.
pub(crate) fn tan_half_remainder_unchecked(s: f64) -> f64 {
    let v = 0.5 * s;
    if s.abs() < SERIES_THRESHOLD {
        let v2 = v * v;
        v * v2 * (1.0 / 3.0 + v2 * (2.0 / 15.0 + v2 * (17.0 / 315.0 + v2 * (62.0 / 2835.0))))
    } else {
        v.tan() - v
    }
}

/// `tanh(delta/2) - delta/2` at `(x, s)`.
pub fn desing_tanh_remainder(x: f64, s: f64, f: &SpectralField) -> f64 {
    tanh_half_remainder(delta(x, s, f))
}

/// `tan(s/2) - s/2`, defined for `|s| < pi`.
pub fn desing_tan_remainder(s: f64) -> Result<f64> {
    if !(s.abs() < PI) {
        return Err(MuskatError::Domain(format!(
            "tan(s/2) - s/2 needs |s| < pi, got s = {s}"
        )));
    }
    Ok(tan_half_remainder_unchecked(s))
}

/// Quadrature value of `PV int (s + f'(x-s) delta) / (s^2 + delta^2) ds`,
/// which vanishes for every periodic `f`: the integrand is
/// `(1/2) d/ds log(s^2 + delta^2)` and the endpoint values coincide.
pub fn cancellation_identity_residual(
    f: &SpectralField,
    x: f64,
    rule: &QuadratureRule,
) -> Result<f64> {
    let df = f.derivative(1);
    let fx = f.eval_at(x);
    pv_integral(
        |s| {
            let d = fx - f.eval_at(x - s);
            (s + df.eval_at(x - s) * d) / (s * s + d * d)
        },
        rule,
    )
}
