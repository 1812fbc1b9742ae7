use std::f64::consts::PI;

use num_complex::Complex64;

use super::{
    integrate_pairs, integrate_symmetric, phi1_coeff, phi3, positive_nodes, KernelPoint,
    OperatorWorkspace,
};
use crate::error::{MuskatError, Result};
use crate::field::SpectralField;
use crate::kernels::{tan_half_remainder_unchecked, tanh_half_remainder};
use crate::quadrature::gauss_legendre;
use crate::special::digamma;

/// `t / D - 2 s / (s^2 + delta^2)` with the `1/s` parts cancelled
/// algebraically; bounded near `s = 0`.
#[inline]
fn periodic_minus_flat(p: &KernelPoint, s: f64) -> f64 {
    let r_small = tan_half_remainder_unchecked(s);
    let r_big = tanh_half_remainder(p.delta);
    let d2 = p.delta * p.delta;
    (r_small * (d2 - 2.0 * s * p.small_t) - 2.0 * s * r_big * (p.big_t + 0.5 * p.delta))
        / (p.denom * (s * s + d2))
}

/// `phi4(f)(x) = int [t / D - 2 s / (s^2 + delta^2)] ds`.
pub fn phi4(f: &SpectralField, ws: &OperatorWorkspace) -> Result<SpectralField> {
    ws.check(f)?;
    let fx = f.samples();
    let v = integrate_symmetric(ws.grid(), ws.desingularized_rule(), &[f], |j, s, v| {
        periodic_minus_flat(&KernelPoint::new(fx[j], v[0], s), s)
    })?;
    SpectralField::from_samples(ws.grid(), v)
}

/// `phi6(f)(x) = PV int_{-pi}^{pi} s / (s^2 + delta^2) ds`, with the two
/// halves folded into the bounded integrand
/// `s (delta_-^2 - delta_+^2) / ((s^2 + delta_+^2)(s^2 + delta_-^2))`.
pub fn phi6(f: &SpectralField, ws: &OperatorWorkspace) -> Result<SpectralField> {
    ws.check(f)?;
    let fx = f.samples();
    let nodes = positive_nodes(ws.desingularized_rule());
    let v = integrate_pairs(ws.grid(), &nodes, &[f], |j, s, plus, minus| {
        folded_flat_kernel(fx[j], plus[0], minus[0], s)
    })?;
    SpectralField::from_samples(ws.grid(), v)
}

#[inline]
fn folded_flat_kernel(f_x: f64, f_behind: f64, f_ahead: f64, s: f64) -> f64 {
    let d_plus = f_x - f_behind;
    let d_minus = f_x - f_ahead;
    let diff_sq = (f_behind - f_ahead) * (2.0 * f_x - f_behind - f_ahead);
    s * diff_sq / ((s * s + d_plus * d_plus) * (s * s + d_minus * d_minus))
}

/// `phi5(f)(x) = PV int_{|s| > pi} s / (s^2 + delta^2) ds` for the periodic
/// extension of `f`.
///
/// Writing `s = pi + sigma + 2 pi k` the sum over `k` is a difference of
/// digamma values, leaving a smooth integral over one period:
/// `int_0^{2pi} (1/2pi) Re[psi((pi + sigma + i delta_-)/2pi) - psi((pi + sigma + i delta_+)/2pi)] dsigma`.
pub fn phi5(f: &SpectralField, ws: &OperatorWorkspace) -> Result<SpectralField> {
    ws.check(f)?;
    let fx = f.samples();
    let (x, w) = gauss_legendre(ws.desingularized_rule().m_nodes());
    // offsets pi + sigma with sigma in (0, 2pi)
    let nodes: Vec<(f64, f64)> = x.iter().zip(&w).map(|(x, w)| (PI * (x + 2.0), PI * w)).collect();
    let v = integrate_pairs(ws.grid(), &nodes, &[f], |j, offset, plus, minus| {
        let scale = 0.5 / PI;
        let z_plus = Complex64::new(offset, fx[j] - plus[0]) * scale;
        let z_minus = Complex64::new(offset, fx[j] - minus[0]) * scale;
        scale * (digamma(z_minus) - digamma(z_plus)).re
    })?;
    SpectralField::from_samples(ws.grid(), v)
}

/// `Phi_a(f)[h] = h' phi4(f)`.
pub fn phi_a(f: &SpectralField, h: &SpectralField, ws: &OperatorWorkspace) -> Result<SpectralField> {
    ws.check(h)?;
    ws.product(&h.derivative(1), &phi4(f, ws)?)
}

/// `Phi_b(f)[h](x) = int h'(x-s) [t / D - 2 s / (s^2 + delta^2)] ds`.
pub fn phi_b(f: &SpectralField, h: &SpectralField, ws: &OperatorWorkspace) -> Result<SpectralField> {
    ws.check(f)?;
    ws.check(h)?;
    let dh = h.derivative(1);
    let fx = f.samples();
    let v = integrate_symmetric(ws.grid(), ws.desingularized_rule(), &[f, &dh], |j, s, v| {
        v[1] * periodic_minus_flat(&KernelPoint::new(fx[j], v[0], s), s)
    })?;
    SpectralField::from_samples(ws.grid(), v)
}

/// `Phi_c(f)[h](x) = PV int (h'(x) - h'(x-s)) s / (s^2 + delta^2) ds`.
pub fn phi_c(f: &SpectralField, h: &SpectralField, ws: &OperatorWorkspace) -> Result<SpectralField> {
    ws.check(f)?;
    ws.check(h)?;
    let dh = h.derivative(1);
    let fx = f.samples();
    let dhx = dh.samples();
    let v = integrate_symmetric(ws.grid(), ws.desingularized_rule(), &[f, &dh], |j, s, v| {
        let d = fx[j] - v[0];
        (dhx[j] - v[1]) * s / (s * s + d * d)
    })?;
    SpectralField::from_samples(ws.grid(), v)
}

/// `Phi0` assembled as `Phi_a - Phi_b + 2 Phi_c`, an independent route to
/// [`super::phi0`].
pub fn phi0_split(f: &SpectralField, h: &SpectralField, ws: &OperatorWorkspace) -> Result<SpectralField> {
    let a = phi_a(f, h, ws)?;
    let b = phi_b(f, h, ws)?;
    let c = phi_c(f, h, ws)?;
    Ok(&(&a - &b) + &c.scale(2.0))
}

/// Frozen-coefficient fields `a_tau = phi4 + 2 phi6 - phi1 - phi3` at `tau f`
/// and `b_tau = 2 pi / (1 + tau^2 f'^2)`.
pub fn freeze_coefficients(
    f: &SpectralField,
    tau: f64,
    ws: &OperatorWorkspace,
) -> Result<(SpectralField, SpectralField)> {
    if !(0.0..=1.0).contains(&tau) {
        return Err(MuskatError::Parameter(format!("tau must lie in [0, 1], got {tau}")));
    }
    ws.check(f)?;
    let g = f.scale(tau);
    let a = &(&phi4(&g, ws)? + &phi6(&g, ws)?.scale(2.0)) - &(&phi1_coeff(&g, ws)? + &phi3(&g, ws)?);
    let dg = g.derivative(1);
    let b = dg.map(|d| 2.0 * PI / (1.0 + d * d));
    Ok((a, b))
}

/// The Fourier multiplier `a d/dx - b (-d^2/dx^2)^{1/2}`, symbol `i a m - b |m|`.
pub fn multiplier_aab(a: f64, b: f64, h: &SpectralField) -> Result<SpectralField> {
    if !(b > 0.0 && b.is_finite() && a.is_finite()) {
        return Err(MuskatError::Parameter(format!(
            "multiplier needs finite a and b > 0, got a = {a}, b = {b}"
        )));
    }
    Ok(h.apply_symbol(|m| Complex64::new(-b * m.unsigned_abs() as f64, a * m as f64)))
}

#[cfg(test)]
mod tests {
    use super::super::test_support::*;
    use super::super::{full_phi, phi0};
    use super::*;
    use crate::field::trig_mode;
    use crate::quadrature::QuadratureRule;

    #[test]
    fn coefficients_vanish_at_zero() {
        let ws = workspace(32);
        let zero = field(32, |_| 0.0);
        assert!(phi4(&zero, &ws).unwrap().max_abs() < 1e-14);
        assert_eq!(phi6(&zero, &ws).unwrap().max_abs(), 0.0);
        assert_eq!(phi5(&zero, &ws).unwrap().max_abs(), 0.0);
        let (a, b) = freeze_coefficients(&zero, 1.0, &ws).unwrap();
        assert!(a.max_abs() < 1e-14);
        assert!(b.samples().iter().all(|&v| (v - 2.0 * PI).abs() < 1e-15));
    }

    #[test]
    fn frozen_coefficients_of_a_cosine() {
        let ws = workspace(64);
        let f = field(64, |x| 0.5 * x.cos());
        let (a0, b0) = freeze_coefficients(&f, 0.0, &ws).unwrap();
        assert!(a0.max_abs() < 1e-14);
        assert!(b0.samples().iter().all(|&v| (v - 2.0 * PI).abs() < 1e-15));
        let (a, b) = freeze_coefficients(&f, 1.0, &ws).unwrap();
        let expected_b = field(64, |x| 2.0 * PI / (1.0 + 0.25 * x.sin().powi(2)));
        assert!(b.max_abs_diff(&expected_b) < 1e-13);
        let fine = ws.clone().with_desingularized_rule(QuadratureRule::desingularized(256).unwrap())
            .with_rule(QuadratureRule::shifted_symmetric(128).unwrap());
        let (a_fine, _) = freeze_coefficients(&f, 1.0, &fine).unwrap();
        assert!(a.max_abs_diff(&a_fine) < 1e-9);
        assert!(freeze_coefficients(&f, 1.5, &ws).is_err());
    }

    #[test]
    fn phi5_matches_brute_force_tail_sum() {
        let n = 32;
        let ws = workspace(n);
        let f = field(n, |x| 0.5 * x.cos());
        let fast = phi5(&f, &ws).unwrap();
        let fine = ws.clone().with_desingularized_rule(QuadratureRule::desingularized(64).unwrap());
        assert!(fast.max_abs_diff(&phi5(&f, &fine).unwrap()) < 1e-9);
        // period-by-period Gauss-Legendre over [pi, pi + 2 pi K]
        let (gx, gw) = gauss_legendre(48);
        for j in [0, 5, 11, 20] {
            let x = ws.grid().node(j);
            let fx = f.eval_at(x);
            let mut total = 0.0;
            for k in 0..4000 {
                let lo = PI + 2.0 * PI * k as f64;
                for (t, w) in gx.iter().zip(&gw) {
                    let s = lo + PI * (t + 1.0);
                    total += PI * w * folded_flat_kernel(fx, f.eval_at(x - s), f.eval_at(x + s), s);
                }
            }
            assert!((total - fast.samples()[j]).abs() < 1e-9, "j = {j}: {total} vs {}", fast.samples()[j]);
        }
    }

    #[test]
    fn phi6_folding_matches_pairwise_pv() {
        let ws = workspace(64);
        let f = field(64, |x| 0.4 * x.cos() - 0.2 * (2.0 * x).sin());
        let folded = phi6(&f, &ws).unwrap();
        let fx = f.samples();
        let naive = integrate_symmetric(ws.grid(), ws.desingularized_rule(), &[&f], |j, s, v| {
            let d = fx[j] - v[0];
            s / (s * s + d * d)
        })
        .unwrap();
        for (a, b) in folded.samples().iter().zip(&naive) {
            assert!((a - b).abs() < 1e-11);
        }
    }

    #[test]
    fn split_phi0_agrees_with_direct_phi0() {
        let ws = workspace(128);
        let f = field(128, |x| 0.5 * x.cos() + 0.1 * (2.0 * x).sin());
        let h = field(128, |x| x.sin() + 0.3 * (3.0 * x).cos());
        let direct = phi0(&f, &h, &ws).unwrap();
        let split = phi0_split(&f, &h, &ws).unwrap();
        assert!(direct.max_abs_diff(&split) < 1e-9, "{}", direct.max_abs_diff(&split));
    }

    #[test]
    fn multiplier_identities() {
        let ws = workspace(64);
        let zero = field(64, |_| 0.0);
        for m in [-5i64, -1, 0, 2, 7] {
            let e = trig_mode(ws.grid(), m);
            let model = multiplier_aab(0.0, 2.0 * PI, &e).unwrap();
            assert!(model.max_abs_diff(&full_phi(&zero, &e, &ws).unwrap()) < 1e-10);
        }
        // cos x -> -cos x - sin x under a = b = 1
        let got = multiplier_aab(1.0, 1.0, &field(64, f64::cos)).unwrap();
        assert!(got.max_abs_diff(&field(64, |x| -x.cos() - x.sin())) < 1e-14);
        assert!((got.coeff(1).re + 0.5).abs() < 1e-15 && (got.coeff(1).im - 0.5).abs() < 1e-15);
        assert!(multiplier_aab(0.3, 1.0, &field(64, |_| 4.0)).unwrap().max_abs() < 1e-15);
        assert!(multiplier_aab(0.0, 0.0, &zero).is_err());
        assert!(multiplier_aab(0.0, -1.0, &zero).is_err());
    }
}
