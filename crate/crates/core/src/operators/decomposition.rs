use super::{integrate_symmetric, KernelPoint, OperatorWorkspace, PhysicalParams};
use crate::error::Result;
use crate::field::SpectralField;
use crate::kernels::{tan_half_remainder_unchecked, tanh_half_remainder};

fn to_field(ws: &OperatorWorkspace, values: Vec<f64>) -> Result<SpectralField> {
    SpectralField::from_samples(ws.grid(), values)
}

/// `Phi0(f)[h](x) = PV int (h'(x) - h'(x-s)) t / (t^2 + T^2) ds`.
pub fn phi0(f: &SpectralField, h: &SpectralField, ws: &OperatorWorkspace) -> Result<SpectralField> {
    ws.check(f)?;
    ws.check(h)?;
    let dh = h.derivative(1);
    let fx = f.samples();
    let dhx = dh.samples();
    let v = integrate_symmetric(ws.grid(), ws.rule(), &[f, &dh], |j, s, v| {
        let p = KernelPoint::new(fx[j], v[0], s);
        (dhx[j] - v[1]) * p.small_t / p.denom
    })?;
    to_field(ws, v)
}

/// `phi3(f)(x) = PV int (f'(x-s) T + t) / (t^2 + T^2) ds`, evaluated through
/// the bounded splitting `phi3a + phi3b + phi3c / 2`.
///
/// The singular part `(s/2 + f'(x-s) delta/2) / D` is replaced by its
/// difference with `2 (s + f'(x-s) delta) / (s^2 + delta^2)`, whose
/// principal value vanishes. All three integrands are bounded but not
/// periodic in `s`, so the folded Gauss-Legendre rule is used.
pub fn phi3(f: &SpectralField, ws: &OperatorWorkspace) -> Result<SpectralField> {
    ws.check(f)?;
    let df = f.derivative(1);
    let fx = f.samples();
    let v = integrate_symmetric(ws.grid(), ws.desingularized_rule(), &[f, &df], |j, s, v| {
        let p = KernelPoint::new(fx[j], v[0], s);
        let r_big = tanh_half_remainder(p.delta);
        let r_small = tan_half_remainder_unchecked(s);
        let a = v[1] * r_big / p.denom;
        let b = r_small / p.denom;
        // 1/D - 4/(s^2 + delta^2) with both differences of squares factored
        let flat = s * s + p.delta * p.delta;
        let gap = -4.0 * (r_small * (p.small_t + 0.5 * s) + r_big * (p.big_t + 0.5 * p.delta))
            / (p.denom * flat);
        let c = (s + v[1] * p.delta) * gap;
        a + b + 0.5 * c
    })?;
    to_field(ws, v)
}

/// `phi3(f)` straight from its singular definition with the shifted rule.
pub fn phi3_naive(f: &SpectralField, ws: &OperatorWorkspace) -> Result<SpectralField> {
    ws.check(f)?;
    let df = f.derivative(1);
    let fx = f.samples();
    let v = integrate_symmetric(ws.grid(), ws.rule(), &[f, &df], |j, s, v| {
        let p = KernelPoint::new(fx[j], v[0], s);
        (v[1] * p.big_t + p.small_t) / p.denom
    })?;
    to_field(ws, v)
}

/// `Phi1(f)[h] = h' phi3(f)`.
pub fn phi1(f: &SpectralField, h: &SpectralField, ws: &OperatorWorkspace) -> Result<SpectralField> {
    ws.check(h)?;
    ws.product(&h.derivative(1), &phi3(f, ws)?)
}

/// `phi1(f)(x) = int f'(x-s) T t^2 / (t^2 + T^2) ds`.
pub fn phi1_coeff(f: &SpectralField, ws: &OperatorWorkspace) -> Result<SpectralField> {
    ws.check(f)?;
    let df = f.derivative(1);
    let fx = f.samples();
    let v = integrate_symmetric(ws.grid(), ws.rule(), &[f, &df], |j, s, v| {
        let p = KernelPoint::new(fx[j], v[0], s);
        v[1] * p.big_t * p.small_t * p.small_t / p.denom
    })?;
    to_field(ws, v)
}

/// `phi2(f)[h](x) = int h'(x-s) T^2 t / (t^2 + T^2) ds`.
pub fn phi2_op(f: &SpectralField, h: &SpectralField, ws: &OperatorWorkspace) -> Result<SpectralField> {
    ws.check(f)?;
    ws.check(h)?;
    let dh = h.derivative(1);
    let fx = f.samples();
    let v = integrate_symmetric(ws.grid(), ws.rule(), &[f, &dh], |j, s, v| {
        let p = KernelPoint::new(fx[j], v[0], s);
        v[1] * p.big_t * p.big_t * p.small_t / p.denom
    })?;
    to_field(ws, v)
}

/// `Phi2(f)[h] = h' phi1(f) - phi2(f)[h]`.
pub fn phi2(f: &SpectralField, h: &SpectralField, ws: &OperatorWorkspace) -> Result<SpectralField> {
    let first = ws.product(&h.derivative(1), &phi1_coeff(f, ws)?)?;
    Ok(&first - &phi2_op(f, h, ws)?)
}

/// `Phi(f)[h] = Phi0(f)[h] - Phi1(f)[h] - Phi2(f)[h]`, linear in `h`.
pub fn full_phi(f: &SpectralField, h: &SpectralField, ws: &OperatorWorkspace) -> Result<SpectralField> {
    let p0 = phi0(f, h, ws)?;
    let p1 = phi1(f, h, ws)?;
    let p2 = phi2(f, h, ws)?.scale(ws.phi2_sign);
    Ok(&(&p0 - &p1) - &p2)
}

/// `Psi(f) = (k delta_rho / 4 pi mu) Phi(f)[f]`.
pub fn psi(f: &SpectralField, params: &PhysicalParams, ws: &OperatorWorkspace) -> Result<SpectralField> {
    params.validate()?;
    Ok(full_phi(f, f, ws)?.scale(params.rate_constant()))
}
