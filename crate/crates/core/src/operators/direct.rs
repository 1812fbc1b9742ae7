use super::{integrate_symmetric, KernelPoint, OperatorWorkspace, PhysicalParams};
use crate::error::Result;
use crate::field::SpectralField;

/// Right-hand side of the evolution equation evaluated as written:
///
/// `-(k delta_rho / 4 pi mu) [ f'(x) PV int f'(x-s) T (1 + t^2) / D ds
///                             + PV int f'(x-s) t (1 - T^2) / D ds ]`.
pub fn direct_rhs(
    f: &SpectralField,
    params: &PhysicalParams,
    ws: &OperatorWorkspace,
) -> Result<SpectralField> {
    ws.check(f)?;
    params.validate()?;
    let df = f.derivative(1);
    let fx = f.samples();
    let dfx = df.samples();
    let sums = integrate_symmetric(ws.grid(), ws.rule(), &[f, &df], |j, s, v| {
        let p = KernelPoint::new(fx[j], v[0], s);
        let t2 = p.small_t * p.small_t;
        v[1] * (dfx[j] * p.big_t * (1.0 + t2) + p.small_t * (1.0 - p.big_t * p.big_t)) / p.denom
    })?;
    let c = -params.rate_constant();
    SpectralField::from_samples(ws.grid(), sums.into_iter().map(|v| c * v).collect())
}
