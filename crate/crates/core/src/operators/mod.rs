//! Nonlocal operators of the contour-integral formulation.
//!
//! [`direct_rhs`] evaluates the right-hand side of the evolution equation as
//! written. [`full_phi`] evaluates the same quantity through the quasilinear
//! decomposition `Phi(f)[h] = Phi0(f)[h] - Phi1(f)[h] - Phi2(f)[h]`, and
//! [`freeze_coefficients`] produces the coefficients of the model Fourier
//! multipliers that approximate `Phi(f)` locally.

mod coefficients;
mod decomposition;
mod direct;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{MuskatError, Result};
use crate::field::SpectralField;
use crate::grid::Grid;
use crate::parallel::map_range;
use crate::quadrature::QuadratureRule;

pub use coefficients::{
    freeze_coefficients, multiplier_aab, phi4, phi5, phi6, phi_a, phi_b, phi_c, phi0_split,
};
pub use decomposition::{
    full_phi, phi0, phi1, phi1_coeff, phi2, phi2_op, phi3, phi3_naive, psi,
};
pub use direct::direct_rhs;

/// Permeability, viscosity, densities and gravity of the two-phase system.
///
/// `rho_minus` is the density of the lower fluid. The evolution is parabolic
/// only when the lower fluid is heavier, `g (rho_minus - rho_plus) > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicalParams {
    pub k: f64,
    pub mu: f64,
    pub rho_minus: f64,
    pub rho_plus: f64,
    pub g: f64,
}

impl PhysicalParams {
    pub fn new(k: f64, mu: f64, rho_minus: f64, rho_plus: f64, g: f64) -> Result<Self> {
        let params = Self { k, mu, rho_minus, rho_plus, g };
        params.validate()?;
        Ok(params)
    }

    /// Parameters with unit gravity, `rho_plus = 0` and the given density
    /// contrast `delta_rho = g (rho_minus - rho_plus)`.
    pub fn from_contrast(k: f64, mu: f64, delta_rho: f64) -> Result<Self> {
        Self::new(k, mu, delta_rho, 0.0, 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("k", self.k), ("mu", self.mu), ("g", self.g)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(MuskatError::Parameter(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [("rho_minus", self.rho_minus), ("rho_plus", self.rho_plus)] {
            if !v.is_finite() {
                return Err(MuskatError::Parameter(format!("{name} must be finite, got {v}")));
            }
        }
        let delta_rho = self.delta_rho();
        if !(delta_rho > 0.0) {
            return Err(MuskatError::RayleighTaylor { delta_rho });
        }
        Ok(())
    }

    #[inline]
    pub fn delta_rho(&self) -> f64 {
        self.g * (self.rho_minus - self.rho_plus)
    }

    /// `k delta_rho / (4 pi mu)`, the factor in front of `Phi(f)[f]`.
    #[inline]
    pub fn rate_constant(&self) -> f64 {
        self.k * self.delta_rho() / (4.0 * PI * self.mu)
    }

    /// `k delta_rho / (2 mu)`, the decay rate of the first mode at `f = 0`.
    #[inline]
    pub fn linear_rate(&self) -> f64 {
        self.k * self.delta_rho() / (2.0 * self.mu)
    }
}

/// Grid, quadrature rules and product padding shared by operator calls.
///
/// `rule` (shifted midpoint) serves the periodic integrands; `desingularized`
/// (folded Gauss-Legendre) serves the split integrands that are smooth but
/// not periodic in `s`.
#[derive(Debug, Clone)]
pub struct OperatorWorkspace {
    grid: Grid,
    rule: QuadratureRule,
    desingularized: QuadratureRule,
    padding_factor: f64,
    phi2_sign: f64,
}

impl OperatorWorkspace {
    pub fn new(grid: Grid) -> Result<Self> {
        let n = grid.n_points();
        Ok(Self {
            grid,
            rule: QuadratureRule::shifted_symmetric(n)?,
            desingularized: QuadratureRule::desingularized(n)?,
            padding_factor: 1.5,
            phi2_sign: 1.0,
        })
    }

    pub fn with_rule(mut self, rule: QuadratureRule) -> Self {
        self.rule = rule;
        self
    }

    pub fn with_desingularized_rule(mut self, rule: QuadratureRule) -> Self {
        self.desingularized = rule;
        self
    }

    pub fn with_padding_factor(mut self, padding_factor: f64) -> Result<Self> {
        if !(padding_factor.is_finite() && padding_factor >= 1.0) {
            return Err(MuskatError::Parameter(format!(
                "padding factor must be >= 1, got {padding_factor}"
            )));
        }
        self.padding_factor = padding_factor;
        Ok(self)
    }

    /// Flips the sign of `Phi2` inside [`full_phi`]. Exists only so the
    /// verification suite can prove that it detects a corrupted operator.
    #[doc(hidden)]
    pub fn with_injected_phi2_sign_fault(mut self) -> Self {
        self.phi2_sign = -1.0;
        self
    }

    #[inline]
    pub fn grid(&self) -> Grid {
        self.grid
    }

    #[inline]
    pub fn rule(&self) -> &QuadratureRule {
        &self.rule
    }

    #[inline]
    pub fn desingularized_rule(&self) -> &QuadratureRule {
        &self.desingularized
    }

    #[inline]
    pub fn padding_factor(&self) -> f64 {
        self.padding_factor
    }

    pub(crate) fn check(&self, field: &SpectralField) -> Result<()> {
        if field.grid() != self.grid {
            return Err(MuskatError::GridMismatch {
                expected: self.grid.n_points(),
                got: field.len(),
            });
        }
        Ok(())
    }

    pub(crate) fn product(&self, a: &SpectralField, b: &SpectralField) -> Result<SpectralField> {
        a.dealiased_product(b, self.padding_factor)
    }
}

pub(crate) const MAX_SOURCES: usize = 4;
const CHUNKS: usize = 64;

/// Positive-offset nodes of a symmetric rule with their weights.
pub(crate) fn positive_nodes(rule: &QuadratureRule) -> Vec<(f64, f64)> {
    let half = rule.m_nodes() / 2;
    rule.nodes().skip(half).collect()
}

/// For every grid point `x_j` returns `sum_q w_q kernel(j, o_q, plus, minus)`
/// where `plus[i] = sources[i](x_j - o_q)` and `minus[i] = sources[i](x_j + o_q)`.
///
/// Nodes are split into a fixed number of contiguous chunks whose partial
/// sums are added in order, so the result does not depend on thread count.
pub(crate) fn integrate_pairs<K>(
    grid: Grid,
    nodes: &[(f64, f64)],
    sources: &[&SpectralField],
    kernel: K,
) -> Result<Vec<f64>>
where
    K: Fn(usize, f64, &[f64], &[f64]) -> f64 + Sync + Send,
{
    assert!(sources.len() <= MAX_SOURCES);
    let n = grid.n_points();
    let chunk = nodes.len().div_ceil(CHUNKS).max(1);
    let n_chunks = nodes.len().div_ceil(chunk);
    let partials = map_range(n_chunks, |c| {
        let mut acc = vec![0.0; n];
        let mut plus = [0.0; MAX_SOURCES];
        let mut minus = [0.0; MAX_SOURCES];
        for &(o, w) in &nodes[c * chunk..((c + 1) * chunk).min(nodes.len())] {
            let shifted_plus: Vec<Vec<f64>> = sources.iter().map(|f| f.shifted_samples(o)).collect();
            let shifted_minus: Vec<Vec<f64>> =
                sources.iter().map(|f| f.shifted_samples(-o)).collect();
            for (j, a) in acc.iter_mut().enumerate() {
                for i in 0..sources.len() {
                    plus[i] = shifted_plus[i][j];
                    minus[i] = shifted_minus[i][j];
                }
                *a += w * kernel(j, o, &plus[..sources.len()], &minus[..sources.len()]);
            }
        }
        acc
    });
    let mut total = vec![0.0; n];
    for part in partials {
        for (t, p) in total.iter_mut().zip(part) {
            *t += p;
        }
    }
    if let Some(j) = total.iter().position(|v| !v.is_finite()) {
        return Err(MuskatError::NonFiniteValue { x: grid.node(j) });
    }
    Ok(total)
}

/// [`integrate_pairs`] over a symmetric rule with a kernel that is evaluated
/// separately at `s` and `-s`.
pub(crate) fn integrate_symmetric<K>(
    grid: Grid,
    rule: &QuadratureRule,
    sources: &[&SpectralField],
    kernel: K,
) -> Result<Vec<f64>>
where
    K: Fn(usize, f64, &[f64]) -> f64 + Sync + Send,
{
    let nodes = positive_nodes(rule);
    integrate_pairs(grid, &nodes, sources, |j, s, plus, minus| {
        kernel(j, s, plus) + kernel(j, -s, minus)
    })
}

/// Values `delta`, `T`, `t` and `D = t^2 + T^2` at a node.
#[derive(Debug, Clone, Copy)]
pub(crate) struct KernelPoint {
    pub delta: f64,
    pub big_t: f64,
    pub small_t: f64,
    pub denom: f64,
}

impl KernelPoint {
    #[inline]
    pub fn new(f_x: f64, f_shifted: f64, s: f64) -> Self {
        let delta = f_x - f_shifted;
        let big_t = (0.5 * delta).tanh();
        let small_t = (0.5 * s).tan();
        Self {
            delta,
            big_t,
            small_t,
            denom: small_t * small_t + big_t * big_t,
        }
    }
}

#[cfg(test)]
pub(crate) mod test_support {
    use super::*;

    pub fn unit_params() -> PhysicalParams {
        PhysicalParams::from_contrast(1.0, 1.0, 1.0).unwrap()
    }

    pub fn workspace(n: usize) -> OperatorWorkspace {
        OperatorWorkspace::new(Grid::new(n).unwrap()).unwrap()
    }

    pub fn field(n: usize, f: impl Fn(f64) -> f64) -> SpectralField {
        SpectralField::from_fn(Grid::new(n).unwrap(), f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn params_validation() {
        let p = PhysicalParams::new(1.0, 2.0, 3.0, 1.0, 9.81).unwrap();
        assert!((p.delta_rho() - 2.0 * 9.81).abs() < 1e-12);
        assert!((p.linear_rate() - 9.81 / 2.0).abs() < 1e-12);
        assert!((p.rate_constant() - 2.0 * 9.81 / (8.0 * PI)).abs() < 1e-12);
        assert!(matches!(
            PhysicalParams::new(1.0, 1.0, 1.0, 2.0, 1.0),
            Err(MuskatError::RayleighTaylor { .. })
        ));
        assert!(matches!(
            PhysicalParams::new(1.0, 1.0, 1.0, 1.0, 1.0),
            Err(MuskatError::RayleighTaylor { .. })
        ));
        assert!(PhysicalParams::new(0.0, 1.0, 2.0, 1.0, 1.0).is_err());
        assert!(PhysicalParams::new(1.0, -1.0, 2.0, 1.0, 1.0).is_err());
        assert!(PhysicalParams::new(1.0, 1.0, f64::NAN, 1.0, 1.0).is_err());
    }

    #[test]
    fn workspace_rejects_foreign_grid_and_bad_padding() {
        let ws = test_support::workspace(32);
        let f = test_support::field(64, f64::cos);
        assert!(matches!(ws.check(&f), Err(MuskatError::GridMismatch { .. })));
        assert!(ws.clone().with_padding_factor(0.5).is_err());
    }

    #[test]
    fn engine_is_independent_of_chunking_and_exact_for_constants() {
        let grid = Grid::new(16).unwrap();
        let rule = QuadratureRule::shifted_symmetric(16).unwrap();
        let one = SpectralField::constant(grid, 1.0);
        let v = integrate_symmetric(grid, &rule, &[&one], |_, _, p| p[0]).unwrap();
        for x in v {
            assert!((x - 2.0 * PI).abs() < 1e-13);
        }
    }

    #[test]
    fn engine_reports_non_finite_location() {
        let grid = Grid::new(16).unwrap();
        let rule = QuadratureRule::shifted_symmetric(16).unwrap();
        let f = SpectralField::zeros(grid);
        let err = integrate_symmetric(grid, &rule, &[&f], |j, _, _| if j == 3 { f64::NAN } else { 0.0 })
            .unwrap_err();
        assert_eq!(err, MuskatError::NonFiniteValue { x: grid.node(3) });
    }
}
