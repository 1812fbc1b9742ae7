//! Node/weight layouts for integrals over `s in (-pi, pi)` that may carry a
//! principal-value singularity at `s = 0`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{MuskatError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SingularityHandling {
    /// Uniform midpoint offsets `s_k = -pi + (k + 1/2) 2pi/m`. Spectrally
    /// accurate for periodic integrands; the odd `1/s` part cancels pairwise.
    ShiftedSymmetric,
    /// Gauss-Legendre on `(0, pi)` mirrored to `(-pi, 0)`. Exponentially
    /// accurate for integrands that are smooth on `[-pi, pi]` away from an
    /// odd singularity at zero but not periodic.
    Desingularized,
}

/// Symmetric quadrature rule on `(-pi, pi)` that never samples `s = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    m_nodes: usize,
    handling: SingularityHandling,
    offsets: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn new(m_nodes: usize, handling: SingularityHandling) -> Result<Self> {
        if m_nodes == 0 || m_nodes % 2 != 0 {
            return Err(MuskatError::Parameter(format!(
                "quadrature node count must be positive and even, got {m_nodes}"
            )));
        }
        let (offsets, weights) = match handling {
            SingularityHandling::ShiftedSymmetric => {
                // built from the positive half so pairs are exact negatives
                let h = 2.0 * PI / m_nodes as f64;
                let half = m_nodes / 2;
                let positive: Vec<f64> = (0..half).map(|k| (k as f64 + 0.5) * h).collect();
                let offsets = positive
                    .iter()
                    .rev()
                    .map(|s| -s)
                    .chain(positive.iter().copied())
                    .collect();
                (offsets, vec![h; m_nodes])
            }
            SingularityHandling::Desingularized => {
                let half = m_nodes / 2;
                let (nodes, w) = gauss_legendre(half);
                let mut offsets = Vec::with_capacity(m_nodes);
                let mut weights = Vec::with_capacity(m_nodes);
                // ascending order: mirrored half first
                for i in (0..half).rev() {
                    offsets.push(-0.5 * PI * (nodes[i] + 1.0));
                    weights.push(0.5 * PI * w[i]);
                }
                for i in 0..half {
                    offsets.push(0.5 * PI * (nodes[i] + 1.0));
                    weights.push(0.5 * PI * w[i]);
                }
                (offsets, weights)
            }
        };
        Ok(Self {
            m_nodes,
            handling,
            offsets,
            weights,
        })
    }

    pub fn shifted_symmetric(m_nodes: usize) -> Result<Self> {
        Self::new(m_nodes, SingularityHandling::ShiftedSymmetric)
    }

    pub fn desingularized(m_nodes: usize) -> Result<Self> {
        Self::new(m_nodes, SingularityHandling::Desingularized)
    }

    #[inline]
    pub fn m_nodes(&self) -> usize {
        self.m_nodes
    }

    #[inline]
    pub fn handling(&self) -> SingularityHandling {
        self.handling
    }

    #[inline]
    pub fn offsets(&self) -> &[f64] {
        &self.offsets
    }

    #[inline]
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn nodes(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.offsets.iter().copied().zip(self.weights.iter().copied())
    }
}

/// `sum_k w_k g(s_k)`, summed over mirrored pairs `(s_k, -s_k)` so odd
/// integrands cancel exactly; errors on the first non-finite value.
pub fn pv_integral(integrand: impl Fn(f64) -> f64, rule: &QuadratureRule) -> Result<f64> {
    let m = rule.m_nodes;
    let value = |k: usize| {
        let s = rule.offsets[k];
        let v = integrand(s);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(MuskatError::NonFiniteNode { node: k, offset: s })
        }
    };
    let mut acc = 0.0;
    for k in (0..m / 2).rev() {
        let lo = value(k)?;
        let hi = value(m - 1 - k)?;
        acc += rule.weights[k] * (lo + hi);
    }
    Ok(acc)
}

/// Gauss-Legendre nodes (ascending) and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess, refined by Newton on P_n
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(7);
        let total: f64 = w.iter().sum();
        assert!((total - 2.0).abs() < 1e-14);
        // exact up to degree 13
        let moment: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(12)).sum();
        assert!((moment - 2.0 / 13.0).abs() < 1e-14);
        let (x, w) = gauss_legendre(512);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13);
        let exp: f64 = x.iter().zip(&w).map(|(x, w)| w * x.exp()).sum();
        assert!((exp - (1.0_f64.exp() - (-1.0_f64).exp())).abs() < 1e-13);
    }

    #[test]
    fn rules_are_symmetric_and_exclude_zero() {
        for handling in [
            SingularityHandling::ShiftedSymmetric,
            SingularityHandling::Desingularized,
        ] {
            let rule = QuadratureRule::new(64, handling).unwrap();
            let s = rule.offsets();
            let w = rule.weights();
            assert_eq!(s.len(), 64);
            for k in 0..64 {
                assert!(s[k] != 0.0);
                assert!((s[k] + s[63 - k]).abs() < 1e-14);
                assert!((w[k] - w[63 - k]).abs() < 1e-15);
            }
            assert!((w.iter().sum::<f64>() - 2.0 * PI).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_odd_node_counts() {
        assert!(QuadratureRule::shifted_symmetric(15).is_err());
        assert!(QuadratureRule::desingularized(0).is_err());
    }

    #[test]
    fn pv_examples() {
        let rule = QuadratureRule::shifted_symmetric(128).unwrap();
        let cot = pv_integral(|s| 1.0 / (0.5 * s).tan(), &rule).unwrap();
        assert!(cot.abs() < 1e-13);
        let cos = pv_integral(f64::cos, &rule).unwrap();
        assert!(cos.abs() < 1e-12);
    }

    #[test]
    fn pv_reports_offending_node() {
        let rule = QuadratureRule::shifted_symmetric(8).unwrap();
        let err = pv_integral(|s| if s > 0.0 { f64::NAN } else { 1.0 }, &rule).unwrap_err();
        assert_eq!(err, MuskatError::NonFiniteNode { node: 4, offset: rule.offsets()[4] });
    }
}
