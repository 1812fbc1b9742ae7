//! Real periodic fields held both as grid samples and Fourier coefficients.

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{MuskatError, Result};
use crate::fft;
use crate::grid::Grid;

/// Sobolev exponent `s >= 0` used by [`SpectralField::sobolev_norm`].
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct SobolevIndex(f64);

impl SobolevIndex {
    pub fn new(s: f64) -> Result<Self> {
        if !(s.is_finite() && s >= 0.0) {
            return Err(MuskatError::Parameter(format!(
                "Sobolev index must be finite and >= 0, got {s}"
            )));
        }
        Ok(Self(s))
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    /// True inside the open interval `(3/2, 2)` where the evolution is well posed.
    pub fn in_well_posedness_range(self) -> bool {
        self.0 > 1.5 && self.0 < 2.0
    }
}

/// A real 2pi-periodic function on a [`Grid`].
///
/// Samples and coefficients are kept in sync at construction; every
/// operation returns a new field. The Nyquist coefficient stands for
/// `c * cos(n x / 2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: Grid,
    samples: Vec<f64>,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn from_samples(grid: Grid, samples: Vec<f64>) -> Result<Self> {
        if samples.len() != grid.n_points() {
            return Err(MuskatError::GridMismatch {
                expected: grid.n_points(),
                got: samples.len(),
            });
        }
        let coeffs = fft::forward(&samples);
        Ok(Self {
            grid,
            samples,
            coeffs,
        })
    }

    /// Builds a field from coefficients in FFT order. Coefficients are
    /// projected onto real-valued functions.
    pub fn from_coeffs(grid: Grid, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.n_points() {
            return Err(MuskatError::GridMismatch {
                expected: grid.n_points(),
                got: coeffs.len(),
            });
        }
        let samples = fft::inverse(&coeffs);
        Self::from_samples(grid, samples)
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Self {
        let samples = grid.nodes().into_iter().map(f).collect();
        Self::from_samples(grid, samples).expect("length matches grid")
    }

    /// `sum (a_m cos(m x) + b_m sin(m x))` over `(m, a_m, b_m)` triples.
    pub fn from_modes(grid: Grid, modes: &[(u32, f64, f64)]) -> Result<Self> {
        for &(m, _, _) in modes {
            if m as usize > grid.nyquist() {
                return Err(MuskatError::Resolution(format!(
                    "mode {m} exceeds the Nyquist mode {} of an {}-point grid",
                    grid.nyquist(),
                    grid.n_points()
                )));
            }
        }
        Ok(Self::from_fn(grid, |x| {
            modes
                .iter()
                .map(|&(m, a, b)| {
                    let mx = m as f64 * x;
                    a * mx.cos() + b * mx.sin()
                })
                .sum()
        }))
    }

    pub fn zeros(grid: Grid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: Grid, value: f64) -> Self {
        let n = grid.n_points();
        let mut coeffs = vec![Complex64::new(0.0, 0.0); n];
        coeffs[0] = Complex64::new(value, 0.0);
        Self {
            grid,
            samples: vec![value; n],
            coeffs,
        }
    }

    #[inline]
    pub fn grid(&self) -> Grid {
        self.grid
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    #[inline]
    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    /// Coefficients in FFT order.
    #[inline]
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Coefficient of mode `m`; zero for modes the grid cannot hold.
    pub fn coeff(&self, m: i64) -> Complex64 {
        let n = self.grid.n_points() as i64;
        if m > n / 2 || m <= -n / 2 {
            return Complex64::new(0.0, 0.0);
        }
        let k = if m >= 0 { m } else { m + n } as usize;
        self.coeffs[k]
    }

    pub fn is_finite(&self) -> bool {
        self.samples.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }

    /// Applies the Fourier multiplier `symbol(m)`.
    ///
    /// The symbol must satisfy `symbol(-m) = conj(symbol(m))`. The Nyquist
    /// coefficient is multiplied by `Re symbol(n/2)`, which zeroes it for odd
    /// symbols and keeps the output real.
    pub fn apply_symbol(&self, symbol: impl Fn(i64) -> Complex64) -> Self {
        let n = self.grid.n_points();
        let coeffs: Vec<Complex64> = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(k, &c)| {
                let m = fft::mode_of(k, n);
                if k == n / 2 {
                    c * symbol(m).re
                } else {
                    c * symbol(m)
                }
            })
            .collect();
        Self::from_coeffs(self.grid, coeffs).expect("length matches grid")
    }

    /// `order`-th spectral derivative: multiplier `(i m)^order`.
    pub fn derivative(&self, order: u32) -> Self {
        self.apply_symbol(|m| Complex64::new(0.0, m as f64).powu(order))
    }

    /// `(-d^2/dx^2)^{1/2}`: multiplier `|m|`.
    pub fn fractional_laplacian_half(&self) -> Self {
        self.apply_symbol(|m| Complex64::new(m.abs() as f64, 0.0))
    }

    /// Periodic Hilbert transform: multiplier `-i sign(m)`.
    pub fn hilbert_transform(&self) -> Self {
        self.apply_symbol(|m| Complex64::new(0.0, -(m.signum() as f64)))
    }

    /// `( sum_m (1 + m^2)^s |c_m|^2 )^{1/2}`.
    pub fn sobolev_norm(&self, s: SobolevIndex) -> f64 {
        let n = self.grid.n_points();
        self.coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| {
                let m = fft::mode_of(k, n) as f64;
                (1.0 + m * m).powf(s.value()) * c.norm_sqr()
            })
            .sum::<f64>()
            .sqrt()
    }

    /// `(1/2pi) * integral of f over one period`, the mode-0 coefficient.
    #[inline]
    pub fn integral_mean(&self) -> f64 {
        self.coeffs[0].re
    }

    /// Evaluates the trigonometric interpolant at an arbitrary `x`.
    pub fn eval_at(&self, x: f64) -> f64 {
        let n = self.grid.n_points();
        let mut acc = self.coeffs[0].re;
        for k in 1..n / 2 {
            // pairs (m, -m) combine to 2 Re(c_m e^{imx})
            let e = Complex64::from_polar(1.0, k as f64 * x);
            acc += 2.0 * (self.coeffs[k] * e).re;
        }
        acc + self.coeffs[n / 2].re * (0.5 * n as f64 * x).cos()
    }

    /// The field translated to the right by `c`, i.e. `x -> f(x - c)`.
    pub fn translated(&self, c: f64) -> Self {
        self.apply_symbol(|m| Complex64::from_polar(1.0, -(m as f64) * c))
    }

    /// Samples of `f(x_j - offset)` on the grid nodes.
    pub fn shifted_samples(&self, offset: f64) -> Vec<f64> {
        let n = self.grid.n_points();
        let coeffs: Vec<Complex64> = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(k, &c)| {
                let m = fft::mode_of(k, n) as f64;
                if k == n / 2 {
                    c * (m * offset).cos()
                } else {
                    c * Complex64::from_polar(1.0, -m * offset)
                }
            })
            .collect();
        fft::inverse(&coeffs)
    }

    /// Band-limited resampling onto an `n_new`-point grid (zero padding or
    /// truncation of the spectrum).
    pub fn resample(&self, n_new: usize) -> Result<Self> {
        let new_grid = Grid::new(n_new)?;
        let n = self.grid.n_points();
        if n_new == n {
            return Ok(self.clone());
        }
        let mut out = vec![Complex64::new(0.0, 0.0); n_new];
        let put = |out: &mut Vec<Complex64>, m: i64, c: Complex64| {
            let k = if m >= 0 { m } else { m + n_new as i64 } as usize;
            out[k] += c;
        };
        for (k, &c) in self.coeffs.iter().enumerate() {
            let m = fft::mode_of(k, n);
            let half_new = (n_new / 2) as i64;
            if k == n / 2 && n_new > n {
                // a cosine at the old Nyquist splits into two modes
                put(&mut out, m, 0.5 * c);
                put(&mut out, -m, 0.5 * c);
            } else if m.abs() < half_new {
                put(&mut out, m, c);
            } else if m.abs() == half_new {
                // folded onto the new Nyquist as a cosine amplitude
                out[n_new / 2] += Complex64::new(c.re, 0.0);
            }
        }
        SpectralField::from_coeffs(new_grid, out)
    }

    /// Pointwise product formed on a grid padded by `padding_factor` and
    /// projected back, which suppresses aliasing of the quadratic terms.
    pub fn dealiased_product(&self, other: &Self, padding_factor: f64) -> Result<Self> {
        self.check_same_grid(other)?;
        let n = self.grid.n_points();
        let mut m = (padding_factor * n as f64).ceil() as usize;
        m += m % 2;
        if m <= n {
            return Ok(self * other);
        }
        let a = self.resample(m)?;
        let b = other.resample(m)?;
        let prod: Vec<f64> = a.samples.iter().zip(&b.samples).map(|(x, y)| x * y).collect();
        SpectralField::from_samples(a.grid, prod)?.resample(n)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        let samples = self.samples.iter().map(|&v| f(v)).collect();
        Self::from_samples(self.grid, samples).expect("length matches grid")
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.check_same_grid(other)?;
        let samples = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Self::from_samples(self.grid, samples)
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            grid: self.grid,
            samples: self.samples.iter().map(|v| v * factor).collect(),
            coeffs: self.coeffs.iter().map(|c| c * factor).collect(),
        }
    }

    pub fn add_constant(&self, value: f64) -> Self {
        let mut out = self.clone();
        out.samples.iter_mut().for_each(|v| *v += value);
        out.coeffs[0] += value;
        out
    }

    /// Maximum absolute sample difference.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.samples
            .iter()
            .zip(&other.samples)
            .fold(0.0_f64, |acc, (a, b)| acc.max((a - b).abs()))
    }

    /// Discrete `L^2` distance normalized as `(1/2pi) * integral`.
    pub fn l2_distance(&self, other: &Self) -> f64 {
        let n = self.len() as f64;
        (self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            / n)
            .sqrt()
    }

    pub(crate) fn check_same_grid(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid {
            return Err(MuskatError::GridMismatch {
                expected: self.grid.n_points(),
                got: other.grid.n_points(),
            });
        }
        Ok(())
    }
}

fn combine(a: &SpectralField, b: &SpectralField, f: impl Fn(f64, f64) -> f64) -> SpectralField {
    assert_eq!(a.grid, b.grid, "fields live on different grids");
    a.zip_map(b, f).expect("grids checked")
}

impl Add for &SpectralField {
    type Output = SpectralField;
    fn add(self, rhs: Self) -> SpectralField {
        combine(self, rhs, |a, b| a + b)
    }
}

impl Sub for &SpectralField {
    type Output = SpectralField;
    fn sub(self, rhs: Self) -> SpectralField {
        combine(self, rhs, |a, b| a - b)
    }
}

/// Collocation (grid-pointwise) product.
impl Mul for &SpectralField {
    type Output = SpectralField;
    fn mul(self, rhs: Self) -> SpectralField {
        combine(self, rhs, |a, b| a * b)
    }
}

impl Neg for &SpectralField {
    type Output = SpectralField;
    fn neg(self) -> SpectralField {
        self.scale(-1.0)
    }
}

/// `e^{i m x}`-style basis helper: `cos(m x)` for `m >= 0`, `sin(|m| x)` otherwise.
pub fn trig_mode(grid: Grid, m: i64) -> SpectralField {
    if m >= 0 {
        SpectralField::from_fn(grid, |x| (m as f64 * x).cos())
    } else {
        SpectralField::from_fn(grid, |x| (-m as f64 * x).sin())
    }
}
