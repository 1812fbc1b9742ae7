//! Linearized spectrum, decay-rate fits and the frozen-coefficient
//! localization diagnostic.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{MuskatError, Result};
use crate::evolution::{least_squares, MonitorSeries};
use crate::field::{SobolevIndex, SpectralField};
use crate::grid::Grid;
use crate::operators::{direct_rhs, freeze_coefficients, full_phi, multiplier_aab, OperatorWorkspace, PhysicalParams};
use crate::parallel::map_range;

pub const DEFAULT_FRECHET_EPS: f64 = 1e-5;

/// Eigenvalue estimate on `cos(m x)` with its largest leak onto other modes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModeResponse {
    pub rate: f64,
    pub off_diagonal: f64,
}

fn check_eps(eps: f64) -> Result<()> {
    if !(1e-7..=1e-3).contains(&eps) {
        return Err(MuskatError::Parameter(format!("eps must lie in [1e-7, 1e-3], got {eps}")));
    }
    Ok(())
}

/// One-sided difference `<Psi(eps cos m x), cos m x> / (eps <cos m x, cos m x>)`.
pub fn frechet_at_zero(m: u32, params: &PhysicalParams, ws: &OperatorWorkspace, eps: f64) -> Result<f64> {
    Ok(mode_response(m, params, ws, eps)?.rate)
}

pub fn mode_response(
    m: u32,
    params: &PhysicalParams,
    ws: &OperatorWorkspace,
    eps: f64,
) -> Result<ModeResponse> {
    check_eps(eps)?;
    let n = ws.grid().n_points();
    if m == 0 || m as usize > n / 4 {
        return Err(MuskatError::Resolution(format!(
            "mode {m} must lie in [1, n/4] = [1, {}]",
            n / 4
        )));
    }
    let f = SpectralField::from_fn(ws.grid(), |x| eps * (m as f64 * x).cos());
    let response = direct_rhs(&f, params, ws)?.scale(1.0 / eps);
    let mut off_diagonal = 0.0_f64;
    for k in 0..=(n / 2) as i64 {
        if k != m as i64 {
            off_diagonal = off_diagonal.max(response.coeff(k).norm());
        }
    }
    Ok(ModeResponse {
        rate: 2.0 * response.coeff(m as i64).re,
        off_diagonal,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumReport {
    pub modes: Vec<u32>,
    pub exact_rates: Vec<f64>,
    pub numerical_rates: Vec<f64>,
    pub rel_errors: Vec<f64>,
}

impl SpectrumReport {
    pub fn max_rel_error(&self) -> f64 {
        self.rel_errors.iter().fold(0.0, |a, &e| a.max(e))
    }
}

/// Compares `frechet_at_zero` with `-k delta_rho m / (2 mu)` for `m = 1..=m_max`.
pub fn spectrum_report(
    m_max: u32,
    params: &PhysicalParams,
    ws: &OperatorWorkspace,
    eps: f64,
) -> Result<SpectrumReport> {
    let n = ws.grid().n_points();
    if m_max == 0 || m_max as usize > n / 8 {
        return Err(MuskatError::Resolution(format!(
            "m_max = {m_max} must lie in [1, n/8] = [1, {}]",
            n / 8
        )));
    }
    let modes: Vec<u32> = (1..=m_max).collect();
    let mut report = SpectrumReport {
        modes: modes.clone(),
        exact_rates: Vec::new(),
        numerical_rates: Vec::new(),
        rel_errors: Vec::new(),
    };
    for m in modes {
        let exact = -params.linear_rate() * m as f64;
        let numerical = frechet_at_zero(m, params, ws, eps)?;
        report.exact_rates.push(exact);
        report.numerical_rates.push(numerical);
        report.rel_errors.push(((numerical - exact) / exact).abs());
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayFit {
    pub window: (f64, f64),
    /// `omega` in `norm ~ C exp(-omega t)`.
    pub fitted_rate: f64,
    pub r_squared: f64,
    pub samples: usize,
}

/// Least-squares fit of `log ||f(t)||_{H^s}` against `t` inside `window`.
pub fn fit_decay_rate(series: &MonitorSeries, sobolev_index: f64, window: (f64, f64)) -> Result<DecayFit> {
    let (t0, t1) = window;
    if !(t1 > t0) {
        return Err(MuskatError::DegenerateWindow(format!("need t1 > t0, got ({t0}, {t1})")));
    }
    let norms = series.norm_series(sobolev_index).ok_or_else(|| {
        MuskatError::DegenerateWindow(format!("H^{sobolev_index} norm is not monitored"))
    })?;
    let mut points = Vec::new();
    for (&t, &v) in series.times.iter().zip(norms) {
        if t < t0 || t > t1 {
            continue;
        }
        if !(v > 1e-13) {
            return Err(MuskatError::DegenerateWindow(format!("norm {v:e} at t = {t} is at round-off")));
        }
        points.push((t, v.ln()));
    }
    if points.len() < 10 {
        return Err(MuskatError::DegenerateWindow(format!(
            "{} samples in ({t0}, {t1}), need at least 10",
            points.len()
        )));
    }
    let (slope, _, r_squared) = least_squares(&points)
        .ok_or_else(|| MuskatError::DegenerateWindow("all samples share one time".into()))?;
    Ok(DecayFit {
        window,
        fitted_rate: -slope,
        r_squared,
        samples: points.len(),
    })
}

/// Smooth periodic partition of unity with `2^{p+1}` bumps. Bump `j` sits on
/// `I_j = [(j - 5/3) w, (j - 1/3) w]`, `w = pi / 2^p`, and its cutoff `chi_j`
/// equals one on `I_j` and vanishes beyond `5 w / 3` of the midpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionOfUnity {
    pub p: u32,
    pub centers: Vec<f64>,
    pub bumps: Vec<SpectralField>,
    pub cutoffs: Vec<SpectralField>,
}

impl PartitionOfUnity {
    pub fn len(&self) -> usize {
        self.bumps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bumps.is_empty()
    }

    pub fn width(&self) -> f64 {
        PI / f64::powi(2.0, self.p as i32)
    }
}

fn mollifier(u: f64) -> f64 {
    if u.abs() < 1.0 {
        (-1.0 / (1.0 - u * u)).exp()
    } else {
        0.0
    }
}

/// `C^infinity` step, 0 for `t <= 0` and 1 for `t >= 1`.
fn smooth_step(t: f64) -> f64 {
    let e = |t: f64| if t > 0.0 { (-1.0 / t).exp() } else { 0.0 };
    let (a, b) = (e(t), e(1.0 - t));
    a / (a + b)
}

/// Distance from `x` to `c` on the circle of length `2 pi`.
fn periodic_gap(x: f64, c: f64) -> f64 {
    let d = (x - c).rem_euclid(2.0 * PI);
    d.min(2.0 * PI - d)
}

pub fn build_partition(p: u32, grid: Grid) -> Result<PartitionOfUnity> {
    if p < 3 {
        return Err(MuskatError::Parameter(format!("partition level p must be >= 3, got {p}")));
    }
    let count = 1usize << (p + 1);
    let n = grid.n_points();
    if count > n / 8 {
        return Err(MuskatError::Resolution(format!(
            "2^(p+1) = {count} bumps need n >= {}, got n = {n}",
            8 * count
        )));
    }
    let w = PI / f64::powi(2.0, p as i32);
    let centers: Vec<f64> = (1..=count).map(|j| (j as f64 - 1.0) * w).collect();
    let half = 2.0 * w / 3.0;
    let raw: Vec<Vec<f64>> = centers
        .iter()
        .map(|&c| grid.nodes().into_iter().map(|x| mollifier(periodic_gap(x, c) / half)).collect())
        .collect();
    let total: Vec<f64> = (0..n).map(|i| raw.iter().map(|b| b[i]).sum()).collect();
    let bumps = raw
        .into_iter()
        .map(|b| {
            let normalized = b.iter().zip(&total).map(|(v, s)| v / s).collect();
            SpectralField::from_samples(grid, normalized)
        })
        .collect::<Result<Vec<_>>>()?;
    let cutoffs = centers
        .iter()
        .map(|&c| SpectralField::from_fn(grid, |x| smooth_step((5.0 / 3.0) - periodic_gap(x, c) / w)))
        .collect();
    Ok(PartitionOfUnity { p, centers, bumps, cutoffs })
}

/// Per-bump distance between the operator and its frozen-coefficient
/// multiplier, in the `H^1` norm.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalizationDefect {
    pub p: u32,
    pub tau: f64,
    pub centers: Vec<f64>,
    pub defects: Vec<f64>,
    /// `defects[j] / ||pi_j h||_{H^2}`.
    pub normalized: Vec<f64>,
}

impl LocalizationDefect {
    pub fn max(&self) -> f64 {
        self.defects.iter().fold(0.0, |a, &d| a.max(d))
    }

    pub fn max_normalized(&self) -> f64 {
        self.normalized.iter().fold(0.0, |a, &d| a.max(d))
    }
}

/// For each bump `pi_j`, the `H^1` norm of
/// `Phi(tau f)[pi_j h] - (a_tau(x_j) d/dx - b_tau(x_j) (-d^2/dx^2)^{1/2})[pi_j h]`
/// with `x_j` the midpoint of `I_j`.
pub fn localization_defect(
    f: &SpectralField,
    tau: f64,
    h: &SpectralField,
    p: u32,
    ws: &OperatorWorkspace,
) -> Result<LocalizationDefect> {
    ws.check(f)?;
    ws.check(h)?;
    let partition = build_partition(p, ws.grid())?;
    let (a, b) = freeze_coefficients(f, tau, ws)?;
    let g = f.scale(tau);
    let h1 = SobolevIndex::new(1.0)?;
    let h2 = SobolevIndex::new(2.0)?;
    let per_bump = map_range(partition.len(), |j| -> Result<(f64, f64)> {
        // drop the Nyquist mode
        let nyquist = ws.grid().nyquist() as u64;
        let local = partition.bumps[j]
            .zip_map(h, |u, v| u * v)?
            .apply_symbol(|m| if m.unsigned_abs() == nyquist { 0.0.into() } else { 1.0.into() });
        let x = partition.centers[j];
        let exact = full_phi(&g, &local, ws)?;
        let frozen = multiplier_aab(a.eval_at(x), b.eval_at(x), &local)?;
        let d = (&exact - &frozen).sobolev_norm(h1);
        let scale = local.sobolev_norm(h2);
        Ok((d, if scale > 0.0 { d / scale } else { 0.0 }))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    Ok(LocalizationDefect {
        p,
        tau,
        centers: partition.centers,
        defects: per_bump.iter().map(|r| r.0).collect(),
        normalized: per_bump.iter().map(|r| r.1).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::TailSlope;

    fn unit() -> PhysicalParams {
        PhysicalParams::from_contrast(1.0, 1.0, 1.0).unwrap()
    }

    fn ws(n: usize) -> OperatorWorkspace {
        OperatorWorkspace::new(Grid::new(n).unwrap()).unwrap()
    }

    #[test]
    fn spectrum_examples() {
        let w = ws(64);
        let p = unit();
        for (m, params, expected) in [
            (1, p, -0.5),
            (3, p, -1.5),
            (2, PhysicalParams::from_contrast(1.0, 1.0, 2.0).unwrap(), -2.0),
        ] {
            let r = frechet_at_zero(m, &params, &w, DEFAULT_FRECHET_EPS).unwrap();
            assert!(((r - expected) / expected).abs() < 1e-4, "m = {m}: {r}");
        }
        let report = spectrum_report(8, &p, &w, DEFAULT_FRECHET_EPS).unwrap();
        assert!(report.max_rel_error() < 1e-4);
        assert!(report.exact_rates.windows(2).all(|w| w[1] < w[0]));
        assert!(report.exact_rates.iter().all(|&r| r < 0.0));
    }

    #[test]
    fn linearization_is_diagonal() {
        let w = ws(64);
        let eps = 1e-4;
        let r = mode_response(2, &unit(), &w, eps).unwrap();
        assert!(r.off_diagonal < eps, "{}", r.off_diagonal);
    }

    #[test]
    fn spectrum_rejects_unresolved_modes() {
        let w = ws(32);
        assert!(matches!(
            frechet_at_zero(9, &unit(), &w, 1e-5),
            Err(MuskatError::Resolution(_))
        ));
        assert!(spectrum_report(5, &unit(), &w, 1e-5).is_err());
        assert!(frechet_at_zero(1, &unit(), &w, 1e-2).is_err());
    }

    fn synthetic(rate: f64, count: usize) -> MonitorSeries {
        let mut s = MonitorSeries::new(vec![SobolevIndex::new(2.0).unwrap()]);
        for k in 0..count {
            let t = 0.1 * k as f64;
            s.push(&crate::evolution::MonitorRecord {
                t,
                mean_drift: 0.0,
                sobolev_norms: vec![3.0 * (-rate * t).exp()],
                tail_slope: TailSlope::BelowFloor,
                max_abs_f: 0.0,
            });
        }
        s
    }

    #[test]
    fn decay_fit_recovers_exponential() {
        let fit = fit_decay_rate(&synthetic(0.5, 41), 2.0, (0.0, 4.0)).unwrap();
        assert!((fit.fitted_rate - 0.5).abs() < 1e-10);
        assert!(fit.r_squared > 0.9999);
        assert_eq!(fit.samples, 41);
    }

    #[test]
    fn decay_fit_rejects_degenerate_windows() {
        let s = synthetic(0.5, 41);
        assert!(matches!(fit_decay_rate(&s, 2.0, (0.0, 0.5)), Err(MuskatError::DegenerateWindow(_))));
        assert!(fit_decay_rate(&s, 2.0, (1.0, 1.0)).is_err());
        assert!(fit_decay_rate(&s, 1.5, (0.0, 4.0)).is_err());
        assert!(fit_decay_rate(&synthetic(40.0, 41), 2.0, (0.0, 4.0)).is_err());
    }

    #[test]
    fn partition_properties() {
        let grid = Grid::new(512).unwrap();
        for p in [3, 4, 5] {
            let part = build_partition(p, grid).unwrap();
            assert_eq!(part.len(), 1 << (p + 1));
            let w = part.width();
            for i in 0..512 {
                let sum: f64 = part.bumps.iter().map(|b| b.samples()[i]).sum();
                assert!((sum - 1.0).abs() < 1e-12);
            }
            for (j, (bump, cut)) in part.bumps.iter().zip(&part.cutoffs).enumerate() {
                for (i, x) in grid.nodes().into_iter().enumerate() {
                    let v = bump.samples()[i];
                    assert!(v >= 0.0);
                    if periodic_gap(x, part.centers[j]) >= 2.0 * w / 3.0 {
                        assert_eq!(v, 0.0);
                    }
                    if periodic_gap(x, part.centers[j]) >= 5.0 * w / 3.0 {
                        assert_eq!(cut.samples()[i], 0.0);
                    }
                    assert_eq!(cut.samples()[i] * v, v);
                }
            }
        }
        assert!(matches!(build_partition(5, Grid::new(256).unwrap()), Err(MuskatError::Resolution(_))));
        assert!(build_partition(2, grid).is_err());
    }

    #[test]
    fn defect_vanishes_at_flat_interface() {
        let w = ws(128);
        let zero = SpectralField::zeros(w.grid());
        let h = SpectralField::from_fn(w.grid(), |x| (4.0 * x).cos() + 0.3 * x.sin());
        let d = localization_defect(&zero, 0.7, &h, 3, &w).unwrap();
        assert!(d.max() < 1e-9, "{}", d.max());
    }

    #[test]
    fn defect_is_linear_in_h() {
        let w = ws(128);
        let f = SpectralField::from_fn(w.grid(), |x| 0.3 * x.cos());
        let h = SpectralField::from_fn(w.grid(), |x| (4.0 * x).cos());
        let one = localization_defect(&f, 1.0, &h, 3, &w).unwrap();
        let two = localization_defect(&f, 1.0, &h.scale(2.0), 3, &w).unwrap();
        for (a, b) in one.defects.iter().zip(&two.defects) {
            assert!((b - 2.0 * a).abs() < 1e-10 * (1.0 + a));
        }
        for (a, b) in one.normalized.iter().zip(&two.normalized) {
            assert!((a - b).abs() < 1e-10);
        }
    }
}
