//! Velocity and pressure of the two fluids rebuilt from the interface.
//!
//! The interface carries the vorticity density `omega = -(k delta_rho / mu) f'`.
//! Off the interface the velocity is a periodic Biot-Savart integral of
//! `omega`; on the interface the two one-sided limits differ by a tangential
//! jump. The pressure follows from Darcy's law by path integration.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::error::{MuskatError, Result};
use crate::field::SpectralField;
use crate::operators::{integrate_symmetric, psi, KernelPoint, OperatorWorkspace, PhysicalParams};
use crate::parallel::map_range;

pub const DEFAULT_CLEARANCE: f64 = 1e-3;

/// Product of bulk node count and distance to the interface; the trapezoid
/// error of the bulk integral behaves like `exp(-RESOLUTION_BUDGET)`.
const RESOLUTION_BUDGET: f64 = 40.0;
const MAX_BULK_NODES: usize = 1 << 17;

/// Vertical distance below which the pressure path switches from the bulk
/// integral to a quadratic model anchored on the interface trace.
const TRACE_BAND: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    /// Below the interface, the heavier fluid.
    Minus,
    /// Above the interface.
    Plus,
}

impl Region {
    fn sign(self) -> f64 {
        match self {
            Region::Minus => -1.0,
            Region::Plus => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VorticityDensity {
    pub omega_bar: SpectralField,
}

/// `omega = -(k delta_rho / mu) f'`.
pub fn vorticity(f: &SpectralField, params: &PhysicalParams) -> VorticityDensity {
    let c = params.k * params.delta_rho() / params.mu;
    VorticityDensity {
        omega_bar: f.derivative(1).scale(-c),
    }
}

/// Velocity samples at off-interface points.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowField {
    pub sample_points: Vec<(f64, f64)>,
    pub velocity: Vec<(f64, f64)>,
    pub region_tags: Vec<Region>,
}

/// One-sided limits of the velocity on the interface at the grid nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryTraces {
    pub v_plus: Vec<[f64; 2]>,
    pub v_minus: Vec<[f64; 2]>,
    pub common_pv_part: Vec<[f64; 2]>,
}

struct BulkNodes {
    f: Vec<f64>,
    omega: Vec<f64>,
    nodes: Vec<f64>,
}

/// Evaluates the bulk velocity integral, refining the trapezoid rule as the
/// evaluation point approaches the interface.
pub struct BulkVelocity {
    f: SpectralField,
    omega: SpectralField,
    slope_factor: f64,
    cache: Mutex<HashMap<usize, Arc<BulkNodes>>>,
}

impl BulkVelocity {
    pub fn new(f: &SpectralField, params: &PhysicalParams) -> Self {
        let df = f.derivative(1);
        Self {
            f: f.clone(),
            omega: vorticity(f, params).omega_bar,
            slope_factor: (1.0 + df.max_abs().powi(2)).sqrt(),
            cache: Mutex::new(HashMap::new()),
        }
    }

    /// Lower bound on the distance from `(x, y)` to the interface.
    pub fn distance_bound(&self, x: f64, y: f64) -> f64 {
        (y - self.f.eval_at(x)).abs() / self.slope_factor
    }

    fn nodes_for(&self, distance: f64) -> Arc<BulkNodes> {
        let n = self.f.len();
        let wanted = if distance > 0.0 {
            (RESOLUTION_BUDGET / distance).min(MAX_BULK_NODES as f64) as usize
        } else {
            MAX_BULK_NODES
        };
        let m = wanted.next_power_of_two().clamp(n, MAX_BULK_NODES.max(n));
        let mut cache = self.cache.lock().unwrap_or_else(|e| e.into_inner());
        cache
            .entry(m)
            .or_insert_with(|| {
                let f = self.f.resample(m).expect("resampling to a power of two");
                let omega = self.omega.resample(m).expect("resampling to a power of two");
                Arc::new(BulkNodes {
                    nodes: f.grid().nodes(),
                    f: f.samples().to_vec(),
                    omega: omega.samples().to_vec(),
                })
            })
            .clone()
    }

    /// `(v1, v2)` at `(x, y)`. The point must not lie on the interface.
    pub fn velocity(&self, x: f64, y: f64) -> (f64, f64) {
        let bulk = self.nodes_for(self.distance_bound(x, y));
        let m = bulk.nodes.len();
        let (mut v1, mut v2) = (0.0, 0.0);
        for i in 0..m {
            let t = (0.5 * (x - bulk.nodes[i])).tan();
            let big = (0.5 * (y - bulk.f[i])).tanh();
            let d = t * t + big * big;
            v1 -= bulk.omega[i] * big * (1.0 + t * t) / d;
            v2 += bulk.omega[i] * t * (1.0 - big * big) / d;
        }
        // (1/4 pi) * (2 pi / m)
        let w = 0.5 / m as f64;
        (w * v1, w * v2)
    }

    pub fn region(&self, x: f64, y: f64) -> Region {
        if y > self.f.eval_at(x) {
            Region::Plus
        } else {
            Region::Minus
        }
    }
}

/// Bulk velocity at `points`, each of which must keep `clearance` from the
/// interface.
pub fn bulk_velocity_with_clearance(
    f: &SpectralField,
    params: &PhysicalParams,
    points: &[(f64, f64)],
    clearance: f64,
) -> Result<FlowField> {
    params.validate()?;
    if !(clearance > 0.0) {
        return Err(MuskatError::Parameter(format!("clearance must be positive, got {clearance}")));
    }
    for (index, &(x, y)) in points.iter().enumerate() {
        if !(x.is_finite() && y.is_finite()) || (y - f.eval_at(x)).abs() <= clearance {
            return Err(MuskatError::Clearance { index, x, y, clearance });
        }
    }
    let sampler = BulkVelocity::new(f, params);
    let velocity = map_range(points.len(), |i| sampler.velocity(points[i].0, points[i].1));
    Ok(FlowField {
        sample_points: points.to_vec(),
        velocity,
        region_tags: points.iter().map(|&(x, y)| sampler.region(x, y)).collect(),
    })
}

/// Bulk velocity with the default clearance.
pub fn bulk_velocity(
    f: &SpectralField,
    params: &PhysicalParams,
    points: &[(f64, f64)],
    ws: &OperatorWorkspace,
) -> Result<FlowField> {
    ws.check(f)?;
    bulk_velocity_with_clearance(f, params, points, DEFAULT_CLEARANCE)
}

/// One-sided interface velocities
/// `v_pm = (1/4 pi) PV int omega(x-s) (-T (1+t^2), t (1-T^2)) / D ds
///         -+ (1/2) omega (1, f') / (1 + f'^2)`.
pub fn boundary_traces(
    f: &SpectralField,
    params: &PhysicalParams,
    ws: &OperatorWorkspace,
) -> Result<BoundaryTraces> {
    ws.check(f)?;
    params.validate()?;
    let omega = vorticity(f, params).omega_bar;
    let fx = f.samples();
    let first = integrate_symmetric(ws.grid(), ws.rule(), &[f, &omega], |j, s, v| {
        let p = KernelPoint::new(fx[j], v[0], s);
        -v[1] * p.big_t * (1.0 + p.small_t * p.small_t) / p.denom
    })?;
    let second = integrate_symmetric(ws.grid(), ws.rule(), &[f, &omega], |j, s, v| {
        let p = KernelPoint::new(fx[j], v[0], s);
        v[1] * p.small_t * (1.0 - p.big_t * p.big_t) / p.denom
    })?;
    let df = f.derivative(1);
    let scale = 0.25 / PI;
    let mut traces = BoundaryTraces {
        v_plus: Vec::with_capacity(fx.len()),
        v_minus: Vec::with_capacity(fx.len()),
        common_pv_part: Vec::with_capacity(fx.len()),
    };
    for j in 0..fx.len() {
        let common = [scale * first[j], scale * second[j]];
        let slope = df.samples()[j];
        let jump = 0.5 * omega.samples()[j] / (1.0 + slope * slope);
        traces.common_pv_part.push(common);
        traces.v_plus.push([common[0] - jump, common[1] - jump * slope]);
        traces.v_minus.push([common[0] + jump, common[1] + jump * slope]);
    }
    Ok(traces)
}

/// `max_j |<v_pm(x_j), (-f'(x_j), 1)> - Psi(f)(x_j)|`, the defect of the
/// kinematic boundary condition between the trace and operator routes.
pub fn kinematic_consistency(
    f: &SpectralField,
    params: &PhysicalParams,
    ws: &OperatorWorkspace,
) -> Result<f64> {
    let traces = boundary_traces(f, params, ws)?;
    let rhs = psi(f, params, ws)?;
    let df = f.derivative(1);
    let mut worst = 0.0_f64;
    for (j, v) in traces.v_plus.iter().enumerate() {
        let normal = -df.samples()[j] * v[0] + v[1];
        worst = worst.max((normal - rhs.samples()[j]).abs());
    }
    Ok(worst)
}

/// `int_0^{2pi} v1(x, y) dx` by the periodic trapezoid rule on `m` nodes.
pub fn horizontal_flux(sampler: &BulkVelocity, y: f64, m: usize) -> f64 {
    let h = 2.0 * PI / m as f64;
    (0..m).map(|i| sampler.velocity(-PI + i as f64 * h, y).0).sum::<f64>() * h
}

/// Adaptive Simpson quadrature of `g` over `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_simpson(g: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn recurse(g: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = g(lm);
        let frm = g(rm);
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let err = left + right - whole;
        if depth == 0 || err.abs() <= 15.0 * tol {
            left + right + err / 15.0
        } else {
            recurse(g, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
                + recurse(g, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    if a == b {
        return 0.0;
    }
    let fa = g(a);
    let fb = g(b);
    let fm = g(0.5 * (a + b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    recurse(g, a, b, fa, fm, fb, whole, tol, 40)
}

/// Pressure reconstruction by integrating Darcy's law from the anchor
/// heights `+-d`, `d = |f|_inf + 1`.
pub struct PressureField {
    f: SpectralField,
    params: PhysicalParams,
    sampler: BulkVelocity,
    trace_plus: [SpectralField; 2],
    trace_minus: [SpectralField; 2],
    anchor: f64,
    tol: f64,
}

impl PressureField {
    pub fn new(f: &SpectralField, params: &PhysicalParams, ws: &OperatorWorkspace) -> Result<Self> {
        let traces = boundary_traces(f, params, ws)?;
        let component = |v: &[[f64; 2]], c: usize| {
            SpectralField::from_samples(ws.grid(), v.iter().map(|p| p[c]).collect())
        };
        Ok(Self {
            f: f.clone(),
            params: *params,
            sampler: BulkVelocity::new(f, params),
            trace_plus: [component(&traces.v_plus, 0)?, component(&traces.v_plus, 1)?],
            trace_minus: [component(&traces.v_minus, 0)?, component(&traces.v_minus, 1)?],
            anchor: f.max_abs() + 1.0,
            tol: 1e-10,
        })
    }

    pub fn anchor_height(&self) -> f64 {
        self.anchor
    }

    pub fn sampler(&self) -> &BulkVelocity {
        &self.sampler
    }

    /// Velocity on the interface from the given side, interpolated
    /// spectrally between grid nodes.
    pub fn trace(&self, side: Region, x: f64) -> (f64, f64) {
        let t = match side {
            Region::Plus => &self.trace_plus,
            Region::Minus => &self.trace_minus,
        };
        (t[0].eval_at(x), t[1].eval_at(x))
    }

    /// `int_a^b v2(x, s) ds` along a vertical segment inside `side`, with
    /// the stretch closer than the trace band to the interface modelled by
    /// the quadratic through the trace and two bulk values.
    fn vertical_integral(&self, side: Region, x: f64, from: f64, to: f64) -> f64 {
        let sigma = side.sign();
        let y_i = self.f.eval_at(x);
        let band_edge = y_i + sigma * 2.0 * TRACE_BAND;
        let v2 = |s: f64| self.sampler.velocity(x, s).1;
        if sigma * (to - band_edge) >= 0.0 {
            return adaptive_simpson(&v2, from, to, self.tol);
        }
        let bulk = adaptive_simpson(&v2, from, band_edge, self.tol);
        // quadratic in the distance r from the interface through r = 0, b, 2b
        let q0 = self.trace(side, x).1;
        let q1 = v2(y_i + sigma * TRACE_BAND);
        let q2 = v2(band_edge);
        let b = TRACE_BAND;
        let c1 = (-3.0 * q0 + 4.0 * q1 - q2) / (2.0 * b);
        let c2 = (q0 - 2.0 * q1 + q2) / (2.0 * b * b);
        let antiderivative = |r: f64| q0 * r + 0.5 * c1 * r * r + c2 * r * r * r / 3.0;
        let r_to = sigma * (to - y_i);
        // ds = sigma dr
        bulk + sigma * (antiderivative(r_to) - antiderivative(2.0 * b))
    }

    /// `p(x, y)` on `side` with additive constant `c`.
    pub fn value(&self, side: Region, x: f64, y: f64, c: f64) -> f64 {
        let d = side.sign() * self.anchor;
        let h = adaptive_simpson(&|s| self.sampler.velocity(s, d).0, 0.0, x, self.tol);
        let v = self.vertical_integral(side, x, d, y);
        let rho = match side {
            Region::Plus => self.params.rho_plus,
            Region::Minus => self.params.rho_minus,
        };
        let m = self.params.mu / self.params.k;
        c - m * h - m * v - rho * self.params.g * y
    }

    /// `c_minus` making the two pressures agree at `(x0, f(x0))` when
    /// `c_plus = 0`.
    pub fn matching_constant(&self, x0: f64) -> f64 {
        let y0 = self.f.eval_at(x0);
        self.value(Region::Plus, x0, y0, 0.0) - self.value(Region::Minus, x0, y0, 0.0)
    }
}

/// `p_pm` at `points` on `side` with constants `(c_plus, c_minus)`.
pub fn pressure(
    f: &SpectralField,
    params: &PhysicalParams,
    side: Region,
    points: &[(f64, f64)],
    reference_constants: (f64, f64),
    ws: &OperatorWorkspace,
) -> Result<Vec<f64>> {
    ws.check(f)?;
    for (index, &(x, y)) in points.iter().enumerate() {
        let gap = y - f.eval_at(x);
        let wrong = match side {
            Region::Plus => gap < 0.0,
            Region::Minus => gap > 0.0,
        };
        if wrong || !x.is_finite() || !y.is_finite() {
            return Err(MuskatError::WrongSide { index, x, y });
        }
    }
    let field = PressureField::new(f, params, ws)?;
    let c = match side {
        Region::Plus => reference_constants.0,
        Region::Minus => reference_constants.1,
    };
    Ok(map_range(points.len(), |i| field.value(side, points[i].0, points[i].1, c)))
}
