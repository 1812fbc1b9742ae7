//! Time integration of `df/dt = Psi(f)` with runtime monitors.
//!
//! The IMEX schemes split `Psi(f) = -D |d/dx| f + R(f)` with
//! `D = k delta_rho / (2 mu)`, the decay rate of the linearization at the flat
//! state. The stiff multiplier is inverted exactly in Fourier space and the
//! remainder `R` is explicit.

use serde::{Deserialize, Serialize};

use crate::error::{MuskatError, Result};
use crate::field::{SobolevIndex, SpectralField};
use crate::grid::Grid;
use crate::operators::{direct_rhs, psi, OperatorWorkspace, PhysicalParams};

/// Fourier coefficients below this magnitude are treated as round-off.
pub const TAIL_FLOOR: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Rk4Explicit,
    ImexEuler,
    ImexCnab,
}

impl Scheme {
    pub fn order(self) -> u32 {
        match self {
            Scheme::Rk4Explicit => 4,
            Scheme::ImexEuler => 1,
            Scheme::ImexCnab => 2,
        }
    }
}

/// Which of the two equivalent evaluations of `Psi` drives the stepper.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RhsEvaluation {
    /// The contour integral as written, one quadrature pass per call.
    #[default]
    Direct,
    /// `(k delta_rho / 4 pi mu) Phi(f)[f]` through the decomposition.
    Decomposed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SchemeConfig {
    pub scheme: Scheme,
    pub dt: f64,
    pub cfl_safety: f64,
    pub adapt: bool,
    pub dt_min: f64,
    /// Step-doubling error allowed per unit of simulated time.
    pub tolerance: f64,
    pub rhs: RhsEvaluation,
}

impl Default for SchemeConfig {
    fn default() -> Self {
        Self {
            scheme: Scheme::ImexCnab,
            dt: 1e-2,
            cfl_safety: 0.5,
            adapt: false,
            dt_min: 1e-10,
            tolerance: 1e-8,
            rhs: RhsEvaluation::Direct,
        }
    }
}

impl SchemeConfig {
    pub fn new(scheme: Scheme, dt: f64) -> Self {
        Self { scheme, dt, ..Self::default() }
    }

    /// Largest explicit step, `cfl_safety * (dx / 2pi) * (4 pi mu / k delta_rho)`.
    pub fn explicit_limit(&self, params: &PhysicalParams, grid: Grid) -> f64 {
        self.cfl_safety * (grid.spacing() / (2.0 * std::f64::consts::PI)) / params.rate_constant()
    }

    pub fn validate(&self, params: &PhysicalParams, grid: Grid) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(MuskatError::Parameter(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return Err(MuskatError::Parameter(format!(
                "cfl_safety must lie in (0, 1], got {}",
                self.cfl_safety
            )));
        }
        if !(self.dt_min > 0.0 && self.dt_min <= self.dt) {
            return Err(MuskatError::Parameter(format!(
                "dt_min must lie in (0, dt], got {}",
                self.dt_min
            )));
        }
        if !(self.tolerance > 0.0) {
            return Err(MuskatError::Parameter(format!(
                "tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        if self.scheme == Scheme::Rk4Explicit {
            let limit = self.explicit_limit(params, grid);
            if self.dt > limit {
                return Err(MuskatError::Parameter(format!(
                    "dt = {} exceeds the explicit stability limit {limit:.6e} for n = {}",
                    self.dt,
                    grid.n_points()
                )));
            }
        }
        Ok(())
    }
}

/// Least-squares slope of `log |c_m|` over `m in [n/8, n/4]`, or
/// [`TailSlope::BelowFloor`] when that window has dropped to round-off.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailSlope {
    Slope(f64),
    BelowFloor,
}

impl TailSlope {
    pub fn value(self) -> Option<f64> {
        match self {
            TailSlope::Slope(s) => Some(s),
            TailSlope::BelowFloor => None,
        }
    }
}

pub fn fourier_tail_slope(f: &SpectralField) -> TailSlope {
    let n = f.len() as i64;
    let modes = (n / 8)..=(n / 4);
    let mut points = Vec::new();
    for m in modes {
        let c = f.coeff(m).norm();
        if c <= TAIL_FLOOR {
            return TailSlope::BelowFloor;
        }
        points.push((m as f64, c.ln()));
    }
    match least_squares(&points) {
        Some((slope, _, _)) => TailSlope::Slope(slope),
        None => TailSlope::BelowFloor,
    }
}

/// Slope, intercept and `r^2` of the least-squares line through `points`.
pub(crate) fn least_squares(points: &[(f64, f64)]) -> Option<(f64, f64, f64)> {
    let k = points.len() as f64;
    if points.len() < 2 {
        return None;
    }
    let mx = points.iter().map(|p| p.0).sum::<f64>() / k;
    let my = points.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0) };
    Some((slope, my - slope * mx, r2))
}

/// Monitor values recorded at one instant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonitorRecord {
    pub t: f64,
    pub mean_drift: f64,
    pub sobolev_norms: Vec<f64>,
    pub tail_slope: TailSlope,
    pub max_abs_f: f64,
}

/// Time series of monitor values; all vectors have equal length.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct MonitorSeries {
    pub sobolev_indices: Vec<SobolevIndex>,
    pub times: Vec<f64>,
    pub mean_drift: Vec<f64>,
    /// `sobolev_norms[i][k]` is the norm for `sobolev_indices[i]` at `times[k]`.
    pub sobolev_norms: Vec<Vec<f64>>,
    pub fourier_tail_slope: Vec<TailSlope>,
    pub max_abs_f: Vec<f64>,
}

impl MonitorSeries {
    pub fn new(sobolev_indices: Vec<SobolevIndex>) -> Self {
        let k = sobolev_indices.len();
        Self {
            sobolev_indices,
            sobolev_norms: vec![Vec::new(); k],
            ..Self::default()
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn push(&mut self, record: &MonitorRecord) {
        self.times.push(record.t);
        self.mean_drift.push(record.mean_drift);
        for (series, &v) in self.sobolev_norms.iter_mut().zip(&record.sobolev_norms) {
            series.push(v);
        }
        self.fourier_tail_slope.push(record.tail_slope);
        self.max_abs_f.push(record.max_abs_f);
    }

    /// Norm series for the Sobolev index `s`, if it is monitored.
    pub fn norm_series(&self, s: f64) -> Option<&[f64]> {
        self.sobolev_indices
            .iter()
            .position(|i| (i.value() - s).abs() < 1e-12)
            .map(|k| self.sobolev_norms[k].as_slice())
    }

    pub fn record(&self, k: usize) -> MonitorRecord {
        MonitorRecord {
            t: self.times[k],
            mean_drift: self.mean_drift[k],
            sobolev_norms: self.sobolev_norms.iter().map(|s| s[k]).collect(),
            tail_slope: self.fourier_tail_slope[k],
            max_abs_f: self.max_abs_f[k],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlowUpSettings {
    pub sobolev_index: f64,
    pub ceiling: f64,
    pub growth_ratio: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum BlowUpStatus {
    Bounded,
    CeilingExceeded { norm: f64 },
    GrowthExceeded { ratio: f64 },
}

impl BlowUpStatus {
    pub fn is_flagged(self) -> bool {
        !matches!(self, BlowUpStatus::Bounded)
    }
}

/// Watches an `H^s` norm, `s in (3/2, 2)`, for a ceiling or a per-step
/// growth ratio. Reporting only; never alters the state.
#[derive(Debug, Clone, PartialEq)]
pub struct BlowUpMonitor {
    index: SobolevIndex,
    ceiling: f64,
    growth_ratio: f64,
    previous: Option<f64>,
}

impl BlowUpMonitor {
    pub fn new(settings: BlowUpSettings) -> Result<Self> {
        let index = SobolevIndex::new(settings.sobolev_index)?;
        if !index.in_well_posedness_range() {
            return Err(MuskatError::Parameter(format!(
                "blow-up monitor needs s in (3/2, 2), got {}",
                settings.sobolev_index
            )));
        }
        if !(settings.ceiling > 0.0 && settings.growth_ratio > 1.0) {
            return Err(MuskatError::Parameter(
                "blow-up monitor needs ceiling > 0 and growth_ratio > 1".into(),
            ));
        }
        Ok(Self {
            index,
            ceiling: settings.ceiling,
            growth_ratio: settings.growth_ratio,
            previous: None,
        })
    }

    pub fn observe(&mut self, state: &SimulationState) -> BlowUpStatus {
        let norm = state.f.sobolev_norm(self.index);
        let previous = self.previous.replace(norm);
        if !(norm <= self.ceiling) {
            return BlowUpStatus::CeilingExceeded { norm };
        }
        match previous {
            Some(p) if p > 0.0 && norm / p > self.growth_ratio => {
                BlowUpStatus::GrowthExceeded { ratio: norm / p }
            }
            _ => BlowUpStatus::Bounded,
        }
    }
}

/// Why a run stopped.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "cause", rename_all = "snake_case")]
pub enum Termination {
    EndTime,
    /// Numerical termination: non-finite values or a blow-up monitor flag.
    /// Not a statement about the analytical maximal existence time.
    BlowUp { t: f64, reason: String },
    StepTooSmall { t: f64, dt: f64 },
}

#[derive(Debug, Clone, PartialEq)]
struct History {
    remainder: SpectralField,
    dt: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationState {
    pub f: SpectralField,
    pub t: f64,
    pub step_count: u64,
    pub monitors: MonitorSeries,
    pub termination: Option<Termination>,
    initial_mean: f64,
    history: Option<History>,
}

impl SimulationState {
    pub fn new(f0: SpectralField, sobolev_indices: Vec<SobolevIndex>) -> Self {
        Self {
            initial_mean: f0.integral_mean(),
            f: f0,
            t: 0.0,
            step_count: 0,
            monitors: MonitorSeries::new(sobolev_indices),
            termination: None,
            history: None,
        }
    }

    pub fn initial_mean(&self) -> f64 {
        self.initial_mean
    }

    pub fn current_record(&self) -> MonitorRecord {
        MonitorRecord {
            t: self.t,
            mean_drift: (self.f.integral_mean() - self.initial_mean).abs(),
            sobolev_norms: self
                .monitors
                .sobolev_indices
                .iter()
                .map(|&s| self.f.sobolev_norm(s))
                .collect(),
            tail_slope: fourier_tail_slope(&self.f),
            max_abs_f: self.f.max_abs(),
        }
    }
}

/// Tail slope of the current interface.
pub fn smoothing_monitor(state: &SimulationState) -> TailSlope {
    fourier_tail_slope(&state.f)
}

/// Immutable view handed to snapshot sinks.
pub struct Snapshot<'a> {
    pub step: u64,
    pub f: &'a SpectralField,
    pub record: &'a MonitorRecord,
}

pub trait SnapshotSink {
    fn record(&mut self, snapshot: &Snapshot<'_>) -> Result<()>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MonitorConfig {
    /// Monitors are recorded every `cadence` accepted steps.
    pub cadence: u64,
    pub sobolev_indices: Vec<f64>,
    pub blow_up: Option<BlowUpSettings>,
}

impl Default for MonitorConfig {
    fn default() -> Self {
        Self {
            cadence: 1,
            sobolev_indices: vec![0.0, 1.75, 2.0],
            blow_up: None,
        }
    }
}

struct Stepper<'a> {
    cfg: &'a SchemeConfig,
    params: &'a PhysicalParams,
    ws: &'a OperatorWorkspace,
}

impl Stepper<'_> {
    fn rhs(&self, f: &SpectralField) -> Result<SpectralField> {
        match self.cfg.rhs {
            RhsEvaluation::Direct => direct_rhs(f, self.params, self.ws),
            RhsEvaluation::Decomposed => psi(f, self.params, self.ws),
        }
    }

    /// `R(f) = Psi(f) + D |d/dx| f`.
    fn remainder(&self, f: &SpectralField) -> Result<SpectralField> {
        let d = self.params.linear_rate();
        Ok(&self.rhs(f)? + &f.fractional_laplacian_half().scale(d))
    }

    fn advance(
        &self,
        f: &SpectralField,
        history: Option<&History>,
        dt: f64,
    ) -> Result<(SpectralField, Option<History>)> {
        let d = self.params.linear_rate();
        match self.cfg.scheme {
            Scheme::Rk4Explicit => {
                let k1 = self.rhs(f)?;
                let k2 = self.rhs(&(f + &k1.scale(0.5 * dt)))?;
                let k3 = self.rhs(&(f + &k2.scale(0.5 * dt)))?;
                let k4 = self.rhs(&(f + &k3.scale(dt)))?;
                let incr = &(&k1 + &k2.scale(2.0)) + &(&k3.scale(2.0) + &k4);
                Ok((f + &incr.scale(dt / 6.0), None))
            }
            Scheme::ImexEuler => {
                let r = self.remainder(f)?;
                let rhs = f + &r.scale(dt);
                let next = rhs.apply_symbol(|m| (1.0 / (1.0 + dt * d * m.abs() as f64)).into());
                Ok((next, None))
            }
            Scheme::ImexCnab => {
                let r = self.remainder(f)?;
                let extrapolated = match history {
                    Some(h) => {
                        let w = dt / h.dt;
                        &r.scale(1.0 + 0.5 * w) - &h.remainder.scale(0.5 * w)
                    }
                    None => r.clone(),
                };
                let explicit = f.apply_symbol(|m| (1.0 - 0.5 * dt * d * m.abs() as f64).into());
                let rhs = &explicit + &extrapolated.scale(dt);
                let next =
                    rhs.apply_symbol(|m| (1.0 / (1.0 + 0.5 * dt * d * m.abs() as f64)).into());
                Ok((next, Some(History { remainder: r, dt })))
            }
        }
    }
}

/// Advances the state by one step of size `cfg.dt`.
pub fn step(
    state: &SimulationState,
    cfg: &SchemeConfig,
    params: &PhysicalParams,
    ws: &OperatorWorkspace,
) -> Result<SimulationState> {
    cfg.validate(params, ws.grid())?;
    let stepper = Stepper { cfg, params, ws };
    advance_state(state, &stepper, cfg.dt)
}

fn advance_state(state: &SimulationState, stepper: &Stepper<'_>, dt: f64) -> Result<SimulationState> {
    let (f, history) = stepper.advance(&state.f, state.history.as_ref(), dt)?;
    let t = state.t + dt;
    if !f.is_finite() {
        return Err(MuskatError::NonFiniteState { t });
    }
    Ok(SimulationState {
        f,
        t,
        step_count: state.step_count + 1,
        monitors: state.monitors.clone(),
        termination: None,
        initial_mean: state.initial_mean,
        history,
    })
}

fn emit(state: &mut SimulationState, sinks: &mut [&mut dyn SnapshotSink]) -> Result<()> {
    let record = state.current_record();
    state.monitors.push(&record);
    for sink in sinks.iter_mut() {
        sink.record(&Snapshot {
            step: state.step_count,
            f: &state.f,
            record: &record,
        })?;
    }
    Ok(())
}

/// Integrates from `f0` up to `t_end`, a blow-up event, or a step below
/// `dt_min`, recording monitors every `monitor.cadence` steps and at the end.
pub fn run(
    f0: SpectralField,
    t_end: f64,
    cfg: &SchemeConfig,
    monitor: &MonitorConfig,
    params: &PhysicalParams,
    ws: &OperatorWorkspace,
    sinks: &mut [&mut dyn SnapshotSink],
) -> Result<SimulationState> {
    if !(t_end.is_finite() && t_end > 0.0) {
        return Err(MuskatError::Parameter(format!("t_end must be positive, got {t_end}")));
    }
    if monitor.cadence == 0 {
        return Err(MuskatError::Parameter("monitor cadence must be at least 1".into()));
    }
    ws.check(&f0)?;
    cfg.validate(params, ws.grid())?;
    let indices = monitor
        .sobolev_indices
        .iter()
        .map(|&s| SobolevIndex::new(s))
        .collect::<Result<Vec<_>>>()?;
    let mut blow_up = monitor.blow_up.map(BlowUpMonitor::new).transpose()?;
    let stepper = Stepper { cfg, params, ws };
    let explicit_cap = match cfg.scheme {
        Scheme::Rk4Explicit => cfg.explicit_limit(params, ws.grid()),
        _ => f64::INFINITY,
    };

    let mut state = SimulationState::new(f0, indices);
    if let Some(m) = blow_up.as_mut() {
        m.observe(&state);
    }
    emit(&mut state, sinks)?;
    let mut dt = cfg.dt;
    let end_slack = 1e-12 * t_end.max(1.0);

    let termination = loop {
        if state.t >= t_end - end_slack {
            break Termination::EndTime;
        }
        let h = dt.min(t_end - state.t);
        let next = if cfg.adapt {
            match adaptive_step(&state, &stepper, h, cfg) {
                Ok(Some((next, used, suggestion))) => {
                    // a step clipped at t_end does not shrink the working size
                    if used < h || h == dt {
                        dt = suggestion.min(explicit_cap);
                    }
                    Ok(next)
                }
                Ok(None) => break Termination::StepTooSmall { t: state.t, dt: h },
                Err(e) => Err(e),
            }
        } else {
            advance_state(&state, &stepper, h)
        };
        state = match next {
            Ok(s) => s,
            Err(MuskatError::NonFiniteState { t }) => {
                break Termination::BlowUp { t, reason: "non-finite interface values".into() }
            }
            Err(MuskatError::NonFiniteValue { x }) => {
                break Termination::BlowUp {
                    t: state.t,
                    reason: format!("non-finite operator value at x = {x}"),
                }
            }
            Err(e) => return Err(e),
        };
        if let Some(m) = blow_up.as_mut() {
            let status = m.observe(&state);
            if status.is_flagged() {
                break Termination::BlowUp { t: state.t, reason: format!("{status:?}") };
            }
        }
        if state.step_count % monitor.cadence == 0 && state.t < t_end - end_slack {
            emit(&mut state, sinks)?;
        }
    };
    if state.monitors.times.last() != Some(&state.t) {
        emit(&mut state, sinks)?;
    }
    state.termination = Some(termination);
    Ok(state)
}

/// Step doubling: compares one step of `h` with two of `h/2`, halving until
/// the difference is within `tolerance * h`. Returns the accepted state, the
/// step size used and the suggested next size, or `None` below `dt_min`.
fn adaptive_step(
    state: &SimulationState,
    stepper: &Stepper<'_>,
    h: f64,
    cfg: &SchemeConfig,
) -> Result<Option<(SimulationState, f64, f64)>> {
    let mut h = h;
    loop {
        if h < cfg.dt_min {
            return Ok(None);
        }
        let big = advance_state(state, stepper, h)?;
        let half = advance_state(state, stepper, 0.5 * h)?;
        let mut small = advance_state(&half, stepper, 0.5 * h)?;
        small.step_count = state.step_count + 1;
        let allowed = cfg.tolerance * h;
        let err = big.f.l2_distance(&small.f);
        if err <= allowed {
            let suggestion = if err < 0.3 * allowed {
                2.0 * h
            } else if err > 0.9 * allowed {
                0.5 * h
            } else {
                h
            };
            return Ok(Some((small, h, suggestion)));
        }
        h *= 0.5;
    }
}
