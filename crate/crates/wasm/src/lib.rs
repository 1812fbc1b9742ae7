//! Browser bindings: an interactive run, the linearized spectrum and a
//! velocity lattice. The pure functions are usable natively; the
//! `wasm_bindgen` wrappers only convert errors.

use muskat::analysis::{spectrum_report, DEFAULT_FRECHET_EPS};
use muskat::evolution::{run, MonitorConfig, Scheme, SchemeConfig, SimulationState};
use muskat::flow::{BulkVelocity, DEFAULT_CLEARANCE};
use muskat::{Grid, MuskatError, OperatorWorkspace, PhysicalParams, SobolevIndex, SpectralField};
use wasm_bindgen::prelude::*;

fn interface(grid: Grid, cos_amplitudes: &[f64]) -> Result<SpectralField, MuskatError> {
    let modes: Vec<(u32, f64, f64)> = cos_amplitudes
        .iter()
        .enumerate()
        .map(|(i, &a)| (i as u32 + 1, a, 0.0))
        .collect();
    SpectralField::from_modes(grid, &modes)
}

/// An IMEX run advanced in chunks from the page.
pub struct Evolution {
    state: SimulationState,
    params: PhysicalParams,
    workspace: OperatorWorkspace,
    scheme: SchemeConfig,
}

impl Evolution {
    pub fn new(
        n_points: usize,
        cos_amplitudes: &[f64],
        k: f64,
        mu: f64,
        delta_rho: f64,
        dt: f64,
    ) -> Result<Self, MuskatError> {
        let grid = Grid::new(n_points)?;
        let params = PhysicalParams::from_contrast(k, mu, delta_rho)?;
        let scheme = SchemeConfig::new(Scheme::ImexCnab, dt);
        scheme.validate(&params, grid)?;
        Ok(Self {
            state: SimulationState::new(interface(grid, cos_amplitudes)?, vec![SobolevIndex::new(2.0)?]),
            params,
            workspace: OperatorWorkspace::new(grid)?,
            scheme,
        })
    }

    /// Advances by `duration` and returns the new samples.
    pub fn advance(&mut self, duration: f64) -> Result<Vec<f64>, MuskatError> {
        let monitor = MonitorConfig { cadence: u64::MAX, sobolev_indices: vec![2.0], blow_up: None };
        let next = run(self.state.f.clone(), duration, &self.scheme, &monitor, &self.params, &self.workspace, &mut [])?;
        self.state.t += next.t;
        self.state.step_count += next.step_count;
        self.state.f = next.f;
        Ok(self.samples())
    }

    pub fn samples(&self) -> Vec<f64> {
        self.state.f.samples().to_vec()
    }

    pub fn time(&self) -> f64 {
        self.state.t
    }

    pub fn h2_norm(&self) -> f64 {
        self.state.f.sobolev_norm(SobolevIndex::new(2.0).expect("valid index"))
    }
}

/// Numerical eigenvalues on `cos(m x)`, `m = 1..=m_max`.
pub fn spectrum_rates(k: f64, mu: f64, delta_rho: f64, m_max: u32) -> Result<Vec<f64>, MuskatError> {
    let params = PhysicalParams::from_contrast(k, mu, delta_rho)?;
    let n = (8 * m_max as usize).next_power_of_two().max(64);
    let ws = OperatorWorkspace::new(Grid::new(n)?)?;
    Ok(spectrum_report(m_max, &params, &ws, DEFAULT_FRECHET_EPS)?.numerical_rates)
}

/// Interleaved `(v1, v2)` on an `nx` by `ny` lattice, `x` fastest; points
/// within the default clearance of the interface give `NaN`.
#[allow(clippy::too_many_arguments)]
pub fn velocity_lattice(
    n_points: usize,
    cos_amplitudes: &[f64],
    k: f64,
    mu: f64,
    delta_rho: f64,
    x_range: (f64, f64),
    y_range: (f64, f64),
    nx: usize,
    ny: usize,
) -> Result<Vec<f64>, MuskatError> {
    let grid = Grid::new(n_points)?;
    let params = PhysicalParams::from_contrast(k, mu, delta_rho)?;
    let f = interface(grid, cos_amplitudes)?;
    let sampler = BulkVelocity::new(&f, &params);
    let step = |r: (f64, f64), count: usize, i: usize| {
        if count < 2 {
            r.0
        } else {
            r.0 + (r.1 - r.0) * i as f64 / (count - 1) as f64
        }
    };
    let mut out = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        let y = step(y_range, ny, j);
        for i in 0..nx {
            let x = step(x_range, nx, i);
            if (y - f.eval_at(x)).abs() <= DEFAULT_CLEARANCE {
                out.extend([f64::NAN, f64::NAN]);
            } else {
                let (v1, v2) = sampler.velocity(x, y);
                out.extend([v1, v2]);
            }
        }
    }
    Ok(out)
}

fn js(e: MuskatError) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen(js_name = Evolution)]
pub struct JsEvolution(Evolution);

#[wasm_bindgen(js_class = Evolution)]
impl JsEvolution {
    #[wasm_bindgen(constructor)]
    pub fn new(
        n_points: usize,
        cos_amplitudes: Vec<f64>,
        k: f64,
        mu: f64,
        delta_rho: f64,
        dt: f64,
    ) -> Result<JsEvolution, JsError> {
        Evolution::new(n_points, &cos_amplitudes, k, mu, delta_rho, dt)
            .map(JsEvolution)
            .map_err(js)
    }

    pub fn advance(&mut self, duration: f64) -> Result<Vec<f64>, JsError> {
        self.0.advance(duration).map_err(js)
    }

    pub fn samples(&self) -> Vec<f64> {
        self.0.samples()
    }

    pub fn time(&self) -> f64 {
        self.0.time()
    }

    pub fn h2_norm(&self) -> f64 {
        self.0.h2_norm()
    }
}

#[wasm_bindgen]
pub fn spectrum(k: f64, mu: f64, delta_rho: f64, m_max: u32) -> Result<Vec<f64>, JsError> {
    spectrum_rates(k, mu, delta_rho, m_max).map_err(js)
}

#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn velocity(
    n_points: usize,
    cos_amplitudes: Vec<f64>,
    k: f64,
    mu: f64,
    delta_rho: f64,
    xmin: f64,
    xmax: f64,
    ymin: f64,
    ymax: f64,
    nx: usize,
    ny: usize,
) -> Result<Vec<f64>, JsError> {
    velocity_lattice(n_points, &cos_amplitudes, k, mu, delta_rho, (xmin, xmax), (ymin, ymax), nx, ny)
        .map_err(js)
}
