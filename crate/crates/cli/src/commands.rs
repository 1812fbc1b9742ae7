use std::f64::consts::PI;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use muskat::analysis::spectrum_report;
use muskat::evolution::run;
use muskat::flow::{bulk_velocity_with_clearance, kinematic_consistency, PressureField, Region};
use muskat::kernels::cancellation_identity_residual;
use muskat::operators::{direct_rhs, full_phi};
use muskat::{trig_mode, Grid, MuskatError, OperatorWorkspace, PhysicalParams, QuadratureRule, SpectralField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{random_interface, RunConfig};
use crate::error::CliError;
use crate::output::{fmt_f64, read_snapshot_bin, RunMetadata, RunWriter};

pub struct SimulateSummary {
    pub directory: PathBuf,
    pub metadata: RunMetadata,
}

pub fn simulate(config_path: &Path, output_dir: Option<&Path>) -> Result<SimulateSummary, CliError> {
    let mut config = RunConfig::load(config_path)?;
    if let Some(dir) = output_dir {
        config.output.directory = dir.display().to_string();
    }
    let grid = config.grid()?;
    let params = config.params()?;
    let f0 = config.initial_interface()?;
    let ws = OperatorWorkspace::new(grid)?;
    let directory = PathBuf::from(&config.output.directory);
    let mut writer = RunWriter::create(&directory, &config.output.formats, &config.monitor.sobolev_indices, grid)?;

    let start = Instant::now();
    let state = run(f0, config.t_end, &config.scheme, &config.monitor_config(), &params, &ws, &mut [&mut writer])?;
    let wall_time_s = start.elapsed().as_secs_f64();
    writer.finish()?;

    let termination = serde_json::to_value(&state.termination).map_err(|e| CliError::Failed(e.to_string()))?;
    let metadata = RunMetadata {
        config,
        termination,
        final_t: state.t,
        steps: state.step_count,
        initial_mean: state.initial_mean(),
        final_mean: state.f.integral_mean(),
        max_mean_drift: state.monitors.mean_drift.iter().fold(0.0, |a: f64, &d| a.max(d)),
        wall_time_s,
        library_version: muskat::VERSION.to_string(),
        cli_version: env!("CARGO_PKG_VERSION").to_string(),
    };
    let path = directory.join("run.json");
    let text = serde_json::to_string_pretty(&metadata).map_err(|e| CliError::Failed(e.to_string()))?;
    std::fs::write(&path, text).map_err(|source| CliError::Io { path: path.display().to_string(), source })?;
    Ok(SimulateSummary { directory, metadata })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerifyLevel {
    Quick,
    Full,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckRow {
    pub name: &'static str,
    pub n: usize,
    pub value: f64,
    pub tolerance: f64,
}

impl CheckRow {
    pub fn passed(&self) -> bool {
        self.value < self.tolerance
    }
}

/// Cross-oracle checks; `phi2_fault` flips the sign of `Phi2` to prove the
/// decomposition check can fail.
pub fn verify(level: VerifyLevel, phi2_fault: bool) -> Result<Vec<CheckRow>, CliError> {
    let (n, interfaces, max_mode) = match level {
        VerifyLevel::Quick => (128, 3, 16),
        VerifyLevel::Full => (512, 10, 32),
    };
    let grid = Grid::new(n)?;
    let mut ws = OperatorWorkspace::new(grid)?;
    if phi2_fault {
        ws = ws.with_injected_phi2_sign_fault();
    }
    let params = PhysicalParams::from_contrast(1.0, 1.0, 1.0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let samples: Vec<SpectralField> = (0..interfaces)
        .map(|_| {
            let slope = rng.gen_range(0.2..2.0);
            random_interface(&mut rng, grid, slope)
        })
        .collect();
    let mut rows = Vec::new();

    let zero = SpectralField::zeros(grid);
    let mut worst = 0.0_f64;
    for m in -max_mode..=max_mode {
        let e = trig_mode(grid, m);
        worst = worst.max(full_phi(&zero, &e, &ws)?.max_abs_diff(&e.scale(-2.0 * PI * m.abs() as f64)));
    }
    rows.push(CheckRow { name: "symbol at zero", n, value: worst, tolerance: 1e-9 });

    let mut worst = 0.0_f64;
    for f in &samples {
        let direct = direct_rhs(f, &params, &ws)?;
        let decomposed = full_phi(f, f, &ws)?.scale(params.rate_constant());
        worst = worst.max(direct.max_abs_diff(&decomposed));
    }
    rows.push(CheckRow { name: "decomposition vs direct", n, value: worst, tolerance: 1e-7 });

    let rule = QuadratureRule::desingularized(n)?;
    let mut worst = 0.0_f64;
    for f in &samples {
        for x in [-2.2, 0.0, 1.3] {
            worst = worst.max(cancellation_identity_residual(f, x, &rule)?.abs());
        }
    }
    rows.push(CheckRow { name: "cancellation identity", n, value: worst, tolerance: 1e-8 });

    let mut worst = 0.0_f64;
    for f in &samples {
        worst = worst.max(kinematic_consistency(f, &params, &ws)?);
    }
    rows.push(CheckRow { name: "kinematic consistency", n, value: worst, tolerance: 1e-7 });

    let report = spectrum_report(16.min(n as u32 / 8), &params, &ws, muskat::analysis::DEFAULT_FRECHET_EPS)?;
    rows.push(CheckRow { name: "spectrum match", n, value: report.max_rel_error(), tolerance: 1e-4 });
    Ok(rows)
}

pub fn write_verify_table(rows: &[CheckRow], out: &mut impl Write) -> std::io::Result<()> {
    writeln!(out, "{:<26} {:>5} {:>11} {:>9}  status", "check", "n", "value", "tol")?;
    for r in rows {
        let status = if r.passed() { "PASS" } else { "FAIL" };
        writeln!(out, "{:<26} {:>5} {:>11.3e} {:>9.0e}  {status}", r.name, r.n, r.value, r.tolerance)?;
    }
    Ok(())
}

pub struct SpectrumArgs {
    pub k: f64,
    pub mu: f64,
    pub delta_rho: f64,
    pub m_max: u32,
    pub n_points: Option<usize>,
    pub eps: f64,
}

/// CSV with columns `m,exact,numerical,rel_error`.
pub fn spectrum(args: &SpectrumArgs) -> Result<String, CliError> {
    let params = PhysicalParams::from_contrast(args.k, args.mu, args.delta_rho)
        .map_err(|e| CliError::Argument(e.to_string()))?;
    let n = args
        .n_points
        .unwrap_or_else(|| (8 * args.m_max as usize).next_power_of_two().max(64));
    if args.m_max == 0 || args.m_max as usize > n / 8 {
        return Err(CliError::Argument(format!(
            "--m-max {} must lie in [1, n/8] = [1, {}]",
            args.m_max,
            n / 8
        )));
    }
    let ws = OperatorWorkspace::new(Grid::new(n).map_err(|e| CliError::Argument(e.to_string()))?)?;
    let report = spectrum_report(args.m_max, &params, &ws, args.eps)
        .map_err(|e| match e {
            MuskatError::Parameter(_) => CliError::Argument(e.to_string()),
            other => other.into(),
        })?;
    let mut csv = String::from("m,exact,numerical,rel_error\n");
    for i in 0..report.modes.len() {
        csv.push_str(&format!(
            "{},{},{},{}\n",
            report.modes[i],
            fmt_f64(report.exact_rates[i]),
            fmt_f64(report.numerical_rates[i]),
            fmt_f64(report.rel_errors[i])
        ));
    }
    Ok(csv)
}

pub struct VelocityArgs {
    pub config: PathBuf,
    pub snapshot: Option<PathBuf>,
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    pub nx: usize,
    pub ny: usize,
    pub clearance: f64,
}

fn axis(range: (f64, f64), count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![range.0];
    }
    (0..count)
        .map(|i| range.0 + (range.1 - range.0) * i as f64 / (count - 1) as f64)
        .collect()
}

/// CSV with columns `x,y,v1,v2,region,p`, `x` varying fastest.
pub fn velocity(args: &VelocityArgs) -> Result<String, CliError> {
    let config = RunConfig::load(&args.config)?;
    let grid = config.grid()?;
    let params = config.params()?;
    let f = match &args.snapshot {
        Some(path) => {
            let (_, samples) = read_snapshot_bin(path)?;
            SpectralField::from_samples(grid, samples).map_err(|e| CliError::Argument(e.to_string()))?
        }
        None => config.initial_interface()?,
    };
    if args.nx == 0 || args.ny == 0 {
        return Err(CliError::Argument("--nx and --ny must be at least 1".into()));
    }
    for (name, (lo, hi)) in [("x", args.x_range), ("y", args.y_range)] {
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(CliError::Argument(format!("--{name}min must not exceed --{name}max")));
        }
    }
    let xs = axis(args.x_range, args.nx);
    let ys = axis(args.y_range, args.ny);
    let points: Vec<(f64, f64)> = ys.iter().flat_map(|&y| xs.iter().map(move |&x| (x, y))).collect();
    let flow = bulk_velocity_with_clearance(&f, &params, &points, args.clearance).map_err(|e| match e {
        MuskatError::Clearance { index, x, y, clearance } => CliError::Argument(format!(
            "row {} of the output (point ({x}, {y})) lies within clearance {clearance} of the interface",
            index + 1
        )),
        other => other.into(),
    })?;
    let ws = OperatorWorkspace::new(grid)?;
    let pressure = PressureField::new(&f, &params, &ws)?;
    let c_minus = pressure.matching_constant(0.0);
    let mut csv = String::from("x,y,v1,v2,region,p\n");
    for (i, &(x, y)) in flow.sample_points.iter().enumerate() {
        let (v1, v2) = flow.velocity[i];
        let region = flow.region_tags[i];
        let (label, c) = match region {
            Region::Plus => ("plus", 0.0),
            Region::Minus => ("minus", c_minus),
        };
        let p = pressure.value(region, x, y, c);
        csv.push_str(&format!(
            "{},{},{},{},{label},{}\n",
            fmt_f64(x),
            fmt_f64(y),
            fmt_f64(v1),
            fmt_f64(v2),
            fmt_f64(p)
        ));
    }
    Ok(csv)
}
