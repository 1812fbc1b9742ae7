use std::f64::consts::PI;
use std::io::Write;
use std::time::{Duration, Instant};

use muskat::analysis::{fit_decay_rate, localization_defect, spectrum_report, DEFAULT_FRECHET_EPS};
use muskat::evolution::{run, MonitorConfig, Scheme, SchemeConfig, Termination};
use muskat::flow::{boundary_traces, horizontal_flux, kinematic_consistency, BulkVelocity, PressureField, Region};
use muskat::kernels::cancellation_identity_residual;
use muskat::operators::{direct_rhs, full_phi, phi3, phi3_naive};
use muskat::{trig_mode, Grid, OperatorWorkspace, PhysicalParams, QuadratureRule, Result, SpectralField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    passed: bool,
    detail: String,
}

fn check(passed: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { passed, detail })
}

fn unit() -> PhysicalParams {
    PhysicalParams::from_contrast(1.0, 1.0, 1.0).unwrap()
}

fn workspace(n: usize) -> OperatorWorkspace {
    OperatorWorkspace::new(Grid::new(n).unwrap()).unwrap()
}

/// Random trigonometric polynomial of degree 8 rescaled to `max |f'| = slope`.
fn random_interface(rng: &mut ChaCha8Rng, grid: Grid, slope: f64) -> SpectralField {
    let modes: Vec<(u32, f64, f64)> = (1..=8)
        .map(|m| {
            let w = 1.0 / (m * m) as f64;
            (m, w * rng.gen_range(-1.0..1.0), w * rng.gen_range(-1.0..1.0))
        })
        .collect();
    let f = SpectralField::from_modes(grid, &modes).unwrap();
    let f = f.add_constant(rng.gen_range(-0.5..0.5));
    let current = f.derivative(1).max_abs();
    f.scale(slope / current)
}

fn symbol_identification() -> Result<Outcome> {
    let ws = workspace(256);
    let zero = SpectralField::zeros(ws.grid());
    let mut worst = 0.0_f64;
    for m in -32..=32_i64 {
        let e = trig_mode(ws.grid(), m);
        let out = full_phi(&zero, &e, &ws)?;
        worst = worst.max(out.max_abs_diff(&e.scale(-2.0 * PI * m.abs() as f64)));
    }
    check(worst < 1e-9, format!("max abs error {worst:.3e} (tol 1e-9)"))
}

fn spectrum() -> Result<Outcome> {
    let ws = workspace(128);
    let mut worst = 0.0_f64;
    for (k, mu, drho) in [(1.0, 1.0, 1.0), (2.0, 1.0, 1.0), (1.0, 0.5, 3.0)] {
        let params = PhysicalParams::from_contrast(k, mu, drho)?;
        worst = worst.max(spectrum_report(16, &params, &ws, DEFAULT_FRECHET_EPS)?.max_rel_error());
    }
    check(worst < 1e-4, format!("max relative error {worst:.3e} over m = 1..16 (tol 1e-4)"))
}

fn decomposition_oracle() -> Result<Outcome> {
    let ws = workspace(256);
    let params = unit();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0_f64;
    for _ in 0..20 {
        let slope = rng.gen_range(0.2..2.0);
        let f = random_interface(&mut rng, ws.grid(), slope);
        let direct = direct_rhs(&f, &params, &ws)?;
        let decomposed = full_phi(&f, &f, &ws)?.scale(params.rate_constant());
        worst = worst.max(direct.max_abs_diff(&decomposed));
    }
    check(worst < 1e-7, format!("max abs diff {worst:.3e} over 20 interfaces (tol 1e-7)"))
}

fn cancellation_identity() -> Result<Outcome> {
    let grid = Grid::new(1024)?;
    let rule = QuadratureRule::desingularized(1024)?;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0_f64;
    for _ in 0..10 {
        let slope = rng.gen_range(0.2..2.0);
        let f = random_interface(&mut rng, grid, slope);
        for x in [-2.9, -1.1, 0.0, 0.8, 2.4] {
            worst = worst.max(cancellation_identity_residual(&f, x, &rule)?.abs());
        }
    }
    check(worst < 1e-8, format!("max residual {worst:.3e} over 10 interfaces (tol 1e-8)"))
}

fn phi3_split() -> Result<Outcome> {
    let ws = workspace(512);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0_f64;
    for _ in 0..3 {
        let slope = rng.gen_range(0.2..2.0);
        let f = random_interface(&mut rng, ws.grid(), slope);
        worst = worst.max(phi3(&f, &ws)?.max_abs_diff(&phi3_naive(&f, &ws)?));
    }
    check(worst < 1e-8, format!("max diff {worst:.3e} at n = 512 (tol 1e-8)"))
}

fn mean_conservation() -> Result<Outcome> {
    let ws = workspace(128);
    let f0 = SpectralField::from_fn(ws.grid(), |x| 0.5 * x.cos());
    let cfg = SchemeConfig::new(Scheme::ImexCnab, 0.01);
    let mon = MonitorConfig { cadence: 10, sobolev_indices: vec![], blow_up: None };
    let out = run(f0, 5.0, &cfg, &mon, &unit(), &ws, &mut [])?;
    let drift = out.monitors.mean_drift.iter().fold(0.0_f64, |a, &d| a.max(d));
    let ended = out.termination == Some(Termination::EndTime);
    check(ended && drift < 1e-10, format!("max |mean drift| {drift:.3e} up to t = {} (tol 1e-10)", out.t))
}

fn exponential_stability() -> Result<Outcome> {
    let ws = workspace(128);
    let f0 = SpectralField::from_fn(ws.grid(), |x| 1e-3 * x.cos());
    let cfg = SchemeConfig::new(Scheme::ImexCnab, 0.01);
    let mon = MonitorConfig { cadence: 10, sobolev_indices: vec![2.0], blow_up: None };
    let out = run(f0, 4.0, &cfg, &mon, &unit(), &ws, &mut [])?;
    let fit = fit_decay_rate(&out.monitors, 2.0, (0.0, 4.0))?;
    let rel = (fit.fitted_rate - 0.5).abs() / 0.5;
    check(
        rel < 0.05,
        format!("fitted H^2 rate {:.6} vs 0.5, relative deviation {rel:.2e} (tol 5%)", fit.fitted_rate),
    )
}

fn kinematic_equivalence() -> Result<Outcome> {
    let ws = workspace(256);
    let params = unit();
    let grid = ws.grid();
    let interfaces = [
        SpectralField::from_fn(grid, |x| 0.3 * x.cos()),
        SpectralField::from_fn(grid, |x| 0.5 * x.cos() + 0.2 * (2.0 * x).sin()),
        SpectralField::from_fn(grid, |x| 0.1 * (3.0 * x).cos() + 0.4),
        SpectralField::from_fn(grid, |x| 0.8 * x.sin() - 0.1 * (4.0 * x).cos()),
        SpectralField::from_fn(grid, |x| 0.4 / (1.2 - x.cos())),
    ];
    let mut worst = 0.0_f64;
    for f in &interfaces {
        worst = worst.max(kinematic_consistency(f, &params, &ws)?);
    }
    check(worst < 1e-7, format!("max kinematic defect {worst:.3e} over 5 interfaces (tol 1e-7)"))
}

fn flow_structure() -> Result<Outcome> {
    let ws = workspace(128);
    let params = unit();
    let f = SpectralField::from_fn(ws.grid(), |x| 0.3 * x.cos() + 0.1 * (2.0 * x).sin());
    let sampler = BulkVelocity::new(&f, &params);

    let h = 1e-4;
    let mut divergence = 0.0_f64;
    for i in 0..10 {
        for k in 0..10 {
            let x = -3.0 + 0.6 * i as f64 + 0.05;
            let gap = 0.3 + 0.25 * (k / 2) as f64;
            let y = f.eval_at(x) + if k % 2 == 0 { gap } else { -gap };
            let (e, w) = (sampler.velocity(x + h, y), sampler.velocity(x - h, y));
            let (n, s) = (sampler.velocity(x, y + h), sampler.velocity(x, y - h));
            divergence = divergence.max(((e.0 - w.0 + n.1 - s.1) / (2.0 * h)).abs());
        }
    }

    let traces = boundary_traces(&f, &params, &ws)?;
    let df = f.derivative(1);
    let omega = muskat::flow::vorticity(&f, &params).omega_bar;
    let mut jump_error = 0.0_f64;
    let mut limit_error = 0.0_f64;
    let eps = 1e-3;
    for j in 0..ws.grid().n_points() {
        let d = df.samples()[j];
        let jump = -omega.samples()[j] / (1.0 + d * d);
        let (vp, vm) = (traces.v_plus[j], traces.v_minus[j]);
        jump_error = jump_error.max((vp[0] - vm[0] - jump).abs()).max((vp[1] - vm[1] - jump * d).abs());
        if j % 8 == 0 {
            let x = ws.grid().node(j);
            let y = f.samples()[j];
            for (sign, trace) in [(1.0, vp), (-1.0, vm)] {
                let a = sampler.velocity(x, y + sign * eps);
                let b = sampler.velocity(x, y + sign * 2.0 * eps);
                let limit = (2.0 * a.0 - b.0, 2.0 * a.1 - b.1);
                limit_error = limit_error.max((limit.0 - trace[0]).abs()).max((limit.1 - trace[1]).abs());
            }
        }
    }

    let d = f.max_abs() + 1.0;
    let circulation = horizontal_flux(&sampler, d, 128).abs().max(horizontal_flux(&sampler, -d, 128).abs());

    let pressure = PressureField::new(&f, &params, &ws)?;
    let c_minus = pressure.matching_constant(0.0);
    let mut continuity = 0.0_f64;
    for x in [-2.5, -1.0, 0.7, 1.6, 3.0] {
        let y = f.eval_at(x);
        let jump = pressure.value(Region::Plus, x, y, 0.0) - pressure.value(Region::Minus, x, y, c_minus);
        continuity = continuity.max(jump.abs());
    }

    check(
        divergence < 1e-6 && jump_error < 1e-12 && limit_error < 1e-4 && circulation < 1e-8 && continuity < 1e-5,
        format!(
            "divergence {divergence:.2e} (1e-6), trace jump {jump_error:.2e}, bulk limit {limit_error:.2e} (1e-4), \
             circulation {circulation:.2e} (1e-8), pressure jump {continuity:.2e} (1e-5)"
        ),
    )
}

fn smoothing() -> Result<Outcome> {
    let ws = workspace(128);
    let f0 = SpectralField::from_fn(ws.grid(), |x| {
        0.5 * x.cos() + 1e-3 * (1..64).map(|m| (-0.05 * m as f64).exp() * (m as f64 * x).cos()).sum::<f64>()
    });
    let cfg = SchemeConfig::new(Scheme::ImexCnab, 0.005);
    let mon = MonitorConfig { cadence: 50, sobolev_indices: vec![], blow_up: None };
    let out = run(f0, 1.0, &cfg, &mon, &unit(), &ws, &mut [])?;
    let slope_at = |t: f64| -> Option<f64> {
        let k = out.monitors.times.iter().position(|&s| (s - t).abs() < 1e-9)?;
        out.monitors.fourier_tail_slope[k].value()
    };
    let Some(initial) = slope_at(0.0) else {
        return check(false, "initial tail below floor".into());
    };
    let mut detail = format!("sigma(0) = {initial:.4}");
    let mut passed = true;
    for t in [0.25, 0.5, 1.0] {
        match slope_at(t) {
            Some(s) => {
                passed &= s < initial;
                detail.push_str(&format!(", sigma({t}) = {s:.4}"));
            }
            None => detail.push_str(&format!(", sigma({t}) below floor")),
        }
    }
    check(passed, detail)
}

fn order_estimate(scheme: Scheme, dts: [f64; 3], t_end: f64) -> Result<f64> {
    let ws = workspace(32);
    let f0 = SpectralField::from_fn(ws.grid(), |x| 0.3 * x.cos() + 0.1 * (2.0 * x).sin());
    let mon = MonitorConfig { cadence: 1_000_000, sobolev_indices: vec![], blow_up: None };
    let mut finals = Vec::new();
    for dt in dts {
        let out = run(f0.clone(), t_end, &SchemeConfig::new(scheme, dt), &mon, &unit(), &ws, &mut [])?;
        finals.push(out.f);
    }
    let e1 = finals[0].l2_distance(&finals[1]);
    let e2 = finals[1].l2_distance(&finals[2]);
    Ok((e1 / e2).log2())
}

fn scheme_convergence() -> Result<Outcome> {
    let rk4 = order_estimate(Scheme::Rk4Explicit, [0.1, 0.05, 0.025], 1.0)?;
    let euler = order_estimate(Scheme::ImexEuler, [0.02, 0.01, 0.005], 1.0)?;
    check(
        (3.7..=4.3).contains(&rk4) && (0.8..=1.2).contains(&euler),
        format!("RK4 order {rk4:.3} ([3.7, 4.3]), IMEX-Euler order {euler:.3} ([0.8, 1.2])"),
    )
}

fn localization() -> Result<Outcome> {
    let ws = workspace(512);
    let grid = ws.grid();
    let zero = SpectralField::zeros(grid);
    let f = SpectralField::from_fn(grid, |x| 0.3 * x.cos());
    let h = SpectralField::from_fn(grid, |x| (4.0 * x).cos());
    let at_zero = localization_defect(&zero, 1.0, &h, 3, &ws)?.max();
    let base = localization_defect(&f, 1.0, &h, 3, &ws)?;
    let doubled = localization_defect(&f, 1.0, &h.scale(2.0), 3, &ws)?;
    let linearity = base
        .defects
        .iter()
        .zip(&doubled.defects)
        .fold(0.0_f64, |a, (x, y)| a.max((y - 2.0 * x).abs()));
    let mut trend = vec![base.max_normalized()];
    for p in [4, 5] {
        trend.push(localization_defect(&f, 1.0, &h, p, &ws)?.max_normalized());
    }
    let monotone = trend.windows(2).all(|w| w[1] <= w[0]);
    check(
        at_zero <= 1e-9 && linearity < 1e-10 && monotone,
        format!(
            "defect at f = 0 {at_zero:.2e} (1e-9), linearity {linearity:.2e} (1e-10), \
             normalized defect p = 3, 4, 5: {:.4}, {:.4}, {:.4}",
            trend[0], trend[1], trend[2]
        ),
    )
}

type Criterion = (u32, &'static str, fn() -> Result<Outcome>, Option<Duration>);

fn main() {
    let criteria: [Criterion; 12] = [
        (1, "symbol identification", symbol_identification, Some(Duration::from_secs(5))),
        (2, "spectrum", spectrum, Some(Duration::from_secs(30))),
        (3, "decomposition oracle", decomposition_oracle, Some(Duration::from_secs(120))),
        (4, "cancellation identity", cancellation_identity, Some(Duration::from_secs(60))),
        (5, "phi3 split oracle", phi3_split, None),
        (6, "mean conservation", mean_conservation, None),
        (7, "exponential stability", exponential_stability, Some(Duration::from_secs(60))),
        (8, "kinematic equivalence", kinematic_equivalence, None),
        (9, "flow-field structure", flow_structure, None),
        (10, "smoothing", smoothing, None),
        (11, "scheme convergence", scheme_convergence, None),
        (12, "localization diagnostic", localization, None),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failures = 0;
    let mut out = std::io::stdout();
    for (id, name, criterion, budget) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str()) || *f == id.to_string()) {
            continue;
        }
        let start = Instant::now();
        let outcome = criterion();
        let elapsed = start.elapsed();
        let (passed, detail) = match outcome {
            Ok(o) => (o.passed, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        let in_budget = budget.is_none_or(|b| elapsed <= b);
        let budget_note = budget.map(|b| format!(" (budget {} s)", b.as_secs())).unwrap_or_default();
        let status = if passed && in_budget { "PASS" } else { "FAIL" };
        if status == "FAIL" {
            failures += 1;
        }
        writeln!(
            out,
            "[{status}] {id:>2} {name}: {detail}; {:.2} s{budget_note}",
            elapsed.as_secs_f64()
        )
        .unwrap();
    }
    writeln!(out, "acceptance: {failures} failing").unwrap();
    if failures > 0 {
        std::process::exit(1);
    }
}
