//! The five experiment commands. Each one reads a validated [`RunConfig`],
//! writes its files under `cfg.out` and returns what it wrote.

use std::path::PathBuf;

use hyperrough_core::diagnostics::{
    empirical_cf, histogram_density, ks_critical_value, ks_statistic_sorted, moment_checks, Component,
};
use hyperrough_core::riccati::{
    char_functional, char_functional_limit, joint_cf_limit, limit_levy_exponent, solve_riccati,
    char_functional_from_solution,
};
use hyperrough_core::scheme::{residual_path, simulate_coupled};
use hyperrough_core::{IgParams, ModelParams, RngSeed, TestFunctionPair, UniformGrid};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::batch::{run_batch, BatchStats};
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::output::{create_dir, process_tag, write_csv, Field, Report, Stamp};

/// Test-function constants used by `riccati-check` for the functional
/// convergence gap.
pub const GAP_TEST_FUNCTIONS: (f64, f64) = (1.0, 0.5);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Converge,
    Cf,
    Density,
    RiccatiCheck,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Converge => "converge",
            Command::Cf => "cf",
            Command::Density => "density",
            Command::RiccatiCheck => "riccati-check",
        }
    }
}

pub fn run(cmd: Command, cfg: &RunConfig) -> CliResult<Vec<PathBuf>> {
    create_dir(&cfg.out)?;
    match cmd {
        Command::Simulate => simulate(cfg),
        Command::Converge => converge(cfg).map(|(p, _)| vec![p]),
        Command::Cf => cf(cfg),
        Command::Density => density(cfg),
        Command::RiccatiCheck => riccati_check(cfg).map(|(p, _)| vec![p]),
    }
}

fn stamp(cfg: &RunConfig) -> Stamp {
    Stamp { config_sha256: cfg.hash(), seed: cfg.seed }
}

fn grid(cfg: &RunConfig) -> CliResult<UniformGrid> {
    Ok(UniformGrid::new(cfg.steps, cfg.model.horizon)?)
}

/// Like `f64::max` but NaN wins, so a failed evaluation cannot hide inside a
/// maximum and is caught when the report is written.
fn nan_max(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() { f64::NAN } else { a.max(b) }
}

/// Every configured Hurst index followed by the limit process (`None`).
fn processes(cfg: &RunConfig) -> Vec<Option<f64>> {
    cfg.hurst.iter().copied().map(Some).chain([None]).collect()
}

/// Terminal law of `X` for the limit process, `IG(g0 T/(1+λ), (g0 T/ν)²)`.
pub fn limit_marginal(model: &ModelParams) -> CliResult<IgParams> {
    Ok(model.limit_ig()?.marginal(model.horizon)?)
}

/// One coupled path per process: `t, X, M, residual`.
pub fn simulate(cfg: &RunConfig) -> CliResult<Vec<PathBuf>> {
    let grid = grid(cfg)?;
    let coupled = simulate_coupled(&cfg.model, &cfg.hurst, &grid, RngSeed::new(cfg.seed, 0))?;
    let stamp = stamp(cfg);
    let mut written = Vec::new();
    let named = coupled
        .hurst
        .iter()
        .map(|&h| Some(h))
        .zip(&coupled.pairs)
        .chain([(None, &coupled.limit)]);
    for (h, path) in named {
        let residual = residual_path(path, &cfg.model, h.unwrap_or(-0.5))?;
        let rows = grid.times().enumerate().map(|(k, t)| {
            vec![Field::Num(t), Field::Num(path.x[k]), Field::Num(path.m[k]), Field::Num(residual[k])]
        });
        let file = cfg.out.join(format!("paths_{}.csv", process_tag(h)));
        write_csv(&file, &stamp, &["t", "X", "M", "residual"], rows)?;
        written.push(file);
    }
    Ok(written)
}

/// Runs the Monte Carlo batch of every process, in configuration order.
pub fn batches(cfg: &RunConfig) -> CliResult<Vec<BatchStats>> {
    let grid = grid(cfg)?;
    processes(cfg)
        .into_iter()
        .map(|h| run_batch(&cfg.model, h, &grid, cfg.seed, cfg.paths))
        .collect()
}

fn cf_grid(cfg: &RunConfig) -> Vec<(f64, f64)> {
    cfg.u_grid.iter().flat_map(|&u| cfg.v_grid.iter().map(move |&v| (u, v))).collect()
}

/// Riccati characteristic functional of `(X_T, M_T)` at each grid point, or
/// the closed-form limit for `hurst = None`.
fn model_cf(model: &ModelParams, hurst: Option<f64>, grid: &UniformGrid, uv: &[(f64, f64)]) -> CliResult<Vec<Complex64>> {
    uv.par_iter()
        .map(|&(u, v)| {
            let tf = TestFunctionPair::constants(u, v);
            Ok(match hurst {
                Some(h) => char_functional(model, h, &tf, grid)?,
                None => char_functional_limit(model, &tf)?,
            })
        })
        .collect()
}

/// Diagnostics for every process, in one JSON report.
pub fn converge(cfg: &RunConfig) -> CliResult<(PathBuf, Report)> {
    let grid = grid(cfg)?;
    let model = &cfg.model;
    let limit = limit_marginal(model)?;
    let uv = cf_grid(cfg);
    let l1 = 1.0 + model.lambda;
    let shift = model.g0() * model.horizon;
    let mut report = Report::new("converge", &stamp(cfg));
    let n = cfg.steps;
    for stats in batches(cfg)? {
        let h = stats.hurst;
        let batch = &stats.batch;
        let mut push = |metric: &str, value: f64, se: Option<f64>| report.push(h, n, metric, value, se);

        let mut xs = batch.x.clone();
        xs.sort_by(f64::total_cmp);
        push("ks_x", ks_statistic_sorted(&limit.cdf_sorted(&xs)?), None);
        let mut ys: Vec<f64> = batch.m.iter().map(|m| (m + shift) / l1).collect();
        ys.sort_by(f64::total_cmp);
        // M = (1+λ) Y - g0 T is increasing in Y, so its cdf is the IG cdf at the preimage
        let below = ys.iter().take_while(|y| **y <= 0.0).count();
        let mut cdf_m = vec![0.0; below];
        cdf_m.extend(limit.cdf_sorted(&ys[below..])?);
        push("ks_m", ks_statistic_sorted(&cdf_m), None);
        push("ks_critical_1pct", ks_critical_value(batch.len()), None);

        let limit_cf: Vec<Complex64> = uv.iter().map(|&(u, v)| joint_cf_limit(model, u, v)).collect();
        let mut cf_err: f64 = 0.0;
        for (&(u, v), l) in uv.iter().zip(&limit_cf) {
            cf_err = nan_max(cf_err, (empirical_cf(batch, u, v)? - l).norm());
        }
        push("cf_max_error", cf_err, None);
        if h.is_some() {
            let riccati = model_cf(model, h, &grid, &uv)?;
            let err = riccati.iter().zip(&limit_cf).map(|(a, b)| (a - b).norm()).fold(0.0, nan_max);
            push("riccati_cf_max_error", err, None);
        }

        let hurst = h.unwrap_or(-0.5);
        let checks = moment_checks(&stats.moments, model, hurst, &stats.probe_times)?;
        let last = checks.last().expect("probe times are nonempty");
        let oracle = match h {
            Some(h) => model.linear_mean(h, model.horizon)?,
            None => model.g0() * model.horizon / l1,
        };
        push("mean_x_T", last.mean_x, Some(last.se_x));
        push("mean_x_T_oracle", oracle, None);
        push("mean_x_T_relative_error", (last.mean_x - oracle).abs() / oracle, None);
        push("mean_m_T", last.mean_m, Some(last.se_m));
        push("qv_ratio_T", last.qv_ratio, Some(last.se_qv_ratio));
        let all = |f: fn(&hyperrough_core::diagnostics::MomentCheck) -> bool| {
            if checks.iter().all(f) { 1.0 } else { 0.0 }
        };
        push("martingale_ok", all(|c| c.martingale_ok), None);
        push("mean_bound_ok", all(|c| c.mean_bound_ok), None);
        push("increment_bound_ok", all(|c| c.increment_bound_ok), None);
        push("qv_ratio_T_ok", if last.qv_ok { 1.0 } else { 0.0 }, None);
        push("sup_residual_mean", stats.sup_residual.mean(), Some(stats.sup_residual.stderr()));
        push("sup_abs_m_mean", stats.sup_abs_m.mean(), Some(stats.sup_abs_m.stderr()));
        push("clamped_steps", stats.clamped_steps as f64, None);
        push("non_monotone_paths", stats.non_monotone_paths as f64, None);
    }
    let path = cfg.out.join("converge.json");
    report.write(&path)?;
    Ok((path, report))
}

/// Empirical, Riccati and limit characteristic functions on the `(u, v)` grid.
pub fn cf(cfg: &RunConfig) -> CliResult<Vec<PathBuf>> {
    let grid = grid(cfg)?;
    let uv = cf_grid(cfg);
    let stamp = stamp(cfg);
    let header = [
        "u", "v", "empirical_re", "empirical_im", "riccati_re", "riccati_im", "limit_re", "limit_im",
    ];
    let mut written = Vec::new();
    for stats in batches(cfg)? {
        let riccati = model_cf(&cfg.model, stats.hurst, &grid, &uv)?;
        let mut rows = Vec::with_capacity(uv.len());
        for (&(u, v), r) in uv.iter().zip(&riccati) {
            let e = empirical_cf(&stats.batch, u, v)?;
            let l = joint_cf_limit(&cfg.model, u, v);
            rows.push([u, v, e.re, e.im, r.re, r.im, l.re, l.im].into_iter().map(Field::Num).collect());
        }
        let file = cfg.out.join(format!("cf_{}.csv", process_tag(stats.hurst)));
        write_csv(&file, &stamp, &header, rows)?;
        written.push(file);
    }
    Ok(written)
}

/// Histograms of `X_T` and `M_T` next to the limiting densities.
pub fn density(cfg: &RunConfig) -> CliResult<Vec<PathBuf>> {
    let model = &cfg.model;
    let limit = limit_marginal(model)?;
    let l1 = 1.0 + model.lambda;
    let shift = model.g0() * model.horizon;
    let stamp = stamp(cfg);
    let mut written = Vec::new();
    for stats in batches(cfg)? {
        let mut rows = Vec::new();
        for (component, label) in [(Component::X, "X"), (Component::M, "M")] {
            let hist = histogram_density(&stats.batch, component, cfg.bins)?;
            for (&c, &d) in hist.centers.iter().zip(&hist.densities) {
                let reference = match component {
                    Component::X => limit.pdf(c),
                    Component::M => limit.pdf((c + shift) / l1) / l1,
                };
                rows.push(vec![label.into(), Field::Num(c), Field::Num(d), Field::Num(reference)]);
            }
        }
        let file = cfg.out.join(format!("density_{}.csv", process_tag(stats.hurst)));
        write_csv(&file, &stamp, &["component", "center", "density", "reference"], rows)?;
        written.push(file);
    }
    Ok(written)
}

/// Deterministic checks of the Riccati solver: the functional convergence
/// gap for constant test functions, the real-part bound, and the agreement of
/// the closed-form limit with the Lévy exponent on the `(u, v)` grid.
pub fn riccati_check(cfg: &RunConfig) -> CliResult<(PathBuf, Report)> {
    let grid = grid(cfg)?;
    let model = &cfg.model;
    let n = cfg.steps;
    let mut report = Report::new("riccati-check", &stamp(cfg));
    let (f, h) = GAP_TEST_FUNCTIONS;
    let tf = TestFunctionPair::constants(f, h);
    let limit = char_functional_limit(model, &tf)?;
    for &hurst in &cfg.hurst {
        let sol = solve_riccati(model, hurst, &tf, &grid)?;
        let cf = char_functional_from_solution(model, hurst, &tf, &sol);
        report.push(Some(hurst), n, "functional_gap", (cf - limit).norm(), None);
        report.push(Some(hurst), n, "max_real_part", sol.max_real_part(), None);
        let sup = sol.psi.iter().map(|p| p.norm()).fold(0.0, nan_max);
        report.push(Some(hurst), n, "sup_abs_psi", sup, None);
    }
    let mut identity_err: f64 = 0.0;
    for (u, v) in cf_grid(cfg) {
        let lhs = char_functional_limit(model, &TestFunctionPair::constants(u, v))?;
        let rhs = (limit_levy_exponent(model, u + (1.0 + model.lambda) * v) * model.horizon
            - Complex64::new(0.0, v * model.g0() * model.horizon))
        .exp();
        identity_err = nan_max(identity_err, (lhs - rhs).norm());
    }
    report.push(None, n, "limit_identity_max_error", identity_err, None);
    let path = cfg.out.join("riccati_check.json");
    report.write(&path)?;
    Ok((path, report))
}

impl std::str::FromStr for Command {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [Command::Simulate, Command::Converge, Command::Cf, Command::Density, Command::RiccatiCheck]
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| CliError::Config(format!("unknown command '{s}'")))
    }
}
