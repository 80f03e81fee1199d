//! Acceptance suite. Every criterion runs in sequence inside one test so that
//! the wall-clock budgets are measured without competing test threads. One
//! `[PASS]` or `[FAIL]` line per criterion goes straight to stderr, bypassing
//! the test harness capture, and the test fails if any criterion fails.

use std::collections::HashMap;
use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use hyperrough::batch::{run_batch, BatchStats};
use hyperrough::config::{DEFAULT_LADDER, DEFAULT_U_GRID, DEFAULT_V_GRID};
use hyperrough_core::diagnostics::{
    empirical_cf, ks_statistic_sorted, ks_two_sample, ks_two_sample_critical_value, moment_checks,
    oscillation_moduli, up_crossings, Component,
};
use hyperrough_core::ig::hitting_time_sample;
use hyperrough_core::riccati::{char_functional, char_functional_limit, joint_cf_limit, limit_levy_exponent};
use hyperrough_core::{FractionalKernel, ModelParams, RngSeed, TestFunctionPair, UniformGrid, VolterraScheme};
use num_complex::Complex64;

const SEED: u64 = 42;
const STEPS: usize = 2000;
const PATHS: u64 = 100_000;
const TARGET_H: f64 = -0.49;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: String) -> Self {
        Self { pass, detail }
    }
}

fn within(budget_secs: u64, elapsed: Duration) -> (bool, String) {
    (elapsed.as_secs_f64() < budget_secs as f64, format!("{:.1}s of {budget_secs}s", elapsed.as_secs_f64()))
}

fn decreasing(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[1] < w[0])
}

fn fmt_list(values: &[f64]) -> String {
    let parts: Vec<String> = values.iter().map(|v| format!("{v:.4e}")).collect();
    format!("[{}]", parts.join(", "))
}

/// Monte Carlo batches keyed by Hurst index, generated once and reused.
#[derive(Default)]
struct Batches {
    by_h: HashMap<u64, BatchStats>,
}

impl Batches {
    fn get(&mut self, model: &ModelParams, h: f64) -> &BatchStats {
        self.by_h.entry(h.to_bits()).or_insert_with(|| {
            let grid = UniformGrid::new(STEPS, model.horizon).unwrap();
            run_batch(model, Some(h), &grid, SEED, PATHS).unwrap()
        })
    }
}

fn resolvent_identity() -> Outcome {
    let start = Instant::now();
    let mut pass = true;
    let mut parts = Vec::new();
    for h in [-0.45, -0.3, 0.0, 0.5] {
        let k = FractionalKernel::new(h).unwrap();
        for alpha in [1.0, 4.0] {
            let coarse = k.resolvent_residual(alpha, &UniformGrid::new(STEPS, 1.0).unwrap());
            let fine = k.resolvent_residual(alpha, &UniformGrid::new(2 * STEPS, 1.0).unwrap());
            match (coarse, fine) {
                (Ok(c), Ok(f)) => {
                    let ok = c <= 1e-3 && c / f >= 1.5;
                    pass &= ok;
                    parts.push(format!("H={h} a={alpha}: {c:.2e} ratio {:.1}{}", c / f, if ok { "" } else { " FAIL" }));
                }
                (c, f) => {
                    pass = false;
                    let err = c.err().or(f.err()).unwrap();
                    parts.push(format!("H={h} a={alpha}: error ({err}) FAIL"));
                }
            }
        }
    }
    let (fast, t) = within(10, start.elapsed());
    Outcome::new(pass && fast, format!("{}; {t}", parts.join("; ")))
}

fn ig_sampler_vs_hitting_times(model: &ModelParams) -> Outcome {
    let start = Instant::now();
    let n = 10_000;
    // first passage of s + b W_s through c T has the law IG(cT, (cT/b)^2)
    let law = model.limit_ig().unwrap().marginal(model.horizon).unwrap();
    let c = law.mean() / model.horizon;
    let b = law.mean() / law.lam.sqrt();
    let mut rng = RngSeed::new(SEED, 0).rng();
    let sampled: Vec<f64> = (0..n).map(|_| law.sample(&mut rng)).collect();
    let mut rng = RngSeed::new(SEED, 1).rng();
    let mut hitting = Vec::with_capacity(n);
    while hitting.len() < n {
        if let Some(t) = hitting_time_sample(1.0, b, c, model.horizon, &mut rng).unwrap() {
            hitting.push(t);
        }
    }
    let ks = ks_two_sample(&sampled, &hitting).unwrap();
    let crit = ks_two_sample_critical_value(n, n);
    let (fast, t) = within(60, start.elapsed());
    Outcome::new(ks < crit && fast, format!("KS {ks:.4} vs critical {crit:.4}; {t}"))
}

fn moment_identities(model: &ModelParams, batches: &mut Batches) -> Outcome {
    let start = Instant::now();
    let stats = batches.get(model, TARGET_H);
    let checks = moment_checks(&stats.moments, model, TARGET_H, &stats.probe_times).unwrap();
    let last = checks.last().unwrap();
    let bound_ok = checks.iter().all(|c| c.mean_bound_ok);
    let pass = last.martingale_ok && last.qv_ok && bound_ok;
    let worst_bound = checks
        .iter()
        .map(|c| (c.mean_x - c.drift_bound) / c.se_x)
        .fold(f64::NEG_INFINITY, f64::max);
    let (fast, t) = within(600, start.elapsed());
    Outcome::new(
        pass && fast,
        format!(
            "E[M_T]={:.2e} (se {:.1e}); qv ratio {:.4}; max (E[X_t]-bound)/se {:.2}; {t}",
            last.mean_m, last.se_m, last.qv_ratio, worst_bound
        ),
    )
}

fn mean_oracle(model: &ModelParams, batches: &mut Batches) -> Outcome {
    let stats = batches.get(model, TARGET_H);
    let checks = moment_checks(&stats.moments, model, TARGET_H, &stats.probe_times).unwrap();
    let mc = checks.last().unwrap().mean_x;
    let oracle = model.linear_mean(TARGET_H, model.horizon).unwrap();
    let rel = (mc - oracle).abs() / oracle;
    Outcome::new(rel <= 0.02, format!("E[X_T]={mc:.5} oracle {oracle:.5} relative error {rel:.2e}"))
}

fn functional_convergence(model: &ModelParams) -> Outcome {
    let start = Instant::now();
    let tf = TestFunctionPair::constants(1.0, 0.5);
    let grid = UniformGrid::new(STEPS, model.horizon).unwrap();
    let limit = char_functional_limit(model, &tf).unwrap();
    let gaps: Vec<f64> = [-0.3, -0.4, -0.45, -0.49, -0.499]
        .iter()
        .map(|&h| (char_functional(model, h, &tf, &grid).unwrap() - limit).norm())
        .collect();
    let last = *gaps.last().unwrap();
    let (fast, t) = within(30, start.elapsed());
    Outcome::new(decreasing(&gaps) && last < 0.05 && fast, format!("gaps {}; {t}", fmt_list(&gaps)))
}

fn limit_identity(model: &ModelParams) -> Outcome {
    let start = Instant::now();
    let axis: Vec<f64> = (0..5).map(|i| -3.0 + 1.5 * i as f64).collect();
    let mut worst: f64 = 0.0;
    for &u in &axis {
        for &v in &axis {
            let lhs = char_functional_limit(model, &TestFunctionPair::constants(u, v)).unwrap();
            let rhs = (limit_levy_exponent(model, u + (1.0 + model.lambda) * v) * model.horizon
                - Complex64::new(0.0, v * model.g0() * model.horizon))
            .exp();
            let err = (lhs - rhs).norm();
            worst = if err.is_nan() || worst.is_nan() { f64::NAN } else { worst.max(err) };
        }
    }
    let (fast, t) = within(5, start.elapsed());
    Outcome::new(worst <= 1e-10 && fast, format!("max error {worst:.2e}; {t}"))
}

fn figure_two(model: &ModelParams, batches: &mut Batches) -> Outcome {
    let start = Instant::now();
    let target = batches.get(model, TARGET_H);
    let mut cf_err: f64 = 0.0;
    for &u in &DEFAULT_U_GRID {
        for &v in &DEFAULT_V_GRID {
            let e = empirical_cf(&target.batch, u, v).unwrap();
            cf_err = cf_err.max((e - joint_cf_limit(model, u, v)).norm());
        }
    }
    let law = model.limit_ig().unwrap().marginal(model.horizon).unwrap();
    let ks: Vec<f64> = DEFAULT_LADDER
        .iter()
        .map(|&h| {
            let mut x = batches.get(model, h).batch.component(Component::X).to_vec();
            x.sort_by(f64::total_cmp);
            ks_statistic_sorted(&law.cdf_sorted(&x).unwrap())
        })
        .collect();
    let last = *ks.last().unwrap();
    let pass = cf_err <= 0.05 && decreasing(&ks) && last <= 0.05;
    let (fast, t) = within(900, start.elapsed());
    Outcome::new(
        pass && fast,
        format!(
            "CF error {cf_err:.4}; KS along {:?}: {}{}; {t}",
            DEFAULT_LADDER,
            fmt_list(&ks),
            if decreasing(&ks) { "" } else { " (not decreasing)" }
        ),
    )
}

fn figure_one(model: &ModelParams) -> Outcome {
    let start = Instant::now();
    let grid = UniformGrid::new(STEPS, model.horizon).unwrap();
    // same seed at every H, so path i shares its variates across the ladder
    let means: Vec<f64> = [-0.05, -0.25, -0.45, -0.49]
        .iter()
        .map(|&h| run_batch(model, Some(h), &grid, SEED, 1000).unwrap().sup_residual.mean())
        .collect();
    let (fast, t) = within(300, start.elapsed());
    Outcome::new(decreasing(&means) && fast, format!("mean sup residual {}; {t}", fmt_list(&means)))
}

fn dirac_trend() -> Outcome {
    let start = Instant::now();
    let gaps: Vec<f64> = DEFAULT_LADDER
        .iter()
        .map(|&h| FractionalKernel::new(h).unwrap().dirac_limit_gap(f64::cos, 1.0, 100_000).unwrap())
        .collect();
    let last = *gaps.last().unwrap();
    let (fast, t) = within(5, start.elapsed());
    Outcome::new(decreasing(&gaps) && last <= 0.02 && fast, format!("gaps {}; {t}", fmt_list(&gaps)))
}

fn sawtooth(teeth: usize, a: f64, b: f64) -> Vec<f64> {
    // full teeth go from below a to above b; the shallow ones in between
    // stay inside the band and must not count
    let mut path = vec![0.5 * (a + b)];
    for _ in 0..teeth {
        path.extend([a - 0.1, 0.5 * (a + b), a + 0.01, b + 0.1, b - 0.01, 0.5 * (a + b)]);
    }
    path
}

fn moduli(model: &ModelParams) -> Outcome {
    let start = Instant::now();
    let grid = UniformGrid::new(STEPS, model.horizon).unwrap();
    let mut worst_w_prime: f64 = 0.0;
    let mut checked = 0;
    for &h in DEFAULT_LADDER.iter().chain(&[0.0, 0.3]) {
        let scheme = VolterraScheme::new(*model, h, grid).unwrap();
        for stream in 0..20 {
            let p = scheme.simulate(RngSeed::new(SEED, stream));
            for delta in [0.001, 0.05, 0.3] {
                let r = oscillation_moduli(&p.x, model.horizon, delta, &[]).unwrap();
                worst_w_prime = worst_w_prime.max(r.w_prime.iter().copied().fold(0.0, f64::max));
                checked += 1;
            }
        }
    }

    let steps = 1000;
    let mut spike_ok = true;
    for n in [10usize, 20, 50, 100] {
        let (lo, hi) = (0.5 - 1.0 / n as f64, 0.5 + 1.0 / n as f64);
        let path: Vec<f64> = (0..=steps)
            .map(|k| {
                let t = k as f64 / steps as f64;
                if t >= lo && t < hi {
                    1.0
                } else {
                    0.0
                }
            })
            .collect();
        for delta in [2.0 / n as f64 + 0.005, 2.0 / n as f64 + 0.1] {
            let r = oscillation_moduli(&path, 1.0, delta, &[]).unwrap();
            spike_ok &= r.w_prime[steps / 2] == 1.0;
        }
    }

    let mut saw_ok = true;
    for teeth in [0, 1, 2, 7, 30] {
        saw_ok &= up_crossings(&sawtooth(teeth, 0.3, 0.7), 0.3, 0.7).unwrap() == teeth;
    }

    let (fast, t) = within(10, start.elapsed());
    Outcome::new(
        worst_w_prime == 0.0 && spike_ok && saw_ok && fast,
        format!("max w' over {checked} path/delta pairs {worst_w_prime:e}; spike {spike_ok}; sawtooth {saw_ok}; {t}"),
    )
}

fn report(name: &str, run: impl FnOnce() -> Outcome) -> bool {
    let outcome = catch_unwind(AssertUnwindSafe(run))
        .unwrap_or_else(|_| Outcome::new(false, "panicked".to_string()));
    let tag = if outcome.pass { "PASS" } else { "FAIL" };
    let mut err = std::io::stderr().lock();
    writeln!(err, "[{tag}] {name}: {}", outcome.detail).unwrap();
    outcome.pass
}

#[test]
fn primary_criteria() {
    let model = ModelParams::default();
    let mut batches = Batches::default();
    // the harness has already printed the test name without a newline
    writeln!(std::io::stderr()).unwrap();
    let results = [
        report("resolvent identity", resolvent_identity),
        report("IG sampler vs hitting times", || ig_sampler_vs_hitting_times(&model)),
        report("moment identities at H=-0.49", || moment_identities(&model, &mut batches)),
        report("mean oracle", || mean_oracle(&model, &mut batches)),
        report("functional convergence", || functional_convergence(&model)),
        report("limit identity", || limit_identity(&model)),
        report("characteristic function and KS trend", || figure_two(&model, &mut batches)),
        report("coupled residual trend", || figure_one(&model)),
        report("Dirac trend", dirac_trend),
        report("oscillation moduli", || moduli(&model)),
    ];
    let failed = results.iter().filter(|p| !**p).count();
    assert_eq!(failed, 0, "{failed} acceptance criteria failed; see the [FAIL] lines above");
}
