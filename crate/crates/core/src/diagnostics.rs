//! Batch statistics and pathwise moduli used to judge convergence.

use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{bail, Result};
use crate::kernels::ModelParams;

/// Asymptotic Kolmogorov quantile at the 1% level.
pub const KOLMOGOROV_1PCT: f64 = 1.6276;

/// Terminal samples `(X_T, M_T)` with their provenance. `hurst = None` marks
/// the limit process.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    pub hurst: Option<f64>,
    pub steps: usize,
    pub seed: u64,
    pub x: Vec<f64>,
    pub m: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Component {
    X,
    M,
}

impl SampleBatch {
    pub fn new(hurst: Option<f64>, steps: usize, seed: u64, x: Vec<f64>, m: Vec<f64>) -> Result<Self> {
        if x.len() != m.len() {
            bail!(Argument, "X and M sample counts differ ({} vs {})", x.len(), m.len());
        }
        if let Some(bad) = x.iter().find(|v| !(**v >= 0.0)) {
            bail!(Argument, "X samples must be nonnegative, found {bad}");
        }
        Ok(Self { hurst, steps, seed, x, m })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn component(&self, c: Component) -> &[f64] {
        match c {
            Component::X => &self.x,
            Component::M => &self.m,
        }
    }
}

/// `(1/n) Σ exp(i(u X + v M))`, summed in sample order.
pub fn empirical_cf(batch: &SampleBatch, u: f64, v: f64) -> Result<Complex64> {
    if batch.is_empty() {
        bail!(Argument, "empirical CF of an empty batch");
    }
    let mut re = 0.0;
    let mut im = 0.0;
    for (x, m) in batch.x.iter().zip(&batch.m) {
        let (s, c) = libm::sincos(u * x + v * m);
        re += c;
        im += s;
    }
    let n = batch.len() as f64;
    Ok(Complex64::new(re / n, im / n))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub centers: Vec<f64>,
    pub densities: Vec<f64>,
    pub width: f64,
}

/// Density-normalised histogram over `[min, max]` of the component.
pub fn histogram_density(batch: &SampleBatch, component: Component, bins: usize) -> Result<Histogram> {
    histogram(batch.component(component), bins)
}

pub fn histogram(samples: &[f64], bins: usize) -> Result<Histogram> {
    if bins < 10 {
        bail!(Argument, "histogram needs at least 10 bins, got {bins}");
    }
    if samples.is_empty() {
        bail!(Argument, "histogram of an empty sample");
    }
    let lo = samples.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 0.5, lo + 0.5) };
    let width = (hi - lo) / bins as f64;
    let mut counts = alloc::vec![0usize; bins];
    for &s in samples {
        let idx = (((s - lo) / width) as usize).min(bins - 1);
        counts[idx] += 1;
    }
    let norm = 1.0 / (samples.len() as f64 * width);
    Ok(Histogram {
        centers: (0..bins).map(|i| lo + (i as f64 + 0.5) * width).collect(),
        densities: counts.iter().map(|&c| c as f64 * norm).collect(),
        width,
    })
}

/// `sup |F_n - F|` given the reference cdf evaluated at the sorted sample.
pub fn ks_statistic_sorted(cdf_at_sorted: &[f64]) -> f64 {
    let n = cdf_at_sorted.len() as f64;
    cdf_at_sorted
        .iter()
        .enumerate()
        .map(|(i, &f)| ((i + 1) as f64 / n - f).max(f - i as f64 / n))
        .fold(0.0, f64::max)
}

/// One-sample Kolmogorov-Smirnov distance against `cdf`.
pub fn ks_distance<F: FnMut(f64) -> f64>(batch: &SampleBatch, component: Component, mut cdf: F) -> Result<f64> {
    let sorted = sorted_copy(batch.component(component))?;
    let values: Vec<f64> = sorted.iter().map(|&s| cdf(s)).collect();
    Ok(ks_statistic_sorted(&values))
}

/// Two-sample Kolmogorov-Smirnov distance.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64> {
    let a = sorted_copy(a)?;
    let b = sorted_copy(b)?;
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let t = a[i].min(b[j]);
        while i < a.len() && a[i] <= t {
            i += 1;
        }
        while j < b.len() && b[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

/// 1%-level critical value `1.6276 / sqrt(n)`.
pub fn ks_critical_value(n: usize) -> f64 {
    KOLMOGOROV_1PCT / libm::sqrt(n as f64)
}

/// 1%-level critical value for two samples of sizes `n` and `m`.
pub fn ks_two_sample_critical_value(n: usize, m: usize) -> f64 {
    KOLMOGOROV_1PCT * libm::sqrt((n + m) as f64 / (n as f64 * m as f64))
}

pub(crate) fn sorted_copy(s: &[f64]) -> Result<Vec<f64>> {
    if s.is_empty() {
        bail!(Argument, "empty sample");
    }
    if s.iter().any(|v| v.is_nan()) {
        bail!(Argument, "sample contains NaN");
    }
    let mut v = s.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// Oscillation moduli of a grid path read as its piecewise-constant càdlàg
/// extension. Suprema are over grid times only, so every entry is a lower
/// bound for the continuous-time quantity.
#[derive(Debug, Clone, PartialEq)]
pub struct ModulusReport {
    pub delta: f64,
    /// `max(sup_t w'(x,t,δ), v(x,0,δ), v(x,T,δ))`.
    pub w: f64,
    /// `w'(x, t_k, δ)` for every grid time.
    pub w_prime: Vec<f64>,
    pub v_start: f64,
    pub v_end: f64,
    /// `((a, b), N^{a,b}(x))` for each requested level pair.
    pub up_crossings: Vec<((f64, f64), usize)>,
}

/// Computes [`ModulusReport`] for a path sampled at `t_k = k T / (len - 1)`.
///
/// `w'(x,t,δ)` is the largest distance from a middle value `x(t_2)` to the
/// interval spanned by `x(t_1), x(t_3)` with `t_1 < t_2 < t_3` in
/// `[t - δ, t + δ] ∩ [0, T]`. For a fixed middle index the best outer pair is
/// read off prefix and suffix extrema of the window, so each window costs one
/// linear pass.
pub fn oscillation_moduli(path: &[f64], horizon: f64, delta: f64, levels: &[(f64, f64)]) -> Result<ModulusReport> {
    if path.len() < 2 {
        bail!(Argument, "path needs at least two points");
    }
    if !(delta > 0.0) {
        bail!(Domain, "delta must be positive, got {delta}");
    }
    if !(delta < horizon) {
        bail!(Argument, "delta must be smaller than the horizon ({delta} >= {horizon})");
    }
    let n = path.len() - 1;
    let dt = horizon / n as f64;
    // grid points within delta of each other, tolerant to rounding in delta/dt
    let reach = libm::floor(delta / dt * (1.0 + 1e-12)) as usize;
    let mut w_prime = Vec::with_capacity(n + 1);
    let mut left_min = Vec::new();
    let mut left_max = Vec::new();
    for k in 0..=n {
        let lo = k.saturating_sub(reach);
        let hi = (k + reach).min(n);
        let window = &path[lo..=hi];
        w_prime.push(window_w_prime(window, &mut left_min, &mut left_max));
    }
    let v_start = spread(&path[..=reach.min(n)]);
    let v_end = spread(&path[n.saturating_sub(reach)..]);
    let sup_w_prime = w_prime.iter().copied().fold(0.0, f64::max);
    let mut up = Vec::with_capacity(levels.len());
    for &(a, b) in levels {
        up.push(((a, b), up_crossings(path, a, b)?));
    }
    Ok(ModulusReport {
        delta,
        w: sup_w_prime.max(v_start).max(v_end),
        w_prime,
        v_start,
        v_end,
        up_crossings: up,
    })
}

fn window_w_prime(window: &[f64], left_min: &mut Vec<f64>, left_max: &mut Vec<f64>) -> f64 {
    let len = window.len();
    if len < 3 {
        return 0.0;
    }
    left_min.clear();
    left_max.clear();
    let (mut lmin, mut lmax) = (f64::INFINITY, f64::NEG_INFINITY);
    for &x in window {
        lmin = lmin.min(x);
        lmax = lmax.max(x);
        left_min.push(lmin);
        left_max.push(lmax);
    }
    let (mut rmin, mut rmax) = (window[len - 1], window[len - 1]);
    let mut best: f64 = 0.0;
    for mid in (1..len - 1).rev() {
        let x2 = window[mid];
        let below = left_min[mid - 1].max(rmin);
        let above = left_max[mid - 1].min(rmax);
        best = best.max(x2 - below).max(above - x2);
        rmin = rmin.min(x2);
        rmax = rmax.max(x2);
    }
    best
}

fn spread(window: &[f64]) -> f64 {
    let lo = window.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = window.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    hi - lo
}

/// Largest `k` with times `t_1 < ... < t_{2k}` such that `x(t_{2i-1}) < a` and
/// `x(t_{2i}) > b`. A greedy scan that alternates between waiting for a value
/// below `a` and one above `b` attains it.
pub fn up_crossings(path: &[f64], a: f64, b: f64) -> Result<usize> {
    if !(a < b) {
        bail!(Argument, "up-crossing levels need a < b (a={a}, b={b})");
    }
    let mut count = 0;
    let mut below = false;
    for &x in path {
        if !below {
            below = x < a;
        } else if x > b {
            count += 1;
            below = false;
        }
    }
    Ok(count)
}

/// Running sums for Monte Carlo moments of `(X_t, M_t)` at fixed grid
/// indices. Accumulators over disjoint path sets merge by addition.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentAccumulator {
    pub indices: Vec<usize>,
    pub count: u64,
    sx: Vec<f64>,
    sxx: Vec<f64>,
    sm: Vec<f64>,
    smm: Vec<f64>,
    sm4: Vec<f64>,
    smmx: Vec<f64>,
    sdx: Vec<f64>,
    sdxx: Vec<f64>,
}

impl MomentAccumulator {
    pub fn new(indices: Vec<usize>) -> Self {
        let z = alloc::vec![0.0; indices.len()];
        Self {
            indices,
            count: 0,
            sx: z.clone(),
            sxx: z.clone(),
            sm: z.clone(),
            smm: z.clone(),
            sm4: z.clone(),
            smmx: z.clone(),
            sdx: z.clone(),
            sdxx: z,
        }
    }

    pub fn add_path(&mut self, x: &[f64], m: &[f64]) {
        self.count += 1;
        let mut prev_x = 0.0;
        for (slot, &k) in self.indices.iter().enumerate() {
            let (xv, mv) = (x[k], m[k]);
            let m2 = mv * mv;
            self.sx[slot] += xv;
            self.sxx[slot] += xv * xv;
            self.sm[slot] += mv;
            self.smm[slot] += m2;
            self.sm4[slot] += m2 * m2;
            self.smmx[slot] += m2 * xv;
            let dx = xv - prev_x;
            self.sdx[slot] += dx;
            self.sdxx[slot] += dx * dx;
            prev_x = xv;
        }
    }

    pub fn merge(&mut self, other: &Self) -> Result<()> {
        if self.indices != other.indices {
            bail!(Argument, "cannot merge accumulators over different grid indices");
        }
        self.count += other.count;
        for (dst, src) in [
            (&mut self.sx, &other.sx),
            (&mut self.sxx, &other.sxx),
            (&mut self.sm, &other.sm),
            (&mut self.smm, &other.smm),
            (&mut self.sm4, &other.sm4),
            (&mut self.smmx, &other.smmx),
            (&mut self.sdx, &other.sdx),
            (&mut self.sdxx, &other.sdxx),
        ] {
            for (d, s) in dst.iter_mut().zip(src) {
                *d += s;
            }
        }
        Ok(())
    }
}

/// Monte Carlo moments at one time with the three a-priori checks.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentCheck {
    pub t: f64,
    pub mean_x: f64,
    pub se_x: f64,
    pub drift_bound: f64,
    pub mean_m: f64,
    pub se_m: f64,
    pub mean_m2: f64,
    /// `E[M_t²] / (ν² E[X_t])`, with a delta-method standard error.
    pub qv_ratio: f64,
    pub se_qv_ratio: f64,
    /// Mean of `X_t - X_s` from the previous checked time (or 0).
    pub mean_increment: f64,
    pub se_increment: f64,
    pub increment_bound: f64,
    pub martingale_ok: bool,
    pub mean_bound_ok: bool,
    pub increment_bound_ok: bool,
    pub qv_ok: bool,
}

/// Width of the band accepted for the quadratic-variation ratio.
pub const QV_RATIO_BAND: f64 = 0.03;

/// Evaluates `E[M_t] = 0`, `E[X_t] <= G_0^H(t)`,
/// `E[X_t - X_s] <= G_0^H(t) - G_0^H(s)` (each to three standard errors) and
/// `E[M_t²] / (ν² E[X_t]) ∈ [0.97, 1.03]` at the accumulated indices.
/// `hurst = -0.5` checks the limit process against `g0 t`.
pub fn moment_checks(
    acc: &MomentAccumulator,
    model: &ModelParams,
    hurst: f64,
    times: &[f64],
) -> Result<Vec<MomentCheck>> {
    if acc.count < 2 {
        bail!(Argument, "moment checks need at least two paths");
    }
    if times.len() != acc.indices.len() {
        bail!(Argument, "one time per accumulated index is required");
    }
    let n = acc.count as f64;
    let se = |s: f64, ss: f64| {
        let mean = s / n;
        let var = ((ss / n - mean * mean) * n / (n - 1.0)).max(0.0);
        (mean, libm::sqrt(var / n))
    };
    let nu2 = model.nu * model.nu;
    let mut out = Vec::with_capacity(times.len());
    let mut prev_t = 0.0;
    for (slot, &t) in times.iter().enumerate() {
        let (mean_x, se_x) = se(acc.sx[slot], acc.sxx[slot]);
        let (mean_m, se_m) = se(acc.sm[slot], acc.smm[slot]);
        let (mean_inc, se_inc) = se(acc.sdx[slot], acc.sdxx[slot]);
        let mean_m2 = acc.smm[slot] / n;
        let var_x = acc.sxx[slot] / n - mean_x * mean_x;
        let var_m2 = acc.sm4[slot] / n - mean_m2 * mean_m2;
        let cov = acc.smmx[slot] / n - mean_m2 * mean_x;
        let denom = nu2 * mean_x;
        let (ratio, se_ratio) = if denom > 0.0 {
            let r = mean_m2 / denom;
            let var_r = (var_m2 / (denom * denom) + r * r * var_x / (mean_x * mean_x)
                - 2.0 * r * cov / (denom * mean_x))
                / n;
            (r, libm::sqrt(var_r.max(0.0)))
        } else {
            (f64::NAN, f64::NAN)
        };
        let bound = model.g0n(hurst, t);
        let inc_bound = bound - model.g0n(hurst, prev_t);
        out.push(MomentCheck {
            t,
            mean_x,
            se_x,
            drift_bound: bound,
            mean_m,
            se_m,
            mean_m2,
            qv_ratio: ratio,
            se_qv_ratio: se_ratio,
            mean_increment: mean_inc,
            se_increment: se_inc,
            increment_bound: inc_bound,
            martingale_ok: mean_m.abs() <= 3.0 * se_m,
            mean_bound_ok: mean_x <= bound + 3.0 * se_x,
            increment_bound_ok: mean_inc <= inc_bound + 3.0 * se_inc,
            qv_ok: (ratio - 1.0).abs() <= QV_RATIO_BAND,
        });
        prev_t = t;
    }
    Ok(out)
}
