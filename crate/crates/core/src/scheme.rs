//! Monte Carlo scheme for the pair `(X, M)` solving
//! `X_t = G_0^H(t) + ∫_0^t (-λ X_s + M_s) K(t - s) ds`, `⟨M⟩ = ν² X`.
//!
//! Write `y_j = -λ X_j + M_j` on the grid and approximate `y` on each slab by
//! its right-endpoint value, so `X_k = G_k + Σ_{i=1}^{k} y_i w_{k+1-i}` with the
//! exact slab weights `w_m`. Differencing in `k` leaves one unknown slab:
//!
//! ```text
//! (1 + λ w_1) ΔX_k = μ̃_k + w_1 ΔM_k,
//! μ̃_k = ΔG_k + Σ_{i=1}^{k} y_i (w_{k+2-i} - w_{k+1-i}) + w_1 y_k.
//! ```
//!
//! Over one step `M` moves as `ν W` run on the clock `X`, so `ΔX` is the first
//! time `a s + ν w_1 W_s` reaches `μ̃_k` (with `a = 1 + λ w_1`), which is
//! `IG(μ̃_k / a, μ̃_k² / (ν w_1)²)`. `ΔM` then follows from the identity above.
//! The conditional mean of `ΔX` is `μ̃_k / a` and `ΔM` is centred, so the mean
//! of `X` obeys the same recursion with the noise switched off.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use crate::error::{bail, Result};
use crate::ig::ig_from_variate;
use crate::kernels::{FractionalKernel, ModelParams, UniformGrid};
use crate::rng::{fill_step_variates, RngSeed, StepVariate};

/// Paths advanced together by [`VolterraScheme::run_batch`].
const LANES: usize = 8;

/// Relative size of the default drift floor, `μ_floor = 1e-12 g0 dt`.
pub const MU_FLOOR_FACTOR: f64 = 1e-12;

/// A simulated path of `(X, M)` on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PathPair {
    pub grid: UniformGrid,
    pub x: Vec<f64>,
    pub m: Vec<f64>,
    /// Steps whose drift predictor was raised to the floor.
    pub clamped_steps: usize,
}

impl PathPair {
    pub fn terminal(&self) -> (f64, f64) {
        (self.x[self.x.len() - 1], self.m[self.m.len() - 1])
    }
}

#[derive(Debug, Clone)]
pub struct VolterraScheme {
    model: ModelParams,
    kernel: FractionalKernel,
    grid: UniformGrid,
    weights: Vec<f64>,
    /// `d_m = w_{m+1} - w_m` stored last-to-first: `rev_diffs[N - 1 - m] = d_m`.
    rev_diffs: Vec<f64>,
    drift_steps: Vec<f64>,
    a: f64,
    b: f64,
    w1: f64,
    mu_floor: f64,
}

impl VolterraScheme {
    pub fn new(model: ModelParams, hurst: f64, grid: UniformGrid) -> Result<Self> {
        model.validate()?;
        let kernel = FractionalKernel::new(hurst)?;
        let weights = kernel.slab_weights(&grid);
        let n = grid.steps();
        let mut rev_diffs = vec![0.0; n - 1];
        for m in 1..n {
            rev_diffs[n - 1 - m] = weights[m] - weights[m - 1];
        }
        let drift_steps = (0..n)
            .map(|k| model.g0n(hurst, grid.time(k + 1)) - model.g0n(hurst, grid.time(k)))
            .collect();
        let w1 = weights[0];
        let mu_floor = MU_FLOOR_FACTOR * model.g0() * grid.dt();
        let scheme = Self {
            model,
            kernel,
            grid,
            weights,
            rev_diffs,
            drift_steps,
            a: 1.0 + model.lambda * w1,
            b: model.nu.abs() * w1,
            w1,
            mu_floor,
        };
        scheme.check_floor()?;
        Ok(scheme)
    }

    /// Replaces the drift floor; it must be positive.
    pub fn with_mu_floor(mut self, mu_floor: f64) -> Result<Self> {
        self.mu_floor = mu_floor;
        self.check_floor()?;
        Ok(self)
    }

    fn check_floor(&self) -> Result<()> {
        if !(self.mu_floor > 0.0 && self.mu_floor.is_finite()) {
            bail!(Config, "drift floor must be positive and finite, got {}", self.mu_floor);
        }
        Ok(())
    }

    pub fn model(&self) -> &ModelParams {
        &self.model
    }

    pub fn hurst(&self) -> f64 {
        self.kernel.hurst()
    }

    pub fn grid(&self) -> &UniformGrid {
        &self.grid
    }

    /// Slab weights `w_1..w_N`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn mu_floor(&self) -> f64 {
        self.mu_floor
    }

    /// Coefficients multiplying `y_1..y_k` in the history sum of step `k`.
    #[inline]
    fn history_coeffs(&self, k: usize) -> &[f64] {
        let n = self.grid.steps();
        &self.rev_diffs[n - 1 - k..n - 1]
    }

    #[inline]
    fn increment(&self, mu: f64, v: &StepVariate) -> (f64, f64) {
        let ratio = mu / self.b;
        let dx = ig_from_variate(mu / self.a, ratio * ratio, v);
        (dx, (self.a * dx - mu) / self.w1)
    }

    /// Runs one path on the given variates (one per step).
    pub fn simulate_from_variates(&self, variates: &[StepVariate]) -> Result<PathPair> {
        let n = self.grid.steps();
        if variates.len() != n {
            bail!(Argument, "need {n} variates, got {}", variates.len());
        }
        let lambda = self.model.lambda;
        let mut x = vec![0.0; n + 1];
        let mut m = vec![0.0; n + 1];
        let mut y = vec![0.0; n + 1];
        let mut clamped_steps = 0;
        for k in 0..n {
            let mut hist = 0.0;
            for (yi, c) in y[1..=k].iter().zip(self.history_coeffs(k)) {
                hist += yi * c;
            }
            let mut mu = self.drift_steps[k] + hist + self.w1 * y[k];
            if mu < self.mu_floor {
                mu = self.mu_floor;
                clamped_steps += 1;
            }
            let (dx, dm) = self.increment(mu, &variates[k]);
            x[k + 1] = x[k] + dx;
            m[k + 1] = m[k] + dm;
            y[k + 1] = -lambda * x[k + 1] + m[k + 1];
        }
        Ok(PathPair { grid: self.grid, x, m, clamped_steps })
    }

    /// Path on stream `seed`; bit-identical to the same stream in [`Self::run_batch`].
    pub fn simulate(&self, seed: RngSeed) -> PathPair {
        let mut variates = vec![StepVariate { normal: 0.0, uniform: 0.5 }; self.grid.steps()];
        fill_step_variates(&mut seed.rng(), &mut variates);
        self.simulate_from_variates(&variates)
            .unwrap_or_else(|_| unreachable!("variate count matches the grid"))
    }

    /// The recursion with `ΔX` replaced by its conditional mean `μ̃/a` and
    /// `ΔM = 0`: the scheme's exact mean of `X` at every grid point.
    pub fn mean_path(&self) -> Vec<f64> {
        let n = self.grid.steps();
        let lambda = self.model.lambda;
        let mut x = vec![0.0; n + 1];
        let mut y = vec![0.0; n + 1];
        for k in 0..n {
            let mut hist = 0.0;
            for (yi, c) in y[1..=k].iter().zip(self.history_coeffs(k)) {
                hist += yi * c;
            }
            let mu = self.drift_steps[k] + hist + self.w1 * y[k];
            x[k + 1] = x[k] + mu / self.a;
            y[k + 1] = -lambda * x[k + 1];
        }
        x
    }

    /// Simulates the paths on streams `streams` of `seed` and hands each to
    /// `observer(stream, x, m)`, in increasing stream order. Returns the total
    /// number of clamped steps.
    ///
    /// Paths are advanced [`LANES`] at a time with the history stored
    /// lane-interleaved, which lets the `O(k)` history sum vectorise across
    /// paths while every path keeps the summation order of
    /// [`Self::simulate_from_variates`], so results are bit-identical to it.
    pub fn run_batch<F>(&self, seed: u64, streams: Range<u64>, mut observer: F) -> usize
    where
        F: FnMut(u64, &[f64], &[f64]),
    {
        let n = self.grid.steps();
        let lambda = self.model.lambda;
        let blank = StepVariate { normal: 0.0, uniform: 0.5 };
        let mut variates = vec![vec![blank; n]; LANES];
        let mut xs = vec![vec![0.0; n + 1]; LANES];
        let mut ms = vec![vec![0.0; n + 1]; LANES];
        let mut ys = vec![0.0; (n + 1) * LANES];
        let mut clamped = 0;
        let mut start = streams.start;
        while start < streams.end {
            let live = ((streams.end - start) as usize).min(LANES);
            for (lane, buf) in variates.iter_mut().enumerate().take(live) {
                fill_step_variates(&mut RngSeed::new(seed, start + lane as u64).rng(), buf);
            }
            ys[..LANES].fill(0.0);
            for k in 0..n {
                let mut hist = [0.0; LANES];
                for (row, c) in ys[LANES..(k + 1) * LANES]
                    .chunks_exact(LANES)
                    .zip(self.history_coeffs(k))
                {
                    for l in 0..LANES {
                        hist[l] += row[l] * c;
                    }
                }
                let (prev, next) = ys.split_at_mut((k + 1) * LANES);
                let prev = &prev[k * LANES..];
                for l in 0..live {
                    let mut mu = self.drift_steps[k] + hist[l] + self.w1 * prev[l];
                    if mu < self.mu_floor {
                        mu = self.mu_floor;
                        clamped += 1;
                    }
                    let (dx, dm) = self.increment(mu, &variates[l][k]);
                    let x = xs[l][k] + dx;
                    let m = ms[l][k] + dm;
                    xs[l][k + 1] = x;
                    ms[l][k + 1] = m;
                    next[l] = -lambda * x + m;
                }
                for slot in next[live..LANES].iter_mut() {
                    *slot = 0.0;
                }
            }
            for l in 0..live {
                observer(start + l as u64, &xs[l], &ms[l]);
            }
            start += live as u64;
        }
        clamped
    }
}

/// Limit pair `(Y, (1 + λ) Y - g0 t)` where `Y` has independent
/// `IG(μ* dt, λ* dt²)` increments, `μ* = g0/(1+λ)`, `λ* = g0²/ν²`.
/// With the same variates this is the scheme's step at `H = -1/2`.
pub fn limit_path_from_variates(
    model: &ModelParams,
    grid: &UniformGrid,
    variates: &[StepVariate],
) -> Result<PathPair> {
    model.validate()?;
    let n = grid.steps();
    if variates.len() != n {
        bail!(Argument, "need {n} variates, got {}", variates.len());
    }
    let g0 = model.g0();
    if !(g0 > 0.0) {
        bail!(Config, "limit process needs g0 = V0 + λθ > 0");
    }
    let mu = g0 / (1.0 + model.lambda) * grid.dt();
    let ratio = g0 * grid.dt() / model.nu;
    let lam = ratio * ratio;
    let mut x = vec![0.0; n + 1];
    for k in 0..n {
        x[k + 1] = x[k] + ig_from_variate(mu, lam, &variates[k]);
    }
    let m = grid
        .times()
        .zip(&x)
        .map(|(t, &y)| (1.0 + model.lambda) * y - g0 * t)
        .collect();
    Ok(PathPair { grid: *grid, x, m, clamped_steps: 0 })
}

/// Paths for several Hurst indices and the limit, all driven by one variate
/// sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct CoupledPaths {
    pub hurst: Vec<f64>,
    pub pairs: Vec<PathPair>,
    pub limit: PathPair,
}

pub fn simulate_coupled_from_variates(
    model: &ModelParams,
    hurst: &[f64],
    grid: &UniformGrid,
    variates: &[StepVariate],
) -> Result<CoupledPaths> {
    if hurst.is_empty() {
        bail!(Argument, "coupled simulation needs at least one Hurst index");
    }
    let pairs = hurst
        .iter()
        .map(|&h| VolterraScheme::new(*model, h, *grid)?.simulate_from_variates(variates))
        .collect::<Result<Vec<_>>>()?;
    let limit = limit_path_from_variates(model, grid, variates)?;
    Ok(CoupledPaths { hurst: hurst.to_vec(), pairs, limit })
}

pub fn simulate_coupled(
    model: &ModelParams,
    hurst: &[f64],
    grid: &UniformGrid,
    seed: RngSeed,
) -> Result<CoupledPaths> {
    let variates = crate::rng::draw_step_variates(&mut seed.rng(), grid.steps());
    simulate_coupled_from_variates(model, hurst, grid, &variates)
}

/// `r_k = G_0^H(t_k) + M_k - (1 + λ) X_k`; pass `hurst = -0.5` for the limit pair.
pub fn residual_path(path: &PathPair, model: &ModelParams, hurst: f64) -> Result<Vec<f64>> {
    if path.x.len() != path.grid.len() || path.m.len() != path.grid.len() {
        bail!(Argument, "path length does not match its grid");
    }
    if !(-0.5..=0.5).contains(&hurst) {
        bail!(Domain, "Hurst index must lie in [-1/2, 1/2], got {hurst}");
    }
    Ok(path
        .grid
        .times()
        .zip(path.x.iter().zip(&path.m))
        .map(|(t, (&x, &m))| model.g0n(hurst, t) + m - (1.0 + model.lambda) * x)
        .collect())
}
