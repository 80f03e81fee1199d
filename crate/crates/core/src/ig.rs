//! Inverse Gaussian law `IG(μ, λ)` and the Inverse Gaussian Lévy process.

use alloc::vec::Vec;

use num_complex::Complex64;
use rand_core::RngCore;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{bail, Result};
use crate::kernels::{ModelParams, UniformGrid};
use crate::quad;
use crate::rng::StepVariate;

const TWO_PI: f64 = 2.0 * core::f64::consts::PI;

/// Tolerance of the quadrature behind [`IgParams::cdf`].
pub const CDF_TOLERANCE: f64 = 1e-10;

/// `IG(μ, λ)`: mean `μ`, shape `λ`, variance `μ³/λ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IgParams {
    pub mu: f64,
    pub lam: f64,
}

impl IgParams {
    pub fn new(mu: f64, lam: f64) -> Result<Self> {
        if !(mu > 0.0 && mu.is_finite() && lam > 0.0 && lam.is_finite()) {
            bail!(Domain, "IG parameters must be positive and finite (mu={mu}, lam={lam})");
        }
        Ok(Self { mu, lam })
    }

    pub fn mean(&self) -> f64 {
        self.mu
    }

    pub fn variance(&self) -> f64 {
        self.mu * self.mu * self.mu / self.lam
    }

    pub fn pdf(&self, y: f64) -> f64 {
        if !(y > 0.0) {
            return 0.0;
        }
        let d = y - self.mu;
        libm::sqrt(self.lam / (TWO_PI * y * y * y))
            * libm::exp(-self.lam * d * d / (2.0 * self.mu * self.mu * y))
    }

    /// `exp((λ/μ)[1 - sqrt(1 - 2i(μ²/λ)u)])` on the principal branch.
    pub fn cf(&self, u: f64) -> Complex64 {
        let r = self.lam / self.mu;
        let inner = Complex64::new(1.0, -2.0 * self.mu * self.mu / self.lam * u);
        (r * (Complex64::new(1.0, 0.0) - inner.sqrt())).exp()
    }

    /// Distribution function by adaptive quadrature of the density.
    pub fn cdf(&self, y: f64) -> Result<f64> {
        if !(y > 0.0) {
            return Ok(0.0);
        }
        let below = quad::integrate(|s| self.pdf(s), 0.0, y.min(self.mu), CDF_TOLERANCE, 0.0)?.value;
        if y <= self.mu {
            return Ok(below);
        }
        // integrate the thinner upper tail when that is the shorter route
        let above = quad::integrate_to_infinity(|s| self.pdf(s), y, CDF_TOLERANCE, 0.0)?.value;
        Ok((1.0 - above).clamp(0.0, 1.0))
    }

    /// Distribution function at each point of an ascending slice, integrating
    /// the density once across consecutive gaps.
    pub fn cdf_sorted(&self, ys: &[f64]) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(ys.len());
        let mut last = 0.0;
        let mut acc = 0.0;
        for &y in ys {
            if y < last {
                bail!(Argument, "cdf_sorted needs ascending input");
            }
            if y > 0.0 {
                acc += quad::integrate(|s| self.pdf(s), last, y, CDF_TOLERANCE, 0.0)?.value;
                last = y;
            }
            out.push(acc.min(1.0));
        }
        Ok(out)
    }

    pub fn sample_from_variate(&self, v: &StepVariate) -> f64 {
        ig_from_variate(self.mu, self.lam, v)
    }

    pub fn sample<R: RngCore + ?Sized>(&self, rng: &mut R) -> f64 {
        self.sample_from_variate(&StepVariate::draw(rng))
    }
}

/// Transformation-method draw from `IG(mu, lam)` given one normal and one
/// uniform. `lam = +∞` (no noise) returns `mu`.
///
/// With `y = z²` and `r = mu/lam`, the two roots of the defining quadratic are
/// `x2 = mu (1 + ry/2 + sqrt(ry + (ry)²/4))` and `x1 = mu²/x2`. Forming the
/// larger root first avoids the cancellation that hits `x1` when `ry` is large.
#[inline]
pub fn ig_from_variate(mu: f64, lam: f64, v: &StepVariate) -> f64 {
    let ry = mu / lam * v.normal * v.normal;
    let x2 = mu * (1.0 + 0.5 * ry + libm::sqrt(ry + 0.25 * ry * ry));
    let x1 = mu * mu / x2;
    if v.uniform * (mu + x1) <= mu {
        x1
    } else {
        x2
    }
}

/// Inverse Gaussian Lévy process: `Y_t ~ IG(μt, λt²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IgProcessParams {
    pub mu: f64,
    pub lam: f64,
}

impl IgProcessParams {
    pub fn new(mu: f64, lam: f64) -> Result<Self> {
        IgParams::new(mu, lam)?;
        Ok(Self { mu, lam })
    }

    pub fn marginal(&self, t: f64) -> Result<IgParams> {
        if !(t > 0.0) {
            bail!(Domain, "marginal law needs t > 0 (t={t})");
        }
        IgParams::new(self.mu * t, self.lam * t * t)
    }

    /// `φ(u) = (λ/μ)[1 - sqrt(1 - 2i(μ²/λ)u)]`, so that `E[e^{iuY_t}] = e^{tφ(u)}`.
    pub fn levy_exponent(&self, u: f64) -> Complex64 {
        let inner = Complex64::new(1.0, -2.0 * self.mu * self.mu / self.lam * u);
        (Complex64::new(1.0, 0.0) - inner.sqrt()) * (self.lam / self.mu)
    }

    /// `sqrt(λ/(2πx³)) exp(-λx/(2μ²))`.
    pub fn levy_measure_density(&self, x: f64) -> Result<f64> {
        if !(x > 0.0) {
            bail!(Domain, "Levy measure density is defined for x > 0 (x={x})");
        }
        Ok(libm::sqrt(self.lam / (TWO_PI * x * x * x))
            * libm::exp(-self.lam * x / (2.0 * self.mu * self.mu)))
    }

    /// Path on `grid` from pre-drawn variates, one per step.
    pub fn path_from_variates(&self, grid: &UniformGrid, variates: &[StepVariate]) -> Result<Vec<f64>> {
        if variates.len() != grid.steps() {
            bail!(Argument, "need {} variates, got {}", grid.steps(), variates.len());
        }
        let step = self.marginal(grid.dt())?;
        let mut path = Vec::with_capacity(grid.len());
        let mut y = 0.0;
        path.push(y);
        for v in variates {
            y += step.sample_from_variate(v);
            path.push(y);
        }
        Ok(path)
    }

    /// Path with independent `IG(μ dt, λ dt²)` increments, `Y_0 = 0`.
    pub fn sample_path<R: RngCore + ?Sized>(&self, grid: &UniformGrid, rng: &mut R) -> Result<Vec<f64>> {
        let variates = crate::rng::draw_step_variates(rng, grid.steps());
        self.path_from_variates(grid, &variates)
    }
}

/// First passage time of `a s + b W_s` through `c t`, by Euler stepping of
/// the Brownian motion with step `1e-4 ct/a`. Returns `Ok(None)` when the
/// horizon `50 ct/a` is reached without crossing (the caller resamples).
/// Test oracle for the law `IG(ct/a, c²t²/b²)`.
pub fn hitting_time_sample<R: RngCore + ?Sized>(
    a: f64,
    b: f64,
    c: f64,
    t: f64,
    rng: &mut R,
) -> Result<Option<f64>> {
    if !(a > 0.0 && b >= 0.0 && c > 0.0 && t > 0.0) {
        bail!(Domain, "hitting time needs a, c, t > 0 and b >= 0 (a={a}, b={b}, c={c}, t={t})");
    }
    let level = c * t;
    let scale = level / a;
    if b == 0.0 {
        return Ok(Some(scale));
    }
    let delta = 1e-4 * scale;
    let cap = 50.0 * scale;
    let sd = b * libm::sqrt(delta);
    let drift = a * delta;
    let mut x = 0.0;
    let mut steps: u64 = 0;
    loop {
        steps += 1;
        let z: f64 = StandardNormal.sample(rng);
        x += drift + sd * z;
        let s = steps as f64 * delta;
        if x >= level {
            return Ok(Some(s));
        }
        if s >= cap {
            return Ok(None);
        }
    }
}

/// `(Y_t, (1 + λ) Y_t - g0 t)` on `grid`.
pub fn limit_pair(model: &ModelParams, grid: &UniformGrid, y: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    if y.len() != grid.len() {
        bail!(Argument, "path has {} points, grid has {}", y.len(), grid.len());
    }
    if y.windows(2).any(|w| w[1] < w[0]) {
        bail!(Argument, "limit pair needs a nondecreasing path");
    }
    let g0 = model.g0();
    let m = grid
        .times()
        .zip(y)
        .map(|(t, &yt)| (1.0 + model.lambda) * yt - g0 * t)
        .collect();
    Ok((y.to_vec(), m))
}
