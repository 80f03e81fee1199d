//! Fractional kernel `K(t) = (H + 1/2) t^(H - 1/2)`, model drift, resolvents
//! and product integration against the kernel on uniform grids.
//!
//! Integrals of `K` over a slab are closed form, `∫_a^b K = b^h - a^h` with
//! `h = H + 1/2`, so every convolution here integrates the singular kernel
//! exactly on each slab and samples only the other factor.

use alloc::vec::Vec;

use crate::error::{bail, Result};
use crate::special::{gamma, mittag_leffler};

/// `b^h - a^h` for `0 <= a <= b`, computed without cancellation for small `h`.
#[inline]
pub(crate) fn power_difference(a: f64, b: f64, h: f64) -> f64 {
    if a <= 0.0 {
        libm::pow(b, h)
    } else {
        libm::pow(a, h) * libm::expm1(h * libm::log(b / a))
    }
}

/// Positive nodes and weights of the 8-point Gauss-Legendre rule on [-1, 1].
const GAUSS_LEGENDRE_8: [(f64, f64); 4] = [
    (0.183_434_642_495_649_8, 0.362_683_783_378_362_0),
    (0.525_532_409_916_329_0, 0.313_706_645_877_887_3),
    (0.796_666_477_413_626_7, 0.222_381_034_453_374_5),
    (0.960_289_856_497_536_3, 0.101_228_536_290_376_3),
];

/// Residuals closer to the origin than this fraction of the horizon are not
/// scored by [`FractionalKernel::resolvent_residual`].
pub const RESIDUAL_INTERIOR_FRACTION: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FractionalKernel {
    hurst: f64,
    h: f64,
}

impl FractionalKernel {
    /// Requires `-1/2 < hurst <= 1/2`.
    pub fn new(hurst: f64) -> Result<Self> {
        if !(hurst > -0.5 && hurst <= 0.5) {
            bail!(Domain, "Hurst index must lie in (-1/2, 1/2], got {hurst}");
        }
        Ok(Self { hurst, h: hurst + 0.5 })
    }

    pub fn hurst(&self) -> f64 {
        self.hurst
    }

    /// `h = H + 1/2`.
    pub fn exponent(&self) -> f64 {
        self.h
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        if !(t > 0.0) {
            bail!(Domain, "kernel is singular at 0 and undefined for t <= 0 (t={t})");
        }
        Ok(self.h * libm::pow(t, self.h - 1.0))
    }

    /// `∫_a^b K(s) ds = b^h - a^h`.
    pub fn slab_integral(&self, a: f64, b: f64) -> Result<f64> {
        if !(a >= 0.0 && b >= a) {
            bail!(Domain, "slab integral needs 0 <= a <= b (a={a}, b={b})");
        }
        Ok(power_difference(a, b, self.h))
    }

    /// Slab weights `w_m = (m dt)^h - ((m-1) dt)^h` for `m = 1..=steps`.
    /// Index 0 of the returned vector holds `w_1`.
    pub fn slab_weights(&self, grid: &UniformGrid) -> Vec<f64> {
        let dt = grid.dt();
        (1..=grid.steps())
            .map(|m| power_difference((m - 1) as f64 * dt, m as f64 * dt, self.h))
            .collect()
    }

    /// Left-point product integration of `(f * K)(t_k)`:
    /// `c_k = Σ_{j<k} f(t_j) [(t_k - t_j)^h - (t_k - t_{j+1})^h]`.
    pub fn convolve_grid(&self, f: &[f64], grid: &UniformGrid) -> Result<Vec<f64>> {
        if f.len() != grid.len() {
            bail!(
                Argument,
                "grid has {} points but the sampled function has {}",
                grid.len(),
                f.len()
            );
        }
        let w = self.slab_weights(grid);
        let mut out = Vec::with_capacity(grid.len());
        out.push(0.0);
        for k in 1..grid.len() {
            let acc: f64 = (0..k).map(|j| f[j] * w[k - j - 1]).sum();
            out.push(acc);
        }
        Ok(out)
    }

    /// Resolvent of `alpha K`, `R(t) = c t^(h-1) E_{h,h}(c t^h)` with
    /// `c = alpha h Γ(h)`. It solves `(alpha K) * R = R - alpha K`.
    ///
    /// Negative `alpha` is allowed: `-resolvent(-λ, ·)` is the kernel `r`
    /// with `(λK) * r = λK - r`, which solves `x = G - λ K * x` as `x = G - r * G`.
    pub fn resolvent(&self, alpha: f64, t: f64) -> Result<f64> {
        if !(t > 0.0) {
            bail!(Domain, "resolvent is evaluated for t > 0 only (t={t})");
        }
        if alpha == 0.0 {
            return Ok(0.0);
        }
        let c = self.resolvent_scale(alpha);
        let th = libm::pow(t, self.h);
        Ok(c * th / t * mittag_leffler(self.h, self.h, c * th)?)
    }

    /// `∫_0^t R(s) ds = E_{h,1}(c t^h) - 1`.
    pub fn resolvent_integral(&self, alpha: f64, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            bail!(Domain, "resolvent integral needs t >= 0 (t={t})");
        }
        if alpha == 0.0 || t == 0.0 {
            return Ok(0.0);
        }
        let c = self.resolvent_scale(alpha);
        Ok(mittag_leffler(self.h, 1.0, c * libm::pow(t, self.h))? - 1.0)
    }

    fn resolvent_scale(&self, alpha: f64) -> f64 {
        alpha * self.h * gamma(self.h)
    }

    /// First moment `∫_0^t s R(s) ds = t (E_{h,1}(c t^h) - E_{h,2}(c t^h))`.
    fn resolvent_first_moment(&self, alpha: f64, t: f64) -> Result<f64> {
        if t == 0.0 {
            return Ok(0.0);
        }
        let z = self.resolvent_scale(alpha) * libm::pow(t, self.h);
        Ok(t * (mittag_leffler(self.h, 1.0, z)? - mittag_leffler(self.h, 2.0, z)?))
    }

    /// Pointwise residuals `(αK * R)(t_k) - (R(t_k) - αK(t_k))` for `k = 1..=N`,
    /// stored at index `k - 1`; the entry for `k = 1` is NaN.
    ///
    /// The convolution at `t_k` is split at `t_m`, `m = ⌊k/2⌋`. On `[0, t_m]`
    /// the smooth factor `αK(t_k - s)` is interpolated linearly on each slab and
    /// integrated against exact zeroth and first moments of `R`. On `[t_m, t_k]`
    /// the roles swap: `R` is interpolated by a quadratic through three grid
    /// values and integrated against moments of `αK`. Neither interpolated
    /// factor is evaluated at its own singularity, so the rule is second order
    /// at any fixed `t > 0`. The quadratic keeps the error small when `R` grows
    /// exponentially fast.
    pub fn resolvent_residual_profile(&self, alpha: f64, grid: &UniformGrid) -> Result<Vec<f64>> {
        let n = grid.steps();
        if alpha == 0.0 {
            return Ok(alloc::vec![0.0; n]);
        }
        let dt = grid.dt();
        let h = self.h;
        let mut r_at = Vec::with_capacity(n + 1);
        let mut r_cum = Vec::with_capacity(n + 1);
        let mut r_mom = Vec::with_capacity(n + 1);
        r_at.push(f64::NAN);
        r_cum.push(0.0);
        r_mom.push(0.0);
        for j in 1..=n {
            let t = grid.time(j);
            r_at.push(self.resolvent(alpha, t)?);
            r_cum.push(self.resolvent_integral(alpha, t)?);
            r_mom.push(self.resolvent_first_moment(alpha, t)?);
        }
        // αK at u_i = i dt and its local moments α ∫_{u_{i-1}}^{u_i} (u_i - u)^p K(u) du
        let mut k_at = alloc::vec![f64::NAN; n + 1];
        let mut k_mom = alloc::vec![[0.0; 3]; n + 1];
        for i in 1..=n {
            let ub = i as f64 * dt;
            k_at[i] = alpha * h * libm::pow(ub, h - 1.0);
            k_mom[i] = self.local_moments(i, dt).map(|v| alpha * v);
        }
        let mut out = Vec::with_capacity(n);
        // a single slab cannot be split away from both singularities
        out.push(f64::NAN);
        for k in 2..=n {
            let m = k / 2;
            let mut conv = 0.0;
            for j in 0..m {
                let s0 = j as f64 * dt;
                let zeroth = r_cum[j + 1] - r_cum[j];
                let first = (r_mom[j + 1] - r_mom[j]) - s0 * zeroth;
                let g0 = k_at[k - j];
                let g1 = k_at[k - j - 1];
                conv += g0 * zeroth + (g1 - g0) * first / dt;
            }
            for j in m..k {
                // quadratic through three grid values of R, in σ = s - s_j = u_b - u
                let [m0, m1, m2] = k_mom[k - j];
                let r0 = r_at[j];
                let (c1, c2) = if j + 2 <= n {
                    let (r1, r2) = (r_at[j + 1], r_at[j + 2]);
                    let curv = 0.5 * (r2 - 2.0 * r1 + r0);
                    ((r1 - r0) - curv, curv)
                } else {
                    let (rm, r1) = (r_at[j - 1], r_at[j + 1]);
                    (0.5 * (r1 - rm), 0.5 * (r1 - 2.0 * r0 + rm))
                };
                conv += r0 * m0 + c1 * m1 / dt + c2 * m2 / (dt * dt);
            }
            out.push(conv - (r_at[k] - k_at[k]));
        }
        Ok(out)
    }

    /// `∫_{u_{i-1}}^{u_i} (u_i - u)^p K(u) du` for `p = 0, 1, 2` with `u_i = i dt`.
    /// The slab at the origin uses Beta integrals; elsewhere `K` is smooth on
    /// the slab and 8-point Gauss-Legendre is accurate to rounding, which avoids
    /// the cancellation of expanding `(u_i - u)^p` in powers of `u`.
    fn local_moments(&self, i: usize, dt: f64) -> [f64; 3] {
        let h = self.h;
        if i == 1 {
            let base = libm::pow(dt, h);
            return [base, base * dt / (h + 1.0), base * dt * dt * 2.0 / ((h + 1.0) * (h + 2.0))];
        }
        let (ua, ub) = ((i - 1) as f64 * dt, i as f64 * dt);
        let half = 0.5 * dt;
        let mid = ua + half;
        let mut acc = [0.0; 3];
        for (x, w) in GAUSS_LEGENDRE_8 {
            for sign in [-1.0, 1.0] {
                let u = mid + sign * x * half;
                let kw = w * half * h * libm::pow(u, h - 1.0);
                let d = ub - u;
                acc[0] += kw;
                acc[1] += kw * d;
                acc[2] += kw * d * d;
            }
        }
        acc[0] = power_difference(ua, ub, h);
        acc
    }

    /// Self-test of the resolvent identity `(αK * R)(t) = R(t) - αK(t)`.
    ///
    /// Returns the largest residual from [`Self::resolvent_residual_profile`]
    /// over the interior points `t_k >= T / 10`, each divided by
    /// `max(1, |R(t_k)| + |αK(t_k)|)`. Both sides are singular at 0 for
    /// `H < 1/2`, and near 0 the error at `t_k` depends on `k` only, so points
    /// close to the origin are excluded. The scaling keeps the measure meaningful
    /// when `R` grows like `exp(c^(1/h) t)`.
    pub fn resolvent_residual(&self, alpha: f64, grid: &UniformGrid) -> Result<f64> {
        if alpha == 0.0 {
            return Ok(0.0);
        }
        let profile = self.resolvent_residual_profile(alpha, grid)?;
        let first = (libm::ceil(grid.steps() as f64 * RESIDUAL_INTERIOR_FRACTION) as usize).max(2);
        let mut worst: f64 = 0.0;
        for k in first..=grid.steps() {
            let t = grid.time(k);
            let scale = (self.resolvent(alpha, t)?.abs() + (alpha * self.eval(t)?).abs()).max(1.0);
            let r = (profile[k - 1] / scale).abs();
            if !r.is_finite() {
                bail!(Numerical, "non-finite resolvent residual at t={t}");
            }
            worst = worst.max(r);
        }
        Ok(worst)
    }

    /// `|∫_0^t f(t - s) K(s) ds - f(t)|`, the distance of the kernel measure from
    /// the Dirac mass at 0 when tested against `f`. Slab integrals of `K` are
    /// exact, `f` is sampled at slab midpoints, `steps` slabs cover `[0, t]`.
    pub fn dirac_limit_gap<F: Fn(f64) -> f64>(&self, f: F, t: f64, steps: usize) -> Result<f64> {
        if !(t > 0.0) {
            bail!(Domain, "Dirac gap is defined for t > 0 (t={t})");
        }
        if steps == 0 {
            bail!(Argument, "need at least one slab");
        }
        let ds = t / steps as f64;
        let integral: f64 = (0..steps)
            .map(|j| {
                let a = j as f64 * ds;
                f(t - (a + 0.5 * ds)) * power_difference(a, a + ds, self.h)
            })
            .sum();
        Ok((integral - f(t)).abs())
    }
}

/// Parameters of the square-root Volterra model and the horizon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub v0: f64,
    pub lambda: f64,
    pub theta: f64,
    pub nu: f64,
    pub horizon: f64,
}

impl Default for ModelParams {
    /// `V0 = 0.1, λ = 10, θ = 0.1, ν = 1, T = 1`.
    fn default() -> Self {
        Self { v0: 0.1, lambda: 10.0, theta: 0.1, nu: 1.0, horizon: 1.0 }
    }
}

impl ModelParams {
    pub fn new(v0: f64, lambda: f64, theta: f64, nu: f64, horizon: f64) -> Result<Self> {
        let p = Self { v0, lambda, theta, nu, horizon };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.v0 >= 0.0) {
            bail!(Config, "v0 must be >= 0, got {}", self.v0);
        }
        if !(self.lambda >= 0.0) {
            bail!(Config, "lambda must be >= 0, got {}", self.lambda);
        }
        if !(self.theta >= 0.0) {
            bail!(Config, "theta must be >= 0, got {}", self.theta);
        }
        if !self.nu.is_finite() {
            bail!(Config, "nu must be finite, got {}", self.nu);
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            bail!(Config, "horizon must be > 0, got {}", self.horizon);
        }
        Ok(())
    }

    /// `g0 = V0 + λ θ`.
    pub fn g0(&self) -> f64 {
        self.v0 + self.lambda * self.theta
    }

    /// `G_0^H(t) = V0 t + λθ t^(H+3/2) / (H + 3/2)`; at `H = -1/2` this is `g0 t`.
    pub fn g0n(&self, hurst: f64, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let p = hurst + 1.5;
        self.v0 * t + self.lambda * self.theta * libm::pow(t, p) / p
    }

    /// Density of `dG_0^H(t) = (V0 + λθ t^(H+1/2)) dt`.
    pub fn g0n_rate(&self, hurst: f64, t: f64) -> f64 {
        self.v0 + self.lambda * self.theta * libm::pow(t, hurst + 0.5)
    }

    /// Solution of the linear equation `x = G_0^H - λ K * x` satisfied by the
    /// mean of `X`, written through the resolvent of `-λK`:
    /// `x(t) = V0 t E_{h,2}(z) + λθ Γ(h+1) t^(h+1) E_{h,h+2}(z)`, `z = -λ Γ(h+1) t^h`.
    pub fn linear_mean(&self, hurst: f64, t: f64) -> Result<f64> {
        let kernel = FractionalKernel::new(hurst)?;
        if !(t >= 0.0) {
            bail!(Domain, "mean is defined for t >= 0 (t={t})");
        }
        if t == 0.0 {
            return Ok(0.0);
        }
        let h = kernel.exponent();
        let gh = gamma(h + 1.0);
        let th = libm::pow(t, h);
        let z = -self.lambda * gh * th;
        Ok(self.v0 * t * mittag_leffler(h, 2.0, z)?
            + self.lambda * self.theta * gh * t * th * mittag_leffler(h, h + 2.0, z)?)
    }

    /// Parameters `(g0/(1+λ), g0²/ν²)` of the limiting Inverse Gaussian process.
    pub fn limit_ig(&self) -> Result<crate::ig::IgProcessParams> {
        let g0 = self.g0();
        crate::ig::IgProcessParams::new(g0 / (1.0 + self.lambda), g0 * g0 / (self.nu * self.nu))
    }
}

/// Uniform grid `t_k = k T / N`, `k = 0..=N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformGrid {
    steps: usize,
    horizon: f64,
}

impl UniformGrid {
    pub fn new(steps: usize, horizon: f64) -> Result<Self> {
        if steps == 0 {
            bail!(Config, "grid needs at least one step");
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            bail!(Config, "grid horizon must be positive, got {horizon}");
        }
        Ok(Self { steps, horizon })
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Number of grid points, `N + 1`.
    pub fn len(&self) -> usize {
        self.steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    pub fn time(&self, k: usize) -> f64 {
        if k == self.steps {
            self.horizon
        } else {
            k as f64 * self.dt()
        }
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.steps).map(move |k| self.time(k))
    }

    /// `count` indices spread evenly over `1..=N` (always including `N`).
    pub fn probe_indices(&self, count: usize) -> Vec<usize> {
        let count = count.clamp(1, self.steps);
        let mut idx: Vec<usize> = (1..=count).map(|i| (i * self.steps) / count).collect();
        idx.dedup();
        idx
    }
}
