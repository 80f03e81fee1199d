//! Riccati-Volterra equation for the joint characteristic functional of
//! `(X, M)` and its closed-form limit.
//!
//! For test functions `f, h` on `[0, T]`,
//! `F(t, u) = i f(t) - (ν²/2) h(t)² + (i ν² h(t) - λ) u + (ν²/2) u²`,
//! `Ψ(t) = ∫_0^t F(s, Ψ(s)) K(t - s) ds`, and the functional is
//! `exp(∫_0^T F(T - t, Ψ(T - t)) dG_0^H(t))`.

use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use num_complex::Complex64;

use crate::error::{bail, Result};
use crate::kernels::{FractionalKernel, ModelParams, UniformGrid};
use crate::quad;

/// Largest real part tolerated in a computed `Ψ`.
pub const REAL_PART_TOLERANCE: f64 = 1e-9;

/// Tolerance of the quadrature in [`char_functional_limit`].
pub const LIMIT_QUAD_TOLERANCE: f64 = 1e-10;

/// A real test function on `[0, T]`.
#[derive(Clone)]
pub enum Profile {
    Constant(f64),
    /// `intercept + slope t`
    Affine { intercept: f64, slope: f64 },
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl Profile {
    pub fn custom<F: Fn(f64) -> f64 + Send + Sync + 'static>(f: F) -> Self {
        Profile::Custom(Arc::new(f))
    }

    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Profile::Constant(c) => *c,
            Profile::Affine { intercept, slope } => intercept + slope * t,
            Profile::Custom(f) => f(t),
        }
    }

    fn is_constant(&self) -> Option<f64> {
        match self {
            Profile::Constant(c) => Some(*c),
            Profile::Affine { intercept, slope } if *slope == 0.0 => Some(*intercept),
            _ => None,
        }
    }
}

impl fmt::Debug for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Profile::Constant(c) => write!(f, "Constant({c})"),
            Profile::Affine { intercept, slope } => write!(f, "Affine({intercept} + {slope} t)"),
            Profile::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

/// The pair `(f, h)` paired with `X` and `M` respectively.
#[derive(Debug, Clone)]
pub struct TestFunctionPair {
    pub f: Profile,
    pub h: Profile,
}

impl TestFunctionPair {
    pub fn new(f: Profile, h: Profile) -> Self {
        Self { f, h }
    }

    pub fn constants(u: f64, v: f64) -> Self {
        Self::new(Profile::Constant(u), Profile::Constant(v))
    }
}

/// `F(t, u)`.
#[inline]
pub fn f_eval(t: f64, u: Complex64, model: &ModelParams, tf: &TestFunctionPair) -> Complex64 {
    let (ft, ht) = (tf.f.eval(t), tf.h.eval(t));
    let nu2 = model.nu * model.nu;
    let xi = Complex64::new(-0.5 * nu2 * ht * ht, ft);
    let rho = Complex64::new(-model.lambda, nu2 * ht);
    xi + rho * u + 0.5 * nu2 * u * u
}

#[derive(Debug, Clone, PartialEq)]
pub struct RiccatiSolution {
    pub grid: UniformGrid,
    pub psi: Vec<Complex64>,
}

impl RiccatiSolution {
    pub fn terminal(&self) -> Complex64 {
        self.psi[self.psi.len() - 1]
    }

    pub fn max_real_part(&self) -> f64 {
        self.psi.iter().map(|p| p.re).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Solves `Ψ = (F(·, Ψ)) * K` on `grid`.
///
/// Each slab carries `F` at its right end, so step `k` reads
/// `Ψ_k = w_1 F(t_k, Ψ_k) + Σ_{i<k} F(t_i, Ψ_i) w_{k-i+1}`, a quadratic in
/// `Ψ_k`. The root continuous in `w_1 ν²` is taken, written in the
/// cancellation-free form `2C / (-B + sqrt(B² - 4AC))`. Treating the newest
/// slab implicitly keeps the iteration stable when `w_1` is close to 1, which
/// is where the kernel approaches a point mass.
pub fn solve_riccati(
    model: &ModelParams,
    hurst: f64,
    tf: &TestFunctionPair,
    grid: &UniformGrid,
) -> Result<RiccatiSolution> {
    model.validate()?;
    let kernel = FractionalKernel::new(hurst)?;
    let w = kernel.slab_weights(grid);
    let n = grid.steps();
    let nu2 = model.nu * model.nu;
    let w1 = w[0];
    let a = Complex64::new(0.5 * w1 * nu2, 0.0);
    let mut psi = Vec::with_capacity(n + 1);
    let mut forcing: Vec<Complex64> = Vec::with_capacity(n + 1);
    psi.push(Complex64::new(0.0, 0.0));
    forcing.push(f_eval(0.0, psi[0], model, tf));
    for k in 1..=n {
        let t = grid.time(k);
        let mut hist = Complex64::new(0.0, 0.0);
        for i in 1..k {
            hist += forcing[i] * w[k - i];
        }
        let (ft, ht) = (tf.f.eval(t), tf.h.eval(t));
        let xi = Complex64::new(-0.5 * nu2 * ht * ht, ft);
        let rho = Complex64::new(-model.lambda, nu2 * ht);
        let b = rho * w1 - 1.0;
        let c = xi * w1 + hist;
        let p = 2.0 * c / (-b + (b * b - 4.0 * a * c).sqrt());
        if !(p.re.is_finite() && p.im.is_finite()) {
            bail!(Numerical, "Riccati step {k} produced a non-finite value");
        }
        if p.re > REAL_PART_TOLERANCE {
            bail!(
                Numerical,
                "Riccati solution has Re Ψ = {:e} > 0 at t = {t}; refine the grid",
                p.re
            );
        }
        psi.push(p);
        forcing.push(f_eval(t, p, model, tf));
    }
    Ok(RiccatiSolution { grid: *grid, psi })
}

/// Closed-form solution of the fixed point `Ψ(t) = F(t, Ψ(t))`:
/// `-i h + ((1+λ)/ν²)(1 - sqrt(1 - 2i ν² (f + (1+λ) h) / (1+λ)²))`.
/// For `ν = 0` the fixed point is linear and `Ψ = i f / (1 + λ)`.
pub fn psi_limit(model: &ModelParams, tf: &TestFunctionPair, t: f64) -> Complex64 {
    let (ft, ht) = (tf.f.eval(t), tf.h.eval(t));
    let l1 = 1.0 + model.lambda;
    let nu2 = model.nu * model.nu;
    if nu2 == 0.0 {
        return Complex64::new(0.0, ft / l1);
    }
    let inner = Complex64::new(1.0, -2.0 * nu2 * (ft + l1 * ht) / (l1 * l1));
    Complex64::new(0.0, -ht) + (Complex64::new(1.0, 0.0) - inner.sqrt()) * (l1 / nu2)
}

/// `exp(∫_0^T F(T - t, Ψ(T - t)) dG_0^H(t))` from the grid solution.
///
/// On the slab `[t_j, t_{j+1}]` the integrand is replaced by the mean of its
/// endpoint values (where `Ψ` is known) and `dG_0^H` is integrated exactly:
/// `V0 dt + λθ (t_{j+1}^(h+1) - t_j^(h+1)) / (h+1)`. The slab next to `t = T`
/// is handled separately (see `first_slab_mean`).
pub fn char_functional(
    model: &ModelParams,
    hurst: f64,
    tf: &TestFunctionPair,
    grid: &UniformGrid,
) -> Result<Complex64> {
    let sol = solve_riccati(model, hurst, tf, grid)?;
    Ok(char_functional_from_solution(model, hurst, tf, &sol))
}

pub fn char_functional_from_solution(
    model: &ModelParams,
    hurst: f64,
    tf: &TestFunctionPair,
    sol: &RiccatiSolution,
) -> Complex64 {
    let grid = &sol.grid;
    let n = grid.steps();
    let p = hurst + 1.5;
    let forcing: Vec<Complex64> =
        (0..=n).map(|k| f_eval(grid.time(k), sol.psi[k], model, tf)).collect();
    let mut exponent = Complex64::new(0.0, 0.0);
    for j in 0..n {
        let (t0, t1) = (grid.time(j), grid.time(j + 1));
        let mass = model.v0 * (t1 - t0)
            + model.lambda * model.theta * crate::kernels::power_difference(t0, t1, p) / p;
        // t_j corresponds to remaining time T - t_j, i.e. grid index n - j
        let mean = if j + 1 == n {
            first_slab_mean(model, hurst, tf, grid.dt(), sol.psi[1])
        } else {
            (forcing[n - j] + forcing[n - j - 1]) * 0.5
        };
        exponent += mean * mass;
    }
    exponent.exp()
}

/// Mean of `F(s, Ψ(s))` over `[0, dt]`, using `Ψ(s) ≈ Ψ_1 (s/dt)^h` there.
///
/// Near `s = 0` the solution rises like `s^h`, which for small `h` is a jump
/// from 0 to `Ψ_1` within a vanishing boundary layer. Averaging the endpoint
/// values would weight `F(0, 0)` by one half and leave an `O(dt)` error that
/// does not shrink as `H → -1/2`. The test functions are taken at the slab
/// midpoint.
fn first_slab_mean(
    model: &ModelParams,
    hurst: f64,
    tf: &TestFunctionPair,
    dt: f64,
    psi1: Complex64,
) -> Complex64 {
    let h = hurst + 0.5;
    let s = 0.5 * dt;
    let (ft, ht) = (tf.f.eval(s), tf.h.eval(s));
    let nu2 = model.nu * model.nu;
    let xi = Complex64::new(-0.5 * nu2 * ht * ht, ft);
    let rho = Complex64::new(-model.lambda, nu2 * ht);
    xi + rho * psi1 / (1.0 + h) + 0.5 * nu2 * psi1 * psi1 / (1.0 + 2.0 * h)
}

/// `exp(g0 ∫_0^T Ψ(T - t) dt)` with the closed-form `Ψ`; constant test
/// functions are integrated exactly, others by adaptive quadrature.
pub fn char_functional_limit(model: &ModelParams, tf: &TestFunctionPair) -> Result<Complex64> {
    let horizon = model.horizon;
    let integral = match (tf.f.is_constant(), tf.h.is_constant()) {
        (Some(_), Some(_)) => psi_limit(model, tf, 0.0) * horizon,
        _ => {
            let re = quad::integrate(|t| psi_limit(model, tf, t).re, 0.0, horizon, LIMIT_QUAD_TOLERANCE, 0.0)?;
            let im = quad::integrate(|t| psi_limit(model, tf, t).im, 0.0, horizon, LIMIT_QUAD_TOLERANCE, 0.0)?;
            Complex64::new(re.value, im.value)
        }
    };
    Ok((integral * model.g0()).exp())
}

/// Lévy exponent of the limit process `IG(μ* t, λ* t²)`,
/// `μ* = g0/(1+λ)`, `λ* = g0²/ν²`; deterministic drift when `ν = 0`.
pub fn limit_levy_exponent(model: &ModelParams, u: f64) -> Complex64 {
    let g0 = model.g0();
    let mu = g0 / (1.0 + model.lambda);
    let nu2 = model.nu * model.nu;
    if nu2 == 0.0 {
        return Complex64::new(0.0, mu * u);
    }
    let lam = g0 * g0 / nu2;
    let inner = Complex64::new(1.0, -2.0 * mu * mu / lam * u);
    (Complex64::new(1.0, 0.0) - inner.sqrt()) * (lam / mu)
}

/// `E[exp(i u Y_T + i v ((1+λ) Y_T - g0 T))] = exp(φ(u + (1+λ)v) T - i v g0 T)`.
pub fn joint_cf_limit(model: &ModelParams, u: f64, v: f64) -> Complex64 {
    let horizon = model.horizon;
    let phi = limit_levy_exponent(model, u + (1.0 + model.lambda) * v);
    (phi * horizon - Complex64::new(0.0, v * model.g0() * horizon)).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn f_eval_examples() {
        let m = ModelParams::default();
        let zero = TestFunctionPair::constants(0.0, 0.0);
        assert_eq!(f_eval(0.3, c(0.0, 0.0), &m, &zero), c(0.0, 0.0));
        for u in [-0.5, -2.0] {
            let want = -m.lambda * u + 0.5 * u * u;
            assert!((f_eval(0.3, c(u, 0.0), &m, &zero) - c(want, 0.0)).norm() < 1e-15);
        }
        let one = TestFunctionPair::constants(1.0, 0.0);
        assert_eq!(f_eval(0.0, c(0.0, 0.0), &m, &one), c(0.0, 1.0));
    }

    #[test]
    fn zero_test_functions_give_zero_solution() {
        let m = ModelParams::default();
        let g = UniformGrid::new(50, 1.0).unwrap();
        let tf = TestFunctionPair::constants(0.0, 0.0);
        let sol = solve_riccati(&m, -0.3, &tf, &g).unwrap();
        assert!(sol.psi.iter().all(|p| *p == c(0.0, 0.0)));
        assert_eq!(char_functional(&m, -0.3, &tf, &g).unwrap(), c(1.0, 0.0));
        assert_eq!(char_functional_limit(&m, &tf).unwrap(), c(1.0, 0.0));
        assert_eq!(psi_limit(&m, &tf, 0.5), c(0.0, 0.0));
    }

    #[test]
    fn psi_limit_example_value() {
        let m = ModelParams::default();
        let tf = TestFunctionPair::constants(1.0, 0.0);
        let want = (c(1.0, 0.0) - c(1.0, -2.0 / 121.0).sqrt()) * 11.0;
        let got = psi_limit(&m, &tf, 0.4);
        assert!((got - want).norm() < 1e-15);
        assert!((got.re + 3.76e-4).abs() < 1e-6 && (got.im - 9.091e-2).abs() < 1e-5, "{got}");
    }

    #[test]
    fn psi_limit_is_fixed_point() {
        let m = ModelParams::default();
        let mut state = 0x2545_f491_4f6c_dd1du64;
        let mut next = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 * 10.0 - 5.0
        };
        for _ in 0..20 {
            let tf = TestFunctionPair::constants(next(), next());
            let p = psi_limit(&m, &tf, 0.0);
            assert!((p - f_eval(0.0, p, &m, &tf)).norm() <= 1e-12, "{tf:?}");
            assert!(p.re <= 0.0);
        }
    }

    /// Oracle: the continuous limit `Ψ = F(Ψ)` from the closed form.
    #[test]
    fn riccati_near_limit_matches_closed_form() {
        let m = ModelParams::default();
        let tf = TestFunctionPair::constants(1.0, 0.0);
        let g = UniformGrid::new(2000, 1.0).unwrap();
        let sol = solve_riccati(&m, -0.499, &tf, &g).unwrap();
        let err = (sol.terminal() - psi_limit(&m, &tf, 1.0)).norm();
        assert!(err < 0.01, "{err}");
    }

    #[test]
    fn riccati_refinement() {
        let m = ModelParams::default();
        let tf = TestFunctionPair::constants(1.0, 0.0);
        let coarse = solve_riccati(&m, -0.3, &tf, &UniformGrid::new(1000, 1.0).unwrap()).unwrap();
        let fine = solve_riccati(&m, -0.3, &tf, &UniformGrid::new(2000, 1.0).unwrap()).unwrap();
        assert!((coarse.terminal() - fine.terminal()).norm() <= 1e-3);
    }

    #[test]
    fn riccati_bounds_for_constant_functions() {
        let m = ModelParams::default();
        let g = UniformGrid::new(400, 1.0).unwrap();
        for (u, v) in [(1.0, 0.0), (-3.0, 2.0), (5.0, -5.0), (0.0, 1.5)] {
            let tf = TestFunctionPair::constants(u, v);
            let xi = c(-0.5 * v * v, u).norm();
            for hurst in [-0.45, -0.3, 0.0, 0.4] {
                let sol = solve_riccati(&m, hurst, &tf, &g).unwrap();
                assert!(sol.max_real_part() <= REAL_PART_TOLERANCE);
                let sup = sol.psi.iter().map(|p| p.norm()).fold(0.0, f64::max);
                assert!(sup <= 1.1 * xi * 1.0f64.powf(hurst + 0.5), "{u},{v},{hurst}: {sup}");
                let cf = char_functional_from_solution(&m, hurst, &tf, &sol);
                assert!(cf.norm() <= 1.0 + 1e-9);
            }
        }
    }

    #[test]
    fn limit_cf_matches_levy_exponent() {
        let m = ModelParams::default();
        let lim = m.limit_ig().unwrap();
        let proc_ = crate::ig::IgProcessParams::new(lim.mu, lim.lam).unwrap();
        for u in [1.0, -1.0, 3.0, -3.0] {
            let tf = TestFunctionPair::constants(u, 0.0);
            let want = proc_.levy_exponent(u).exp();
            assert!((char_functional_limit(&m, &tf).unwrap() - want).norm() < 1e-12);
        }
        assert_eq!(joint_cf_limit(&m, 0.0, 0.0), c(1.0, 0.0));
        let one = joint_cf_limit(&m, 1.0, 0.0);
        assert!((one - proc_.levy_exponent(1.0).exp()).norm() < 1e-15);
    }

    #[test]
    fn limit_cf_by_quadrature_for_varying_functions() {
        let m = ModelParams::default();
        let tf = TestFunctionPair::new(
            Profile::Affine { intercept: 1.0, slope: 0.0 },
            Profile::custom(|_| 0.5),
        );
        let exact = char_functional_limit(&m, &TestFunctionPair::constants(1.0, 0.5)).unwrap();
        assert!((char_functional_limit(&m, &tf).unwrap() - exact).norm() < 1e-10);
        let tf = TestFunctionPair::new(Profile::Affine { intercept: 0.0, slope: 2.0 }, Profile::Constant(0.0));
        let cf = char_functional_limit(&m, &tf).unwrap();
        assert!(cf.norm() <= 1.0 && cf.norm() > 0.0);
    }

    #[test]
    fn zero_noise_limit() {
        let m = ModelParams { nu: 0.0, ..ModelParams::default() };
        let tf = TestFunctionPair::constants(2.0, 0.0);
        let p = psi_limit(&m, &tf, 0.0);
        assert!((p - f_eval(0.0, p, &m, &tf)).norm() < 1e-15);
        let cf = joint_cf_limit(&m, 2.0, 0.0);
        assert!((cf - c(0.0, 2.0 * 0.1).exp()).norm() < 1e-15);
    }
}
