//! Simulation and verification primitives for hyper-rough square-root
//! Volterra processes `(X, M)` and their Inverse Gaussian jump limit.
//!
//! The crate is `no_std` (it needs `alloc`). Everything here is a pure
//! function of its inputs; randomness enters only through explicit
//! [`rng::RngSeed`] streams or pre-drawn [`rng::StepVariate`] sequences.
//!
//! Modules:
//! - [`kernels`]: the fractional kernel `K(t) = (H + 1/2) t^(H - 1/2)`, drift
//!   functions, Mittag-Leffler resolvents and singular-kernel product integration.
//! - [`ig`]: Inverse Gaussian law and Lévy process.
//! - [`scheme`]: the Monte Carlo scheme for `(X, M)` with Inverse Gaussian increments.
//! - [`riccati`]: Riccati-Volterra characteristic functionals and their limit.
//! - [`diagnostics`]: empirical CFs, KS distances, moments, path moduli.
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod diagnostics;
pub mod error;
pub mod ig;
pub mod kernels;
pub mod quad;
pub mod riccati;
pub mod rng;
pub mod scheme;
pub mod special;

pub use error::{Error, Result};

pub use diagnostics::{Component, SampleBatch};
pub use ig::{IgParams, IgProcessParams};
pub use kernels::{FractionalKernel, ModelParams, UniformGrid};
pub use riccati::{Profile, RiccatiSolution, TestFunctionPair};
pub use rng::{RngSeed, StepVariate};
pub use scheme::{PathPair, VolterraScheme};
