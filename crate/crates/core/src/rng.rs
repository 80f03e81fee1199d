//! Seeded random streams and the per-step variates consumed by the samplers.
//!
//! A stream is ChaCha8 keyed by the 64-bit seed with the stream id selecting an
//! independent keystream, so path `i` of a batch uses stream `i` and any number
//! of paths can be drawn in any order or on any thread with identical results.

use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use rand_distr::{Distribution, Open01, StandardNormal};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngSeed {
    pub seed: u64,
    pub stream: u64,
}

impl RngSeed {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    /// The same seed on another stream.
    pub fn with_stream(self, stream: u64) -> Self {
        Self { stream, ..self }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

/// One standard normal and one uniform on (0, 1): everything an Inverse
/// Gaussian increment needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepVariate {
    pub normal: f64,
    pub uniform: f64,
}

impl StepVariate {
    pub fn draw<R: RngCore + ?Sized>(rng: &mut R) -> Self {
        let normal: f64 = StandardNormal.sample(rng);
        let uniform: f64 = Open01.sample(rng);
        Self { normal, uniform }
    }
}

pub fn draw_step_variates<R: RngCore + ?Sized>(rng: &mut R, steps: usize) -> Vec<StepVariate> {
    (0..steps).map(|_| StepVariate::draw(rng)).collect()
}

/// Fills `out` in place, reusing its allocation across paths.
pub fn fill_step_variates<R: RngCore + ?Sized>(rng: &mut R, out: &mut [StepVariate]) {
    for v in out.iter_mut() {
        *v = StepVariate::draw(rng);
    }
}
