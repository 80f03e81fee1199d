//! Parallel Monte Carlo batches with thread-count independent results.
//!
//! Path `i` always uses stream `i` of the run seed, so the scheme at every
//! Hurst index and the limit sampler see the same variates (common random
//! numbers). Paths are cut into fixed chunks of [`CHUNK`] streams, chunks run
//! on the rayon pool, and the partial statistics are merged in chunk order.

use hyperrough_core::diagnostics::{MomentAccumulator, SampleBatch};
use hyperrough_core::rng::{fill_step_variates, RngSeed, StepVariate};
use hyperrough_core::scheme::limit_path_from_variates;
use hyperrough_core::{ModelParams, UniformGrid, VolterraScheme};
use rayon::prelude::*;

use crate::error::CliResult;

pub const CHUNK: u64 = 256;

/// Number of grid times at which moments are accumulated.
pub const PROBE_TIMES: usize = 10;

/// Sample mean with its standard error, mergeable by addition.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RunningMean {
    pub n: u64,
    pub sum: f64,
    pub sum_sq: f64,
}

impl RunningMean {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        self.sum += x;
        self.sum_sq += x * x;
    }

    pub fn merge(&mut self, o: &Self) {
        self.n += o.n;
        self.sum += o.sum;
        self.sum_sq += o.sum_sq;
    }

    pub fn mean(&self) -> f64 {
        self.sum / self.n as f64
    }

    pub fn stderr(&self) -> f64 {
        if self.n < 2 {
            return f64::NAN;
        }
        let n = self.n as f64;
        let mean = self.mean();
        let var = ((self.sum_sq / n - mean * mean) * n / (n - 1.0)).max(0.0);
        (var / n).sqrt()
    }
}

#[derive(Debug, Clone)]
pub struct BatchStats {
    /// `None` for the limit process.
    pub hurst: Option<f64>,
    pub batch: SampleBatch,
    pub moments: MomentAccumulator,
    pub probe_times: Vec<f64>,
    /// Per-path `sup_t |G_0^H(t) + M_t - (1 + λ) X_t|`.
    pub sup_residual: RunningMean,
    /// Per-path `sup_t |M_t|`.
    pub sup_abs_m: RunningMean,
    pub clamped_steps: usize,
    /// Paths whose `X` decreased somewhere (always zero for exact IG steps).
    pub non_monotone_paths: u64,
}

struct Partial {
    x: Vec<f64>,
    m: Vec<f64>,
    moments: MomentAccumulator,
    sup_residual: RunningMean,
    sup_abs_m: RunningMean,
    clamped: usize,
    non_monotone: u64,
}

/// Runs `paths` paths of the scheme at `hurst`, or of the limit pair when
/// `hurst` is `None`.
pub fn run_batch(
    model: &ModelParams,
    hurst: Option<f64>,
    grid: &UniformGrid,
    seed: u64,
    paths: u64,
) -> CliResult<BatchStats> {
    let scheme = match hurst {
        Some(h) => Some(VolterraScheme::new(*model, h, *grid)?),
        None => None,
    };
    model.validate()?;
    let drift_h = hurst.unwrap_or(-0.5);
    let drift: Vec<f64> = grid.times().map(|t| model.g0n(drift_h, t)).collect();
    let probes = grid.probe_indices(PROBE_TIMES);
    let probe_times: Vec<f64> = probes.iter().map(|&k| grid.time(k)).collect();
    let chunks: Vec<u64> = (0..paths).step_by(CHUNK as usize).collect();
    let partials: Vec<CliResult<Partial>> = chunks
        .par_iter()
        .map(|&start| {
            let end = (start + CHUNK).min(paths);
            let mut part = Partial {
                x: Vec::with_capacity((end - start) as usize),
                m: Vec::with_capacity((end - start) as usize),
                moments: MomentAccumulator::new(probes.clone()),
                sup_residual: RunningMean::default(),
                sup_abs_m: RunningMean::default(),
                clamped: 0,
                non_monotone: 0,
            };
            let mut observe = |x: &[f64], m: &[f64]| {
                part.x.push(x[x.len() - 1]);
                part.m.push(m[m.len() - 1]);
                part.moments.add_path(x, m);
                let mut sup_r: f64 = 0.0;
                let mut sup_m: f64 = 0.0;
                for k in 0..x.len() {
                    sup_r = sup_r.max((drift[k] + m[k] - (1.0 + model.lambda) * x[k]).abs());
                    sup_m = sup_m.max(m[k].abs());
                }
                part.sup_residual.push(sup_r);
                part.sup_abs_m.push(sup_m);
                if x.windows(2).any(|w| w[1] < w[0]) {
                    part.non_monotone += 1;
                }
            };
            let mut clamped = 0;
            match &scheme {
                Some(s) => clamped = s.run_batch(seed, start..end, |_, x, m| observe(x, m)),
                None => {
                    let blank = StepVariate { normal: 0.0, uniform: 0.5 };
                    let mut variates = vec![blank; grid.steps()];
                    for stream in start..end {
                        fill_step_variates(&mut RngSeed::new(seed, stream).rng(), &mut variates);
                        let p = limit_path_from_variates(model, grid, &variates)?;
                        observe(&p.x, &p.m);
                    }
                }
            }
            part.clamped = clamped;
            Ok(part)
        })
        .collect();

    let mut x = Vec::with_capacity(paths as usize);
    let mut m = Vec::with_capacity(paths as usize);
    let mut moments = MomentAccumulator::new(probes);
    let mut sup_residual = RunningMean::default();
    let mut sup_abs_m = RunningMean::default();
    let mut clamped_steps = 0;
    let mut non_monotone_paths = 0;
    for part in partials {
        let part = part?;
        x.extend_from_slice(&part.x);
        m.extend_from_slice(&part.m);
        moments.merge(&part.moments)?;
        sup_residual.merge(&part.sup_residual);
        sup_abs_m.merge(&part.sup_abs_m);
        clamped_steps += part.clamped;
        non_monotone_paths += part.non_monotone;
    }
    let batch = SampleBatch::new(hurst, grid.steps(), seed, x, m)?;
    Ok(BatchStats {
        hurst,
        batch,
        moments,
        probe_times,
        sup_residual,
        sup_abs_m,
        clamped_steps,
        non_monotone_paths,
    })
}
