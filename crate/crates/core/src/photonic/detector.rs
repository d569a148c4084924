//! Band-limited photodetection with additive Gaussian noise.
//!
//! Noise streams come from ChaCha8 (`rand_chacha::ChaCha8Rng`), a
//! counter-based generator: the 64-bit seed is expanded with
//! `SeedableRng::seed_from_u64` and each use gets its own stream id, so the
//! detector noise and the scope sampling phase never share draws.
//! Gaussian variates use `rand_distr::StandardNormal`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::rf_signals::TimeGrid;

/// ChaCha stream carrying detector noise.
pub const NOISE_STREAM: u64 = 0;
/// ChaCha stream carrying the scope sampling phase of scan traces.
pub const SAMPLING_STREAM: u64 = 1;
/// ChaCha stream carrying detector noise of MZI port 1, so both ports of a
/// ratio measurement see independent noise.
pub const PORT1_NOISE_STREAM: u64 = 2;

pub(crate) fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PdModel {
    pub bw_3db_hz: f64,
    pub responsivity: f64,
    /// Noise standard deviation as a fraction of the trace's full-scale power.
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for PdModel {
    fn default() -> Self {
        PdModel {
            bw_3db_hz: 33e9,
            responsivity: 1.0,
            noise_sigma: 0.01,
            seed: 0,
        }
    }
}

impl PdModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.bw_3db_hz > 0.0) {
            return Err(Error::invalid("pd.bw_3db_hz", "must be positive"));
        }
        if !(self.responsivity > 0.0) {
            return Err(Error::invalid("pd.responsivity", "must be positive"));
        }
        if !(self.noise_sigma >= 0.0) {
            return Err(Error::invalid("pd.noise_sigma", "must be non-negative"));
        }
        Ok(())
    }
}

/// Converts an optical power waveform to photocurrent.
///
/// The single-pole low-pass only runs when the grid can represent the
/// detector bandwidth; at slower rates the detector is transparent.
pub fn pd_detect(power: &[f64], model: &PdModel, grid: &TimeGrid) -> Vec<f64> {
    pd_detect_on_stream(power, model, grid, NOISE_STREAM)
}

pub(crate) fn pd_detect_on_stream(power: &[f64], model: &PdModel, grid: &TimeGrid, stream: u64) -> Vec<f64> {
    let mut out: Vec<f64> = power.iter().map(|&p| model.responsivity * p).collect();

    if grid.nyquist() >= model.bw_3db_hz && !out.is_empty() {
        let alpha = 1.0 - (-2.0 * std::f64::consts::PI * model.bw_3db_hz * grid.dt()).exp();
        let mut y = out[0];
        for v in out.iter_mut() {
            y += alpha * (*v - y);
            *v = y;
        }
    }

    if model.noise_sigma > 0.0 {
        let full_scale = out.iter().copied().fold(0.0, f64::max);
        let sigma = model.noise_sigma * full_scale;
        let mut rng = stream_rng(model.seed, stream);
        for v in out.iter_mut() {
            let n: f64 = StandardNormal.sample(&mut rng);
            *v = (*v + sigma * n).max(0.0);
        }
    }
    out
}
