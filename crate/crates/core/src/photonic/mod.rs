//! Power-transfer models of the on-chip optical elements.
//!
//! Everything is expressed as RF offset from the optical carrier: the
//! single-sideband modulator places an RF component at `+f`, a filter tuned
//! to offset `f_s` sees detuning `f - f_s`.

mod detector;
mod modulator;
mod mrr;
mod mzi;
mod notch;

pub use detector::{pd_detect, PdModel, NOISE_STREAM, PORT1_NOISE_STREAM, SAMPLING_STREAM};
pub use modulator::ModulatorModel;
pub use mrr::{thermal_lag, MrrModel};
pub use mzi::{MziModel, Port};
pub use notch::NotchFilterModel;

pub(crate) use detector::{pd_detect_on_stream, stream_rng};

use crate::error::{Error, Result};

/// Lumped link parameters outside the chip.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkConfig {
    /// Optical carrier frequency. Recorded for reference only; all models
    /// work in RF offset from the carrier.
    pub carrier_freq_hz: f64,
    /// Net optical gain/loss (amplifier and coupling) as a power factor.
    pub link_gain: f64,
}

impl Default for LinkConfig {
    fn default() -> Self {
        LinkConfig {
            carrier_freq_hz: 193.7e12,
            link_gain: 1.0,
        }
    }
}

/// Every transfer model needed by both measurement paths.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LinkModels {
    pub modulator: ModulatorModel,
    pub mrr: MrrModel,
    pub mzi: MziModel,
    /// Band-stop filter in front of the discriminator; `None` bypasses it.
    pub notch: Option<NotchFilterModel>,
    pub pd: PdModel,
    pub link: LinkConfig,
}

impl LinkModels {
    pub fn validate(&self) -> Result<()> {
        self.modulator.validate()?;
        self.mrr.validate()?;
        self.mzi.validate()?;
        if let Some(notch) = &self.notch {
            notch.validate()?;
        }
        self.pd.validate()?;
        if !(self.link.link_gain > 0.0) {
            return Err(Error::invalid("link.gain", "must be positive"));
        }
        Ok(())
    }

    /// Band-stop transmission at `f`, 1.0 when the notch is bypassed.
    #[inline]
    pub fn notch_response(&self, f: f64) -> f64 {
        self.notch.as_ref().map_or(1.0, |n| n.response(f))
    }

    pub fn with_noise(mut self, sigma: f64, seed: u64) -> Self {
        self.pd.noise_sigma = sigma;
        self.pd.seed = seed;
        self
    }

    pub fn noiseless(self) -> Self {
        let seed = self.pd.seed;
        self.with_noise(0.0, seed)
    }
}
