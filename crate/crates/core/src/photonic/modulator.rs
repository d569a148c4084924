use crate::error::{Error, Result};
use crate::util::db_to_linear;

/// Carrier-suppressed single-sideband modulator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModulatorModel {
    pub bw_3db_hz: f64,
    /// Residual carrier power below the full sideband, in dB.
    pub carrier_suppression_db: f64,
    /// Residual image (lower) sideband power below the wanted one, in dB.
    pub image_suppression_db: f64,
}

impl Default for ModulatorModel {
    fn default() -> Self {
        ModulatorModel {
            bw_3db_hz: 22e9,
            carrier_suppression_db: 25.0,
            image_suppression_db: 25.0,
        }
    }
}

impl ModulatorModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.bw_3db_hz > 0.0) {
            return Err(Error::invalid("modulator.bw_3db_hz", "must be positive"));
        }
        if !(self.carrier_suppression_db >= 0.0) || !(self.image_suppression_db >= 0.0) {
            return Err(Error::invalid("modulator.suppression_db", "must be >= 0 dB"));
        }
        Ok(())
    }

    /// First-order power roll-off `1 / (1 + (f / bw)²)`.
    #[inline]
    pub fn sideband_weight(&self, f: f64) -> f64 {
        let x = f / self.bw_3db_hz;
        1.0 / (1.0 + x * x)
    }

    #[inline]
    pub fn carrier_fraction(&self) -> f64 {
        db_to_linear(-self.carrier_suppression_db)
    }

    #[inline]
    pub fn image_fraction(&self) -> f64 {
        db_to_linear(-self.image_suppression_db)
    }
}
