use crate::error::{Error, Result};
use crate::util::db_to_linear;

/// Cascade of up to three add-drop rings used through-port as a band-stop
/// filter. Staggering the centers broadens the stopband.
#[derive(Debug, Clone, PartialEq)]
pub struct NotchFilterModel {
    pub centers_hz: Vec<f64>,
    pub fwhm_each_hz: f64,
    /// On-resonance rejection of each ring, in dB.
    pub rejection_db: f64,
}

impl Default for NotchFilterModel {
    fn default() -> Self {
        NotchFilterModel {
            centers_hz: vec![10e9; 3],
            fwhm_each_hz: 300e6,
            rejection_db: 20.0,
        }
    }
}

impl NotchFilterModel {
    pub fn centered(center_hz: f64) -> Self {
        NotchFilterModel {
            centers_hz: vec![center_hz; 3],
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=3).contains(&self.centers_hz.len()) {
            return Err(Error::invalid("notch.centers_hz", "need between 1 and 3 rings"));
        }
        if !(self.fwhm_each_hz > 0.0) {
            return Err(Error::invalid("notch.fwhm_hz", "must be positive"));
        }
        if !(self.rejection_db >= 0.0) {
            return Err(Error::invalid("notch.rejection_db", "must be >= 0 dB"));
        }
        Ok(())
    }

    #[inline]
    pub fn response(&self, f: f64) -> f64 {
        let floor = db_to_linear(-self.rejection_db);
        self.centers_hz
            .iter()
            .map(|&c| {
                let x = 2.0 * (f - c) / self.fwhm_each_hz;
                1.0 - (1.0 - floor) / (1.0 + x * x)
            })
            .product()
    }
}
