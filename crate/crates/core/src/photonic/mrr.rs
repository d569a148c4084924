use crate::error::{Error, Result};
use crate::rf_signals::TimeGrid;

/// Thermally tuned microring used as the scanning bandpass filter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MrrModel {
    pub fsr_hz: f64,
    pub fwhm_hz: f64,
    /// Offset of the tracked resonance above the carrier at 0 V.
    pub f_offset0_hz: f64,
    /// Resonance shift per squared heater volt.
    pub k_thermal_hz_per_v2: f64,
    /// First-order heater time constant. The default is 82 µs / ln 9, i.e.
    /// an 82 µs 10-90 % rise time.
    pub tau_thermal_s: f64,
    pub peak_transmission: f64,
}

impl Default for MrrModel {
    fn default() -> Self {
        MrrModel {
            fsr_hz: 80e9,
            fwhm_hz: 875e6,
            f_offset0_hz: 8e9,
            k_thermal_hz_per_v2: 2e9,
            tau_thermal_s: 37.3e-6,
            peak_transmission: 1.0,
        }
    }
}

impl MrrModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.fwhm_hz > 0.0 && self.fwhm_hz < 0.1 * self.fsr_hz) {
            return Err(Error::invalid("mrr.fwhm_hz", "must satisfy 0 < fwhm << fsr"));
        }
        if !(self.k_thermal_hz_per_v2 > 0.0) {
            return Err(Error::invalid("mrr.k_thermal", "must be positive"));
        }
        if !(self.tau_thermal_s > 0.0) {
            return Err(Error::invalid("mrr.tau_s", "must be positive"));
        }
        if !(0.0..=1.0).contains(&self.peak_transmission) {
            return Err(Error::invalid("mrr.peak_transmission", "must lie in [0, 1]"));
        }
        Ok(())
    }

    /// Lorentzian drop-port transmission at `detuning` from the tracked
    /// resonance. Neighbouring resonances repeat every FSR, so the detuning
    /// is first wrapped to the nearest one.
    #[inline]
    pub fn drop_response(&self, detuning: f64) -> f64 {
        let wrapped = detuning - self.fsr_hz * (detuning / self.fsr_hz).round();
        let x = 2.0 * wrapped / self.fwhm_hz;
        self.peak_transmission / (1.0 + x * x)
    }

    /// Resonance offset above the carrier for an effective heater drive.
    #[inline]
    pub fn resonance_offset(&self, v_effective: f64) -> f64 {
        self.resonance_offset_from_power(v_effective * v_effective)
    }

    /// Same as [`resonance_offset`](Self::resonance_offset) but from the
    /// (lagged) squared voltage directly.
    #[inline]
    pub fn resonance_offset_from_power(&self, v_squared: f64) -> f64 {
        self.f_offset0_hz + self.k_thermal_hz_per_v2 * v_squared
    }
}

/// First-order heater response `y[k+1] = y[k] + dt / tau * (x[k] - y[k])`
/// with `y[0] = x[0]`.
pub fn thermal_lag(drive_power: &[f64], tau: f64, grid: &TimeGrid) -> Result<Vec<f64>> {
    let dt = grid.dt();
    if !(dt < tau / 4.0) {
        return Err(Error::ThermalUndersampled {
            dt_s: dt,
            limit_s: tau / 4.0,
        });
    }
    let alpha = dt / tau;
    let mut out = Vec::with_capacity(drive_power.len());
    let Some(&first) = drive_power.first() else {
        return Ok(out);
    };
    let mut y = first;
    for &x in drive_power {
        out.push(y);
        y += alpha * (x - y);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn drop_response_values() {
        let m = MrrModel::default();
        assert_eq!(m.drop_response(0.0), 1.0);
        assert_relative_eq!(m.drop_response(437.5e6), 0.5, epsilon = 1e-12);
        assert_relative_eq!(m.drop_response(-437.5e6), 0.5, epsilon = 1e-12);
        assert_relative_eq!(m.drop_response(80e9), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn linewidth_matches_quality_factor() {
        // 7 pm at 1547.482 nm, converted with df = c * dl / l².
        let c = 299_792_458.0;
        let lambda: f64 = 1547.482e-9;
        let df = c * 7e-12 / (lambda * lambda);
        assert!((df - MrrModel::default().fwhm_hz).abs() / df < 0.01);
        let q = c / lambda / df;
        assert!((q - 2.2e5).abs() / 2.2e5 < 0.02);
    }

    #[test]
    fn resonance_offset_law() {
        let m = MrrModel::default();
        assert_relative_eq!(m.resonance_offset(0.0), 8e9);
        assert_relative_eq!(m.resonance_offset(2.0), 16e9);
        assert_relative_eq!(m.resonance_offset(4.0), 40e9);
    }

    #[test]
    fn thermal_lag_constant_input() {
        let grid = TimeGrid::new(1e6, 100, 0.0).unwrap();
        let y = thermal_lag(&[3.0; 100], 37.3e-6, &grid).unwrap();
        assert!(y.iter().all(|&v| v == 3.0));
    }

    #[test]
    fn thermal_lag_step_response() {
        let tau = 37.3e-6;
        let grid = TimeGrid::new(100e6, 20_000, 0.0).unwrap();
        let mut x = vec![1.0; grid.n_samples];
        x[0] = 0.0;
        let y = thermal_lag(&x, tau, &grid).unwrap();
        let at_tau = y[(tau * grid.sample_rate).round() as usize];
        assert!((at_tau - (1.0 - (-1.0f64).exp())).abs() < 0.01 * 0.632);

        // 10-90 % rise equals tau * ln 9 (~82 us for the default tau).
        let t10 = y.iter().position(|&v| v >= 0.1).unwrap() as f64 * grid.dt();
        let t90 = y.iter().position(|&v| v >= 0.9).unwrap() as f64 * grid.dt();
        let rise = t90 - t10;
        assert!((rise - tau * 9f64.ln()).abs() < 0.01 * rise);
        assert!((rise - 82e-6).abs() < 1e-6);
    }

    #[test]
    fn thermal_lag_settles_within_ten_tau() {
        let tau = 37.3e-6;
        let grid = TimeGrid::new(1e6, 400, 0.0).unwrap();
        let mut x = vec![5.0; grid.n_samples];
        x[0] = 0.0;
        let y = thermal_lag(&x, tau, &grid).unwrap();
        let k = (10.0 * tau * grid.sample_rate).ceil() as usize;
        assert!((y[k] - 5.0).abs() / 5.0 < 1e-3);
    }

    #[test]
    fn thermal_lag_rejects_coarse_grid() {
        let grid = TimeGrid::new(1e5, 10, 0.0).unwrap();
        assert!(matches!(
            thermal_lag(&[0.0; 10], 37.3e-6, &grid),
            Err(Error::ThermalUndersampled { .. })
        ));
    }

    proptest! {
        #[test]
        fn lorentzian_symmetric_and_periodic(d in -200e9..200e9f64) {
            let m = MrrModel::default();
            prop_assert!((m.drop_response(d) - m.drop_response(-d)).abs() < 1e-12);
            prop_assert!((m.drop_response(d) - m.drop_response(d + m.fsr_hz)).abs() < 1e-9);
            let t = m.drop_response(d);
            prop_assert!((0.0..=1.0).contains(&t));
        }
    }
}
