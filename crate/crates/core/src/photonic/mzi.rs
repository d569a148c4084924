use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::util::db_to_linear;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Port {
    One,
    Two,
}

impl Port {
    pub fn number(self) -> u8 {
        match self {
            Port::One => 1,
            Port::Two => 2,
        }
    }

    pub fn from_number(n: u8) -> Option<Port> {
        match n {
            1 => Some(Port::One),
            2 => Some(Port::Two),
            _ => None,
        }
    }
}

/// Unbalanced Mach-Zehnder interferometer with complementary outputs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MziModel {
    pub fsr_hz: f64,
    pub extinction_ratio_db: f64,
    /// Offset of the port-1 transmission maximum.
    pub f_ref_hz: f64,
    pub insertion_loss_db: f64,
}

impl Default for MziModel {
    fn default() -> Self {
        MziModel {
            fsr_hz: 144e9,
            extinction_ratio_db: 18.0,
            f_ref_hz: 0.0,
            insertion_loss_db: 0.0,
        }
    }
}

impl MziModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.fsr_hz > 0.0) {
            return Err(Error::invalid("mzi.fsr_hz", "must be positive"));
        }
        if !(self.extinction_ratio_db > 0.0) {
            return Err(Error::invalid("mzi.extinction_ratio_db", "must be positive"));
        }
        if !(self.insertion_loss_db >= 0.0) {
            return Err(Error::invalid("mzi.insertion_loss_db", "must be >= 0 dB"));
        }
        Ok(())
    }

    /// Fringe contrast `(R - 1) / (R + 1)` for linear extinction ratio `R`.
    pub fn contrast(&self) -> f64 {
        let r = db_to_linear(self.extinction_ratio_db);
        (r - 1.0) / (r + 1.0)
    }

    #[inline]
    pub fn port_response(&self, f: f64, port: Port) -> f64 {
        let loss = db_to_linear(-self.insertion_loss_db);
        let c = self.contrast() * (2.0 * PI * (f - self.f_ref_hz) / self.fsr_hz).cos();
        match port {
            Port::One => loss * 0.5 * (1.0 + c),
            Port::Two => loss * 0.5 * (1.0 - c),
        }
    }

    /// Amplitude comparison function `10 log10(P1 / P2)` in dB.
    pub fn acf(&self, f: f64) -> f64 {
        10.0 * (self.port_response(f, Port::One) / self.port_response(f, Port::Two)).log10()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn port_two_at_reference() {
        let m = MziModel::default();
        // R = 10^1.8, gamma = (R - 1) / (R + 1)
        let r = 10f64.powf(1.8);
        let gamma = (r - 1.0) / (r + 1.0);
        assert_relative_eq!(gamma, 0.96880, epsilon = 1e-5);
        assert_relative_eq!(m.port_response(0.0, Port::Two), (1.0 - gamma) / 2.0, epsilon = 1e-15);
        assert_relative_eq!(m.port_response(0.0, Port::Two), 0.01560, epsilon = 1e-5);
    }

    #[test]
    fn quarter_fsr_is_balanced() {
        let m = MziModel::default();
        assert_relative_eq!(m.port_response(36e9, Port::Two), 0.5, epsilon = 1e-12);
        assert!(m.acf(36e9).abs() < 1e-9);
    }

    #[test]
    fn acf_extremes() {
        let m = MziModel::default();
        assert_relative_eq!(m.acf(0.0), 18.0, epsilon = 1e-9);
        assert_relative_eq!(m.acf(72e9), -18.0, epsilon = 1e-9);
    }

    #[test]
    fn insertion_loss_scales_both_ports() {
        let m = MziModel {
            insertion_loss_db: 3.0,
            ..MziModel::default()
        };
        let sum = m.port_response(12e9, Port::One) + m.port_response(12e9, Port::Two);
        assert_relative_eq!(sum, 10f64.powf(-0.3), epsilon = 1e-12);
    }

    proptest! {
        #[test]
        fn complementary_and_periodic(f in -300e9..300e9f64) {
            let m = MziModel::default();
            let (p1, p2) = (m.port_response(f, Port::One), m.port_response(f, Port::Two));
            prop_assert!((p1 + p2 - 1.0).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&p1) && (0.0..=1.0).contains(&p2));
            prop_assert!((p2 - m.port_response(f + m.fsr_hz, Port::Two)).abs() < 1e-9);
        }

        #[test]
        fn acf_decreasing_on_half_period(f in 0.1e9..71.0e9f64, df in 0.01e9..0.9e9f64) {
            let m = MziModel::default();
            prop_assert!(m.acf(f + df) < m.acf(f));
        }
    }
}
