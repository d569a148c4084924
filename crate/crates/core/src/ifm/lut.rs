use std::io::{self, BufRead, Write};

use crate::error::{Error, Result};
use crate::photonic::{ModulatorModel, MziModel, Port};

pub const DEFAULT_LUT_KNOTS: usize = 4096;

/// What the lookup table maps to frequency.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LutMode {
    /// Normalized power transmission of one MZI port.
    SinglePort(Port),
    /// Power ratio of port 1 over port 2 in dB.
    Ratio,
}

impl LutMode {
    pub fn name(&self) -> &'static str {
        match self {
            LutMode::SinglePort(_) => "single_port",
            LutMode::Ratio => "ratio",
        }
    }
}

/// Tabulated, strictly monotone frequency response used for inversion.
#[derive(Debug, Clone, PartialEq)]
pub struct AcfLut {
    pub mode: LutMode,
    pub band: [f64; 2],
    pub freqs: Vec<f64>,
    pub values: Vec<f64>,
}

impl AcfLut {
    pub fn increasing(&self) -> bool {
        self.values[self.values.len() - 1] > self.values[0]
    }

    /// Knot spacing in Hz.
    pub fn step_hz(&self) -> f64 {
        (self.band[1] - self.band[0]) / (self.freqs.len() - 1) as f64
    }

    pub fn value_range(&self) -> (f64, f64) {
        let (a, b) = (self.values[0], self.values[self.values.len() - 1]);
        (a.min(b), a.max(b))
    }

    /// Linear interpolation of the table value at `f`; `None` outside the band.
    pub fn eval(&self, f: f64) -> Option<f64> {
        if !(f >= self.band[0] && f <= self.band[1]) {
            return None;
        }
        let x = (f - self.band[0]) / self.step_hz();
        let i = (x.floor() as usize).min(self.freqs.len() - 2);
        let frac = x - i as f64;
        Some(self.values[i] + frac * (self.values[i + 1] - self.values[i]))
    }

    /// Frequency whose table value is `v` (binary search, then linear
    /// interpolation). `None` when `v` lies outside the tabulated range.
    pub fn invert(&self, v: f64) -> Option<f64> {
        let (lo, hi) = self.value_range();
        if !(v >= lo && v <= hi) {
            return None;
        }
        let inc = self.increasing();
        // first knot whose value is past v in the table's direction
        let j = self
            .values
            .partition_point(|&x| if inc { x < v } else { x > v })
            .clamp(1, self.values.len() - 1);
        let (v0, v1) = (self.values[j - 1], self.values[j]);
        let frac = if v1 == v0 { 0.0 } else { (v - v0) / (v1 - v0) };
        Some(self.freqs[j - 1] + frac * (self.freqs[j] - self.freqs[j - 1]))
    }

    fn header(&self) -> String {
        let port = match self.mode {
            LutMode::SinglePort(p) => p.number().to_string(),
            LutMode::Ratio => "-".to_string(),
        };
        format!(
            "# mode={} port={} f_lo_hz={:e} f_hi_hz={:e}",
            self.mode.name(),
            port,
            self.band[0],
            self.band[1]
        )
    }

    /// Header line naming mode, port and band, then `freq_hz,value` rows.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{}", self.header())?;
        for (f, v) in self.freqs.iter().zip(&self.values) {
            writeln!(w, "{:e},{:e}", f, v)?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let bad = |m: String| Error::Parse(format!("lookup table: {m}"));
        let header = lines
            .next()
            .ok_or_else(|| bad("empty file".into()))?
            .map_err(|e| bad(e.to_string()))?;
        let (mut mode, mut port, mut lo, mut hi) = (None, None, None, None);
        for field in header.trim_start_matches('#').split_whitespace() {
            let (k, v) = field
                .split_once('=')
                .ok_or_else(|| bad(format!("malformed header field `{field}`")))?;
            let num = || v.parse::<f64>().map_err(|e| bad(format!("{k}: {e}")));
            match k {
                "mode" => mode = Some(v.to_string()),
                "port" => port = Some(v.to_string()),
                "f_lo_hz" => lo = Some(num()?),
                "f_hi_hz" => hi = Some(num()?),
                _ => return Err(bad(format!("unknown header field `{k}`"))),
            }
        }
        let mode = match mode.as_deref() {
            Some("ratio") => LutMode::Ratio,
            Some("single_port") => {
                let n = port.as_deref().and_then(|p| p.parse::<u8>().ok());
                LutMode::SinglePort(
                    n.and_then(Port::from_number)
                        .ok_or_else(|| bad("port must be 1 or 2".into()))?,
                )
            }
            other => return Err(bad(format!("unknown mode {other:?}"))),
        };
        let band = [
            lo.ok_or_else(|| bad("missing f_lo_hz".into()))?,
            hi.ok_or_else(|| bad("missing f_hi_hz".into()))?,
        ];
        let (mut freqs, mut values) = (Vec::new(), Vec::new());
        for (i, line) in lines.enumerate() {
            let line = line.map_err(|e| bad(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let row = i + 2;
            let (f, v) = line
                .split_once(',')
                .ok_or_else(|| bad(format!("line {row}: expected two columns")))?;
            freqs.push(f.trim().parse::<f64>().map_err(|e| bad(format!("line {row}: {e}")))?);
            values.push(v.trim().parse::<f64>().map_err(|e| bad(format!("line {row}: {e}")))?);
        }
        if freqs.len() < 2 {
            return Err(bad("fewer than two knots".into()));
        }
        let lut = AcfLut {
            mode,
            band,
            freqs,
            values,
        };
        check_monotone(&lut)?;
        Ok(lut)
    }
}

/// Modulated single-port response `w(f) * T_port(f)`, or the ACF in dB.
pub fn system_response(mzi: &MziModel, modulator: Option<&ModulatorModel>, mode: LutMode, f: f64) -> f64 {
    match mode {
        LutMode::SinglePort(port) => modulator.map_or(1.0, |m| m.sideband_weight(f)) * mzi.port_response(f, port),
        LutMode::Ratio => mzi.acf(f),
    }
}

/// Tabulates the lookup over `band` at `n_knots` evenly spaced frequencies.
///
/// Single-port values include the modulator roll-off when `modulator` is
/// given (the detected power carries it too) and are normalized to their
/// maximum over the band. The band must fit in half an MZI period and the
/// tabulated values must be strictly monotone.
pub fn build_lut(
    mzi: &MziModel,
    modulator: Option<&ModulatorModel>,
    band: [f64; 2],
    mode: LutMode,
    n_knots: usize,
) -> Result<AcfLut> {
    mzi.validate()?;
    if !(band[1] > band[0] && band[0].is_finite() && band[1].is_finite()) {
        return Err(Error::invalid("lut.band", "need f_lo < f_hi"));
    }
    if band[1] - band[0] > 0.5 * mzi.fsr_hz {
        return Err(Error::invalid(
            "lut.band",
            format!("width {:e} Hz exceeds half the MZI FSR", band[1] - band[0]),
        ));
    }
    if n_knots < 2 {
        return Err(Error::invalid("lut.n_knots", "need at least 2 knots"));
    }
    let step = (band[1] - band[0]) / (n_knots - 1) as f64;
    let freqs: Vec<f64> = (0..n_knots)
        .map(|i| {
            if i + 1 == n_knots {
                band[1]
            } else {
                band[0] + i as f64 * step
            }
        })
        .collect();
    let mut values: Vec<f64> = freqs
        .iter()
        .map(|&f| system_response(mzi, modulator, mode, f))
        .collect();
    if let LutMode::SinglePort(_) = mode {
        let max = values.iter().copied().fold(f64::MIN, f64::max);
        values.iter_mut().for_each(|v| *v /= max);
    }
    let lut = AcfLut {
        mode,
        band,
        freqs,
        values,
    };
    check_monotone(&lut)?;
    Ok(lut)
}

fn check_monotone(lut: &AcfLut) -> Result<()> {
    let inc = lut.increasing();
    for i in 1..lut.values.len() {
        let d = lut.values[i] - lut.values[i - 1];
        let ok = if inc { d > 0.0 } else { d < 0.0 };
        if !ok || !lut.values[i].is_finite() {
            return Err(Error::NonMonotoneLut {
                lo_hz: lut.freqs[i - 1],
                hi_hz: lut.freqs[i],
            });
        }
    }
    Ok(())
}
