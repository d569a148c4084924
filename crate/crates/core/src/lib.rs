#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Simulation and estimation toolkit for a single-chip photonic microwave
//! frequency identification receiver.
//!
//! The receiver has two measurement paths fed by the same single-sideband
//! modulated optical carrier:
//!
//! * a thermally swept microring filter that maps each RF component to a
//!   pulse whose delay encodes its frequency ([`scan`]), and
//! * a notch-filtered Mach-Zehnder discriminator that maps instantaneous
//!   frequency to detected power ([`ifm`]).
//!
//! Signals are handled in a quasi-static spectral form: at every instant a
//! scenario is a finite set of `(frequency, amplitude)` pairs, and each
//! optical element is a power-transmission function of RF offset from the
//! carrier. [`classifier`] labels scan traces, and [`harness`] wires
//! everything into the `mwfi` command line tool.

pub mod classifier;
pub mod error;
pub mod harness;
pub mod ifm;
pub mod photonic;
pub mod rf_signals;
pub mod scan;
mod util;

pub use error::{Error, Result};
