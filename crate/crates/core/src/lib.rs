//! LoRa chirp spread spectrum simulation with partial symbol recovery.
//!
//! - [`phy`]: modulation, dechirping and FFT demodulation.
//! - [`coding`]: Hamming(8,4), interleaving, Gray mapping and CRC framing.
//! - [`channel`]: AWGN plus statistically modelled cross-technology bursts.
//! - [`psr`]: clean-chip detection and correlation recovery of corrupted symbols.
//! - [`iq`]: the binary IQ trace format.

pub mod channel;
pub mod coding;
pub mod error;
mod fft;
pub mod iq;
pub mod params;
pub mod phy;
pub mod psr;

pub use error::{Error, Result};
pub use params::{LoraParams, SymbolValue, DEFAULT_BW_HZ};
pub use phy::{dechirp, demod_fft, demodulate, gen_downchirp, gen_upchirp, upchirp_for, ChipBuffer, FftMagnitudes};
