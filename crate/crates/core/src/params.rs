use crate::error::{Error, Result};

/// SX1280 narrow-band setting; a symbol lasts 0.63 ms at SF7 and 20 ms at SF12.
pub const DEFAULT_BW_HZ: f64 = 203_125.0;

/// Spreading factor, bandwidth and starting-frequency offset of a LoRa link.
///
/// All signal math runs in normalized chip units: one complex sample per chip,
/// sample rate equal to the bandwidth. `bw_hz` only matters when converting
/// between chips and seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoraParams {
    sf: u8,
    bw_hz: f64,
    f0: usize,
}

impl LoraParams {
    pub const MIN_SF: u8 = 7;
    pub const MAX_SF: u8 = 12;

    pub fn new(sf: u8) -> Result<Self> {
        Self::with_bandwidth(sf, DEFAULT_BW_HZ)
    }

    pub fn with_bandwidth(sf: u8, bw_hz: f64) -> Result<Self> {
        if !(Self::MIN_SF..=Self::MAX_SF).contains(&sf) {
            return Err(Error::InvalidSpreadingFactor(sf));
        }
        if !(bw_hz.is_finite() && bw_hz > 0.0) {
            return Err(Error::ConfigInvalid(format!("bandwidth {bw_hz} Hz")));
        }
        Ok(Self { sf, bw_hz, f0: 0 })
    }

    /// Sets the starting-frequency offset in bins.
    pub fn with_f0(mut self, f0: usize) -> Result<Self> {
        if f0 >= self.n_chips() {
            return Err(Error::ConfigInvalid(format!("f0 {f0} outside [0, {})", self.n_chips())));
        }
        self.f0 = f0;
        Ok(self)
    }

    pub fn sf(&self) -> u8 {
        self.sf
    }

    pub fn n_chips(&self) -> usize {
        1 << self.sf
    }

    pub fn bw_hz(&self) -> f64 {
        self.bw_hz
    }

    pub fn f0(&self) -> usize {
        self.f0
    }

    pub fn chip_duration_s(&self) -> f64 {
        1.0 / self.bw_hz
    }

    pub fn symbol_duration_s(&self) -> f64 {
        self.n_chips() as f64 / self.bw_hz
    }

    pub fn symbol(&self, value: usize) -> Result<SymbolValue> {
        SymbolValue::new(value, self)
    }
}

/// A symbol value in `[0, 2^sf)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SymbolValue(u16);

impl SymbolValue {
    pub fn new(value: usize, params: &LoraParams) -> Result<Self> {
        let n_chips = params.n_chips();
        if value >= n_chips {
            return Err(Error::InvalidSymbol { value, n_chips });
        }
        Ok(Self(value as u16))
    }

    pub fn value(self) -> usize {
        self.0 as usize
    }
}
