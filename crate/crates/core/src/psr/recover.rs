use num_complex::Complex64;

use super::detect::CleanChipMask;
use crate::error::{Error, Result};
use crate::params::{LoraParams, SymbolValue};
use crate::phy::{dechirp, demod_fft, gen_downchirp, FftMagnitudes};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecoveryResult {
    pub symbol: SymbolValue,
    pub peak_magnitude: f64,
    pub clean_count: usize,
    /// `clean_count >= recovery threshold`; the symbol is a best guess otherwise.
    pub succeeded: bool,
    /// Decided by the plain FFT without spectrogram analysis.
    pub fast_path: bool,
}

/// Correlates the clean chips against the downchirp and picks the strongest
/// bin of the N-point FFT; masked chips contribute nothing.
pub fn recover_symbol(
    rx: &[Complex64],
    mask: &CleanChipMask,
    params: &LoraParams,
    threshold: usize,
) -> Result<RecoveryResult> {
    let n = params.n_chips();
    if rx.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            actual: rx.len(),
        });
    }
    let dechirped = dechirp(rx, &gen_downchirp(params))?;
    Ok(recover_gated(&dechirped, mask, params, threshold)?.0)
}

/// [`recover_symbol`] on an already dechirped symbol; also returns the gated
/// spectrum.
pub(crate) fn recover_gated(
    dechirped: &[Complex64],
    mask: &CleanChipMask,
    params: &LoraParams,
    threshold: usize,
) -> Result<(RecoveryResult, FftMagnitudes)> {
    let n = params.n_chips();
    if dechirped.len() != n || mask.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            actual: if dechirped.len() != n {
                dechirped.len()
            } else {
                mask.len()
            },
        });
    }
    let gated: Vec<Complex64> = dechirped
        .iter()
        .zip(&mask.clean)
        .map(|(x, &keep)| if keep { *x } else { Complex64::new(0.0, 0.0) })
        .collect();
    let (bin, mags) = demod_fft(&gated);
    let clean_count = mask.clean_count();
    let result = RecoveryResult {
        symbol: params.symbol(bin)?,
        peak_magnitude: mags.bins()[bin],
        clean_count,
        succeeded: clean_count >= threshold,
        fast_path: false,
    };
    Ok((result, mags))
}
