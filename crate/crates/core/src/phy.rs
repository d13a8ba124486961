//! Chirp spread spectrum modulation and FFT demodulation.
//!
//! Conventions: one sample per chip, so a symbol `s` at spreading factor `sf`
//! is `N = 2^sf` samples of
//!
//! ```text
//! x(n) = exp(j 2 pi (f0 + s + n/2) n / N)
//! ```
//!
//! The quadratic term sweeps the instantaneous frequency upward across the
//! band. Multiplying by the conjugate base chirp leaves the tone
//! `exp(j 2 pi s n / N)`, whose N-point DFT peaks at bin `s`.

use std::f64::consts::PI;
use std::ops::{Deref, DerefMut};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft;
use crate::params::{LoraParams, SymbolValue};

/// Complex baseband samples of one symbol.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ChipBuffer(Vec<Complex64>);

impl ChipBuffer {
    pub fn new(samples: Vec<Complex64>) -> Self {
        Self(samples)
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![Complex64::new(0.0, 0.0); len])
    }

    pub fn into_inner(self) -> Vec<Complex64> {
        self.0
    }

    /// Mean squared magnitude.
    pub fn power(&self) -> f64 {
        mean_power(&self.0)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self(self.0.iter().map(|x| x * factor).collect())
    }
}

impl Deref for ChipBuffer {
    type Target = [Complex64];

    fn deref(&self) -> &[Complex64] {
        &self.0
    }
}

impl DerefMut for ChipBuffer {
    fn deref_mut(&mut self) -> &mut [Complex64] {
        &mut self.0
    }
}

impl From<Vec<Complex64>> for ChipBuffer {
    fn from(samples: Vec<Complex64>) -> Self {
        Self(samples)
    }
}

pub(crate) fn mean_power(samples: &[Complex64]) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    samples.iter().map(|x| x.norm_sqr()).sum::<f64>() / samples.len() as f64
}

/// `|DFT|` of a dechirped symbol, one entry per bin.
#[derive(Debug, Clone, PartialEq)]
pub struct FftMagnitudes(Vec<f64>);

impl FftMagnitudes {
    pub fn bins(&self) -> &[f64] {
        &self.0
    }

    /// Lowest index holding the maximum.
    pub fn argmax(&self) -> usize {
        argmax(&self.0)
    }

    /// Peak magnitude over the mean of all bins.
    pub fn peak_to_mean(&self) -> f64 {
        let mean = self.0.iter().sum::<f64>() / self.0.len() as f64;
        if mean == 0.0 {
            return 0.0;
        }
        self.0[self.argmax()] / mean
    }
}

/// Index of the first maximum; NaN entries never win.
pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Modulates one symbol into `N` unit-modulus chips.
pub fn gen_upchirp(params: &LoraParams, s: SymbolValue) -> ChipBuffer {
    chirp(params, s.value())
}

/// Checked variant of [`gen_upchirp`] taking a raw symbol value.
pub fn upchirp_for(params: &LoraParams, value: usize) -> Result<ChipBuffer> {
    Ok(gen_upchirp(params, params.symbol(value)?))
}

fn chirp(params: &LoraParams, s: usize) -> ChipBuffer {
    let n_chips = params.n_chips();
    let len = n_chips as u64;
    let offset = (params.f0() + s) as u64;
    (0..len)
        .map(|n| {
            // Phase in units of 2 pi / 2N, reduced exactly in integers before
            // the float conversion: (f0 + s) n / N + n^2 / 2N.
            let twice = (2 * offset * n + n * n) % (2 * len);
            Complex64::from_polar(1.0, PI * twice as f64 / len as f64)
        })
        .collect::<Vec<_>>()
        .into()
}

/// The conjugate of the base (`s = 0`) upchirp.
pub fn gen_downchirp(params: &LoraParams) -> ChipBuffer {
    chirp(params, 0).iter().map(|x| x.conj()).collect::<Vec<_>>().into()
}

/// Elementwise product of a received symbol and the downchirp.
pub fn dechirp(rx: &[Complex64], down: &[Complex64]) -> Result<ChipBuffer> {
    if rx.len() != down.len() {
        return Err(Error::LengthMismatch {
            expected: down.len(),
            actual: rx.len(),
        });
    }
    Ok(rx.iter().zip(down).map(|(a, b)| a * b).collect::<Vec<_>>().into())
}

/// N-point DFT magnitudes of a dechirped symbol and the strongest bin.
pub fn demod_fft(dechirped: &[Complex64]) -> (usize, FftMagnitudes) {
    let mut spectrum = dechirped.to_vec();
    fft::forward_in_place(&mut spectrum);
    let mags = FftMagnitudes(spectrum.iter().map(|x| x.norm()).collect());
    (mags.argmax(), mags)
}

/// Standard receiver: dechirp then pick the strongest bin.
pub fn demodulate(params: &LoraParams, rx: &[Complex64]) -> Result<SymbolValue> {
    let dechirped = dechirp(rx, &gen_downchirp(params))?;
    let (bin, _) = demod_fft(&dechirped);
    params.symbol(bin)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn direct_dft(x: &[Complex64]) -> Vec<Complex64> {
        let n = x.len();
        (0..n)
            .map(|m| {
                x.iter()
                    .enumerate()
                    .map(|(k, v)| {
                        let angle = -2.0 * PI * ((m * k) % n) as f64 / n as f64;
                        v * Complex64::from_polar(1.0, angle)
                    })
                    .sum()
            })
            .collect()
    }

    #[test]
    fn first_chip_is_one_and_all_unit_modulus() {
        let p = LoraParams::new(7).unwrap();
        let up = gen_upchirp(&p, p.symbol(0).unwrap());
        assert_eq!(up.len(), 128);
        assert_eq!(up[0], Complex64::new(1.0, 0.0));
        for x in up.iter() {
            assert!((x.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn downchirp_is_conjugate_of_base_chirp() {
        let p = LoraParams::new(7).unwrap();
        let up = gen_upchirp(&p, p.symbol(0).unwrap());
        let down = gen_downchirp(&p);
        for (u, d) in up.iter().zip(down.iter()) {
            assert_eq!(*d, u.conj());
            assert!((u * d - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn instantaneous_frequency_rises() {
        let p = LoraParams::new(8).unwrap();
        let up = gen_upchirp(&p, p.symbol(0).unwrap());
        // Phase increments grow by 2 pi / N per chip (mod 2 pi).
        let n = p.n_chips() as f64;
        for k in 1..up.len() - 1 {
            let d1 = (up[k] * up[k - 1].conj()).arg();
            let d2 = (up[k + 1] * up[k].conj()).arg();
            let mut step = d2 - d1;
            if step < -PI {
                step += 2.0 * PI;
            }
            assert!((step - 2.0 * PI / n).abs() < 1e-9);
        }
    }

    #[test]
    fn dechirp_of_base_chirp_is_constant() {
        let p = LoraParams::new(7).unwrap();
        let up = gen_upchirp(&p, p.symbol(0).unwrap());
        let out = dechirp(&up, &gen_downchirp(&p)).unwrap();
        for x in out.iter() {
            assert!((x - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn dechirp_zeros_and_mismatch() {
        let p = LoraParams::new(7).unwrap();
        let down = gen_downchirp(&p);
        let out = dechirp(&ChipBuffer::zeros(128), &down).unwrap();
        assert!(out.iter().all(|x| x.norm() == 0.0));
        assert!(matches!(
            dechirp(&ChipBuffer::zeros(64), &down),
            Err(Error::LengthMismatch {
                expected: 128,
                actual: 64
            })
        ));
    }

    #[test]
    fn dc_tone_demodulates_to_zero() {
        let ones = vec![Complex64::new(1.0, 0.0); 128];
        let (bin, mags) = demod_fft(&ones);
        assert_eq!(bin, 0);
        assert!((mags.bins()[0] - 128.0).abs() < 1e-9);
        assert!(mags.bins()[1..].iter().all(|&m| m <= 1e-9));
    }

    #[test]
    fn every_sf7_symbol_peaks_at_its_bin_under_direct_dft() {
        let p = LoraParams::new(7).unwrap();
        let down = gen_downchirp(&p);
        for s in 0..128 {
            let rx = upchirp_for(&p, s).unwrap();
            let spectrum = direct_dft(&dechirp(&rx, &down).unwrap());
            let mags: Vec<f64> = spectrum.iter().map(|x| x.norm()).collect();
            assert_eq!(argmax(&mags), s);
            let (bin, fast) = demod_fft(&dechirp(&rx, &down).unwrap());
            assert_eq!(bin, s);
            for (a, b) in fast.bins().iter().zip(&mags) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn sf10_symbol_513() {
        let p = LoraParams::new(10).unwrap();
        let rx = upchirp_for(&p, 513).unwrap();
        assert_eq!(demodulate(&p, &rx).unwrap().value(), 513);
        let rx = upchirp_for(&p, 5).unwrap();
        assert_eq!(demodulate(&p, &rx).unwrap().value(), 5);
    }

    #[test]
    fn f0_offset_cancels_in_dechirp() {
        let p = LoraParams::new(8).unwrap().with_f0(37).unwrap();
        for s in [0, 1, 100, 255] {
            let rx = upchirp_for(&p, s).unwrap();
            assert_eq!(demodulate(&p, &rx).unwrap().value(), s);
        }
    }

    #[test]
    fn bins_are_orthogonal() {
        let p = LoraParams::new(9).unwrap();
        let n = p.n_chips() as f64;
        let down = gen_downchirp(&p);
        for s in [0, 3, 200, 511] {
            let (_, mags) = demod_fft(&dechirp(&upchirp_for(&p, s).unwrap(), &down).unwrap());
            for (m, &v) in mags.bins().iter().enumerate() {
                if m != s {
                    assert!(v <= 1e-9 * n, "bin {m} leaks {v}");
                }
            }
        }
    }

    #[test]
    fn invalid_symbol_rejected() {
        let p = LoraParams::new(7).unwrap();
        assert!(matches!(upchirp_for(&p, 128), Err(Error::InvalidSymbol { .. })));
    }
}
