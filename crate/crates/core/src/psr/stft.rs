use std::cell::RefCell;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::rc::Rc;

use num_complex::Complex64;

use super::grid::{Grid, SlotLayout};
use crate::error::{Error, Result};
use crate::fft;

/// One STFT analysis setting. Every window is zero-padded to an `fft_len`
/// point transform so bins line up across window sizes and with the
/// demodulator's FFT grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StftConfig {
    pub window_len: usize,
    pub hop: usize,
    pub fft_len: usize,
}

impl StftConfig {
    pub fn new(window_len: usize, hop: usize, fft_len: usize) -> Result<Self> {
        let cfg = Self {
            window_len,
            hop,
            fft_len,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.window_len == 0 || self.window_len > self.fft_len {
            return Err(Error::ConfigInvalid(format!(
                "window length {} outside [1, {}]",
                self.window_len, self.fft_len
            )));
        }
        if self.hop == 0 || self.hop > self.window_len {
            return Err(Error::ConfigInvalid(format!(
                "hop {} outside [1, {}]",
                self.hop, self.window_len
            )));
        }
        Ok(())
    }

    pub fn layout(&self) -> SlotLayout {
        SlotLayout::new(self.fft_len, self.window_len, self.hop)
    }
}

/// Hann taper with `len` nonzero taps, symmetric about the window centre.
pub fn hann(len: usize) -> Vec<f64> {
    (0..len)
        .map(|k| {
            let s = (PI * (k as f64 + 0.5) / len as f64).sin();
            s * s
        })
        .collect()
}

/// Magnitude STFT of a dechirped symbol, `values[slot][bin]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    pub grid: Grid,
    pub layout: SlotLayout,
}

impl Spectrogram {
    pub fn slot_centers(&self) -> Vec<usize> {
        (0..self.layout.n_slots).map(|s| self.layout.slot_center(s)).collect()
    }
}

thread_local! {
    static COEFFICIENTS: RefCell<HashMap<(usize, usize), Rc<[Complex64]>>> = RefCell::new(HashMap::new());
}

/// `hann(l)[i] * exp(-j 2 pi r i / n)` at index `r l + i`, cached per thread.
fn padded_coefficients(l: usize, n: usize) -> Rc<[Complex64]> {
    COEFFICIENTS.with(|cell| {
        cell.borrow_mut()
            .entry((l, n))
            .or_insert_with(|| {
                let window = hann(l);
                (0..n / l)
                    .flat_map(|r| {
                        window.iter().enumerate().map(move |(i, &w)| {
                            let phase = -2.0 * PI * ((r * i) % n) as f64 / n as f64;
                            Complex64::from_polar(w, phase)
                        })
                    })
                    .collect()
            })
            .clone()
    })
}

pub fn stft_hann(dechirped: &[Complex64], cfg: &StftConfig) -> Result<Spectrogram> {
    let mut values = Vec::with_capacity(cfg.layout().n_slots * cfg.fft_len);
    let layout = for_each_row(dechirped, cfg, |row| values.extend_from_slice(row))?;
    Ok(Spectrogram {
        grid: Grid {
            values,
            n_bins: cfg.fft_len,
        },
        layout,
    })
}

/// Computes the magnitude STFT one slot at a time, handing each row to
/// `visit` in slot order.
pub(crate) fn for_each_row(
    dechirped: &[Complex64],
    cfg: &StftConfig,
    mut visit: impl FnMut(&[f64]),
) -> Result<SlotLayout> {
    cfg.validate()?;
    if dechirped.len() != cfg.fft_len {
        return Err(Error::LengthMismatch {
            expected: cfg.fft_len,
            actual: dechirped.len(),
        });
    }
    let layout = cfg.layout();
    let n = cfg.fft_len;
    let l = cfg.window_len;
    let mut row = vec![0.0; n];
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    // The window sits at offset 0 of the transform; relative to the absolute
    // chip index this is a per-bin phase rotation only.
    if n.is_multiple_of(l) && l < n {
        // Zero padding by `p = n / l`: bin `p k + r` is bin `k` of an l-point
        // transform of the window modulated by `exp(-j 2 pi r i / n)`.
        let p = n / l;
        let coef = padded_coefficients(l, n);
        let plan = fft::forward(l);
        let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
        for slot in 0..layout.n_slots {
            let chips = &dechirped[layout.slot_chips(slot)];
            for (b, c) in buf.chunks_exact_mut(l).zip(coef.chunks_exact(l)) {
                for ((b, x), c) in b.iter_mut().zip(chips).zip(c) {
                    *b = x * c;
                }
            }
            plan.process_with_scratch(&mut buf, &mut scratch);
            for (r, sub) in buf.chunks_exact(l).enumerate() {
                for (k, x) in sub.iter().enumerate() {
                    row[p * k + r] = x.norm_sqr();
                }
            }
            row.iter_mut().for_each(|v| *v = v.sqrt());
            visit(&row);
        }
    } else {
        let window = hann(l);
        let plan = fft::forward(n);
        let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
        for slot in 0..layout.n_slots {
            let chips = layout.slot_chips(slot);
            for (b, (x, w)) in buf.iter_mut().zip(dechirped[chips].iter().zip(&window)) {
                *b = x * w;
            }
            buf[l..].fill(Complex64::new(0.0, 0.0));
            plan.process_with_scratch(&mut buf, &mut scratch);
            for (v, x) in row.iter_mut().zip(&buf) {
                *v = x.norm_sqr().sqrt();
            }
            visit(&row);
        }
    }
    Ok(layout)
}
