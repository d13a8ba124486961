use num_complex::Complex64;
use rand::Rng;

use super::awgn::{complex_gaussian, db_to_linear};
use super::traffic::{BurstEvent, BurstKind};
use crate::fft;

/// Synthesizes the samples of one burst.
///
/// Wi-Fi-like bursts are white across the whole band. Narrowband kinds are
/// Gaussian noise confined to a random contiguous (circular) slice of the
/// band, built in the frequency domain on a power-of-two grid. Either way the
/// expected per-sample power is `10^(inr_db / 10) * noise_floor`.
pub fn render_burst<R: Rng + ?Sized>(event: &BurstEvent, noise_floor: f64, rng: &mut R) -> Vec<Complex64> {
    let power = db_to_linear(event.inr_db) * noise_floor;
    let len = event.duration_chips;
    match event.kind {
        BurstKind::WifiLike => (0..len).map(|_| complex_gaussian(rng, power)).collect(),
        kind => band_limited(len, kind.band_fraction(), power, rng),
    }
}

fn band_limited<R: Rng + ?Sized>(len: usize, fraction: f64, power: f64, rng: &mut R) -> Vec<Complex64> {
    let grid = len.next_power_of_two().max(64);
    let width = ((grid as f64 * fraction).round() as usize).clamp(1, grid);
    let first = rng.random_range(0..grid);
    let mut spectrum = vec![Complex64::new(0.0, 0.0); grid];
    let per_bin = power / width as f64;
    for k in 0..width {
        spectrum[(first + k) % grid] = complex_gaussian(rng, per_bin);
    }
    // Inverse transform via conj(FFT(conj(X))); no 1/grid scaling, so each
    // time sample has variance width * per_bin = power.
    for x in spectrum.iter_mut() {
        *x = x.conj();
    }
    fft::forward_in_place(&mut spectrum);
    spectrum.truncate(len);
    spectrum.iter().map(|x| x.conj()).collect()
}
