use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::phy::mean_power;

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Per-sample noise variance giving `snr_db` against a signal of power `signal_power`.
pub fn noise_variance(signal_power: f64, snr_db: f64) -> f64 {
    signal_power / db_to_linear(snr_db)
}

/// Draws one circularly-symmetric complex Gaussian sample of variance `variance`.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let sigma = (variance / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re * sigma, im * sigma)
}

/// Adds complex white Gaussian noise at `snr_db` relative to the mean power of
/// `signal`. Returns the noisy copy and the noise variance used.
pub fn add_awgn<R: Rng + ?Sized>(signal: &[Complex64], snr_db: f64, rng: &mut R) -> (Vec<Complex64>, f64) {
    let variance = noise_variance(mean_power(signal), snr_db);
    let out = signal.iter().map(|x| x + complex_gaussian(rng, variance)).collect();
    (out, variance)
}
