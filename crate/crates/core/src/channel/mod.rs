//! AWGN and cross-technology interference applied to LoRa sample streams.

mod awgn;
mod burst;
mod mix;
mod traffic;

pub use awgn::{add_awgn, complex_gaussian, db_to_linear, noise_variance};
pub use burst::render_burst;
pub use mix::mix;
pub use traffic::{
    gen_traffic, seconds_to_chips, BurstEvent, BurstKind, DurationDist, TrafficModel, TrafficPreset, DEFAULT_INR_DB,
};

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::params::LoraParams;

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelConfig {
    pub snr_db: f64,
    pub traffic: TrafficModel,
    pub seed: u64,
}

/// Result of passing a stream through the channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelOutput {
    pub samples: Vec<Complex64>,
    /// Ground truth: chips overlapped by at least one burst.
    pub corrupted: Vec<bool>,
    pub events: Vec<BurstEvent>,
    pub noise_variance: f64,
}

/// A seeded channel instance. Each call to [`Channel::apply`] advances the
/// generator, so successive packets see independent realizations while the
/// whole sequence stays reproducible from the seed.
#[derive(Debug, Clone)]
pub struct Channel {
    config: ChannelConfig,
    params: LoraParams,
    rng: ChaCha8Rng,
}

impl Channel {
    pub fn new(config: ChannelConfig, params: LoraParams) -> Result<Self> {
        config.traffic.validate()?;
        let rng = ChaCha8Rng::seed_from_u64(config.seed);
        Ok(Self { config, params, rng })
    }

    pub fn config(&self) -> &ChannelConfig {
        &self.config
    }

    pub fn apply(&mut self, signal: &[Complex64]) -> ChannelOutput {
        let (noisy, noise_variance) = add_awgn(signal, self.config.snr_db, &mut self.rng);
        // Interference arriving before the stream starts may still overlap it.
        let lead = self.max_burst_chips();
        let events: Vec<BurstEvent> =
            gen_traffic(&self.config.traffic, &self.params, signal.len() + lead, &mut self.rng)
                .into_iter()
                .filter_map(|mut e| {
                    if e.end_chip() <= lead {
                        return None;
                    }
                    if e.start_chip < lead {
                        e.duration_chips = e.end_chip() - lead;
                        e.start_chip = 0;
                    } else {
                        e.start_chip -= lead;
                    }
                    Some(e)
                })
                .collect();
        let rendered: Vec<_> = events
            .iter()
            .map(|e| (*e, render_burst(e, noise_variance, &mut self.rng)))
            .collect();
        let (samples, corrupted) = mix(&noisy, &rendered);
        ChannelOutput {
            samples,
            corrupted,
            events,
            noise_variance,
        }
    }

    fn max_burst_chips(&self) -> usize {
        let longest = match self.config.traffic.duration_dist {
            DurationDist::Fixed(d) => d,
            DurationDist::Uniform { max_s, .. } => max_s,
            DurationDist::ShortWithTail { cap_s, .. } => cap_s,
        }
        .max(4.2e-3);
        seconds_to_chips(longest, &self.params).ceil() as usize
    }
}
