use rand::Rng;
use rand_distr::{Distribution, Exp, Pareto};

use crate::error::{Error, Result};
use crate::params::LoraParams;

/// Interference bandwidth class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BurstKind {
    /// Covers the whole LoRa band.
    WifiLike,
    /// A random contiguous quarter of the band, long packets.
    ZigbeeLike,
    /// A random contiguous twentieth of the band, short packets.
    BluetoothLike,
}

impl BurstKind {
    pub const ALL: [BurstKind; 3] = [BurstKind::WifiLike, BurstKind::ZigbeeLike, BurstKind::BluetoothLike];

    /// Fraction of the LoRa band the burst occupies.
    pub fn band_fraction(self) -> f64 {
        match self {
            BurstKind::WifiLike => 1.0,
            BurstKind::ZigbeeLike => 0.25,
            BurstKind::BluetoothLike => 0.05,
        }
    }
}

/// One interference packet placed on the chip timeline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BurstEvent {
    pub start_chip: usize,
    pub duration_chips: usize,
    pub inr_db: f64,
    pub kind: BurstKind,
}

impl BurstEvent {
    pub fn end_chip(&self) -> usize {
        self.start_chip + self.duration_chips
    }
}

/// Burst air-time distribution, in seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DurationDist {
    Fixed(f64),
    Uniform {
        min_s: f64,
        max_s: f64,
    },
    /// With probability `short_mass`, uniform on `[short_min_s, knee_s)`;
    /// otherwise a Pareto tail from `knee_s` with shape `tail_shape`,
    /// truncated at `cap_s`.
    ShortWithTail {
        short_mass: f64,
        short_min_s: f64,
        knee_s: f64,
        tail_shape: f64,
        cap_s: f64,
    },
}

impl DurationDist {
    /// Wi-Fi air times: 95.7% of packets shorter than 0.2 ms.
    pub const WIFI: DurationDist = DurationDist::ShortWithTail {
        short_mass: 0.957,
        short_min_s: 20e-6,
        knee_s: 200e-6,
        tail_shape: 1.5,
        cap_s: 4e-3,
    };
    pub const ZIGBEE: DurationDist = DurationDist::Uniform {
        min_s: 0.5e-3,
        max_s: 4.2e-3,
    };
    pub const BLUETOOTH: DurationDist = DurationDist::Uniform {
        min_s: 80e-6,
        max_s: 380e-6,
    };

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            DurationDist::Fixed(d) => d > 0.0,
            DurationDist::Uniform { min_s, max_s } => min_s > 0.0 && max_s > min_s,
            DurationDist::ShortWithTail {
                short_mass,
                short_min_s,
                knee_s,
                tail_shape,
                cap_s,
            } => {
                (0.0..=1.0).contains(&short_mass)
                    && short_min_s > 0.0
                    && knee_s > short_min_s
                    && tail_shape > 0.0
                    && cap_s > knee_s
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::ConfigInvalid(format!("duration distribution {self:?}")))
        }
    }

    pub fn sample_seconds<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            DurationDist::Fixed(d) => d,
            DurationDist::Uniform { min_s, max_s } => rng.random_range(min_s..max_s),
            DurationDist::ShortWithTail {
                short_mass,
                short_min_s,
                knee_s,
                tail_shape,
                cap_s,
            } => {
                if rng.random_bool(short_mass) {
                    rng.random_range(short_min_s..knee_s)
                } else {
                    let tail = Pareto::new(knee_s, tail_shape).expect("validated");
                    tail.sample(rng).min(cap_s)
                }
            }
        }
    }
}

/// Burst arrival process for one interferer population.
#[derive(Debug, Clone, PartialEq)]
pub struct TrafficModel {
    pub rate_pkts_per_s: f64,
    /// Durations for Wi-Fi-like bursts; the narrowband kinds use their own
    /// fixed profiles.
    pub duration_dist: DurationDist,
    /// Weights over [`BurstKind::ALL`].
    pub kind_mix: [f64; 3],
    pub inr_db: f64,
}

/// Default burst power above the noise floor.
pub const DEFAULT_INR_DB: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrafficPreset {
    None,
    Low,
    Mid,
    High,
}

impl TrafficPreset {
    pub fn rate(self) -> f64 {
        match self {
            TrafficPreset::None => 0.0,
            TrafficPreset::Low => 350.0,
            TrafficPreset::Mid => 1500.0,
            TrafficPreset::High => 2600.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            TrafficPreset::None => "none",
            TrafficPreset::Low => "low",
            TrafficPreset::Mid => "mid",
            TrafficPreset::High => "high",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "none" => Some(TrafficPreset::None),
            "low" => Some(TrafficPreset::Low),
            "mid" => Some(TrafficPreset::Mid),
            "high" => Some(TrafficPreset::High),
            _ => None,
        }
    }
}

impl TrafficModel {
    pub fn wifi(rate_pkts_per_s: f64) -> Self {
        Self {
            rate_pkts_per_s,
            duration_dist: DurationDist::WIFI,
            kind_mix: [1.0, 0.0, 0.0],
            inr_db: DEFAULT_INR_DB,
        }
    }

    pub fn preset(preset: TrafficPreset) -> Self {
        Self::wifi(preset.rate())
    }

    pub fn single_kind(kind: BurstKind, rate_pkts_per_s: f64) -> Self {
        let mut mix = [0.0; 3];
        mix[BurstKind::ALL.iter().position(|&k| k == kind).unwrap()] = 1.0;
        Self {
            kind_mix: mix,
            ..Self::wifi(rate_pkts_per_s)
        }
    }

    pub fn with_inr(mut self, inr_db: f64) -> Self {
        self.inr_db = inr_db;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rate_pkts_per_s.is_finite() && self.rate_pkts_per_s >= 0.0) {
            return Err(Error::ConfigInvalid(format!("traffic rate {}", self.rate_pkts_per_s)));
        }
        let total: f64 = self.kind_mix.iter().sum();
        if self.kind_mix.iter().any(|w| *w < 0.0) || (total - 1.0).abs() > 1e-9 {
            return Err(Error::ConfigInvalid(format!(
                "kind weights {:?} must sum to 1",
                self.kind_mix
            )));
        }
        if !self.inr_db.is_finite() {
            return Err(Error::ConfigInvalid(format!("inr {}", self.inr_db)));
        }
        self.duration_dist.validate()
    }

    fn pick_kind<R: Rng + ?Sized>(&self, rng: &mut R) -> BurstKind {
        let mut u = rng.random::<f64>();
        for (kind, w) in BurstKind::ALL.iter().zip(self.kind_mix) {
            if u < w {
                return *kind;
            }
            u -= w;
        }
        BurstKind::ALL[self.kind_mix.iter().rposition(|w| *w > 0.0).unwrap_or(0)]
    }

    fn duration_for(&self, kind: BurstKind) -> DurationDist {
        match kind {
            BurstKind::WifiLike => self.duration_dist,
            BurstKind::ZigbeeLike => DurationDist::ZIGBEE,
            BurstKind::BluetoothLike => DurationDist::BLUETOOTH,
        }
    }
}

/// Poisson burst arrivals over `[0, horizon_chips)`.
pub fn gen_traffic<R: Rng + ?Sized>(
    model: &TrafficModel,
    params: &LoraParams,
    horizon_chips: usize,
    rng: &mut R,
) -> Vec<BurstEvent> {
    let per_chip = model.rate_pkts_per_s * params.chip_duration_s();
    if per_chip <= 0.0 || horizon_chips == 0 {
        return Vec::new();
    }
    let gap = Exp::new(per_chip).expect("positive rate");
    let mut events = Vec::new();
    let mut t = gap.sample(rng);
    while t < horizon_chips as f64 {
        let kind = model.pick_kind(rng);
        let seconds = model.duration_for(kind).sample_seconds(rng);
        let duration_chips = ((seconds * params.bw_hz()).round() as usize).max(1);
        events.push(BurstEvent {
            start_chip: t as usize,
            duration_chips,
            inr_db: model.inr_db,
            kind,
        });
        t += gap.sample(rng);
    }
    events
}

/// Chip-equivalent of a duration in seconds.
pub fn seconds_to_chips(seconds: f64, params: &LoraParams) -> f64 {
    seconds * params.bw_hz()
}
