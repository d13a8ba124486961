use num_complex::Complex64;

use super::grid::{lane_sum, SlotLayout};
use super::ratio::NormGrid;
use super::stft::Spectrogram;
use crate::params::LoraParams;

/// Relative drop from the peak still treated as part of the bright line's
/// plateau when centring the estimate.
const PLATEAU_TOL: f64 = 1e-9;

/// Coarse symbol estimate: the bin with the largest per-slot power share,
/// summed over every slot of every window.
///
/// Shares are taken from the unpooled spectrograms; pooling would widen the
/// line of a short window over hundreds of bins. When several bins tie at
/// the top, the middle of the tied run is returned.
pub fn locate_bright_line(spectrograms: &[Spectrogram]) -> usize {
    let n_bins = spectrograms.first().map_or(0, |s| s.grid.n_bins());
    if n_bins == 0 {
        return 0;
    }
    let mut sums = vec![0.0; n_bins];
    for spec in spectrograms {
        for row in spec.grid.rows() {
            accumulate_line(&mut sums, row);
        }
    }
    pick_line(&sums)
}

/// Adds one magnitude row's per-bin shares to the bright-line sums.
pub(crate) fn accumulate_line(sums: &mut [f64], row: &[f64]) {
    let total = lane_sum(row);
    if total > 0.0 && total.is_finite() {
        let inv = 1.0 / total;
        for (s, v) in sums.iter_mut().zip(row) {
            *s += v * inv;
        }
    }
}

/// The bin with the largest summed share, moved to the middle of a plateau.
pub(crate) fn pick_line(sums: &[f64]) -> usize {
    if sums.is_empty() {
        return 0;
    }
    let n_bins = sums.len();
    let peak = crate::phy::argmax(sums);
    let floor = sums[peak] * (1.0 - PLATEAU_TOL);
    let mut hi = peak;
    while hi + 1 < n_bins && sums[hi + 1] >= floor {
        hi += 1;
    }
    (peak + hi) / 2
}

/// Per-chip clean/interfered verdict.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CleanChipMask {
    pub clean: Vec<bool>,
    /// Bit `k` set when window `k` (in the order given) marked the chip clean;
    /// windows past the sixteenth are not recorded.
    pub source_windows: Vec<u16>,
}

impl CleanChipMask {
    pub fn all(n_chips: usize, clean: bool) -> Self {
        Self {
            clean: vec![clean; n_chips],
            source_windows: vec![0; n_chips],
        }
    }

    pub fn len(&self) -> usize {
        self.clean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clean.is_empty()
    }

    pub fn clean_count(&self) -> usize {
        self.clean.iter().filter(|c| **c).count()
    }
}

/// How far chip selection proceeds once enough chips are found.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Selection {
    /// Stop as soon as the clean count reaches the recovery threshold.
    UntilThreshold,
    /// Keep every slot that passes its threshold.
    Exhaustive,
}

/// Marks chips covered by slots whose normalized value on the bright line
/// clears the window's threshold.
///
/// With `edge_trim > 0` a passing slot only vouches for its chips between
/// `window_len / edge_trim` from either end, where the Hann taper still gives
/// an interferer enough weight to show; slots touching the symbol boundary
/// keep that side untrimmed.
///
/// Windows are visited in the order given (largest first) and slots in
/// descending value. The first window with any passing slot sets a floor:
/// chips its failing slots cover (and its passing slots do not) are only
/// re-admitted by a smaller window's slot scoring at least twice that
/// window's threshold.
pub fn identify_clean_chips(
    norms: &[NormGrid],
    thresholds: &[f64],
    line_bin: usize,
    recovery_threshold: usize,
    selection: Selection,
    edge_trim: usize,
) -> CleanChipMask {
    let n_chips = norms.first().map_or(0, |g| g.norm.n_bins());
    let lines: Vec<LineValues> = norms
        .iter()
        .map(|g| LineValues {
            layout: g.layout(),
            values: (0..g.layout().n_slots).map(|t| g.norm.get(t, line_bin)).collect(),
        })
        .collect();
    select_chips(&lines, n_chips, thresholds, recovery_threshold, selection, edge_trim)
}

/// One window's normalized values on the bright line, one per slot.
pub(crate) struct LineValues {
    pub layout: SlotLayout,
    pub values: Vec<f64>,
}

pub(crate) fn select_chips(
    lines: &[LineValues],
    n_chips: usize,
    thresholds: &[f64],
    recovery_threshold: usize,
    selection: Selection,
    edge_trim: usize,
) -> CleanChipMask {
    let mut mask = CleanChipMask::all(n_chips, false);
    let mut count = 0;
    let mut floor: Option<Vec<bool>> = None;

    for (wi, (line, &theta)) in lines.iter().zip(thresholds).enumerate() {
        let layout = line.layout;
        let mut order: Vec<(usize, f64)> = line.values.iter().copied().enumerate().collect();
        order.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));

        let passing = order.iter().take_while(|(_, v)| *v >= theta).count();
        for &(slot, value) in &order[..passing] {
            let strong = value >= 2.0 * theta;
            let chips = layout.slot_chips(slot);
            let q = if edge_trim == 0 {
                0
            } else {
                layout.window_len / edge_trim
            };
            let lo = if chips.start == 0 { 0 } else { chips.start + q };
            let hi = if chips.end == n_chips { n_chips } else { chips.end - q };
            for chip in lo..hi {
                if !strong && floor.as_ref().is_some_and(|f| f[chip]) {
                    continue;
                }
                if !mask.clean[chip] {
                    mask.clean[chip] = true;
                    count += 1;
                }
                if wi < 16 {
                    mask.source_windows[chip] |= 1 << wi;
                }
            }
            if selection == Selection::UntilThreshold && count >= recovery_threshold {
                return mask;
            }
        }

        if floor.is_none() && passing > 0 {
            let mut accepted = vec![false; n_chips];
            let mut rejected = vec![false; n_chips];
            for (i, &(slot, _)) in order.iter().enumerate() {
                let target = if i < passing { &mut accepted } else { &mut rejected };
                target[layout.slot_chips(slot)].fill(true);
            }
            floor = Some(rejected.iter().zip(&accepted).map(|(r, a)| *r && !*a).collect());
        }
    }
    mask
}

/// Drops chips from `mask` whose power exceeds `factor` times the median
/// power of the chips it keeps. Returns the number of chips removed.
pub fn prune_power_outliers(mask: &mut CleanChipMask, samples: &[Complex64], factor: f64) -> usize {
    let mut powers: Vec<f64> = samples
        .iter()
        .zip(&mask.clean)
        .filter(|(_, c)| **c)
        .map(|(x, _)| x.norm_sqr())
        .collect();
    if powers.is_empty() {
        return 0;
    }
    let mid = powers.len() / 2;
    let median = *powers.select_nth_unstable_by(mid, f64::total_cmp).1;
    let limit = factor * median;
    let mut removed = 0;
    for (keep, x) in mask.clean.iter_mut().zip(samples) {
        if *keep && x.norm_sqr() > limit {
            *keep = false;
            removed += 1;
        }
    }
    removed
}

/// Clean chips needed so that coherent integration lifts `snr_db` to
/// `margin_db`: `min(N, ceil(10^((margin - snr) / 10)))`.
pub fn recovery_threshold(snr_db: f64, margin_db: f64, params: &LoraParams) -> usize {
    let chips = 10f64.powf((margin_db - snr_db) / 10.0).ceil();
    (chips.max(1.0) as usize).min(params.n_chips())
}
