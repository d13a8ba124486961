use super::stft::StftConfig;
use crate::params::LoraParams;

/// Smallest STFT window considered.
pub const MIN_WINDOW: usize = 16;
pub const DEFAULT_WINDOW_COUNT: usize = 6;

/// The six-window ladder `N/2, N/4, ..., N/64`.
pub fn default_windows(params: &LoraParams) -> Vec<StftConfig> {
    window_ladder(params, DEFAULT_WINDOW_COUNT)
}

/// `count` windows of length `N / 2^k` for `k = 1..=count`, floored at
/// [`MIN_WINDOW`] chips, largest first, with hop a quarter of the window.
/// Lengths repeated by the floor keep the window but halve the hop each
/// time (down to 1); exact duplicates are dropped.
pub fn window_ladder(params: &LoraParams, count: usize) -> Vec<StftConfig> {
    let n = params.n_chips();
    let mut out: Vec<StftConfig> = Vec::with_capacity(count);
    for k in 1..=count as u32 {
        let len = (n >> k.min(usize::BITS - 1)).max(MIN_WINDOW).min(n);
        let repeats = out.iter().filter(|c| c.window_len == len).count();
        let hop = ((len / 4).max(1) >> repeats).max(1);
        let cfg = StftConfig {
            window_len: len,
            hop,
            fft_len: n,
        };
        if !out.contains(&cfg) {
            out.push(cfg);
        }
    }
    out
}

/// Max-pooling width: the Hann main lobe spans `4 N / window_len` bins of an
/// N-point transform; rounded to the nearest odd integer (ties upward), at
/// least 3.
pub fn pool_len_for(window_len: usize, params: &LoraParams) -> usize {
    let lobe = 4.0 * params.n_chips() as f64 / window_len.max(1) as f64;
    let odd = 2 * (lobe / 2.0).floor() as usize + 1;
    odd.max(3)
}
