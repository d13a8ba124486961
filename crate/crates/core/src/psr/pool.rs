use super::grid::{Grid, SlotLayout};
use super::stft::Spectrogram;
use crate::error::{Error, Result};

/// Frequency-axis max pooling of a spectrogram.
#[derive(Debug, Clone, PartialEq)]
pub struct PooledGrid {
    pub grid: Grid,
    pub layout: SlotLayout,
    pub pool_len: usize,
}

/// Replaces every bin with the maximum over the `pool_len` bins centred on
/// it, clamped at the band edges. Rows are pooled independently.
pub fn max_pool_freq(spec: &Spectrogram, pool_len: usize) -> Result<PooledGrid> {
    if pool_len == 0 || pool_len.is_multiple_of(2) {
        return Err(Error::ConfigInvalid(format!(
            "pool length {pool_len} must be odd and positive"
        )));
    }
    let mut grid = Grid::zeros(spec.grid.n_rows(), spec.grid.n_bins());
    let half = pool_len / 2;
    let mut scratch = Vec::new();
    for r in 0..spec.grid.n_rows() {
        sliding_max(spec.grid.row(r), half, grid.row_mut(r), &mut scratch);
    }
    Ok(PooledGrid {
        grid,
        layout: spec.layout,
        pool_len,
    })
}

/// `out[m] = max(input[m - half ..= m + half])` with the range clamped.
///
/// Block prefix and suffix maxima over the input padded with `-inf`
/// (van Herk / Gil-Werman), so the cost is linear in the row length and
/// independent of `half`.
pub(crate) fn sliding_max(input: &[f64], half: usize, out: &mut [f64], scratch: &mut Vec<f64>) {
    let n = input.len();
    if n == 0 {
        return;
    }
    if half == 0 {
        out.copy_from_slice(input);
        return;
    }
    let w = 2 * half + 1;
    let len = n + 2 * half;
    scratch.resize(3 * len, 0.0);
    let (padded, rest) = scratch.split_at_mut(len);
    let (prefix, suffix) = rest.split_at_mut(len);
    padded[..half].fill(f64::NEG_INFINITY);
    padded[half..half + n].copy_from_slice(input);
    padded[half + n..].fill(f64::NEG_INFINITY);
    for ((raw, pre), suf) in padded.chunks(w).zip(prefix.chunks_mut(w)).zip(suffix.chunks_mut(w)) {
        // Two independent running maxima, forward and backward.
        let (mut a, mut b) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        for ((p, s), (&x, &y)) in pre
            .iter_mut()
            .zip(suf.iter_mut().rev())
            .zip(raw.iter().zip(raw.iter().rev()))
        {
            a = larger(x, a);
            *p = a;
            b = larger(y, b);
            *s = b;
        }
    }
    for ((slot, &s), &p) in out.iter_mut().zip(suffix.iter()).zip(&prefix[w - 1..]) {
        *slot = larger(s, p);
    }
}

/// `f64::max` without the NaN handling, which keeps the loops vectorizable.
#[inline]
fn larger(a: f64, b: f64) -> f64 {
    if b > a {
        b
    } else {
        a
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spectrogram(rows: Vec<Vec<f64>>) -> Spectrogram {
        let n_bins = rows[0].len();
        let n_rows = rows.len();
        Spectrogram {
            grid: Grid {
                values: rows.concat(),
                n_bins,
            },
            layout: SlotLayout {
                window_len: n_bins,
                hop: 1,
                n_slots: n_rows,
            },
        }
    }

    #[test]
    fn identity_pool() {
        let s = spectrogram(vec![vec![3.0, 1.0, 2.0], vec![0.0, 5.0, 4.0]]);
        assert_eq!(max_pool_freq(&s, 1).unwrap().grid, s.grid);
    }

    #[test]
    fn impulse_dilates() {
        let mut row = vec![0.0; 32];
        row[10] = 1.0;
        let p = max_pool_freq(&spectrogram(vec![row]), 5).unwrap();
        for (m, &v) in p.grid.row(0).iter().enumerate() {
            assert_eq!(v > 0.0, (8..=12).contains(&m), "bin {m}");
        }
    }

    #[test]
    fn edges_clamp() {
        let p = max_pool_freq(&spectrogram(vec![vec![9.0, 0.0, 0.0, 0.0, 7.0]]), 3).unwrap();
        assert_eq!(p.grid.row(0), &[9.0, 9.0, 0.0, 7.0, 7.0]);
        let p = max_pool_freq(&spectrogram(vec![vec![1.0, 2.0]]), 9).unwrap();
        assert_eq!(p.grid.row(0), &[2.0, 2.0]);
    }

    #[test]
    fn matches_brute_force() {
        let row: Vec<f64> = (0..37).map(|k| ((k * 7919) % 23) as f64).collect();
        for half in 0..20 {
            let mut out = vec![0.0; row.len()];
            sliding_max(&row, half, &mut out, &mut Vec::new());
            for m in 0..row.len() {
                let lo = m.saturating_sub(half);
                let hi = (m + half).min(row.len() - 1);
                let want = row[lo..=hi].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                assert_eq!(out[m], want, "half {half} bin {m}");
            }
        }
    }

    #[test]
    fn even_or_zero_pool_rejected() {
        let s = spectrogram(vec![vec![1.0; 4]]);
        assert!(max_pool_freq(&s, 0).is_err());
        assert!(max_pool_freq(&s, 4).is_err());
    }
}
