/// Placement of STFT slots over one symbol: slot `t` covers chips
/// `[t * hop, t * hop + window_len)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SlotLayout {
    pub window_len: usize,
    pub hop: usize,
    pub n_slots: usize,
}

impl SlotLayout {
    pub fn new(n_chips: usize, window_len: usize, hop: usize) -> Self {
        Self {
            window_len,
            hop,
            n_slots: (n_chips - window_len) / hop + 1,
        }
    }

    pub fn slot_start(&self, slot: usize) -> usize {
        slot * self.hop
    }

    /// Chip index at the middle of the slot.
    pub fn slot_center(&self, slot: usize) -> usize {
        slot * self.hop + self.window_len / 2
    }

    pub fn slot_chips(&self, slot: usize) -> std::ops::Range<usize> {
        let start = self.slot_start(slot);
        start..start + self.window_len
    }
}

/// Sum with four interleaved accumulators, element `m` in lane `m % 4`.
/// Every row total in the pipeline goes through here so that totals
/// computed along different paths agree bit for bit.
pub(crate) fn lane_sum(xs: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let mut chunks = xs.chunks_exact(4);
    for c in &mut chunks {
        for (a, x) in acc.iter_mut().zip(c) {
            *a += x;
        }
    }
    for (a, x) in acc.iter_mut().zip(chunks.remainder()) {
        *a += x;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3])
}

/// Dense row-major `[slot][bin]` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub(crate) values: Vec<f64>,
    pub(crate) n_bins: usize,
}

impl Grid {
    pub(crate) fn zeros(n_rows: usize, n_bins: usize) -> Self {
        Self {
            values: vec![0.0; n_rows * n_bins],
            n_bins,
        }
    }

    /// Wraps row-major `values`; the length must be a multiple of `n_bins`.
    pub fn from_values(n_bins: usize, values: Vec<f64>) -> crate::error::Result<Self> {
        if n_bins == 0 || !values.len().is_multiple_of(n_bins) {
            return Err(crate::error::Error::ConfigInvalid(format!(
                "{} values do not form rows of {n_bins} bins",
                values.len()
            )));
        }
        Ok(Self { values, n_bins })
    }

    pub fn n_rows(&self) -> usize {
        if self.n_bins == 0 {
            0
        } else {
            self.values.len() / self.n_bins
        }
    }

    pub fn n_bins(&self) -> usize {
        self.n_bins
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.values[r * self.n_bins..(r + 1) * self.n_bins]
    }

    pub(crate) fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.values[r * self.n_bins..(r + 1) * self.n_bins]
    }

    pub fn get(&self, r: usize, bin: usize) -> f64 {
        self.values[r * self.n_bins + bin]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.n_bins.max(1))
    }

    /// Column sums over all rows.
    pub fn column_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.n_bins];
        for row in self.rows() {
            for (s, v) in sums.iter_mut().zip(row) {
                *s += v;
            }
        }
        sums
    }
}
