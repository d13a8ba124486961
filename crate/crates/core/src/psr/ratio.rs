use super::grid::{lane_sum, Grid, SlotLayout};
use super::pool::PooledGrid;

/// Each pooled bin as a share of its slot's total.
#[derive(Debug, Clone, PartialEq)]
pub struct RatioGrid {
    pub grid: Grid,
    pub layout: SlotLayout,
    /// Rows that summed to zero and were replaced by the uniform row.
    pub degenerate_rows: usize,
}

/// Ratio grid divided by the window length, comparable across window sizes.
#[derive(Debug, Clone, PartialEq)]
pub struct NormGrid {
    pub ratio: RatioGrid,
    pub norm: Grid,
    pub window_len: usize,
}

impl NormGrid {
    pub fn layout(&self) -> SlotLayout {
        self.ratio.layout
    }
}

/// `ratio[t][m] = pooled[t][m] / sum_m pooled[t][m]`. A row summing to zero
/// becomes `1 / n_bins` everywhere.
pub fn component_ratio(pooled: &PooledGrid) -> RatioGrid {
    let mut grid = pooled.grid.clone();
    let n_bins = grid.n_bins();
    let mut degenerate_rows = 0;
    for r in 0..grid.n_rows() {
        let row = grid.row_mut(r);
        let total = lane_sum(row);
        if total > 0.0 && total.is_finite() {
            row.iter_mut().for_each(|v| *v /= total);
        } else {
            degenerate_rows += 1;
            row.fill(1.0 / n_bins as f64);
        }
    }
    RatioGrid {
        grid,
        layout: pooled.layout,
        degenerate_rows,
    }
}

pub fn normalize(ratio: RatioGrid, window_len: usize) -> NormGrid {
    let mut norm = ratio.grid.clone();
    let scale = 1.0 / window_len.max(1) as f64;
    norm.values.iter_mut().for_each(|v| *v *= scale);
    NormGrid {
        ratio,
        norm,
        window_len,
    }
}
