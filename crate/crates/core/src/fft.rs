//! Thread-local FFT plan cache.

use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

thread_local! {
    static PLANS: RefCell<(FftPlanner<f64>, HashMap<usize, Arc<dyn Fft<f64>>>)> =
        RefCell::new((FftPlanner::new(), HashMap::new()));
}

/// Forward FFT plan for `len` points, planned once per thread.
pub(crate) fn forward(len: usize) -> Arc<dyn Fft<f64>> {
    PLANS.with(|cell| {
        let (planner, cache) = &mut *cell.borrow_mut();
        cache
            .entry(len)
            .or_insert_with(|| planner.plan_fft_forward(len))
            .clone()
    })
}

/// In-place forward DFT, `X[m] = sum_n x[n] exp(-j 2 pi m n / len)`.
pub(crate) fn forward_in_place(buf: &mut [Complex64]) {
    if buf.is_empty() {
        return;
    }
    forward(buf.len()).process(buf);
}
