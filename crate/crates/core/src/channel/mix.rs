use num_complex::Complex64;

use super::traffic::BurstEvent;

/// Adds rendered bursts onto `signal` and returns the mixture together with
/// the ground-truth corruption mask (`true` where any burst sample with
/// nonzero power lands). Bursts running past either end are clipped.
pub fn mix(signal: &[Complex64], bursts: &[(BurstEvent, Vec<Complex64>)]) -> (Vec<Complex64>, Vec<bool>) {
    let mut out = signal.to_vec();
    let mut mask = vec![false; signal.len()];
    for (event, samples) in bursts {
        let start = event.start_chip.min(out.len());
        for (k, x) in samples.iter().enumerate() {
            let Some(slot) = out.get_mut(start + k) else {
                break;
            };
            *slot += x;
            if x.norm_sqr() > 0.0 {
                mask[start + k] = true;
            }
        }
    }
    (out, mask)
}
