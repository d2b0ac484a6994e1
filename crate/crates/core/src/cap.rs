//! k-cap selection (k-winners-take-all).
//!
//! Winners are the neurons with the `k` largest strictly positive inputs.
//! Ties go to the lowest neuron index; silent neurons never win, so a cap
//! can hold fewer than `k` neurons.

use std::cmp::Ordering;

/// Total order used for selection: larger input first, then lower index.
#[inline]
fn rank(a: &(u32, f64), b: &(u32, f64)) -> Ordering {
    b.1.total_cmp(&a.1).then(a.0.cmp(&b.0))
}

/// Selects winners from a dense input vector. Returned indices are sorted.
pub fn k_cap(inputs: &[f64], k: usize) -> Vec<u32> {
    let mut entries: Vec<(u32, f64)> = inputs
        .iter()
        .enumerate()
        .filter(|(_, &v)| v > 0.0)
        .map(|(i, &v)| (i as u32, v))
        .collect();
    cap_entries(&mut entries, k)
        .into_iter()
        .map(|(i, _)| i)
        .collect()
}

/// Selects winners from sparse `(neuron, input)` entries, returning the
/// winning entries sorted by neuron index. Entries must have distinct
/// neurons; non-positive inputs are dropped.
pub fn cap_entries(entries: &mut Vec<(u32, f64)>, k: usize) -> Vec<(u32, f64)> {
    entries.retain(|e| e.1 > 0.0);
    if k == 0 {
        return Vec::new();
    }
    if entries.len() > k {
        entries.select_nth_unstable_by(k - 1, rank);
        entries.truncate(k);
    }
    let mut winners = std::mem::take(entries);
    winners.sort_unstable_by_key(|e| e.0);
    winners
}
