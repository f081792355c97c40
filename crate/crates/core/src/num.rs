use alloc::format;
use core::cmp::Ordering;

/// Rounds to 4 fractional digits, half away from zero on the decimal
/// representation. `core` has no `f64::round`, so this goes through the
/// formatter, which rounds correctly.
pub(crate) fn round4(x: f64) -> f64 {
    if !x.is_finite() {
        return x;
    }
    format!("{x:.4}").parse().unwrap_or(x)
}

/// Score descending, then id ascending.
pub(crate) fn rank_order(a_score: f64, a_id: &str, b_score: f64, b_id: &str) -> Ordering {
    b_score.total_cmp(&a_score).then_with(|| a_id.cmp(b_id))
}
