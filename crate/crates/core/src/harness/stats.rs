//! Box-plot summaries.

use serde::{Deserialize, Serialize};

/// Whisker reach in interquartile ranges.
pub const WHISKER_IQR: f64 = 1.5;

/// Five-number summary with Tukey whiskers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxStats {
    /// Finite samples summarized.
    pub count: usize,
    /// Non-finite samples left out.
    pub non_finite: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    /// Most extreme samples within `WHISKER_IQR` interquartile ranges of the box.
    pub whisker_low: f64,
    pub whisker_high: f64,
    /// Samples beyond the whiskers, ascending.
    pub outliers: Vec<f64>,
}

/// Linear-interpolation quantile of ascending `sorted` data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

impl BoxStats {
    /// Summary of the finite values; `None` when there are none.
    pub fn from_samples(values: &[f64]) -> Option<Self> {
        let mut sorted: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
        if sorted.is_empty() {
            return None;
        }
        sorted.sort_by(f64::total_cmp);
        let (q1, median, q3) = (quantile(&sorted, 0.25), quantile(&sorted, 0.5), quantile(&sorted, 0.75));
        let reach = WHISKER_IQR * (q3 - q1);
        let (fence_low, fence_high) = (q1 - reach, q3 + reach);
        let inside = || sorted.iter().copied().filter(|&v| v >= fence_low && v <= fence_high);
        Some(BoxStats {
            count: sorted.len(),
            non_finite: values.len() - sorted.len(),
            min: sorted[0],
            q1,
            median,
            q3,
            max: sorted[sorted.len() - 1],
            // Interpolated quartiles can lie beyond every inlier; whiskers then stop at the box.
            whisker_low: inside().next().map_or(q1, |v| v.min(q1)),
            whisker_high: inside().last().map_or(q3, |v| v.max(q3)),
            outliers: sorted.iter().copied().filter(|&v| v < fence_low || v > fence_high).collect(),
        })
    }
}
