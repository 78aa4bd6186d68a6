//! Shared grid construction and trend detection for finite-scale limit probes.

use serde::Serialize;

/// Multiplicative step between consecutive probe indices.
pub const INDEX_GRID_RATIO: f64 = 1.5;

/// Multiplicative step between consecutive gauge evaluation scales.
pub const SCALE_GRID_RATIO: f64 = 2.0;

/// Smallest scale probed when comparing gauges.
pub const SCALE_GRID_FLOOR: f64 = 1e-12;

/// A fitted log–log slope with magnitude below this counts as bounded.
pub const SLOPE_THRESHOLD: f64 = 0.05;

/// Ascending integer grid `lo..=hi` with ratio [`INDEX_GRID_RATIO`] between
/// entries; consecutive integers fill in where the ratio would stall.
/// `hi` itself is always included.
pub fn index_grid(lo: u64, hi: u64) -> Vec<u64> {
    let mut grid = Vec::new();
    if hi < lo {
        return grid;
    }
    let mut n = lo;
    while n < hi {
        grid.push(n);
        let next = (n as f64 * INDEX_GRID_RATIO).round() as u64;
        n = next.max(n + 1);
    }
    grid.push(hi);
    grid
}

/// Descending scale grid from `top`, stepping by [`SCALE_GRID_RATIO`], with
/// `points` entries but never below `floor`.
pub fn scale_grid(top: f64, floor: f64, points: usize) -> Vec<f64> {
    let mut grid = Vec::with_capacity(points);
    let mut x = top;
    for _ in 0..points {
        if x < floor {
            break;
        }
        grid.push(x);
        x /= SCALE_GRID_RATIO;
    }
    grid
}

/// Least-squares slope of `y` against `x`. Returns 0 for fewer than two points.
pub fn lsq_slope(points: &[(f64, f64)]) -> f64 {
    lsq_fit(points).0
}

/// Least-squares `(slope, intercept)` of `y` against `x`.
pub fn lsq_fit(points: &[(f64, f64)]) -> (f64, f64) {
    if points.len() < 2 {
        let y = points.first().map_or(0.0, |p| p.1);
        return (0.0, y);
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for &(x, y) in points {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    if sxx == 0.0 {
        return (0.0, my);
    }
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Qualitative behaviour of a positive quantity as its argument grows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TrendClass {
    Convergent,
    ToZero,
    ToInfinity,
    Oscillating,
}

/// Classify a fitted log–log slope against [`SLOPE_THRESHOLD`].
pub fn classify_slope(slope: f64) -> TrendClass {
    if slope > SLOPE_THRESHOLD {
        TrendClass::ToInfinity
    } else if slope < -SLOPE_THRESHOLD {
        TrendClass::ToZero
    } else {
        TrendClass::Convergent
    }
}

/// Index of the first entry of the terminal window (last third, at least one point).
pub fn window_start(len: usize) -> usize {
    len - (len / 3).max(1).min(len)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_is_strictly_increasing_and_hits_endpoint() {
        let g = index_grid(2, 1_000_000);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(*g.last().unwrap(), 1_000_000);
        assert_eq!(g[0], 2);
        // ratio never exceeds the configured step by much
        for w in g.windows(2) {
            assert!(w[1] as f64 / w[0] as f64 <= INDEX_GRID_RATIO + 0.51);
        }
    }

    #[test]
    fn grid_small_range_is_dense() {
        assert_eq!(index_grid(1, 5), vec![1, 2, 3, 5]);
        assert_eq!(index_grid(7, 7), vec![7]);
        assert!(index_grid(9, 3).is_empty());
    }

    #[test]
    fn slope_recovers_line() {
        let pts: Vec<(f64, f64)> = (1..40).map(|i| (i as f64, 3.25 * i as f64 - 1.0)).collect();
        assert!((lsq_slope(&pts) - 3.25).abs() < 1e-12);
    }

    #[test]
    fn slope_classification_thresholds() {
        assert_eq!(classify_slope(0.2), TrendClass::ToInfinity);
        assert_eq!(classify_slope(-0.2), TrendClass::ToZero);
        assert_eq!(classify_slope(0.01), TrendClass::Convergent);
    }

    #[test]
    fn window_covers_last_third() {
        assert_eq!(window_start(30), 20);
        assert_eq!(window_start(4), 3);
        assert_eq!(window_start(1), 0);
    }
}
