//! Finite-data limit analysis of tail functionals: the scaled values
//! n·h(r_n/n), their liminf/limsup classification, dimension estimates from
//! the log-ratio formula, and an independent box-counting oracle.

use serde::Serialize;

use crate::cantor::CantorApproximation;
use crate::error::{Error, Result};
use crate::gaps::GapSequence;
use crate::gauge::DimensionFunction;
use crate::trend::{classify_slope, index_grid, lsq_fit, lsq_slope, window_start, TrendClass};

/// Minimum grid points for limit classification.
const MIN_LIMIT_POINTS: usize = 24;

/// Minimum probe bound for dimension estimates.
const MIN_DIMENSION_N: u64 = 1_000;

/// Minimum build depth for the box-counting oracle.
const MIN_BOX_DEPTH: u32 = 10;

/// Window size below which the limsup extrapolation falls back to the raw
/// window maximum.
const MIN_EXTRAPOLATION_WINDOW: usize = 9;

/// Qualitative value of a one-sided limit estimated from finite data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LimitClass {
    Zero,
    PositiveFinite,
    Infinite,
}

/// Finite-data estimate of liminf/limsup of a positive sequence sampled on a
/// geometric index grid. `window_*` are extremes over the terminal window
/// (last third); the classes come from the trend of the window's lower and
/// upper envelopes.
#[derive(Debug, Clone, Serialize)]
pub struct LimitEstimate {
    pub grid: Vec<u64>,
    /// Sampled values; entries that underflow f64 are honestly 0.
    pub values: Vec<f64>,
    pub window_inf: f64,
    pub window_sup: f64,
    pub trend_inf: TrendClass,
    pub trend_sup: TrendClass,
    pub liminf_class: LimitClass,
    pub limsup_class: LimitClass,
}

impl LimitEstimate {
    /// Either envelope moved non-monotonically with large swings: the
    /// classification is an Oscillating-trend guess, not a settled class.
    pub fn is_indeterminate(&self) -> bool {
        self.trend_inf == TrendClass::Oscillating || self.trend_sup == TrendClass::Oscillating
    }
}

/// n·h(r_n/n) for n on the shared geometric index grid up to `n_max`,
/// computed in log space. Grid points whose scale r_n/n lies above the
/// gauge's domain bound are omitted; if no point fits the domain, that is a
/// domain error at the last probed scale.
pub fn scaled_values(
    seq: &GapSequence,
    h: &DimensionFunction,
    n_max: u64,
) -> Result<Vec<(u64, f64)>> {
    Ok(scaled_values_log(seq, h, n_max)?
        .into_iter()
        .map(|(n, lv)| (n, lv.exp()))
        .collect())
}

/// Log-space twin of [`scaled_values`]: (n, ln(n·h(r_n/n))). This is the
/// analysis path — values like n·h(e^{-n}) underflow linearly long before
/// their trend is visible.
pub fn scaled_values_log(
    seq: &GapSequence,
    h: &DimensionFunction,
    n_max: u64,
) -> Result<Vec<(u64, f64)>> {
    let cap = n_max.min(seq.max_index());
    let grid = index_grid(1, cap);
    let log_bound = h.domain_bound().ln();
    let mut out = Vec::with_capacity(grid.len());
    let mut last_scale = f64::NAN;
    for &n in &grid {
        let ln_n = (n as f64).ln();
        let lb = seq.log_tail(n)? - ln_n;
        if lb > log_bound {
            last_scale = lb;
            continue;
        }
        out.push((n, ln_n + h.log_evaluate(lb)?));
    }
    if out.is_empty() {
        return Err(Error::DomainViolation {
            scale: last_scale.exp(),
            bound: h.domain_bound(),
        });
    }
    Ok(out)
}

/// Envelope probe over the terminal window: split into three consecutive
/// buckets, take the extreme of each (min for the lower envelope, max for
/// the upper), and fit the slope of extreme-vs-index in log–log coordinates.
/// Returns (slope, oscillating), where oscillating means the bucket extremes
/// swing hard without net drift.
fn envelope_slope(window: &[(f64, f64)], upper: bool) -> (f64, bool) {
    let len = window.len();
    let bounds = [0, len / 3, 2 * len / 3, len];
    let mut peaks = Vec::with_capacity(3);
    for b in 0..3 {
        let chunk = &window[bounds[b]..bounds[b + 1]];
        if chunk.is_empty() {
            continue;
        }
        let pick = chunk
            .iter()
            .copied()
            .reduce(|best, p| {
                if (upper && p.1 > best.1) || (!upper && p.1 < best.1) {
                    p
                } else {
                    best
                }
            })
            .expect("nonempty chunk");
        peaks.push(pick);
    }
    if peaks.iter().any(|p| p.1 == f64::NEG_INFINITY) {
        // an entire bucket underflowed: the envelope has collapsed to zero
        return (f64::NEG_INFINITY, false);
    }
    let slope = lsq_slope(&peaks);
    let oscillating = if peaks.len() == 3 {
        let d1 = peaks[1].1 - peaks[0].1;
        let d2 = peaks[2].1 - peaks[1].1;
        d1 * d2 < 0.0 && d1.abs().min(d2.abs()) > (4.0f64).ln() && slope.abs() <= 0.05
    } else {
        false
    };
    (slope, oscillating)
}

fn class_from_slope(slope: f64) -> (TrendClass, LimitClass) {
    let trend = if slope == f64::NEG_INFINITY {
        TrendClass::ToZero
    } else {
        classify_slope(slope)
    };
    let class = match trend {
        TrendClass::ToZero => LimitClass::Zero,
        TrendClass::ToInfinity => LimitClass::Infinite,
        _ => LimitClass::PositiveFinite,
    };
    (trend, class)
}

/// Classify liminf/limsup of sampled positive values (linear scale; zeros
/// are taken as underflow).
pub fn limit_estimates(points: &[(u64, f64)]) -> Result<LimitEstimate> {
    let log_points: Vec<(u64, f64)> = points.iter().map(|&(n, v)| (n, v.ln())).collect();
    limit_estimates_log(&log_points)
}

/// Classify liminf/limsup from (n, ln value) samples on a geometric grid.
pub fn limit_estimates_log(points: &[(u64, f64)]) -> Result<LimitEstimate> {
    if points.len() < MIN_LIMIT_POINTS {
        return Err(Error::InsufficientData {
            points: points.len(),
            required: MIN_LIMIT_POINTS,
        });
    }
    let window: Vec<(f64, f64)> = points[window_start(points.len())..]
        .iter()
        .map(|&(n, lv)| ((n as f64).ln(), lv))
        .collect();
    let window_inf_log = window.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let window_sup_log = window
        .iter()
        .map(|p| p.1)
        .fold(f64::NEG_INFINITY, f64::max);
    let (slope_inf, osc_inf) = envelope_slope(&window, false);
    let (slope_sup, osc_sup) = envelope_slope(&window, true);
    let (mut trend_inf, mut liminf_class) = class_from_slope(slope_inf);
    let (mut trend_sup, limsup_class) = class_from_slope(slope_sup);
    if osc_inf {
        trend_inf = TrendClass::Oscillating;
    }
    if osc_sup {
        trend_sup = TrendClass::Oscillating;
    }
    // Pointwise min ≤ max forces the class order; a diverging lower envelope
    // drags the upper one along, and a vanishing upper envelope drags the
    // lower. These are arithmetic implications, not coercions.
    if liminf_class == LimitClass::Infinite && limsup_class < LimitClass::Infinite {
        liminf_class = LimitClass::PositiveFinite;
    }
    if limsup_class == LimitClass::Zero && liminf_class > LimitClass::Zero {
        liminf_class = LimitClass::Zero;
    }
    Ok(LimitEstimate {
        grid: points.iter().map(|p| p.0).collect(),
        values: points.iter().map(|p| p.1.exp()).collect(),
        window_inf: window_inf_log.exp(),
        window_sup: window_sup_log.exp(),
        trend_inf,
        trend_sup,
        liminf_class,
        limsup_class,
    })
}

/// Per-run context for a dimension estimate.
#[derive(Debug, Clone, Serialize)]
pub struct DimensionDiagnostics {
    pub grid_points: usize,
    pub window_points: usize,
    /// Scales r_n/n ≥ 1 cannot enter the log ratio; they are skipped.
    pub degenerate_scales_skipped: usize,
    /// Raw extremes of the ratio over the terminal window.
    pub window_min: f64,
    pub window_max: f64,
    /// Bias-corrected upper estimate (present when the window is wide enough).
    pub extrapolated_sup: Option<f64>,
}

/// Dimension estimates from the tail formula: the ratio −log n / log(r_n/n)
/// sampled on a geometric grid. The lower estimate is the raw window
/// minimum; the upper estimate extrapolates the window's upper envelope to
/// n → ∞ (the raw window maximum carries a finite-scale bias of order
/// 1/log n, visible against closed-form fixtures), clamped to [lower, 1].
pub fn dimensions(seq: &GapSequence, n_max: u64) -> Result<(f64, f64, DimensionDiagnostics)> {
    if n_max < MIN_DIMENSION_N {
        return Err(Error::InsufficientData {
            points: n_max as usize,
            required: MIN_DIMENSION_N as usize,
        });
    }
    let cap = n_max.min(seq.max_index());
    let grid = index_grid(2, cap);
    let mut ratios: Vec<(f64, f64)> = Vec::with_capacity(grid.len());
    let mut skipped = 0usize;
    for &n in &grid {
        let ln_n = (n as f64).ln();
        let lb = seq.log_tail(n)? - ln_n;
        if lb >= 0.0 {
            skipped += 1;
            continue;
        }
        ratios.push((ln_n, -ln_n / lb));
    }
    if ratios.len() < 4 {
        return Err(Error::InsufficientData {
            points: ratios.len(),
            required: 4,
        });
    }
    let window = &ratios[window_start(ratios.len())..];
    let window_min = window.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let window_max = window
        .iter()
        .map(|p| p.1)
        .fold(f64::NEG_INFINITY, f64::max);
    let dim_lower = window_min.clamp(0.0, 1.0);
    let (dim_upper, extrapolated) = if window.len() >= MIN_EXTRAPOLATION_WINDOW {
        // bucket peaks against 1/log n; the intercept at 0 is the n → ∞ value
        let len = window.len();
        let bounds = [0, len / 3, 2 * len / 3, len];
        let mut peaks = Vec::with_capacity(3);
        for b in 0..3 {
            let chunk = &window[bounds[b]..bounds[b + 1]];
            let best = chunk
                .iter()
                .copied()
                .reduce(|best, p| if p.1 > best.1 { p } else { best })
                .expect("nonempty bucket");
            peaks.push((1.0 / best.0, best.1));
        }
        let (_, intercept) = lsq_fit(&peaks);
        (intercept.clamp(dim_lower, 1.0), Some(intercept))
    } else {
        (window_max.clamp(dim_lower, 1.0), None)
    };
    let diagnostics = DimensionDiagnostics {
        grid_points: ratios.len(),
        window_points: window.len(),
        degenerate_scales_skipped: skipped,
        window_min,
        window_max,
        extrapolated_sup: extrapolated,
    };
    Ok((dim_lower, dim_upper, diagnostics))
}

/// Box-counting dimension from the built interval tree: least-squares slope
/// of log(count) against log(1/δ), with δ running over the generation length
/// scales r_{2^g}/2^g for g in [depth/3, depth]. Independent of the tail
/// formula — counts come from the actual intervals.
pub fn box_dimension_oracle(approx: &CantorApproximation) -> Result<f64> {
    let depth = approx.depth();
    if depth < MIN_BOX_DEPTH {
        return Err(Error::InsufficientDepth {
            depth,
            min: MIN_BOX_DEPTH,
        });
    }
    let seq = approx.sequence();
    let g_lo = (depth / 3).max(1);
    let mut points = Vec::new();
    for g in g_lo..=depth {
        let tail = seq.tail(1u64 << g)?;
        let delta = tail / (1u64 << g) as f64;
        // skip scales the counting grid cannot resolve (δ underflowed or
        // finer than one part in 2^52 of the diameter)
        if !(delta > 0.0) || approx.diameter() / delta > 4.0e15 {
            continue;
        }
        let count = approx.box_count(delta)?;
        points.push(((1.0 / delta).ln(), (count as f64).ln()));
    }
    if points.len() < 2 {
        return Err(Error::InsufficientData {
            points: points.len(),
            required: 2,
        });
    }
    Ok(lsq_slope(&points))
}

/// CSV table of the tail functionals for plotting: one row per grid index
/// with the tail, the scale r_n/n, the scaled gauge value n·h(r_n/n), and
/// the dimension ratio −log n/log(r_n/n). Linear columns underflow honestly.
pub fn tail_table_csv(seq: &GapSequence, h: &DimensionFunction, n_max: u64) -> Result<String> {
    let cap = n_max.min(seq.max_index());
    let grid = index_grid(1, cap);
    let log_bound = h.domain_bound().ln();
    let mut out = String::from("n,tail,scale,scaled_gauge,dimension_ratio\n");
    for &n in &grid {
        let ln_n = (n as f64).ln();
        let lb = seq.log_tail(n)? - ln_n;
        let tail = seq.tail(n)?;
        let scale = lb.exp();
        let scaled = if lb <= log_bound {
            (ln_n + h.log_evaluate(lb)?).exp()
        } else {
            f64::NAN
        };
        let ratio = if n >= 2 && lb < 0.0 {
            -ln_n / lb
        } else {
            f64::NAN
        };
        out.push_str(&format!(
            "{n},{tail:.12e},{scale:.12e},{scaled:.12e},{ratio:.12e}\n"
        ));
    }
    Ok(out)
}
