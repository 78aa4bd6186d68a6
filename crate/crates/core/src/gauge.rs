//! Dimension gauges: strictly increasing functions h with h(0+) = 0 used to
//! weigh interval lengths, plus the ordering and doubling probes on them.
//!
//! All evaluation runs in log space (`log_evaluate`/`log_inverse`), so scales
//! like e^{-10^4} that underflow f64 stay usable; the linear `evaluate` and
//! `inverse` are thin wrappers.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::gaps::GapSequence;
use crate::trend::{
    classify_slope, lsq_slope, scale_grid, window_start, TrendClass, SCALE_GRID_FLOOR,
    SLOPE_THRESHOLD,
};

/// Largest tolerated single-step growth h(2x)/h(x) on the construction probe
/// grid; anything above this is rejected as non-doubling.
const DOUBLING_STEP_CAP: f64 = 27.631_021_115_928_55; // ln(1e12)

/// Bisection iterations for the inverse of the power·log form.
const INVERSE_BISECTIONS: u32 = 64;

/// Log-space slack at the domain edge: arguments within a relative 1e-9 of
/// the bound are clamped to it instead of rejected, so float round-trips
/// like ln(2·(h(A)/2)) landing one ulp past ln h(A) stay usable.
const DOMAIN_EDGE_SLACK: f64 = 1e-9;

/// Descending ratio-2 probe grid for gauge comparisons: 96 points spanning
/// 95 octaves below `top` (capped at 1e-12 on top of that for large tops).
/// The span is deliberately much wider than any constructed knot range so
/// that the terminal trend window reads settled behavior, not the transient
/// where one gauge's knots end.
pub(crate) fn gauge_scale_grid(top: f64) -> Vec<f64> {
    let floor = SCALE_GRID_FLOOR.min(top * 2f64.powi(-95));
    scale_grid(top, floor, 96)
}

/// The functional form of a gauge.
#[derive(Debug, Clone)]
enum GaugeForm {
    /// h(x) = x^s.
    Power { s: f64 },
    /// h(x) = c · |log x|^{-p}.
    LogReciprocal { c: f64, p: f64 },
    /// h(x) = x^s · |log x|^t.
    PowerLog { s: f64, t: f64 },
    /// Piecewise log–log linear interpolant through (scale, value) knots,
    /// extended past either end with the terminal segment slopes.
    Interpolant {
        /// (ln x, ln y) knots, strictly increasing in both coordinates.
        log_knots: Arc<Vec<(f64, f64)>>,
        /// Per-segment slopes d(ln y)/d(ln x).
        slopes: Arc<Vec<f64>>,
    },
}

/// A dimension gauge: continuous, strictly increasing on (0, A], h(0+) = 0,
/// doubling at probed scales.
#[derive(Debug, Clone)]
pub struct DimensionFunction {
    form: GaugeForm,
    /// Domain bound A: h is defined on (0, A].
    domain_bound: f64,
    /// ln A.
    log_bound: f64,
    /// ln h(A).
    log_value_at_bound: f64,
    label: String,
}

impl DimensionFunction {
    /// h(x) = x^s with s in (0, 1]. Domain (0, 1].
    pub fn power(s: f64) -> Result<Self> {
        if !(s > 0.0 && s <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "power gauge needs exponent in (0, 1], got {s}"
            )));
        }
        Self::assemble(GaugeForm::Power { s }, 1.0, format!("power({s})"))
    }

    /// h(x) = c·|log x|^{-p} with c > 0, p > 0. Domain (0, 1/2].
    pub fn log_reciprocal(c: f64, p: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) || !(p > 0.0 && p.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "log-reciprocal gauge needs positive finite scale and exponent, got ({c}, {p})"
            )));
        }
        Self::assemble(
            GaugeForm::LogReciprocal { c, p },
            0.5,
            format!("logrec({c},{p})"),
        )
    }

    /// h(x) = x^s·|log x|^t with s in (0, 1]. The default domain bound keeps
    /// the function strictly increasing: for t > 0 that needs |log x| > t/s.
    pub fn power_log(s: f64, t: f64) -> Result<Self> {
        if !(s > 0.0 && s <= 1.0) || !t.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "power-log gauge needs exponent in (0, 1] and finite log power, got ({s}, {t})"
            )));
        }
        let bound = if t > 0.0 {
            (0.5f64).min(0.5 * (-t / s).exp())
        } else {
            0.5
        };
        Self::assemble(
            GaugeForm::PowerLog { s, t },
            bound,
            format!("powerlog({s},{t})"),
        )
    }

    /// The gauge interpolating (r_n/n, 1/n) so that h(r_n/n) = 1/n exactly at
    /// the knots, with n on a ratio-2 grid up to `n_max`. Piecewise linear in
    /// log–log coordinates, extended past the knots by the end slopes.
    pub fn associated(seq: &GapSequence, n_max: u64) -> Result<Self> {
        if n_max < 16 {
            return Err(Error::InsufficientData {
                points: n_max as usize,
                required: 16,
            });
        }
        let cap = n_max.min(seq.max_index());
        let mut grid = Vec::new();
        let mut n = 1u64;
        while n <= cap {
            grid.push(n);
            n = n.saturating_mul(2);
        }
        if *grid.last().expect("grid nonempty") != cap {
            grid.push(cap);
        }
        // Largest n gives the smallest scale: iterate descending for
        // ascending-in-x knots.
        let mut log_knots = Vec::with_capacity(grid.len());
        for &n in grid.iter().rev() {
            let ln_n = (n as f64).ln();
            let lx = seq.log_tail(n)? - ln_n;
            let ly = -ln_n;
            log_knots.push((lx, ly));
        }
        for w in log_knots.windows(2) {
            if !(w[0].0 < w[1].0 && w[0].1 < w[1].1) {
                return Err(Error::InvalidParameter(format!(
                    "interpolation knots for {} are not strictly increasing",
                    seq.label()
                )));
            }
        }
        let slopes: Vec<f64> = log_knots
            .windows(2)
            .map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0))
            .collect();
        let b1 = seq.tail(1)?;
        let bound = b1.min(0.5);
        let label = format!("associated({},{})", seq.label(), n_max);
        Self::assemble(
            GaugeForm::Interpolant {
                log_knots: Arc::new(log_knots),
                slopes: Arc::new(slopes),
            },
            bound,
            label,
        )
    }

    /// Same gauge restricted to the smaller domain (0, a].
    pub fn with_domain_bound(&self, a: f64) -> Result<Self> {
        Self::assemble(self.form.clone(), a, self.label.clone())
    }

    fn assemble(form: GaugeForm, bound: f64, label: String) -> Result<Self> {
        if !(bound > 0.0 && bound.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "domain bound must be positive and finite, got {bound}"
            )));
        }
        match form {
            GaugeForm::LogReciprocal { .. } | GaugeForm::PowerLog { .. } if bound >= 1.0 => {
                return Err(Error::InvalidParameter(format!(
                    "log-based gauges need a domain bound below 1, got {bound}"
                )));
            }
            GaugeForm::Power { .. } if bound > 1.0 => {
                return Err(Error::InvalidParameter(format!(
                    "power gauges are defined on (0, 1]; domain bound {bound} is too large"
                )));
            }
            _ => {}
        }
        let log_bound = bound.ln();
        let mut gauge = DimensionFunction {
            form,
            domain_bound: bound,
            log_bound,
            log_value_at_bound: 0.0,
            label,
        };
        gauge.log_value_at_bound = gauge.log_evaluate_unchecked(log_bound);
        gauge.validate_shape()?;
        Ok(gauge)
    }

    /// Construction gate: strictly increasing, finite, h(0+) = 0 trend, and
    /// per-halving growth below the doubling cap, on a 48+ point ratio-2 grid.
    fn validate_shape(&self) -> Result<()> {
        let grid = gauge_scale_grid(self.domain_bound);
        let mut prev: Option<f64> = None;
        for &x in &grid {
            let lh = self.log_evaluate_unchecked(x.ln());
            if !lh.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "gauge {} is not finite at scale {x:e}",
                    self.label
                )));
            }
            if let Some(p) = prev {
                // grid descends by 2, so p is the value one halving up
                if p <= lh {
                    return Err(Error::InvalidParameter(format!(
                        "gauge {} is not strictly increasing near scale {x:e}",
                        self.label
                    )));
                }
                if p - lh > DOUBLING_STEP_CAP {
                    return Err(Error::InvalidParameter(format!(
                        "gauge {} is not doubling near scale {x:e}",
                        self.label
                    )));
                }
            }
            prev = Some(lh);
        }
        Ok(())
    }

    /// The domain bound A.
    pub fn domain_bound(&self) -> f64 {
        self.domain_bound
    }

    /// h(A), the largest value the gauge takes.
    pub fn value_at_bound(&self) -> f64 {
        self.log_value_at_bound.exp()
    }

    /// Human-readable construction label, e.g. `power(0.5)`.
    pub fn label(&self) -> &str {
        &self.label
    }

    fn log_evaluate_unchecked(&self, lx: f64) -> f64 {
        if lx == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        match &self.form {
            GaugeForm::Power { s } => s * lx,
            GaugeForm::LogReciprocal { c, p } => c.ln() - p * (-lx).ln(),
            GaugeForm::PowerLog { s, t } => s * lx + t * (-lx).ln(),
            GaugeForm::Interpolant { log_knots, slopes } => {
                let ks = log_knots.as_slice();
                match ks.binary_search_by(|k| k.0.partial_cmp(&lx).expect("finite knot")) {
                    Ok(i) => ks[i].1,
                    Err(0) => ks[0].1 + slopes[0] * (lx - ks[0].0),
                    Err(i) if i == ks.len() => {
                        let last = ks.len() - 1;
                        ks[last].1 + slopes[last - 1] * (lx - ks[last].0)
                    }
                    Err(i) => ks[i - 1].1 + slopes[i - 1] * (lx - ks[i - 1].0),
                }
            }
        }
    }

    /// ln h(e^lx). Errors when the scale is outside (0, A].
    pub fn log_evaluate(&self, lx: f64) -> Result<f64> {
        if lx.is_nan() || lx > self.log_bound + DOMAIN_EDGE_SLACK {
            return Err(Error::DomainViolation {
                scale: lx.exp(),
                bound: self.domain_bound,
            });
        }
        Ok(self.log_evaluate_unchecked(lx.min(self.log_bound)))
    }

    /// h(x) for x in (0, A].
    pub fn evaluate(&self, x: f64) -> Result<f64> {
        if !(x > 0.0 && x.is_finite()) {
            return Err(Error::DomainViolation {
                scale: x,
                bound: self.domain_bound,
            });
        }
        Ok(self.log_evaluate(x.ln())?.exp())
    }

    /// ln h^{-1}(e^ly). Errors when the value is outside (0, h(A)].
    pub fn log_inverse(&self, ly: f64) -> Result<f64> {
        if ly.is_nan() || ly > self.log_value_at_bound + DOMAIN_EDGE_SLACK {
            return Err(Error::DomainViolation {
                scale: ly.exp(),
                bound: self.value_at_bound(),
            });
        }
        if ly == f64::NEG_INFINITY {
            return Ok(f64::NEG_INFINITY);
        }
        let ly = ly.min(self.log_value_at_bound);
        let lx = match &self.form {
            GaugeForm::Power { s } => ly / s,
            GaugeForm::LogReciprocal { c, p } => -((c.ln() - ly) / p).exp(),
            GaugeForm::PowerLog { s, t } => {
                // Solve ly = -s·u + t·ln u for u = -ln x; the domain bound
                // keeps u > t/s, where the map is strictly decreasing.
                let g = |u: f64| -s * u + t * u.ln();
                let mut lo = -self.log_bound;
                let mut hi = lo.max(1.0);
                while g(hi) > ly {
                    hi *= 2.0;
                }
                for _ in 0..INVERSE_BISECTIONS {
                    let mid = 0.5 * (lo + hi);
                    if g(mid) > ly {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                -0.5 * (lo + hi)
            }
            GaugeForm::Interpolant { log_knots, slopes } => {
                let ks = log_knots.as_slice();
                match ks.binary_search_by(|k| k.1.partial_cmp(&ly).expect("finite knot")) {
                    Ok(i) => ks[i].0,
                    Err(0) => ks[0].0 + (ly - ks[0].1) / slopes[0],
                    Err(i) if i == ks.len() => {
                        let last = ks.len() - 1;
                        ks[last].0 + (ly - ks[last].1) / slopes[last - 1]
                    }
                    Err(i) => ks[i - 1].0 + (ly - ks[i - 1].1) / slopes[i - 1],
                }
            }
        };
        Ok(lx)
    }

    /// h^{-1}(y) for y in (0, h(A)].
    pub fn inverse(&self, y: f64) -> Result<f64> {
        if !(y > 0.0 && y.is_finite()) {
            return Err(Error::DomainViolation {
                scale: y,
                bound: self.value_at_bound(),
            });
        }
        Ok(self.log_inverse(y.ln())?.exp())
    }

    /// Doubling probe on the gauge or its inverse: τ = inf g(x)/g(2x) over
    /// the scales, with the verdict failing when that ratio decays to zero
    /// (g(2x)/g(x) unbounded). Scales must descend and satisfy 2x ≤ domain.
    pub fn doubling_report(&self, target: DoublingTarget, scales: &[f64]) -> Result<DoublingReport> {
        let mut points = Vec::with_capacity(scales.len());
        let mut min_log_ratio = f64::INFINITY;
        for &x in scales {
            let lx = x.ln();
            let lx2 = lx + std::f64::consts::LN_2;
            let log_ratio = match target {
                DoublingTarget::Function => self.log_evaluate(lx)? - self.log_evaluate(lx2)?,
                DoublingTarget::Inverse => self.log_inverse(lx)? - self.log_inverse(lx2)?,
            };
            min_log_ratio = min_log_ratio.min(log_ratio);
            points.push(((1.0 / x).ln(), log_ratio));
        }
        if points.len() < 2 {
            return Err(Error::InsufficientData {
                points: points.len(),
                required: 2,
            });
        }
        let slope = lsq_slope(&points[window_start(points.len())..]);
        let trend = classify_slope(slope);
        let verdict = if trend == TrendClass::ToZero {
            ProbeVerdict::Fails
        } else {
            ProbeVerdict::HoldsAtProbedScales
        };
        Ok(DoublingReport {
            target,
            tau_estimate: min_log_ratio.exp(),
            trend,
            verdict,
        })
    }

    /// Default probe scales for [`Self::doubling_report`]: a ratio-2 grid of
    /// x with 2x inside the domain of the probed map.
    pub fn doubling_scales(&self, target: DoublingTarget) -> Vec<f64> {
        let top = match target {
            DoublingTarget::Function => self.domain_bound / 2.0,
            DoublingTarget::Inverse => self.value_at_bound() / 2.0,
        };
        gauge_scale_grid(top)
    }
}

/// Which map a doubling probe inspects.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DoublingTarget {
    Function,
    Inverse,
}

/// Outcome of a finite-scale probe: no claim is made past the probed grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeVerdict {
    HoldsAtProbedScales,
    Fails,
}

/// Whether a probed ratio stays bounded along the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OrderTrend {
    Bounded,
    Diverging,
}

/// One direction of a gauge comparison: does f(x) ≤ c·h(x) hold at probed
/// scales, and with what constant?
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DirectionReport {
    /// sup f/h over the probe grid.
    pub constant_estimate: f64,
    pub trend: OrderTrend,
    pub verdict: ProbeVerdict,
}

/// Two-sided comparison f ≼ h (forward) and h ≼ f (backward).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct OrderReport {
    pub forward: DirectionReport,
    pub backward: DirectionReport,
    /// Smallest scale probed.
    pub scale_floor: f64,
}

/// Doubling probe outcome.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DoublingReport {
    pub target: DoublingTarget,
    /// inf over the grid of g(x)/g(2x).
    pub tau_estimate: f64,
    pub trend: TrendClass,
    pub verdict: ProbeVerdict,
}

impl OrderReport {
    /// Both directions hold: the gauges agree up to constants at probed scales.
    pub fn equivalent(&self) -> bool {
        self.forward.verdict == ProbeVerdict::HoldsAtProbedScales
            && self.backward.verdict == ProbeVerdict::HoldsAtProbedScales
    }
}

fn order_report_from_log_ratios(points: &[(f64, f64)], scale_floor: f64) -> OrderReport {
    let max_lr = points.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let min_lr = points.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let slope = lsq_slope(&points[window_start(points.len())..]);
    let forward = DirectionReport {
        constant_estimate: max_lr.exp(),
        trend: if slope > SLOPE_THRESHOLD {
            OrderTrend::Diverging
        } else {
            OrderTrend::Bounded
        },
        verdict: if slope > SLOPE_THRESHOLD {
            ProbeVerdict::Fails
        } else {
            ProbeVerdict::HoldsAtProbedScales
        },
    };
    let backward = DirectionReport {
        constant_estimate: (-min_lr).exp(),
        trend: if slope < -SLOPE_THRESHOLD {
            OrderTrend::Diverging
        } else {
            OrderTrend::Bounded
        },
        verdict: if slope < -SLOPE_THRESHOLD {
            ProbeVerdict::Fails
        } else {
            ProbeVerdict::HoldsAtProbedScales
        },
    };
    OrderReport {
        forward,
        backward,
        scale_floor,
    }
}

/// Compare two gauges on their common domain: the forward direction asks
/// whether f(x) ≤ c·h(x) at all probed scales (the ratio f/h stays bounded
/// as x → 0), the backward direction the reverse. Both holding makes the
/// gauges equivalent at probed scales.
pub fn compare(f: &DimensionFunction, h: &DimensionFunction) -> Result<OrderReport> {
    let top = f.domain_bound().min(h.domain_bound());
    let grid = gauge_scale_grid(top);
    let mut points = Vec::with_capacity(grid.len());
    for &x in &grid {
        let lx = x.ln();
        points.push(((1.0 / x).ln(), f.log_evaluate(lx)? - h.log_evaluate(lx)?));
    }
    Ok(order_report_from_log_ratios(
        &points,
        *grid.last().expect("nonempty grid"),
    ))
}

/// Compare the inverses of two gauges on their common value range, same
/// conventions as [`compare`].
pub fn compare_inverses(f: &DimensionFunction, h: &DimensionFunction) -> Result<OrderReport> {
    let top = f.value_at_bound().min(h.value_at_bound());
    let grid = gauge_scale_grid(top);
    let mut points = Vec::with_capacity(grid.len());
    for &y in &grid {
        let ly = y.ln();
        points.push(((1.0 / y).ln(), f.log_inverse(ly)? - h.log_inverse(ly)?));
    }
    Ok(order_report_from_log_ratios(
        &points,
        *grid.last().expect("nonempty grid"),
    ))
}
