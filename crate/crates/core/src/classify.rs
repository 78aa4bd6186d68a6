//! Assignment of (set, gauge) pairs to cells of the dimension partition:
//! the Hausdorff class from the liminf of n·h(r_n/n), the packing class from
//! the limsup, cross-checked against finite-depth covering and packing sums
//! computed from the actual intervals.

use rayon::prelude::*;
use serde::Serialize;

use crate::cantor::CantorApproximation;
use crate::error::{Error, Result};
use crate::gaps::GapSequence;
use crate::gauge::DimensionFunction;
use crate::kahan::KahanSum;
use crate::limits::{limit_estimates_log, scaled_values_log, LimitClass, LimitEstimate};
use crate::trend::TrendClass;

/// Tolerance on the 4× sandwich margins, absorbing finite-scale bias of the
/// window estimates.
const SANDWICH_TOL: f64 = 0.1;

/// Default deepest oracle generation for classification reports.
const DEFAULT_ORACLE_DEPTH: u32 = 12;

/// Default index bound for the tail-functional probe.
pub const DEFAULT_PROBE_BOUND: u64 = 100_000;

/// Value class of a generalized measure: zero, positive finite, or infinite.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum MeasureClass {
    #[serde(rename = "0")]
    Zero,
    #[serde(rename = "1")]
    One,
    #[serde(rename = "inf")]
    Infinite,
}

impl std::fmt::Display for MeasureClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MeasureClass::Zero => write!(f, "0"),
            MeasureClass::One => write!(f, "1"),
            MeasureClass::Infinite => write!(f, "inf"),
        }
    }
}

impl From<LimitClass> for MeasureClass {
    fn from(c: LimitClass) -> Self {
        match c {
            LimitClass::Zero => MeasureClass::Zero,
            LimitClass::PositiveFinite => MeasureClass::One,
            LimitClass::Infinite => MeasureClass::Infinite,
        }
    }
}

/// A cell of the dimension partition: Hausdorff class (alpha) and packing
/// class (beta), always with alpha ≤ beta.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PartitionCell {
    #[serde(rename = "H")]
    pub alpha: MeasureClass,
    #[serde(rename = "P")]
    pub beta: MeasureClass,
}

impl PartitionCell {
    pub fn is_ordered(&self) -> bool {
        self.alpha <= self.beta
    }
}

impl std::fmt::Display for PartitionCell {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {})", self.alpha, self.beta)
    }
}

/// Covering and packing sums at one build depth.
#[derive(Debug, Clone, Serialize)]
pub struct OracleRow {
    pub depth: u32,
    pub cover: f64,
    pub packing: f64,
}

/// One side (liminf or limsup) of the tail-functional estimate.
#[derive(Debug, Clone, Serialize)]
pub struct SideEstimate {
    pub window: f64,
    pub trend: TrendClass,
    pub class: LimitClass,
}

/// Outcome of checking the 4× two-sided bounds tying the tail functional to
/// the covering/packing oracles. Vacuous unless the liminf is positive
/// finite.
#[derive(Debug, Clone, Serialize)]
pub struct SandwichReport {
    pub applicable: bool,
    pub note: String,
    pub liminf_window: f64,
    pub limsup_window: f64,
    pub min_cover: f64,
    pub max_packing: f64,
    pub cover_within_bounds: Option<bool>,
    pub packing_within_bounds: Option<bool>,
}

/// Full classification of one (sequence, gauge) pair.
#[derive(Debug, Clone, Serialize)]
pub struct ClassificationReport {
    pub sequence_spec: String,
    pub gauge_spec: String,
    /// None when the trend is oscillating (indeterminate), never a guess.
    pub cell: Option<PartitionCell>,
    pub liminf: SideEstimate,
    pub limsup: SideEstimate,
    pub oracles: Vec<OracleRow>,
    pub sandwich: SandwichReport,
    pub regular: bool,
    pub indeterminate: bool,
    pub verdicts: Vec<String>,
}

/// Σ h(|I_j|) over the generation-k intervals: a covering sum, hence an
/// upper-estimate oracle for the Hausdorff measure at that scale.
pub fn cover_sum(approx: &CantorApproximation, h: &DimensionFunction) -> Result<f64> {
    let mut sum = KahanSum::new();
    for j in 0..approx.num_intervals() {
        let len = approx.interval(j).1;
        if len == 0.0 {
            continue; // h(0+) = 0 for every admissible gauge
        }
        sum.add(h.log_evaluate(len.ln())?.exp());
    }
    Ok(sum.value())
}

/// Σ h(d_j) over disjoint balls centered at generation-k interval midpoints
/// with diameters d_j = min(|I_j|, δ). The balls sit inside disjoint
/// intervals, so this is a valid packing, hence a lower-estimate oracle for
/// the packing premeasure at scale δ.
pub fn packing_sum(
    approx: &CantorApproximation,
    h: &DimensionFunction,
    delta: f64,
) -> Result<f64> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "packing scale must be positive and finite, got {delta}"
        )));
    }
    let mut sum = KahanSum::new();
    for j in 0..approx.num_intervals() {
        let d = approx.interval(j).1.min(delta);
        if d == 0.0 {
            continue;
        }
        sum.add(h.log_evaluate(d.ln())?.exp());
    }
    Ok(sum.value())
}

fn side_estimates(est: &LimitEstimate) -> (SideEstimate, SideEstimate) {
    (
        SideEstimate {
            window: est.window_inf,
            trend: est.trend_inf,
            class: est.liminf_class,
        },
        SideEstimate {
            window: est.window_sup,
            trend: est.trend_sup,
            class: est.limsup_class,
        },
    )
}

fn cell_from_estimate(est: &LimitEstimate) -> Option<PartitionCell> {
    if est.is_indeterminate() {
        return None;
    }
    Some(PartitionCell {
        alpha: est.liminf_class.into(),
        beta: est.limsup_class.into(),
    })
}

fn sandwich_from_parts(est: &LimitEstimate, oracles: &[OracleRow]) -> SandwichReport {
    let min_cover = oracles.iter().map(|r| r.cover).fold(f64::INFINITY, f64::min);
    let max_packing = oracles
        .iter()
        .map(|r| r.packing)
        .fold(f64::NEG_INFINITY, f64::max);
    if est.liminf_class != LimitClass::PositiveFinite || oracles.is_empty() {
        let why = match est.liminf_class {
            LimitClass::Zero => "liminf zero",
            LimitClass::Infinite => "liminf infinite",
            LimitClass::PositiveFinite => "no oracle depths",
        };
        return SandwichReport {
            applicable: false,
            note: format!("not applicable ({why})"),
            liminf_window: est.window_inf,
            limsup_window: est.window_sup,
            min_cover,
            max_packing,
            cover_within_bounds: None,
            packing_within_bounds: None,
        };
    }
    let l = est.window_inf;
    let u = est.window_sup;
    let cover_ok =
        min_cover >= l / 4.0 * (1.0 - SANDWICH_TOL) && min_cover <= 4.0 * l * (1.0 + SANDWICH_TOL);
    let packing_ok = max_packing >= u / 4.0 * (1.0 - SANDWICH_TOL)
        && max_packing <= 4.0 * u * (1.0 + SANDWICH_TOL);
    SandwichReport {
        applicable: true,
        note: "4x bounds checked against oracle extremes over tested depths".into(),
        liminf_window: l,
        limsup_window: u,
        min_cover,
        max_packing,
        cover_within_bounds: Some(cover_ok),
        packing_within_bounds: Some(packing_ok),
    }
}

/// Two-sided 4× bound check at a single deepest depth `k` (ladder from
/// max(4, k−6) to k in steps of 2), reported with margins; vacuous when the
/// liminf class is not positive finite.
pub fn sandwich_check(
    seq: &GapSequence,
    h: &DimensionFunction,
    depth: u32,
    n_max: u64,
) -> Result<SandwichReport> {
    let est = limit_estimates_log(&scaled_values_log(seq, h, n_max)?)?;
    let oracles = oracle_ladder(seq, h, &ladder_depths(depth))?;
    Ok(sandwich_from_parts(&est, &oracles))
}

fn ladder_depths(top: u32) -> Vec<u32> {
    let lo = top.saturating_sub(6).max(4).min(top);
    (lo..=top).step_by(2).collect()
}

fn oracle_ladder(
    seq: &GapSequence,
    h: &DimensionFunction,
    depths: &[u32],
) -> Result<Vec<OracleRow>> {
    let mut rows = Vec::with_capacity(depths.len());
    for &depth in depths {
        let approx = CantorApproximation::build(seq, depth)?;
        // Depths whose leaf lengths have underflowed to zero have no honest
        // f64 oracle: a zero-length leaf would contribute h(0+) = 0 where the
        // true length is merely below the smallest positive float, silently
        // deflating the cover sum. Skip them, as the box oracle skips
        // unresolvable scales.
        if approx.lengths().iter().any(|&l| l == 0.0) {
            continue;
        }
        let cover = cover_sum(&approx, h)?;
        let delta = approx
            .lengths()
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        let packing = if delta > 0.0 {
            packing_sum(&approx, h, delta)?
        } else {
            0.0
        };
        rows.push(OracleRow {
            depth,
            cover,
            packing,
        });
    }
    Ok(rows)
}

/// Classify (sequence, gauge) into its partition cell with oracle evidence
/// at depths up to `depth`. The cell comes from the tail functional — the
/// exact characterization — while the oracles confirm at finitely many
/// scales.
pub fn classify_at(
    seq: &GapSequence,
    h: &DimensionFunction,
    n_max: u64,
    depth: u32,
) -> Result<ClassificationReport> {
    let est = limit_estimates_log(&scaled_values_log(seq, h, n_max)?)?;
    let oracles = oracle_ladder(seq, h, &ladder_depths(depth))?;
    let cell = cell_from_estimate(&est);
    let sandwich = sandwich_from_parts(&est, &oracles);
    let indeterminate = cell.is_none();
    let regular = cell
        == Some(PartitionCell {
            alpha: MeasureClass::One,
            beta: MeasureClass::One,
        });
    let (liminf, limsup) = side_estimates(&est);
    let mut verdicts = Vec::new();
    match cell {
        Some(c) => {
            verdicts.push(format!("cell {c}"));
            if regular {
                verdicts.push("regular: both measures positive finite".into());
            }
        }
        None => verdicts.push("indeterminate: oscillating trend in the tail functional".into()),
    }
    if sandwich.applicable {
        let both = sandwich.cover_within_bounds == Some(true)
            && sandwich.packing_within_bounds == Some(true);
        verdicts.push(if both {
            "sandwich bounds hold at tested depths".into()
        } else {
            "sandwich bounds violated at tested depths".into()
        });
    } else {
        verdicts.push(format!("sandwich {}", sandwich.note));
    }
    Ok(ClassificationReport {
        sequence_spec: seq.label().to_string(),
        gauge_spec: h.label().to_string(),
        cell,
        liminf,
        limsup,
        oracles,
        sandwich,
        regular,
        indeterminate,
        verdicts,
    })
}

/// [`classify_at`] with the default oracle depth.
pub fn classify(
    seq: &GapSequence,
    h: &DimensionFunction,
    n_max: u64,
) -> Result<ClassificationReport> {
    classify_at(seq, h, n_max, DEFAULT_ORACLE_DEPTH)
}

/// The default gauge battery: three powers bracketing typical dimensions,
/// a logarithmic gauge, and two power–log hybrids. The construction
/// parameters are all valid, so the unwraps cannot fire.
pub fn standard_battery() -> Vec<DimensionFunction> {
    vec![
        DimensionFunction::power(0.3).unwrap(),
        DimensionFunction::power(0.5).unwrap(),
        DimensionFunction::power(0.7).unwrap(),
        DimensionFunction::log_reciprocal(1.0, 1.0).unwrap(),
        DimensionFunction::power_log(0.5, 1.0).unwrap(),
        DimensionFunction::power_log(0.5, -1.0).unwrap(),
    ]
}

/// One gauge's line in a partition table.
#[derive(Debug, Clone, Serialize)]
pub struct BatteryRow {
    pub gauge: String,
    pub cell: Option<PartitionCell>,
    pub liminf_class: LimitClass,
    pub limsup_class: LimitClass,
    pub window_inf: f64,
    pub window_sup: f64,
    pub regular: bool,
    pub indeterminate: bool,
}

/// Partition table: one row per gauge, cells from the tail functional.
/// Rows are independent and evaluated in parallel.
pub fn battery(
    seq: &GapSequence,
    gauges: &[DimensionFunction],
    n_max: u64,
) -> Result<Vec<BatteryRow>> {
    gauges
        .par_iter()
        .map(|h| {
            let est = limit_estimates_log(&scaled_values_log(seq, h, n_max)?)?;
            let cell = cell_from_estimate(&est);
            Ok(BatteryRow {
                gauge: h.label().to_string(),
                cell,
                liminf_class: est.liminf_class,
                limsup_class: est.limsup_class,
                window_inf: est.window_inf,
                window_sup: est.window_sup,
                regular: cell
                    == Some(PartitionCell {
                        alpha: MeasureClass::One,
                        beta: MeasureClass::One,
                    }),
                indeterminate: cell.is_none(),
            })
        })
        .collect()
}
