//! Equivalence relations between gap sequences — ratio-bounded equivalence
//! of terms, of tails, and the weak tail relation with integer witnesses —
//! plus the four-way consistency crosscheck tying them to gauge comparison
//! and partition-cell agreement.

use rayon::prelude::*;
use serde::Serialize;

use crate::classify::battery;
use crate::error::Result;
use crate::gaps::GapSequence;
use crate::gauge::{compare, DimensionFunction};
use crate::trend::{classify_slope, index_grid, lsq_slope, window_start, TrendClass};

/// Default index bound for equivalence probes.
pub const DEFAULT_PROBE_BOUND: u64 = 100_000;

/// Default cap on the integer witnesses of the weak tail relation.
pub const DEFAULT_WITNESS_BOUND: u64 = 64;

/// A finite probe cannot disprove boundedness outright, but a ratio spread
/// beyond this factor (max/min over probed indices) refutes equivalence in
/// practice: genuine equivalences in the battery stay within single digits.
const SPREAD_REFUTATION: f64 = 1e6;

/// Which relation a verdict speaks about.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EquivalenceRelation {
    Sequence,
    Tail,
    WeakTail,
}

/// Probe outcome: held at every probed index with a stable trend, or refuted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EquivalenceOutcome {
    HoldsUpToN,
    Refuted,
}

/// Evidence that a relation holds: ratio bounds for the two-sided relations,
/// integer witnesses for the weak tail relation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EquivalenceWitness {
    Constants { c1: f64, c2: f64 },
    Indices { j: u64, k: u64 },
}

/// A concrete index where the relation fails, with the offending ratio.
#[derive(Debug, Clone, Serialize)]
pub struct Counterexample {
    pub index: u64,
    pub ratio: f64,
    pub direction: String,
}

/// One failed witness candidate in the weak tail search: for this `j`, the
/// defining inequality already fails at `index`.
#[derive(Debug, Clone, Serialize)]
pub struct WitnessViolation {
    pub direction: String,
    pub j: u64,
    pub index: u64,
    pub ratio: f64,
}

/// Verdict for one relation on one ordered pair, with the probe bound that
/// scopes every claim.
#[derive(Debug, Clone, Serialize)]
pub struct EquivalenceVerdict {
    pub relation: EquivalenceRelation,
    pub verdict: EquivalenceOutcome,
    pub witnesses: Option<EquivalenceWitness>,
    pub counterexample: Option<Counterexample>,
    /// Failed witness candidates (weak tail relation only, when refuted).
    pub violations: Vec<WitnessViolation>,
    pub probe_bound: u64,
}

impl EquivalenceVerdict {
    pub fn holds(&self) -> bool {
        self.verdict == EquivalenceOutcome::HoldsUpToN
    }
}

/// ln r_n, reading indices past a finite sequence's range as exactly-zero
/// tails when that is what they are.
fn log_tail_ext(seq: &GapSequence, n: u64) -> Result<f64> {
    if n > seq.max_tail_index() && seq.tail_beyond_range_vanishes() {
        return Ok(f64::NEG_INFINITY);
    }
    seq.log_tail(n)
}

/// Shared engine for the two ratio-bounded relations: scan ln(x_n/y_n) over
/// every index up to the cap, then refute on a diverging trend (slope test
/// on the geometric grid) or on an extreme spread; otherwise report the
/// ratio bounds as witnesses.
fn ratio_verdict(
    relation: EquivalenceRelation,
    log_ratio: impl Fn(u64) -> Result<f64>,
    cap: u64,
) -> Result<EquivalenceVerdict> {
    let mut min = (f64::INFINITY, 0u64);
    let mut max = (f64::NEG_INFINITY, 0u64);
    let mut sum = 0.0f64;
    let mut count = 0usize;
    for n in 1..=cap {
        let lr = log_ratio(n)?;
        if lr < min.0 {
            min = (lr, n);
        }
        if lr > max.0 {
            max = (lr, n);
        }
        sum += lr;
        count += 1;
    }
    let grid_points: Vec<(f64, f64)> = index_grid(1, cap)
        .into_iter()
        .map(|n| Ok(((n as f64).ln(), log_ratio(n)?)))
        .collect::<Result<_>>()?;
    let window = &grid_points[window_start(grid_points.len())..];
    let trend = classify_slope(lsq_slope(window));
    let mean = sum / count as f64;
    let refuted_by_trend = matches!(trend, TrendClass::ToInfinity | TrendClass::ToZero);
    let refuted_by_spread = max.0 - min.0 > SPREAD_REFUTATION.ln();
    if refuted_by_trend || refuted_by_spread {
        // pick the side that strays further from the bulk of the ratios
        let diverging = if refuted_by_trend {
            trend == TrendClass::ToInfinity
        } else {
            max.0 - mean >= mean - min.0
        };
        let (lr, index) = if diverging { max } else { min };
        return Ok(EquivalenceVerdict {
            relation,
            verdict: EquivalenceOutcome::Refuted,
            witnesses: None,
            counterexample: Some(Counterexample {
                index,
                ratio: lr.exp(),
                direction: if diverging { "diverging" } else { "vanishing" }.into(),
            }),
            violations: Vec::new(),
            probe_bound: cap,
        });
    }
    Ok(EquivalenceVerdict {
        relation,
        verdict: EquivalenceOutcome::HoldsUpToN,
        witnesses: Some(EquivalenceWitness::Constants {
            c1: min.0.exp(),
            c2: max.0.exp(),
        }),
        counterexample: None,
        violations: Vec::new(),
        probe_bound: cap,
    })
}

/// Are the terms ratio-equivalent: c1 ≤ a_n/b_n ≤ c2 at every probed index?
pub fn sequence_equivalent(a: &GapSequence, b: &GapSequence, n_max: u64) -> Result<EquivalenceVerdict> {
    let cap = n_max.min(a.max_index()).min(b.max_index());
    ratio_verdict(EquivalenceRelation::Sequence, |n| {
        Ok(a.log_term(n)? - b.log_term(n)?)
    }, cap)
}

/// Are the tails ratio-equivalent: c1 ≤ r_n^{(a)}/r_n^{(b)} ≤ c2?
pub fn tail_equivalent(a: &GapSequence, b: &GapSequence, n_max: u64) -> Result<EquivalenceVerdict> {
    let cap = n_max.min(a.max_tail_index()).min(b.max_tail_index());
    ratio_verdict(EquivalenceRelation::Tail, |n| {
        Ok(a.log_tail(n)? - b.log_tail(n)?)
    }, cap)
}

/// Search one direction of the weak tail relation: the smallest j ≤ jmax
/// with r_n^{(x)} ≥ r_{jn}^{(y)}/j at every n ≤ cap. Candidates run in
/// parallel; failures come back with their first violating index.
fn weak_direction(
    x: &GapSequence,
    y: &GapSequence,
    cap: u64,
    jmax: u64,
    direction: &str,
) -> Result<(Option<u64>, Vec<WitnessViolation>)> {
    let x_log: Vec<f64> = (1..=cap).map(|n| log_tail_ext(x, n)).collect::<Result<_>>()?;
    let outcomes: Vec<(u64, Option<WitnessViolation>)> = (1..=jmax)
        .into_par_iter()
        .map(|j| {
            let ln_j = (j as f64).ln();
            for n in 1..=cap {
                let rhs = log_tail_ext(y, j * n)? - ln_j;
                let lhs = x_log[(n - 1) as usize];
                if lhs < rhs {
                    return Ok((
                        j,
                        Some(WitnessViolation {
                            direction: direction.into(),
                            j,
                            index: n,
                            ratio: (lhs - rhs).exp(),
                        }),
                    ));
                }
            }
            Ok((j, None))
        })
        .collect::<Result<_>>()?;
    let found = outcomes.iter().find(|(_, v)| v.is_none()).map(|&(j, _)| j);
    let violations = match found {
        // report only the candidates below the successful witness
        Some(j) => outcomes
            .into_iter()
            .filter(|&(cand, _)| cand < j)
            .filter_map(|(_, v)| v)
            .collect(),
        None => outcomes.into_iter().filter_map(|(_, v)| v).collect(),
    };
    Ok((found, violations))
}

/// Weak tail equivalence: positive integers j, k with
/// r_n^{(a)} ≥ r_{jn}^{(b)}/j and r_n^{(b)} ≥ r_{kn}^{(a)}/k at every
/// probed n. Holds iff both witnesses exist below the cap.
pub fn weak_tail_equivalent(
    a: &GapSequence,
    b: &GapSequence,
    n_max: u64,
    jmax: u64,
) -> Result<EquivalenceVerdict> {
    let cap = n_max.min(a.max_tail_index()).min(b.max_tail_index());
    let (j, mut violations) = weak_direction(a, b, cap, jmax, "forward")?;
    let (k, back_violations) = weak_direction(b, a, cap, jmax, "backward")?;
    violations.extend(back_violations);
    match (j, k) {
        (Some(j), Some(k)) => Ok(EquivalenceVerdict {
            relation: EquivalenceRelation::WeakTail,
            verdict: EquivalenceOutcome::HoldsUpToN,
            witnesses: Some(EquivalenceWitness::Indices { j, k }),
            counterexample: None,
            violations: Vec::new(),
            probe_bound: cap,
        }),
        _ => {
            let worst = violations
                .iter()
                .filter(|v| (j.is_none() && v.direction == "forward") || (k.is_none() && v.direction == "backward"))
                .max_by_key(|v| v.j)
                .cloned();
            Ok(EquivalenceVerdict {
                relation: EquivalenceRelation::WeakTail,
                verdict: EquivalenceOutcome::Refuted,
                witnesses: None,
                counterexample: worst.map(|v| Counterexample {
                    index: v.index,
                    ratio: v.ratio,
                    direction: v.direction,
                }),
                violations,
                probe_bound: cap,
            })
        }
    }
}

/// Four-way consistency report: the equivalent conditions checked against
/// each other on one pair of sequences.
#[derive(Debug, Clone, Serialize)]
pub struct CrosscheckReport {
    pub first: String,
    pub second: String,
    /// (1) associated gauges compare as equivalent, both directions.
    pub associated_equivalent: bool,
    /// (2) the same gauges are regular for both sequences (None when any
    /// classification came back indeterminate).
    pub regular_sets_agree: Option<bool>,
    /// (3) partition cells agree gauge by gauge (None as above).
    pub cells_agree: Option<bool>,
    /// (4) the weak tail relation holds.
    pub weak_tail_holds: bool,
    pub indeterminate: bool,
    /// All four conditions returned the same verdict.
    pub consistent: Option<bool>,
    /// The common verdict, when consistent.
    pub agreed_verdict: Option<bool>,
    pub mismatches: Vec<String>,
}

/// Check that the four equivalent conditions agree on (a, b): associated
/// gauge equivalence, agreement of regular gauge sets over the battery,
/// cell-by-cell partition agreement, and the weak tail relation.
/// Indeterminate classifications propagate — they are never coerced.
pub fn four_condition_crosscheck(
    a: &GapSequence,
    b: &GapSequence,
    gauges: &[DimensionFunction],
    n_max: u64,
    jmax: u64,
) -> Result<CrosscheckReport> {
    let assoc_bound = |s: &GapSequence| n_max.min(s.max_tail_index());
    let h_a = DimensionFunction::associated(a, assoc_bound(a))?;
    let h_b = DimensionFunction::associated(b, assoc_bound(b))?;
    let cond1 = compare(&h_a, &h_b)?.equivalent();

    let rows_a = battery(a, gauges, n_max)?;
    let rows_b = battery(b, gauges, n_max)?;
    let any_indeterminate = rows_a.iter().chain(&rows_b).any(|r| r.indeterminate);
    let (cond2, cond3) = if any_indeterminate {
        (None, None)
    } else {
        (
            Some(
                rows_a
                    .iter()
                    .zip(&rows_b)
                    .all(|(ra, rb)| ra.regular == rb.regular),
            ),
            Some(
                rows_a
                    .iter()
                    .zip(&rows_b)
                    .all(|(ra, rb)| ra.cell == rb.cell),
            ),
        )
    };
    let cond4 = weak_tail_equivalent(a, b, n_max, jmax)?.holds();

    let mut mismatches = Vec::new();
    let mut consistent = None;
    let mut agreed = None;
    if let (Some(c2), Some(c3)) = (cond2, cond3) {
        let all = [cond1, c2, c3, cond4];
        let ok = all.iter().all(|&c| c == cond1);
        consistent = Some(ok);
        if ok {
            agreed = Some(cond1);
        } else {
            let names = [
                "associated gauges equivalent",
                "regular gauge sets agree",
                "partition cells agree",
                "weak tail relation holds",
            ];
            for (name, &val) in names.iter().zip(&all) {
                mismatches.push(format!("{name}: {val}"));
            }
        }
    } else {
        mismatches.push("battery produced an indeterminate classification".into());
    }
    Ok(CrosscheckReport {
        first: a.label().to_string(),
        second: b.label().to_string(),
        associated_equivalent: cond1,
        regular_sets_agree: cond2,
        cells_agree: cond3,
        weak_tail_holds: cond4,
        indeterminate: any_indeterminate,
        consistent,
        agreed_verdict: agreed,
        mismatches,
    })
}
