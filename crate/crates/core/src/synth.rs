//! Gauge-to-sequence synthesis: invert the associated-function relation by
//! solving h(r_n/n) = 1/n for the tails, difference them into gap lengths,
//! and verify the round trip (the synthesized set is h-regular and the
//! sequence's own associated gauge is equivalent to the target).

use serde::Serialize;

use crate::classify::{classify_at, MeasureClass, PartitionCell};
use crate::error::{Error, Result};
use crate::gaps::GapSequence;
use crate::gauge::{compare, DimensionFunction};

/// Relative slack forgiving pure rounding noise in the monotonicity checks,
/// matching the sequence validator's tolerance.
const MONOTONE_SLACK: f64 = 1e-13;

/// Identity defect allowed by the round trip: h(r_n/n) must equal 1/n to
/// this relative error at every synthesized index.
pub const IDENTITY_TOLERANCE: f64 = 1e-9;

/// Build the gap sequence whose cut-out set is h-regular: tails
/// r_n = n·h^{-1}(1/n) stored exactly, gaps a_n = r_n − r_{n+1}. Feasibility
/// is checked, not assumed — the tails must decrease strictly and the gaps
/// must come out positive and non-increasing, else the first offending index
/// is reported.
pub fn sequence_from_function(h: &DimensionFunction, count: u64) -> Result<GapSequence> {
    if count < 1 {
        return Err(Error::InvalidParameter(
            "synthesis needs at least one gap".into(),
        ));
    }
    let mut tails = Vec::with_capacity((count + 1) as usize);
    for n in 1..=count + 1 {
        let ln_n = (n as f64).ln();
        let lr = match h.log_inverse(-ln_n) {
            Ok(u) => ln_n + u,
            Err(Error::DomainViolation { .. }) => {
                return Err(Error::SynthesisInfeasible {
                    index: n,
                    reason: format!("target value 1/{n} lies above the gauge's range"),
                })
            }
            Err(e) => return Err(e),
        };
        let r = lr.exp();
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::SynthesisInfeasible {
                index: n,
                reason: format!("tail r_{n} = {r} is not positive and finite"),
            });
        }
        if let Some(&prev) = tails.last() {
            if r >= prev {
                return Err(Error::SynthesisInfeasible {
                    index: n,
                    reason: format!("tails fail to decrease: r_{n} = {r} ≥ r_{} = {prev}", n - 1),
                });
            }
        }
        tails.push(r);
    }
    let terms: Vec<f64> = tails.windows(2).map(|w| w[0] - w[1]).collect();
    for (i, pair) in terms.windows(2).enumerate() {
        if pair[1] > pair[0] * (1.0 + MONOTONE_SLACK) {
            return Err(Error::SynthesisInfeasible {
                index: (i + 2) as u64,
                reason: format!(
                    "gap lengths increase: a_{} = {} exceeds a_{} = {}; not a legal \
                     non-increasing gap sequence",
                    i + 2,
                    pair[1],
                    i + 1,
                    pair[0]
                ),
            });
        }
    }
    GapSequence::synthesized(terms, tails, format!("synthesized({},{count})", h.label()))
}

/// Round-trip evidence for one synthesized sequence.
#[derive(Debug, Clone, Serialize)]
pub struct RoundtripReport {
    pub gauge: String,
    pub count: u64,
    /// Partition cell of (synthesized sequence, target gauge).
    pub cell: Option<PartitionCell>,
    pub regular: bool,
    /// The sequence's own associated gauge compares as equivalent to the
    /// target in both directions.
    pub associated_equivalent: bool,
    /// max over n ≤ count of |n·h(r_n/n) − 1|.
    pub max_identity_error: f64,
    pub passed: bool,
}

/// Synthesize from `h`, then check the defining properties: the cell is
/// (1, 1) i.e. h-regular, the associated gauge of the output is equivalent
/// to `h`, and the identity h(r_n/n) = 1/n holds to within
/// [`IDENTITY_TOLERANCE`] at every index.
pub fn roundtrip_check(h: &DimensionFunction, count: u64, depth: u32) -> Result<RoundtripReport> {
    let seq = sequence_from_function(h, count)?;
    let report = classify_at(&seq, h, count, depth)?;
    let assoc = DimensionFunction::associated(&seq, count)?;
    let associated_equivalent = compare(&assoc, h)?.equivalent();
    let mut max_err = 0.0f64;
    for n in 1..=count {
        let ln_n = (n as f64).ln();
        let lv = ln_n + h.log_evaluate(seq.log_tail(n)? - ln_n)?;
        max_err = max_err.max((lv.exp() - 1.0).abs());
    }
    let regular = report.regular;
    Ok(RoundtripReport {
        gauge: h.label().to_string(),
        count,
        cell: report.cell,
        regular,
        associated_equivalent,
        max_identity_error: max_err,
        passed: regular && associated_equivalent && max_err <= IDENTITY_TOLERANCE,
    })
}

/// The regular cell, for assertions.
pub fn regular_cell() -> PartitionCell {
    PartitionCell {
        alpha: MeasureClass::One,
        beta: MeasureClass::One,
    }
}
