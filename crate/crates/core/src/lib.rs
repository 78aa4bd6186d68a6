//! Computational geometry of cut-out sets on the line.
//!
//! A non-increasing summable sequence of gap lengths determines, up to
//! isometry, a compact nowhere-dense set obtained by removing one open gap
//! per step from an interval. This crate builds those sets to finite depth,
//! estimates their Hausdorff and packing dimensions from tail asymptotics,
//! classifies gauge functions against them, decides tail-based equivalences
//! between sequences, and synthesizes sequences realizing a prescribed gauge.

pub mod cantor;
pub mod classify;
pub mod config;
pub mod equiv;
pub mod error;
pub mod gaps;
pub mod gauge;
pub mod kahan;
pub mod limits;
pub mod report;
pub mod synth;
pub mod trend;

pub use cantor::{ball_mass_audit, interval_length, BallMassAudit, CantorApproximation};
pub use classify::{
    battery, classify, classify_at, cover_sum, packing_sum, sandwich_check, standard_battery,
    BatteryRow, ClassificationReport, MeasureClass, OracleRow, PartitionCell, SandwichReport,
    SideEstimate,
};
pub use equiv::{
    sequence_equivalent, tail_equivalent, four_condition_crosscheck, weak_tail_equivalent,
    Counterexample, CrosscheckReport, EquivalenceOutcome, EquivalenceRelation, EquivalenceVerdict,
    EquivalenceWitness, WitnessViolation,
};
pub use config::{load_sequence_spec, parse_gauge_spec, parse_sequence_spec, render_explicit_spec};
pub use error::{Error, Result};
pub use gaps::{GapSequence, SequenceFamily, ValidationFailure, ValidationReport};
pub use gauge::{
    compare, compare_inverses, DimensionFunction, DirectionReport, DoublingReport,
    DoublingTarget, OrderReport, OrderTrend, ProbeVerdict,
};
pub use limits::{
    box_dimension_oracle, dimensions, limit_estimates, limit_estimates_log, scaled_values,
    scaled_values_log, tail_table_csv, DimensionDiagnostics, LimitClass, LimitEstimate,
};
pub use report::{format_float, to_json_string};
pub use synth::{roundtrip_check, sequence_from_function, RoundtripReport};
pub use trend::TrendClass;
