//! Acceptance gate: ten fixture-backed checks covering dimensions, exact
//! ternary closed forms, partition cells, oracle sandwiches, the four-way
//! equivalence crosscheck, the halving dichotomy, inverse doubling, gauge
//! recovery, synthesis round-trips, and the geometry invariants.
//!
//! Each test prints one `criterion NN pass|FAIL` line; run with
//! `--nocapture` to see them all.

use cantordim_core::trend::lsq_slope;
use cantordim_core::{
    ball_mass_audit, battery, box_dimension_oracle, classify_at, compare, cover_sum, dimensions,
    packing_sum, roundtrip_check, sandwich_check, sequence_from_function, standard_battery,
    tail_equivalent, four_condition_crosscheck, weak_tail_equivalent, CantorApproximation,
    DimensionFunction, DoublingTarget, GapSequence, MeasureClass, PartitionCell, ProbeVerdict,
    TrendClass,
};

fn verdict(number: u32, name: &str, pass: bool, detail: String) {
    println!(
        "criterion {number:02} {} :: {name} :: {detail}",
        if pass { "pass" } else { "FAIL" }
    );
    assert!(pass, "criterion {number:02} {name}: {detail}");
}

fn ternary_dim() -> f64 {
    2f64.ln() / 3f64.ln()
}

fn cell(alpha: MeasureClass, beta: MeasureClass) -> PartitionCell {
    PartitionCell { alpha, beta }
}

#[test]
fn criterion_01_ternary_dimensions() {
    let mt = GapSequence::middle_third_blocks();
    let (lo, hi, _diag) = dimensions(&mt, 1 << 20).unwrap();
    let target = ternary_dim();
    let approx = CantorApproximation::build(&mt, 14).unwrap();
    let box_dim = box_dimension_oracle(&approx).unwrap();
    let pass = (lo - target).abs() <= 1e-3
        && (hi - target).abs() <= 1e-3
        && (box_dim - target).abs() <= 0.02;
    verdict(
        1,
        "ternary dimensions",
        pass,
        format!("dims=({lo:.6},{hi:.6}) box={box_dim:.4} target={target:.6}"),
    );
}

#[test]
fn criterion_02_ternary_exactness() {
    let mt = GapSequence::middle_third_blocks();
    let h = DimensionFunction::power(ternary_dim()).unwrap();
    let mut worst_scaled = 0.0f64;
    for k in 2..=20u32 {
        let n = 1u64 << (k - 1);
        let b = mt.tail(n).unwrap() / n as f64;
        let v = n as f64 * h.evaluate(b).unwrap();
        worst_scaled = worst_scaled.max((v - 1.0).abs());
    }
    let mut worst_cover = 0.0f64;
    for depth in 0..=14u32 {
        let approx = CantorApproximation::build(&mt, depth).unwrap();
        let c = cover_sum(&approx, &h).unwrap();
        worst_cover = worst_cover.max((c - 1.0).abs());
    }
    let pass = worst_scaled <= 1e-9 && worst_cover <= 1e-9;
    verdict(
        2,
        "ternary exactness",
        pass,
        format!("max |n·h(b_n)-1|={worst_scaled:.2e} max |cover-1|={worst_cover:.2e}"),
    );
}

#[test]
fn criterion_03_half_power_dimensions_and_cells() {
    let seq = GapSequence::power_law(0.5).unwrap();
    let (lo, hi, _diag) = dimensions(&seq, 1_000_000).unwrap();
    let dims_ok = (lo - 0.5).abs() <= 1e-2 && (hi - 0.5).abs() <= 1e-2;

    let expected = [
        (0.4, cell(MeasureClass::Infinite, MeasureClass::Infinite)),
        (0.5, cell(MeasureClass::One, MeasureClass::One)),
        (0.6, cell(MeasureClass::Zero, MeasureClass::Zero)),
    ];
    let mut cells_ok = true;
    let mut got = Vec::new();
    for (s, want) in &expected {
        let h = DimensionFunction::power(*s).unwrap();
        let report = classify_at(&seq, &h, 100_000, 12).unwrap();
        let matched = report.cell.as_ref() == Some(want);
        cells_ok &= matched;
        got.push(format!(
            "x^{s}: {}",
            report
                .cell
                .as_ref()
                .map_or("indeterminate".to_string(), |c| c.to_string())
        ));
    }
    verdict(
        3,
        "half-power dims and diagonal cells",
        dims_ok && cells_ok,
        format!("dims=({lo:.4},{hi:.4}); {}", got.join("; ")),
    );
}

#[test]
fn criterion_04_sandwich_bounds() {
    let fixtures: Vec<(GapSequence, DimensionFunction)> = vec![
        (
            GapSequence::middle_third_blocks(),
            DimensionFunction::power(ternary_dim()).unwrap(),
        ),
        (
            GapSequence::power_law(0.5).unwrap(),
            DimensionFunction::power(0.5).unwrap(),
        ),
        (
            GapSequence::power_law(0.3).unwrap(),
            DimensionFunction::power(0.3).unwrap(),
        ),
        (
            GapSequence::geometric((-1.0f64).exp(), 1.0).unwrap(),
            DimensionFunction::log_reciprocal(1.0, 1.0).unwrap(),
        ),
    ];
    let mut pass = true;
    let mut notes = Vec::new();
    for (seq, h) in &fixtures {
        let report = sandwich_check(seq, h, 12, 100_000).unwrap();
        let ok = report.applicable
            && report.cover_within_bounds == Some(true)
            && report.packing_within_bounds == Some(true);
        pass &= ok;
        notes.push(format!(
            "{}/{}: cover {:.3} in 4x of {:.3}, packing {:.3} in 4x of {:.3} -> {}",
            seq.label(),
            h.label(),
            report.min_cover,
            report.liminf_window,
            report.max_packing,
            report.limsup_window,
            ok
        ));
    }
    verdict(4, "sandwich bounds", pass, notes.join(" | "));
}

#[test]
fn criterion_05_crosscheck_matrix() {
    let gauges = standard_battery();
    let p2 = GapSequence::power_law(0.5).unwrap();
    let pairs: Vec<(&str, GapSequence, GapSequence, bool)> = vec![
        ("self", p2.clone(), p2.clone(), true),
        (
            "geometric 1x/2x",
            GapSequence::geometric((-1.0f64).exp(), 1.0).unwrap(),
            GapSequence::geometric((-2.0f64).exp(), 1.0).unwrap(),
            true,
        ),
        (
            "scaled by 2",
            p2.clone(),
            GapSequence::power_law_scaled(0.5, 2.0).unwrap(),
            true,
        ),
        (
            "spike/plateau pair",
            GapSequence::example_a_first(),
            GapSequence::example_a_second(),
            true,
        ),
        (
            "halved",
            p2.clone(),
            GapSequence::halved_of(p2.clone()),
            true,
        ),
        (
            "distinct powers",
            p2.clone(),
            GapSequence::power_law(1.0 / 3.0).unwrap(),
            false,
        ),
    ];
    let mut pass = true;
    let mut notes = Vec::new();
    for (name, a, b, expect_hold) in &pairs {
        let r = four_condition_crosscheck(a, b, &gauges, 100_000, 64).unwrap();
        let ok = r.consistent == Some(true) && r.agreed_verdict == Some(*expect_hold);
        pass &= ok;
        notes.push(format!(
            "{name}: consistent={:?} agreed={:?} want {expect_hold}",
            r.consistent, r.agreed_verdict
        ));
    }
    verdict(5, "four-condition crosscheck matrix", pass, notes.join(" | "));
}

#[test]
fn criterion_06_halving_dichotomy() {
    // Slow decay: halving changes nothing up to constants, ratio within [1/4, 4].
    let base = GapSequence::power_law(0.5).unwrap();
    let halved = GapSequence::halved_of(base.clone());
    let v = tail_equivalent(&base, &halved, 100_000).unwrap();
    let (c1, c2) = match &v.witnesses {
        Some(cantordim_core::EquivalenceWitness::Constants { c1, c2 }) => (*c1, *c2),
        _ => (f64::NAN, f64::NAN),
    };
    let slow_ok = v.holds() && c2 <= 4.0 * (1.0 + 1e-12) && 1.0 / c1 <= 4.0 * (1.0 + 1e-12);

    // Fast decay: tail equivalence breaks with ratio growing like e^{n/2}.
    let geo = GapSequence::geometric((-1.0f64).exp(), 1.0).unwrap();
    let halved_geo = GapSequence::halved_of(geo.clone());
    let refuted = !tail_equivalent(&geo, &halved_geo, 100_000).unwrap().holds();
    let pts: Vec<(f64, f64)> = (40..=240)
        .map(|n| {
            (
                n as f64,
                halved_geo.tail(n).unwrap().ln() - geo.tail(n).unwrap().ln(),
            )
        })
        .collect();
    let slope = lsq_slope(&pts);
    let slope_ok = (slope - 0.5).abs() <= 0.05;
    let weak = weak_tail_equivalent(&geo, &halved_geo, 100_000, 64).unwrap();
    let fast_ok = refuted && slope_ok && weak.holds();

    verdict(
        6,
        "halving dichotomy",
        slow_ok && fast_ok,
        format!(
            "slow: holds={} c1={c1:.3} c2={c2:.3}; fast: refuted={refuted} \
             ratio slope={slope:.4} (want 0.5±10%) weak holds={}",
            v.holds(),
            weak.holds()
        ),
    );
}

#[test]
fn criterion_07_inverse_doubling() {
    let scales: Vec<f64> = (2..=30).map(|k| 2f64.powi(-k)).collect();
    let mut pass = true;
    let mut notes = Vec::new();
    for s in [0.3, 0.5, 0.7] {
        let h = DimensionFunction::power(s).unwrap();
        let rep = h
            .doubling_report(DoublingTarget::Inverse, &scales)
            .unwrap();
        let target = 2f64.powf(-1.0 / s);
        let ok = rep.verdict == ProbeVerdict::HoldsAtProbedScales
            && (rep.tau_estimate - target).abs() <= 1e-9;
        pass &= ok;
        notes.push(format!("power({s}): tau={:.12} want {target:.12}", rep.tau_estimate));
    }
    let hl = DimensionFunction::log_reciprocal(1.0, 1.0).unwrap();
    let rep = hl
        .doubling_report(DoublingTarget::Inverse, &scales)
        .unwrap();
    let fails = rep.verdict == ProbeVerdict::Fails && rep.trend == TrendClass::ToZero;
    // The inverse-ratio decay rate is exactly 1/(2y): check pointwise at y = 2^-10.
    let y: f64 = 2f64.powi(-10);
    let lr = hl.log_inverse(y.ln()).unwrap() - hl.log_inverse((2.0 * y).ln()).unwrap();
    let rate_ok = (lr + 1.0 / (2.0 * y)).abs() <= 1e-6 * (1.0 / (2.0 * y));
    pass &= fails && rate_ok;
    notes.push(format!(
        "logrec(1,1): verdict={:?} trend={:?} log-ratio at 2^-10 = {lr:.3} (want {:.3})",
        rep.verdict,
        rep.trend,
        -1.0 / (2.0 * y)
    ));
    verdict(7, "inverse doubling", pass, notes.join(" | "));
}

#[test]
fn criterion_08_associated_recovery() {
    let p2 = GapSequence::power_law(0.5).unwrap();
    let ha = DimensionFunction::associated(&p2, 100_000).unwrap();
    let power_match = compare(&ha, &DimensionFunction::power(0.5).unwrap())
        .unwrap()
        .equivalent();

    let geo = GapSequence::geometric((-1.0f64).exp(), 1.0).unwrap();
    let hg = DimensionFunction::associated(&geo, 10_000).unwrap();
    let log_match = compare(&hg, &DimensionFunction::log_reciprocal(1.0, 1.0).unwrap())
        .unwrap()
        .equivalent();

    verdict(
        8,
        "associated gauge recovery",
        power_match && log_match,
        format!("power_law(1/2)@1e5 ~ x^0.5: {power_match}; geometric(e^-1)@1e4 ~ logrec(1,1): {log_match}"),
    );
}

#[test]
fn criterion_09_synthesis_roundtrip() {
    let mut pass = true;
    let mut notes = Vec::new();
    for s in [0.3, 0.5, 0.7] {
        let h = DimensionFunction::power(s).unwrap();
        let report = roundtrip_check(&h, 30_000, 10).unwrap();
        let regular_cell = report.cell == Some(cell(MeasureClass::One, MeasureClass::One));
        let seq = sequence_from_function(&h, 30_000).unwrap();
        let (lo, hi, _) = dimensions(&seq, 30_000).unwrap();
        let dims_ok = (lo - s).abs() <= 1e-2 && (hi - s).abs() <= 1e-2;
        let ok = report.passed && regular_cell && dims_ok;
        pass &= ok;
        notes.push(format!(
            "x^{s}: passed={} cell={} dims=({lo:.4},{hi:.4})",
            report.passed,
            report
                .cell
                .as_ref()
                .map_or("indeterminate".to_string(), |c| c.to_string())
        ));
    }
    verdict(9, "synthesis round-trip", pass, notes.join(" | "));
}

#[test]
fn criterion_10_geometry_properties() {
    let fixtures = vec![
        GapSequence::power_law(0.5).unwrap(),
        GapSequence::power_law(0.3).unwrap(),
        GapSequence::geometric((-1.0f64).exp(), 1.0).unwrap(),
        GapSequence::middle_third_blocks(),
        GapSequence::example_a_first(),
        GapSequence::example_a_second(),
        GapSequence::halved_of(GapSequence::power_law(0.5).unwrap()),
    ];

    // (a) seeded five-interval ball-mass bound, 200 samples each.
    let mut audit_ok = true;
    let mut worst_ratio = 0.0f64;
    for seq in &fixtures {
        let approx = CantorApproximation::build(seq, 9).unwrap();
        let audit = ball_mass_audit(&approx, 200, 0);
        audit_ok &= audit.passed && audit.checked >= 100;
        worst_ratio = worst_ratio.max(audit.max_ratio);
    }

    // (b) pointwise-ordered gauges give ordered oracle sums, with no slack.
    let pairs = [(0.3, 0.5), (0.5, 0.7), (0.4, 0.9)];
    let mut order_ok = true;
    for seq in &fixtures {
        let approx = CantorApproximation::build(seq, 8).unwrap();
        for (lo_exp, hi_exp) in &pairs {
            let small = DimensionFunction::power(*hi_exp).unwrap();
            let large = DimensionFunction::power(*lo_exp).unwrap();
            if approx.lengths().iter().all(|&l| l <= 1.0) {
                order_ok &=
                    cover_sum(&approx, &small).unwrap() <= cover_sum(&approx, &large).unwrap();
            }
            order_ok &= packing_sum(&approx, &small, 0.01).unwrap()
                <= packing_sum(&approx, &large, 0.01).unwrap();
        }
    }

    // (c) every battery classification keeps alpha <= beta.
    let gauges = standard_battery();
    let mut cells_ok = true;
    for seq in &fixtures {
        for row in battery(seq, &gauges, 100_000).unwrap() {
            match &row.cell {
                Some(c) => cells_ok &= c.is_ordered(),
                None => cells_ok &= row.indeterminate,
            }
        }
    }

    verdict(
        10,
        "geometry properties",
        audit_ok && order_ok && cells_ok,
        format!(
            "ball-mass audits pass (worst ratio {worst_ratio:.3}); \
             oracle sums respect gauge order exactly; cells ordered: {cells_ok}"
        ),
    );
}
