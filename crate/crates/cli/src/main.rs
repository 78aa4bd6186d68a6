//! `cantordim` — batch front door for cut-out set dimension analysis.
//!
//! Every subcommand reads sequence/gauge specs, runs one analysis from the
//! core library, and prints a machine-readable report (JSON, or CSV where a
//! table is the natural shape). Reports are deterministic for a fixed
//! command line: fixed field order, fixed float formatting, seeded sampling.
//!
//! Exit codes: 0 success; 1 usage error (bad flags, unreadable or
//! unparsable spec files); 2 validation failure (a spec that parses but
//! fails its semantic checks, or inputs that fail an operation's
//! preconditions); 3 indeterminate classification.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use cantordim_core::{
    ball_mass_audit, battery, classify_at, dimensions, load_sequence_spec, parse_gauge_spec,
    render_explicit_spec, sequence_equivalent, sequence_from_function, standard_battery,
    tail_equivalent, tail_table_csv, four_condition_crosscheck, to_json_string,
    weak_tail_equivalent, BallMassAudit, BatteryRow, CantorApproximation, ClassificationReport,
    CrosscheckReport, DimensionDiagnostics, DimensionFunction, EquivalenceVerdict, Error,
    GapSequence, RoundtripReport, ValidationReport,
};

const EXIT_USAGE: u8 = 1;
const EXIT_VALIDATION: u8 = 2;
const EXIT_INDETERMINATE: u8 = 3;

#[derive(Parser)]
#[command(
    name = "cantordim",
    version,
    about = "Builds cut-out sets from gap-length specs, estimates their Hausdorff and \
             packing dimensions, classifies gauge functions against them, and decides \
             tail-based equivalences between sequences.",
    after_help = "Exit codes: 0 success, 1 usage error, 2 validation failure, \
                  3 indeterminate classification.\n\
                  CANTORDIM_THREADS caps the worker-thread pool."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a sequence spec: positivity, monotone gaps, tail consistency.
    Validate {
        /// Sequence spec file.
        spec: PathBuf,
        /// Largest index probed by the checks.
        #[arg(long, default_value_t = 100_000)]
        max_n: u64,
    },
    /// Build the finite-depth interval tree and audit its geometry.
    Build {
        /// Sequence spec file.
        spec: PathBuf,
        /// Generations to build (the tree has 2^depth leaf intervals).
        #[arg(long)]
        depth: u32,
        /// Emit an interval table instead of the JSON summary.
        #[arg(long, value_enum)]
        dump: Option<DumpFormat>,
        /// Seed for the ball-mass audit sampler.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Sample count for the ball-mass audit.
        #[arg(long, default_value_t = 200)]
        samples: u32,
    },
    /// Estimate Hausdorff and packing dimensions from the tail formula.
    Dims {
        /// Sequence spec file.
        spec: PathBuf,
        /// Largest tail index sampled.
        #[arg(long, default_value_t = 1_000_000)]
        max_n: u64,
    },
    /// Classify one (sequence, gauge) pair into its partition cell.
    Classify {
        /// Sequence spec file.
        spec: PathBuf,
        /// Gauge spec, e.g. "power(0.5)" or "associated(seq.spec,100000)".
        #[arg(long)]
        gauge: String,
        /// Top depth of the covering/packing oracle ladder.
        #[arg(long, default_value_t = 12)]
        depth: u32,
        /// Largest tail index sampled.
        #[arg(long, default_value_t = 100_000)]
        max_n: u64,
    },
    /// Partition table: one row per gauge against one sequence.
    Table {
        /// Sequence spec file.
        spec: PathBuf,
        /// Semicolon-separated gauge specs, or "standard" for the built-in
        /// battery (gauge specs contain commas, hence the semicolon).
        #[arg(long, default_value = "standard")]
        gauges: String,
        /// Largest tail index sampled.
        #[arg(long, default_value_t = 100_000)]
        max_n: u64,
    },
    /// Decide the three equivalence relations and cross-check the
    /// four-condition matrix on a pair of sequences.
    Compare {
        /// First sequence spec file.
        first: PathBuf,
        /// Second sequence spec file.
        second: PathBuf,
        /// Largest multiplier tried for the weak-tail witness search.
        #[arg(long, default_value_t = 64)]
        jmax: u64,
        /// Largest tail index probed.
        #[arg(long, default_value_t = 100_000)]
        max_n: u64,
    },
    /// Invert a gauge into a gap sequence and write it as an explicit spec.
    Synthesize {
        /// Target gauge spec, e.g. "power(0.7)".
        #[arg(long)]
        gauge: String,
        /// Number of gap terms to synthesize.
        #[arg(long)]
        count: u64,
        /// Oracle depth for the round-trip classification.
        #[arg(long, default_value_t = 10)]
        depth: u32,
        /// Output base path: writes <out>.spec and <out>.terms.
        #[arg(long, default_value = "synthesized")]
        out: PathBuf,
    },
    /// CSV of tail functionals for plotting.
    Export {
        /// Sequence spec file.
        spec: PathBuf,
        /// Gauge spec evaluated along the tail scales.
        #[arg(long)]
        gauge: String,
        /// Largest tail index tabulated.
        #[arg(long, default_value_t = 100_000)]
        max_n: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum DumpFormat {
    Csv,
}

fn main() -> ExitCode {
    init_thread_pool();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // --help/--version are successful outcomes, not usage errors.
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_USAGE,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}

/// Cap the worker pool from CANTORDIM_THREADS (ignored when unset, empty,
/// or unparsable; a pool that was already initialized stays as it is).
fn init_thread_pool() {
    if let Ok(raw) = std::env::var("CANTORDIM_THREADS") {
        if let Ok(n) = raw.trim().parse::<usize>() {
            if n >= 1 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
}

/// Map library errors to the exit-code contract: spec files that cannot be
/// read or parsed are usage errors; everything else that surfaces here is an
/// input failing an operation's semantic checks.
fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::SpecParse(_) | Error::Io(_) => EXIT_USAGE,
        _ => EXIT_VALIDATION,
    }
}

fn run(command: Command) -> Result<ExitCode, Error> {
    match command {
        Command::Validate { spec, max_n } => cmd_validate(&spec, max_n),
        Command::Build {
            spec,
            depth,
            dump,
            seed,
            samples,
        } => cmd_build(&spec, depth, dump, seed, samples),
        Command::Dims { spec, max_n } => cmd_dims(&spec, max_n),
        Command::Classify {
            spec,
            gauge,
            depth,
            max_n,
        } => cmd_classify(&spec, &gauge, depth, max_n),
        Command::Table {
            spec,
            gauges,
            max_n,
        } => cmd_table(&spec, &gauges, max_n),
        Command::Compare {
            first,
            second,
            jmax,
            max_n,
        } => cmd_compare(&first, &second, jmax, max_n),
        Command::Synthesize {
            gauge,
            count,
            depth,
            out,
        } => cmd_synthesize(&gauge, count, depth, &out),
        Command::Export { spec, gauge, max_n } => cmd_export(&spec, &gauge, max_n),
    }
}

/// Parse a gauge spec given on the command line; relative paths inside it
/// (the associated form references a sequence spec file) resolve against
/// the current directory.
fn gauge_from_arg(text: &str) -> Result<DimensionFunction, Error> {
    parse_gauge_spec(text, Path::new("."))
}

fn print_json<T: Serialize>(value: &T) {
    print!("{}", to_json_string(value));
}

#[derive(Serialize)]
struct ValidateOutput {
    sequence_spec: String,
    all_ok: bool,
    report: ValidationReport,
}

fn cmd_validate(spec: &Path, max_n: u64) -> Result<ExitCode, Error> {
    let seq = load_sequence_spec(spec)?;
    let report = seq.validate(max_n);
    let all_ok = report.all_ok();
    print_json(&ValidateOutput {
        sequence_spec: seq.label(),
        all_ok,
        report,
    });
    Ok(if all_ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_VALIDATION)
    })
}

#[derive(Serialize)]
struct BuildOutput {
    sequence_spec: String,
    depth: u32,
    intervals: usize,
    diameter: f64,
    longest_interval: f64,
    shortest_interval: f64,
    ball_mass_audit: BallMassAudit,
}

fn cmd_build(
    spec: &Path,
    depth: u32,
    dump: Option<DumpFormat>,
    seed: u64,
    samples: u32,
) -> Result<ExitCode, Error> {
    let seq = load_sequence_spec(spec)?;
    let approx = CantorApproximation::build(&seq, depth)?;
    match dump {
        Some(DumpFormat::Csv) => {
            print!("{}", interval_table_csv(&seq, depth)?);
            Ok(ExitCode::SUCCESS)
        }
        None => {
            let lengths = approx.lengths();
            let audit = ball_mass_audit(&approx, samples, seed);
            let passed = audit.passed;
            print_json(&BuildOutput {
                sequence_spec: seq.label(),
                depth,
                intervals: approx.num_intervals(),
                diameter: approx.diameter(),
                longest_interval: lengths.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                shortest_interval: lengths.iter().copied().fold(f64::INFINITY, f64::min),
                ball_mass_audit: audit,
            });
            Ok(if passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_VALIDATION)
            })
        }
    }
}

/// One row per interval of every generation 0..=depth, in heap order:
/// interval m splits into 2m and 2m+1, so generation g holds heap indices
/// 2^g .. 2^{g+1}-1.
fn interval_table_csv(seq: &GapSequence, depth: u32) -> Result<String, Error> {
    let mut out = String::from("generation,heap_index,left,length\n");
    for g in 0..=depth {
        let approx = CantorApproximation::build(seq, g)?;
        let base = 1u64 << g;
        for (j, (left, length)) in approx.intervals().enumerate() {
            out.push_str(&format!(
                "{g},{m},{left:.12e},{length:.12e}\n",
                m = base + j as u64
            ));
        }
    }
    Ok(out)
}

#[derive(Serialize)]
struct DimsOutput {
    sequence_spec: String,
    max_n: u64,
    #[serde(rename = "dim_H")]
    dim_h: f64,
    #[serde(rename = "dim_P")]
    dim_p: f64,
    diagnostics: DimensionDiagnostics,
}

fn cmd_dims(spec: &Path, max_n: u64) -> Result<ExitCode, Error> {
    let seq = load_sequence_spec(spec)?;
    let (dim_h, dim_p, diagnostics) = dimensions(&seq, max_n)?;
    print_json(&DimsOutput {
        sequence_spec: seq.label(),
        max_n,
        dim_h,
        dim_p,
        diagnostics,
    });
    Ok(ExitCode::SUCCESS)
}

fn cmd_classify(spec: &Path, gauge: &str, depth: u32, max_n: u64) -> Result<ExitCode, Error> {
    let seq = load_sequence_spec(spec)?;
    let h = gauge_from_arg(gauge)?;
    let report: ClassificationReport = classify_at(&seq, &h, max_n, depth)?;
    let indeterminate = report.indeterminate;
    print_json(&report);
    Ok(if indeterminate {
        ExitCode::from(EXIT_INDETERMINATE)
    } else {
        ExitCode::SUCCESS
    })
}

#[derive(Serialize)]
struct TableOutput {
    sequence_spec: String,
    max_n: u64,
    rows: Vec<BatteryRow>,
}

fn cmd_table(spec: &Path, gauges: &str, max_n: u64) -> Result<ExitCode, Error> {
    let seq = load_sequence_spec(spec)?;
    let battery_gauges = if gauges.trim() == "standard" {
        standard_battery()
    } else {
        gauges
            .split(';')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(gauge_from_arg)
            .collect::<Result<Vec<_>, _>>()?
    };
    if battery_gauges.is_empty() {
        return Err(Error::SpecParse(
            "the gauge list holds no gauge specs".into(),
        ));
    }
    let rows = battery(&seq, &battery_gauges, max_n)?;
    let any_indeterminate = rows.iter().any(|r| r.indeterminate);
    print_json(&TableOutput {
        sequence_spec: seq.label(),
        max_n,
        rows,
    });
    Ok(if any_indeterminate {
        ExitCode::from(EXIT_INDETERMINATE)
    } else {
        ExitCode::SUCCESS
    })
}

#[derive(Serialize)]
struct CompareOutput {
    first: String,
    second: String,
    max_n: u64,
    jmax: u64,
    sequence: EquivalenceVerdict,
    tail: EquivalenceVerdict,
    weak_tail: EquivalenceVerdict,
    crosscheck: CrosscheckReport,
}

fn cmd_compare(first: &Path, second: &Path, jmax: u64, max_n: u64) -> Result<ExitCode, Error> {
    let a = load_sequence_spec(first)?;
    let b = load_sequence_spec(second)?;
    let report = CompareOutput {
        first: a.label(),
        second: b.label(),
        max_n,
        jmax,
        sequence: sequence_equivalent(&a, &b, max_n)?,
        tail: tail_equivalent(&a, &b, max_n)?,
        weak_tail: weak_tail_equivalent(&a, &b, max_n, jmax)?,
        crosscheck: four_condition_crosscheck(&a, &b, &standard_battery(), max_n, jmax)?,
    };
    let indeterminate = report.crosscheck.indeterminate;
    print_json(&report);
    Ok(if indeterminate {
        ExitCode::from(EXIT_INDETERMINATE)
    } else {
        ExitCode::SUCCESS
    })
}

#[derive(Serialize)]
struct SynthesizeOutput {
    gauge: String,
    count: u64,
    spec_path: String,
    terms_path: String,
    /// Absent when the confirmation could not run at this count (for
    /// example, too few grid points to classify); see `roundtrip_note`.
    roundtrip: Option<RoundtripReport>,
    roundtrip_note: Option<String>,
}

fn cmd_synthesize(gauge: &str, count: u64, depth: u32, out: &Path) -> Result<ExitCode, Error> {
    let h = gauge_from_arg(gauge)?;
    let seq = sequence_from_function(&h, count)?;
    let spec_path = out.with_extension("spec");
    let terms_path = out.with_extension("terms");

    let mut terms_text = String::new();
    for n in 1..=count {
        // Display round-trips f64 exactly, so the written spec reproduces
        // the synthesized gaps bit for bit.
        terms_text.push_str(&format!("{}\n", seq.term(n)?));
    }
    std::fs::write(&terms_path, terms_text)?;

    // The spec references its terms file by name: the two files sit side by
    // side and relative references resolve against the spec's directory.
    let terms_name = terms_path
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .ok_or_else(|| Error::InvalidParameter("output path has no file name".into()))?;
    let comments = [
        format!("gap sequence realizing the gauge {}", h.label()),
        format!("terms: {count}"),
    ];
    std::fs::write(&spec_path, render_explicit_spec(&terms_name, &comments))?;

    // The emission above is the command's contract; the round-trip
    // confirmation is evidence. When it cannot run at this count (too few
    // grid points, say), the files stand and the note says why. A
    // confirmation that runs and fails is a real validation failure.
    let (roundtrip, roundtrip_note, code) =
        match cantordim_core::roundtrip_check(&h, count, depth) {
            Ok(report) => {
                let code = if report.passed {
                    ExitCode::SUCCESS
                } else {
                    ExitCode::from(EXIT_VALIDATION)
                };
                (Some(report), None, code)
            }
            Err(err) => (
                None,
                Some(format!("confirmation unavailable: {err}")),
                ExitCode::SUCCESS,
            ),
        };
    print_json(&SynthesizeOutput {
        gauge: h.label().to_string(),
        count,
        spec_path: spec_path.to_string_lossy().into_owned(),
        terms_path: terms_path.to_string_lossy().into_owned(),
        roundtrip,
        roundtrip_note,
    });
    Ok(code)
}

fn cmd_export(spec: &Path, gauge: &str, max_n: u64) -> Result<ExitCode, Error> {
    let seq = load_sequence_spec(spec)?;
    let h = gauge_from_arg(gauge)?;
    print!("{}", tail_table_csv(&seq, &h, max_n)?);
    Ok(ExitCode::SUCCESS)
}
