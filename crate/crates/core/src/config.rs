//! Spec-file parsing.
//!
//! Sequences are described by small line-oriented text files:
//!
//! ```text
//! # a quarter-power cut-out set
//! family = power_law
//! param.s = 0.25
//! ```
//!
//! Every line is `key = value`; blank lines and full-line `#` comments are
//! skipped. `family` selects the constructor; `param.<name>` lines supply its
//! numeric parameters. Two families take file references instead:
//! `family = explicit` needs `terms_file = <path>` (one decimal per line) and
//! `family = halved_of` needs `inner = <path>` naming another sequence spec.
//! Relative paths resolve against the directory of the referencing spec.
//!
//! The verbatim spec text is stored on the parsed sequence so reports can
//! echo it byte for byte.
//!
//! Gauges are described by compact constructor strings — `power(0.5)`,
//! `logrec(1,1)`, `powerlog(0.5,-1)`, `associated(<seq-spec-path>,100000)` —
//! used directly on the command line.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::gaps::GapSequence;
use crate::gauge::DimensionFunction;

/// Nested `halved_of` references deeper than this are rejected, which also
/// breaks accidental include cycles.
const MAX_INCLUDE_DEPTH: usize = 8;

const KNOWN_FAMILIES: &str = "power_law, geometric, middle_third_blocks, \
     example_a_first, example_a_second, explicit, halved_of";

const GAUGE_FORMS: &str =
    "power(<s>), logrec(<c>,<p>), powerlog(<s>,<t>), associated(<seq-spec-path>,<n>)";

/// Parse a sequence spec from text. `base_dir` anchors any relative
/// `terms_file` / `inner` paths. The text itself becomes the spec echo.
pub fn parse_sequence_spec(text: &str, base_dir: &Path) -> Result<GapSequence> {
    let mut seq = parse_at_depth(text, base_dir, 0)?;
    seq.set_spec_echo(text.to_string());
    Ok(seq)
}

/// Read and parse a sequence spec file; relative references resolve against
/// the file's own directory.
pub fn load_sequence_spec(path: &Path) -> Result<GapSequence> {
    load_at_depth(path, 0)
}

/// Parse a gauge spec string. `base_dir` anchors the sequence path inside
/// `associated(...)`.
pub fn parse_gauge_spec(text: &str, base_dir: &Path) -> Result<DimensionFunction> {
    let spec = text.trim();
    let (name, inner) = split_call(spec)?;
    match name {
        "power" => {
            let args = float_args(inner, 1, spec)?;
            DimensionFunction::power(args[0])
        }
        "logrec" => {
            let args = float_args(inner, 2, spec)?;
            DimensionFunction::log_reciprocal(args[0], args[1])
        }
        "powerlog" => {
            let args = float_args(inner, 2, spec)?;
            DimensionFunction::power_log(args[0], args[1])
        }
        "associated" => {
            let Some((path_part, count_part)) = inner.rsplit_once(',') else {
                return Err(Error::SpecParse(format!(
                    "associated gauge needs a sequence spec path and a tail count, got {spec:?}"
                )));
            };
            let count = parse_count(count_part.trim(), spec)?;
            let path = resolve(base_dir, path_part.trim());
            let seq = load_sequence_spec(&path)?;
            DimensionFunction::associated(&seq, count)
        }
        other => Err(Error::SpecParse(format!(
            "unknown gauge {other:?}; accepted forms: {GAUGE_FORMS}"
        ))),
    }
}

/// Spec text for an explicit sequence whose terms live in `terms_file`.
/// `comments` become `# `-prefixed header lines. Parsing the result (next to
/// the terms file) reproduces the sequence; the synthesis command uses this
/// to write its output.
pub fn render_explicit_spec(terms_file: &str, comments: &[String]) -> String {
    let mut out = String::new();
    for c in comments {
        out.push_str("# ");
        out.push_str(c);
        out.push('\n');
    }
    out.push_str("family = explicit\n");
    out.push_str(&format!("terms_file = {terms_file}\n"));
    out
}

fn load_at_depth(path: &Path, depth: usize) -> Result<GapSequence> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        Error::SpecParse(format!("cannot read spec file {}: {e}", path.display()))
    })?;
    let base_dir = path.parent().unwrap_or_else(|| Path::new("."));
    let mut seq = parse_at_depth(&text, base_dir, depth)
        .map_err(|e| prefix_parse_error(e, path))?;
    seq.set_spec_echo(text);
    Ok(seq)
}

fn prefix_parse_error(e: Error, path: &Path) -> Error {
    match e {
        Error::SpecParse(msg) => Error::SpecParse(format!("{}: {msg}", path.display())),
        other => other,
    }
}

fn parse_at_depth(text: &str, base_dir: &Path, depth: usize) -> Result<GapSequence> {
    if depth > MAX_INCLUDE_DEPTH {
        return Err(Error::SpecParse(format!(
            "sequence specs nest deeper than {MAX_INCLUDE_DEPTH} levels; \
             is there a reference cycle?"
        )));
    }
    let mut fields = parse_fields(text)?;
    let family = fields.family.clone();
    let seq = match family.as_str() {
        "power_law" => {
            let s = fields.require_float("param.s")?;
            let scale = fields.optional_float("param.scale")?.unwrap_or(1.0);
            GapSequence::power_law_scaled(s, scale)?
        }
        "geometric" => {
            let ratio = fields.require_float("param.ratio")?;
            let scale = fields.optional_float("param.scale")?.unwrap_or(1.0);
            GapSequence::geometric(ratio, scale)?
        }
        "middle_third_blocks" => GapSequence::middle_third_blocks(),
        "example_a_first" => GapSequence::example_a_first(),
        "example_a_second" => GapSequence::example_a_second(),
        "explicit" => {
            let rel = fields.require("terms_file")?;
            let path = resolve(base_dir, &rel);
            GapSequence::explicit(read_terms_file(&path)?)?
        }
        "halved_of" => {
            let rel = fields.require("inner")?;
            let path = resolve(base_dir, &rel);
            GapSequence::halved_of(load_at_depth(&path, depth + 1)?)
        }
        other => {
            return Err(Error::SpecParse(format!(
                "unknown family {other:?}; known families: {KNOWN_FAMILIES}"
            )))
        }
    };
    fields.expect_exhausted(&family)?;
    Ok(seq)
}

/// Key/value lines of one spec, with the `family` line pulled out.
struct SpecFields {
    family: String,
    /// (key, value, consumed) in file order.
    entries: Vec<(String, String, bool)>,
}

impl SpecFields {
    fn take(&mut self, key: &str) -> Option<String> {
        for (k, v, used) in &mut self.entries {
            if k == key && !*used {
                *used = true;
                return Some(v.clone());
            }
        }
        None
    }

    fn require(&mut self, key: &str) -> Result<String> {
        self.take(key).ok_or_else(|| {
            Error::SpecParse(format!("missing required entry `{key} = ...`"))
        })
    }

    fn require_float(&mut self, key: &str) -> Result<f64> {
        let raw = self.require(key)?;
        parse_float(&raw, key)
    }

    fn optional_float(&mut self, key: &str) -> Result<Option<f64>> {
        match self.take(key) {
            Some(raw) => parse_float(&raw, key).map(Some),
            None => Ok(None),
        }
    }

    fn expect_exhausted(&self, family: &str) -> Result<()> {
        if let Some((k, _, _)) = self.entries.iter().find(|(_, _, used)| !used) {
            return Err(Error::SpecParse(format!(
                "entry {k:?} is not accepted by family {family:?}"
            )));
        }
        Ok(())
    }
}

fn parse_fields(text: &str) -> Result<SpecFields> {
    let mut family: Option<String> = None;
    let mut entries: Vec<(String, String, bool)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::SpecParse(format!(
                "line {}: expected `key = value`, got {raw:?}",
                idx + 1
            )));
        };
        let key = key.trim();
        let value = value.trim();
        if key.is_empty() || value.is_empty() {
            return Err(Error::SpecParse(format!(
                "line {}: empty key or value in {raw:?}",
                idx + 1
            )));
        }
        if key == "family" {
            if family.replace(value.to_string()).is_some() {
                return Err(Error::SpecParse(format!(
                    "line {}: `family` given more than once",
                    idx + 1
                )));
            }
        } else {
            if entries.iter().any(|(k, _, _)| k == key) {
                return Err(Error::SpecParse(format!(
                    "line {}: entry {key:?} given more than once",
                    idx + 1
                )));
            }
            entries.push((key.to_string(), value.to_string(), false));
        }
    }
    let Some(family) = family else {
        return Err(Error::SpecParse(
            "spec has no `family = <name>` line".into(),
        ));
    };
    Ok(SpecFields { family, entries })
}

fn parse_float(raw: &str, key: &str) -> Result<f64> {
    raw.parse::<f64>().map_err(|_| {
        Error::SpecParse(format!("entry {key:?}: expected a number, got {raw:?}"))
    })
}

fn resolve(base_dir: &Path, rel: &str) -> PathBuf {
    let p = Path::new(rel);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base_dir.join(p)
    }
}

fn read_terms_file(path: &Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        Error::SpecParse(format!("cannot read terms file {}: {e}", path.display()))
    })?;
    let mut terms = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let v: f64 = line.parse().map_err(|_| {
            Error::SpecParse(format!(
                "{}: line {}: expected one decimal per line, got {raw:?}",
                path.display(),
                idx + 1
            ))
        })?;
        terms.push(v);
    }
    if terms.is_empty() {
        return Err(Error::SpecParse(format!(
            "terms file {} holds no values",
            path.display()
        )));
    }
    Ok(terms)
}

/// Split `name(args)` into the two pieces.
fn split_call(spec: &str) -> Result<(&str, &str)> {
    let Some(open) = spec.find('(') else {
        return Err(Error::SpecParse(format!(
            "gauge spec {spec:?} has no argument list; accepted forms: {GAUGE_FORMS}"
        )));
    };
    if !spec.ends_with(')') {
        return Err(Error::SpecParse(format!(
            "gauge spec {spec:?} does not end with `)`"
        )));
    }
    Ok((spec[..open].trim(), &spec[open + 1..spec.len() - 1]))
}

fn float_args(inner: &str, expect: usize, spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = inner.split(',').collect();
    if parts.len() != expect {
        return Err(Error::SpecParse(format!(
            "gauge spec {spec:?} needs {expect} argument(s), got {}",
            parts.len()
        )));
    }
    parts
        .iter()
        .map(|p| {
            p.trim().parse::<f64>().map_err(|_| {
                Error::SpecParse(format!(
                    "gauge spec {spec:?}: expected a number, got {p:?}"
                ))
            })
        })
        .collect()
}

fn parse_count(raw: &str, spec: &str) -> Result<u64> {
    if let Ok(n) = raw.parse::<u64>() {
        return Ok(n);
    }
    // Allow scientific shorthand such as 1e5 when it names an exact integer.
    if let Ok(x) = raw.parse::<f64>() {
        if x.fract() == 0.0 && (1.0..=9.0e15).contains(&x) {
            return Ok(x as u64);
        }
    }
    Err(Error::SpecParse(format!(
        "gauge spec {spec:?}: expected an integer count, got {raw:?}"
    )))
}
