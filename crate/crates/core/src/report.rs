//! Deterministic JSON rendering for reports.
//!
//! Every command's output flows through [`to_json_string`]: fields appear in
//! struct-declaration order, floats are rendered with exactly twelve
//! significant digits, non-finite values become `null`, and integers print
//! verbatim. The same report value therefore always renders to the same
//! bytes.

use serde::Serialize;
use serde_json::Value;

/// Render any serializable value as deterministic two-space-indented JSON.
pub fn to_json_string<T: Serialize>(value: &T) -> String {
    let v = serde_json::to_value(value).expect("report types serialize to JSON values");
    let mut out = String::new();
    write_value(&mut out, &v, 0);
    out.push('\n');
    out
}

/// Twelve significant digits in scientific form; non-finite renders as the
/// JSON literal `null`. Zero (either sign) is `0.0`.
pub fn format_float(x: f64) -> String {
    if !x.is_finite() {
        return "null".into();
    }
    if x == 0.0 {
        return "0.0".into();
    }
    format!("{x:.11e}")
}

fn write_value(out: &mut String, v: &Value, indent: usize) {
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            // serde_json remembers whether the source was an integer; floats
            // that happen to be integral still go through float formatting.
            if let Some(i) = n.as_i64() {
                out.push_str(&i.to_string());
            } else if let Some(u) = n.as_u64() {
                out.push_str(&u.to_string());
            } else {
                out.push_str(&format_float(n.as_f64().unwrap_or(f64::NAN)));
            }
        }
        Value::String(s) => {
            out.push_str(&serde_json::to_string(s).expect("strings serialize"))
        }
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                newline_indent(out, indent + 1);
                write_value(out, item, indent + 1);
            }
            newline_indent(out, indent);
            out.push(']');
        }
        Value::Object(fields) => {
            if fields.is_empty() {
                out.push_str("{}");
                return;
            }
            out.push('{');
            for (i, (key, val)) in fields.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                newline_indent(out, indent + 1);
                out.push_str(&serde_json::to_string(key).expect("keys serialize"));
                out.push_str(": ");
                write_value(out, val, indent + 1);
            }
            newline_indent(out, indent);
            out.push('}');
        }
    }
}

fn newline_indent(out: &mut String, indent: usize) {
    out.push('\n');
    for _ in 0..indent {
        out.push_str("  ");
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize)]
    struct Sample {
        zebra: u64,
        apple: f64,
        nested: Inner,
        list: Vec<f64>,
        text: String,
        flag: bool,
        missing: Option<f64>,
    }

    #[derive(Serialize)]
    struct Inner {
        beta: f64,
        alpha: i64,
    }

    fn sample() -> Sample {
        Sample {
            zebra: 3,
            apple: 0.6309297535714574,
            nested: Inner {
                beta: f64::NAN,
                alpha: -2,
            },
            list: vec![1.0, f64::INFINITY, 5.8207660912620374e-11],
            text: "say \"hi\"\n".into(),
            flag: true,
            missing: None,
        }
    }

    #[test]
    fn fields_keep_declaration_order_and_floats_get_twelve_digits() {
        let text = to_json_string(&sample());
        let zebra = text.find("\"zebra\"").unwrap();
        let apple = text.find("\"apple\"").unwrap();
        let beta = text.find("\"beta\"").unwrap();
        let alpha = text.find("\"alpha\"").unwrap();
        assert!(zebra < apple, "{text}");
        assert!(beta < alpha, "{text}");
        assert!(text.contains("\"apple\": 6.30929753571e-1"), "{text}");
        assert!(text.contains("\"beta\": null"), "{text}");
        assert!(text.contains("1.00000000000e0"), "{text}");
        assert!(text.contains("null,"), "{text}"); // the infinity in the list
        assert!(text.contains("5.82076609126e-11"), "{text}");
        assert!(text.contains("\"zebra\": 3"), "{text}");
        assert!(text.contains("\"alpha\": -2"), "{text}");
        assert!(text.contains("\"missing\": null"), "{text}");
        assert!(text.contains("say \\\"hi\\\"\\n"), "{text}");
        assert!(text.ends_with("}\n"), "{text:?}");
    }

    #[test]
    fn rendering_is_reproducible_and_reparses() {
        let a = to_json_string(&sample());
        let b = to_json_string(&sample());
        assert_eq!(a, b);
        let v: Value = serde_json::from_str(&a).unwrap();
        assert_eq!(v["zebra"], Value::from(3));
        assert!((v["apple"].as_f64().unwrap() - 0.6309297535714574).abs() < 1e-11);
    }

    #[test]
    fn float_formatting_edge_cases() {
        assert_eq!(format_float(0.0), "0.0");
        assert_eq!(format_float(-0.0), "0.0");
        assert_eq!(format_float(f64::NAN), "null");
        assert_eq!(format_float(f64::NEG_INFINITY), "null");
        assert_eq!(format_float(1.0), "1.00000000000e0");
        assert_eq!(format_float(-0.25), "-2.50000000000e-1");
    }

    #[test]
    fn empty_containers_render_compactly() {
        #[derive(Serialize)]
        struct Empties {
            list: Vec<f64>,
            map: std::collections::BTreeMap<String, f64>,
        }
        let text = to_json_string(&Empties {
            list: vec![],
            map: Default::default(),
        });
        assert!(text.contains("\"list\": []"), "{text}");
        assert!(text.contains("\"map\": {}"), "{text}");
    }
}
