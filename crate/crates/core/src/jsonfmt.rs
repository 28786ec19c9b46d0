//! Deterministic JSON writing.
//!
//! All floats are emitted with 17 significant digits (`{:.16e}`), which
//! round-trips every f64 exactly and keeps repeated runs byte-identical.
//! Keys keep their insertion order. Arrays that contain only numbers are
//! kept on one line so matrices stay readable.

use serde_json::Value;

pub fn to_string(value: &Value) -> String {
    let mut out = String::new();
    write_value(&mut out, value, 0);
    out
}

fn write_value(out: &mut String, value: &Value, indent: usize) {
    match value {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => write_number(out, n),
        Value::String(s) => {
            out.push_str(&serde_json::to_string(s).expect("string serializes"));
        }
        Value::Array(items) => write_array(out, items, indent),
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            out.push_str("{\n");
            for (i, (key, item)) in map.iter().enumerate() {
                push_indent(out, indent + 1);
                out.push_str(&serde_json::to_string(key).expect("key serializes"));
                out.push_str(": ");
                write_value(out, item, indent + 1);
                if i + 1 < map.len() {
                    out.push(',');
                }
                out.push('\n');
            }
            push_indent(out, indent);
            out.push('}');
        }
    }
}

fn write_array(out: &mut String, items: &[Value], indent: usize) {
    if items.is_empty() {
        out.push_str("[]");
        return;
    }
    if items.iter().all(|v| matches!(v, Value::Number(_))) {
        out.push('[');
        for (i, item) in items.iter().enumerate() {
            if i > 0 {
                out.push_str(", ");
            }
            write_value(out, item, indent);
        }
        out.push(']');
        return;
    }
    out.push_str("[\n");
    for (i, item) in items.iter().enumerate() {
        push_indent(out, indent + 1);
        write_value(out, item, indent + 1);
        if i + 1 < items.len() {
            out.push(',');
        }
        out.push('\n');
    }
    push_indent(out, indent);
    out.push(']');
}

fn write_number(out: &mut String, n: &serde_json::Number) {
    if let Some(u) = n.as_u64() {
        out.push_str(&u.to_string());
    } else if let Some(i) = n.as_i64() {
        out.push_str(&i.to_string());
    } else {
        let x = n.as_f64().expect("finite float");
        out.push_str(&format!("{x:.16e}"));
    }
}

fn push_indent(out: &mut String, indent: usize) {
    for _ in 0..indent {
        out.push_str("  ");
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn floats_round_trip_exactly() {
        for x in [
            0.0,
            1.0,
            0.25,
            -0.5,
            1.0 / 3.0,
            std::f64::consts::PI,
            6.02e23,
            -1.7976931348623157e308,
            5e-324,
        ] {
            let text = to_string(&json!(x));
            let back: f64 = serde_json::from_str(&text).unwrap();
            assert_eq!(back.to_bits(), x.to_bits(), "{text}");
        }
    }

    #[test]
    fn integers_stay_integers() {
        assert_eq!(to_string(&json!([2, 3])), "[2, 3]");
    }

    #[test]
    fn objects_are_stable() {
        let v = json!({"b": 1, "a": [1.0, 2.0]});
        let once = to_string(&v);
        let twice = to_string(&v);
        assert_eq!(once, twice);
        assert!(once.contains("\"a\": [1.0000000000000000e0, 2.0000000000000000e0]"));
    }
}
