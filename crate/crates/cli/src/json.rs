//! Minimal deterministic JSON emitter.
//!
//! Reports must be byte-identical across runs and parallelism degrees, and
//! every float must round-trip exactly, so objects keep insertion order and
//! numbers are printed with 17 significant digits in a fixed scientific
//! format.

/// A float with 17 significant digits; `-0.0` collapses to `0.0` so equal
/// values always print identically.
pub fn fmt_f64(x: f64) -> String {
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x:.16e}")
}

#[derive(Debug, Clone)]
pub enum Json {
    Null,
    Bool(bool),
    Num(f64),
    Int(i64),
    Str(String),
    Arr(Vec<Json>),
    Obj(Vec<(&'static str, Json)>),
}

impl Json {
    pub fn obj() -> Self {
        Json::Obj(Vec::new())
    }

    pub fn push(&mut self, key: &'static str, value: Json) -> &mut Self {
        match self {
            Json::Obj(fields) => fields.push((key, value)),
            _ => panic!("push on non-object"),
        }
        self
    }

    /// `{ "value": v, "est_error": e }`: the pairing used for every
    /// quadrature-derived number in a report.
    pub fn value_with_error(value: f64, est_error: f64) -> Json {
        let mut o = Json::obj();
        o.push("value", Json::Num(value));
        o.push("est_error", Json::Num(est_error));
        o
    }

    /// `{ "value": v, "tolerance": t }`: the pairing for residuals judged
    /// against a fixed threshold.
    pub fn value_with_tolerance(value: f64, tolerance: f64) -> Json {
        let mut o = Json::obj();
        o.push("value", Json::Num(value));
        o.push("tolerance", Json::Num(tolerance));
        o
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        self.write(&mut out, 0);
        out.push('\n');
        out
    }

    fn write(&self, out: &mut String, indent: usize) {
        match self {
            Json::Null => out.push_str("null"),
            Json::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
            Json::Num(x) => {
                if x.is_finite() {
                    out.push_str(&fmt_f64(*x));
                } else {
                    out.push_str("null");
                }
            }
            Json::Int(i) => out.push_str(&i.to_string()),
            Json::Str(s) => write_escaped(out, s),
            Json::Arr(items) => {
                if items.is_empty() {
                    out.push_str("[]");
                    return;
                }
                out.push('[');
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    newline(out, indent + 1);
                    item.write(out, indent + 1);
                }
                newline(out, indent);
                out.push(']');
            }
            Json::Obj(fields) => {
                if fields.is_empty() {
                    out.push_str("{}");
                    return;
                }
                out.push('{');
                for (i, (key, value)) in fields.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    newline(out, indent + 1);
                    write_escaped(out, key);
                    out.push_str(": ");
                    value.write(out, indent + 1);
                }
                newline(out, indent);
                out.push('}');
            }
        }
    }
}

fn newline(out: &mut String, indent: usize) {
    out.push('\n');
    for _ in 0..indent {
        out.push_str("  ");
    }
}

fn write_escaped(out: &mut String, s: &str) {
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 => {
                out.push_str(&format!("\\u{:04x}", c as u32));
            }
            c => out.push(c),
        }
    }
    out.push('"');
}
