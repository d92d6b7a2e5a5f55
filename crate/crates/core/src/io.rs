//! Deterministic JSON: object keys sorted, every float written with 17
//! significant digits, non-finite floats as `null`.

use std::io::{self, Write};

use serde::Serialize;
use serde_json::ser::{CompactFormatter, Formatter, PrettyFormatter};

use crate::error::Result;

struct Fixed<F> {
    inner: F,
}

impl<F: Formatter> Formatter for Fixed<F> {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        if value.is_finite() {
            write!(writer, "{value:.16e}")
        } else {
            writer.write_all(b"null")
        }
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_array(w)
    }

    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_array(w)
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_array_value(w)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_object(w)
    }

    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_object(w)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_object_key(w, first)
    }

    fn end_object_key<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_object_key(w)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_object_value(w)
    }
}

fn write_with<F: Formatter, T: Serialize + ?Sized>(value: &T, formatter: F) -> Result<String> {
    // going through Value sorts keys (serde_json's map is ordered by key)
    let tree = serde_json::to_value(value)?;
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Fixed { inner: formatter });
    tree.serialize(&mut ser)?;
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}

pub fn to_canonical_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    write_with(value, CompactFormatter)
}

pub fn to_canonical_json_pretty<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut s = write_with(value, PrettyFormatter::with_indent(b"  "))?;
    s.push('\n');
    Ok(s)
}

/// A float with 17 significant digits, as used in JSON output.
pub fn format_float(value: f64) -> String {
    if value.is_finite() {
        format!("{value:.16e}")
    } else {
        "nan".into()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn keys_sorted_and_floats_fixed() {
        let v = json!({"b": 0.1, "a": [1, 2.5], "c": null});
        assert_eq!(
            to_canonical_json(&v).unwrap(),
            r#"{"a":[1,2.5000000000000000e0],"b":1.0000000000000001e-1,"c":null}"#
        );
    }

    #[test]
    fn round_trips_exactly() {
        for x in [0.1, 1.0 / 3.0, std::f64::consts::PI, -2.2250738585072014e-308, 1e300] {
            let s = to_canonical_json(&x).unwrap();
            let back: f64 = serde_json::from_str(&s).unwrap();
            assert_eq!(back, x);
        }
    }

    #[test]
    fn non_finite_is_null() {
        assert_eq!(to_canonical_json(&[f64::NAN]).unwrap(), "[null]");
    }

    #[test]
    fn pretty_is_deterministic() {
        let v = json!({"z": {"y": 1.0, "x": 2.0}});
        assert_eq!(to_canonical_json_pretty(&v).unwrap(), to_canonical_json_pretty(&v).unwrap());
        assert!(to_canonical_json_pretty(&v).unwrap().find("\"x\"") < to_canonical_json_pretty(&v).unwrap().find("\"y\""));
    }
}
