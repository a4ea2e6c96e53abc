//! Canonical JSON text and file helpers.
//!
//! Every artifact this crate writes goes through [`canonical_string`]:
//! object keys in declaration order, two-space indentation, and floats
//! printed with 17 significant digits so that parse → write is the
//! identity on files the crate produced. Readers re-check shape
//! invariants that the serde derive alone cannot enforce.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

use crate::error::Error;
use crate::instances::{Corpus, Instance};
use crate::Result;

/// Deterministic JSON text for any serializable value, with a trailing
/// newline. Integers print plain; every other number prints as a
/// 17-significant-digit exponential, which round-trips f64 exactly.
pub fn canonical_string<T: Serialize>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value)?;
    let mut out = String::new();
    emit(&v, 0, &mut out);
    out.push('\n');
    Ok(out)
}

fn emit(v: &Value, depth: usize, out: &mut String) {
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => {
            let _ = write!(out, "{b}");
        }
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                let _ = write!(out, "{i}");
            } else if let Some(u) = n.as_u64() {
                let _ = write!(out, "{u}");
            } else {
                let _ = write!(out, "{:.16e}", n.as_f64().expect("finite JSON number"));
            }
        }
        Value::String(s) => {
            out.push_str(&serde_json::to_string(s).expect("string serialization"));
        }
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                out.push_str(if i == 0 { "\n" } else { ",\n" });
                indent(depth + 1, out);
                emit(item, depth + 1, out);
            }
            out.push('\n');
            indent(depth, out);
            out.push(']');
        }
        Value::Object(fields) => {
            if fields.is_empty() {
                out.push_str("{}");
                return;
            }
            out.push('{');
            for (i, (key, val)) in fields.iter().enumerate() {
                out.push_str(if i == 0 { "\n" } else { ",\n" });
                indent(depth + 1, out);
                out.push_str(&serde_json::to_string(key).expect("string serialization"));
                out.push_str(": ");
                emit(val, depth + 1, out);
            }
            out.push('\n');
            indent(depth, out);
            out.push('}');
        }
    }
}

fn indent(depth: usize, out: &mut String) {
    for _ in 0..depth {
        out.push_str("  ");
    }
}

fn io_with_path(path: &Path, e: std::io::Error) -> Error {
    Error::Io(std::io::Error::new(
        e.kind(),
        format!("{}: {e}", path.display()),
    ))
}

/// Write a value as canonical JSON.
pub fn write_json_file<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let path = path.as_ref();
    let text = canonical_string(value)?;
    fs::write(path, text).map_err(|e| io_with_path(path, e))
}

/// Parse a JSON file. Parse failures keep serde_json's line and column;
/// read failures name the file.
pub fn read_json_file<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| io_with_path(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

/// Load an instance and re-check its redundant fields (arm count, shared
/// horizon). Curve-level soundness is a separate question for
/// [`Instance::validate`]; a parseable but non-concave table still loads.
pub fn load_instance(path: impl AsRef<Path>) -> Result<Instance> {
    let inst: Instance = read_json_file(path)?;
    inst.check_shape()?;
    Ok(inst)
}

/// Load a corpus and check weights and instance shapes.
pub fn load_corpus(path: impl AsRef<Path>) -> Result<Corpus> {
    let corpus: Corpus = read_json_file(path)?;
    corpus.check()?;
    Ok(corpus)
}
