//! JSON/CSV emission. Reports are `serde_json::Value` trees, whose maps are
//! sorted, so the same inputs always give the same bytes.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use htexp::exponents::ExponentReport;
use htexp::units::{nats_to_bits, Units};
use serde_json::{json, Map, Value};

use crate::CliError;

/// Finite numbers as JSON numbers, infinities as `"inf"` / `"-inf"`.
pub fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else if x.is_nan() {
        Value::from("nan")
    } else if x > 0.0 {
        Value::from("inf")
    } else {
        Value::from("-inf")
    }
}

pub fn units_label(u: Units) -> &'static str {
    match u {
        Units::Bits => "bits",
        Units::Nats => "nats",
    }
}

fn scaled_map(terms: &BTreeMap<String, f64>, units: Units) -> Value {
    Value::Object(terms.iter().map(|(k, &v)| (k.clone(), num(units.scale(v)))).collect())
}

/// Value, value in both units and term breakdown of an exponent.
pub fn exponent_body(rep: &ExponentReport, units: Units) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("scheme".into(), Value::from(rep.scheme.clone()));
    m.insert("bound".into(), json!(rep.bound));
    m.insert("feasible".into(), Value::from(rep.feasible));
    m.insert("value".into(), num(units.scale(rep.value_nats)));
    m.insert("value_nats".into(), num(rep.value_nats));
    m.insert("value_bits".into(), num(nats_to_bits(rep.value_nats)));
    m.insert("terms".into(), scaled_map(&rep.terms, units));
    m.insert("terms_nats".into(), scaled_map(&rep.terms, Units::Nats));
    m.insert("params".into(), Value::Object(rep.params.clone().into_iter().collect()));
    m.insert("search".into(), Value::Object(rep.search.clone().into_iter().collect()));
    m.insert("diagnostics".into(), json!(rep.diagnostics));
    m
}

/// Writes through a temporary file in the target directory so that a failed
/// run never leaves a partial file behind.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", path.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(bytes).map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

pub fn to_json_bytes(v: &Value) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(v).expect("values are serialisable");
    s.push('\n');
    s.into_bytes()
}

/// Sends a report to `out`, or to stdout when no path is given.
pub fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    match out {
        Some(p) => write_atomic(p, bytes),
        None => {
            std::io::stdout().write_all(bytes).map_err(|e| CliError::Io(format!("stdout: {e}")))?;
            Ok(())
        }
    }
}
