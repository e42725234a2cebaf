//! Problem and channel files (schema version "1").
//!
//! ```json
//! {
//!   "schema_version": "1",
//!   "alphabets": {"U": 2, "V": 2, "X": 2, "Y": 2},
//!   "p_uv": [[0.1, 0.4], [0.4, 0.1]],
//!   "q_uv": [[0.375, 0.125], [0.125, 0.375]],
//!   "channel": [[0.8, 0.2], [0.2, 0.8]],
//!   "tau": 1.0,
//!   "v_factorization": {"e": 2, "z": 1}
//! }
//! ```
//!
//! Matrices are row-major; `p_uv[u][v]` and `channel[x][y]`. A channel file
//! only needs `schema_version` and `channel`.

use std::collections::BTreeMap;
use std::path::Path;

use htexp::exponents::HTInstance;
use htexp::{Alphabet, CondDist, Error, JointDist};
use serde::Deserialize;

use crate::CliError;

const SCHEMA_VERSION: &str = "1";
const BUILTIN_EXAMPLE1: &str = include_str!("../data/example1.json");

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct VFactor {
    e: usize,
    z: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProblemFile {
    schema_version: String,
    alphabets: BTreeMap<String, usize>,
    p_uv: Vec<Vec<f64>>,
    q_uv: Vec<Vec<f64>>,
    channel: Vec<Vec<f64>>,
    tau: f64,
    #[serde(default)]
    v_factorization: Option<VFactor>,
}

#[derive(Debug, Deserialize)]
struct ChannelFile {
    schema_version: String,
    channel: Vec<Vec<f64>>,
}

fn read_source(path: &str) -> Result<String, CliError> {
    if path == "builtin:example1" {
        return Ok(BUILTIN_EXAMPLE1.to_string());
    }
    std::fs::read_to_string(Path::new(path)).map_err(|e| CliError::Validation(format!("cannot read {path}: {e}")))
}

fn check_version(v: &str) -> Result<(), CliError> {
    if v != SCHEMA_VERSION {
        return Err(CliError::Validation(format!("schema_version must be \"{SCHEMA_VERSION}\", got \"{v}\"")));
    }
    Ok(())
}

fn channel_matrix(rows: Vec<Vec<f64>>, sizes: Option<(usize, usize)>) -> Result<CondDist, CliError> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if let Some((x, y)) = sizes {
        if (n, m) != (x, y) {
            return Err(CliError::Validation(format!("channel is {n}x{m} but alphabets declare |X|={x}, |Y|={y}")));
        }
    }
    Ok(CondDist::new(Alphabet::new("X", n)?, Alphabet::new("Y", m)?, rows)?)
}

/// Loads a problem from a path or `builtin:example1`.
pub fn load_problem(path: &str) -> Result<HTInstance, CliError> {
    let text = read_source(path)?;
    let f: ProblemFile =
        serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("{path}: invalid problem file: {e}")))?;
    check_version(&f.schema_version)?;
    let size = |name: &str| -> Result<usize, CliError> {
        f.alphabets.get(name).copied().ok_or_else(|| CliError::Validation(format!("alphabets must declare '{name}'")))
    };
    if let Some(k) = f.alphabets.keys().find(|k| !["U", "V", "X", "Y"].contains(&k.as_str())) {
        return Err(CliError::Validation(format!("unknown alphabet '{k}' (expected U, V, X, Y)")));
    }
    let (u, v) = (Alphabet::new("U", size("U")?)?, Alphabet::new("V", size("V")?)?);
    let p = JointDist::from_matrix(u.clone(), v.clone(), &f.p_uv).map_err(|e| tag("p_uv", e))?;
    let q = JointDist::from_matrix(u, v, &f.q_uv).map_err(|e| tag("q_uv", e))?;
    let ch = channel_matrix(f.channel, Some((size("X")?, size("Y")?))).map_err(|e| e.context("channel"))?;
    let inst = HTInstance::new(p, q, ch, f.tau)?;
    Ok(match f.v_factorization {
        Some(VFactor { e, z }) => inst.with_v_factor(e, z)?,
        None => inst,
    })
}

/// Loads the channel of a channel file or of a problem file.
pub fn load_channel(path: &str) -> Result<CondDist, CliError> {
    let text = read_source(path)?;
    let f: ChannelFile =
        serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("{path}: invalid channel file: {e}")))?;
    check_version(&f.schema_version)?;
    channel_matrix(f.channel, None).map_err(|e| e.context("channel"))
}

fn tag(field: &str, e: Error) -> CliError {
    CliError::from(e).context(field)
}
