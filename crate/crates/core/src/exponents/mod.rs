//! Achievable type-II error exponents.
//!
//! | Scheme | Function | Kind of value |
//! |--------|----------|---------------|
//! | separation (quantise-bin + red-alert channel code) | [`shtcc_exponent`] | search lower bound |
//! | hybrid coding, matched bandwidth | [`jhtcc_exponent`] | search lower bound |
//! | uncoded transmission `X = U` | [`uncoded_exponent`] | exact for the scheme |
//! | one-bit scheme | [`onebit_exponent`] | exact for the scheme |
//! | testing against conditional independence | [`taci_exponent`] | grid optimum of the optimal exponent |
//! | zero-capacity channel | [`zero_capacity_exponent`] | optimal exponent |
//! | single-letter multi-letter bound (`k = n = 1`) | [`multiletter_k1`] | grid lower bound |
//!
//! Axis names are fixed throughout: `U` (observer), `V` (side information),
//! `W` (auxiliary), `S` (time sharing), `X`/`Y` (channel input/output).

use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::Value;

use crate::info::kl_joint;
use crate::prob::{CondDist, JointDist};
use crate::units::nats_to_bits;
use crate::{Error, Result};

mod example1;
mod jhtcc;
mod multiletter;
mod onebit;
mod search;
mod shtcc;
mod taci;

pub use example1::{
    example1_instance, example1_report, fig2_curve, Example1Report, Fig2Point, Landmark, P0 as EXAMPLE1_P0, P1 as EXAMPLE1_P1,
    Q as EXAMPLE1_Q,
};
pub use jhtcc::{jhtcc_exponent, jhtcc_objective, HybridPoint, JhtccTerms};
pub use multiletter::multiletter_k1;
pub use onebit::{beta0, onebit_exponent, uncoded_exponent, zero_capacity_exponent};
pub use shtcc::{shtcc_exponent, shtcc_objective, ShtccTerms};
pub use taci::{taci_exponent, taci_instance};

/// The testing problem: `H0: (U,V) ~ P_UV`, `H1: (U,V) ~ Q_UV`, channel
/// `P_{Y|X}`, and `tau` channel uses per source letter.
#[derive(Debug, Clone, PartialEq)]
pub struct HTInstance {
    pub p_uv: JointDist,
    pub q_uv: JointDist,
    pub channel: CondDist,
    pub tau: f64,
    /// `(|E|, |Z|)` when `V = (E, Z)` with letter index `e * |Z| + z`.
    pub v_factor: Option<(usize, usize)>,
}

impl HTInstance {
    pub fn new(p_uv: JointDist, q_uv: JointDist, channel: CondDist, tau: f64) -> Result<Self> {
        if p_uv.axis_names() != ["U", "V"] {
            return Err(Error::Dimension(format!("P_UV must have axes (U,V), got {:?}", p_uv.axis_names())));
        }
        p_uv.same_axes(&q_uv)?;
        if !(tau.is_finite() && tau >= 0.0) {
            return Err(Error::Domain(format!("bandwidth ratio {tau} must be finite and nonnegative")));
        }
        let channel = channel.relabel("X", "Y");
        Ok(Self { p_uv, q_uv, channel, tau, v_factor: None })
    }

    pub fn with_v_factor(mut self, e: usize, z: usize) -> Result<Self> {
        if e * z != self.v_size() {
            return Err(Error::Dimension(format!("|E| * |Z| = {} but |V| = {}", e * z, self.v_size())));
        }
        self.v_factor = Some((e, z));
        Ok(self)
    }

    pub fn with_tau(&self, tau: f64) -> Result<Self> {
        let mut out = Self::new(self.p_uv.clone(), self.q_uv.clone(), self.channel.clone(), tau)?;
        out.v_factor = self.v_factor;
        Ok(out)
    }

    pub fn u_size(&self) -> usize {
        self.p_uv.axes()[0].size()
    }

    pub fn v_size(&self) -> usize {
        self.p_uv.axes()[1].size()
    }

    pub fn x_size(&self) -> usize {
        self.channel.from_alphabet().size()
    }

    pub fn y_size(&self) -> usize {
        self.channel.to_alphabet().size()
    }

    /// `D(P_V || Q_V)`.
    pub fn side_info_divergence(&self) -> Result<f64> {
        kl_joint(&self.p_uv.marginalize(&["V"])?, &self.q_uv.marginalize(&["V"])?)
    }

    fn require_matched(&self, what: &str) -> Result<()> {
        if self.tau != 1.0 {
            return Err(Error::Unsupported(format!("{what} needs matched bandwidth (tau = 1), got tau = {}", self.tau)));
        }
        Ok(())
    }
}

/// Search budget for the grid-based optimisations.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchConfig {
    /// Auxiliary alphabet size; `None` means `|U| + 1`.
    pub w_card: Option<usize>,
    pub grid_step: f64,
    /// Rate points per feasible interval.
    pub r_grid: usize,
    pub refine_rounds: usize,
    /// Time-sharing alphabet size: `|X|` (default) or 1 (no time sharing).
    pub s_card: Option<usize>,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self { w_card: None, grid_step: 0.05, r_grid: 40, refine_rounds: 2, s_card: None }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.grid_step > 0.0 && self.grid_step <= 0.5) {
            return Err(Error::Domain(format!("grid step {} outside (0, 0.5]", self.grid_step)));
        }
        crate::prob::lattice_resolution(self.grid_step)?;
        if self.w_card == Some(0) {
            return Err(Error::Domain("auxiliary alphabet size must be at least 1".into()));
        }
        if self.r_grid < 2 {
            return Err(Error::Domain("r_grid must be at least 2".into()));
        }
        Ok(())
    }

    pub(crate) fn w_card_for(&self, u_size: usize) -> usize {
        self.w_card.unwrap_or(u_size + 1)
    }
}

/// How a reported value relates to the true exponent of the scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    /// Optimal exponent of the testing problem.
    Exact,
    /// Closed-form exponent of a fixed scheme.
    SchemeValue,
    /// Best feasible point found by a finite search; a valid lower bound.
    SearchLowerBound,
}

impl BoundKind {
    pub fn label(self) -> &'static str {
        match self {
            BoundKind::Exact => "exact",
            BoundKind::SchemeValue => "scheme value",
            BoundKind::SearchLowerBound => "search lower bound",
        }
    }
}

/// Value of an exponent with its optimiser and per-term breakdown. Term and
/// value fields are nats; `+inf` is a legitimate term value.
#[derive(Debug, Clone, PartialEq)]
pub struct ExponentReport {
    pub scheme: String,
    pub value_nats: f64,
    pub bound: BoundKind,
    /// False when the search found no admissible point; `value_nats` is then 0
    /// and carries no information.
    pub feasible: bool,
    pub terms: BTreeMap<String, f64>,
    pub params: BTreeMap<String, Value>,
    pub search: BTreeMap<String, Value>,
    pub diagnostics: Vec<String>,
}

impl ExponentReport {
    pub(crate) fn new(scheme: &str, value_nats: f64, bound: BoundKind) -> Self {
        Self {
            scheme: scheme.to_string(),
            value_nats,
            bound,
            feasible: true,
            terms: BTreeMap::new(),
            params: BTreeMap::new(),
            search: BTreeMap::new(),
            diagnostics: Vec::new(),
        }
    }

    pub fn value_bits(&self) -> f64 {
        nats_to_bits(self.value_nats)
    }
}

/// Matrix as nested JSON arrays.
pub(crate) fn matrix_json(c: &CondDist) -> Value {
    Value::from(c.to_rows())
}

/// `tau * value` with `0 * inf = 0`.
pub(crate) fn scaled(tau: f64, value: f64) -> f64 {
    if tau == 0.0 {
        0.0
    } else {
        tau * value
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::Alphabet;

    #[test]
    fn instance_validation() {
        let inst = example1_instance();
        assert_eq!(inst.u_size(), 2);
        assert!(inst.side_info_divergence().unwrap().abs() < 1e-15);
        assert!(inst.with_tau(-1.0).is_err());
        assert!(inst.clone().with_v_factor(2, 2).is_err());
        let bad = JointDist::new(vec![Alphabet::new("A", 2).unwrap(), Alphabet::new("V", 2).unwrap()], vec![0.25; 4]).unwrap();
        assert!(HTInstance::new(bad, inst.q_uv.clone(), inst.channel.clone(), 1.0).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(SearchConfig::default().validate().is_ok());
        assert!(SearchConfig { grid_step: 0.6, ..Default::default() }.validate().is_err());
        assert!(SearchConfig { grid_step: 0.03, ..Default::default() }.validate().is_err());
        assert!(SearchConfig { w_card: Some(0), ..Default::default() }.validate().is_err());
    }

    #[test]
    fn zero_times_infinity_is_zero() {
        assert_eq!(scaled(0.0, f64::INFINITY), 0.0);
        assert_eq!(scaled(0.5, f64::INFINITY), f64::INFINITY);
        assert_eq!(scaled(2.0, 1.5), 3.0);
    }
}
