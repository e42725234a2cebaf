//! The binary example where hybrid coding beats separation, and the curve
//! `f'(r) = 1 - h_b(r * p0) + E_x(1 - h_b(r))` that caps the separation
//! exponent on it.
//!
//! `U` is uniform, `P_{V|U}` and `Q_{V|U}` are binary symmetric with
//! crossovers `p0 = 0.8` and `p1 = 0.25`, and the channel is a BSC with
//! crossover `q = 0.2`.

use super::{shtcc_exponent, uncoded_exponent, ExponentReport, HTInstance, SearchConfig};
use crate::channel::{expurgated_fixed, InputDist};
use crate::info::{binary_convolve, binary_entropy};
use crate::prob::{Alphabet, CondDist, FiniteDist, JointDist};
use crate::units::{bits_to_nats, nats_to_bits};
use crate::{Error, Result};

pub const Q: f64 = 0.2;
pub const P0: f64 = 0.8;
pub const P1: f64 = 0.25;

/// Landmark tolerances (bits).
const LANDMARK_TOL: f64 = 1e-3;
const CEILING_SLACK: f64 = 2e-3;

fn bsc(from: &str, to: &str, p: f64) -> CondDist {
    CondDist::new(
        Alphabet::new(from, 2).expect("binary"),
        Alphabet::new(to, 2).expect("binary"),
        vec![vec![1.0 - p, p], vec![p, 1.0 - p]],
    )
    .expect("valid crossover")
}

fn joint(p: f64) -> JointDist {
    let u = Alphabet::new("U", 2).expect("binary");
    FiniteDist::uniform(u).to_joint().compose(&bsc("U", "V", p), &["U"]).expect("binary joint")
}

/// The built-in instance at `tau = 1`.
pub fn example1_instance() -> HTInstance {
    HTInstance::new(joint(P0), joint(P1), bsc("X", "Y", Q), 1.0).expect("valid instance")
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fig2Point {
    pub r: f64,
    pub f_prime_bits: f64,
}

/// `f'(r)` in bits for `r` from `q` to `1/2` in steps of `step`, with the
/// expurgated exponent of a BSC(`q`) under uniform i.i.d. input.
pub fn fig2_curve(q: f64, p0: f64, step: f64) -> Result<Vec<Fig2Point>> {
    if !(q > 0.0 && q < 0.5) {
        return Err(Error::Domain(format!("crossover {q} outside (0, 1/2)")));
    }
    if !(step > 0.0 && step <= 0.5 - q) {
        return Err(Error::Domain(format!("step {step} outside (0, {}]", 0.5 - q)));
    }
    let ch = bsc("X", "Y", q);
    let input = InputDist::iid(&FiniteDist::uniform(Alphabet::new("X", 2)?))?;
    let n = ((0.5 - q) / step + 1e-9).floor() as usize;
    let mut rs: Vec<f64> = (0..=n).map(|k| q + k as f64 * step).collect();
    if 0.5 - rs[n] > 1e-9 {
        rs.push(0.5);
    }
    let last = rs.len() - 1;
    rs[last] = rs[last].min(0.5);
    rs.into_iter()
        .map(|r| {
            let rate = bits_to_nats((1.0 - binary_entropy(r)?).max(0.0));
            let ex = expurgated_fixed(rate, &input, &ch)?.value;
            Ok(Fig2Point { r, f_prime_bits: 1.0 - binary_entropy(binary_convolve(r, p0))? + nats_to_bits(ex) })
        })
        .collect()
}

/// One landmark with its target and pass flag (all bits).
#[derive(Debug, Clone, PartialEq)]
pub struct Landmark {
    pub name: &'static str,
    pub value_bits: f64,
    pub target_bits: f64,
    pub tolerance_bits: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Example1Report {
    pub uncoded_bits: f64,
    /// `f'(1/2) = E_x(0)`, the ceiling on the separation exponent.
    pub ceiling_bits: f64,
    /// `1 - h_b(q * p0)`.
    pub branch2_bound_bits: f64,
    pub shtcc: ExponentReport,
    pub landmarks: Vec<Landmark>,
}

impl Example1Report {
    pub fn all_pass(&self) -> bool {
        self.landmarks.iter().all(|l| l.pass)
    }
}

/// Evaluates the landmarks, running the separation search with `cfg`.
pub fn example1_report(cfg: &SearchConfig) -> Result<Example1Report> {
    let inst = example1_instance();
    let uncoded_bits = uncoded_exponent(&inst)?.value_bits();
    let curve = fig2_curve(Q, P0, 0.5 - Q)?;
    let ceiling_bits = curve.last().expect("two points").f_prime_bits;
    let branch2_bound_bits = 1.0 - binary_entropy(binary_convolve(Q, P0))?;
    let shtcc = shtcc_exponent(&inst, cfg)?;
    let s = shtcc.value_bits();
    let near = |name, v: f64, t: f64| Landmark { name, value_bits: v, target_bits: t, tolerance_bits: LANDMARK_TOL, pass: (v - t).abs() <= LANDMARK_TOL };
    let landmarks = vec![
        near("uncoded", uncoded_bits, 0.3244),
        near("ceiling", ceiling_bits, 0.161),
        near("branch2_bound", branch2_bound_bits, 0.0956),
        Landmark {
            name: "shtcc_below_ceiling",
            value_bits: s,
            target_bits: 0.161,
            tolerance_bits: CEILING_SLACK,
            pass: shtcc.feasible && s <= 0.161 + CEILING_SLACK,
        },
    ];
    Ok(Example1Report { uncoded_bits, ceiling_bits, branch2_bound_bits, shtcc, landmarks })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn instance_marginals() {
        let inst = example1_instance();
        for (got, want) in inst.p_uv.probs().iter().chain(inst.q_uv.probs()).zip([0.1, 0.4, 0.4, 0.1, 0.375, 0.125, 0.125, 0.375]) {
            assert!((got - want).abs() < 1e-15);
        }
    }

    #[test]
    fn curve_endpoints() {
        let c = fig2_curve(Q, P0, 0.005).unwrap();
        assert_eq!(c.len(), 61);
        assert!((c[0].r - 0.2).abs() < 1e-12);
        assert!((c[60].r - 0.5).abs() < 1e-12);
        let expected = -0.5 * 0.8f64.log2();
        assert!((c[60].f_prime_bits - expected).abs() < 1e-6);
        let arg = c.iter().enumerate().max_by(|a, b| a.1.f_prime_bits.total_cmp(&b.1.f_prime_bits)).unwrap().0;
        assert_eq!(arg, 60);
    }

    #[test]
    fn curve_start_equals_branch_two_bound() {
        // at r = q the rate is the capacity and E_x vanishes
        let c = fig2_curve(Q, P0, 0.005).unwrap();
        assert!((c[0].f_prime_bits - (1.0 - binary_entropy(0.68).unwrap())).abs() < 1e-6);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(fig2_curve(0.6, P0, 0.01).is_err());
        assert!(fig2_curve(Q, P0, 0.0).is_err());
    }
}
