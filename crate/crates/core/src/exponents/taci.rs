//! Testing against conditional independence: `V = (E, Z)` and
//! `Q_UEZ = P_UZ P_{E|Z}`. The optimal exponent is
//!
//! ```text
//! sup { I(E;W|Z) : I(U;W|Z) <= tau C, (Z,E) - U - W, |W| <= |U| + 1 }
//! ```
//!
//! and is computed by a lattice scan over `P_{W|U}` followed by a pattern
//! search that keeps the rate constraint.

use serde_json::Value;

use super::search::{columns_canonical, row_moves, stochastic_grid};
use super::{matrix_json, BoundKind, ExponentReport, HTInstance, SearchConfig};
use crate::channel::capacity;
use crate::info::cond_mutual_info;
use crate::prob::{Alphabet, CondDist, JointDist};
use crate::{Error, Result};

/// Total-variation tolerance of the structure check.
const STRUCTURE_TOL: f64 = 1e-9;
/// Slack on the rate constraint.
const RATE_SLACK: f64 = 1e-9;
const CAPACITY_TOL: f64 = 1e-12;
const RETRACT_STEPS: usize = 50;

/// Builds an instance with `P_UV = P_UZ P_{E|UZ}` and `Q_UV = P_UZ P_{E|Z}`,
/// `V` letter `e * |Z| + z`. `p_uz` must have axes `(U, Z)`; the rows of
/// `p_e_given_uz` are indexed `u * |Z| + z`.
pub fn taci_instance(p_uz: &JointDist, p_e_given_uz: &CondDist, channel: CondDist, tau: f64) -> Result<HTInstance> {
    if p_uz.axis_names() != ["U", "Z"] {
        return Err(Error::Dimension(format!("P_UZ must have axes (U,Z), got {:?}", p_uz.axis_names())));
    }
    let e = p_e_given_uz.relabel("UZ", "E");
    let p = p_uz.compose(&e, &["U", "Z"])?;
    let p_e_given_z = p.condition("E", &["Z"])?.cond;
    let q = p_uz.compose(&p_e_given_z, &["Z"])?;
    let (ne, nz) = (e.to_alphabet().size(), p_uz.axes()[1].size());
    let to_uv = |j: &JointDist| -> Result<JointDist> {
        let j = j.permute(&["U", "E", "Z"])?;
        JointDist::new(vec![p_uz.axes()[0].clone(), Alphabet::new("V", ne * nz)?], j.probs().to_vec())
    };
    HTInstance::new(to_uv(&p)?, to_uv(&q)?, channel, tau)?.with_v_factor(ne, nz)
}

/// `P_UEZ` (and `Q_UEZ`) recovered from the factorised `V` axis.
fn split_v(inst: &HTInstance, j: &JointDist) -> Result<JointDist> {
    let (ne, nz) = inst
        .v_factor
        .ok_or_else(|| Error::Precondition("conditional-independence test needs V declared as a product E x Z".into()))?;
    JointDist::new(vec![j.axes()[0].clone(), Alphabet::new("E", ne)?, Alphabet::new("Z", nz)?], j.probs().to_vec())
}

/// Checks `Q_UEZ = P_UZ P_{E|Z}` within `1e-9` total variation.
fn check_structure(p: &JointDist, q: &JointDist) -> Result<()> {
    let p_e_given_z = p.condition("E", &["Z"])?.cond;
    let target = p.marginalize(&["U", "Z"])?.compose(&p_e_given_z, &["Z"])?.permute(&["U", "E", "Z"])?;
    let tv: f64 = 0.5 * q.probs().iter().zip(target.probs()).map(|(a, b)| (a - b).abs()).sum::<f64>();
    if tv <= STRUCTURE_TOL {
        return Ok(());
    }
    let (ne, nz) = (q.axes()[1].size(), q.axes()[2].size());
    let bad: Vec<String> = q
        .probs()
        .iter()
        .zip(target.probs())
        .enumerate()
        .filter(|(_, (a, b))| (*a - *b).abs() > 1e-12)
        .take(8)
        .map(|(k, (a, b))| {
            let (u, e, z) = (k / (ne * nz), (k / nz) % ne, k % nz);
            format!("(u={u}, e={e}, z={z}): Q={a:.6e}, P_UZ P_E|Z={b:.6e}")
        })
        .collect();
    Err(Error::Precondition(format!(
        "Q_UEZ differs from P_UZ P_E|Z by {tv:.3e} in total variation; cells {}",
        bad.join("; ")
    )))
}

struct Problem {
    p: JointDist,
    p_u: Vec<f64>,
    u: Alphabet,
    w: Alphabet,
    budget: f64,
}

impl Problem {
    /// `(I(E;W|Z), I(U;W|Z))`.
    fn eval(&self, m: &[f64]) -> Result<(f64, f64)> {
        let c = CondDist::from_flat_unchecked(self.u.clone(), self.w.clone(), m.to_vec());
        let j = self.p.compose(&c, &["U"])?;
        Ok((cond_mutual_info(&j, &["E"], &["W"], &["Z"])?, cond_mutual_info(&j, &["U"], &["W"], &["Z"])?))
    }

    fn score(&self, m: &[f64]) -> Result<f64> {
        let (gain, rate) = self.eval(m)?;
        Ok(if rate <= self.budget { gain } else { f64::NEG_INFINITY })
    }

    /// Pulls an infeasible `m` back onto the rate boundary along the segment
    /// towards the constant map with the same `P_W`. `I(U;W|Z)` is convex on
    /// that segment and vanishes at its end, so bisection always lands on a
    /// feasible point.
    fn retract(&self, m: Vec<f64>) -> Result<(f64, Vec<f64>)> {
        let (gain, rate) = self.eval(&m)?;
        if rate <= self.budget {
            return Ok((gain, m));
        }
        let cols = self.w.size();
        let mut p_w = vec![0.0; cols];
        for (u, &pu) in self.p_u.iter().enumerate() {
            for (o, &x) in p_w.iter_mut().zip(&m[u * cols..(u + 1) * cols]) {
                *o += pu * x;
            }
        }
        let mix = |t: f64| -> Vec<f64> { m.iter().enumerate().map(|(k, &x)| (1.0 - t) * x + t * p_w[k % cols]).collect() };
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..RETRACT_STEPS {
            let mid = 0.5 * (lo + hi);
            if self.eval(&mix(mid))?.1 <= self.budget {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let out = mix(hi);
        Ok((self.eval(&out)?.0, out))
    }
}

/// Moves that shift `delta` between the same two columns in two rows, in the
/// same or in opposite directions.
fn pair_moves(m: &[f64], rows: usize, cols: usize, delta: f64) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    for r1 in 0..rows {
        for r2 in r1 + 1..rows {
            for a in 0..cols {
                for b in 0..cols {
                    if a == b {
                        continue;
                    }
                    for flip in [false, true] {
                        let (a2, b2) = if flip { (b, a) } else { (a, b) };
                        let d1 = delta.min(m[r1 * cols + a]);
                        let d2 = delta.min(m[r2 * cols + a2]);
                        if d1 <= 0.0 || d2 <= 0.0 {
                            continue;
                        }
                        let mut c = m.to_vec();
                        c[r1 * cols + a] -= d1;
                        c[r1 * cols + b] += d1;
                        c[r2 * cols + a2] -= d2;
                        c[r2 * cols + b2] += d2;
                        out.push(c);
                    }
                }
            }
        }
    }
    out
}

/// Optimal exponent of a conditional-independence test.
pub fn taci_exponent(inst: &HTInstance, cfg: &SearchConfig) -> Result<ExponentReport> {
    cfg.validate()?;
    let p = split_v(inst, &inst.p_uv)?;
    let q = split_v(inst, &inst.q_uv)?;
    check_structure(&p, &q)?;
    let (c, _) = capacity(&inst.channel, CAPACITY_TOL)?;
    let nu = inst.u_size();
    let w_card = cfg.w_card.unwrap_or(nu + 1);
    let p_u = p.marginalize(&["U"])?.probs().to_vec();
    let prob = Problem {
        p,
        p_u,
        u: inst.p_uv.axes()[0].clone(),
        w: Alphabet::new("W", w_card)?,
        budget: inst.tau * c + RATE_SLACK,
    };

    let grid: Vec<Vec<f64>> =
        stochastic_grid(nu, w_card, cfg.grid_step)?.into_iter().filter(|m| columns_canonical(m, nu, w_card)).collect();
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut feasible_points = 0usize;
    for m in &grid {
        let v = prob.score(m)?;
        if v > f64::NEG_INFINITY {
            feasible_points += 1;
        }
        if best.as_ref().is_none_or(|(bv, _)| v > *bv) {
            best = Some((v, m.clone()));
        }
    }
    // the constant map is always on the lattice and always feasible
    let (mut value, mut cur) = best.expect("nonempty grid");
    let grid_value = value;
    let mut evaluations = grid.len();

    let mut delta = cfg.grid_step / 2.0;
    while delta >= 1e-6 {
        let mut improved = true;
        while improved {
            improved = false;
            let mut cands = row_moves(&cur, nu, w_card, delta);
            cands.extend(pair_moves(&cur, nu, w_card, delta));
            for cand in cands {
                let (v, cand) = prob.retract(cand)?;
                evaluations += 1;
                if v > value + 1e-14 {
                    value = v;
                    cur = cand;
                    improved = true;
                }
            }
        }
        delta /= 2.0;
    }

    let (gain, rate) = prob.eval(&cur)?;
    let mut rep = ExponentReport::new("taci", gain, BoundKind::SearchLowerBound);
    rep.terms.insert("i_ew_given_z".into(), gain);
    rep.terms.insert("i_uw_given_z".into(), rate);
    rep.terms.insert("capacity".into(), c);
    rep.terms.insert("rate_budget".into(), inst.tau * c);
    rep.terms.insert("i_eu_given_z".into(), cond_mutual_info(&prob.p, &["E"], &["U"], &["Z"])?);
    let w = CondDist::from_flat_unchecked(prob.u.clone(), prob.w.clone(), cur);
    rep.params.insert("p_w_given_u".into(), matrix_json(&w));
    rep.search.insert("grid_step".into(), Value::from(cfg.grid_step));
    rep.search.insert("w_card".into(), Value::from(w_card));
    rep.search.insert("grid_points".into(), Value::from(grid.len()));
    rep.search.insert("feasible_fraction".into(), Value::from(feasible_points as f64 / grid.len() as f64));
    rep.search.insert("grid_value_nats".into(), Value::from(grid_value));
    rep.search.insert("evaluations".into(), Value::from(evaluations));
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::info::{binary_convolve, binary_entropy, mgl_bound};

    fn bsc(name_in: &str, name_out: &str, p: f64) -> CondDist {
        CondDist::new(
            Alphabet::new(name_in, 2).unwrap(),
            Alphabet::new(name_out, 2).unwrap(),
            vec![vec![1.0 - p, p], vec![p, 1.0 - p]],
        )
        .unwrap()
    }

    fn tai(tau: f64) -> HTInstance {
        let p_uz = JointDist::new(vec![Alphabet::new("U", 2).unwrap(), Alphabet::new("Z", 1).unwrap()], vec![0.5, 0.5]).unwrap();
        taci_instance(&p_uz, &bsc("UZ", "E", 0.1), bsc("X", "Y", 0.2), tau).unwrap()
    }

    fn oracle_bits(tau: f64) -> f64 {
        let c = 1.0 - binary_entropy(0.2).unwrap();
        let h = (1.0 - tau * c).max(0.0);
        1.0 - mgl_bound(h, 0.1).unwrap()
    }

    #[test]
    fn builder_gives_independence_under_q() {
        let inst = tai(1.0);
        assert_eq!(inst.v_factor, Some((2, 1)));
        let q = inst.q_uv.probs();
        for v in q {
            assert!((v - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn tai_matches_closed_form_at_matched_bandwidth() {
        let rep = taci_exponent(&tai(1.0), &SearchConfig::default()).unwrap();
        let exact = 1.0 - binary_entropy(binary_convolve(0.2, 0.1)).unwrap();
        assert!((rep.value_bits() - exact).abs() < 1e-6, "{}", rep.value_bits());
        assert!(rep.terms["i_uw_given_z"] <= rep.terms["rate_budget"] + 1e-9);
    }

    #[test]
    fn tai_tracks_oracle_across_bandwidth() {
        let mut prev = -1.0;
        for tau in [0.25, 0.5, 2.0] {
            let v = taci_exponent(&tai(tau), &SearchConfig::default()).unwrap().value_bits();
            assert!((v - oracle_bits(tau)).abs() < 1e-6, "tau={tau}: {v} vs {}", oracle_bits(tau));
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn zero_bandwidth_gives_zero() {
        let rep = taci_exponent(&tai(0.0), &SearchConfig::default()).unwrap();
        assert!(rep.value_nats.abs() < 1e-9);
    }

    #[test]
    fn ample_bandwidth_attains_data_processing_ceiling() {
        let rep = taci_exponent(&tai(10.0), &SearchConfig::default()).unwrap();
        assert!((rep.value_nats - rep.terms["i_eu_given_z"]).abs() < 1e-9);
    }

    #[test]
    fn structure_violation_names_cells() {
        let inst = tai(1.0);
        let bent = HTInstance::new(inst.p_uv.clone(), inst.p_uv.clone(), inst.channel.clone(), 1.0)
            .unwrap()
            .with_v_factor(2, 1)
            .unwrap();
        match taci_exponent(&bent, &SearchConfig::default()) {
            Err(Error::Precondition(msg)) => assert!(msg.contains("(u=0, e=0, z=0)"), "{msg}"),
            other => panic!("expected structure error, got {other:?}"),
        }
        let plain = HTInstance::new(inst.p_uv.clone(), inst.q_uv.clone(), inst.channel.clone(), 1.0).unwrap();
        assert!(matches!(taci_exponent(&plain, &SearchConfig::default()), Err(Error::Precondition(_))));
    }
}
