//! The multi-letter exponent at one source letter and one channel use:
//! `max D(P_VY || Q_VY)` over stochastic encoders `P_{X|U}`.

use serde_json::Value;

use super::search::{row_moves, stochastic_grid};
use super::{matrix_json, BoundKind, ExponentReport, HTInstance};
use crate::info::kl_joint;
use crate::prob::{Alphabet, CondDist};
use crate::Result;

fn divergence(inst: &HTInstance, enc: &CondDist) -> Result<f64> {
    let ch = |j: &crate::JointDist| -> Result<crate::JointDist> {
        j.compose(enc, &["U"])?.compose(&inst.channel, &["X"])?.marginalize(&["V", "Y"])
    };
    kl_joint(&ch(&inst.p_uv)?, &ch(&inst.q_uv)?)
}

/// Lattice scan over `P_{X|U}` (seeded with `X = U` when the alphabets
/// match), then mass-shift refinement.
pub fn multiletter_k1(inst: &HTInstance, grid_step: f64) -> Result<ExponentReport> {
    inst.require_matched("the one-letter multi-letter bound")?;
    let (nu, nx) = (inst.u_size(), inst.x_size());
    let u = Alphabet::new("U", nu)?;
    let x = Alphabet::new("X", nx)?;
    let eval = |m: &[f64]| divergence(inst, &CondDist::from_flat_unchecked(u.clone(), x.clone(), m.to_vec()));

    let mut best: Option<(f64, Vec<f64>)> = None;
    if nu == nx {
        let id: Vec<f64> = (0..nu * nx).map(|k| if k / nx == k % nx { 1.0 } else { 0.0 }).collect();
        best = Some((eval(&id)?, id));
    }
    let grid = stochastic_grid(nu, nx, grid_step)?;
    for m in &grid {
        let v = eval(m)?;
        if best.as_ref().is_none_or(|(bv, _)| v > *bv) {
            best = Some((v, m.clone()));
        }
    }
    let (mut value, mut cur) = best.expect("nonempty grid");
    let mut delta = grid_step / 2.0;
    while delta >= 1e-6 {
        let mut improved = true;
        while improved {
            improved = false;
            for cand in row_moves(&cur, nu, nx, delta) {
                let v = eval(&cand)?;
                if v > value + 1e-14 {
                    value = v;
                    cur = cand;
                    improved = true;
                }
            }
        }
        delta /= 2.0;
    }
    let mut rep = ExponentReport::new("k1", value, BoundKind::SearchLowerBound);
    rep.terms.insert("d_vy".into(), value);
    rep.params.insert("p_x_given_u".into(), matrix_json(&CondDist::from_flat_unchecked(u, x, cur)));
    rep.search.insert("grid_step".into(), Value::from(grid_step));
    rep.search.insert("grid_points".into(), Value::from(grid.len()));
    Ok(rep)
}
