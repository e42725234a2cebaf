//! Closed-form exponents: one-bit scheme, zero-capacity channel and
//! uncoded transmission.

use serde_json::Value;

use super::{BoundKind, ExponentReport, HTInstance};
use crate::channel::{is_zero_capacity, max_pair_divergence};
use crate::info::kl_joint;
use crate::projection::{min_kl, MarginalConstraint};
use crate::{Error, Result};

/// `beta_0 = min D(P~_UV || Q_UV)` over `P~_U = P_U`, `P~_V = P_V`.
pub fn beta0(inst: &HTInstance) -> Result<f64> {
    let cons = [
        MarginalConstraint::from_joint(&inst.p_uv, &["U"])?,
        MarginalConstraint::from_joint(&inst.p_uv, &["V"])?,
    ];
    // data processing gives beta_0 >= D(P_V||Q_V); keep that exact under rounding
    Ok(min_kl(&inst.q_uv, &cons, &[])?.value.max(inst.side_info_divergence()?))
}

/// One-bit scheme: `D(P_V||Q_V)` at `tau = 0`, otherwise
/// `min(beta_0, tau E_c + D(P_V||Q_V))`.
pub fn onebit_exponent(inst: &HTInstance) -> Result<ExponentReport> {
    let d_v = inst.side_info_divergence()?;
    let b0 = beta0(inst)?;
    let (e_c, pair) = max_pair_divergence(&inst.channel);
    let value = if inst.tau == 0.0 { d_v } else { b0.min(inst.tau * e_c + d_v) };
    let mut rep = ExponentReport::new("onebit", value, BoundKind::SchemeValue);
    rep.terms.insert("beta0".into(), b0);
    rep.terms.insert("e_c".into(), e_c);
    rep.terms.insert("d_v".into(), d_v);
    if let Some((a, b)) = pair {
        rep.params.insert("channel_pair".into(), Value::from(vec![a, b]));
    }
    Ok(rep)
}

/// Optimal exponent when every channel row is the same: `D(P_V || Q_V)`.
pub fn zero_capacity_exponent(inst: &HTInstance) -> Result<ExponentReport> {
    if !is_zero_capacity(&inst.channel) {
        let first = inst.channel.row(0);
        let (x, y) = inst
            .channel
            .rows()
            .enumerate()
            .find_map(|(x, r)| r.iter().zip(first).position(|(a, b)| (a - b).abs() > 1e-12).map(|y| (x, y)))
            .unwrap_or((0, 0));
        return Err(Error::Precondition(format!(
            "channel rows differ: cell ({x}, {y}) = {} but row 0 has {}",
            inst.channel.get(x, y),
            inst.channel.get(0, y)
        )));
    }
    let d_v = inst.side_info_divergence()?;
    let mut rep = ExponentReport::new("zerocap", d_v, BoundKind::Exact);
    rep.terms.insert("d_v".into(), d_v);
    Ok(rep)
}

/// Uncoded transmission `X = U`: `D(P_VY || Q_VY)`.
pub fn uncoded_exponent(inst: &HTInstance) -> Result<ExponentReport> {
    inst.require_matched("uncoded transmission")?;
    if inst.u_size() != inst.x_size() {
        return Err(Error::Dimension(format!(
            "uncoded transmission needs |U| = |X| ({} vs {})",
            inst.u_size(),
            inst.x_size()
        )));
    }
    let ch = inst.channel.relabel("U", "Y");
    let p = inst.p_uv.compose(&ch, &["U"])?.marginalize(&["V", "Y"])?;
    let q = inst.q_uv.compose(&ch, &["U"])?.marginalize(&["V", "Y"])?;
    let value = kl_joint(&p, &q)?;
    let mut rep = ExponentReport::new("uncoded", value, BoundKind::SchemeValue);
    rep.terms.insert("d_vy".into(), value);
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exponents::example1_instance;
    use crate::prob::{Alphabet, CondDist, JointDist};
    use crate::units::nats_to_bits;

    fn chan(rows: Vec<Vec<f64>>) -> CondDist {
        let (n, m) = (rows.len(), rows[0].len());
        CondDist::new(Alphabet::new("X", n).unwrap(), Alphabet::new("Y", m).unwrap(), rows).unwrap()
    }

    fn with_channel(inst: &HTInstance, rows: Vec<Vec<f64>>) -> HTInstance {
        HTInstance::new(inst.p_uv.clone(), inst.q_uv.clone(), chan(rows), inst.tau).unwrap()
    }

    #[test]
    fn example1_uncoded() {
        let v = uncoded_exponent(&example1_instance()).unwrap();
        assert!((v.value_bits() - 0.3244).abs() < 1e-4);
    }

    #[test]
    fn uncoded_limits() {
        let inst = example1_instance();
        let noiseless = with_channel(&inst, vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        let full = kl_joint(&inst.p_uv, &inst.q_uv).unwrap();
        assert!((uncoded_exponent(&noiseless).unwrap().value_nats - full).abs() < 1e-12);
        let useless = with_channel(&inst, vec![vec![0.3, 0.7]; 2]);
        let d_v = inst.side_info_divergence().unwrap();
        assert!((uncoded_exponent(&useless).unwrap().value_nats - d_v).abs() < 1e-12);
        assert!(matches!(uncoded_exponent(&inst.with_tau(2.0).unwrap()), Err(Error::Unsupported(_))));
    }

    #[test]
    fn onebit_cases() {
        let inst = example1_instance();
        assert_eq!(onebit_exponent(&inst.with_tau(0.0).unwrap()).unwrap().value_nats, 0.0);
        // Q_UV already has the uniform marginals of P_UV
        assert!(beta0(&inst).unwrap() < 1e-12);
        let useless = with_channel(&inst, vec![vec![0.5, 0.5]; 2]);
        let a = onebit_exponent(&useless).unwrap().value_nats;
        let b = zero_capacity_exponent(&useless).unwrap().value_nats;
        assert_eq!(a, b);
        assert!(matches!(zero_capacity_exponent(&inst), Err(Error::Precondition(_))));
    }

    #[test]
    fn beta0_matches_frozen_lattice_values() {
        // lattice scan at step 1e-3 over the marginal-constrained 2x2 joints
        const LATTICE_EXAMPLE: f64 = 0.0;
        const LATTICE_SKEWED: f64 = 0.020968143011;
        let inst = example1_instance();
        assert!((beta0(&inst).unwrap() - LATTICE_EXAMPLE).abs() < 1e-9);
        let u = Alphabet::new("U", 2).unwrap();
        let v = Alphabet::new("V", 2).unwrap();
        let p = JointDist::from_matrix(u.clone(), v.clone(), &[vec![0.3, 0.2], vec![0.1, 0.4]]).unwrap();
        let q = JointDist::from_matrix(u, v, &[vec![0.2, 0.3], vec![0.3, 0.2]]).unwrap();
        let skewed = HTInstance::new(p, q, inst.channel.clone(), 1.0).unwrap();
        let b = beta0(&skewed).unwrap();
        assert!(b <= LATTICE_SKEWED + 1e-12 && LATTICE_SKEWED - b < 1e-6, "{b}");
    }

    #[test]
    fn zero_capacity_with_distinct_side_information() {
        let u = Alphabet::new("U", 2).unwrap();
        let v = Alphabet::new("V", 2).unwrap();
        let p = JointDist::from_matrix(u.clone(), v.clone(), &[vec![0.34, 0.16], vec![0.34, 0.16]]).unwrap();
        let q = JointDist::from_matrix(u, v, &[vec![0.175, 0.325], vec![0.175, 0.325]]).unwrap();
        let inst = HTInstance::new(p, q, chan(vec![vec![0.2, 0.8]; 2]), 1.0).unwrap();
        let z = zero_capacity_exponent(&inst).unwrap();
        assert!((z.value_bits() - 0.3244).abs() < 1e-4);
        assert_eq!(z.bound, BoundKind::Exact);
        assert_eq!(onebit_exponent(&inst).unwrap().value_nats, z.value_nats);
        assert!((nats_to_bits(z.value_nats) - crate::info::binary_kl(0.68, 0.35)).abs() < 1e-12);
    }
}
