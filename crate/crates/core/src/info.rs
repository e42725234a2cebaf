//! Entropy, mutual information and KL divergence on finite alphabets.
//!
//! Everything returns nats except the binary helpers, which follow the
//! usual base-2 convention (`binary_entropy`, `binary_kl`, `mgl_bound`).
//! `0 log 0 = 0` throughout; a KL cell with `p > 0 = q` makes the result `+inf`.

use crate::prob::JointDist;
use crate::{Error, Result};

/// Shannon entropy of a probability vector, nats.
pub fn entropy_of(probs: &[f64]) -> f64 {
    -probs.iter().filter(|&&p| p > 0.0).map(|&p| p * p.ln()).sum::<f64>()
}

pub fn entropy(p: &crate::FiniteDist) -> f64 {
    entropy_of(p.probs())
}

/// Entropy of the marginal over `axes`.
pub fn joint_entropy(j: &JointDist, axes: &[&str]) -> Result<f64> {
    Ok(entropy_of(j.marginalize(axes)?.probs()))
}

/// `H(target | given) = H(target, given) - H(given)`.
pub fn cond_entropy(j: &JointDist, target: &[&str], given: &[&str]) -> Result<f64> {
    let mut all: Vec<&str> = given.to_vec();
    all.extend_from_slice(target);
    let h = joint_entropy(j, &all)? - joint_entropy(j, given)?;
    Ok(h.max(0.0))
}

/// `I(A; B)`, clamped at zero against rounding.
pub fn mutual_info(j: &JointDist, a: &[&str], b: &[&str]) -> Result<f64> {
    cond_mutual_info(j, a, b, &[])
}

/// `I(A; B | C) = H(A,C) + H(B,C) - H(A,B,C) - H(C)`.
pub fn cond_mutual_info(j: &JointDist, a: &[&str], b: &[&str], c: &[&str]) -> Result<f64> {
    let i = joint_entropy(j, &cat(&[a, c]))? + joint_entropy(j, &cat(&[b, c]))?
        - joint_entropy(j, &cat(&[a, b, c]))?
        - joint_entropy(j, c)?;
    Ok(if i < 0.0 { 0.0 } else { i })
}

fn cat<'a>(xs: &[&[&'a str]]) -> Vec<&'a str> {
    xs.iter().flat_map(|x| x.iter().copied()).collect()
}

/// `D(p || q)` over raw vectors of equal length.
pub fn kl_of(p: &[f64], q: &[f64]) -> f64 {
    let mut d = 0.0;
    for (&pi, &qi) in p.iter().zip(q) {
        if pi > 0.0 {
            if qi <= 0.0 {
                return f64::INFINITY;
            }
            d += pi * (pi / qi).ln();
        }
    }
    d.max(0.0)
}

/// KL divergence between two distributions on identical alphabets.
pub fn kl_div(p: &crate::FiniteDist, q: &crate::FiniteDist) -> Result<f64> {
    if p.alphabet() != q.alphabet() {
        return Err(Error::Dimension(format!(
            "KL between '{}' and '{}'",
            p.alphabet().name(),
            q.alphabet().name()
        )));
    }
    Ok(kl_of(p.probs(), q.probs()))
}

/// KL divergence between two joints with identical axes.
pub fn kl_joint(p: &JointDist, q: &JointDist) -> Result<f64> {
    p.same_axes(q)?;
    Ok(kl_of(p.probs(), q.probs()))
}

fn log2_term(p: f64, q: f64) -> f64 {
    if p == 0.0 {
        0.0
    } else if q == 0.0 {
        f64::INFINITY
    } else {
        p * (p / q).log2()
    }
}

/// `h_b(r)` in bits.
pub fn binary_entropy(r: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&r) {
        return Err(Error::Domain(format!("binary entropy argument {r} outside [0, 1]")));
    }
    Ok(binary_entropy_unchecked(r))
}

pub(crate) fn binary_entropy_unchecked(r: f64) -> f64 {
    let t = |x: f64| if x > 0.0 { -x * x.log2() } else { 0.0 };
    t(r) + t(1.0 - r)
}

/// Inverse of `h_b` on `[0, 1/2]`, by 60 rounds of bisection.
pub fn inv_binary_entropy(h: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&h) {
        return Err(Error::Domain(format!("binary entropy value {h} outside [0, 1]")));
    }
    if h == 1.0 {
        return Ok(0.5);
    }
    let (mut lo, mut hi) = (0.0f64, 0.5f64);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if binary_entropy_unchecked(mid) < h {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Binary convolution `a * b = (1-a) b + a (1-b)`.
pub fn binary_convolve(a: f64, b: f64) -> f64 {
    (1.0 - a) * b + a * (1.0 - b)
}

/// `D_b(p || q)` in bits.
pub fn binary_kl(p: f64, q: f64) -> f64 {
    log2_term(p, q) + log2_term(1.0 - p, 1.0 - q)
}

/// `h_b(h_b^{-1}(H) * p)`: the conditional-entropy floor after a binary
/// symmetric channel with crossover `p`.
pub fn mgl_bound(h: f64, p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain(format!("crossover {p} outside [0, 1]")));
    }
    let r = inv_binary_entropy(h)?;
    Ok(binary_entropy_unchecked(binary_convolve(r, p)))
}
