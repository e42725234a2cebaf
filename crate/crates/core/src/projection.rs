//! KL minimisation `min D(P~ || Q)` over joints with prescribed marginals and
//! at most one conditional-entropy floor `H(T | G) >= h`.
//!
//! Marginal constraints alone are handled by iterative proportional fitting
//! started at `Q`, which converges to the I-projection. A floor is only
//! activated when the plain projection violates it; the solver then minimises
//! `D(P~||Q) - lambda H(T|G)` by mirror descent (each step re-projected by
//! IPF) and bisects on `lambda` until the floor is met with equality.
//!
//! [`min_kl_bruteforce`] is an independent lattice scan used as a test
//! oracle: it parametrises the affine feasible set through an SVD null
//! space and walks a lattice in those coordinates.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::info::kl_of;
use crate::prob::JointDist;
use crate::{Error, Result};

const TV_STOP: f64 = 1e-10;
const MAX_SWEEPS: usize = 100_000;
const OSC_WINDOW: usize = 1000;
const FEAS_TOL: f64 = 1e-8;
const FLOOR_TOL: f64 = 1e-9;

/// `P~` restricted to `axes` must equal `target`.
#[derive(Debug, Clone)]
pub struct MarginalConstraint {
    pub axes: Vec<String>,
    pub target: JointDist,
}

impl MarginalConstraint {
    /// Constraint that pins the marginal of `p` on `axes`.
    pub fn from_joint(p: &JointDist, axes: &[&str]) -> Result<Self> {
        Ok(Self { axes: axes.iter().map(|s| s.to_string()).collect(), target: p.marginalize(axes)? })
    }
}

/// `H(target | given) >= floor` (nats).
#[derive(Debug, Clone)]
pub struct EntropyFloorConstraint {
    pub target: String,
    pub given: Vec<String>,
    pub floor: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProjectionResult {
    pub value: f64,
    pub argmin: JointDist,
    pub iterations: usize,
    pub feasible: bool,
    /// False when the iteration cap was hit before the stopping rule fired.
    pub converged: bool,
}

impl ProjectionResult {
    fn infeasible(q: &JointDist, iterations: usize) -> Self {
        Self { value: f64::INFINITY, argmin: q.clone(), iterations, feasible: false, converged: true }
    }
}

/// Constraint families used by the exponent formulas. Axis names are fixed:
/// `U, V, W` for the separation scheme and `U, S, W, V, Y` for the hybrid one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TKind {
    /// `P~_UW = P_UW`, `P~_VW = P_VW`.
    T1,
    /// `P~_UW = P_UW`, `P~_V = P_V`, `H(W|V) >= H_P(W|V)`.
    T2,
    /// `P~_UW = P_UW`, `P~_V = P_V`.
    T3,
    /// `P~_USW = P_USW`, `P~_VSWY = P_VSWY`.
    T1p,
    /// `P~_USW = P_USW`, `P~_VSY = P_VSY`, `H(W|V,S,Y) >= H_P(W|V,S,Y)`.
    T2p,
}

struct Prepared {
    maps: Vec<Vec<usize>>,
    targets: Vec<Vec<f64>>,
}

fn prepare(q: &JointDist, marginals: &[MarginalConstraint]) -> Result<Prepared> {
    let mut maps = Vec::with_capacity(marginals.len());
    let mut targets = Vec::with_capacity(marginals.len());
    for c in marginals {
        let names: Vec<&str> = c.axes.iter().map(String::as_str).collect();
        for n in &names {
            let want = q.axis(n)?;
            let have = c.target.axis(n)?;
            if want.size() != have.size() {
                return Err(Error::Dimension(format!(
                    "constraint axis '{n}' has size {} but Q has {}",
                    have.size(),
                    want.size()
                )));
            }
        }
        if c.target.axes().len() != names.len() {
            return Err(Error::Dimension(format!(
                "constraint target has axes {:?}, expected {:?}",
                c.target.axis_names(),
                names
            )));
        }
        maps.push(q.index_map(&names)?);
        targets.push(c.target.marginalize(&names)?.probs().to_vec());
    }
    Ok(Prepared { maps, targets })
}

fn check_floor(q: &JointDist, f: &EntropyFloorConstraint) -> Result<(Vec<usize>, Vec<usize>)> {
    let t_size = q.axis(&f.target)?.size();
    if !(f.floor >= 0.0 && f.floor <= (t_size as f64).ln() + 1e-12) {
        return Err(Error::Domain(format!(
            "entropy floor {} outside [0, ln {t_size}] for '{}'",
            f.floor, f.target
        )));
    }
    let given: Vec<&str> = f.given.iter().map(String::as_str).collect();
    let mut tg = given.clone();
    tg.push(&f.target);
    Ok((q.index_map(&given)?, q.index_map(&tg)?))
}

fn pairwise_consistent(marginals: &[MarginalConstraint]) -> Result<bool> {
    for (i, a) in marginals.iter().enumerate() {
        for b in &marginals[i + 1..] {
            let common: Vec<&str> =
                a.axes.iter().filter(|x| b.axes.contains(x)).map(String::as_str).collect();
            let ma = a.target.marginalize(&common)?;
            let mb = b.target.marginalize(&common)?;
            let tv: f64 = ma.probs().iter().zip(mb.probs()).map(|(x, y)| (x - y).abs()).sum::<f64>() * 0.5;
            if tv > 1e-9 {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

fn marginal_of(x: &[f64], map: &[usize], size: usize) -> Vec<f64> {
    let mut m = vec![0.0; size];
    for (c, &v) in x.iter().enumerate() {
        m[map[c]] += v;
    }
    m
}

fn violation(x: &[f64], prep: &Prepared) -> f64 {
    prep.maps
        .iter()
        .zip(&prep.targets)
        .map(|(map, t)| {
            let m = marginal_of(x, map, t.len());
            0.5 * m.iter().zip(t).map(|(a, b)| (a - b).abs()).sum::<f64>()
        })
        .fold(0.0, f64::max)
}

enum Ipf {
    Done { x: Vec<f64>, sweeps: usize, converged: bool },
    Infeasible { sweeps: usize },
}

/// Alternating scaling onto each marginal, starting from `x`.
fn ipf(mut x: Vec<f64>, prep: &Prepared) -> Ipf {
    if prep.maps.is_empty() {
        let s: f64 = x.iter().sum();
        x.iter_mut().for_each(|v| *v /= s);
        return Ipf::Done { x, sweeps: 0, converged: true };
    }
    let mut history: Vec<f64> = Vec::new();
    for sweep in 1..=MAX_SWEEPS {
        let prev = x.clone();
        for (map, t) in prep.maps.iter().zip(&prep.targets) {
            let m = marginal_of(&x, map, t.len());
            for (c, v) in x.iter_mut().enumerate() {
                let k = map[c];
                if *v > 0.0 {
                    *v *= t[k] / m[k];
                }
            }
            for (&mk, &tk) in m.iter().zip(t) {
                if mk <= 0.0 && tk > 0.0 {
                    return Ipf::Infeasible { sweeps: sweep };
                }
            }
        }
        let change: f64 = 0.5 * x.iter().zip(&prev).map(|(a, b)| (a - b).abs()).sum::<f64>();
        let viol = violation(&x, prep);
        if change < TV_STOP {
            if viol > FEAS_TOL {
                return Ipf::Infeasible { sweeps: sweep };
            }
            return Ipf::Done { x, sweeps: sweep, converged: true };
        }
        history.push(viol);
        if sweep > OSC_WINDOW && viol > FEAS_TOL && viol >= history[sweep - 1 - OSC_WINDOW] * 0.999 {
            return Ipf::Infeasible { sweeps: sweep };
        }
    }
    let viol = violation(&x, prep);
    if viol > FEAS_TOL {
        return Ipf::Infeasible { sweeps: MAX_SWEEPS };
    }
    Ipf::Done { x, sweeps: MAX_SWEEPS, converged: false }
}

fn cond_entropy_raw(x: &[f64], g_map: &[usize], tg_map: &[usize], g_size: usize, tg_size: usize) -> f64 {
    let g = marginal_of(x, g_map, g_size);
    let tg = marginal_of(x, tg_map, tg_size);
    let h = |v: &[f64]| -v.iter().filter(|&&p| p > 0.0).map(|&p| p * p.ln()).sum::<f64>();
    (h(&tg) - h(&g)).max(0.0)
}

struct FloorData {
    g_map: Vec<usize>,
    tg_map: Vec<usize>,
    g_size: usize,
    tg_size: usize,
    floor: f64,
}

impl FloorData {
    fn entropy(&self, x: &[f64]) -> f64 {
        cond_entropy_raw(x, &self.g_map, &self.tg_map, self.g_size, self.tg_size)
    }
}

/// Mirror descent on `D(x||q) - lambda H(T|G)` over the marginal set, warm
/// started at `start`.
fn penalised(start: &[f64], q: &[f64], prep: &Prepared, fd: &FloorData, lambda: f64) -> (Vec<f64>, usize) {
    let eta = 1.0 / (1.0 + lambda);
    let mut x = start.to_vec();
    let mut total = 0;
    for _ in 0..20_000 {
        let g = marginal_of(&x, &fd.g_map, fd.g_size);
        let tg = marginal_of(&x, &fd.tg_map, fd.tg_size);
        let mut y = vec![0.0; x.len()];
        let mut logs = Vec::with_capacity(x.len());
        for (c, &v) in x.iter().enumerate() {
            if v > 0.0 {
                let cond = tg[fd.tg_map[c]] / g[fd.g_map[c]];
                logs.push((c, (1.0 - eta) * v.ln() + eta * q[c].ln() - eta * lambda * cond.ln()));
            }
        }
        let top = logs.iter().map(|&(_, l)| l).fold(f64::NEG_INFINITY, f64::max);
        for (c, l) in logs {
            y[c] = (l - top).exp();
        }
        let next = match ipf(y, prep) {
            Ipf::Done { x, sweeps, .. } => {
                total += sweeps;
                x
            }
            Ipf::Infeasible { .. } => break,
        };
        let change: f64 = 0.5 * next.iter().zip(&x).map(|(a, b)| (a - b).abs()).sum::<f64>();
        x = next;
        if change < TV_STOP {
            break;
        }
    }
    (x, total)
}

/// Global minimum of `D(P~ || q)` under the given constraints.
pub fn min_kl(
    q: &JointDist,
    marginals: &[MarginalConstraint],
    floors: &[EntropyFloorConstraint],
) -> Result<ProjectionResult> {
    if floors.len() > 1 {
        return Err(Error::Unsupported("at most one entropy floor is supported".into()));
    }
    let prep = prepare(q, marginals)?;
    let floor = floors
        .first()
        .map(|f| -> Result<FloorData> {
            let (g_map, tg_map) = check_floor(q, f)?;
            let g_size = f.given.iter().map(|n| q.axis(n).map(|a| a.size())).product::<Result<usize>>()?;
            let tg_size = g_size * q.axis(&f.target)?.size();
            Ok(FloorData { g_map, tg_map, g_size, tg_size, floor: f.floor })
        })
        .transpose()?;

    if !pairwise_consistent(marginals)? {
        return Ok(ProjectionResult::infeasible(q, 0));
    }
    // every target letter needs some support under Q
    for (map, t) in prep.maps.iter().zip(&prep.targets) {
        let reach = marginal_of(q.probs(), map, t.len());
        if reach.iter().zip(t).any(|(&r, &tk)| r <= 0.0 && tk > 0.0) {
            return Ok(ProjectionResult::infeasible(q, 0));
        }
    }

    let (x, sweeps, converged) = match ipf(q.probs().to_vec(), &prep) {
        Ipf::Done { x, sweeps, converged } => (x, sweeps, converged),
        Ipf::Infeasible { sweeps } => return Ok(ProjectionResult::infeasible(q, sweeps)),
    };
    let Some(fd) = floor else {
        return Ok(finish(q, x, sweeps, converged));
    };
    if fd.entropy(&x) >= fd.floor - FLOOR_TOL {
        return Ok(finish(q, x, sweeps, converged));
    }

    // The floor binds: raise lambda until H(T|G) clears it, then bisect.
    let mut iters = sweeps;
    let mut lo = 0.0;
    let mut hi = 1.0;
    let mut hi_x;
    loop {
        let (y, n) = penalised(&x, q.probs(), &prep, &fd, hi);
        iters += n;
        if fd.entropy(&y) >= fd.floor - FLOOR_TOL {
            hi_x = y;
            break;
        }
        if hi > 1e6 {
            return Ok(ProjectionResult::infeasible(q, iters));
        }
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..80 {
        if fd.entropy(&hi_x) - fd.floor < FLOOR_TOL || hi - lo < 1e-12 * hi.max(1.0) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let (y, n) = penalised(&hi_x, q.probs(), &prep, &fd, mid);
        iters += n;
        if fd.entropy(&y) >= fd.floor - FLOOR_TOL {
            hi = mid;
            hi_x = y;
        } else {
            lo = mid;
        }
    }
    Ok(finish(q, hi_x, iters, converged))
}

fn finish(q: &JointDist, x: Vec<f64>, iterations: usize, converged: bool) -> ProjectionResult {
    let value = kl_of(&x, q.probs());
    ProjectionResult { value, argmin: q.with_probs(x), iterations, feasible: true, converged }
}

/// Assembles the constraint family `kind` from the marginals of `p` and
/// minimises against `q`.
pub fn t_set_projection(kind: TKind, p: &JointDist, q: &JointDist) -> Result<ProjectionResult> {
    let m = |axes: &[&str]| MarginalConstraint::from_joint(p, axes);
    let floor = |target: &str, given: &[&str]| -> Result<EntropyFloorConstraint> {
        let h = crate::info::cond_entropy(p, &[target], given)?;
        Ok(EntropyFloorConstraint {
            target: target.into(),
            given: given.iter().map(|s| s.to_string()).collect(),
            floor: h,
        })
    };
    match kind {
        TKind::T1 => min_kl(q, &[m(&["U", "W"])?, m(&["V", "W"])?], &[]),
        TKind::T2 => min_kl(q, &[m(&["U", "W"])?, m(&["V"])?], &[floor("W", &["V"])?]),
        TKind::T3 => min_kl(q, &[m(&["U", "W"])?, m(&["V"])?], &[]),
        TKind::T1p => min_kl(q, &[m(&["U", "S", "W"])?, m(&["V", "S", "W", "Y"])?], &[]),
        TKind::T2p => {
            min_kl(q, &[m(&["U", "S", "W"])?, m(&["V", "S", "Y"])?], &[floor("W", &["V", "S", "Y"])?])
        }
    }
}

const BRUTE_MAX_CELLS: usize = 12;
const BRUTE_MAX_NULL: usize = 7;
const BRUTE_EXHAUSTIVE: f64 = 2e7;

/// Lattice-scan upper bound on [`min_kl`]. The affine set cut out by the
/// marginal constraints is written `p0 + N t` with `N` an orthonormal
/// null-space basis; `t` runs over a lattice of spacing `step` (exhaustively
/// when the lattice is small, otherwise coarse-to-fine around the incumbent).
/// Every visited point satisfies the marginals exactly, so the result is
/// always an upper bound.
pub fn min_kl_bruteforce(
    q: &JointDist,
    marginals: &[MarginalConstraint],
    floors: &[EntropyFloorConstraint],
    step: f64,
) -> Result<f64> {
    if q.len() > BRUTE_MAX_CELLS {
        return Err(Error::Guard(format!("brute force limited to {BRUTE_MAX_CELLS} cells, got {}", q.len())));
    }
    if !(1e-3..=1.0).contains(&step) {
        return Err(Error::Guard(format!("brute force step {step} outside [1e-3, 1]")));
    }
    let prep = prepare(q, marginals)?;
    let floor_data = floors
        .iter()
        .map(|f| {
            let (g_map, tg_map) = check_floor(q, f)?;
            let g_size = g_map.iter().copied().max().unwrap_or(0) + 1;
            let tg_size = tg_map.iter().copied().max().unwrap_or(0) + 1;
            Ok(FloorData { g_map, tg_map, g_size, tg_size, floor: f.floor })
        })
        .collect::<Result<Vec<_>>>()?;

    // free variables: cells with Q > 0
    let free: Vec<usize> = (0..q.len()).filter(|&c| q.probs()[c] > 0.0).collect();
    let d = free.len();
    let mut rows: Vec<Vec<f64>> = vec![vec![1.0; d]];
    let mut rhs = vec![1.0];
    for (map, t) in prep.maps.iter().zip(&prep.targets) {
        for (k, &tk) in t.iter().enumerate() {
            rows.push(free.iter().map(|&c| if map[c] == k { 1.0 } else { 0.0 }).collect());
            rhs.push(tk);
        }
    }
    let a = DMatrix::from_fn(rows.len(), d, |i, j| rows[i][j]);
    let b = DVector::from_vec(rhs);
    // pad to a square-or-tall system so the SVD exposes the full right basis
    let padded = if a.nrows() < d { a.clone().resize_vertically(d, 0.0) } else { a.clone() };
    let svd = padded.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let tol = 1e-10 * smax.max(1.0);
    let v_t = svd.v_t.as_ref().expect("requested V^T");
    let u = svd.u.as_ref().expect("requested U");
    let b_pad = if b.len() < d { b.clone().resize_vertically(d, 0.0) } else { b.clone() };
    let mut p0 = DVector::zeros(d);
    let mut null = Vec::new();
    for (i, &s) in svd.singular_values.iter().enumerate() {
        let vi = v_t.row(i).transpose();
        if s > tol {
            p0 += vi * (u.column(i).dot(&b_pad) / s);
        } else {
            null.push(vi);
        }
    }
    if (&a * &p0 - &b).norm() > 1e-9 {
        return Ok(f64::INFINITY);
    }
    if null.len() > BRUTE_MAX_NULL {
        return Err(Error::Guard(format!(
            "feasible set has dimension {} > {BRUTE_MAX_NULL}",
            null.len()
        )));
    }
    let k = null.len();
    let qv: Vec<f64> = q.probs().to_vec();
    let eval = |t: &[f64]| -> f64 {
        let mut x = vec![0.0; q.len()];
        for (j, &c) in free.iter().enumerate() {
            let mut v = p0[j];
            for (i, ti) in t.iter().enumerate() {
                v += null[i][j] * ti;
            }
            if v < 0.0 {
                if v < -1e-12 {
                    return f64::INFINITY;
                }
                v = 0.0;
            }
            x[c] = v;
        }
        if floor_data.iter().any(|f| f.entropy(&x) < f.floor) {
            return f64::INFINITY;
        }
        kl_of(&x, &qv)
    };
    if k == 0 {
        return Ok(eval(&[]));
    }
    let radius = 1.0 + p0.norm();
    let per_axis = (2.0 * radius / step).floor() + 1.0;
    if per_axis.powi(k as i32) <= BRUTE_EXHAUSTIVE {
        let n = per_axis as usize;
        let mut best = f64::INFINITY;
        let mut idx = vec![0usize; k];
        let mut t = vec![0.0; k];
        loop {
            for i in 0..k {
                t[i] = -radius + idx[i] as f64 * step;
            }
            best = best.min(eval(&t));
            let mut i = 0;
            while i < k {
                idx[i] += 1;
                if idx[i] < n {
                    break;
                }
                idx[i] = 0;
                i += 1;
            }
            if i == k {
                break;
            }
        }
        return Ok(best);
    }

    // coarse level sized to ~2e6 points, then pattern search with halving
    let coarse = 2.0 * radius / (2e6f64).powf(1.0 / k as f64);
    let n0 = (2.0 * radius / coarse).floor() as usize + 1;
    let mut best = f64::INFINITY;
    let mut center = vec![0.0; k];
    let mut idx = vec![0usize; k];
    let mut t = vec![0.0; k];
    loop {
        for i in 0..k {
            t[i] = -radius + idx[i] as f64 * coarse;
        }
        let v = eval(&t);
        if v < best {
            best = v;
            center.clone_from(&t);
        }
        let mut i = 0;
        while i < k {
            idx[i] += 1;
            if idx[i] < n0 {
                break;
            }
            idx[i] = 0;
            i += 1;
        }
        if i == k {
            break;
        }
    }
    if !best.is_finite() {
        return Ok(best);
    }
    let reach: i64 = if k <= 5 { 2 } else { 1 };
    let mut s = coarse;
    loop {
        s = (s / 2.0).max(step);
        loop {
            let mut moved = false;
            let width = (2 * reach + 1) as usize;
            let total = width.pow(k as u32);
            let mut cand = center.clone();
            for code in 0..total {
                let mut rem = code;
                for i in 0..k {
                    let off = (rem % width) as i64 - reach;
                    rem /= width;
                    t[i] = center[i] + off as f64 * s;
                }
                let v = eval(&t);
                if v < best - 1e-15 {
                    best = v;
                    cand.clone_from(&t);
                    moved = true;
                }
            }
            center = cand;
            if !moved {
                break;
            }
        }
        if s <= step {
            break;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::info::cond_entropy;
    use crate::prob::{Alphabet, CondDist, FiniteDist};

    fn ab(name: &str, n: usize) -> Alphabet {
        Alphabet::new(name, n).unwrap()
    }

    fn joint3(probs: Vec<f64>) -> JointDist {
        let s: f64 = probs.iter().sum();
        JointDist::new(vec![ab("U", 2), ab("V", 2), ab("W", 2)], probs.into_iter().map(|x| x / s).collect()).unwrap()
    }

    fn example1() -> (JointDist, JointDist) {
        let pu = FiniteDist::uniform(ab("U", 2)).to_joint();
        let pv = CondDist::new(ab("U", 2), ab("V", 2), vec![vec![0.2, 0.8], vec![0.8, 0.2]]).unwrap();
        let qv = CondDist::new(ab("U", 2), ab("V", 2), vec![vec![0.75, 0.25], vec![0.25, 0.75]]).unwrap();
        let w = CondDist::new(ab("U", 2), ab("W", 2), vec![vec![0.8, 0.2], vec![0.2, 0.8]]).unwrap();
        (
            pu.compose(&pv, &["U"]).unwrap().compose(&w, &["U"]).unwrap(),
            pu.compose(&qv, &["U"]).unwrap().compose(&w, &["U"]).unwrap(),
        )
    }

    #[test]
    fn feasible_q_projects_to_itself() {
        let q = joint3(vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0]);
        let r = t_set_projection(TKind::T1, &q, &q).unwrap();
        assert!(r.feasible);
        assert!(r.value < 1e-12);
        for (a, b) in r.argmin.probs().iter().zip(q.probs()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn example1_q_lies_in_t2_and_t3() {
        let (p, q) = example1();
        for kind in [TKind::T2, TKind::T3] {
            let r = t_set_projection(kind, &p, &q).unwrap();
            assert!(r.feasible);
            assert!(r.value < 1e-10, "{kind:?}: {}", r.value);
        }
    }

    #[test]
    fn inconsistent_marginals_are_infeasible() {
        let q = joint3(vec![1.0; 8]);
        let a = JointDist::new(vec![ab("U", 2)], vec![0.3, 0.7]).unwrap();
        let b = JointDist::new(vec![ab("U", 2), ab("W", 2)], vec![0.25; 4]).unwrap();
        let cons = vec![
            MarginalConstraint { axes: vec!["U".into()], target: a },
            MarginalConstraint { axes: vec!["U".into(), "W".into()], target: b },
        ];
        let r = min_kl(&q, &cons, &[]).unwrap();
        assert!(!r.feasible);
        assert_eq!(r.value, f64::INFINITY);
    }

    #[test]
    fn support_infeasibility_detected() {
        // Q forces U = V; asking for independent uniform U, V together with
        // P(U=0,V=0) = 0.25 is impossible.
        let q = JointDist::new(vec![ab("U", 2), ab("V", 2)], vec![0.5, 0.0, 0.0, 0.5]).unwrap();
        let target = JointDist::new(vec![ab("U", 2), ab("V", 2)], vec![0.25; 4]).unwrap();
        let r = min_kl(&q, &[MarginalConstraint { axes: vec!["U".into(), "V".into()], target }], &[]).unwrap();
        assert!(!r.feasible);
        // a diagonal-only target that Q cannot match through the off-diagonal
        // marginal path: U marginal [1,0] and V marginal [0,1]
        let mu = JointDist::new(vec![ab("U", 2)], vec![1.0, 0.0]).unwrap();
        let mv = JointDist::new(vec![ab("V", 2)], vec![0.0, 1.0]).unwrap();
        let r = min_kl(
            &q,
            &[
                MarginalConstraint { axes: vec!["U".into()], target: mu },
                MarginalConstraint { axes: vec!["V".into()], target: mv },
            ],
            &[],
        )
        .unwrap();
        assert!(!r.feasible);
    }

    #[test]
    fn pinned_joint_gives_plain_kl() {
        let q = joint3(vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0]);
        let p = joint3(vec![8.0, 1.0, 1.0, 3.0, 2.0, 2.0, 5.0, 1.0]);
        let c = MarginalConstraint::from_joint(&p, &["U", "V", "W"]).unwrap();
        let r = min_kl(&q, std::slice::from_ref(&c), &[]).unwrap();
        let direct = kl_of(p.probs(), q.probs());
        assert!((r.value - direct).abs() < 1e-12);
        let b = min_kl_bruteforce(&q, &[c], &[], 0.01).unwrap();
        assert!((b - direct).abs() < 1e-9);
    }

    #[test]
    fn bruteforce_without_constraints_is_zero() {
        let q = JointDist::new(vec![ab("U", 2), ab("V", 2)], vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let b = min_kl_bruteforce(&q, &[], &[], 0.01).unwrap();
        assert!(b < 1e-3);
        assert!(matches!(min_kl_bruteforce(&joint3(vec![1.0; 8]), &[], &[], 1e-4), Err(Error::Guard(_))));
    }

    #[test]
    fn t1_matches_bruteforce_on_perturbed_pair() {
        let q = joint3(vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0]);
        let p = joint3(vec![3.0, 2.0, 2.0, 4.0, 6.0, 1.0, 5.0, 7.0]);
        let r = t_set_projection(TKind::T1, &p, &q).unwrap();
        let cons = [
            MarginalConstraint::from_joint(&p, &["U", "W"]).unwrap(),
            MarginalConstraint::from_joint(&p, &["V", "W"]).unwrap(),
        ];
        let b = min_kl_bruteforce(&q, &cons, &[], 1e-3).unwrap();
        assert!(r.value <= b + 1e-9);
        assert!(b - r.value < 1e-3, "ipf {} brute {}", r.value, b);
    }

    #[test]
    fn entropy_floor_binds_and_is_met() {
        // Q concentrated so that H(W|V) is small; demand a larger floor.
        let q = joint3(vec![9.0, 1.0, 1.0, 9.0, 9.0, 1.0, 1.0, 9.0]);
        let cons = [MarginalConstraint::from_joint(&q, &["U", "W"]).unwrap(), MarginalConstraint::from_joint(&q, &["V"]).unwrap()];
        let base = min_kl(&q, &cons, &[]).unwrap();
        assert!(base.value < 1e-12);
        let h0 = cond_entropy(&q, &["W"], &["V"]).unwrap();
        let floor = EntropyFloorConstraint { target: "W".into(), given: vec!["V".into()], floor: h0 + 0.1 };
        let r = min_kl(&q, &cons, std::slice::from_ref(&floor)).unwrap();
        assert!(r.feasible);
        let h = cond_entropy(&r.argmin, &["W"], &["V"]).unwrap();
        assert!(h >= floor.floor - 1e-8);
        assert!(h - floor.floor < 1e-6, "floor should bind: {h} vs {}", floor.floor);
        let b = min_kl_bruteforce(&q, &cons, &[floor], 1e-3).unwrap();
        assert!(r.value <= b + 1e-9, "{} vs {}", r.value, b);
        assert!(b - r.value < 1e-3, "{} vs {}", r.value, b);
    }

    #[test]
    fn unreachable_floor_is_infeasible() {
        let q = joint3(vec![1.0; 8]);
        let p = JointDist::new(vec![ab("U", 2), ab("W", 2)], vec![0.5, 0.0, 0.0, 0.5]).unwrap();
        // W = U deterministically and U independent of V: H(W|V) = ln 2 at most.
        let cons = [
            MarginalConstraint { axes: vec!["U".into(), "W".into()], target: p },
            MarginalConstraint::from_joint(&q, &["V"]).unwrap(),
        ];
        let floor = EntropyFloorConstraint { target: "W".into(), given: vec!["V".into()], floor: 2f64.ln() };
        let r = min_kl(&q, &cons, &[floor]).unwrap();
        assert!(r.feasible);
        let too_high = EntropyFloorConstraint { target: "W".into(), given: vec!["V".into()], floor: 1.0 };
        assert!(matches!(min_kl(&q, &cons, &[too_high]), Err(Error::Domain(_))));
    }
}
