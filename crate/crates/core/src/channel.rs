//! Channel-side quantities: capacity, expurgated exponent (fixed input and
//! optimised over the input), red-alert exponent, and the largest pairwise
//! row divergence.
//!
//! Inputs with a time-sharing letter are described by [`InputDist`]: `P_S`
//! and `P_{X|S}` where `S` ranges over the channel input alphabet itself.
//! The red-alert exponent of such an input compares, for each `s`, the
//! output law `P_{Y|S=s}` with the channel row `P_{Y|X=s}`.

use crate::info::{kl_of, mutual_info};
use crate::prob::{lattice_resolution, simplex_points, Alphabet, CondDist, FiniteDist};
use crate::{Error, Result};

/// Number of log-spaced `rho` samples on `[1, 1e4]` used by the expurgated search.
const RHO_SAMPLES: usize = 64;
const RHO_MAX: f64 = 1e4;

/// Time-sharing input `(P_S, P_{X|S})` with `|S| = |X|`.
#[derive(Debug, Clone, PartialEq)]
pub struct InputDist {
    pub p_s: FiniteDist,
    pub p_x_given_s: CondDist,
}

impl InputDist {
    pub fn new(p_s: FiniteDist, p_x_given_s: CondDist) -> Result<Self> {
        if p_s.len() != p_x_given_s.from_alphabet().size() {
            return Err(Error::Dimension(format!(
                "P_S has {} letters but P_X|S has {} rows",
                p_s.len(),
                p_x_given_s.from_alphabet().size()
            )));
        }
        if p_s.len() != p_x_given_s.to_alphabet().size() {
            return Err(Error::Dimension(format!(
                "time-sharing alphabet must equal the input alphabet ({} vs {})",
                p_s.len(),
                p_x_given_s.to_alphabet().size()
            )));
        }
        Ok(Self { p_s, p_x_given_s })
    }

    /// `X = S` with `S` uniform.
    pub fn deterministic_uniform(x_size: usize) -> Result<Self> {
        let s = Alphabet::new("S", x_size)?;
        let x = Alphabet::new("X", x_size)?;
        Self::new(FiniteDist::uniform(s.clone()), CondDist::identity(s, x)?)
    }

    /// `P_S` uniform, every row of `P_{X|S}` equal to `px`.
    pub fn iid(px: &FiniteDist) -> Result<Self> {
        let n = px.len();
        let s = Alphabet::new("S", n)?;
        let x = Alphabet::new("X", n)?;
        let row = FiniteDist::new(x, px.probs().to_vec())?;
        Self::new(FiniteDist::uniform(s.clone()), CondDist::constant(s, &row))
    }

    /// Overall input law `P_X`.
    pub fn p_x(&self) -> Vec<f64> {
        let n = self.p_s.len();
        let mut out = vec![0.0; n];
        for (s, &ps) in self.p_s.probs().iter().enumerate() {
            for (o, &w) in out.iter_mut().zip(self.p_x_given_s.row(s)) {
                *o += ps * w;
            }
        }
        out
    }

    fn check_channel(&self, channel: &CondDist) -> Result<()> {
        if channel.from_alphabet().size() != self.p_s.len() {
            return Err(Error::Dimension(format!(
                "input alphabet has {} letters, channel has {} inputs",
                self.p_s.len(),
                channel.from_alphabet().size()
            )));
        }
        Ok(())
    }
}

/// Value of a channel exponent together with the optimiser that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelExponentValue {
    /// Nats; `+inf` allowed. `-inf` marks an infeasible constrained search.
    pub value: f64,
    /// Optimising `rho` (`+inf` when the supremum is a limit), if applicable.
    pub rho: Option<f64>,
    /// Optimising input, if the quantity involves one.
    pub input: Option<InputDist>,
    /// Optimising `P_X` for the free expurgated exponent.
    pub p_x: Option<FiniteDist>,
    pub feasible: bool,
    pub diagnostics: Vec<String>,
}

impl ChannelExponentValue {
    fn plain(value: f64) -> Self {
        Self { value, rho: None, input: None, p_x: None, feasible: true, diagnostics: Vec::new() }
    }
}

/// True when all rows agree within `1e-12` (zero-capacity channel).
pub fn is_zero_capacity(channel: &CondDist) -> bool {
    let first = channel.row(0);
    channel.rows().all(|r| r.iter().zip(first).all(|(a, b)| (a - b).abs() <= 1e-12))
}

/// `I(X;Y)` for input law `px` (nats).
pub fn input_mutual_info(px: &[f64], channel: &CondDist) -> f64 {
    let py = channel.push_forward(px);
    px.iter()
        .enumerate()
        .filter(|(_, &p)| p > 0.0)
        .map(|(x, &p)| p * kl_of(channel.row(x), &py))
        .sum::<f64>()
        .max(0.0)
}

/// `I(X;Y|S)` for a time-sharing input.
pub fn conditional_rate(input: &InputDist, channel: &CondDist) -> f64 {
    input
        .p_s
        .probs()
        .iter()
        .enumerate()
        .filter(|(_, &p)| p > 0.0)
        .map(|(s, &p)| p * input_mutual_info(input.p_x_given_s.row(s), channel))
        .sum()
}

/// Blahut-Arimoto capacity. Stops once `max_x D(W_x||q) - I(r) <= tol`;
/// the returned value is the lower bound `I(r)`.
pub fn capacity(channel: &CondDist, tol: f64) -> Result<(f64, FiniteDist)> {
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("capacity tolerance {tol} must be positive")));
    }
    let n = channel.from_alphabet().size();
    let mut r = vec![1.0 / n as f64; n];
    for _ in 0..1_000_000 {
        let q = channel.push_forward(&r);
        let d: Vec<f64> = (0..n).map(|x| kl_of(channel.row(x), &q)).collect();
        let lower: f64 = r.iter().zip(&d).map(|(a, b)| a * b).sum();
        let upper = d.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if upper - lower <= tol {
            let dist = FiniteDist::new(channel.from_alphabet().clone(), r)?;
            return Ok((lower.max(0.0), dist));
        }
        let top = upper;
        let mut z = 0.0;
        for (rx, dx) in r.iter_mut().zip(&d) {
            *rx *= (dx - top).exp();
            z += *rx;
        }
        r.iter_mut().for_each(|v| *v /= z);
    }
    Err(Error::Precondition("Blahut-Arimoto did not reach the requested tolerance".into()))
}

/// Bhattacharyya coefficients `Z(x, x') = sum_y sqrt(W(y|x) W(y|x'))`.
pub fn bhattacharyya(channel: &CondDist) -> Vec<f64> {
    let n = channel.from_alphabet().size();
    let mut z = vec![0.0; n * n];
    for a in 0..n {
        for b in 0..n {
            z[a * n + b] = channel.row(a).iter().zip(channel.row(b)).map(|(p, q)| (p * q).sqrt()).sum();
        }
    }
    z
}

/// Pair weights `sum_s P_S(s) P(x|s) P(x'|s)`.
pub fn pair_weights(input: &InputDist) -> Vec<f64> {
    let n = input.p_s.len();
    let mut w = vec![0.0; n * n];
    for (s, &ps) in input.p_s.probs().iter().enumerate() {
        if ps == 0.0 {
            continue;
        }
        let row = input.p_x_given_s.row(s);
        for a in 0..n {
            for b in 0..n {
                w[a * n + b] += ps * row[a] * row[b];
            }
        }
    }
    w
}

fn product_weights(px: &[f64]) -> Vec<f64> {
    px.iter().flat_map(|&a| px.iter().map(move |&b| a * b)).collect()
}

/// `rho`-dependent part of the expurgated function,
/// `E0x(rho) = -rho ln sum w Z^{1/rho}`, evaluated through `ln_1p` so that
/// large `rho` keeps full precision.
#[derive(Debug, Clone)]
pub struct ExpurgatedKernel {
    /// `(weight, ln Z)` for pairs with `Z > 0`.
    terms: Vec<(f64, f64)>,
    /// Weight on pairs with `Z > 0`.
    mass: f64,
}

impl ExpurgatedKernel {
    pub fn new(weights: &[f64], z: &[f64]) -> Self {
        let terms: Vec<(f64, f64)> =
            weights.iter().zip(z).filter(|(&w, &zz)| w > 0.0 && zz > 0.0).map(|(&w, &zz)| (w, zz.ln())).collect();
        let mass = terms.iter().map(|t| t.0).sum::<f64>().min(1.0);
        Self { terms, mass }
    }

    pub fn e0x(&self, rho: f64) -> f64 {
        if self.mass <= 0.0 {
            return f64::INFINITY;
        }
        // sum w Z^{1/rho} - 1, with the pair weights summing to one
        let s: f64 = self.terms.iter().map(|&(w, lz)| w * (lz / rho).exp_m1()).sum::<f64>() + (self.mass - 1.0);
        -rho * s.ln_1p()
    }

    /// `-ln` of the weight on pairs with overlapping outputs; rates below it
    /// give an infinite exponent.
    pub fn zero_error_rate(&self) -> f64 {
        if self.mass <= 0.0 {
            f64::INFINITY
        } else {
            -self.mass.ln()
        }
    }

    /// `lim_{rho->inf} E0x(rho)` when every pair overlaps.
    pub fn limit_at_zero_rate(&self) -> f64 {
        if self.mass < 1.0 - 1e-15 {
            f64::INFINITY
        } else {
            -self.terms.iter().map(|&(w, lz)| w * lz).sum::<f64>()
        }
    }

    /// `max_{rho >= 1} -rho R + E0x(rho)`, clamped at zero.
    pub fn maximise(&self, rate: f64) -> (f64, f64, Vec<String>) {
        let mut notes = Vec::new();
        if rate < self.zero_error_rate() - 1e-15 && self.mass < 1.0 - 1e-15 {
            return (f64::INFINITY, f64::INFINITY, notes);
        }
        if rate <= 0.0 {
            // E0x is nondecreasing in rho, so the supremum is the limit.
            return (self.limit_at_zero_rate().max(0.0), f64::INFINITY, notes);
        }
        let g = |rho: f64| -rho * rate + self.e0x(rho);
        let rhos: Vec<f64> =
            (0..RHO_SAMPLES).map(|i| RHO_MAX.powf(i as f64 / (RHO_SAMPLES - 1) as f64)).collect();
        let vals: Vec<f64> = rhos.iter().map(|&r| g(r)).collect();
        let concave = vals.windows(3).zip(rhos.windows(3)).all(|(v, r)| {
            let s1 = (v[1] - v[0]) / (r[1] - r[0]);
            let s2 = (v[2] - v[1]) / (r[2] - r[1]);
            s2 <= s1 + 1e-9 * (1.0 + s1.abs())
        });
        if !concave {
            notes.push("sampled g(rho) not concave; using best sample bracket".into());
        }
        let mut best = 0;
        for (i, v) in vals.iter().enumerate() {
            if *v > vals[best] {
                best = i;
            }
        }
        let (mut lo, mut hi) = if best + 1 == RHO_SAMPLES {
            // still increasing at the top: extend geometrically
            let mut a = rhos[RHO_SAMPLES - 2];
            let mut b = RHO_MAX;
            while b < 1e15 && g(2.0 * b) > g(b) {
                a = b;
                b *= 2.0;
            }
            notes.push(format!("maximiser beyond rho = {RHO_MAX:e}"));
            (a, 2.0 * b)
        } else {
            (rhos[best.saturating_sub(1)], rhos[best + 1])
        };
        let phi = 0.5 * (5f64.sqrt() - 1.0);
        let mut c = hi - phi * (hi - lo);
        let mut d = lo + phi * (hi - lo);
        let (mut gc, mut gd) = (g(c), g(d));
        for _ in 0..200 {
            if hi - lo <= 1e-10 * hi {
                break;
            }
            if gc >= gd {
                hi = d;
                d = c;
                gd = gc;
                c = hi - phi * (hi - lo);
                gc = g(c);
            } else {
                lo = c;
                c = d;
                gc = gd;
                d = lo + phi * (hi - lo);
                gd = g(d);
            }
        }
        let (mut rho, mut val) = if gc >= gd { (c, gc) } else { (d, gd) };
        if vals[best] > val {
            rho = rhos[best];
            val = vals[best];
        }
        (val.max(0.0), rho, notes)
    }
}

/// Piecewise-linear lower bound `E_x(R) >= max_j -rho_j R + E0x(rho_j)` from
/// a fixed `rho` table; cheap to evaluate inside searches.
#[derive(Debug, Clone)]
pub struct ExpurgatedTable {
    rhos: Vec<f64>,
    e0: Vec<f64>,
    kernel: ExpurgatedKernel,
}

impl ExpurgatedTable {
    pub fn new(kernel: ExpurgatedKernel) -> Self {
        let rhos: Vec<f64> = (0..RHO_SAMPLES).map(|i| RHO_MAX.powf(i as f64 / (RHO_SAMPLES - 1) as f64)).collect();
        let e0 = rhos.iter().map(|&r| kernel.e0x(r)).collect();
        Self { rhos, e0, kernel }
    }

    pub fn lower(&self, rate: f64) -> f64 {
        if rate < self.kernel.zero_error_rate() - 1e-15 && self.kernel.mass < 1.0 - 1e-15 {
            return f64::INFINITY;
        }
        if rate <= 0.0 {
            return self.kernel.limit_at_zero_rate().max(0.0);
        }
        self.rhos.iter().zip(&self.e0).map(|(&r, &e)| -r * rate + e).fold(0.0, f64::max)
    }

    pub fn exact(&self, rate: f64) -> f64 {
        self.kernel.maximise(rate).0
    }

    /// Pointwise at least as large as `other` at every rate.
    pub fn dominates(&self, other: &Self) -> bool {
        self.kernel.zero_error_rate() >= other.kernel.zero_error_rate()
            && self.kernel.limit_at_zero_rate() >= other.kernel.limit_at_zero_rate()
            && self.e0.iter().zip(&other.e0).all(|(a, b)| a >= b)
    }
}

/// `E_x(R, P_SX)` for a fixed time-sharing input.
pub fn expurgated_fixed(rate: f64, input: &InputDist, channel: &CondDist) -> Result<ChannelExponentValue> {
    if !(rate >= 0.0) {
        return Err(Error::Domain(format!("rate {rate} must be nonnegative")));
    }
    input.check_channel(channel)?;
    let kernel = ExpurgatedKernel::new(&pair_weights(input), &bhattacharyya(channel));
    let (value, rho, diagnostics) = kernel.maximise(rate);
    Ok(ChannelExponentValue { value, rho: Some(rho), input: Some(input.clone()), p_x: None, feasible: true, diagnostics })
}

fn expurgated_px(rate: f64, px: &[f64], z: &[f64]) -> (f64, f64) {
    let (v, rho, _) = ExpurgatedKernel::new(&product_weights(px), z).maximise(rate);
    (v, rho)
}

/// `E_x(R)` maximised over `P_X` on a simplex grid, followed by one round
/// of pairwise mass-shifting refinement.
pub fn expurgated_free(rate: f64, channel: &CondDist, grid_step: f64) -> Result<ChannelExponentValue> {
    if !(rate >= 0.0) {
        return Err(Error::Domain(format!("rate {rate} must be nonnegative")));
    }
    let n = channel.from_alphabet().size();
    let res = lattice_resolution(grid_step)?;
    let count = crate::prob::simplex_count(n, res);
    if count > 2_000_000 {
        return Err(Error::Guard(format!("input grid has {count} points; use a coarser step")));
    }
    let z = bhattacharyya(channel);
    let mut best_px = vec![1.0 / n as f64; n];
    let (mut best, mut best_rho) = expurgated_px(rate, &best_px, &z);
    for px in simplex_points(n, res) {
        let (v, rho) = expurgated_px(rate, &px, &z);
        if v > best {
            best = v;
            best_rho = rho;
            best_px = px;
        }
    }
    let mut delta = grid_step / 2.0;
    while delta > grid_step / 64.0 && best.is_finite() {
        let mut improved = true;
        while improved {
            improved = false;
            for a in 0..n {
                for b in 0..n {
                    if a == b || best_px[a] < delta {
                        continue;
                    }
                    let mut cand = best_px.clone();
                    cand[a] -= delta;
                    cand[b] += delta;
                    let (v, rho) = expurgated_px(rate, &cand, &z);
                    if v > best + 1e-14 {
                        best = v;
                        best_rho = rho;
                        best_px = cand;
                        improved = true;
                    }
                }
            }
        }
        delta /= 2.0;
    }
    let p_x = FiniteDist::new(channel.from_alphabet().clone(), best_px)?;
    Ok(ChannelExponentValue { value: best, rho: Some(best_rho), input: None, p_x: Some(p_x), feasible: true, diagnostics: Vec::new() })
}

/// Red-alert exponent `sum_s P_S(s) D(P_{Y|S=s} || P_{Y|X=s})`.
pub fn red_alert_fixed(input: &InputDist, channel: &CondDist) -> Result<ChannelExponentValue> {
    input.check_channel(channel)?;
    let mut out = ChannelExponentValue::plain(red_alert_raw(input, channel));
    out.input = Some(input.clone());
    Ok(out)
}

pub(crate) fn red_alert_raw(input: &InputDist, channel: &CondDist) -> f64 {
    let mut total = 0.0;
    for (s, &ps) in input.p_s.probs().iter().enumerate() {
        if ps == 0.0 {
            continue;
        }
        total += ps * red_alert_row(s, input.p_x_given_s.row(s), channel);
    }
    total
}

fn red_alert_row(s: usize, row: &[f64], channel: &CondDist) -> f64 {
    kl_of(&channel.push_forward(row), channel.row(s))
}

/// Maximum red-alert exponent over inputs with `I(X;Y|S) = R`. Rows of
/// `P_{X|S}` run over the simplex lattice; `P_S` is optimised exactly, which
/// (one linear constraint) only ever needs one or two active letters. A
/// single active letter may miss `R` by at most `tol`.
pub fn red_alert_max(rate: f64, channel: &CondDist, tol: f64, grid_step: f64) -> Result<ChannelExponentValue> {
    if !(rate >= 0.0) {
        return Err(Error::Domain(format!("rate {rate} must be nonnegative")));
    }
    let n = channel.from_alphabet().size();
    let res = lattice_resolution(grid_step)?;
    let rows = simplex_points(n, res);
    if (n * (n - 1) / 2).max(1) * rows.len() * rows.len() > 50_000_000 {
        return Err(Error::Guard(format!("{} rows per letter is too many; use a coarser step", rows.len())));
    }
    // (I_s(row), D_s(row)) for every letter and row
    let pts: Vec<Vec<(f64, f64)>> = (0..n)
        .map(|s| rows.iter().map(|r| (input_mutual_info(r, channel), red_alert_row(s, r, channel))).collect())
        .collect();
    let mut best = f64::NEG_INFINITY;
    let mut arg: Option<(usize, usize, usize, usize, f64)> = None;
    for (s, row) in pts.iter().enumerate() {
        for (i, &(rate_i, d_i)) in row.iter().enumerate() {
            if (rate_i - rate).abs() <= tol && d_i > best {
                best = d_i;
                arg = Some((s, i, s, i, 1.0));
            }
        }
    }
    for s in 0..n {
        for t in (s + 1)..n {
            for (i, &(ra, da)) in pts[s].iter().enumerate() {
                for (j, &(rb, db)) in pts[t].iter().enumerate() {
                    let (lo, hi) = if ra <= rb { (ra, rb) } else { (rb, ra) };
                    if !(lo < rate && rate < hi) {
                        continue;
                    }
                    let lam = (rb - rate) / (rb - ra);
                    let v = mix(lam, da, db);
                    if v > best {
                        best = v;
                        arg = Some((s, i, t, j, lam));
                    }
                }
            }
        }
    }
    let Some((s, i, t, j, lam)) = arg else {
        let mut out = ChannelExponentValue::plain(f64::NEG_INFINITY);
        out.feasible = false;
        out.diagnostics.push(format!("no input on the grid has I(X;Y|S) within {tol:e} of {rate}"));
        return Ok(out);
    };
    let sa = Alphabet::new("S", n)?;
    let xa = Alphabet::new("X", n)?;
    let mut p_s = vec![0.0; n];
    p_s[s] += lam;
    p_s[t] += 1.0 - lam;
    let mut cond_rows = vec![vec![1.0 / n as f64; n]; n];
    cond_rows[s] = rows[i].clone();
    cond_rows[t] = rows[j].clone();
    let input = InputDist::new(FiniteDist::new(sa.clone(), p_s)?, CondDist::new(sa, xa, cond_rows)?)?;
    let mut out = ChannelExponentValue::plain(best);
    out.input = Some(input);
    Ok(out)
}

fn mix(lam: f64, a: f64, b: f64) -> f64 {
    let part = |w: f64, v: f64| if w == 0.0 { 0.0 } else { w * v };
    part(lam, a) + part(1.0 - lam, b)
}

/// `max_{a != b} D(W_a || W_b)` with the lexicographically smallest maximiser.
pub fn max_pair_divergence(channel: &CondDist) -> (f64, Option<(usize, usize)>) {
    let n = channel.from_alphabet().size();
    let mut best = 0.0;
    let mut arg = None;
    for a in 0..n {
        for b in 0..n {
            if a == b {
                continue;
            }
            let d = kl_of(channel.row(a), channel.row(b));
            if arg.is_none() || d > best {
                best = d;
                arg = Some((a, b));
            }
        }
    }
    (best, arg)
}

/// `I(X;Y)` of an explicit joint, used by the tests as a cross-check.
#[allow(dead_code)]
fn joint_rate(px: &FiniteDist, channel: &CondDist) -> Result<f64> {
    let j = px.to_joint().compose(&channel.relabel(px.alphabet().name(), "Y"), &[px.alphabet().name()])?;
    mutual_info(&j, &[px.alphabet().name()], &["Y"])
}
