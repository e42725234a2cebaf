//! Exact Neyman-Pearson errors at finite blocklength, by convolving the
//! quantised per-letter log-likelihood ratio, plus a Monte Carlo companion.
//!
//! The test accepts `H0` when `L = sum ln(P/Q) >= t`, with the largest
//! deterministic `t` that keeps `alpha <= eps`. Each finite per-letter LLR `l`
//! is rounded to `floor(l/b)` and `ceil(l/b)` bins; the two rounded sums
//! bracket `L` and give a certified interval `[beta_lo, beta_hi]` around the
//! type-II error of the exact test. Halving `b` nests the interval.
//!
//! Letters with `Q = 0 < P` carry `L = +inf` (always accepted, never seen
//! under `H1`); letters with `P = 0 < Q` carry `L = -inf` (always rejected,
//! never seen under `H0`).

use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::exponents::HTInstance;
use crate::info::kl_of;
use crate::prob::{JointDist, MASS_TOL};
use crate::{Error, Result};

/// Largest support any convolved distribution may reach.
pub const MAX_SUPPORT: usize = 10_000_000;
/// Cap on the remaining convolution work (atom pairs), projected from the
/// current support. Support never shrinks, so the projection is a lower
/// bound on the true remaining work.
pub const MAX_WORK: f64 = 1e9;
pub const DEFAULT_BIN_WIDTH: f64 = 1e-4;
/// Smallest Monte Carlo budget.
pub const MIN_TRIALS: usize = 1000;
const WILSON_Z: f64 = 1.96;
const SHARD: usize = 1000;

/// Per-letter laws of the detector's observation under both hypotheses.
#[derive(Debug, Clone, PartialEq)]
pub struct PairSource {
    pub p: JointDist,
    pub q: JointDist,
}

impl PairSource {
    pub fn new(p: JointDist, q: JointDist) -> Result<Self> {
        p.same_axes(&q)?;
        Ok(Self { p, q })
    }

    /// The detector sees `(U, V)` directly.
    pub fn centralized(inst: &HTInstance) -> Result<Self> {
        Self::new(inst.p_uv.clone(), inst.q_uv.clone())
    }

    /// `X = U` sent over the channel; the detector sees `(V, Y)`.
    pub fn uncoded(inst: &HTInstance) -> Result<Self> {
        if inst.u_size() != inst.x_size() {
            return Err(Error::Dimension(format!(
                "uncoded transmission needs |U| = |X| ({} vs {})",
                inst.u_size(),
                inst.x_size()
            )));
        }
        let ch = inst.channel.relabel("U", "Y");
        let see = |j: &JointDist| j.compose(&ch, &["U"])?.marginalize(&["V", "Y"]);
        Self::new(see(&inst.p_uv)?, see(&inst.q_uv)?)
    }

    /// `D(P || Q)` in nats, the Stein exponent.
    pub fn divergence(&self) -> f64 {
        kl_of(self.p.probs(), self.q.probs())
    }
}

/// Errors of the deterministic test at one blocklength.
#[derive(Debug, Clone, PartialEq)]
pub struct NpErrors {
    pub n: usize,
    /// Type-I error of the implemented test (threshold on the rounded-down sum).
    pub alpha: f64,
    pub beta_lo: f64,
    pub beta_hi: f64,
    pub ln_beta_lo: f64,
    pub ln_beta_hi: f64,
    /// Type-II error of the implemented test; lies in `[0, beta_hi]`.
    pub beta_test: f64,
    /// Threshold in bins; `None` means only `L = +inf` is accepted.
    pub threshold_bins: Option<i64>,
}

/// A list of [`NpErrors`] and the least-squares slope of `-ln beta_hi`
/// against `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorCurve {
    pub points: Vec<NpErrors>,
    pub slope: f64,
    pub intercept: f64,
    /// `-ln beta_hi - (intercept + slope n)` per point.
    pub residuals: Vec<f64>,
}

/// Sparse distribution over integer bins, masses in the log domain.
type LogDist = Vec<(i64, f64)>;

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

fn log_sum(it: impl Iterator<Item = f64>) -> f64 {
    it.fold(f64::NEG_INFINITY, log_add)
}

/// Atoms `(bin, ln mass)` with equal bins merged.
fn merge(mut v: Vec<(i64, f64)>) -> LogDist {
    v.sort_unstable_by_key(|a| a.0);
    let mut out: LogDist = Vec::with_capacity(v.len());
    for (k, m) in v {
        match out.last_mut() {
            Some((lk, lm)) if *lk == k => *lm = log_add(*lm, m),
            _ => out.push((k, m)),
        }
    }
    out
}

/// One convolution step. `cur` shifted by each atom is already sorted, so
/// the shifted copies are merged head by head instead of re-sorted.
fn step(cur: &LogDist, atoms: &LogDist) -> Result<LogDist> {
    let mut heads = vec![0usize; atoms.len()];
    let mut out: LogDist = Vec::with_capacity(cur.len() + atoms.len());
    loop {
        let next = heads
            .iter()
            .zip(atoms)
            .filter(|(&h, _)| h < cur.len())
            .map(|(&h, &(a, _))| cur[h].0 + a)
            .min();
        let Some(bin) = next else { break };
        let mut mass = f64::NEG_INFINITY;
        for (h, &(a, am)) in heads.iter_mut().zip(atoms) {
            if *h < cur.len() && cur[*h].0 + a == bin {
                mass = log_add(mass, cur[*h].1 + am);
                *h += 1;
            }
        }
        out.push((bin, mass));
    }
    if out.len() >= MAX_SUPPORT {
        return Err(Error::Guard(format!(
            "convolution support reached {} bins (limit {MAX_SUPPORT}); use a wider bin",
            out.len()
        )));
    }
    Ok(out)
}

struct Atoms {
    p_down: LogDist,
    p_up: LogDist,
    q_down: LogDist,
    q_up: LogDist,
}

fn atoms(src: &PairSource, bin_width: f64) -> Result<Atoms> {
    let (mut p_down, mut p_up, mut q_down, mut q_up) = (vec![], vec![], vec![], vec![]);
    for (&p, &q) in src.p.probs().iter().zip(src.q.probs()) {
        if p > 0.0 && q > 0.0 {
            let x = (p / q).ln() / bin_width;
            if !(x.abs() < 1e15) {
                return Err(Error::Guard(format!("LLR bin index {x:.3e} out of range; use a wider bin")));
            }
            let (lo, hi) = (x.floor() as i64, x.ceil() as i64);
            p_down.push((lo, p.ln()));
            p_up.push((hi, p.ln()));
            q_down.push((lo, q.ln()));
            q_up.push((hi, q.ln()));
        }
    }
    Ok(Atoms { p_down: merge(p_down), p_up: merge(p_up), q_down: merge(q_down), q_up: merge(q_up) })
}

/// Largest `k` with `P(K < k) <= eps`, `None` when all finite mass fits.
/// Masses within [`MASS_TOL`] of `eps` count as equal to it.
fn threshold(p: &LogDist, eps: f64) -> (Option<i64>, f64) {
    let mut below = 0.0;
    for &(k, m) in p {
        let mass = m.exp();
        if below + mass > eps + MASS_TOL {
            return (Some(k), below);
        }
        below += mass;
    }
    (None, below)
}

fn ln_tail(q: &LogDist, from: Option<i64>) -> f64 {
    match from {
        None => f64::NEG_INFINITY,
        Some(t) => log_sum(q.iter().filter(|(k, _)| *k >= t).map(|(_, m)| *m)),
    }
}

fn errors_at(n: usize, d: &Atoms, eps: f64) -> NpErrors {
    let (t_d, alpha) = threshold(&d.p_down, eps);
    let (t_u, _) = threshold(&d.p_up, eps);
    let ln_hi = ln_tail(&d.q_up, t_d);
    let ln_lo = ln_tail(&d.q_down, t_u.map(|t| t + 1));
    NpErrors {
        n,
        alpha,
        beta_lo: ln_lo.exp(),
        beta_hi: ln_hi.exp(),
        ln_beta_lo: ln_lo,
        ln_beta_hi: ln_hi,
        beta_test: ln_tail(&d.q_down, t_d).exp(),
        threshold_bins: t_d,
    }
}

fn check_args(eps: f64, bin_width: f64) -> Result<()> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Domain(format!("eps {eps} outside (0, 1)")));
    }
    if !(bin_width > 0.0 && bin_width.is_finite()) {
        return Err(Error::Domain(format!("bin width {bin_width} must be positive")));
    }
    Ok(())
}

/// Errors at every `n` in `ns` (strictly increasing) from a single pass of
/// convolutions.
pub fn exact_np_curve(src: &PairSource, ns: &[usize], eps: f64, bin_width: f64) -> Result<Vec<NpErrors>> {
    check_args(eps, bin_width)?;
    if ns.is_empty() || ns[0] == 0 || ns.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Domain(format!("blocklengths {ns:?} must be positive and strictly increasing")));
    }
    let a = atoms(src, bin_width)?;
    let mut cur = Atoms { p_down: vec![(0, 0.0)], p_up: vec![(0, 0.0)], q_down: vec![(0, 0.0)], q_up: vec![(0, 0.0)] };
    let mut out = Vec::with_capacity(ns.len());
    let mut wanted = ns.iter().peekable();
    for n in 1..=*ns.last().expect("nonempty") {
        cur = Atoms {
            p_down: step(&cur.p_down, &a.p_down)?,
            p_up: step(&cur.p_up, &a.p_up)?,
            q_down: step(&cur.q_down, &a.q_down)?,
            q_up: step(&cur.q_up, &a.q_up)?,
        };
        if wanted.peek() == Some(&&n) {
            wanted.next();
            out.push(errors_at(n, &cur, eps));
        }
        let width = cur.p_down.len().max(cur.p_up.len()).max(cur.q_down.len()).max(cur.q_up.len());
        let per_step = (width * a.p_down.len().max(a.p_up.len())) as f64 * 4.0;
        let work = per_step * (ns[ns.len() - 1] - n) as f64;
        if work > MAX_WORK {
            return Err(Error::Guard(format!(
                "support of {width} bins at n = {n} projects to more than {MAX_WORK:e} convolution terms; use a wider bin or fewer blocklengths"
            )));
        }
    }
    Ok(out)
}

/// Errors of the deterministic Neyman-Pearson test at blocklength `n`.
pub fn exact_np_errors(src: &PairSource, n: usize, eps: f64, bin_width: f64) -> Result<NpErrors> {
    Ok(exact_np_curve(src, &[n], eps, bin_width)?.remove(0))
}

/// Least-squares slope of `-ln beta_hi` against `n`.
pub fn stein_slope(src: &PairSource, ns: &[usize], eps: f64, bin_width: f64) -> Result<ErrorCurve> {
    let points = exact_np_curve(src, ns, eps, bin_width)?;
    let xs: Vec<f64> = points.iter().map(|p| p.n as f64).collect();
    let ys: Vec<f64> = points.iter().map(|p| -p.ln_beta_hi).collect();
    let (slope, intercept) = if xs.len() == 1 {
        (ys[0] / xs[0], 0.0)
    } else {
        let k = xs.len() as f64;
        let (mx, my) = (xs.iter().sum::<f64>() / k, ys.iter().sum::<f64>() / k);
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
        let s = sxy / sxx;
        (s, my - s * mx)
    };
    let residuals = xs.iter().zip(&ys).map(|(x, y)| y - (intercept + slope * x)).collect();
    Ok(ErrorCurve { points, slope, intercept, residuals })
}

/// Wilson score interval `(low, high)` for `hits` out of `trials`.
pub fn wilson_interval(hits: usize, trials: usize) -> (f64, f64) {
    let n = trials as f64;
    let p = hits as f64 / n;
    let z2 = WILSON_Z * WILSON_Z;
    let centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
    let half = WILSON_Z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / (1.0 + z2 / n);
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct McErrors {
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
    pub alpha_hat: f64,
    pub alpha_interval: (f64, f64),
    pub beta_hat: f64,
    pub beta_interval: (f64, f64),
    /// Exact errors of the same test, for comparison.
    pub exact: NpErrors,
}

/// Outcome of a Monte Carlo request: a run, or the reason it was skipped.
#[derive(Debug, Clone, PartialEq)]
pub enum McOutcome {
    Ran(McErrors),
    Skipped { reason: String, exact: NpErrors },
}

/// Samples the test of [`exact_np_errors`] under both hypotheses. Shard `j`
/// of hypothesis `h` draws from ChaCha8 stream `2 j + h` of `seed`.
pub fn mc_np_errors(src: &PairSource, n: usize, eps: f64, bin_width: f64, trials: usize, seed: u64) -> Result<McOutcome> {
    if trials < MIN_TRIALS {
        return Err(Error::Domain(format!("Monte Carlo needs at least {MIN_TRIALS} trials, got {trials}")));
    }
    let exact = exact_np_errors(src, n, eps, bin_width)?;
    if exact.beta_hi < 10.0 / trials as f64 {
        return Ok(McOutcome::Skipped {
            reason: format!(
                "beta_hi = {:.3e} < 10/trials = {:.3e}; sampling would see almost no type-II errors",
                exact.beta_hi,
                10.0 / trials as f64
            ),
            exact,
        });
    }
    // per-letter statistic: Some(bin) for finite LLRs, None for +-inf
    let stat: Vec<Option<i64>> = src
        .p
        .probs()
        .iter()
        .zip(src.q.probs())
        .map(|(&p, &q)| if p > 0.0 && q > 0.0 { Some(((p / q).ln() / bin_width).floor() as i64) } else { None })
        .collect();
    let accept = |cells: &mut dyn Iterator<Item = usize>, h1: bool| -> bool {
        let mut sum = 0i64;
        let mut infinite = false;
        for c in cells {
            match stat[c] {
                Some(k) => sum += k,
                // under H0 an infinite letter is +inf, under H1 it is -inf
                None if h1 => return false,
                None => infinite = true,
            }
        }
        infinite || exact.threshold_bins.is_some_and(|t| sum >= t)
    };
    let mut counts = [0usize; 2];
    for (h, law) in [src.p.probs(), src.q.probs()].into_iter().enumerate() {
        let dist = WeightedIndex::new(law).map_err(|e| Error::InvalidDistribution(e.to_string()))?;
        let mut done = 0;
        let mut shard = 0u64;
        while done < trials {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(2 * shard + h as u64);
            for _ in 0..SHARD.min(trials - done) {
                let ok = accept(&mut (0..n).map(|_| dist.sample(&mut rng)), h == 1);
                if (h == 0 && !ok) || (h == 1 && ok) {
                    counts[h] += 1;
                }
            }
            done += SHARD.min(trials - done);
            shard += 1;
        }
    }
    let t = trials as f64;
    Ok(McOutcome::Ran(McErrors {
        n,
        trials,
        seed,
        alpha_hat: counts[0] as f64 / t,
        alpha_interval: wilson_interval(counts[0], trials),
        beta_hat: counts[1] as f64 / t,
        beta_interval: wilson_interval(counts[1], trials),
        exact,
    }))
}
