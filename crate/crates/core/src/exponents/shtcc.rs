//! Separation scheme: quantise-and-bin source code followed by a channel
//! code that protects one special "error" message (red-alert exponent) while
//! ordinary messages at rate `R` get the expurgated exponent.
//!
//! For a test channel `P_{W|U}`, an input `(P_S, P_{X|S})` and a rate `R` with
//! `I(U;W|V) <= R < tau I(X;Y|S)`, the exponent is `min(E1, E2, E3, E4)`:
//!
//! ```text
//! E1 = min_{T1} D(P~ || Q_UVW)
//! E2 = min_{T2} D + R - I(U;W|V)                 if I(U;W) > R, else inf
//! E3 = min_{T3} D + R - I(U;W|V) + tau Ex(R/tau)  if I(U;W) > R
//!    = min_{T3} D + I(V;W)       + tau Ex(R/tau)  otherwise
//! E4 = D(P_V||Q_V) + R - I(U;W|V) + tau Em        if I(U;W) > R
//!    = D(P_V||Q_V) + I(V;W)       + tau Em        otherwise
//! ```
//!
//! with `Q_UVW = Q_UV P_{W|U}`. The search enumerates canonical `P_{W|U}` on a
//! lattice, a Pareto-pruned lattice of inputs, and a rate grid per pair,
//! then refines the incumbent by coordinate moves. Inside the grid phase the
//! expurgated exponent comes from a certified `rho`-table lower bound; the
//! winning point is re-evaluated exactly.

use serde_json::Value;

use super::search::{columns_canonical, golden_max, row_moves, stochastic_grid, MAX_GRID};
use super::{matrix_json, scaled, BoundKind, ExponentReport, HTInstance, SearchConfig};
use crate::channel::{
    bhattacharyya, conditional_rate, pair_weights, red_alert_raw, ExpurgatedKernel, ExpurgatedTable, InputDist,
};
use crate::info::{cond_mutual_info, mutual_info};
use crate::prob::{lattice_resolution, simplex_points, Alphabet, CondDist, FiniteDist};
use crate::projection::{t_set_projection, TKind};
use crate::{Error, Result};

/// Rates are kept this far below `tau I(X;Y|S)` to respect the strict inequality.
const RATE_MARGIN: f64 = 1e-6;
/// Gap kept below `I(U;W)` when evaluating the `I(U;W) > R` branch.
const BRANCH_GAP: f64 = 1e-9;

/// Full breakdown of the separation objective at one point (nats).
#[derive(Debug, Clone, PartialEq)]
pub struct ShtccTerms {
    pub e1: f64,
    pub e2: f64,
    pub e3: f64,
    pub e4: f64,
    pub value: f64,
    pub rate: f64,
    pub t2: f64,
    pub t3: f64,
    pub i_uw: f64,
    pub i_uw_given_v: f64,
    pub i_vw: f64,
    /// `I(X;Y|S)` of the input (per channel use).
    pub i_xy_given_s: f64,
    pub e_x: f64,
    pub e_m: f64,
    /// `I(U;W|V) <= R < tau I(X;Y|S)`.
    pub feasible: bool,
}

/// Everything about a test channel that does not depend on the input or rate.
#[derive(Debug, Clone)]
struct WEval {
    w: Vec<f64>,
    e1: f64,
    t3: f64,
    t2: Option<f64>,
    i_uw: f64,
    i_uw_v: f64,
    i_vw: f64,
}

struct InEval {
    input: InputDist,
    /// `tau I(X;Y|S)`.
    budget: f64,
    /// `tau E_m`, with `0 * inf = 0`.
    em: f64,
    table: ExpurgatedTable,
}

struct Ctx<'a> {
    inst: &'a HTInstance,
    w_alpha: Alphabet,
    d_v: f64,
    z: Vec<f64>,
}

impl<'a> Ctx<'a> {
    fn new(inst: &'a HTInstance, w_card: usize) -> Result<Self> {
        Ok(Self {
            inst,
            w_alpha: Alphabet::new("W", w_card)?,
            d_v: inst.side_info_divergence()?,
            z: bhattacharyya(&inst.channel),
        })
    }

    fn eval_w(&self, w: &[f64], with_t2: bool) -> Result<WEval> {
        let u = self.inst.p_uv.axis("U")?.clone();
        let cond = CondDist::from_flat_unchecked(u, self.w_alpha.clone(), w.to_vec());
        let p = self.inst.p_uv.compose(&cond, &["U"])?;
        let q = self.inst.q_uv.compose(&cond, &["U"])?;
        let e1 = t_set_projection(TKind::T1, &p, &q)?.value;
        let t3 = t_set_projection(TKind::T3, &p, &q)?.value;
        let t2 = if with_t2 { Some(t_set_projection(TKind::T2, &p, &q)?.value) } else { None };
        Ok(WEval {
            w: w.to_vec(),
            e1,
            t3,
            t2,
            i_uw: mutual_info(&p, &["U"], &["W"])?,
            i_uw_v: cond_mutual_info(&p, &["U"], &["W"], &["V"])?,
            i_vw: mutual_info(&p, &["V"], &["W"])?,
        })
    }

    fn eval_input(&self, input: InputDist) -> InEval {
        let tau = self.inst.tau;
        let budget = tau * conditional_rate(&input, &self.inst.channel);
        let em = scaled(tau, red_alert_raw(&input, &self.inst.channel));
        let table = ExpurgatedTable::new(ExpurgatedKernel::new(&pair_weights(&input), &self.z));
        InEval { input, budget, em, table }
    }

    fn ex_lower(&self, ine: &InEval, rate: f64) -> f64 {
        let tau = self.inst.tau;
        if tau == 0.0 {
            0.0
        } else {
            tau * ine.table.lower(rate / tau)
        }
    }

    /// `(E2, E3, E4)` given `tau Ex(R/tau)`.
    fn terms(&self, wv: &WEval, t2: f64, em: f64, ex: f64, rate: f64) -> (f64, f64, f64) {
        if wv.i_uw > rate {
            let slack = rate - wv.i_uw_v;
            (t2 + slack, wv.t3 + slack + ex, self.d_v + slack + em)
        } else {
            (f64::INFINITY, wv.t3 + wv.i_vw + ex, self.d_v + wv.i_vw + em)
        }
    }

    fn value_at(&self, wv: &WEval, ine: &InEval, rate: f64) -> f64 {
        let t2 = wv.t2.unwrap_or(f64::INFINITY);
        let (e2, e3, e4) = self.terms(wv, t2, ine.em, self.ex_lower(ine, rate), rate);
        wv.e1.min(e2).min(e3).min(e4)
    }

    /// Best rate for a `(W, input)` pair, or `None` if no admissible rate exists.
    fn best_rate(&self, wv: &WEval, ine: &InEval, r_grid: usize) -> Option<(f64, f64)> {
        let lo = wv.i_uw_v;
        let top = ine.budget - RATE_MARGIN;
        if lo > top {
            return None;
        }
        let mut best: Option<(f64, f64)> = None;
        let mut consider = |r: f64, v: f64| {
            if best.is_none_or(|(bv, _)| v > bv) {
                best = Some((v, r));
            }
        };
        // I(U;W) <= R: the smallest such rate is best because Ex decreases in R
        if wv.i_uw <= top {
            let r = wv.i_uw.max(lo);
            consider(r, self.value_at(wv, ine, r));
        }
        let hi = (wv.i_uw - BRANCH_GAP).min(top);
        if hi >= lo {
            let n = r_grid.max(2);
            let pts: Vec<f64> = (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect();
            let vals: Vec<f64> = pts.iter().map(|&r| self.value_at(wv, ine, r)).collect();
            let mut k = 0;
            for (i, v) in vals.iter().enumerate() {
                if *v > vals[k] {
                    k = i;
                }
            }
            consider(pts[k], vals[k]);
            if hi > lo && vals[k].is_finite() {
                let a = pts[k.saturating_sub(1)];
                let b = pts[(k + 1).min(n - 1)];
                let (r, v) = golden_max(a, b, 40, |r| self.value_at(wv, ine, r));
                consider(r, v);
            }
        }
        best
    }
}

/// Separation objective at a single point, using the exact expurgated exponent.
pub fn shtcc_objective(inst: &HTInstance, w: &CondDist, input: &InputDist, rate: f64) -> Result<ShtccTerms> {
    if w.from_alphabet().size() != inst.u_size() {
        return Err(Error::Dimension(format!(
            "P_W|U has {} rows but |U| = {}",
            w.from_alphabet().size(),
            inst.u_size()
        )));
    }
    if input.p_s.len() != inst.x_size() {
        return Err(Error::Dimension(format!("input has {} letters, channel has {}", input.p_s.len(), inst.x_size())));
    }
    let ctx = Ctx::new(inst, w.to_alphabet().size())?;
    let wv = ctx.eval_w(w.matrix(), true)?;
    Ok(exact_terms(&ctx, &wv, &ctx.eval_input(input.clone()), rate))
}

fn exact_terms(ctx: &Ctx, wv: &WEval, ine: &InEval, rate: f64) -> ShtccTerms {
    let tau = ctx.inst.tau;
    let ex = if tau == 0.0 { 0.0 } else { tau * ine.table.exact(rate / tau) };
    let t2 = wv.t2.unwrap_or(f64::INFINITY);
    let (e2, e3, e4) = ctx.terms(wv, t2, ine.em, ex, rate);
    let i_xy = if tau == 0.0 { conditional_rate(&ine.input, &ctx.inst.channel) } else { ine.budget / tau };
    ShtccTerms {
        e1: wv.e1,
        e2,
        e3,
        e4,
        value: wv.e1.min(e2).min(e3).min(e4),
        rate,
        t2,
        t3: wv.t3,
        i_uw: wv.i_uw,
        i_uw_given_v: wv.i_uw_v,
        i_vw: wv.i_vw,
        i_xy_given_s: i_xy,
        e_x: ex,
        e_m: ine.em,
        feasible: wv.i_uw_v <= rate && rate < ine.budget,
    }
}

fn input_from(n: usize, p_s: &[f64], rows: &[f64]) -> Result<InputDist> {
    let s = Alphabet::new("S", n)?;
    let x = Alphabet::new("X", n)?;
    InputDist::new(FiniteDist::new(s.clone(), p_s.to_vec())?, CondDist::from_flat_unchecked(s, x, rows.to_vec()))
}

/// Lattice of time-sharing inputs, skipping rows of letters with `P_S = 0`.
fn input_grid(n: usize, step: f64) -> Result<Vec<(Vec<f64>, Vec<f64>)>> {
    let res = lattice_resolution(step)?;
    let ps_grid = simplex_points(n, res);
    let rows = stochastic_grid(n, n, step)?;
    if ps_grid.len() as f64 * rows.len() as f64 > MAX_GRID as f64 {
        return Err(Error::Guard(format!(
            "input grid has {} points (limit {MAX_GRID}); use a coarser step",
            ps_grid.len() * rows.len()
        )));
    }
    let first_row = simplex_points(n, res)[0].clone();
    let mut out = Vec::new();
    for ps in &ps_grid {
        for m in &rows {
            let redundant = (0..n).any(|s| ps[s] == 0.0 && m[s * n..(s + 1) * n] != first_row[..]);
            if !redundant {
                out.push((ps.clone(), m.clone()));
            }
        }
    }
    Ok(out)
}

fn pareto(inputs: Vec<InEval>) -> Vec<InEval> {
    let mut order: Vec<usize> = (0..inputs.len()).collect();
    order.sort_by(|&a, &b| {
        inputs[b]
            .budget
            .total_cmp(&inputs[a].budget)
            .then(inputs[b].em.total_cmp(&inputs[a].em))
            .then(a.cmp(&b))
    });
    let mut keep: Vec<usize> = Vec::new();
    for &i in &order {
        let c = &inputs[i];
        let dominated = keep.iter().any(|&k| {
            let f = &inputs[k];
            f.budget >= c.budget && f.em >= c.em && f.table.dominates(&c.table)
        });
        if !dominated {
            keep.push(i);
        }
    }
    keep.sort_unstable();
    let mut slots: Vec<Option<InEval>> = inputs.into_iter().map(Some).collect();
    keep.into_iter().map(|i| slots[i].take().expect("unique index")).collect()
}

struct Incumbent {
    value: f64,
    wv: WEval,
    input: usize,
    rate: f64,
}

/// Grid search plus coordinate refinement for the separation exponent.
pub fn shtcc_exponent(inst: &HTInstance, cfg: &SearchConfig) -> Result<ExponentReport> {
    cfg.validate()?;
    let nx = inst.x_size();
    if let Some(s) = cfg.s_card {
        if s != nx {
            return Err(Error::Unsupported(format!("time-sharing alphabet must have |X| = {nx} letters, got {s}")));
        }
    }
    let nu = inst.u_size();
    let w_card = cfg.w_card_for(nu);
    let ctx = Ctx::new(inst, w_card)?;

    let raw_inputs = input_grid(nx, cfg.grid_step)?;
    let inputs_total = raw_inputs.len();
    let mut evaluated = Vec::new();
    for (ps, rows) in &raw_inputs {
        let ine = ctx.eval_input(input_from(nx, ps, rows)?);
        if ine.budget > RATE_MARGIN {
            evaluated.push(ine);
        }
    }
    let mut inputs = pareto(evaluated);

    let w_grid: Vec<Vec<f64>> = stochastic_grid(nu, w_card, cfg.grid_step)?
        .into_iter()
        .filter(|m| columns_canonical(m, nu, w_card))
        .collect();

    let mut rep = ExponentReport::new("shtcc", 0.0, BoundKind::SearchLowerBound);
    rep.search.insert("grid_step".into(), Value::from(cfg.grid_step));
    rep.search.insert("w_card".into(), Value::from(w_card));
    rep.search.insert("w_points".into(), Value::from(w_grid.len()));
    rep.search.insert("input_points".into(), Value::from(inputs_total));
    rep.search.insert("input_frontier".into(), Value::from(inputs.len()));
    rep.search.insert("r_grid".into(), Value::from(cfg.r_grid));
    rep.search.insert("refine_rounds".into(), Value::from(cfg.refine_rounds));

    let mut best: Option<Incumbent> = None;
    let mut feasible_pairs = 0usize;
    let mut evaluations = 0usize;
    for w in &w_grid {
        let mut wv = ctx.eval_w(w, false)?;
        evaluations += 1;
        feasible_pairs += inputs.iter().filter(|ine| wv.i_uw_v <= ine.budget - RATE_MARGIN).count();
        if best.as_ref().is_some_and(|b| wv.e1 <= b.value) {
            continue;
        }
        consider_w(&ctx, &mut wv, &inputs, cfg.r_grid, &mut best)?;
    }
    let total_pairs = w_grid.len() * inputs.len();
    rep.search.insert(
        "feasible_fraction".into(),
        Value::from(if total_pairs == 0 { 0.0 } else { feasible_pairs as f64 / total_pairs as f64 }),
    );

    let Some(mut inc) = best else {
        rep.feasible = false;
        rep.diagnostics.push("no feasible (W,SX,R)".into());
        rep.search.insert("evaluations".into(), Value::from(evaluations));
        return Ok(rep);
    };

    // coordinate refinement of W and of the incumbent input
    for _ in 0..cfg.refine_rounds {
        let mut delta = cfg.grid_step / 2.0;
        while delta >= 1e-7 {
            let mut improved = true;
            while improved {
                improved = false;
                for cand in row_moves(&inc.wv.w, nu, w_card, delta) {
                    let mut wv = ctx.eval_w(&cand, false)?;
                    evaluations += 1;
                    if wv.e1 <= inc.value {
                        continue;
                    }
                    let mut local = None;
                    consider_w(&ctx, &mut wv, &inputs, cfg.r_grid, &mut local)?;
                    if let Some(l) = local {
                        if l.value > inc.value + 1e-12 {
                            inc = l;
                            improved = true;
                        }
                    }
                }
                let cur = &inputs[inc.input].input;
                let ps = cur.p_s.probs().to_vec();
                let rows = cur.p_x_given_s.matrix().to_vec();
                let mut cands: Vec<(Vec<f64>, Vec<f64>)> =
                    row_moves(&ps, 1, nx, delta).into_iter().map(|p| (p, rows.clone())).collect();
                cands.extend(row_moves(&rows, nx, nx, delta).into_iter().map(|r| (ps.clone(), r)));
                for (p, r) in cands {
                    let ine = ctx.eval_input(input_from(nx, &p, &r)?);
                    if let Some((v, rate)) = ctx.best_rate(&inc.wv, &ine, cfg.r_grid) {
                        if v > inc.value + 1e-12 {
                            inputs.push(ine);
                            inc = Incumbent { value: v, wv: inc.wv.clone(), input: inputs.len() - 1, rate };
                            improved = true;
                        }
                    }
                }
            }
            delta /= 2.0;
        }
    }
    rep.search.insert("evaluations".into(), Value::from(evaluations));

    let ine = &inputs[inc.input];
    let terms = exact_terms(&ctx, &inc.wv, ine, inc.rate);
    debug_assert!(terms.value >= inc.value - 1e-12);
    rep.value_nats = terms.value;
    fill_terms(&mut rep, &terms);
    let u = inst.p_uv.axis("U")?.clone();
    rep.params.insert(
        "p_w_given_u".into(),
        matrix_json(&CondDist::from_flat_unchecked(u, ctx.w_alpha.clone(), inc.wv.w.clone())),
    );
    rep.params.insert("p_s".into(), Value::from(ine.input.p_s.probs().to_vec()));
    rep.params.insert("p_x_given_s".into(), matrix_json(&ine.input.p_x_given_s));
    rep.params.insert("rate".into(), Value::from(inc.rate));
    Ok(rep)
}

fn consider_w(ctx: &Ctx, wv: &mut WEval, inputs: &[InEval], r_grid: usize, best: &mut Option<Incumbent>) -> Result<()> {
    let branch_one = wv.i_uw - BRANCH_GAP >= wv.i_uw_v;
    if branch_one && wv.t2.is_none() {
        let u = ctx.inst.p_uv.axis("U")?.clone();
        let cond = CondDist::from_flat_unchecked(u, ctx.w_alpha.clone(), wv.w.clone());
        let p = ctx.inst.p_uv.compose(&cond, &["U"])?;
        let q = ctx.inst.q_uv.compose(&cond, &["U"])?;
        wv.t2 = Some(t_set_projection(TKind::T2, &p, &q)?.value);
    }
    for (k, ine) in inputs.iter().enumerate() {
        if let Some((v, rate)) = ctx.best_rate(wv, ine, r_grid) {
            if best.as_ref().is_none_or(|b| v > b.value) {
                *best = Some(Incumbent { value: v, wv: wv.clone(), input: k, rate });
            }
        }
    }
    Ok(())
}

fn fill_terms(rep: &mut ExponentReport, t: &ShtccTerms) {
    for (k, v) in [
        ("e1", t.e1),
        ("e2", t.e2),
        ("e3", t.e3),
        ("e4", t.e4),
        ("t2_divergence", t.t2),
        ("t3_divergence", t.t3),
        ("i_uw", t.i_uw),
        ("i_uw_given_v", t.i_uw_given_v),
        ("i_vw", t.i_vw),
        ("i_xy_given_s", t.i_xy_given_s),
        ("tau_e_x", t.e_x),
        ("tau_e_m", t.e_m),
    ] {
        rep.terms.insert(k.into(), v);
    }
}
