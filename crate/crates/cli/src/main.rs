//! `htexp` command-line front end.
//!
//! ```text
//! htexp exponent uncoded builtin:example1
//! htexp repro fig2 --out fig2.csv
//! htexp simulate builtin:example1 --scheme uncoded --n 200:2000:200 --csv curve.csv
//! htexp channel expurgated bsc.json --rate 0 --input-dist 0.5,0.5
//! ```
//!
//! Exit codes: 0 ok, 2 invalid input, 3 precondition not met, 4 size guard,
//! 1 I/O failure.

mod problem;
mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use htexp::channel::{
    capacity, expurgated_fixed, expurgated_free, max_pair_divergence, red_alert_fixed, red_alert_max, ChannelExponentValue,
    InputDist,
};
use htexp::exponents::{
    example1_report, fig2_curve, jhtcc_exponent, multiletter_k1, onebit_exponent, shtcc_exponent, taci_exponent,
    uncoded_exponent, zero_capacity_exponent, ExponentReport, HTInstance, SearchConfig, EXAMPLE1_P0, EXAMPLE1_Q,
};
use htexp::simulator::{mc_np_errors, stein_slope, McOutcome, PairSource};
use htexp::units::{nats_to_bits, Units};
use htexp::{Alphabet, FiniteDist};
use serde_json::{json, Map, Value};
use thiserror::Error;

use report::{emit, exponent_body, num, to_json_bytes, units_label};

const CAPACITY_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Precondition(String),
    #[error("{0}")]
    Guard(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(_) => 1,
            CliError::Validation(_) => 2,
            CliError::Precondition(_) => 3,
            CliError::Guard(_) => 4,
        }
    }

    /// Prefixes the message with the field or file it refers to.
    pub fn context(self, what: &str) -> Self {
        match self {
            CliError::Validation(m) => CliError::Validation(format!("{what}: {m}")),
            CliError::Precondition(m) => CliError::Precondition(format!("{what}: {m}")),
            CliError::Guard(m) => CliError::Guard(format!("{what}: {m}")),
            CliError::Io(m) => CliError::Io(format!("{what}: {m}")),
        }
    }
}

impl From<htexp::Error> for CliError {
    fn from(e: htexp::Error) -> Self {
        use htexp::Error as E;
        match e {
            E::Dimension(_) | E::InvalidDistribution(_) | E::Domain(_) => CliError::Validation(e.to_string()),
            E::Precondition(_) | E::Unsupported(_) => CliError::Precondition(e.to_string()),
            E::Guard(_) => CliError::Guard(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "htexp", version, about = "Error exponents for distributed hypothesis testing over noisy channels")]
struct Cli {
    /// Seed for every randomised step (Monte Carlo only).
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker cap. Accepted for interface stability; all work runs on one thread.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    /// Simplex lattice step for grid searches.
    #[arg(long, global = true, default_value_t = 0.05)]
    grid_step: f64,
    /// Reporting unit.
    #[arg(long, global = true, default_value = "bits")]
    units: Units,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Scheme {
    Shtcc,
    Jhtcc,
    Onebit,
    Taci,
    Uncoded,
    K1,
    Zerocap,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ReproTarget {
    Example1,
    Fig2,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SimScheme {
    Centralized,
    Uncoded,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Quantity {
    Capacity,
    Expurgated,
    Redalert,
    Ec,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute one exponent on a problem file (or `builtin:example1`).
    Exponent {
        #[arg(value_enum)]
        scheme: Scheme,
        problem: String,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Auxiliary alphabet size (default |U| + 1).
        #[arg(long)]
        w_card: Option<usize>,
        #[arg(long, default_value_t = 40)]
        r_grid: usize,
        #[arg(long, default_value_t = 2)]
        refine_rounds: usize,
        /// Time-sharing alphabet size.
        #[arg(long)]
        s_card: Option<usize>,
    },
    /// Regenerate the built-in example outputs.
    Repro {
        #[arg(value_enum)]
        target: ReproTarget,
        #[arg(long)]
        out: PathBuf,
        /// Step in r for the fig2 curve.
        #[arg(long, default_value_t = 0.005)]
        step: f64,
    },
    /// Exact Neyman-Pearson errors and Stein slope.
    Simulate {
        problem: String,
        #[arg(long, value_enum, default_value = "centralized")]
        scheme: SimScheme,
        /// Blocklengths: `a:b:step` or a comma list.
        #[arg(long)]
        n: Option<String>,
        #[arg(long, default_value_t = 0.2)]
        eps: f64,
        #[arg(long, default_value_t = htexp::simulator::DEFAULT_BIN_WIDTH)]
        bin_width: f64,
        /// Monte Carlo trials per blocklength (off when absent).
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Channel-side quantities of a channel or problem file.
    Channel {
        #[arg(value_enum)]
        quantity: Quantity,
        channel: String,
        /// Rate in nats per channel use.
        #[arg(long, default_value_t = 0.0)]
        rate: f64,
        /// Comma-separated P_X used i.i.d.; omit to optimise the input.
        #[arg(long)]
        input_dist: Option<String>,
        /// Rate-matching tolerance for the red-alert maximisation.
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    if cli.threads == 0 {
        return Err(CliError::Validation("--threads must be at least 1".into()));
    }
    match &cli.cmd {
        Command::Exponent { scheme, problem, out, w_card, r_grid, refine_rounds, s_card } => {
            let cfg = SearchConfig {
                w_card: *w_card,
                grid_step: cli.grid_step,
                r_grid: *r_grid,
                refine_rounds: *refine_rounds,
                s_card: *s_card,
            };
            cfg.validate()?;
            let inst = problem::load_problem(problem)?;
            let rep = compute_exponent(*scheme, &inst, &cfg)?;
            let mut body = exponent_body(&rep, cli.units);
            body.insert("command".into(), json!("exponent"));
            body.insert("problem".into(), json!(problem));
            body.insert("config".into(), config_echo(cli, &cfg));
            emit(out.as_deref(), &to_json_bytes(&envelope(cli, body)))
        }
        Command::Repro { target: ReproTarget::Fig2, out, step } => {
            let curve = fig2_curve(EXAMPLE1_Q, EXAMPLE1_P0, *step)?;
            let mut csv = String::from("r,f_prime_bits\n");
            for p in curve {
                csv.push_str(&format!("{},{}\n", (p.r * 1e9).round() / 1e9, p.f_prime_bits));
            }
            emit(Some(out), csv.as_bytes())
        }
        Command::Repro { target: ReproTarget::Example1, out, .. } => {
            let cfg = SearchConfig { grid_step: cli.grid_step, ..SearchConfig::default() };
            cfg.validate()?;
            let r = example1_report(&cfg)?;
            let landmarks: Vec<Value> = r
                .landmarks
                .iter()
                .map(|l| {
                    json!({"name": l.name, "value_bits": num(l.value_bits), "target_bits": l.target_bits,
                           "tolerance_bits": l.tolerance_bits, "pass": l.pass})
                })
                .collect();
            let mut body = Map::new();
            body.insert("command".into(), json!("repro example1"));
            body.insert("config".into(), config_echo(cli, &cfg));
            body.insert("uncoded_bits".into(), num(r.uncoded_bits));
            body.insert("ceiling_bits".into(), num(r.ceiling_bits));
            body.insert("branch2_bound_bits".into(), num(r.branch2_bound_bits));
            body.insert("landmarks".into(), Value::from(landmarks));
            body.insert("all_pass".into(), json!(r.all_pass()));
            body.insert("shtcc".into(), Value::Object(exponent_body(&r.shtcc, cli.units)));
            emit(Some(out), &to_json_bytes(&envelope(cli, body)))
        }
        Command::Simulate { problem, scheme, n, eps, bin_width, trials, out, csv } => {
            simulate(cli, problem, *scheme, n.as_deref(), *eps, *bin_width, *trials, out.as_deref(), csv.as_deref())
        }
        Command::Channel { quantity, channel, rate, input_dist, tol, out } => {
            let body = channel_cmd(cli, *quantity, channel, *rate, input_dist.as_deref(), *tol)?;
            emit(out.as_deref(), &to_json_bytes(&envelope(cli, body)))
        }
    }
}

fn compute_exponent(scheme: Scheme, inst: &HTInstance, cfg: &SearchConfig) -> Result<ExponentReport, CliError> {
    Ok(match scheme {
        Scheme::Shtcc => shtcc_exponent(inst, cfg)?,
        Scheme::Jhtcc => jhtcc_exponent(inst, cfg)?,
        Scheme::Onebit => onebit_exponent(inst)?,
        Scheme::Taci => taci_exponent(inst, cfg)?,
        Scheme::Uncoded => uncoded_exponent(inst)?,
        Scheme::K1 => multiletter_k1(inst, cfg.grid_step)?,
        Scheme::Zerocap => zero_capacity_exponent(inst)?,
    })
}

/// Seed, units and thread cap go into every report.
fn envelope(cli: &Cli, mut body: Map<String, Value>) -> Value {
    body.insert("seed".into(), json!(cli.seed));
    body.insert("units".into(), json!(units_label(cli.units)));
    body.insert("threads".into(), json!(cli.threads));
    Value::Object(body)
}

fn config_echo(cli: &Cli, cfg: &SearchConfig) -> Value {
    let mut v = serde_json::to_value(cfg).expect("config is serialisable");
    v["grid_step"] = json!(cli.grid_step);
    v
}

/// `a:b:step` (inclusive) or `n1,n2,...`.
fn parse_ns(s: &str) -> Result<Vec<usize>, CliError> {
    let bad = || CliError::Validation(format!("--n '{s}': expected a:b:step or a comma list of positive integers"));
    let ints = |parts: Vec<&str>| parts.iter().map(|p| p.trim().parse::<usize>().map_err(|_| bad())).collect::<Result<Vec<_>, _>>();
    let ns = if s.contains(':') {
        let v = ints(s.split(':').collect())?;
        let [a, b, step] = v[..] else { return Err(bad()) };
        if step == 0 || a > b {
            return Err(bad());
        }
        (a..=b).step_by(step).collect()
    } else {
        ints(s.split(',').collect())?
    };
    if ns.is_empty() || ns[0] == 0 || ns.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CliError::Validation(format!("--n '{s}': blocklengths must be positive and strictly increasing")));
    }
    Ok(ns)
}

fn sci(x: f64) -> String {
    if x.is_finite() {
        format!("{x:e}")
    } else {
        num(x).as_str().unwrap_or("nan").to_string()
    }
}

#[allow(clippy::too_many_arguments)]
fn simulate(
    cli: &Cli,
    problem: &str,
    scheme: SimScheme,
    n: Option<&str>,
    eps: f64,
    bin_width: f64,
    trials: Option<usize>,
    out: Option<&Path>,
    csv: Option<&Path>,
) -> Result<(), CliError> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(CliError::Validation(format!("--eps {eps} must lie in (0, 1)")));
    }
    if !(bin_width > 0.0 && bin_width.is_finite()) {
        return Err(CliError::Validation(format!("--bin-width {bin_width} must be positive")));
    }
    let ns = match (n, scheme) {
        (Some(s), _) => parse_ns(s)?,
        (None, SimScheme::Centralized) => (50..=500).step_by(50).collect(),
        (None, SimScheme::Uncoded) => (200..=2000).step_by(200).collect(),
    };
    let inst = problem::load_problem(problem)?;
    let (src, name) = match scheme {
        SimScheme::Centralized => (PairSource::centralized(&inst)?, "centralized"),
        SimScheme::Uncoded => (PairSource::uncoded(&inst)?, "uncoded"),
    };
    let curve = stein_slope(&src, &ns, eps, bin_width)?;
    let kl = src.divergence();
    let u = cli.units;

    let mut rows = String::from("n,alpha,beta_lo,beta_hi,slope_nats\n");
    let mut points = Vec::new();
    for (p, r) in curve.points.iter().zip(&curve.residuals) {
        rows.push_str(&format!("{},{},{},{},{}\n", p.n, sci(p.alpha), sci(p.beta_lo), sci(p.beta_hi), -p.ln_beta_hi / p.n as f64));
        points.push(json!({
            "n": p.n, "alpha": num(p.alpha), "beta_lo": num(p.beta_lo), "beta_hi": num(p.beta_hi),
            "beta_test": num(p.beta_test), "ln_beta_lo": num(p.ln_beta_lo), "ln_beta_hi": num(p.ln_beta_hi),
            "slope_nats": num(-p.ln_beta_hi / p.n as f64), "residual_nats": num(*r),
        }));
    }
    let mut body = Map::new();
    body.insert("command".into(), json!("simulate"));
    body.insert("problem".into(), json!(problem));
    body.insert("scheme".into(), json!(name));
    body.insert("config".into(), json!({"n": ns, "eps": eps, "bin_width": bin_width, "trials": trials}));
    body.insert("points".into(), Value::from(points));
    body.insert("slope".into(), num(u.scale(curve.slope)));
    body.insert("slope_nats".into(), num(curve.slope));
    body.insert("intercept_nats".into(), num(curve.intercept));
    body.insert("kl_target".into(), num(u.scale(kl)));
    body.insert("kl_target_nats".into(), num(kl));
    body.insert("kl_target_bits".into(), num(nats_to_bits(kl)));
    let gap = if kl > 0.0 { num((curve.slope - kl).abs() / kl) } else { Value::Null };
    body.insert("relative_gap".into(), gap);
    if let Some(t) = trials {
        let mut mc = Vec::new();
        for &n in &ns {
            mc.push(match mc_np_errors(&src, n, eps, bin_width, t, cli.seed)? {
                McOutcome::Ran(m) => json!({
                    "n": n, "status": "ran", "trials": m.trials, "seed": m.seed,
                    "alpha_hat": num(m.alpha_hat), "alpha_interval": [num(m.alpha_interval.0), num(m.alpha_interval.1)],
                    "beta_hat": num(m.beta_hat), "beta_interval": [num(m.beta_interval.0), num(m.beta_interval.1)],
                    "alpha_exact": num(m.exact.alpha), "beta_exact": num(m.exact.beta_test),
                }),
                McOutcome::Skipped { reason, .. } => json!({"n": n, "status": "skipped", "reason": reason}),
            });
        }
        body.insert("monte_carlo".into(), Value::from(mc));
    }
    if let Some(p) = csv {
        report::write_atomic(p, rows.as_bytes())?;
    }
    emit(out, &to_json_bytes(&envelope(cli, body)))
}

fn parse_input(s: &str, nx: usize) -> Result<InputDist, CliError> {
    let probs = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|_| CliError::Validation(format!("--input-dist '{s}': '{p}' is not a number"))))
        .collect::<Result<Vec<_>, _>>()?;
    if probs.len() != nx {
        return Err(CliError::Validation(format!("--input-dist has {} entries but the channel has {nx} inputs", probs.len())));
    }
    let px = FiniteDist::new(Alphabet::new("X", nx)?, probs).map_err(|e| CliError::from(e).context("--input-dist"))?;
    Ok(InputDist::iid(&px)?)
}

fn input_json(input: &InputDist) -> Value {
    json!({"p_s": input.p_s.probs(), "p_x_given_s": input.p_x_given_s.to_rows(), "p_x": input.p_x()})
}

fn channel_cmd(
    cli: &Cli,
    quantity: Quantity,
    path: &str,
    rate: f64,
    input_dist: Option<&str>,
    tol: f64,
) -> Result<Map<String, Value>, CliError> {
    if !(rate.is_finite() && rate >= 0.0) {
        return Err(CliError::Validation(format!("--rate {rate} must be finite and nonnegative")));
    }
    let ch = problem::load_channel(path)?;
    let nx = ch.from_alphabet().size();
    let input = input_dist.map(|s| parse_input(s, nx)).transpose()?;
    let mut body = Map::new();
    let mut optimizer = Map::new();
    let (name, value) = match quantity {
        Quantity::Capacity => {
            let (c, px) = capacity(&ch, CAPACITY_TOL)?;
            optimizer.insert("p_x".into(), json!(px.probs()));
            ("capacity", c)
        }
        Quantity::Expurgated => {
            let v = match &input {
                Some(i) => expurgated_fixed(rate, i, &ch)?,
                None => expurgated_free(rate, &ch, cli.grid_step)?,
            };
            exponent_optimizer(&v, &mut optimizer, &mut body);
            ("expurgated", v.value)
        }
        Quantity::Redalert => {
            let v = match &input {
                Some(i) => red_alert_fixed(i, &ch)?,
                None => red_alert_max(rate, &ch, tol, cli.grid_step)?,
            };
            exponent_optimizer(&v, &mut optimizer, &mut body);
            ("redalert", v.value)
        }
        Quantity::Ec => {
            let (d, pair) = max_pair_divergence(&ch);
            optimizer.insert("pair".into(), json!(pair.map(|(a, b)| vec![a, b])));
            ("ec", d)
        }
    };
    body.insert("command".into(), json!("channel"));
    body.insert("quantity".into(), json!(name));
    body.insert("channel".into(), json!(path));
    body.insert(
        "config".into(),
        json!({"rate_nats": rate, "input_dist": input_dist, "grid_step": cli.grid_step, "tol": tol}),
    );
    body.insert("value".into(), num(cli.units.scale(value)));
    body.insert("value_nats".into(), num(value));
    body.insert("value_bits".into(), num(nats_to_bits(value)));
    body.insert("optimizer".into(), Value::Object(optimizer));
    Ok(body)
}

fn exponent_optimizer(v: &ChannelExponentValue, opt: &mut Map<String, Value>, body: &mut Map<String, Value>) {
    if let Some(rho) = v.rho {
        opt.insert("rho".into(), num(rho));
    }
    if let Some(i) = &v.input {
        opt.insert("input".into(), input_json(i));
    }
    if let Some(px) = &v.p_x {
        opt.insert("p_x".into(), json!(px.probs()));
    }
    body.insert("feasible".into(), json!(v.feasible));
    body.insert("diagnostics".into(), json!(v.diagnostics));
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blocklength_lists() {
        assert_eq!(parse_ns("50:200:50").unwrap(), vec![50, 100, 150, 200]);
        assert_eq!(parse_ns("1,2,10").unwrap(), vec![1, 2, 10]);
        assert!(parse_ns("3,2").is_err());
        assert!(parse_ns("0:10:5").is_err());
        assert!(parse_ns("a").is_err());
    }

    #[test]
    fn library_errors_map_to_exit_codes() {
        assert_eq!(CliError::from(htexp::Error::Domain("x".into())).exit_code(), 2);
        assert_eq!(CliError::from(htexp::Error::Unsupported("x".into())).exit_code(), 3);
        assert_eq!(CliError::from(htexp::Error::Guard("x".into())).exit_code(), 4);
    }
}
