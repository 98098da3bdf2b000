//! Command-line front end with one subcommand per analysis.
//!
//! Reports are JSON on stdout, traces are CSV. Numbers are rounded to 12
//! significant digits. Exit codes: 0 success, 2 invalid input, 3 internal
//! failure, 4 no convergence, 5 oracle enumeration cap exceeded.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::ergodicity::{self, LimitConfig};
use crate::error::Error;
use crate::graph;
use crate::model::{self, Gamble, StateSpace, TransitionModel};
use crate::operator::{AverageTrace, UpperTransitionOperator};
use crate::oracle::{self, OracleConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_INTERNAL: i32 = 3;
pub const EXIT_NO_CONVERGENCE: i32 = 4;
pub const EXIT_CAP: i32 = 5;

#[derive(Parser, Debug)]
#[command(
    name = "imcergo",
    version,
    about = "Ergodicity analysis for imprecise Markov chains"
)]
pub struct Cli {
    #[command(flatten)]
    pub config: RunConfig,
    #[command(subcommand)]
    pub command: Command,
}

/// Numerical settings shared by all commands.
#[derive(Args, Debug, Clone, Copy, PartialEq)]
pub struct RunConfig {
    /// Convergence tolerance for limit computations (scaled by max(1, ‖f‖∞))
    #[arg(long = "tol", global = true, default_value_t = 1e-9)]
    pub tol_eig: f64,
    /// Iteration cap for limit computations
    #[arg(long, global = true, default_value_t = 100_000)]
    pub iter_cap: usize,
    /// Maximum number of chains an oracle may enumerate
    #[arg(long, global = true, default_value_t = 1_000_000)]
    pub oracle_cap: u128,
    /// Interior chains sampled by the homogeneous-chain oracle
    #[arg(long, global = true, default_value_t = 200)]
    pub samples: usize,
    /// Seed for interior sampling
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            tol_eig: 1e-9,
            iter_cap: 100_000,
            oracle_cap: 1_000_000,
            samples: 200,
            seed: 0,
        }
    }
}

impl RunConfig {
    fn validate(&self) -> Result<(), Error> {
        if !(self.tol_eig > 0.0 && self.tol_eig.is_finite()) {
            return Err(Error::Schema("--tol must be positive".into()));
        }
        if self.iter_cap == 0 || self.oracle_cap == 0 {
            return Err(Error::Schema(
                "--iter-cap and --oracle-cap must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn limit_config(&self) -> LimitConfig {
        LimitConfig {
            tol: self.tol_eig,
            iter_cap: self.iter_cap,
            ..LimitConfig::default()
        }
    }

    pub fn oracle_config(&self) -> OracleConfig {
        OracleConfig {
            cap: self.oracle_cap,
            samples: self.samples,
            seed: self.seed,
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct GambleArgs {
    /// Gamble file, `{"f":{"a":0,"b":1}}` or `{"f":[0,1]}`
    #[arg(long, short = 'g', conflicts_with = "f")]
    pub gamble: Option<PathBuf>,
    /// Inline gamble, e.g. `a=0,b=1`
    #[arg(long)]
    pub f: Option<String>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Communication classes and the top class conditions
    Classify {
        model: PathBuf,
        /// Write the accessibility graph in DOT format to this file
        #[arg(long)]
        emit_dot: Option<PathBuf>,
    },
    /// Limit upper/lower expectations and expected time averages
    Limits {
        model: PathBuf,
        #[command(flatten)]
        gamble: GambleArgs,
    },
    /// Per-step upper/lower expectations and time averages as CSV
    Trace {
        model: PathBuf,
        #[command(flatten)]
        gamble: GambleArgs,
        /// Number of time steps
        #[arg(long, short = 'k')]
        k: usize,
    },
    /// Brute-force comparison against compatible precise chains
    Oracle {
        model: PathBuf,
        #[command(flatten)]
        gamble: GambleArgs,
        /// Time horizon
        #[arg(long, short = 'k')]
        k: usize,
        /// Start state (defaults to the first state)
        #[arg(long)]
        x: Option<String>,
    },
}

/// Captured result of one invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Json(_)
        | Error::Io(_)
        | Error::Schema(_)
        | Error::DuplicateState(_)
        | Error::UnknownState(_)
        | Error::PmfMass { .. }
        | Error::InvalidProbability { .. }
        | Error::IncoherentIntervals { .. }
        | Error::DimensionMismatch { .. }
        | Error::NonFinite => EXIT_INPUT,
        Error::NoConvergence { .. } => EXIT_NO_CONVERGENCE,
        Error::CapExceeded { .. } => EXIT_CAP,
        _ => EXIT_INTERNAL,
    }
}

/// Rounds to 12 significant digits.
pub fn sig12(x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    if !x.is_finite() {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

fn load_gamble(args: &GambleArgs, states: &StateSpace) -> Result<Gamble, Error> {
    match (&args.gamble, &args.f) {
        (Some(path), _) => model::load_gamble_file(path, states),
        (None, Some(inline)) => model::parse_inline_gamble(inline, states),
        (None, None) => Err(Error::Schema(
            "a gamble is required (--gamble or --f)".into(),
        )),
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

#[derive(Serialize)]
struct Witness {
    no_top_class: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    period: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    confining_set: Option<Vec<String>>,
}

#[derive(Serialize)]
struct ClassifyReport {
    states: Vec<String>,
    classes: Vec<Vec<String>>,
    top_class: Option<Vec<String>>,
    closed: Vec<bool>,
    tcr: bool,
    tca: bool,
    ergodic: bool,
    weakly_ergodic: bool,
    witness: Witness,
}

fn cmd_classify(model: &TransitionModel, emit_dot: Option<&PathBuf>) -> Result<String, Error> {
    let report = graph::classify(model);
    if let Some(path) = emit_dot {
        std::fs::write(path, graph::to_dot(model, &report))?;
    }
    let states = model.states();
    let d = &report.decomposition;
    let out = ClassifyReport {
        states: states.labels().to_vec(),
        classes: d.classes.iter().map(|c| states.labels_of(c)).collect(),
        top_class: d.top_states().map(|c| states.labels_of(c)),
        closed: d.closed.clone(),
        tcr: report.tcr,
        tca: report.tca,
        ergodic: report.ergodic(),
        weakly_ergodic: report.weakly_ergodic(),
        witness: Witness {
            no_top_class: d.top_class.is_none(),
            period: report.period,
            confining_set: report.confining_set.as_ref().map(|a| states.labels_of(a)),
        },
    };
    Ok(to_json(&out))
}

#[derive(Serialize)]
struct ClassLimitOut {
    class: Vec<String>,
    upper: f64,
    lower: f64,
}

#[derive(Serialize)]
struct Residuals {
    #[serde(skip_serializing_if = "Option::is_none")]
    limit_iterations_upper: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    limit_iterations_lower: Option<usize>,
    eigen: Vec<EigenOut>,
}

#[derive(Serialize)]
struct EigenOut {
    class: Vec<String>,
    residual_upper: f64,
    residual_lower: f64,
    iterations_upper: usize,
    iterations_lower: usize,
}

#[derive(Serialize)]
struct LimitsReport {
    ergodic: bool,
    weakly_ergodic: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    limit_upper: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    limit_lower: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    limit_avg_upper: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    limit_avg_lower: Option<f64>,
    per_class_limits: Vec<ClassLimitOut>,
    residuals: Residuals,
}

fn cmd_limits(model: &TransitionModel, f: &Gamble, cfg: &RunConfig) -> Result<String, Error> {
    let op = UpperTransitionOperator::new(model);
    let r = ergodicity::full_report(&op, f, &cfg.limit_config())?;
    let states = model.states();
    let out = LimitsReport {
        ergodic: r.ergodic,
        weakly_ergodic: r.weakly_ergodic,
        limit_upper: r.limit_upper.map(sig12),
        limit_lower: r.limit_lower.map(sig12),
        limit_avg_upper: r.limit_avg_upper.map(sig12),
        limit_avg_lower: r.limit_avg_lower.map(sig12),
        per_class_limits: r
            .per_class_limits
            .iter()
            .map(|l| ClassLimitOut {
                class: states.labels_of(&l.states),
                upper: sig12(l.upper),
                lower: sig12(l.lower),
            })
            .collect(),
        residuals: Residuals {
            limit_iterations_upper: r.diagnostics.limit_iterations.map(|(u, _)| u),
            limit_iterations_lower: r.diagnostics.limit_iterations.map(|(_, l)| l),
            eigen: r
                .per_class_limits
                .iter()
                .map(|l| EigenOut {
                    class: states.labels_of(&l.states),
                    residual_upper: sig12(l.upper_estimate.residual),
                    residual_lower: sig12(l.lower_estimate.residual),
                    iterations_upper: l.upper_estimate.iterations,
                    iterations_lower: l.lower_estimate.iterations,
                })
                .collect(),
        },
    };
    Ok(to_json(&out))
}

fn cmd_trace(model: &TransitionModel, f: &Gamble, k_max: usize) -> Result<String, Error> {
    if k_max == 0 {
        return Err(Error::Schema("--k must be at least 1".into()));
    }
    let op = UpperTransitionOperator::new(model);
    let neg = f.negated();
    let mut upper_avg = AverageTrace::new(op, f)?;
    let mut lower_avg = AverageTrace::new(op, &neg)?;
    let mut u_upper = f.clone();
    let mut u_lower = f.clone();
    let mut out = String::from("k,state,m_bar_upper,m_bar_lower,u_k_upper,u_k_lower\n");
    for k in 1..=k_max {
        if k > 1 {
            u_upper = op.apply_upper(&u_upper)?;
            u_lower = op.apply_lower(&u_lower)?;
        }
        let m_up = upper_avg.advance_to(k);
        let m_low = lower_avg.advance_to(k).negated();
        for x in 0..model.n() {
            let _ = writeln!(
                out,
                "{k},{},{},{},{},{}",
                model.states().label(x),
                sig12(m_up[x]),
                sig12(m_low[x]),
                sig12(u_upper[x]),
                sig12(u_lower[x])
            );
        }
    }
    Ok(out)
}

#[derive(Serialize)]
struct OracleReport {
    state: String,
    k: usize,
    ci_bruteforce: f64,
    recursion_value: f64,
    ri_vertex_max: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    ri_sampled_max: Option<f64>,
    ci_argmax: String,
    ri_argmax: String,
    agree: bool,
}

/// Agreement tolerance between the brute-force and recursive values.
pub const ORACLE_AGREE_TOL: f64 = 1e-9;

fn cmd_oracle(
    model: &TransitionModel,
    f: &Gamble,
    k: usize,
    x: Option<&str>,
    cfg: &RunConfig,
) -> Result<String, Error> {
    if k == 0 {
        return Err(Error::Schema("--k must be at least 1".into()));
    }
    let x = match x {
        Some(label) => model.states().resolve(label)?,
        None => 0,
    };
    let vertex_model = oracle::vertexize(model)?;
    let op = UpperTransitionOperator::new(model);
    let recursion = op.average_recursion(f, k)?.m_bar[x];
    let ci = oracle::ci_upper_average_bruteforce(&vertex_model, f, x, k, cfg.oracle_cap)?;
    let ri = oracle::ri_upper_average(&vertex_model, f, x, k, &cfg.oracle_config())?;
    let tol = ORACLE_AGREE_TOL * f.sup_norm().max(1.0);
    let agree = (ci.value - recursion).abs() <= tol && ri.value <= recursion + tol;
    let out = OracleReport {
        state: model.states().label(x).to_string(),
        k,
        ci_bruteforce: sig12(ci.value),
        recursion_value: sig12(recursion),
        ri_vertex_max: sig12(ri.vertex.value),
        ri_sampled_max: ri.sampled.as_ref().map(|s| sig12(s.value)),
        ci_argmax: ci.argmax,
        ri_argmax: ri.vertex.argmax,
        agree,
    };
    Ok(to_json(&out))
}

fn dispatch(cli: &Cli) -> Result<String, Error> {
    cli.config.validate()?;
    match &cli.command {
        Command::Classify { model, emit_dot } => {
            let m = model::load_model_file(model)?;
            cmd_classify(&m, emit_dot.as_ref())
        }
        Command::Limits { model, gamble } => {
            let m = model::load_model_file(model)?;
            let f = load_gamble(gamble, m.states())?;
            cmd_limits(&m, &f, &cli.config)
        }
        Command::Trace { model, gamble, k } => {
            let m = model::load_model_file(model)?;
            let f = load_gamble(gamble, m.states())?;
            cmd_trace(&m, &f, *k)
        }
        Command::Oracle {
            model,
            gamble,
            k,
            x,
        } => {
            let m = model::load_model_file(model)?;
            let f = load_gamble(gamble, m.states())?;
            cmd_oracle(&m, &f, *k, x.as_deref(), &cli.config)
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let text = e.render().to_string();
            return if code == EXIT_OK {
                Outcome {
                    code,
                    stdout: text,
                    stderr: String::new(),
                }
            } else {
                Outcome {
                    code,
                    stdout: String::new(),
                    stderr: text,
                }
            };
        }
    };
    match dispatch(&cli) {
        Ok(stdout) => Outcome {
            code: EXIT_OK,
            stdout,
            stderr: String::new(),
        },
        Err(e) => Outcome {
            code: exit_code(&e),
            stdout: String::new(),
            stderr: format!("error: {e}\n"),
        },
    }
}
