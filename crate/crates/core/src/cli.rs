//! Command-line front end.
//!
//! Every subcommand prints an aligned table on stdout and, with `--out`,
//! writes a JSON report. Reports are deterministic for fixed inputs and
//! seed; wall time goes to stderr.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::counterexamples::{self, BetaCase};
use crate::error::{Error, Result};
use crate::market::{MarketModel, PortfolioCoefficients};
use crate::optimizer::{
    feasibility_check, pricing_kernel, solve_entropic, solve_mmv, EntropicProblemSpec,
    SolverOptions, DEFAULT_SEED,
};
use crate::prob::{ConditionalValue, RandomVariable, EXACT_TOL, SOLVER_TOL};
use crate::risk::{
    entropic, fenchel_gap, mean_variance, mmv, mmv_gradient, solve_kx, DualElement,
    EntropicParams, MmvParams,
};

pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
pub const EXIT_INFEASIBLE: i32 = 4;
pub const EXIT_NOT_CONVERGED: i32 = 5;

#[derive(Debug, Parser)]
#[command(name = "condrisk", version, about = "Conditional risk measures on finite spaces")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate a risk measure on a payoff.
    Eval(EvalArgs),
    /// Minimize a risk measure over the return set.
    Solve(SolveArgs),
    /// Tabulate a non-coercive sequence on the unit interval.
    Demo(DemoArgs),
    /// Check the market assumptions only.
    Validate(ValidateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Measure {
    Entropic,
    Mmv,
    MeanVariance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Entropic,
    Mmv,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, value_enum)]
    pub measure: Measure,
    /// Risk aversion, one value or one per atom.
    #[arg(long, value_delimiter = ',')]
    pub beta: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    pub gamma: Vec<f64>,
    /// Payoff values, one per outcome.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, group = "payoff")]
    pub x: Vec<f64>,
    /// JSON array with one value per outcome.
    #[arg(long, group = "payoff")]
    pub x_file: Option<PathBuf>,
    /// Portfolio weights, one per payoff, applied on every atom.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, group = "payoff")]
    pub alpha: Vec<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, value_enum)]
    pub problem: Family,
    #[arg(long, value_delimiter = ',')]
    pub beta: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    pub gamma: Vec<f64>,
    /// Target conditional mean (entropic).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub w: Vec<f64>,
    /// Norm radius (entropic).
    #[arg(long, value_delimiter = ',')]
    pub r: Vec<f64>,
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    #[command(flatten)]
    pub solver: SolverFlags,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SolverFlags {
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    #[arg(long, default_value_t = 10_000)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 5)]
    pub starts: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct DemoArgs {
    #[arg(long, value_enum)]
    pub family: Family,
    #[arg(long, default_value_t = 20)]
    pub n_max: u32,
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, default_value_t = EXACT_TOL)]
    pub tol: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Machine-readable result of one invocation.
#[derive(Debug, Serialize)]
pub struct RunReport {
    pub command: Value,
    /// SHA-256 of the model file, or of the command echo when there is none.
    pub input_digest: String,
    pub results: Value,
    pub diagnostics: Value,
}

/// Failure carrying the exit code and whatever should go to stderr.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Self {
            code: exit_code(&e),
            message: e.to_string(),
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Infeasible { .. } => EXIT_INFEASIBLE,
        Error::NonFinite(_)
        | Error::ZeroNorm { .. }
        | Error::IllConditioned { .. }
        | Error::Uncertified { .. }
        | Error::Quadrature { .. }
        | Error::NotColinear { .. } => EXIT_NUMERIC,
        _ => EXIT_VALIDATION,
    }
}

struct Output {
    report: RunReport,
    table: String,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let start = Instant::now();
    let (result, out) = match &cli.command {
        Command::Eval(a) => (cmd_eval(a), a.out.as_deref()),
        Command::Solve(a) => (cmd_solve(a), a.out.as_deref()),
        Command::Demo(a) => (cmd_demo(a), a.out.as_deref()),
        Command::Validate(a) => (cmd_validate(a), a.out.as_deref()),
    };
    let code = match result.and_then(|o| emit(o, out)) {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    };
    eprintln!("wall time: {:.3} s", start.elapsed().as_secs_f64());
    code
}

fn emit(o: Output, out: Option<&Path>) -> std::result::Result<(), Failure> {
    if let Some(path) = out {
        let mut text = serde_json::to_string_pretty(&o.report).map_err(Error::from)?;
        text.push('\n');
        std::fs::write(path, text).map_err(Error::from)?;
    }
    print!("{}", o.table);
    Ok(())
}

fn load_model(path: &Path) -> Result<(MarketModel, String)> {
    let bytes = std::fs::read(path)?;
    let digest = hex::encode(Sha256::digest(&bytes));
    let text = String::from_utf8(bytes).map_err(|e| Error::Model(e.to_string()))?;
    Ok((MarketModel::from_json(&text)?, digest))
}

fn file_name(path: &Path) -> String {
    path.file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn required(values: &[f64], flag: &str) -> Result<ConditionalValue> {
    if values.is_empty() {
        return Err(Error::InvalidParameter(format!("--{flag} is required")));
    }
    Ok(ConditionalValue::new(values.to_vec()))
}

fn fmt_list(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.10}")).collect::<Vec<_>>().join(", ")
}

fn cmd_eval(a: &EvalArgs) -> std::result::Result<Output, Failure> {
    let (m, digest) = load_model(&a.model)?;
    let f = m.partition();
    let x = if !a.x.is_empty() {
        RandomVariable::new(a.x.clone())
    } else if let Some(path) = &a.x_file {
        let values: Vec<f64> = serde_json::from_str(&std::fs::read_to_string(path).map_err(Error::from)?).map_err(Error::from)?;
        RandomVariable::new(values)
    } else if !a.alpha.is_empty() {
        m.synthesize(&PortfolioCoefficients::broadcast(&a.alpha, f.atom_count()))?
    } else {
        return Err(Error::InvalidParameter("give the payoff with --x, --x-file or --alpha".into()).into());
    };
    Error::check_len("payoff", f.outcome_count(), x.len())?;
    if !x.is_finite() {
        return Err(Error::NonFinite("payoff".into()).into());
    }

    let mut results = serde_json::Map::new();
    let mut table = String::new();
    let value = match a.measure {
        Measure::Entropic => {
            let g = EntropicParams::new(required(&a.gamma, "gamma")?)?;
            entropic(&x, &g, f)?
        }
        Measure::MeanVariance => {
            let b = MmvParams::new(required(&a.beta, "beta")?)?;
            mean_variance(&x, &b, f)?
        }
        Measure::Mmv => {
            let b = MmvParams::new(required(&a.beta, "beta")?)?;
            let k = solve_kx(&x, &b, f)?;
            let grad = mmv_gradient(&x, &b, f)?;
            let gap = fenchel_gap(&x, &DualElement::new(grad, f)?, &b, f)?;
            results.insert("k_x".into(), json!(k));
            results.insert("dual_gap_at_gradient".into(), json!(gap));
            let _ = writeln!(table, "k_x        {}", fmt_list(&k));
            let _ = writeln!(table, "dual gap   {}", fmt_list(&gap));
            mmv(&x, &b, f)?
        }
    };
    results.insert("value".into(), json!(value));
    let mut head = format!("{} per atom\n", a.measure_name());
    let _ = writeln!(head, "{:>6}  {:>18}", "atom", "value");
    for (i, v) in value.iter().enumerate() {
        let _ = writeln!(head, "{i:>6}  {v:>18.12}");
    }
    head.push_str(&table);
    let command = json!({
        "subcommand": "eval",
        "model": file_name(&a.model),
        "measure": a.measure,
        "beta": a.beta,
        "gamma": a.gamma,
        "x": x,
    });
    Ok(Output {
        report: RunReport {
            command,
            input_digest: digest,
            results: Value::Object(results),
            diagnostics: json!({}),
        },
        table: head,
    })
}

impl EvalArgs {
    fn measure_name(&self) -> &'static str {
        match self.measure {
            Measure::Entropic => "entropic",
            Measure::Mmv => "mmv",
            Measure::MeanVariance => "mean_variance",
        }
    }
}

fn solver_options(s: &SolverFlags) -> Result<SolverOptions> {
    if !(s.tol.is_finite() && s.tol > 0.0) || s.max_iter == 0 || s.starts == 0 {
        return Err(Error::InvalidParameter(
            "--tol must be positive and --max-iter, --starts at least 1".into(),
        ));
    }
    Ok(SolverOptions {
        tol: s.tol,
        max_iter: s.max_iter,
        starts: s.starts,
        seed: s.seed,
    })
}

fn cmd_solve(a: &SolveArgs) -> std::result::Result<Output, Failure> {
    let (m, digest) = load_model(&a.model)?;
    let opts = solver_options(&a.solver)?;
    let rf = m.risk_free_return()?;
    let a48 = m.assumption_48(EXACT_TOL);
    let f = m.partition();
    let mut command = json!({
        "subcommand": "solve",
        "model": file_name(&a.model),
        "problem": a.problem,
        "options": opts,
    });
    let mut table = String::new();
    let (results, diagnostics) = match a.problem {
        Family::Mmv => {
            let b = MmvParams::new(required(&a.beta, "beta")?)?;
            command["beta"] = json!(a.beta);
            let sol = solve_mmv(&m, &b, &opts)?;
            if !sol.converged {
                return Err(Failure {
                    code: EXIT_NOT_CONVERGED,
                    message: format!(
                        "no convergence within {} iterations; stationarity {:?}",
                        opts.max_iter, sol.stationarity
                    ),
                });
            }
            let kernel = pricing_kernel(&m, &b, &sol, SOLVER_TOL).ok();
            let _ = writeln!(table, "mmv over the return set, beta = {}", fmt_list(&a.beta));
            let _ = writeln!(
                table,
                "{:>6}  {:>18}  {:>18}  {:>10}  {:>10}",
                "atom", "value", "k*", "iters", "station."
            );
            for i in 0..f.atom_count() {
                let _ = writeln!(
                    table,
                    "{i:>6}  {:>18.12}  {:>18.12}  {:>10}  {:>10.2e}",
                    sol.value[i], sol.k_star[i], sol.iterations[i], sol.stationarity[i]
                );
            }
            alpha_table(&mut table, &sol.alpha_star);
            let _ = writeln!(table, "certificate residual  {:.3e}", sol.certificate_residual);
            (
                json!({
                    "x_star": sol.x_star,
                    "alpha_star": sol.alpha_star,
                    "value": sol.value,
                    "k_star": sol.k_star,
                    "risk_free_return": rf,
                    "pricing_kernel": kernel,
                }),
                json!({
                    "certificate_residual": sol.certificate_residual,
                    "converged": sol.converged,
                    "iterations": sol.iterations,
                    "stationarity": sol.stationarity,
                    "assumption_48": a48,
                }),
            )
        }
        Family::Entropic => {
            let g = EntropicParams::new(required(&a.gamma, "gamma")?)?;
            let spec = EntropicProblemSpec::new(required(&a.w, "w")?, required(&a.r, "r")?, a.p)?;
            command["gamma"] = json!(a.gamma);
            command["w"] = json!(a.w);
            command["r"] = json!(a.r);
            command["p"] = json!(a.p);
            let feas = feasibility_check(&m, &spec)?;
            if feas.iter().any(|c| !c.feasible) {
                let mut msg = String::from("infeasible constraints\n");
                for c in &feas {
                    let _ = writeln!(
                        msg,
                        "  atom {}: {} (min norm {:.6e}, radius {:.6e}{})",
                        c.atom,
                        if c.feasible { "feasible" } else { "INFEASIBLE" },
                        c.min_norm,
                        c.radius,
                        if c.consistent { "" } else { ", price and mean targets inconsistent" }
                    );
                }
                return Err(Failure {
                    code: EXIT_INFEASIBLE,
                    message: msg.trim_end().to_owned(),
                });
            }
            let sol = solve_entropic(&m, &g, &spec, &opts)?;
            if !sol.converged || !sol.unique {
                return Err(Failure {
                    code: EXIT_NOT_CONVERGED,
                    message: format!(
                        "converged = {}, starts agreement {:.3e}; stationarity {:?}",
                        sol.converged, sol.starts_agreement, sol.stationarity
                    ),
                });
            }
            let _ = writeln!(table, "entropic over the constrained return set, p = {}", a.p);
            let _ = writeln!(
                table,
                "{:>6}  {:>18}  {:>10}  {:>12}  {:>10}  {:>10}",
                "atom", "value", "ball", "multiplier", "iters", "station."
            );
            for i in 0..f.atom_count() {
                let _ = writeln!(
                    table,
                    "{i:>6}  {:>18.12}  {:>10}  {:>12.6e}  {:>10}  {:>10.2e}",
                    sol.value[i],
                    if sol.ball_active[i] { "active" } else { "inactive" },
                    sol.ball_multiplier[i],
                    sol.iterations[i],
                    sol.stationarity[i]
                );
            }
            alpha_table(&mut table, &sol.alpha_star);
            let _ = writeln!(table, "feasibility residual  {:.3e}", sol.max_feasibility_residual());
            let _ = writeln!(table, "starts agreement      {:.3e}", sol.starts_agreement);
            (
                json!({
                    "x_star": sol.x_star,
                    "alpha_star": sol.alpha_star,
                    "value": sol.value,
                    "ball_active": sol.ball_active,
                    "ball_multiplier": sol.ball_multiplier,
                }),
                json!({
                    "price_residual": sol.price_residual,
                    "mean_residual": sol.mean_residual,
                    "norm_slack": sol.norm_slack,
                    "starts_agreement": sol.starts_agreement,
                    "unique": sol.unique,
                    "converged": sol.converged,
                    "iterations": sol.iterations,
                    "stationarity": sol.stationarity,
                    "feasibility": feas,
                    "assumption_48": a48,
                }),
            )
        }
    };
    Ok(Output {
        report: RunReport {
            command,
            input_digest: digest,
            results,
            diagnostics,
        },
        table,
    })
}

fn alpha_table(table: &mut String, alpha: &PortfolioCoefficients) {
    let _ = writeln!(table, "portfolio weights (payoff x atom)");
    for (j, row) in alpha.alpha.iter().enumerate() {
        let _ = writeln!(table, "  y{j}  {}", fmt_list(row));
    }
}

fn cmd_demo(a: &DemoArgs) -> std::result::Result<Output, Failure> {
    if a.n_max == 0 {
        return Err(Error::InvalidParameter("--n-max must be at least 1".into()).into());
    }
    let (command, results, table, verdict) = match a.family {
        Family::Entropic => {
            let seq = counterexamples::example311_sequence(a.n_max, a.p, a.gamma)?;
            let verdict = seq.bounded
                && seq.rows.iter().all(|r| r.norm_lower_bound >= seq.growth_rate * r.n as f64);
            (
                json!({"subcommand": "demo", "family": a.family, "n_max": a.n_max, "p": a.p, "gamma": a.gamma}),
                serde_json::to_value(&seq).map_err(Error::from)?,
                counterexamples::entropic_table(&seq, '\t'),
                verdict,
            )
        }
        Family::Mmv => {
            let beta = a
                .beta
                .ok_or_else(|| Error::InvalidParameter("--beta is required for the mmv family".into()))?;
            BetaCase::classify(beta)?;
            let seq = counterexamples::example312_sequence(a.n_max, beta)?;
            (
                json!({"subcommand": "demo", "family": a.family, "n_max": a.n_max, "beta": beta}),
                serde_json::to_value(&seq).map_err(Error::from)?,
                counterexamples::mmv_table(&seq, '\t'),
                seq.bounded,
            )
        }
    };
    let mut table = table;
    table.push_str(if verdict {
        "risk bounded, norm divergent\n"
    } else {
        "risk NOT within the bound\n"
    });
    let digest = hex::encode(Sha256::digest(command.to_string().as_bytes()));
    Ok(Output {
        report: RunReport {
            command,
            input_digest: digest,
            results,
            diagnostics: json!({ "verdict": verdict }),
        },
        table,
    })
}

fn cmd_validate(a: &ValidateArgs) -> std::result::Result<Output, Failure> {
    let (m, digest) = load_model(&a.model)?;
    let a41 = m.assumption_41(a.tol);
    let a48 = m.assumption_48(a.tol);
    let mut table = String::new();
    let _ = writeln!(table, "{:>6}  {:>12}  {:>12}  {:>8}", "atom", "1 in span", "pi(1)", "rank");
    for i in 0..m.partition().atom_count() {
        let _ = writeln!(
            table,
            "{i:>6}  {:>12}  {:>12.6}  {:>8}",
            a41.constant_in_span[i], a41.unit_price[i], a48.ranks[i]
        );
    }
    let _ = writeln!(table, "risk-free return available: {}", a41.holds());
    let _ = writeln!(table, "price and mean independent: {}", a48.holds());
    if !a41.holds() {
        let bad: Vec<usize> = (0..a41.satisfied.len()).filter(|&i| !a41.satisfied[i]).collect();
        return Err(Failure {
            code: EXIT_VALIDATION,
            message: format!("{table}no positively priced risk-free payoff on atoms {bad:?}"),
        });
    }
    Ok(Output {
        report: RunReport {
            command: json!({"subcommand": "validate", "model": file_name(&a.model), "tol": a.tol}),
            input_digest: digest,
            results: json!({ "assumption_41": a41, "assumption_48": a48 }),
            diagnostics: json!({}),
        },
        table,
    })
}
