//! Command-line harness: synthetic problem generation, the four solvers,
//! and metric evaluation over the text formats in [`crate::io`].
//!
//! Exit codes: 0 success, 1 I/O or input-file failure, 2 bad flags or
//! invalid configuration, 3 iteration cap reached without convergence
//! (outputs are still written).

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::{Param, SolveResult, SolverConfig, Termination};
use crate::cpcp::solve_cpcp;
use crate::data::{generate_planted, PlantedSpec};
use crate::error::Error;
use crate::io;
use crate::measure::{draw_random_subspace, subspace_forward};
use crate::metrics;
use crate::rmc::{solve_mc, solve_rmc, solve_rpca};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NOT_CONVERGED: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "lowrank", version, about = "Low-rank plus sparse matrix recovery", args_override_self = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a planted low-rank plus sparse problem.
    Synth(SynthArgs),
    /// Robust matrix completion on a partially observed matrix.
    Rmc(MatrixSolveArgs),
    /// Robust PCA on a fully observed matrix.
    Rpca(MatrixSolveArgs),
    /// Least-squares matrix completion.
    Mc(MatrixSolveArgs),
    /// Recovery from random-subspace measurements.
    Cpcp(CpcpArgs),
    /// Score an estimate against ground truth.
    Eval(EvalArgs),
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long)]
    rows: usize,
    #[arg(long)]
    cols: usize,
    #[arg(long)]
    rank: usize,
    #[arg(long, default_value_t = 0.1)]
    spike_frac: f64,
    #[arg(long, default_value_t = 1.0)]
    magnitude: f64,
    #[arg(long, default_value_t = 1.0)]
    obs_frac: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also write `measurements.txt` from a random subspace of this dimension.
    #[arg(long)]
    subspace_dim: Option<usize>,
    #[arg(long, default_value_t = 0)]
    subspace_seed: u64,
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SolverFlags {
    /// Trace-norm weight, or "auto" for sqrt(max(m, n)).
    #[arg(long, default_value = "auto")]
    lambda: Param,
    /// Initial rank bound d.
    #[arg(long, default_value_t = 10)]
    rank: usize,
    #[arg(long, default_value_t = 1.1)]
    rho: f64,
    #[arg(long, default_value = "auto")]
    alpha0: Param,
    #[arg(long, default_value_t = 1e10)]
    alpha_max: f64,
    #[arg(long, default_value_t = 1e-4)]
    tol: f64,
    /// Defaults to 500 (1000 for cpcp).
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    adjust_rank: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out_dir: PathBuf,
    /// `key=value` lines; explicit flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl SolverFlags {
    fn config(&self, base: SolverConfig) -> SolverConfig {
        SolverConfig {
            lambda: self.lambda,
            rank: self.rank,
            rho: self.rho,
            alpha0: self.alpha0,
            alpha_max: self.alpha_max,
            tol: self.tol,
            max_iter: self.max_iter.unwrap_or(base.max_iter),
            adjust_rank: self.adjust_rank,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Args)]
struct MatrixSolveArgs {
    #[arg(long)]
    data: PathBuf,
    /// Observation mask; required for rmc and mc.
    #[arg(long)]
    mask: Option<PathBuf>,
    #[command(flatten)]
    solver: SolverFlags,
}

#[derive(Debug, Args)]
struct CpcpArgs {
    /// Measurement vector stored as a `p x 1` matrix file.
    #[arg(long)]
    measurements: PathBuf,
    #[arg(long)]
    subspace_seed: u64,
    #[arg(long)]
    subspace_dim: usize,
    #[arg(long)]
    rows: usize,
    #[arg(long)]
    cols: usize,
    #[command(flatten)]
    solver: SolverFlags,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Metric {
    Relerr,
    Auc,
    Rmse,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    estimate_dir: PathBuf,
    #[arg(long)]
    truth_dir: Option<PathBuf>,
    #[arg(long, value_enum)]
    metric: Metric,
    /// `i j value` lines for rmse.
    #[arg(long)]
    test_file: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

/// Failure inside a command, mapped to an exit code.
#[derive(Debug)]
enum Failure {
    Usage(String),
    Io(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Io { .. } | Error::Parse { .. } => Failure::Io(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Usage(_) => EXIT_USAGE,
            Failure::Io(_) => EXIT_IO,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Io(m) => m,
        }
    }
}

/// Runs the harness with process stdout and stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with_io(args, &mut stdout.lock(), &mut stderr.lock())
}

pub fn run_with_io<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let args = match splice_config(args) {
        Ok(a) => a,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message());
            return f.code();
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(err, "{text}")
            } else {
                write!(out, "{text}")
            };
            return code;
        }
    };
    let outcome = match cli.command {
        Command::Synth(a) => synth(&a, out),
        Command::Rmc(a) => matrix_solve(Solver::Rmc, &a, out, err),
        Command::Rpca(a) => matrix_solve(Solver::Rpca, &a, out, err),
        Command::Mc(a) => matrix_solve(Solver::Mc, &a, out, err),
        Command::Cpcp(a) => cpcp(&a, out, err),
        Command::Eval(a) => eval(&a, out),
    };
    match outcome {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message());
            f.code()
        }
    }
}

/// Expands `--config FILE` into flags placed right after the subcommand, so
/// that explicit flags later on the command line override them.
fn splice_config(args: Vec<OsString>) -> Result<Vec<OsString>, Failure> {
    let mut path = None;
    for (k, a) in args.iter().enumerate() {
        let s = a.to_string_lossy();
        if s == "--config" {
            path = args.get(k + 1).map(PathBuf::from);
        } else if let Some(p) = s.strip_prefix("--config=") {
            path = Some(PathBuf::from(p));
        }
    }
    let Some(path) = path else { return Ok(args) };
    if args.len() < 2 {
        return Ok(args);
    }
    let text = std::fs::read_to_string(&path)
        .map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    let mut extra: Vec<OsString> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Failure::Usage(format!(
                "{}:{}: expected key=value, found {line:?}",
                path.display(),
                lineno + 1
            ))
        })?;
        let key = key.trim().replace('_', "-");
        let value = value.trim();
        if key == "adjust-rank" {
            match value {
                "true" | "1" | "yes" => extra.push("--adjust-rank".into()),
                "false" | "0" | "no" => {}
                other => {
                    return Err(Failure::Usage(format!(
                        "{}:{}: adjust_rank expects true or false, found {other:?}",
                        path.display(),
                        lineno + 1
                    )))
                }
            }
        } else {
            extra.push(format!("--{key}").into());
            extra.push(value.into());
        }
    }
    let mut out = args[..2].to_vec();
    out.extend(extra);
    out.extend_from_slice(&args[2..]);
    Ok(out)
}

fn create_dir(dir: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(dir).map_err(|e| Failure::Io(format!("{}: {e}", dir.display())))
}

fn synth(a: &SynthArgs, out: &mut dyn Write) -> Result<i32, Failure> {
    let spec = PlantedSpec {
        rows: a.rows,
        cols: a.cols,
        rank: a.rank,
        spike_frac: a.spike_frac,
        magnitude: a.magnitude,
        obs_frac: a.obs_frac,
        seed: a.seed,
    };
    let problem = generate_planted(&spec)?;
    let subspace = a
        .subspace_dim
        .map(|p| draw_random_subspace(a.rows, a.cols, p, a.subspace_seed))
        .transpose()?;

    create_dir(&a.out_dir)?;
    io::save_matrix(a.out_dir.join("d_obs.txt"), &problem.d_obs)?;
    io::save_mask(a.out_dir.join("mask.txt"), &problem.mask)?;
    io::save_matrix(a.out_dir.join("l0.txt"), &problem.l0)?;
    io::save_matrix(a.out_dir.join("s0.txt"), &problem.s0)?;
    if let Some(q) = subspace {
        let y = subspace_forward(&problem.l0.add(&problem.s0), &q)?;
        let y = crate::DenseMatrix::new(y.len(), 1, y)?;
        io::save_matrix(a.out_dir.join("measurements.txt"), &y)?;
    }
    let _ = writeln!(
        out,
        "wrote {}x{} rank-{} problem ({} observed) to {}",
        a.rows,
        a.cols,
        a.rank,
        problem.mask.len(),
        a.out_dir.display()
    );
    Ok(EXIT_OK)
}

#[derive(Debug, Clone, Copy)]
enum Solver {
    Rmc,
    Rpca,
    Mc,
}

fn report_warnings(warnings: &[String], err: &mut dyn Write) {
    for w in warnings {
        let _ = writeln!(err, "warning: {w}");
    }
}

fn write_solution<M>(
    dir: &Path,
    result: &SolveResult<M>,
    with_ratio: bool,
    out: &mut dyn Write,
) -> Result<i32, Failure> {
    create_dir(dir)?;
    io::save_matrix(dir.join("u.txt"), &result.u)?;
    io::save_matrix(dir.join("v.txt"), &result.v)?;
    io::save_matrix(dir.join("s.txt"), &result.s)?;
    io::save_matrix(dir.join("l.txt"), &result.low_rank())?;
    io::save_trace(dir.join("trace.csv"), &result.trace, with_ratio)?;
    let _ = writeln!(
        out,
        "termination={} iters={} residual={:.6e}",
        result.termination,
        result.iterations(),
        result.final_residual()
    );
    Ok(match result.termination {
        Termination::Converged => EXIT_OK,
        Termination::MaxIterReached => EXIT_NOT_CONVERGED,
    })
}

fn matrix_solve(
    which: Solver,
    a: &MatrixSolveArgs,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32, Failure> {
    let cfg = a.solver.config(SolverConfig::default());
    // Surface configuration errors before touching the input files.
    report_warnings(&cfg.validate()?, err);
    let data = io::load_matrix(&a.data)?;
    let result = match which {
        Solver::Rpca => solve_rpca(&data, &cfg)?,
        Solver::Rmc | Solver::Mc => {
            let mask_path = a
                .mask
                .as_ref()
                .ok_or_else(|| Failure::Usage("--mask is required for rmc and mc".into()))?;
            let mask = io::load_mask(mask_path)?;
            match which {
                Solver::Rmc => solve_rmc(&data, &mask, &cfg)?,
                _ => solve_mc(&data, &mask, &cfg)?,
            }
        }
    };
    write_solution(&a.solver.out_dir, &result, false, out)
}

fn cpcp(a: &CpcpArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, Failure> {
    let cfg = a.solver.config(SolverConfig::cpcp_default());
    report_warnings(&cfg.validate()?, err);
    let y = io::load_matrix(&a.measurements)?;
    if y.cols() != 1 || y.rows() != a.subspace_dim {
        return Err(Failure::Usage(format!(
            "measurement file is {}x{}, expected {}x1",
            y.rows(),
            y.cols(),
            a.subspace_dim
        )));
    }
    let q = draw_random_subspace(a.rows, a.cols, a.subspace_dim, a.subspace_seed)?;
    let result = solve_cpcp(y.as_slice(), &q, &cfg)?;
    write_solution(&a.solver.out_dir, &result, true, out)
}

/// Fixed-point rendering with 6 significant digits (6 decimals for zero).
pub fn format_sig6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x:.6}");
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (5 - magnitude).max(0) as usize;
    format!("{x:.decimals$}")
}

fn eval(a: &EvalArgs, out: &mut dyn Write) -> Result<i32, Failure> {
    let truth_dir = || {
        a.truth_dir
            .as_ref()
            .ok_or_else(|| Failure::Usage("--truth-dir is required for this metric".into()))
    };
    let (name, value) = match a.metric {
        Metric::Relerr => {
            let est = io::load_matrix(a.estimate_dir.join("l.txt"))?;
            let truth = io::load_matrix(truth_dir()?.join("l0.txt"))?;
            ("relerr", metrics::relative_error(&est, &truth)?)
        }
        Metric::Auc => {
            let est = io::load_matrix(a.estimate_dir.join("s.txt"))?;
            let dir = truth_dir()?;
            let truth = io::load_matrix(dir.join("s0.txt"))?;
            let mask = io::load_mask(dir.join("mask.txt"))?;
            ("auc", metrics::outlier_auc(&est, &truth, &mask)?)
        }
        Metric::Rmse => {
            let test_path = a
                .test_file
                .as_ref()
                .ok_or_else(|| Failure::Usage("--test-file is required for rmse".into()))?;
            let est = io::load_matrix(a.estimate_dir.join("l.txt"))?;
            let test = io::load_entries(test_path)?;
            ("rmse", metrics::rmse(&est, &test)?)
        }
    };
    let _ = writeln!(out, "metric={name} value={}", format_sig6(value));
    Ok(EXIT_OK)
}
