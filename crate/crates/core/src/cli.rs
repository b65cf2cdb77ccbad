//! Command-line front end (`rwglasso`).

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::driver::{default_theta0, diagonal_shift, solve, RunTrace, SolveError, SolverConfig};
use crate::experiments::{
    budget_sweep, default_gamma_grid, generate, grid_search, write_sweep_csv, GridError, SweepError, SweepSpec,
    SyntheticSpec, DEFAULT_GRID_POINTS, DEFAULT_SUPPORT_TOL,
};
use crate::matrix::SymMatrix;
use crate::objective::GlassoProblem;
use crate::penalty::{Penalty, PenaltyKind};
use crate::solvers::SolverKind;

#[derive(Debug, Parser)]
#[command(name = "rwglasso", version, about = "Non-convex graphical lasso with reweighted inner solvers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Draw a sparse precision matrix and the empirical covariance of samples from it.
    Generate(GenerateArgs),
    /// Estimate a precision matrix from a covariance file.
    Solve(SolveArgs),
    /// Run an iterations-per-reweighting sweep described by a JSON config.
    Sweep(SweepArgs),
    /// Grid search over the penalty strength against a known truth.
    Grid(GridArgs),
}

#[derive(Debug, Args)]
struct GenerateArgs {
    #[arg(long)]
    dim: usize,
    #[arg(long)]
    sparsity: f64,
    #[arg(long, default_value_t = 0.1)]
    diag_boost: f64,
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out_prec: PathBuf,
    #[arg(long)]
    out_cov: PathBuf,
}

#[derive(Debug, Args)]
struct SolverArgs {
    #[arg(long, default_value = "prox-newton")]
    solver: SolverKind,
    #[arg(long, default_value = "log-sum")]
    penalty: PenaltyKind,
    /// Shape parameter of the penalty; defaults depend on the penalty.
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long, default_value_t = 20)]
    reweightings: usize,
    #[arg(long, default_value_t = 10)]
    inner_iters: usize,
    /// Coordinate-descent passes per inner iteration.
    #[arg(long)]
    cd_passes: Option<usize>,
    /// Leave the diagonal of the precision matrix unpenalized.
    #[arg(long)]
    no_diagonal_penalty: bool,
    /// Scale of the first trial step (proximal gradient) or step (Newton).
    #[arg(long)]
    initial_step: Option<f64>,
    #[arg(long)]
    max_backtracks: Option<usize>,
}

impl SolverArgs {
    fn penalty(&self, gamma: f64) -> Result<Penalty, CliError> {
        let eps = self.epsilon.unwrap_or_else(|| self.penalty.default_epsilon());
        Penalty::new(self.penalty, gamma, eps, !self.no_diagonal_penalty).map_err(config)
    }

    fn config(&self) -> Result<SolverConfig, CliError> {
        let mut cfg = SolverConfig::new(self.solver, self.reweightings, self.inner_iters);
        if let Some(p) = self.cd_passes {
            cfg.cd_passes = p;
        }
        if let Some(t) = self.initial_step {
            cfg.ls.initial_step = t;
        }
        if let Some(n) = self.max_backtracks {
            cfg.ls.max_backtracks = n;
        }
        cfg.validate().map_err(config)?;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[arg(long)]
    cov: PathBuf,
    #[arg(long)]
    gamma: f64,
    #[command(flatten)]
    solver: SolverArgs,
    /// Estimated precision matrix; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-iteration trace as CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long)]
    config: PathBuf,
    /// CSV output; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GridArgs {
    #[arg(long)]
    cov: PathBuf,
    #[arg(long)]
    truth: PathBuf,
    #[command(flatten)]
    solver: SolverArgs,
    /// Comma-separated regularization levels at initialization (the
    /// off-diagonal weight at the first reweighting); log-spaced from the
    /// data when omitted.
    #[arg(long, value_delimiter = ',')]
    gammas: Option<Vec<f64>>,
    #[arg(long, default_value_t = DEFAULT_GRID_POINTS)]
    grid_points: usize,
    #[arg(long, default_value_t = DEFAULT_SUPPORT_TOL)]
    support_tol: f64,
    /// CSV output; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Solver(String),
    #[error("cannot write {path}: {source}")]
    Output { path: String, source: io::Error },
}

impl CliError {
    /// 2 configuration, 3 input data, 4 solver failure, 1 output I/O.
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Config(_) => 2,
            Self::Data(_) => 3,
            Self::Solver(_) => 4,
            Self::Output { .. } => 1,
        }
    }
}

fn config(e: impl std::fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

fn data(e: impl std::fmt::Display) -> CliError {
    CliError::Data(e.to_string())
}

fn output_err(path: Option<&Path>) -> impl Fn(io::Error) -> CliError + '_ {
    move |source| CliError::Output {
        path: path.map_or_else(|| "stdout".to_string(), |p| p.display().to_string()),
        source,
    }
}

fn csv_err(path: Option<&Path>) -> impl Fn(csv::Error) -> CliError + '_ {
    move |e| output_err(path)(io::Error::from(e))
}

/// Runs `f` against the file at `path`, or stdout.
fn with_output<T>(
    path: Option<&Path>,
    f: impl FnOnce(&mut dyn Write) -> Result<T, CliError>,
) -> Result<T, CliError> {
    match path {
        Some(p) => {
            let file = File::create(p).map_err(output_err(path))?;
            let mut w = BufWriter::new(file);
            let out = f(&mut w)?;
            w.flush().map_err(output_err(path))?;
            Ok(out)
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            let out = f(&mut lock)?;
            lock.flush().map_err(output_err(path))?;
            Ok(out)
        }
    }
}

fn read_matrix(path: &Path) -> Result<SymMatrix, CliError> {
    SymMatrix::read_file(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

pub fn run() -> Result<(), CliError> {
    run_from(std::env::args_os())
}

/// Parses `args` (program name first) and runs the command. Argument errors
/// print usage and exit with status 2.
pub fn run_from<I, T>(args: I) -> Result<(), CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match Cli::parse_from(args).command {
        Command::Generate(a) => cmd_generate(&a),
        Command::Solve(a) => cmd_solve(&a),
        Command::Sweep(a) => cmd_sweep(&a),
        Command::Grid(a) => cmd_grid(&a),
    }
}

fn cmd_generate(a: &GenerateArgs) -> Result<(), CliError> {
    let spec = SyntheticSpec {
        dim: a.dim,
        sparsity: a.sparsity,
        diag_boost: a.diag_boost,
        n_samples: a.samples,
        seed: a.seed,
    };
    spec.validate().map_err(config)?;
    let (truth, s) = generate(&spec).map_err(data)?;
    truth
        .write_file(&a.out_prec)
        .map_err(output_err(Some(&a.out_prec)))?;
    s.write_file(&a.out_cov).map_err(output_err(Some(&a.out_cov)))?;
    Ok(())
}

fn solve_error(e: SolveError) -> CliError {
    match e {
        SolveError::InitialNotPd => data(e),
        SolveError::Config(_) => config(e),
        SolveError::Solver(_) => CliError::Solver(e.to_string()),
    }
}

fn cmd_solve(a: &SolveArgs) -> Result<(), CliError> {
    let penalty = a.solver.penalty(a.gamma)?;
    let cfg = a.solver.config()?;
    let s = read_matrix(&a.cov)?;
    let problem = GlassoProblem::new(s, penalty).map_err(data)?;
    let theta0 = default_theta0(problem.covariance(), diagonal_shift(&problem)).map_err(data)?;
    let (theta, trace) = solve(&problem, &theta0, &cfg).map_err(solve_error)?;

    let out = a.out.as_deref();
    with_output(out, |w| theta.write_text(w).map_err(output_err(out)))?;
    if let Some(path) = &a.trace {
        let file = File::create(path).map_err(output_err(Some(path)))?;
        write_trace_csv(&trace, cfg.solver_kind, file).map_err(csv_err(Some(path)))?;
    }
    match trace.failure {
        Some(status) => Err(CliError::Solver(format!(
            "inner solver stopped early ({}) after {} iterations",
            status.label(),
            trace.total_inner_iterations()
        ))),
        None => Ok(()),
    }
}

/// One row per inner iteration: reweighting `k` and inner iteration `i`
/// (both from 0), `Ψ_k` after the iteration, the accepted step, the squared
/// step norm, the Newton active-set size, and cumulative wall time within
/// the reweighting.
pub fn write_trace_csv<W: Write>(trace: &RunTrace, solver: SolverKind, w: W) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["k", "i", "psi", "step", "sq_step_norm", "active_set", "wall_ms"])?;
    for (k, r) in trace.inner_reports.iter().enumerate() {
        for i in 0..r.iterations_done {
            let active = match solver {
                SolverKind::ProxNewton => r.active_set_sizes.get(i).map(|n| n.to_string()).unwrap_or_default(),
                _ => String::new(),
            };
            out.write_record([
                k.to_string(),
                i.to_string(),
                r.psi_trace[i].to_string(),
                r.step_trace[i].to_string(),
                r.sq_step_norms[i].to_string(),
                active,
                format!("{:.3}", r.wall_ms[i]),
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}

fn sweep_error(e: SweepError) -> CliError {
    match e {
        SweepError::NotPd(_) => data(e),
        SweepError::Pool(_) => CliError::Output {
            path: "worker pool".to_string(),
            source: io::Error::other(e.to_string()),
        },
        _ => config(e),
    }
}

fn cmd_sweep(a: &SweepArgs) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&a.config)
        .map_err(|e| CliError::Config(format!("{}: {e}", a.config.display())))?;
    let spec = SweepSpec::from_json(&text).map_err(sweep_error)?;
    let result = budget_sweep(&spec).map_err(sweep_error)?;
    let out = a.out.as_deref();
    with_output(out, |w| write_sweep_csv(&result.rows, w).map_err(csv_err(out)))
}

fn cmd_grid(a: &GridArgs) -> Result<(), CliError> {
    let template = a.solver.penalty(1.0)?;
    let cfg = a.solver.config()?;
    if !(a.support_tol >= 0.0) {
        return Err(CliError::Config(format!("support tolerance must be non-negative, got {}", a.support_tol)));
    }
    let s = read_matrix(&a.cov)?;
    let truth = read_matrix(&a.truth)?;
    if s.dim() != truth.dim() {
        return Err(CliError::Data(format!(
            "covariance is {0}x{0} but truth is {1}x{1}",
            s.dim(),
            truth.dim()
        )));
    }
    GlassoProblem::new(s.clone(), template).map_err(data)?;
    default_theta0(&s, 0.0).map_err(data)?;
    let gammas = match &a.gammas {
        Some(g) => g.clone(),
        None => default_gamma_grid(&s, a.grid_points),
    };
    if let Some(g) = gammas.iter().find(|g| !(**g > 0.0) || !g.is_finite()) {
        return Err(CliError::Config(format!("gamma values must be positive and finite, got {g}")));
    }
    let table = grid_search(&template, &s, &gammas, &cfg, &truth, a.support_tol).map_err(|e| match e {
        GridError::EmptyGrid => config(e),
        GridError::ZeroTruth(_) => data(e),
    })?;
    let out = a.out.as_deref();
    with_output(out, |w| table.write_csv(w).map_err(csv_err(out)))?;
    let failed = table.rows.iter().filter(|r| !r.outcome.is_ok()).count();
    if failed > 0 {
        return Err(CliError::Solver(format!("{failed} of {} grid points failed", table.rows.len())));
    }
    Ok(())
}
