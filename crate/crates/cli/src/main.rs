//! `thermoisp` command-line driver.
//!
//! Exit codes: 0 success, 2 invalid input or configuration, 3 reconstruction
//! diverged, 4 file I/O, 5 solver failure.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use thermoisp::experiment::{
    build_case, nondimensional_epsilon, prepare_run, run_reconstruction, run_sweep,
    PhysicalConstants, RunConfig, Sweep, Target,
};
use thermoisp::forward::ForwardSolver;
use thermoisp::grid::{Field, SpaceGrid, TimeGrid};
use thermoisp::io::{
    read_sidecar, write_field_csv, write_history_csv, write_sidecar, write_summary_csv,
    write_trajectory_csv, MeasurementMeta,
};
use thermoisp::measurement::{add_noise, apply_measurement};
use thermoisp::reconstruction::{landweber_threshold, GradientKind, Method};
use thermoisp::Error;

#[derive(Parser)]
#[command(
    name = "thermoisp",
    version,
    about = "Source reconstruction for 1D type-III thermoelasticity"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the full manufactured problem and write the trajectory and measurement.
    Forward(RunArgs),
    /// Reconstruct the spatial source factor from (optionally noisy) data.
    Reconstruct(RunArgs),
    /// Run a reconstruction for each value of one parameter.
    Sweep(SweepArgs),
    /// Write a noisy measurement and its metadata sidecar.
    NoiseGen(RunArgs),
    /// Estimate the Landweber relaxation limits by power iteration.
    Threshold(ThresholdArgs),
    /// Compute the nondimensional coupling ε of the copper benchmark material.
    Epsilon {
        /// Physical constants as TOML; defaults to the copper alloy.
        #[arg(long)]
        constants: Option<PathBuf>,
    },
}

#[derive(Args, Clone)]
struct RunArgs {
    /// TOML run configuration; command-line flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_parser = ["1.1", "1.2", "2"])]
    isp: Option<String>,
    #[arg(long, value_parser = ["f0", "f1"])]
    target: Option<String>,
    #[arg(long, value_parser = ["landweber", "sd", "cg"])]
    method: Option<String>,
    #[arg(long, value_parser = ["l2", "sobolev"])]
    gradient: Option<String>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    /// Relative noise level, 0.01 = 1%.
    #[arg(long)]
    noise: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    n_x: Option<usize>,
    #[arg(long)]
    n_t: Option<usize>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// Output directory, created if missing.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum SweepParam {
    Alpha,
    Beta,
    Noise,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    run: RunArgs,
    #[arg(long, value_enum)]
    param: SweepParam,
    /// Comma-separated grid values.
    #[arg(long, value_delimiter = ',', required = true)]
    values: Vec<f64>,
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

#[derive(Args)]
struct ThresholdArgs {
    #[command(flatten)]
    run: RunArgs,
    #[arg(long, default_value_t = 30)]
    iterations: usize,
}

enum Failure {
    Core(Error),
    Diverged(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Diverged(_) => 3,
            Failure::Core(e) => match e {
                Error::Io(_) | Error::Csv(_) | Error::TomlSer(_) => 4,
                Error::SingularMatrix { .. } | Error::NonFinite(_) | Error::DegenerateDirection => {
                    5
                }
                _ => 2,
            },
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Core(e) => write!(f, "{e}"),
            Failure::Diverged(msg) => write!(f, "{msg}"),
        }
    }
}

fn build_config(args: &RunArgs) -> Result<RunConfig, Error> {
    let mut cfg: RunConfig = match &args.config {
        Some(path) => read_sidecar(path)?,
        None => RunConfig::default(),
    };
    if let Some(v) = &args.isp {
        cfg.isp = v.parse()?;
    }
    if let Some(v) = &args.target {
        cfg.target = v.parse::<Target>()?;
    }
    if let Some(v) = &args.method {
        cfg.method = v.parse::<Method>()?;
    }
    if let Some(v) = &args.gradient {
        cfg.gradient = v.parse::<GradientKind>()?;
    }
    if let Some(v) = args.alpha {
        cfg.alpha = v;
    }
    if let Some(v) = args.beta {
        cfg.beta = v;
    }
    if let Some(v) = args.noise {
        cfg.noise = v;
    }
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    if let Some(v) = args.n_x {
        cfg.n_x = v;
    }
    if let Some(v) = args.n_t {
        cfg.n_t = v;
    }
    if let Some(v) = args.max_iter {
        cfg.max_iter = v;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn out_dir(path: &Path) -> Result<&Path, Error> {
    fs::create_dir_all(path)?;
    Ok(path)
}

fn measurement_meta(cfg: &RunConfig, noise_level: f64) -> MeasurementMeta {
    MeasurementMeta {
        kind: cfg.isp,
        relative_noise: cfg.noise,
        seed: cfg.seed,
        noise_level,
        n_x: cfg.n_x,
        fine_n_x: cfg.fine_n_x,
    }
}

fn forward(args: &RunArgs) -> Result<(), Failure> {
    let cfg = build_config(args)?;
    let dir = out_dir(&args.out)?;
    let case = build_case(cfg.target, cfg.isp);
    let space = SpaceGrid::new(cfg.n_x)?;
    let time = TimeGrid::new(cfg.n_t, cfg.final_time)?;
    let solver = ForwardSolver::new(case.params, case.kernel, space, time)?;
    let (load, heat) = case.full_sources();
    let sol = solver.solve(&load, &heat, &case.initial_data(space))?;
    write_trajectory_csv(&dir.join("trajectory.csv"), &sol)?;
    let measured = apply_measurement(&sol, cfg.isp)?;
    write_field_csv(&dir.join("measurement.csv"), &measured)?;
    let exact = Field::from_fn(space, |x| case.exact_measurement(x));
    write_field_csv(&dir.join("measurement_exact.csv"), &exact)?;
    write_sidecar(&dir.join("run.toml"), &cfg)?;
    println!("wrote {}", dir.display());
    Ok(())
}

fn reconstruct(args: &RunArgs) -> Result<(), Failure> {
    let cfg = build_config(args)?;
    let dir = out_dir(&args.out)?;
    let out = run_reconstruction(&cfg)?;
    write_summary_csv(&dir.join("summary.csv"), std::slice::from_ref(&out.summary))?;
    write_field_csv(&dir.join("f_final.csv"), &out.result.f_final)?;
    write_field_csv(&dir.join("f_true.csv"), &out.prepared.truth)?;
    write_field_csv(&dir.join("measurement.csv"), &out.prepared.measured)?;
    write_history_csv(&dir.join("history.csv"), &out.result)?;
    write_sidecar(&dir.join("run.toml"), &cfg)?;
    write_sidecar(
        &dir.join("measurement.toml"),
        &measurement_meta(&cfg, out.prepared.noise_level),
    )?;
    let s = &out.summary;
    println!(
        "ISP{} {} {} {}: K = {}, e_r = {:.4e}, DF = {:.4e}, P = {:.4e}, stop = {}",
        s.isp,
        s.target,
        s.method,
        s.gradient,
        s.iterations,
        s.relative_error,
        s.data_fidelity,
        s.penalty,
        s.stop
    );
    if out.result.diverged() {
        return Err(Failure::Diverged(format!(
            "iteration diverged after {} steps (alpha = {})",
            out.result.iterations, cfg.alpha
        )));
    }
    Ok(())
}

fn sweep(args: &SweepArgs) -> Result<(), Failure> {
    let cfg = build_config(&args.run)?;
    let dir = out_dir(&args.run.out)?;
    let values = args.values.clone();
    let grid = match args.param {
        SweepParam::Alpha => Sweep::Alpha(values),
        SweepParam::Beta => Sweep::Beta(values),
        SweepParam::Noise => Sweep::Noise(values),
    };
    let rows = run_sweep(&cfg, &grid, args.workers)?;
    write_summary_csv(&dir.join("summary.csv"), &rows)?;
    write_sidecar(&dir.join("run.toml"), &cfg)?;
    let diverged = rows.iter().filter(|r| r.diverged).count();
    println!(
        "{} runs, {} diverged; wrote {}",
        rows.len(),
        diverged,
        dir.display()
    );
    Ok(())
}

fn noise_gen(args: &RunArgs) -> Result<(), Failure> {
    let cfg = build_config(args)?;
    let dir = out_dir(&args.out)?;
    let case = build_case(cfg.target, cfg.isp);
    let fine = SpaceGrid::new(cfg.fine_n_x)?;
    let exact = Field::from_fn(fine, |x| case.exact_measurement(x));
    let (noisy, e) = add_noise(&exact, cfg.noise, cfg.seed, SpaceGrid::new(cfg.n_x)?)?;
    write_field_csv(&dir.join("measurement.csv"), &noisy)?;
    write_sidecar(&dir.join("measurement.toml"), &measurement_meta(&cfg, e))?;
    println!("e = {e:.6e}");
    Ok(())
}

fn threshold(args: &ThresholdArgs) -> Result<(), Failure> {
    let cfg = build_config(&args.run)?;
    let prepared = prepare_run(&cfg)?;
    let t = landweber_threshold(&prepared.operator, args.iterations)?;
    println!("norm_sq = {:.6e}", t.norm_sq);
    println!("alpha_sufficient = {:.6}", t.sufficient);
    println!("alpha_critical = {:.6}", t.critical);
    Ok(())
}

fn epsilon(constants: Option<&Path>) -> Result<(), Failure> {
    let c = match constants {
        Some(path) => read_sidecar(path)?,
        None => PhysicalConstants::copper_alloy(),
    };
    let r = nondimensional_epsilon(&c)?;
    println!("epsilon = {:.6}", r.epsilon);
    println!("gamma = {:.6e}", r.coupling);
    println!("lambda = {:.6e}", r.lambda);
    println!("mu = {:.6e}", r.mu);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Forward(a) => forward(a),
        Command::Reconstruct(a) => reconstruct(a),
        Command::Sweep(a) => sweep(a),
        Command::NoiseGen(a) => noise_gen(a),
        Command::Threshold(a) => threshold(a),
        Command::Epsilon { constants } => epsilon(constants.as_deref()),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.exit_code())
        }
    }
}
