//! Manufactured benchmark, run configuration, single runs and sweeps.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward::{ForwardSolution, ForwardSolver, InitialData, MaterialParams};
use crate::gradient::{SobolevWeights, Weight};
use crate::grid::{norm_l2, Field, SpaceGrid, TimeGrid};
use crate::kernel::Kernel;
use crate::measurement::{add_noise, compute_remainder, MeasurementKind};
use crate::operator::ThermoelasticOperator;
use crate::reconstruction::{
    reconstruct, GradientKind, Method, ReconstructionConfig, ReconstructionResult,
};
use crate::source::{Source, TimeFn};

/// Version of the [`SummaryRow`] column layout.
pub const SUMMARY_SCHEMA_VERSION: u32 = 1;

/// Nondimensional coupling used by the benchmark.
pub const BENCHMARK_EPSILON: f64 = 0.0189;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    /// `x sin(2πx)`
    F0,
    /// `x sin(2πx) + 0.2`
    F1,
}

impl Target {
    pub fn eval(self, x: f64) -> f64 {
        let base = x * (2.0 * PI * x).sin();
        match self {
            Self::F0 => base,
            Self::F1 => base + 0.2,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::F0 => "f0",
            Self::F1 => "f1",
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Target {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "f0" => Ok(Self::F0),
            "f1" => Ok(Self::F1),
            other => Err(Error::Config(format!(
                "unknown target '{other}', expected f0 or f1"
            ))),
        }
    }
}

/// Closed-form solution
///
/// ```text
/// u(x,t) = (t³+t+1)(1 − cos 2πx)/10,   θ(x,t) = 2(t²+1) x(1−x)²
/// ```
///
/// with the sources obtained by substituting it into the PDE, split as
/// `g(t) f(x) + remainder` in the equation selected by the measurement kind.
#[derive(Debug, Clone, Copy)]
pub struct ManufacturedCase {
    pub target: Target,
    pub kind: MeasurementKind,
    pub params: MaterialParams,
    pub kernel: Kernel,
}

pub fn build_case(target: Target, kind: MeasurementKind) -> ManufacturedCase {
    ManufacturedCase {
        target,
        kind,
        params: MaterialParams::nondimensional(BENCHMARK_EPSILON),
        kernel: Kernel::new(0.01, 2.0).expect("benchmark kernel is valid"),
    }
}

fn one_minus_cos(x: f64) -> f64 {
    1.0 - (2.0 * PI * x).cos()
}

impl ManufacturedCase {
    pub fn exact_u(&self, x: f64, t: f64) -> f64 {
        0.1 * (t.powi(3) + t + 1.0) * one_minus_cos(x)
    }

    pub fn exact_theta(&self, x: f64, t: f64) -> f64 {
        2.0 * (t * t + 1.0) * x * (1.0 - x).powi(2)
    }

    /// `g(t) = −(2π²/5)(t² + t + 1)`.
    pub fn g(&self, t: f64) -> f64 {
        -2.0 * PI * PI / 5.0 * (t * t + t + 1.0)
    }

    pub fn time_profile(&self) -> TimeFn {
        let c = *self;
        TimeFn::new(move |t| c.g(t))
    }

    /// `∫_0^t k(t−s)(s²+1) ds` for `k(t) = a e^{−bt}`.
    fn memory_of_quadratic(&self, t: f64) -> f64 {
        let a = self.kernel.amplitude();
        let b = self.kernel.decay();
        let e = (-b * t).exp();
        a * (t * t / b - 2.0 * t / (b * b) + 2.0 / b.powi(3) - 2.0 * e / b.powi(3) + (1.0 - e) / b)
    }

    /// `ρ u_tt − (λ+2μ) u_xx + γ θ_x`.
    pub fn load(&self, x: f64, t: f64) -> f64 {
        let p = &self.params;
        let u_tt = 0.6 * t * one_minus_cos(x);
        let u_xx = 0.4 * PI * PI * (t.powi(3) + t + 1.0) * (2.0 * PI * x).cos();
        let theta_x = 2.0 * (t * t + 1.0) * (x - 1.0).powi(2) + 4.0 * x * (t * t + 1.0) * (x - 1.0);
        p.density * u_tt - p.longitudinal_modulus() * u_xx + p.coupling * theta_x
    }

    /// `ρC_s θ_t − κ θ_xx − (k∗θ_xx) + T0 γ u_xt`.
    pub fn heat(&self, x: f64, t: f64) -> f64 {
        let p = &self.params;
        let theta_t = 4.0 * t * x * (1.0 - x).powi(2);
        let theta_xx = 2.0 * (t * t + 1.0) * (6.0 * x - 4.0);
        let memory = 2.0 * (6.0 * x - 4.0) * self.memory_of_quadratic(t);
        let u_xt = PI / 5.0 * (3.0 * t * t + 1.0) * (2.0 * PI * x).sin();
        p.density * p.specific_heat * theta_t - p.conductivity * theta_xx - memory
            + p.reference_temperature * p.coupling * u_xt
    }

    /// Source remainder `p − g f` (or `h − g f` for the heat source).
    pub fn remainder(&self, x: f64, t: f64) -> f64 {
        let full = match self.kind.slot() {
            crate::forward::SourceSlot::Load => self.load(x, t),
            crate::forward::SourceSlot::Heat => self.heat(x, t),
        };
        full - self.g(t) * self.target.eval(x)
    }

    /// Load and heat sources of the known-data problem.
    pub fn known_sources(&self) -> (Source, Source) {
        let c = *self;
        match self.kind.slot() {
            crate::forward::SourceSlot::Load => (
                Source::closure(move |x, t| c.remainder(x, t)),
                Source::closure(move |x, t| c.heat(x, t)),
            ),
            crate::forward::SourceSlot::Heat => (
                Source::closure(move |x, t| c.load(x, t)),
                Source::closure(move |x, t| c.remainder(x, t)),
            ),
        }
    }

    /// Full load and heat sources.
    pub fn full_sources(&self) -> (Source, Source) {
        let c = *self;
        (
            Source::closure(move |x, t| c.load(x, t)),
            Source::closure(move |x, t| c.heat(x, t)),
        )
    }

    pub fn initial_data(&self, grid: SpaceGrid) -> InitialData {
        InitialData {
            displacement: Field::from_fn(grid, |x| 0.1 * one_minus_cos(x)),
            velocity: Field::from_fn(grid, |x| 0.1 * one_minus_cos(x)),
            temperature: Field::from_fn(grid, |x| 2.0 * x * (1.0 - x).powi(2)),
        }
    }

    /// Closed-form observation on `[0, T]` with `T = 1`.
    pub fn exact_measurement(&self, x: f64) -> f64 {
        match self.kind {
            MeasurementKind::FinalTimeU => 0.3 * one_minus_cos(x),
            MeasurementKind::TimeAvgU => 7.0 / 40.0 * one_minus_cos(x),
            MeasurementKind::TimeAvgTheta => 8.0 / 3.0 * x * (1.0 - x).powi(2),
        }
    }

    pub fn truth(&self, grid: SpaceGrid) -> Field {
        Field::from_fn(grid, |x| self.target.eval(x))
    }
}

/// Physical constants of an isotropic material.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    /// G
    pub shear_modulus: f64,
    /// ν
    pub poisson_ratio: f64,
    /// α_T
    pub thermal_expansion: f64,
    pub density: f64,
    pub specific_heat: f64,
    pub reference_temperature: f64,
}

impl PhysicalConstants {
    /// Copper alloy of the benchmark.
    pub fn copper_alloy() -> Self {
        Self {
            shear_modulus: 4.8e10,
            poisson_ratio: 0.34,
            thermal_expansion: 16.5e-6,
            density: 8960.0,
            specific_heat: 385.0,
            reference_temperature: 293.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpsilonReport {
    pub epsilon: f64,
    pub coupling: f64,
    pub lambda: f64,
    pub mu: f64,
}

/// `ε = γ² T0 / (ρ² C_s C₁²)` with `C₁² = (λ+2μ)/ρ`.
pub fn nondimensional_epsilon(c: &PhysicalConstants) -> Result<EpsilonReport> {
    let nu = c.poisson_ratio;
    if !(nu > 0.0 && nu < 0.5) {
        return Err(Error::InvalidInput(format!(
            "Poisson ratio must lie in (0, 1/2), got {nu}"
        )));
    }
    for (name, v) in [
        ("shear_modulus", c.shear_modulus),
        ("thermal_expansion", c.thermal_expansion),
        ("density", c.density),
        ("specific_heat", c.specific_heat),
    ] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::InvalidInput(format!("{name} must be > 0, got {v}")));
        }
    }
    if !(c.reference_temperature >= 0.0) {
        return Err(Error::InvalidInput(
            "reference temperature must be >= 0".into(),
        ));
    }
    let g = c.shear_modulus;
    let lambda = 2.0 * nu * g / (1.0 - 2.0 * nu);
    let mu = g;
    let coupling = 2.0 * g * c.thermal_expansion * (1.0 + nu) / (1.0 - 2.0 * nu);
    let c1_sq = (lambda + 2.0 * mu) / c.density;
    let epsilon = coupling * coupling * c.reference_temperature
        / (c.density * c.density * c.specific_heat * c1_sq);
    Ok(EpsilonReport {
        epsilon,
        coupling,
        lambda,
        mu,
    })
}

/// Everything needed for one reconstruction run. Field names are the keys of
/// the TOML configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub n_x: usize,
    pub n_t: usize,
    pub final_time: f64,
    /// Fine grid on which noise is drawn.
    pub fine_n_x: usize,
    pub target: Target,
    pub isp: MeasurementKind,
    /// Relative noise level ẽ (0.01 = 1%).
    pub noise: f64,
    pub seed: u64,
    pub method: Method,
    pub gradient: GradientKind,
    pub alpha: f64,
    pub beta: f64,
    pub r0: f64,
    pub r1: f64,
    pub max_iter: usize,
    pub morozov_r: f64,
    pub divergence_limit: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            n_x: 50,
            n_t: 50,
            final_time: 1.0,
            fine_n_x: 1000,
            target: Target::F0,
            isp: MeasurementKind::TimeAvgU,
            noise: 0.0,
            seed: DEFAULT_SEED,
            method: Method::Landweber,
            gradient: GradientKind::L2,
            alpha: 6.0,
            beta: 0.0,
            r0: 1.0,
            r1: 0.01,
            max_iter: 200,
            morozov_r: 1.001,
            divergence_limit: 1e6,
        }
    }
}

/// Seed used when none is given.
pub const DEFAULT_SEED: u64 = 20_240_917;

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_x < 2 {
            return Err(Error::Config(format!("n_x must be >= 2, got {}", self.n_x)));
        }
        if self.n_t == 0 || !self.n_t.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "n_t must be positive and even, got {}",
                self.n_t
            )));
        }
        if (self.final_time - 1.0).abs() > 1e-12 {
            return Err(Error::Config(format!(
                "the manufactured benchmark is defined for final_time = 1, got {}",
                self.final_time
            )));
        }
        if self.fine_n_x < self.n_x || !self.fine_n_x.is_multiple_of(self.n_x) {
            return Err(Error::Config(format!(
                "fine_n_x ({}) must be a multiple of n_x ({})",
                self.fine_n_x, self.n_x
            )));
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return Err(Error::Config(format!(
                "noise must be >= 0, got {}",
                self.noise
            )));
        }
        if !(self.r0 > 0.0) || !(self.r1 > 0.0) {
            return Err(Error::Config("r0 and r1 must be positive".into()));
        }
        self.reconstruction_config(0.0, None).validate()
    }

    pub fn weights(&self) -> SobolevWeights {
        SobolevWeights {
            r0: Weight::Constant(self.r0),
            r1: Weight::Constant(self.r1),
        }
    }

    fn reconstruction_config(
        &self,
        noise_level: f64,
        truth: Option<Field>,
    ) -> ReconstructionConfig {
        ReconstructionConfig {
            method: self.method,
            gradient: self.gradient,
            alpha: self.alpha,
            beta: self.beta,
            max_iter: self.max_iter,
            morozov_r: self.morozov_r,
            noise_level,
            initial: None,
            truth,
            weights: self.weights(),
            divergence_limit: self.divergence_limit,
        }
    }
}

/// Inputs of a reconstruction derived from a [`RunConfig`].
#[derive(Debug, Clone)]
pub struct PreparedRun {
    pub case: ManufacturedCase,
    pub operator: ThermoelasticOperator,
    /// Observation minus the known-data contribution (noisy if requested).
    pub remainder: Field,
    /// Observation used, on the working grid.
    pub measured: Field,
    /// Realised noise distance `e`.
    pub noise_level: f64,
    pub truth: Field,
    pub star: ForwardSolution,
}

pub fn prepare_run(cfg: &RunConfig) -> Result<PreparedRun> {
    cfg.validate()?;
    let case = build_case(cfg.target, cfg.isp);
    let space = SpaceGrid::new(cfg.n_x)?;
    let time = TimeGrid::new(cfg.n_t, cfg.final_time)?;
    let solver = ForwardSolver::new(case.params, case.kernel, space, time)?;
    let (load, heat) = case.known_sources();
    let star = solver.solve(&load, &heat, &case.initial_data(space))?;
    let fine = SpaceGrid::new(cfg.fine_n_x)?;
    let exact_fine = Field::from_fn(fine, |x| case.exact_measurement(x));
    let (measured, noise_level) = add_noise(&exact_fine, cfg.noise, cfg.seed, space)?;
    let remainder = compute_remainder(&measured, &star, cfg.isp)?;
    let operator = ThermoelasticOperator::new(
        cfg.isp,
        case.time_profile(),
        case.params,
        case.kernel,
        space,
        time,
    )?;
    Ok(PreparedRun {
        truth: case.truth(space),
        case,
        operator,
        remainder,
        measured,
        noise_level,
        star,
    })
}

/// One line of the results table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub schema_version: u32,
    pub isp: String,
    pub target: String,
    pub method: String,
    pub gradient: String,
    pub noise: f64,
    pub noise_level_e: f64,
    pub seed: u64,
    pub alpha: f64,
    pub beta: f64,
    pub iterations: usize,
    pub relative_error: f64,
    pub data_fidelity: f64,
    pub penalty: f64,
    pub stop: String,
    pub diverged: bool,
}

impl SummaryRow {
    fn base(cfg: &RunConfig) -> Self {
        Self {
            schema_version: SUMMARY_SCHEMA_VERSION,
            isp: cfg.isp.label().into(),
            target: cfg.target.label().into(),
            method: cfg.method.label().into(),
            gradient: cfg.gradient.label().into(),
            noise: cfg.noise,
            noise_level_e: 0.0,
            seed: cfg.seed,
            alpha: cfg.alpha,
            beta: cfg.beta,
            iterations: 0,
            relative_error: f64::NAN,
            data_fidelity: f64::NAN,
            penalty: f64::NAN,
            stop: String::new(),
            diverged: false,
        }
    }

    fn failed(cfg: &RunConfig, err: &Error) -> Self {
        Self {
            stop: format!("error: {err}"),
            diverged: true,
            ..Self::base(cfg)
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub result: ReconstructionResult,
    pub summary: SummaryRow,
    pub prepared: PreparedRun,
}

pub fn run_reconstruction(cfg: &RunConfig) -> Result<RunOutcome> {
    let prepared = prepare_run(cfg)?;
    let rc = cfg.reconstruction_config(prepared.noise_level, Some(prepared.truth.clone()));
    let result = reconstruct(&prepared.operator, &prepared.remainder, &rc)?;
    let stop = stop_label(&result);
    let summary = SummaryRow {
        noise_level_e: prepared.noise_level,
        iterations: result.iterations,
        relative_error: result.metrics.relative_error.unwrap_or(f64::NAN),
        data_fidelity: result.metrics.data_fidelity,
        penalty: result.metrics.penalty,
        stop,
        diverged: result.diverged(),
        ..SummaryRow::base(cfg)
    };
    Ok(RunOutcome {
        result,
        summary,
        prepared,
    })
}

fn stop_label(result: &ReconstructionResult) -> String {
    use crate::reconstruction::StopReason::*;
    match result.stop {
        Discrepancy => "discrepancy",
        MaxIterations => "max_iterations",
        CostIncrease => "cost_increase",
        Stationary => "stationary",
        Diverged => "diverged",
    }
    .into()
}

/// Parameter varied across a sweep.
#[derive(Debug, Clone, PartialEq)]
pub enum Sweep {
    Alpha(Vec<f64>),
    Beta(Vec<f64>),
    Noise(Vec<f64>),
}

impl Sweep {
    fn configs(&self, base: &RunConfig) -> Vec<RunConfig> {
        let (values, set): (&[f64], fn(&mut RunConfig, f64)) = match self {
            Self::Alpha(v) => (v, |c, x| c.alpha = x),
            Self::Beta(v) => (v, |c, x| c.beta = x),
            Self::Noise(v) => (v, |c, x| c.noise = x),
        };
        values
            .iter()
            .map(|&x| {
                let mut c = base.clone();
                set(&mut c, x);
                c
            })
            .collect()
    }

    pub fn is_empty(&self) -> bool {
        match self {
            Self::Alpha(v) | Self::Beta(v) | Self::Noise(v) => v.is_empty(),
        }
    }
}

/// Runs every grid point on a pool of `workers` threads. Rows come back in
/// grid order; a failing point becomes a row flagged as divergent.
pub fn run_sweep(base: &RunConfig, sweep: &Sweep, workers: usize) -> Result<Vec<SummaryRow>> {
    if sweep.is_empty() {
        return Err(Error::Config("sweep grid is empty".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("cannot build worker pool: {e}")))?;
    let configs = sweep.configs(base);
    Ok(pool.install(|| {
        configs
            .par_iter()
            .map(|c| match run_reconstruction(c) {
                Ok(out) => out.summary,
                Err(e) => SummaryRow::failed(c, &e),
            })
            .collect()
    }))
}

/// Relative L2 error of the time-averaged displacement of the full
/// manufactured problem against `(7/40)(1 − cos 2πx)`.
pub fn manufactured_forward_error(n_x: usize, n_t: usize) -> Result<f64> {
    let case = build_case(Target::F0, MeasurementKind::TimeAvgU);
    let space = SpaceGrid::new(n_x)?;
    let time = TimeGrid::new(n_t, 1.0)?;
    let solver = ForwardSolver::new(case.params, case.kernel, space, time)?;
    let (load, heat) = case.full_sources();
    let sol = solver.solve(&load, &heat, &case.initial_data(space))?;
    let avg = crate::measurement::apply_measurement(&sol, MeasurementKind::TimeAvgU)?;
    let exact = Field::from_fn(space, |x| case.exact_measurement(x));
    Ok(norm_l2(&avg.sub(&exact)?) / norm_l2(&exact))
}
