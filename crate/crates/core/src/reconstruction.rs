//! Landweber iteration, steepest descent and Fletcher–Reeves conjugate
//! gradients for `N f = d`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gradient::{
    cost_from_residual, grad_from_residual, grad_sobolev, optimal_step, SobolevWeights,
};
use crate::grid::{inner_l2, norm_l2, Field};
use crate::operator::SourceOperator;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Landweber,
    #[serde(rename = "sd")]
    SteepestDescent,
    #[serde(rename = "cg")]
    ConjugateGradient,
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Self::Landweber => "landweber",
            Self::SteepestDescent => "sd",
            Self::ConjugateGradient => "cg",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "landweber" => Ok(Self::Landweber),
            "sd" => Ok(Self::SteepestDescent),
            "cg" => Ok(Self::ConjugateGradient),
            other => Err(Error::Config(format!(
                "unknown method '{other}', expected landweber, sd or cg"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GradientKind {
    L2,
    Sobolev,
}

impl GradientKind {
    pub fn label(self) -> &'static str {
        match self {
            Self::L2 => "l2",
            Self::Sobolev => "sobolev",
        }
    }
}

impl fmt::Display for GradientKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for GradientKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "l2" => Ok(Self::L2),
            "sobolev" => Ok(Self::Sobolev),
            other => Err(Error::Config(format!(
                "unknown gradient '{other}', expected l2 or sobolev"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// Discrepancy dropped to `r·e`.
    Discrepancy,
    MaxIterations,
    /// The next iterate would have increased the cost; the previous one is kept.
    CostIncrease,
    /// Gradient or search direction vanished.
    Stationary,
    Diverged,
}

#[derive(Debug, Clone)]
pub struct ReconstructionConfig {
    pub method: Method,
    pub gradient: GradientKind,
    /// Landweber relaxation α.
    pub alpha: f64,
    /// Tikhonov weight β (gradient methods).
    pub beta: f64,
    pub max_iter: usize,
    /// Morozov factor r > 1.
    pub morozov_r: f64,
    /// Realised noise level e; 0 disables the discrepancy stop.
    pub noise_level: f64,
    /// Starting guess; zero when absent.
    pub initial: Option<Field>,
    /// Known source, used only to report relative errors.
    pub truth: Option<Field>,
    pub weights: SobolevWeights,
    /// Landweber iterates with a larger norm are reported as divergent.
    pub divergence_limit: f64,
}

impl Default for ReconstructionConfig {
    fn default() -> Self {
        Self {
            method: Method::Landweber,
            gradient: GradientKind::L2,
            alpha: 1.0,
            beta: 0.0,
            max_iter: 200,
            morozov_r: 1.001,
            noise_level: 0.0,
            initial: None,
            truth: None,
            weights: SobolevWeights::default(),
            divergence_limit: 1e6,
        }
    }
}

impl ReconstructionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.method == Method::Landweber && !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::Config(format!(
                "alpha must be > 0, got {}",
                self.alpha
            )));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(Error::Config(format!(
                "beta must be >= 0, got {}",
                self.beta
            )));
        }
        if !(self.morozov_r > 1.0 && self.morozov_r.is_finite()) {
            return Err(Error::Config(format!(
                "morozov_r must be > 1, got {}",
                self.morozov_r
            )));
        }
        if !(self.noise_level >= 0.0 && self.noise_level.is_finite()) {
            return Err(Error::Config(format!(
                "noise level must be >= 0, got {}",
                self.noise_level
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::Config("max_iter must be positive".into()));
        }
        if !(self.divergence_limit > 0.0) {
            return Err(Error::Config("divergence_limit must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    /// `‖truth − f_K‖/‖truth‖` when the truth is known.
    pub relative_error: Option<f64>,
    /// `‖N f_K − d‖`.
    pub data_fidelity: f64,
    /// `‖f_K‖`.
    pub penalty: f64,
}

#[derive(Debug, Clone)]
pub struct ReconstructionResult {
    pub f_final: Field,
    pub iterations: usize,
    /// Entry `k` belongs to iterate `f_k`; length `iterations + 1`.
    pub cost_history: Vec<f64>,
    pub discrepancy_history: Vec<f64>,
    /// Relative errors per iterate, when the truth is known.
    pub error_history: Option<Vec<f64>>,
    pub metrics: Metrics,
    pub stop: StopReason,
}

impl ReconstructionResult {
    pub fn diverged(&self) -> bool {
        self.stop == StopReason::Diverged
    }
}

/// `E_k ≤ r e` with `e > 0`.
pub fn morozov_stop(discrepancy: f64, r: f64, e: f64) -> bool {
    e > 0.0 && discrepancy <= r * e
}

pub fn reconstruct(
    op: &dyn SourceOperator,
    remainder: &Field,
    cfg: &ReconstructionConfig,
) -> Result<ReconstructionResult> {
    match cfg.method {
        Method::Landweber => landweber(op, remainder, cfg),
        Method::SteepestDescent => steepest_descent(op, remainder, cfg),
        Method::ConjugateGradient => conjugate_gradient(op, remainder, cfg),
    }
}

struct History<'a> {
    truth: Option<(&'a Field, f64)>,
    cost: Vec<f64>,
    discrepancy: Vec<f64>,
    error: Vec<f64>,
}

impl<'a> History<'a> {
    fn new(truth: Option<&'a Field>) -> Self {
        Self {
            truth: truth.map(|t| (t, norm_l2(t))),
            cost: Vec::new(),
            discrepancy: Vec::new(),
            error: Vec::new(),
        }
    }

    fn record(&mut self, f: &Field, cost: f64, discrepancy: f64) -> Result<()> {
        self.cost.push(cost);
        self.discrepancy.push(discrepancy);
        if let Some((t, tn)) = self.truth {
            self.error.push(norm_l2(&t.sub(f)?) / tn);
        }
        Ok(())
    }

    fn finish(self, f: Field, stop: StopReason) -> ReconstructionResult {
        let iterations = self.cost.len() - 1;
        let data_fidelity = *self.discrepancy.last().expect("history is never empty");
        let relative_error = self.error.last().copied();
        let penalty = norm_l2(&f);
        ReconstructionResult {
            f_final: f,
            iterations,
            cost_history: self.cost,
            discrepancy_history: self.discrepancy,
            error_history: self.truth.map(|_| self.error),
            metrics: Metrics {
                relative_error,
                data_fidelity,
                penalty,
            },
            stop,
        }
    }
}

fn start(op: &dyn SourceOperator, cfg: &ReconstructionConfig) -> Result<Field> {
    cfg.validate()?;
    match &cfg.initial {
        Some(f) if f.grid() != op.grid() => Err(Error::GridMismatch("initial guess".into())),
        Some(f) => Ok(f.clone()),
        None => Ok(Field::zeros(op.grid())),
    }
}

/// `f_{k+1} = f_k − α N(N f_k − d)`, two applications of `N` per step.
pub fn landweber(
    op: &dyn SourceOperator,
    remainder: &Field,
    cfg: &ReconstructionConfig,
) -> Result<ReconstructionResult> {
    let mut f = start(op, cfg)?;
    let mut hist = History::new(cfg.truth.as_ref());
    let mut k = 0;
    loop {
        let res = op.apply(&f)?.sub(remainder)?;
        let e_k = norm_l2(&res);
        hist.record(&f, 0.5 * e_k * e_k, e_k)?;
        if e_k == 0.0 {
            return Ok(hist.finish(f, StopReason::Stationary));
        }
        if morozov_stop(e_k, cfg.morozov_r, cfg.noise_level) {
            return Ok(hist.finish(f, StopReason::Discrepancy));
        }
        if k == cfg.max_iter {
            return Ok(hist.finish(f, StopReason::MaxIterations));
        }
        let correction = op.apply(&res)?;
        f = f.add_scaled(-cfg.alpha, &correction)?;
        k += 1;
        if !f.is_finite() || norm_l2(&f) > cfg.divergence_limit {
            let d = if f.is_finite() {
                norm_l2(&op.apply(&f)?.sub(remainder)?)
            } else {
                f64::INFINITY
            };
            hist.record(&f, 0.5 * d * d, d)?;
            return Ok(hist.finish(f, StopReason::Diverged));
        }
    }
}

fn search_direction(
    op: &dyn SourceOperator,
    f: &Field,
    res: &Field,
    cfg: &ReconstructionConfig,
) -> Result<Field> {
    let g = grad_from_residual(op, f, res, cfg.beta)?;
    match cfg.gradient {
        GradientKind::L2 => Ok(g),
        GradientKind::Sobolev => grad_sobolev(&g, &cfg.weights),
    }
}

/// `f_{n+1} = f_n − τ_n ∇J(f_n)` with the exact step.
pub fn steepest_descent(
    op: &dyn SourceOperator,
    remainder: &Field,
    cfg: &ReconstructionConfig,
) -> Result<ReconstructionResult> {
    let mut f = start(op, cfg)?;
    let mut hist = History::new(cfg.truth.as_ref());
    let mut res = op.apply(&f)?.sub(remainder)?;
    let mut j = cost_from_residual(&res, &f, cfg.beta);
    hist.record(&f, j, norm_l2(&res))?;
    for _ in 0..cfg.max_iter {
        if morozov_stop(norm_l2(&res), cfg.morozov_r, cfg.noise_level) {
            return Ok(hist.finish(f, StopReason::Discrepancy));
        }
        let dir = search_direction(op, &f, &res, cfg)?;
        if dir.max_abs() == 0.0 {
            return Ok(hist.finish(f, StopReason::Stationary));
        }
        let image = op.apply(&dir)?;
        let tau = match optimal_step(&res, &image, &f, &dir, cfg.beta) {
            Ok(t) => t,
            Err(Error::DegenerateDirection) => return Ok(hist.finish(f, StopReason::Stationary)),
            Err(e) => return Err(e),
        };
        let f_new = f.add_scaled(-tau, &dir)?;
        let res_new = op.apply(&f_new)?.sub(remainder)?;
        let j_new = cost_from_residual(&res_new, &f_new, cfg.beta);
        if j_new > j {
            return Ok(hist.finish(f, StopReason::CostIncrease));
        }
        f = f_new;
        res = res_new;
        j = j_new;
        hist.record(&f, j, norm_l2(&res))?;
    }
    if morozov_stop(norm_l2(&res), cfg.morozov_r, cfg.noise_level) {
        return Ok(hist.finish(f, StopReason::Discrepancy));
    }
    Ok(hist.finish(f, StopReason::MaxIterations))
}

/// Fletcher–Reeves CG. The first direction is the negative gradient, so the
/// first iterate coincides with steepest descent.
pub fn conjugate_gradient(
    op: &dyn SourceOperator,
    remainder: &Field,
    cfg: &ReconstructionConfig,
) -> Result<ReconstructionResult> {
    let mut f = start(op, cfg)?;
    let mut hist = History::new(cfg.truth.as_ref());
    let mut res = op.apply(&f)?.sub(remainder)?;
    let mut j = cost_from_residual(&res, &f, cfg.beta);
    hist.record(&f, j, norm_l2(&res))?;

    let mut dir = search_direction(op, &f, &res, cfg)?.scale(-1.0);
    let mut steepest_sq = inner_l2(&dir, &dir)?;
    for n in 0..cfg.max_iter {
        if morozov_stop(norm_l2(&res), cfg.morozov_r, cfg.noise_level) {
            return Ok(hist.finish(f, StopReason::Discrepancy));
        }
        if dir.max_abs() == 0.0 {
            return Ok(hist.finish(f, StopReason::Stationary));
        }
        let image = op.apply(&dir)?;
        // step for f + τ d is minus the step for f − τ d
        let tau = match optimal_step(&res, &image, &f, &dir, cfg.beta) {
            Ok(t) => -t,
            Err(Error::DegenerateDirection) => return Ok(hist.finish(f, StopReason::Stationary)),
            Err(e) => return Err(e),
        };
        let f_new = f.add_scaled(tau, &dir)?;
        let res_new = op.apply(&f_new)?.sub(remainder)?;
        let j_new = cost_from_residual(&res_new, &f_new, cfg.beta);
        if j_new > j {
            return Ok(hist.finish(f, StopReason::CostIncrease));
        }
        f = f_new;
        res = res_new;
        j = j_new;
        hist.record(&f, j, norm_l2(&res))?;
        if n + 1 == cfg.max_iter {
            break;
        }

        let next = search_direction(op, &f, &res, cfg)?.scale(-1.0);
        let next_sq = inner_l2(&next, &next)?;
        if steepest_sq == 0.0 {
            return Ok(hist.finish(f, StopReason::Stationary));
        }
        let zeta = next_sq / steepest_sq;
        dir = next.add_scaled(zeta, &dir)?;
        steepest_sq = next_sq;
    }
    if morozov_stop(norm_l2(&res), cfg.morozov_r, cfg.noise_level) {
        return Ok(hist.finish(f, StopReason::Discrepancy));
    }
    Ok(hist.finish(f, StopReason::MaxIterations))
}

/// Power iteration on `f ↦ N*(N f)` from a constant start. Returns the
/// running maximum of the Rayleigh-type quotients `‖N x_k‖²/‖x_k‖²`, each of
/// which bounds `‖N‖²` from below.
pub fn operator_norm_estimate(op: &dyn SourceOperator, iters: usize) -> Result<f64> {
    if iters == 0 {
        return Err(Error::InvalidInput(
            "need at least one power iteration".into(),
        ));
    }
    let mut x = Field::constant(op.grid(), 1.0);
    let mut best: f64 = 0.0;
    for _ in 0..iters {
        let xn = norm_l2(&x);
        if xn == 0.0 {
            break;
        }
        x = x.scale(1.0 / xn);
        let image = op.apply(&x)?;
        let q = inner_l2(&image, &image)?;
        best = best.max(q);
        x = op.adjoint_apply(&image)?;
    }
    Ok(best)
}

/// Relaxation bounds derived from an estimate `q` of `‖N‖²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LandweberThreshold {
    pub norm_sq: f64,
    /// `1/q`: the classical sufficient range `0 < α < ‖N‖⁻²`.
    pub sufficient: f64,
    /// `2/q`: the step beyond which the mode of largest singular value is
    /// amplified and the iteration diverges.
    pub critical: f64,
}

pub fn landweber_threshold(op: &dyn SourceOperator, iters: usize) -> Result<LandweberThreshold> {
    let q = operator_norm_estimate(op, iters)?;
    if !(q > 0.0 && q.is_finite()) {
        return Err(Error::DegenerateDirection);
    }
    Ok(LandweberThreshold {
        norm_sq: q,
        sufficient: 1.0 / q,
        critical: 2.0 / q,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::SpaceGrid;
    use crate::operator::MatrixOperator;

    #[test]
    fn morozov_examples() {
        assert!(morozov_stop(0.0025, 1.001, 0.00254));
        assert!(!morozov_stop(0.0, 1.001, 0.0));
        assert!(!morozov_stop(0.01, 1.001, 0.00254));
    }

    #[test]
    fn parse_labels() {
        for m in [
            Method::Landweber,
            Method::SteepestDescent,
            Method::ConjugateGradient,
        ] {
            assert_eq!(m.label().parse::<Method>().unwrap(), m);
        }
        for g in [GradientKind::L2, GradientKind::Sobolev] {
            assert_eq!(g.label().parse::<GradientKind>().unwrap(), g);
        }
        assert!("newton".parse::<Method>().is_err());
    }

    #[test]
    fn config_validation() {
        let mut c = ReconstructionConfig::default();
        assert!(c.validate().is_ok());
        c.morozov_r = 1.0;
        assert!(c.validate().is_err());
        c.morozov_r = 1.001;
        c.alpha = 0.0;
        assert!(c.validate().is_err());
    }

    fn toy() -> (MatrixOperator, Field) {
        // 2 subintervals: three nodal unknowns
        let g = SpaceGrid::new(2).unwrap();
        let rows = vec![
            vec![2.0, 0.3, 0.0],
            vec![0.1, 1.0, 0.4],
            vec![0.0, -0.2, 1.5],
        ];
        let data = Field::new(g, vec![1.0, -0.5, 0.25]).unwrap();
        (MatrixOperator::new(g, rows).unwrap(), data)
    }

    #[test]
    fn zero_data_is_a_fixed_point() {
        let (op, data) = toy();
        let zero = Field::zeros(data.grid());
        for method in [
            Method::Landweber,
            Method::SteepestDescent,
            Method::ConjugateGradient,
        ] {
            let cfg = ReconstructionConfig {
                method,
                ..Default::default()
            };
            let r = reconstruct(&op, &zero, &cfg).unwrap();
            assert_eq!(r.iterations, 0, "{method}");
            assert_eq!(r.f_final.max_abs(), 0.0);
            assert_eq!(r.cost_history.len(), 1);
        }
    }

    #[test]
    fn cg_solves_toy_problem_in_few_steps() {
        let (op, data) = toy();
        // β = 0 and invertible A: the stationary point solves A f = d
        let a = nalgebra::Matrix3::new(2.0, 0.3, 0.0, 0.1, 1.0, 0.4, 0.0, -0.2, 1.5);
        let want = a
            .lu()
            .solve(&nalgebra::Vector3::new(1.0, -0.5, 0.25))
            .unwrap();
        let cfg = ReconstructionConfig {
            method: Method::ConjugateGradient,
            max_iter: 4,
            ..Default::default()
        };
        let r = conjugate_gradient(&op, &data, &cfg).unwrap();
        assert!(r.iterations <= 4);
        for i in 0..3 {
            assert!(
                (r.f_final.values()[i] - want[i]).abs() < 1e-8,
                "{:?}",
                r.f_final
            );
        }
    }

    #[test]
    fn histories_have_consistent_lengths() {
        let (op, data) = toy();
        let truth = Field::new(data.grid(), vec![0.5, -0.6, 0.25]).unwrap();
        for method in [
            Method::Landweber,
            Method::SteepestDescent,
            Method::ConjugateGradient,
        ] {
            let cfg = ReconstructionConfig {
                method,
                alpha: 0.2,
                max_iter: 7,
                truth: Some(truth.clone()),
                ..Default::default()
            };
            let r = reconstruct(&op, &data, &cfg).unwrap();
            assert_eq!(r.cost_history.len(), r.iterations + 1);
            assert_eq!(r.discrepancy_history.len(), r.iterations + 1);
            assert_eq!(r.error_history.as_ref().unwrap().len(), r.iterations + 1);
            assert_eq!(
                r.metrics.data_fidelity,
                *r.discrepancy_history.last().unwrap()
            );
        }
    }

    #[test]
    fn landweber_reports_divergence() {
        let (op, data) = toy();
        let cfg = ReconstructionConfig {
            alpha: 50.0,
            ..Default::default()
        };
        let r = landweber(&op, &data, &cfg).unwrap();
        assert!(r.diverged());
        assert!(r.iterations < 200);
    }

    #[test]
    fn power_iteration_bounds_norm_from_below() {
        let (op, _) = toy();
        let q1 = operator_norm_estimate(&op, 1).unwrap();
        let q5 = operator_norm_estimate(&op, 5).unwrap();
        let q50 = operator_norm_estimate(&op, 50).unwrap();
        assert!(q1 <= q5 && q5 <= q50 && q1 > 0.0);
        // compare with the generalised eigenproblem Aᵀ M A x = q M x
        let m = crate::fem::mass(op.grid());
        let md = nalgebra::Matrix3::from_fn(|i, j| m.get(i, j));
        let a = nalgebra::Matrix3::new(2.0, 0.3, 0.0, 0.1, 1.0, 0.4, 0.0, -0.2, 1.5);
        let l = md.cholesky().unwrap().l();
        let li = l.try_inverse().unwrap();
        let sym = li * a.transpose() * md * a * li.transpose();
        let qmax = nalgebra::SymmetricEigen::new(sym).eigenvalues.max();
        assert!(q50 <= qmax * (1.0 + 1e-12));
        assert!(q50 >= qmax * (1.0 - 1e-8));
    }

    #[test]
    fn threshold_brackets() {
        let (op, _) = toy();
        let t = landweber_threshold(&op, 50).unwrap();
        assert_eq!(t.critical, 2.0 * t.sufficient);
        assert!((t.norm_sq * t.sufficient - 1.0).abs() < 1e-15);
        let zero = MatrixOperator::new(op.grid(), vec![vec![0.0; 3]; 3]).unwrap();
        assert!(landweber_threshold(&zero, 3).is_err());
    }
}
