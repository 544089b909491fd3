//! Tikhonov cost, adjoint L2 gradient, Sobolev gradient and exact line search.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{inner_l2, norm_l2, Field, SpaceGrid};
use crate::linalg::Tridiagonal;
use crate::operator::SourceOperator;

/// Data and regularisation weight of `½‖N f − d‖² + (β/2)‖f‖²`.
#[derive(Debug, Clone)]
pub struct CostConfig {
    pub beta: f64,
    pub remainder: Field,
}

impl CostConfig {
    pub fn new(beta: f64, remainder: Field) -> Result<Self> {
        if !(beta >= 0.0 && beta.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "beta must be >= 0, got {beta}"
            )));
        }
        Ok(Self { beta, remainder })
    }
}

pub fn residual(op: &dyn SourceOperator, f: &Field, cfg: &CostConfig) -> Result<Field> {
    op.apply(f)?.sub(&cfg.remainder)
}

pub(crate) fn cost_from_residual(res: &Field, f: &Field, beta: f64) -> f64 {
    let r = norm_l2(res);
    let p = norm_l2(f);
    0.5 * r * r + 0.5 * beta * p * p
}

pub fn cost(op: &dyn SourceOperator, f: &Field, cfg: &CostConfig) -> Result<f64> {
    let res = residual(op, f, cfg)?;
    Ok(cost_from_residual(&res, f, cfg.beta))
}

pub(crate) fn grad_from_residual(
    op: &dyn SourceOperator,
    f: &Field,
    res: &Field,
    beta: f64,
) -> Result<Field> {
    let g = op.adjoint_apply(res)?;
    if beta == 0.0 {
        Ok(g)
    } else {
        g.add_scaled(beta, f)
    }
}

pub fn grad_l2(op: &dyn SourceOperator, f: &Field, cfg: &CostConfig) -> Result<Field> {
    let res = residual(op, f, cfg)?;
    grad_from_residual(op, f, &res, cfg.beta)
}

/// Positive weight on `[0, 1]`, extended by its boundary value outside.
#[derive(Clone)]
pub enum Weight {
    Constant(f64),
    Function(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl Weight {
    pub fn function(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self::Function(Arc::new(f))
    }

    pub fn at(&self, x: f64) -> f64 {
        match self {
            Self::Constant(c) => *c,
            Self::Function(f) => f(x.clamp(0.0, 1.0)),
        }
    }
}

impl fmt::Debug for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Constant(c) => write!(f, "Constant({c})"),
            Self::Function(_) => f.write_str("Function(..)"),
        }
    }
}

/// `r0`, `r1` in `−(r1 K')' + r0 K = ∇J`, `K' = 0` on the boundary.
#[derive(Debug, Clone)]
pub struct SobolevWeights {
    pub r0: Weight,
    pub r1: Weight,
}

impl Default for SobolevWeights {
    fn default() -> Self {
        Self {
            r0: Weight::Constant(1.0),
            r1: Weight::Constant(0.01),
        }
    }
}

/// Second-order finite differences with ghost-point Neumann closure.
pub fn assemble_elliptic(weights: &SobolevWeights, grid: SpaceGrid) -> Result<Tridiagonal> {
    let n = grid.intervals();
    let h = grid.h();
    let h2 = h * h;
    // half-grid r1 samples: half[i] = r1(x_{i − 1/2}), i = 0..=n+1
    let half: Vec<f64> = (0..=n + 1)
        .map(|i| weights.r1.at((i as f64 - 0.5) * h))
        .collect();
    let r0: Vec<f64> = grid.nodes().into_iter().map(|x| weights.r0.at(x)).collect();
    for (name, v) in [("r0", &r0), ("r1", &half)] {
        if let Some(bad) = v.iter().find(|w| !(**w > 0.0 && w.is_finite())) {
            return Err(Error::InvalidInput(format!(
                "Sobolev weight {name} must be positive, found {bad}"
            )));
        }
    }
    let mut a = Tridiagonal::zeros(n + 1);
    for i in 0..=n {
        let (west, east) = (half[i], half[i + 1]);
        a.diag[i] = (west + east) / h2 + r0[i];
        if i == 0 {
            a.upper[0] = -(west + east) / h2;
        } else if i == n {
            a.lower[n - 1] = -(west + east) / h2;
        } else {
            a.lower[i - 1] = -west / h2;
            a.upper[i] = -east / h2;
        }
    }
    Ok(a)
}

pub fn grad_sobolev(gl2: &Field, weights: &SobolevWeights) -> Result<Field> {
    if !gl2.is_finite() {
        return Err(Error::NonFinite("L2 gradient".into()));
    }
    let a = assemble_elliptic(weights, gl2.grid())?;
    Field::new(gl2.grid(), a.solve(gl2.values())?)
}

/// Minimiser of `τ ↦ ½‖residual − τ image_dir‖² + (β/2)‖f − τ dir‖²`,
/// i.e. the exact step for the update `f − τ dir`.
pub fn optimal_step(
    residual: &Field,
    image_dir: &Field,
    f: &Field,
    dir: &Field,
    beta: f64,
) -> Result<f64> {
    let mut num = inner_l2(residual, image_dir)?;
    let mut den = inner_l2(image_dir, image_dir)?;
    if beta != 0.0 {
        num += beta * inner_l2(f, dir)?;
        den += beta * inner_l2(dir, dir)?;
    }
    if !(den > 0.0) || !den.is_finite() {
        return Err(Error::DegenerateDirection);
    }
    Ok(num / den)
}
