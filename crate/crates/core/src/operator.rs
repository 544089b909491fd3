//! Linear source-to-observation maps and their (approximate) adjoints.

use crate::adjoint::{AdjointSolver, AdjointSpec};
use crate::error::{Error, Result};
use crate::fem;
use crate::forward::{ForwardSolver, MaterialParams};
use crate::grid::{simpson_weighted, Field, SpaceGrid, TimeGrid};
use crate::kernel::Kernel;
use crate::measurement::{apply_measurement, MeasurementKind};
use crate::source::{Source, TimeFn};

/// A linear map from a source profile `f` to an observation, together with
/// the gradient map `r ↦ ∇_f ½‖apply(f) − d‖²` evaluated at residual `r`.
pub trait SourceOperator {
    fn grid(&self) -> SpaceGrid;

    fn apply(&self, f: &Field) -> Result<Field>;

    /// Approximates the L2 adjoint of [`apply`](Self::apply) applied to `residual`.
    fn adjoint_apply(&self, residual: &Field) -> Result<Field>;
}

/// Sensitivity solve followed by a measurement, with the adjoint PDE for
/// the gradient map.
#[derive(Debug, Clone)]
pub struct ThermoelasticOperator {
    kind: MeasurementKind,
    g: TimeFn,
    forward: ForwardSolver,
    adjoint: AdjointSolver,
}

impl ThermoelasticOperator {
    pub fn new(
        kind: MeasurementKind,
        g: TimeFn,
        params: MaterialParams,
        kernel: Kernel,
        space: SpaceGrid,
        time: TimeGrid,
    ) -> Result<Self> {
        Ok(Self {
            kind,
            g,
            forward: ForwardSolver::new(params, kernel, space, time)?,
            adjoint: AdjointSolver::new(params, kernel, space, time)?,
        })
    }

    pub fn kind(&self) -> MeasurementKind {
        self.kind
    }

    pub fn forward_solver(&self) -> &ForwardSolver {
        &self.forward
    }

    pub fn adjoint_solver(&self) -> &AdjointSolver {
        &self.adjoint
    }

    pub fn time_profile(&self) -> &TimeFn {
        &self.g
    }

    /// Adjoint problem driven by `residual` for this measurement kind.
    pub fn adjoint_spec(&self, residual: &Field) -> AdjointSpec {
        let grid = self.grid();
        let mut spec = AdjointSpec::zero(grid);
        match self.kind {
            MeasurementKind::FinalTimeU => {
                // Dirichlet: the terminal velocity lives in the interior
                let mut v = residual.values().to_vec();
                let last = v.len() - 1;
                v[0] = 0.0;
                v[last] = 0.0;
                spec.terminal_velocity = Field::from_raw(grid, v);
            }
            MeasurementKind::TimeAvgU => spec.forcing_load = Source::steady(residual.clone()),
            MeasurementKind::TimeAvgTheta => spec.forcing_heat = Source::steady(residual.clone()),
        }
        spec
    }
}

impl SourceOperator for ThermoelasticOperator {
    fn grid(&self) -> SpaceGrid {
        self.forward.space()
    }

    fn apply(&self, f: &Field) -> Result<Field> {
        let sol = self
            .forward
            .solve_sensitivity(f, &self.g, self.kind.slot())?;
        apply_measurement(&sol, self.kind)
    }

    fn adjoint_apply(&self, residual: &Field) -> Result<Field> {
        let sol = self.adjoint.solve(&self.adjoint_spec(residual))?;
        let g = &self.g;
        match self.kind {
            MeasurementKind::FinalTimeU => {
                let rho = self.forward.params().density;
                Ok(simpson_weighted(&sol.u_star, |t| g.eval(t))?.scale(-1.0 / rho))
            }
            MeasurementKind::TimeAvgU => simpson_weighted(&sol.u_star, |t| g.eval(t)),
            MeasurementKind::TimeAvgTheta => simpson_weighted(&sol.theta_star, |t| g.eval(t)),
        }
    }
}

/// Dense matrix acting on nodal vectors. The adjoint is taken in the mass
/// matrix inner product, `M⁻¹ Aᵀ M`, so gradients match the continuous setting.
#[derive(Debug, Clone)]
pub struct MatrixOperator {
    grid: SpaceGrid,
    rows: Vec<Vec<f64>>,
}

impl MatrixOperator {
    pub fn new(grid: SpaceGrid, rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = grid.node_count();
        if rows.len() != n || rows.iter().any(|r| r.len() != n) {
            return Err(Error::GridMismatch(format!(
                "matrix operator must be {n}x{n}"
            )));
        }
        Ok(Self { grid, rows })
    }
}

impl SourceOperator for MatrixOperator {
    fn grid(&self) -> SpaceGrid {
        self.grid
    }

    fn apply(&self, f: &Field) -> Result<Field> {
        let v = self
            .rows
            .iter()
            .map(|r| r.iter().zip(f.values()).map(|(a, b)| a * b).sum())
            .collect();
        Ok(Field::from_raw(self.grid, v))
    }

    fn adjoint_apply(&self, residual: &Field) -> Result<Field> {
        let mass = fem::mass(self.grid);
        let mr = mass.matvec(residual.values());
        let n = self.grid.node_count();
        let at_mr: Vec<f64> = (0..n)
            .map(|j| (0..n).map(|i| self.rows[i][j] * mr[i]).sum())
            .collect();
        Ok(Field::from_raw(self.grid, mass.solve(&at_mr)?))
    }
}
