//! Backward-in-time solver for the adjoint system. Level `n_t` holds the
//! terminal data; levels `n_t − 1, …, 0` are obtained by one banded solve each:
//!
//! ```text
//! ρM u*_i + τ²(λ+2μ)S u*_i − τγT0 C θ*_i
//!     = τ²M p*_i + ρM u*_{i+1} − ρτ M δu*_{i+1} − τγT0 C θ*_{i+1}
//! ρC_s M θ*_i + τκ S θ*_i + τ²k(0) S θ*_i − τγ C u*_i
//!     = τM h*_i + ρC_s M θ*_{i+1} − τ² S Σ_{j=i+1}^{n_t−1} k(t_j − t_i) θ*_j
//! ```
//!
//! with `δu*_i = (u*_{i+1} − u*_i)/τ` and `δu*_{n_t}` the terminal velocity.

use crate::error::{Error, Result};
use crate::fem;
use crate::forward::{assemble_blocks, axpy, interleave, split, BlockCoefficients, MaterialParams};
use crate::grid::{Field, SpaceGrid, TimeGrid, Trajectory};
use crate::kernel::Kernel;
use crate::linalg::{BandedLu, Tridiagonal};
use crate::source::Source;

/// Terminal data and forcings of one adjoint solve.
#[derive(Debug, Clone)]
pub struct AdjointSpec {
    pub terminal_displacement: Field,
    pub terminal_velocity: Field,
    pub terminal_temperature: Field,
    pub forcing_load: Source,
    pub forcing_heat: Source,
}

impl AdjointSpec {
    pub fn zero(grid: SpaceGrid) -> Self {
        Self {
            terminal_displacement: Field::zeros(grid),
            terminal_velocity: Field::zeros(grid),
            terminal_temperature: Field::zeros(grid),
            forcing_load: Source::zero(),
            forcing_heat: Source::zero(),
        }
    }

    fn validate(&self, grid: SpaceGrid) -> Result<()> {
        for (name, f) in [
            ("displacement", &self.terminal_displacement),
            ("velocity", &self.terminal_velocity),
            ("temperature", &self.terminal_temperature),
        ] {
            if f.grid() != grid {
                return Err(Error::GridMismatch(format!("terminal {name}")));
            }
            if !f.is_finite() {
                return Err(Error::NonFinite(format!("terminal {name}")));
            }
            let v = f.values();
            if v[0].abs() > 1e-12 || v[v.len() - 1].abs() > 1e-12 {
                return Err(Error::InvalidInput(format!(
                    "terminal {name} must vanish at the boundary"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdjointSolution {
    pub u_star: Trajectory,
    pub theta_star: Trajectory,
}

/// Pre-factored adjoint solver.
#[derive(Debug, Clone)]
pub struct AdjointSolver {
    params: MaterialParams,
    kernel: Kernel,
    space: SpaceGrid,
    time: TimeGrid,
    lu: BandedLu,
    mass: Tridiagonal,
    stiffness: Tridiagonal,
    coupling: Tridiagonal,
}

impl AdjointSolver {
    pub fn new(
        params: MaterialParams,
        kernel: Kernel,
        space: SpaceGrid,
        time: TimeGrid,
    ) -> Result<Self> {
        params.validate()?;
        let tau = time.tau();
        let tau2 = tau * tau;
        let gt = tau * params.coupling;
        let matrix = assemble_blocks(
            space,
            BlockCoefficients {
                uu_mass: params.density,
                uu_stiff: tau2 * params.longitudinal_modulus(),
                ut: -gt * params.reference_temperature,
                tt_mass: params.density * params.specific_heat,
                tt_stiff: tau * params.conductivity + tau2 * kernel.at(0.0),
                tu: -gt,
                tu_transposed: false,
            },
        )?;
        Ok(Self {
            params,
            kernel,
            space,
            time,
            lu: matrix.factor()?,
            mass: fem::mass(space),
            stiffness: fem::stiffness(space),
            coupling: fem::coupling(space),
        })
    }

    pub fn space(&self) -> SpaceGrid {
        self.space
    }

    pub fn time(&self) -> TimeGrid {
        self.time
    }

    pub fn solve(&self, spec: &AdjointSpec) -> Result<AdjointSolution> {
        spec.validate(self.space)?;
        let p = &self.params;
        let nodes = self.space.node_count();
        let tau = self.time.tau();
        let n_t = self.time.steps();
        let gt0 = tau * p.coupling * p.reference_temperature;

        let mut u_levels = vec![Vec::new(); n_t + 1];
        let mut theta_levels = vec![Vec::new(); n_t + 1];
        let interior = |f: &Field| {
            let mut v = f.values().to_vec();
            v[0] = 0.0;
            v[nodes - 1] = 0.0;
            v
        };
        u_levels[n_t] = interior(&spec.terminal_displacement);
        theta_levels[n_t] = interior(&spec.terminal_temperature);
        let mut du_next = interior(&spec.terminal_velocity);

        let mut rhs_u = vec![0.0; nodes];
        let mut rhs_t = vec![0.0; nodes];
        let mut memory = vec![0.0; nodes];
        for i in (0..n_t).rev() {
            let t = self.time.time(i);
            let u_next = &u_levels[i + 1];
            let theta_next = &theta_levels[i + 1];

            let mut carry = u_next.clone();
            axpy(&mut carry, -tau, &du_next);
            rhs_u.iter_mut().for_each(|v| *v = 0.0);
            axpy(&mut rhs_u, p.density, &self.mass.matvec(&carry));
            axpy(&mut rhs_u, -gt0, &self.coupling.matvec(theta_next));
            if !spec.forcing_load.is_zero() {
                let pi = spec.forcing_load.sample(self.space, t)?;
                axpy(&mut rhs_u, tau * tau, &self.mass.matvec(&pi));
            }

            rhs_t.iter_mut().for_each(|v| *v = 0.0);
            axpy(
                &mut rhs_t,
                p.density * p.specific_heat,
                &self.mass.matvec(theta_next),
            );
            if !spec.forcing_heat.is_zero() {
                let hi = spec.forcing_heat.sample(self.space, t)?;
                axpy(&mut rhs_t, tau, &self.mass.matvec(&hi));
            }
            memory.iter_mut().for_each(|v| *v = 0.0);
            for (j, theta_j) in theta_levels.iter().enumerate().take(n_t).skip(i + 1) {
                axpy(&mut memory, self.kernel.at((j - i) as f64 * tau), theta_j);
            }
            axpy(&mut rhs_t, -tau * tau, &self.stiffness.matvec(&memory));

            let mut x = interleave(&rhs_u, &rhs_t);
            self.lu.solve_in_place(&mut x)?;
            let (u_i, theta_i) = split(&x, nodes);
            if u_i.iter().chain(&theta_i).any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("adjoint solution at level {i}")));
            }
            du_next = u_next
                .iter()
                .zip(&u_i)
                .map(|(a, b)| (a - b) / tau)
                .collect();
            u_levels[i] = u_i;
            theta_levels[i] = theta_i;
        }
        let wrap = |levels: Vec<Vec<f64>>| {
            Trajectory::new(
                self.time,
                levels
                    .into_iter()
                    .map(|v| Field::from_raw(self.space, v))
                    .collect(),
            )
        };
        Ok(AdjointSolution {
            u_star: wrap(u_levels)?,
            theta_star: wrap(theta_levels)?,
        })
    }
}

pub fn solve_adjoint(
    params: MaterialParams,
    kernel: Kernel,
    space: SpaceGrid,
    time: TimeGrid,
    spec: &AdjointSpec,
) -> Result<AdjointSolution> {
    AdjointSolver::new(params, kernel, space, time)?.solve(spec)
}
