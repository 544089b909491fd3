//! Backward Euler solver for the coupled 1D displacement/temperature system
//!
//! ```text
//! ρ u_tt − (λ+2μ) u_xx + γ θ_x = p
//! ρC_s θ_t − κ θ_xx − (k∗θ_xx) + T0 γ u_xt = h
//! ```
//!
//! on (0, 1) with homogeneous Dirichlet conditions, discretised with P1
//! elements in space. Each step solves one banded system in the interleaved
//! unknowns `u_1, θ_1, u_2, θ_2, …` of the interior nodes. The step matrix does
//! not depend on the level, so it is factored once per solver.

use crate::error::{Error, Result};
use crate::fem;
use crate::grid::{Field, SpaceGrid, TimeGrid, Trajectory};
use crate::kernel::Kernel;
use crate::linalg::{BandedLu, BandedMatrix, Tridiagonal};
use crate::source::{Source, TimeFn};

/// Material constants. `mu`, `coupling` and `reference_temperature` may be
/// zero, everything else must be strictly positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaterialParams {
    /// ρ
    pub density: f64,
    /// C_s
    pub specific_heat: f64,
    /// κ
    pub conductivity: f64,
    pub lambda: f64,
    pub mu: f64,
    /// γ
    pub coupling: f64,
    /// T0
    pub reference_temperature: f64,
}

impl MaterialParams {
    /// ρ = λ = γ = C_s = κ = 1, μ = 0, T0 = ε.
    pub fn nondimensional(epsilon: f64) -> Self {
        Self {
            density: 1.0,
            specific_heat: 1.0,
            conductivity: 1.0,
            lambda: 1.0,
            mu: 0.0,
            coupling: 1.0,
            reference_temperature: epsilon,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("density", self.density),
            ("specific_heat", self.specific_heat),
            ("conductivity", self.conductivity),
            ("lambda", self.lambda),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidInput(format!("{name} must be > 0, got {v}")));
            }
        }
        let nonneg = [
            ("mu", self.mu),
            ("coupling", self.coupling),
            ("reference_temperature", self.reference_temperature),
        ];
        for (name, v) in nonneg {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidInput(format!("{name} must be >= 0, got {v}")));
            }
        }
        Ok(())
    }

    /// λ + 2μ, the 1D longitudinal modulus.
    pub fn longitudinal_modulus(&self) -> f64 {
        self.lambda + 2.0 * self.mu
    }
}

/// `u(·,0)`, `∂_t u(·,0)` and `θ(·,0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialData {
    pub displacement: Field,
    pub velocity: Field,
    pub temperature: Field,
}

impl InitialData {
    pub fn zero(grid: SpaceGrid) -> Self {
        Self {
            displacement: Field::zeros(grid),
            velocity: Field::zeros(grid),
            temperature: Field::zeros(grid),
        }
    }

    fn validate(&self, grid: SpaceGrid) -> Result<()> {
        for (name, f) in [
            ("displacement", &self.displacement),
            ("velocity", &self.velocity),
            ("temperature", &self.temperature),
        ] {
            if f.grid() != grid {
                return Err(Error::GridMismatch(format!("initial {name}")));
            }
            if !f.is_finite() {
                return Err(Error::NonFinite(format!("initial {name}")));
            }
        }
        for (name, f) in [
            ("displacement", &self.displacement),
            ("temperature", &self.temperature),
        ] {
            let v = f.values();
            if v[0].abs() > 1e-12 || v[v.len() - 1].abs() > 1e-12 {
                return Err(Error::InvalidInput(format!(
                    "initial {name} must vanish at the boundary"
                )));
            }
        }
        Ok(())
    }
}

/// Which equation a separable source `g(t) f(x)` enters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceSlot {
    Load,
    Heat,
}

/// Everything that defines one direct solve.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub params: MaterialParams,
    pub kernel: Kernel,
    pub space: SpaceGrid,
    pub time: TimeGrid,
    pub load: Source,
    pub heat: Source,
    pub initial: InitialData,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForwardSolution {
    pub u: Trajectory,
    pub theta: Trajectory,
    /// Discrete velocities `δu_i = (u_i − u_{i−1})/τ`, with `δu_0 = ū_1`.
    pub du: Trajectory,
}

/// Coefficients of the 2×2 block step matrix. Each diagonal block is
/// `mass·M + stiff·S`; the off-diagonal blocks are multiples of `C` or `Cᵀ`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct BlockCoefficients {
    pub uu_mass: f64,
    pub uu_stiff: f64,
    /// u-row, θ-column: `ut · C`.
    pub ut: f64,
    pub tt_mass: f64,
    pub tt_stiff: f64,
    /// θ-row, u-column: `tu · Cᵀ` if `tu_transposed`, else `tu · C`.
    pub tu: f64,
    pub tu_transposed: bool,
}

pub(crate) fn assemble_blocks(grid: SpaceGrid, c: BlockCoefficients) -> Result<BandedMatrix> {
    let n = grid.intervals();
    if n < 2 {
        return Err(Error::InvalidInput(
            "need at least two subintervals for an interior node".into(),
        ));
    }
    let m = fem::mass(grid);
    let s = fem::stiffness(grid);
    let cp = fem::coupling(grid);
    let interior = n - 1;
    let mut a = BandedMatrix::zeros(2 * interior, 3, 3);
    // interior node a (1..n) -> rows 2(a-1) (u) and 2(a-1)+1 (θ)
    for node in 1..n {
        let ru = 2 * (node - 1);
        let rt = ru + 1;
        for other in node - 1..=node + 1 {
            if other == 0 || other == n {
                continue;
            }
            let cu = 2 * (other - 1);
            let ct = cu + 1;
            a.add(
                ru,
                cu,
                c.uu_mass * m.get(node, other) + c.uu_stiff * s.get(node, other),
            );
            a.add(
                rt,
                ct,
                c.tt_mass * m.get(node, other) + c.tt_stiff * s.get(node, other),
            );
            a.add(ru, ct, c.ut * cp.get(node, other));
            let tu = if c.tu_transposed {
                cp.get(other, node)
            } else {
                cp.get(node, other)
            };
            a.add(rt, cu, c.tu * tu);
        }
    }
    Ok(a)
}

/// Step matrix of the forward scheme:
///
/// ```text
/// [ ρM + τ²μS + τ²(λ+μ)S     τ²γ C                ]
/// [ −T0 γ Cᵀ                 ρC_s M + τκS + τ²k(0)S ]
/// ```
pub fn assemble_step_system(
    params: &MaterialParams,
    grid: SpaceGrid,
    tau: f64,
    kernel: &Kernel,
) -> Result<BandedMatrix> {
    params.validate()?;
    let tau2 = tau * tau;
    assemble_blocks(
        grid,
        BlockCoefficients {
            uu_mass: params.density,
            uu_stiff: tau2 * params.mu + tau2 * (params.lambda + params.mu),
            ut: tau2 * params.coupling,
            tt_mass: params.density * params.specific_heat,
            tt_stiff: tau * params.conductivity + tau2 * kernel.at(0.0),
            tu: -params.reference_temperature * params.coupling,
            tu_transposed: true,
        },
    )
}

pub(crate) fn interleave(u: &[f64], theta: &[f64]) -> Vec<f64> {
    let n = u.len() - 1;
    let mut b = Vec::with_capacity(2 * (n - 1));
    for node in 1..n {
        b.push(u[node]);
        b.push(theta[node]);
    }
    b
}

pub(crate) fn split(x: &[f64], nodes: usize) -> (Vec<f64>, Vec<f64>) {
    let mut u = vec![0.0; nodes];
    let mut theta = vec![0.0; nodes];
    for node in 1..nodes - 1 {
        u[node] = x[2 * (node - 1)];
        theta[node] = x[2 * (node - 1) + 1];
    }
    (u, theta)
}

pub(crate) fn axpy(y: &mut [f64], c: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += c * xi;
    }
}

/// Pre-factored forward solver for one parameter set and grid pair.
#[derive(Debug, Clone)]
pub struct ForwardSolver {
    params: MaterialParams,
    kernel: Kernel,
    space: SpaceGrid,
    time: TimeGrid,
    lu: BandedLu,
    mass: Tridiagonal,
    stiffness: Tridiagonal,
    coupling_t: Tridiagonal,
}

impl ForwardSolver {
    pub fn new(
        params: MaterialParams,
        kernel: Kernel,
        space: SpaceGrid,
        time: TimeGrid,
    ) -> Result<Self> {
        let matrix = assemble_step_system(&params, space, time.tau(), &kernel)?;
        Ok(Self {
            params,
            kernel,
            space,
            time,
            lu: matrix.factor()?,
            mass: fem::mass(space),
            stiffness: fem::stiffness(space),
            coupling_t: fem::coupling(space).transpose(),
        })
    }

    pub fn space(&self) -> SpaceGrid {
        self.space
    }

    pub fn time(&self) -> TimeGrid {
        self.time
    }

    pub fn params(&self) -> &MaterialParams {
        &self.params
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn solve(
        &self,
        load: &Source,
        heat: &Source,
        initial: &InitialData,
    ) -> Result<ForwardSolution> {
        initial.validate(self.space)?;
        let p = &self.params;
        let nodes = self.space.node_count();
        let tau = self.time.tau();
        let n_t = self.time.steps();

        let mut u_levels = Vec::with_capacity(n_t + 1);
        let mut theta_levels = Vec::with_capacity(n_t + 1);
        let mut du_levels = Vec::with_capacity(n_t + 1);
        u_levels.push(initial.displacement.values().to_vec());
        theta_levels.push(initial.temperature.values().to_vec());
        let mut v0 = initial.velocity.values().to_vec();
        v0[0] = 0.0;
        v0[nodes - 1] = 0.0;
        du_levels.push(v0);
        u_levels[0][0] = 0.0;
        u_levels[0][nodes - 1] = 0.0;
        theta_levels[0][0] = 0.0;
        theta_levels[0][nodes - 1] = 0.0;

        let mut rhs_u = vec![0.0; nodes];
        let mut rhs_t = vec![0.0; nodes];
        let mut memory = vec![0.0; nodes];
        for i in 1..=n_t {
            let t = self.time.time(i);
            let u_prev = &u_levels[i - 1];
            let du_prev = &du_levels[i - 1];
            let theta_prev = &theta_levels[i - 1];

            // u-row: τ² M p_i + ρ M (u_{i−1} + τ δu_{i−1})
            let mut carry = u_prev.clone();
            axpy(&mut carry, tau, du_prev);
            rhs_u.iter_mut().for_each(|v| *v = 0.0);
            axpy(&mut rhs_u, p.density, &self.mass.matvec(&carry));
            if !load.is_zero() {
                let pi = load.sample(self.space, t)?;
                axpy(&mut rhs_u, tau * tau, &self.mass.matvec(&pi));
            }

            // θ-row: τ M h_i + ρC_s M θ_{i−1} − T0γ Cᵀ u_{i−1} − τ² S Σ_{j<i} k(t_i − t_j) θ_j
            rhs_t.iter_mut().for_each(|v| *v = 0.0);
            axpy(
                &mut rhs_t,
                p.density * p.specific_heat,
                &self.mass.matvec(theta_prev),
            );
            axpy(
                &mut rhs_t,
                -p.reference_temperature * p.coupling,
                &self.coupling_t.matvec(u_prev),
            );
            if !heat.is_zero() {
                let hi = heat.sample(self.space, t)?;
                axpy(&mut rhs_t, tau, &self.mass.matvec(&hi));
            }
            memory.iter_mut().for_each(|v| *v = 0.0);
            for (j, theta_j) in theta_levels.iter().enumerate().take(i).skip(1) {
                axpy(&mut memory, self.kernel.at((i - j) as f64 * tau), theta_j);
            }
            axpy(&mut rhs_t, -tau * tau, &self.stiffness.matvec(&memory));

            let mut x = interleave(&rhs_u, &rhs_t);
            self.lu.solve_in_place(&mut x)?;
            let (u_i, theta_i) = split(&x, nodes);
            if u_i.iter().chain(&theta_i).any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("forward solution at level {i}")));
            }
            let du_i: Vec<f64> = u_i.iter().zip(u_prev).map(|(a, b)| (a - b) / tau).collect();
            u_levels.push(u_i);
            theta_levels.push(theta_i);
            du_levels.push(du_i);
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
        Ok(ForwardSolution {
            u: wrap(u_levels)?,
            theta: wrap(theta_levels)?,
            du: wrap(du_levels)?,
        })
    }

    /// Source-only problem with `g(t)·direction` in the given slot and zero
    /// initial data.
    pub fn solve_sensitivity(
        &self,
        direction: &Field,
        g: &TimeFn,
        slot: SourceSlot,
    ) -> Result<ForwardSolution> {
        let src = Source::separable(g.clone(), direction.clone());
        let zero = InitialData::zero(self.space);
        match slot {
            SourceSlot::Load => self.solve(&src, &Source::zero(), &zero),
            SourceSlot::Heat => self.solve(&Source::zero(), &src, &zero),
        }
    }
}

pub fn solve_forward(spec: &ProblemSpec) -> Result<ForwardSolution> {
    ForwardSolver::new(spec.params, spec.kernel, spec.space, spec.time)?.solve(
        &spec.load,
        &spec.heat,
        &spec.initial,
    )
}

pub fn solve_sensitivity(
    direction: &Field,
    g: &TimeFn,
    slot: SourceSlot,
    spec: &ProblemSpec,
) -> Result<ForwardSolution> {
    ForwardSolver::new(spec.params, spec.kernel, spec.space, spec.time)?
        .solve_sensitivity(direction, g, slot)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> MaterialParams {
        MaterialParams::nondimensional(0.0189)
    }

    fn kernel() -> Kernel {
        Kernel::new(0.01, 2.0).unwrap()
    }

    #[test]
    fn decoupled_when_no_coupling() {
        let mut p = params();
        p.coupling = 0.0;
        p.reference_temperature = 0.0;
        let g = SpaceGrid::new(5).unwrap();
        let a = assemble_step_system(&p, g, 0.1, &kernel()).unwrap();
        for i in 0..a.order() {
            for j in 0..a.order() {
                if i % 2 != j % 2 {
                    assert_eq!(a.get(i, j), 0.0);
                }
            }
        }
    }

    #[test]
    fn two_element_hand_assembly() {
        // n = 3: interior nodes 1, 2 -> unknowns (u1, θ1, u2, θ2)
        let p = MaterialParams {
            density: 2.0,
            specific_heat: 3.0,
            conductivity: 0.5,
            lambda: 1.5,
            mu: 0.25,
            coupling: 0.7,
            reference_temperature: 0.3,
        };
        let k = kernel();
        let tau = 0.2;
        let g = SpaceGrid::new(3).unwrap();
        let h = 1.0 / 3.0;
        let a = assemble_step_system(&p, g, tau, &k).unwrap().to_dense();
        let t2 = tau * tau;
        let uu_d = p.density * 2.0 * h / 3.0 + t2 * (p.lambda + 2.0 * p.mu) * 2.0 / h;
        let uu_o = p.density * h / 6.0 - t2 * (p.lambda + 2.0 * p.mu) / h;
        let tt_d = p.density * p.specific_heat * 2.0 * h / 3.0
            + (tau * p.conductivity + t2 * 0.01) * 2.0 / h;
        let tt_o = p.density * p.specific_heat * h / 6.0 - (tau * p.conductivity + t2 * 0.01) / h;
        // C_{1,2} = +1/2, C_{2,1} = −1/2
        let want = [
            [uu_d, 0.0, uu_o, t2 * p.coupling * 0.5],
            [
                0.0,
                tt_d,
                -p.reference_temperature * p.coupling * -0.5,
                tt_o,
            ],
            [uu_o, t2 * p.coupling * -0.5, uu_d, 0.0],
            [-p.reference_temperature * p.coupling * 0.5, tt_o, 0.0, tt_d],
        ];
        for i in 0..4 {
            for j in 0..4 {
                assert!(
                    (a[i][j] - want[i][j]).abs() < 1e-14,
                    "({i},{j}) {} vs {}",
                    a[i][j],
                    want[i][j]
                );
            }
        }
    }

    #[test]
    fn doubling_tau_keeps_mass_blocks() {
        let g = SpaceGrid::new(4).unwrap();
        let mut p = params();
        p.coupling = 0.0;
        p.reference_temperature = 0.0;
        let a1 = assemble_step_system(&p, g, 0.1, &kernel()).unwrap();
        let a2 = assemble_step_system(&p, g, 0.2, &kernel()).unwrap();
        let m = fem::mass(g);
        let s = fem::stiffness(g);
        // u-block: ρM + τ²λS; the stiffness part scales by 4
        let d1 = a1.get(0, 0) - p.density * m.get(1, 1);
        let d2 = a2.get(0, 0) - p.density * m.get(1, 1);
        assert!((d2 - 4.0 * d1).abs() < 1e-14);
        assert!((d1 - 0.01 * s.get(1, 1)).abs() < 1e-14);
    }

    #[test]
    fn zero_data_gives_zero_solution() {
        let g = SpaceGrid::new(8).unwrap();
        let t = TimeGrid::new(6, 1.0).unwrap();
        let solver = ForwardSolver::new(params(), kernel(), g, t).unwrap();
        let sol = solver
            .solve(&Source::zero(), &Source::zero(), &InitialData::zero(g))
            .unwrap();
        for traj in [&sol.u, &sol.theta, &sol.du] {
            assert!(traj.levels().iter().all(|f| f.max_abs() == 0.0));
        }
    }

    #[test]
    fn rejects_incompatible_initial_data() {
        let g = SpaceGrid::new(4).unwrap();
        let t = TimeGrid::new(2, 1.0).unwrap();
        let solver = ForwardSolver::new(params(), kernel(), g, t).unwrap();
        let mut init = InitialData::zero(g);
        init.displacement = Field::constant(g, 1.0);
        assert!(solver
            .solve(&Source::zero(), &Source::zero(), &init)
            .is_err());
    }

    #[test]
    fn rejects_bad_params() {
        let mut p = params();
        p.density = 0.0;
        let g = SpaceGrid::new(4).unwrap();
        assert!(assemble_step_system(&p, g, 0.1, &kernel()).is_err());
    }

    #[test]
    fn step_residual_is_small() {
        let g = SpaceGrid::new(20).unwrap();
        let a = assemble_step_system(&params(), g, 0.02, &kernel()).unwrap();
        let lu = a.factor().unwrap();
        let b: Vec<f64> = (0..a.order()).map(|i| ((i * 7) as f64).sin()).collect();
        let x = lu.solve(&b).unwrap();
        let r = a.matvec(&x);
        let bn = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        let rn = r
            .iter()
            .zip(&b)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        assert!(rn <= 1e-10 * bn);
    }
}
