//! Uniform meshes on (0, 1), uniform time partitions, nodal fields and the
//! quadratures used on them.

use crate::error::{Error, Result};

/// Uniform mesh of `(0, 1)` with `n` subintervals and nodes `x_i = i h`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpaceGrid {
    n: usize,
}

impl SpaceGrid {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput(
                "space grid needs at least one subinterval".into(),
            ));
        }
        Ok(Self { n })
    }

    /// Number of subintervals.
    pub fn intervals(&self) -> usize {
        self.n
    }

    pub fn node_count(&self) -> usize {
        self.n + 1
    }

    pub fn h(&self) -> f64 {
        1.0 / self.n as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        // exact at both ends
        if i == self.n {
            1.0
        } else {
            i as f64 / self.n as f64
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.n).map(|i| self.node(i)).collect()
    }
}

/// Uniform partition of `[0, T]` into an even number of steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    n: usize,
    final_time: f64,
}

impl TimeGrid {
    pub fn new(n: usize, final_time: f64) -> Result<Self> {
        if n == 0 || !n.is_multiple_of(2) {
            return Err(Error::InvalidInput(format!(
                "number of time steps must be positive and even (composite Simpson), got {n}"
            )));
        }
        if !(final_time > 0.0 && final_time.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "final time must be positive and finite, got {final_time}"
            )));
        }
        Ok(Self { n, final_time })
    }

    pub fn steps(&self) -> usize {
        self.n
    }

    pub fn final_time(&self) -> f64 {
        self.final_time
    }

    pub fn tau(&self) -> f64 {
        self.final_time / self.n as f64
    }

    pub fn time(&self, j: usize) -> f64 {
        if j == self.n {
            self.final_time
        } else {
            j as f64 * self.tau()
        }
    }

    /// Composite Simpson 1/3 weights `(τ/3)(1, 4, 2, 4, …, 4, 1)`.
    pub fn simpson_weights(&self) -> Vec<f64> {
        let third = self.tau() / 3.0;
        (0..=self.n)
            .map(|j| {
                if j == 0 || j == self.n {
                    third
                } else if j % 2 == 1 {
                    4.0 * third
                } else {
                    2.0 * third
                }
            })
            .collect()
    }
}

/// Nodal values of a P1 function on a [`SpaceGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: SpaceGrid,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: SpaceGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.node_count() {
            return Err(Error::GridMismatch(format!(
                "field has {} values but grid has {} nodes",
                values.len(),
                grid.node_count()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("field value at node {i}")));
        }
        Ok(Self { grid, values })
    }

    /// Builds a field without the finiteness check. Used by the iterative
    /// drivers, which detect blow-up themselves.
    pub(crate) fn from_raw(grid: SpaceGrid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.node_count());
        Self { grid, values }
    }

    pub fn zeros(grid: SpaceGrid) -> Self {
        Self::from_raw(grid, vec![0.0; grid.node_count()])
    }

    pub fn constant(grid: SpaceGrid, c: f64) -> Self {
        Self::from_raw(grid, vec![c; grid.node_count()])
    }

    /// Samples `f` at the grid nodes.
    pub fn from_fn(grid: SpaceGrid, f: impl Fn(f64) -> f64) -> Self {
        Self::from_raw(grid, grid.nodes().into_iter().map(f).collect())
    }

    pub fn grid(&self) -> SpaceGrid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    fn check_same_grid(&self, other: &Field) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch(format!(
                "{} vs {} subintervals",
                self.grid.intervals(),
                other.grid.intervals()
            )));
        }
        Ok(())
    }

    /// `self + c * other`.
    pub fn add_scaled(&self, c: f64, other: &Field) -> Result<Field> {
        self.check_same_grid(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + c * b)
            .collect();
        Ok(Self::from_raw(self.grid, values))
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.check_same_grid(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a - b)
            .collect();
        Ok(Self::from_raw(self.grid, values))
    }

    pub fn scale(&self, c: f64) -> Field {
        Self::from_raw(self.grid, self.values.iter().map(|v| c * v).collect())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// `n_t + 1` fields on one space grid, indexed by time level.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    time: TimeGrid,
    fields: Vec<Field>,
}

impl Trajectory {
    pub fn new(time: TimeGrid, fields: Vec<Field>) -> Result<Self> {
        if fields.len() != time.steps() + 1 {
            return Err(Error::GridMismatch(format!(
                "trajectory has {} levels, time grid needs {}",
                fields.len(),
                time.steps() + 1
            )));
        }
        let grid = fields[0].grid();
        if fields.iter().any(|f| f.grid() != grid) {
            return Err(Error::GridMismatch(
                "trajectory levels live on different space grids".into(),
            ));
        }
        Ok(Self { time, fields })
    }

    pub fn zeros(space: SpaceGrid, time: TimeGrid) -> Self {
        Self {
            time,
            fields: vec![Field::zeros(space); time.steps() + 1],
        }
    }

    pub fn time_grid(&self) -> TimeGrid {
        self.time
    }

    pub fn space_grid(&self) -> SpaceGrid {
        self.fields[0].grid()
    }

    pub fn level(&self, j: usize) -> &Field {
        &self.fields[j]
    }

    pub fn levels(&self) -> &[Field] {
        &self.fields
    }

    pub fn last(&self) -> &Field {
        &self.fields[self.fields.len() - 1]
    }
}

/// `aᵀ M b` with the consistent P1 mass matrix.
pub fn inner_l2(a: &Field, b: &Field) -> Result<f64> {
    a.check_same_grid(b)?;
    Ok(mass_inner(a.grid.h(), &a.values, &b.values))
}

pub fn norm_l2(a: &Field) -> f64 {
    mass_inner(a.grid.h(), &a.values, &a.values).max(0.0).sqrt()
}

pub(crate) fn mass_inner(h: f64, a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for e in 0..a.len() - 1 {
        let (al, ar, bl, br) = (a[e], a[e + 1], b[e], b[e + 1]);
        s += 2.0 * al * bl + al * br + ar * bl + 2.0 * ar * br;
    }
    s * h / 6.0
}

/// Composite Simpson 1/3 integral over `[0, T]`, node by node.
pub fn simpson_time_integral(traj: &Trajectory) -> Result<Field> {
    simpson_weighted(traj, |_| 1.0)
}

/// `∫_0^T w(t) z(·, t) dt` by composite Simpson, with `w` sampled at the levels.
pub fn simpson_weighted(traj: &Trajectory, w: impl Fn(f64) -> f64) -> Result<Field> {
    let time = traj.time;
    if !time.steps().is_multiple_of(2) {
        return Err(Error::InvalidInput(
            "composite Simpson needs an even number of steps".into(),
        ));
    }
    let weights = time.simpson_weights();
    let grid = traj.space_grid();
    let mut acc = vec![0.0; grid.node_count()];
    for (j, (field, wj)) in traj.fields.iter().zip(&weights).enumerate() {
        let c = wj * w(time.time(j));
        for (a, v) in acc.iter_mut().zip(&field.values) {
            *a += c * v;
        }
    }
    Ok(Field::from_raw(grid, acc))
}

/// Nodal restriction of a fine-grid field to a coarser grid whose nodes are a
/// subset of the fine nodes.
pub fn project_fine_to_working(fine: &Field, working: SpaceGrid) -> Result<Field> {
    let nf = fine.grid.intervals();
    let nw = working.intervals();
    if nf < nw || !nf.is_multiple_of(nw) {
        return Err(Error::GridMismatch(format!(
            "fine grid with {nf} subintervals does not refine working grid with {nw}"
        )));
    }
    let stride = nf / nw;
    let values = (0..=nw).map(|i| fine.values[i * stride]).collect();
    Ok(Field::from_raw(working, values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid(n: usize) -> SpaceGrid {
        SpaceGrid::new(n).unwrap()
    }

    #[test]
    fn grid_endpoints() {
        let g = grid(7);
        let x = g.nodes();
        assert_eq!(x[0], 0.0);
        assert_eq!(x[7], 1.0);
        assert!(x.windows(2).all(|w| w[1] > w[0]));
        assert!((g.h() * 7.0 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn odd_time_steps_rejected() {
        assert!(TimeGrid::new(51, 1.0).is_err());
        assert!(TimeGrid::new(0, 1.0).is_err());
        let t = TimeGrid::new(50, 1.0).unwrap();
        assert_eq!(t.time(0), 0.0);
        assert_eq!(t.time(50), 1.0);
    }

    #[test]
    fn field_rejects_wrong_length_and_nan() {
        let g = grid(4);
        assert!(matches!(
            Field::new(g, vec![0.0; 4]),
            Err(Error::GridMismatch(_))
        ));
        assert!(matches!(
            Field::new(g, vec![0.0, 1.0, f64::NAN, 0.0, 0.0]),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn inner_product_examples() {
        let g = grid(50);
        let one = Field::constant(g, 1.0);
        let x = Field::from_fn(g, |x| x);
        assert!((inner_l2(&one, &one).unwrap() - 1.0).abs() < 1e-14);
        assert!((inner_l2(&one, &x).unwrap() - 0.5).abs() < 1e-14);
        let f = Field::from_fn(g, |x| x * (2.0 * PI * x).sin());
        let n2 = inner_l2(&f, &f).unwrap();
        assert!((n2 - 0.40041739822_f64.powi(2)).abs() < 1e-3);
    }

    #[test]
    fn inner_product_grid_mismatch() {
        let a = Field::zeros(grid(4));
        let b = Field::zeros(grid(5));
        assert!(matches!(inner_l2(&a, &b), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn simpson_examples() {
        let g = grid(50);
        let t = TimeGrid::new(50, 1.0).unwrap();
        let quad = Trajectory::new(
            t,
            (0..=50)
                .map(|j| Field::constant(g, t.time(j).powi(2)))
                .collect(),
        )
        .unwrap();
        let avg = simpson_time_integral(&quad).unwrap();
        assert!(avg.values().iter().all(|v| (v - 1.0 / 3.0).abs() < 1e-14));

        let zero = simpson_time_integral(&Trajectory::zeros(g, t)).unwrap();
        assert_eq!(zero.max_abs(), 0.0);

        let u = Trajectory::new(
            t,
            (0..=50)
                .map(|j| {
                    let tj = t.time(j);
                    Field::from_fn(g, |x| {
                        0.1 * (tj.powi(3) + tj + 1.0) * (1.0 - (2.0 * PI * x).cos())
                    })
                })
                .collect(),
        )
        .unwrap();
        let chi = simpson_time_integral(&u).unwrap();
        let exact = Field::from_fn(g, |x| 7.0 / 40.0 * (1.0 - (2.0 * PI * x).cos()));
        assert!(chi.sub(&exact).unwrap().max_abs() < 1e-6);
    }

    #[test]
    fn projection_examples() {
        let fine = grid(1000);
        let work = grid(50);
        let c = project_fine_to_working(&Field::constant(fine, 0.35), work).unwrap();
        assert!(c.values().iter().all(|&v| v == 0.35));
        let s =
            project_fine_to_working(&Field::from_fn(fine, |x| (2.0 * PI * x).sin()), work).unwrap();
        let want = Field::from_fn(work, |x| (2.0 * PI * x).sin());
        assert!(s.sub(&want).unwrap().max_abs() < 1e-15);
        assert!(project_fine_to_working(&Field::zeros(grid(30)), work).is_err());
    }

    #[test]
    fn projection_norm_is_second_order() {
        let f = |x: f64| (3.0 * x).exp() * (2.0 * PI * x).cos();
        let fine = Field::from_fn(grid(1000), f);
        let fine_norm = norm_l2(&fine);
        let err = |n: usize| {
            (norm_l2(&project_fine_to_working(&fine, grid(n)).unwrap()) - fine_norm).abs()
        };
        let ratio = err(50) / err(100);
        assert!(ratio > 3.0 && ratio < 5.0, "ratio {ratio}");
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn field_strategy(n: usize) -> impl Strategy<Value = Vec<f64>> {
            proptest::collection::vec(-10.0f64..10.0, n + 1)
        }

        proptest! {
            #[test]
            fn inner_is_symmetric_bilinear_positive(
                a in field_strategy(12),
                b in field_strategy(12),
                c in field_strategy(12),
                s in -5.0f64..5.0,
            ) {
                let g = grid(12);
                let fa = Field::new(g, a).unwrap();
                let fb = Field::new(g, b).unwrap();
                let fc = Field::new(g, c).unwrap();
                let ab = inner_l2(&fa, &fb).unwrap();
                let ba = inner_l2(&fb, &fa).unwrap();
                let scale = 1.0 + norm_l2(&fa) * norm_l2(&fb);
                prop_assert!((ab - ba).abs() <= 1e-12 * scale);

                let lhs = inner_l2(&fa.add_scaled(s, &fc).unwrap(), &fb).unwrap();
                let rhs = ab + s * inner_l2(&fc, &fb).unwrap();
                let scale = 1.0 + (norm_l2(&fa) + s.abs() * norm_l2(&fc)) * norm_l2(&fb);
                prop_assert!((lhs - rhs).abs() <= 1e-12 * scale);

                if fa.max_abs() > 0.0 {
                    prop_assert!(inner_l2(&fa, &fa).unwrap() > 0.0);
                }
            }

            #[test]
            fn simpson_is_linear_and_exact_on_cubics(
                c in proptest::collection::vec(-3.0f64..3.0, 4),
                s in -2.0f64..2.0,
            ) {
                let g = grid(3);
                let t = TimeGrid::new(8, 2.0).unwrap();
                let poly = |x: f64| c[0] + c[1] * x + c[2] * x * x + c[3] * x * x * x;
                let traj = Trajectory::new(
                    t,
                    (0..=8).map(|j| Field::constant(g, poly(t.time(j)))).collect(),
                ).unwrap();
                let exact = 2.0 * c[0] + 2.0 * c[1] + 8.0 / 3.0 * c[2] + 4.0 * c[3];
                let got = simpson_time_integral(&traj).unwrap();
                for v in got.values() {
                    prop_assert!((v - exact).abs() < 1e-12 * (1.0 + exact.abs()));
                }
                let scaled = Trajectory::new(
                    t,
                    traj.levels().iter().map(|f| f.scale(s)).collect(),
                ).unwrap();
                let got_s = simpson_time_integral(&scaled).unwrap();
                for (a, b) in got_s.values().iter().zip(got.values()) {
                    prop_assert!((a - s * b).abs() < 1e-12 * (1.0 + b.abs()));
                }
            }
        }
    }
}
