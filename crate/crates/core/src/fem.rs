//! P1 finite element matrices on the full node set of a uniform grid.
//!
//! With hat functions `φ_a`:
//! mass `M_ab = ∫ φ_a φ_b`, stiffness `S_ab = ∫ φ_a' φ_b'`,
//! coupling `C_ab = ∫ φ_a φ_b'`.

use crate::grid::SpaceGrid;
use crate::linalg::Tridiagonal;

pub fn mass(grid: SpaceGrid) -> Tridiagonal {
    let n = grid.intervals();
    let h = grid.h();
    let mut m = Tridiagonal::zeros(n + 1);
    for e in 0..n {
        m.diag[e] += h / 3.0;
        m.diag[e + 1] += h / 3.0;
        m.upper[e] += h / 6.0;
        m.lower[e] += h / 6.0;
    }
    m
}

pub fn stiffness(grid: SpaceGrid) -> Tridiagonal {
    let n = grid.intervals();
    let h = grid.h();
    let mut s = Tridiagonal::zeros(n + 1);
    for e in 0..n {
        s.diag[e] += 1.0 / h;
        s.diag[e + 1] += 1.0 / h;
        s.upper[e] -= 1.0 / h;
        s.lower[e] -= 1.0 / h;
    }
    s
}

pub fn coupling(grid: SpaceGrid) -> Tridiagonal {
    // on one element φ_l' = -1/h, φ_r' = 1/h and ∫ φ = h/2
    let n = grid.intervals();
    let mut c = Tridiagonal::zeros(n + 1);
    for e in 0..n {
        c.diag[e] -= 0.5;
        c.diag[e + 1] += 0.5;
        c.upper[e] += 0.5;
        c.lower[e] -= 0.5;
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{inner_l2, Field};

    #[test]
    fn mass_agrees_with_inner_product() {
        let g = SpaceGrid::new(9).unwrap();
        let m = mass(g);
        let a = Field::from_fn(g, |x| (3.0 * x).sin());
        let b = Field::from_fn(g, |x| x * x - 0.2);
        let via_m = m.bilinear(a.values(), b.values());
        assert!((via_m - inner_l2(&a, &b).unwrap()).abs() < 1e-14);
    }

    #[test]
    fn exact_on_linear_functions() {
        let g = SpaceGrid::new(6).unwrap();
        let one: Vec<f64> = vec![1.0; 7];
        let x = g.nodes();
        // ∫ x' x' = 1, ∫ 1·x' = 1, ∫ x·1' = 0
        assert!((stiffness(g).bilinear(&x, &x) - 1.0).abs() < 1e-13);
        assert!((coupling(g).bilinear(&one, &x) - 1.0).abs() < 1e-13);
        assert!(coupling(g).bilinear(&x, &one).abs() < 1e-13);
        // stiffness kills constants
        assert!(stiffness(g).matvec(&one).iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn coupling_plus_transpose_is_boundary_term() {
        // C + Cᵀ = diag(-1, 0, …, 0, 1) by integration by parts
        let g = SpaceGrid::new(5).unwrap();
        let c = coupling(g);
        for i in 0..6 {
            for j in 0..6 {
                let s = c.get(i, j) + c.get(j, i);
                let want = if i == j && i == 0 {
                    -1.0
                } else if i == j && i == 5 {
                    1.0
                } else {
                    0.0
                };
                assert!((s - want).abs() < 1e-15);
            }
        }
    }
}
