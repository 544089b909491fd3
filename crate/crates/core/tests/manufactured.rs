//! The manufactured benchmark against hand-differentiated closed forms.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use thermoisp::experiment::{build_case, ManufacturedCase, Target};
use thermoisp::MeasurementKind;

/// u = 0.1 P(t) Q(x), θ = 2 R(t) W(x).
struct Closed;

impl Closed {
    fn p(t: f64) -> [f64; 3] {
        [t.powi(3) + t + 1.0, 3.0 * t * t + 1.0, 6.0 * t]
    }
    fn q(x: f64) -> [f64; 3] {
        let w = 2.0 * PI;
        [
            1.0 - (w * x).cos(),
            w * (w * x).sin(),
            w * w * (w * x).cos(),
        ]
    }
    fn r(t: f64) -> [f64; 2] {
        [t * t + 1.0, 2.0 * t]
    }
    fn w(x: f64) -> [f64; 3] {
        // x(1−x)² = x − 2x² + x³
        [
            x - 2.0 * x * x + x.powi(3),
            1.0 - 4.0 * x + 3.0 * x * x,
            -4.0 + 6.0 * x,
        ]
    }
}

/// Composite 3-point Gauss–Legendre on `[0, t]`.
fn gauss(t: f64, f: impl Fn(f64) -> f64) -> f64 {
    let panels = 64;
    let h = t / panels as f64;
    let nodes = [-(0.6f64).sqrt(), 0.0, (0.6f64).sqrt()];
    let weights = [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0];
    (0..panels)
        .map(|k| {
            let mid = (k as f64 + 0.5) * h;
            nodes
                .iter()
                .zip(weights)
                .map(|(s, w)| w * f(mid + 0.5 * h * s))
                .sum::<f64>()
                * 0.5
                * h
        })
        .sum()
}

fn load_oracle(c: &ManufacturedCase, x: f64, t: f64) -> f64 {
    let m = &c.params;
    let (p, q, r, w) = (Closed::p(t), Closed::q(x), Closed::r(t), Closed::w(x));
    m.density * 0.1 * p[2] * q[0] - (m.lambda + 2.0 * m.mu) * 0.1 * p[0] * q[2]
        + m.coupling * 2.0 * r[0] * w[1]
}

fn heat_oracle(c: &ManufacturedCase, x: f64, t: f64) -> f64 {
    let m = &c.params;
    let (p, q, r, w) = (Closed::p(t), Closed::q(x), Closed::r(t), Closed::w(x));
    let k = |s: f64| c.kernel.eval(s).unwrap();
    let memory = 2.0 * w[2] * gauss(t, |s| k(t - s) * Closed::r(s)[0]);
    m.density * m.specific_heat * 2.0 * r[1] * w[0] - m.conductivity * 2.0 * r[0] * w[2] - memory
        + m.reference_temperature * m.coupling * 0.1 * p[1] * q[1]
}

#[test]
fn sources_satisfy_the_pde_at_random_points() {
    let case = build_case(Target::F0, MeasurementKind::TimeAvgU);
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..100 {
        let x: f64 = rng.random();
        let t: f64 = rng.random();
        let dp = (case.load(x, t) - load_oracle(&case, x, t)).abs();
        let dh = (case.heat(x, t) - heat_oracle(&case, x, t)).abs();
        assert!(dp <= 1e-9, "load at ({x}, {t}): {dp:e}");
        assert!(dh <= 1e-9, "heat at ({x}, {t}): {dh:e}");
    }
}

#[test]
fn exact_state_matches_closed_forms() {
    let case = build_case(Target::F1, MeasurementKind::TimeAvgTheta);
    for (x, t) in [(0.1, 0.2), (0.5, 0.9), (0.77, 0.33)] {
        assert!((case.exact_u(x, t) - 0.1 * Closed::p(t)[0] * Closed::q(x)[0]).abs() < 1e-15);
        assert!((case.exact_theta(x, t) - 2.0 * Closed::r(t)[0] * Closed::w(x)[0]).abs() < 1e-15);
    }
}

#[test]
fn split_source_adds_back_to_the_full_source() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for kind in MeasurementKind::ALL {
        for target in [Target::F0, Target::F1] {
            let case = build_case(target, kind);
            for _ in 0..50 {
                let x: f64 = rng.random();
                let t: f64 = rng.random();
                let full = match kind {
                    MeasurementKind::TimeAvgTheta => case.heat(x, t),
                    _ => case.load(x, t),
                };
                let split = case.g(t) * target.eval(x) + case.remainder(x, t);
                assert!((split - full).abs() <= 1e-12 * full.abs().max(1.0));
            }
        }
    }
}

#[test]
fn observations_are_quadratures_of_the_exact_state() {
    for kind in MeasurementKind::ALL {
        let case = build_case(Target::F0, kind);
        for x in [0.0, 0.13, 0.5, 0.81, 1.0] {
            let expected = match kind {
                MeasurementKind::FinalTimeU => case.exact_u(x, 1.0),
                MeasurementKind::TimeAvgU => gauss(1.0, |t| case.exact_u(x, t)),
                MeasurementKind::TimeAvgTheta => gauss(1.0, |t| case.exact_theta(x, t)),
            };
            assert!(
                (case.exact_measurement(x) - expected).abs() < 1e-14,
                "{kind} at {x}"
            );
        }
    }
}

#[test]
fn initial_data_are_the_exact_state_at_zero() {
    let case = build_case(Target::F0, MeasurementKind::TimeAvgU);
    let grid = thermoisp::SpaceGrid::new(20).unwrap();
    let init = case.initial_data(grid);
    for (i, x) in grid.nodes().into_iter().enumerate() {
        assert!((init.displacement.values()[i] - case.exact_u(x, 0.0)).abs() < 1e-15);
        assert!((init.temperature.values()[i] - case.exact_theta(x, 0.0)).abs() < 1e-15);
        let v = 0.1 * Closed::p(0.0)[1] * Closed::q(x)[0];
        assert!((init.velocity.values()[i] - v).abs() < 1e-15);
    }
}
