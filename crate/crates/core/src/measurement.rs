//! Observation maps, remainders against the known-data problem, and additive
//! Gaussian noise.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward::{ForwardSolution, SourceSlot};
use crate::grid::{norm_l2, project_fine_to_working, simpson_time_integral, Field, SpaceGrid};

/// What is observed, and hence which inverse problem is being solved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MeasurementKind {
    /// `u(·, T)`; load source unknown.
    #[serde(rename = "1.1")]
    FinalTimeU,
    /// `∫_0^T u dt`; load source unknown.
    #[serde(rename = "1.2")]
    TimeAvgU,
    /// `∫_0^T θ dt`; heat source unknown.
    #[serde(rename = "2")]
    TimeAvgTheta,
}

impl MeasurementKind {
    pub const ALL: [MeasurementKind; 3] = [Self::FinalTimeU, Self::TimeAvgU, Self::TimeAvgTheta];

    /// Equation carrying the unknown source.
    pub fn slot(self) -> SourceSlot {
        match self {
            Self::FinalTimeU | Self::TimeAvgU => SourceSlot::Load,
            Self::TimeAvgTheta => SourceSlot::Heat,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::FinalTimeU => "1.1",
            Self::TimeAvgU => "1.2",
            Self::TimeAvgTheta => "2",
        }
    }
}

impl fmt::Display for MeasurementKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for MeasurementKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "1.1" => Ok(Self::FinalTimeU),
            "1.2" => Ok(Self::TimeAvgU),
            "2" => Ok(Self::TimeAvgTheta),
            other => Err(Error::Config(format!(
                "unknown inverse problem '{other}', expected one of 1.1, 1.2, 2"
            ))),
        }
    }
}

/// Observed data together with its noise bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    pub kind: MeasurementKind,
    pub data: Field,
    /// Relative level ẽ used to generate the noise (0 for exact data).
    pub relative_noise: f64,
    /// Realised distance `e = ‖exact − noisy‖` on the working grid.
    pub noise_level: f64,
    pub seed: Option<u64>,
}

pub fn apply_measurement(sol: &ForwardSolution, kind: MeasurementKind) -> Result<Field> {
    match kind {
        MeasurementKind::FinalTimeU => Ok(sol.u.last().clone()),
        MeasurementKind::TimeAvgU => simpson_time_integral(&sol.u),
        MeasurementKind::TimeAvgTheta => simpson_time_integral(&sol.theta),
    }
}

/// `measured − measurement(star_solution)`.
pub fn compute_remainder(
    measured: &Field,
    star_solution: &ForwardSolution,
    kind: MeasurementKind,
) -> Result<Field> {
    measured.sub(&apply_measurement(star_solution, kind)?)
}

/// Adds i.i.d. `N(0, σ²)` noise with `σ = relative_level · max|exact|` at the
/// fine-grid nodes, restricts to `working`, and returns the noisy field with
/// the realised `e`. The generator is ChaCha20 seeded from `seed`.
pub fn add_noise(
    exact_fine: &Field,
    relative_level: f64,
    seed: u64,
    working: SpaceGrid,
) -> Result<(Field, f64)> {
    if !(relative_level >= 0.0 && relative_level.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "noise level must be >= 0, got {relative_level}"
        )));
    }
    let exact_working = project_fine_to_working(exact_fine, working)?;
    if relative_level == 0.0 {
        return Ok((exact_working, 0.0));
    }
    let sigma = relative_level * exact_fine.max_abs();
    let normal = Normal::new(0.0, sigma)
        .map_err(|e| Error::InvalidInput(format!("noise distribution: {e}")))?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let noisy: Vec<f64> = exact_fine
        .values()
        .iter()
        .map(|v| v + normal.sample(&mut rng))
        .collect();
    let noisy_fine = Field::new(exact_fine.grid(), noisy)?;
    let noisy_working = project_fine_to_working(&noisy_fine, working)?;
    let e = norm_l2(&noisy_working.sub(&exact_working)?);
    Ok((noisy_working, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn chi(grid: SpaceGrid) -> Field {
        Field::from_fn(grid, |x| 7.0 / 40.0 * (1.0 - (2.0 * PI * x).cos()))
    }

    #[test]
    fn kind_round_trip() {
        for k in MeasurementKind::ALL {
            assert_eq!(k.label().parse::<MeasurementKind>().unwrap(), k);
        }
        assert!("3".parse::<MeasurementKind>().is_err());
    }

    #[test]
    fn zero_noise_is_identity() {
        let fine = SpaceGrid::new(1000).unwrap();
        let work = SpaceGrid::new(50).unwrap();
        let (noisy, e) = add_noise(&chi(fine), 0.0, 1, work).unwrap();
        assert_eq!(noisy, chi(work));
        assert_eq!(e, 0.0);
        assert!(add_noise(&chi(fine), -0.1, 1, work).is_err());
    }

    #[test]
    fn noise_is_reproducible_and_seed_dependent() {
        let fine = SpaceGrid::new(1000).unwrap();
        let work = SpaceGrid::new(50).unwrap();
        let a = add_noise(&chi(fine), 0.01, 7, work).unwrap();
        let b = add_noise(&chi(fine), 0.01, 7, work).unwrap();
        let c = add_noise(&chi(fine), 0.01, 8, work).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.0, c.0);
    }

    #[test]
    fn sigma_follows_peak_value() {
        // σ = 0.01 · 0.35; sample std of the working-grid noise should match
        let fine = SpaceGrid::new(1000).unwrap();
        let work = SpaceGrid::new(1000).unwrap();
        let (noisy, _) = add_noise(&chi(fine), 0.01, 3, work).unwrap();
        let d = noisy.sub(&chi(work)).unwrap();
        let var = d.values().iter().map(|v| v * v).sum::<f64>() / 1001.0;
        assert!((var.sqrt() - 0.0035).abs() < 0.0035 * 0.1);
    }
}
