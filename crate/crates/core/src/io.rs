//! CSV and TOML readers/writers.
//!
//! * field CSV: header `x,value`, one row per node, 17 significant digits
//! * trajectory CSV: header `t,x,u,theta`
//! * history CSV: header `k,cost,discrepancy,e_r`
//! * summary CSV: the columns of [`SummaryRow`]
//! * sidecars: flat TOML key/value tables

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiment::SummaryRow;
use crate::forward::ForwardSolution;
use crate::grid::{Field, SpaceGrid};
use crate::measurement::MeasurementKind;
use crate::reconstruction::ReconstructionResult;

fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_field_csv(path: &Path, field: &Field) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["x", "value"])?;
    let grid = field.grid();
    for (i, v) in field.values().iter().enumerate() {
        w.write_record([fmt17(grid.node(i)), fmt17(*v)])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a field written by [`write_field_csv`]. The grid is inferred from
/// the row count; node coordinates must match it.
pub fn read_field_csv(path: &Path) -> Result<Field> {
    let mut r = csv::Reader::from_path(path)?;
    let mut xs = Vec::new();
    let mut vs = Vec::new();
    for rec in r.deserialize::<(f64, f64)>() {
        let (x, v) = rec?;
        xs.push(x);
        vs.push(v);
    }
    if xs.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "{} holds fewer than two nodes",
            path.display()
        )));
    }
    let grid = SpaceGrid::new(xs.len() - 1)?;
    for (i, x) in xs.iter().enumerate() {
        if (x - grid.node(i)).abs() > 1e-12 {
            return Err(Error::GridMismatch(format!(
                "{}: node {i} at x = {x}, expected a uniform grid",
                path.display()
            )));
        }
    }
    Field::new(grid, vs)
}

pub fn write_trajectory_csv(path: &Path, sol: &ForwardSolution) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["t", "x", "u", "theta"])?;
    let time = sol.u.time_grid();
    let grid = sol.u.space_grid();
    for j in 0..=time.steps() {
        let u = sol.u.level(j).values();
        let th = sol.theta.level(j).values();
        for i in 0..grid.node_count() {
            w.write_record([
                fmt17(time.time(j)),
                fmt17(grid.node(i)),
                fmt17(u[i]),
                fmt17(th[i]),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_history_csv(path: &Path, result: &ReconstructionResult) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["k", "cost", "discrepancy", "e_r"])?;
    for k in 0..result.cost_history.len() {
        let e_r = result
            .error_history
            .as_ref()
            .map(|e| fmt17(e[k]))
            .unwrap_or_default();
        w.write_record([
            k.to_string(),
            fmt17(result.cost_history[k]),
            fmt17(result.discrepancy_history[k]),
            e_r,
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_summary_csv(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_summary_csv(path: &Path) -> Result<Vec<SummaryRow>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize()
        .map(|row| row.map_err(Error::from))
        .collect()
}

/// Metadata stored next to a measurement CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementMeta {
    pub kind: MeasurementKind,
    /// Relative level ẽ.
    pub relative_noise: f64,
    pub seed: u64,
    /// Realised `e`.
    pub noise_level: f64,
    pub n_x: usize,
    pub fine_n_x: usize,
}

pub fn write_sidecar<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = toml::to_string(value)?;
    File::create(path)?.write_all(text.as_bytes())?;
    Ok(())
}

pub fn read_sidecar<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let mut text = String::new();
    File::open(path)?.read_to_string(&mut text)?;
    Ok(toml::from_str(&text)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn field_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.csv");
        let g = SpaceGrid::new(50).unwrap();
        let f = Field::from_fn(g, |x| (x * 1.234567890123).exp() / 3.0);
        write_field_csv(&path, &f).unwrap();
        assert_eq!(read_field_csv(&path).unwrap(), f);
    }

    #[test]
    fn sidecar_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.toml");
        let meta = MeasurementMeta {
            kind: MeasurementKind::TimeAvgU,
            relative_noise: 0.01,
            seed: 9,
            noise_level: 0.00254,
            n_x: 50,
            fine_n_x: 1000,
        };
        write_sidecar(&path, &meta).unwrap();
        let back: MeasurementMeta = read_sidecar(&path).unwrap();
        assert_eq!(back, meta);
    }

    #[test]
    fn malformed_field_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "x,value\n0,1\n0.7,2\n1,3\n").unwrap();
        assert!(matches!(read_field_csv(&path), Err(Error::GridMismatch(_))));
    }
}
