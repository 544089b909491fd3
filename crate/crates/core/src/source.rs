//! Space-time source terms sampled at nodes and time levels.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{Field, SpaceGrid};

/// Shared scalar function of time.
#[derive(Clone)]
pub struct TimeFn(Arc<dyn Fn(f64) -> f64 + Send + Sync>);

impl TimeFn {
    pub fn new(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self(Arc::new(f))
    }

    pub fn eval(&self, t: f64) -> f64 {
        (self.0)(t)
    }

    /// `t ↦ c · self(t)`.
    pub fn scaled(&self, c: f64) -> TimeFn {
        let inner = self.clone();
        TimeFn::new(move |t| c * inner.eval(t))
    }
}

impl fmt::Debug for TimeFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("TimeFn(..)")
    }
}

type SpaceTimeFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Term {
    Separable { g: TimeFn, f: Field },
    Steady(Field),
    Closure(SpaceTimeFn),
}

/// Sum of terms, each either `g(t) f(x)`, a time-constant field, or a
/// closed-form `(x, t)` callable.
#[derive(Clone, Default)]
pub struct Source {
    terms: Vec<Term>,
}

impl fmt::Debug for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Source({} terms)", self.terms.len())
    }
}

impl Source {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn separable(g: TimeFn, f: Field) -> Self {
        Self::zero().plus_separable(g, f)
    }

    pub fn steady(f: Field) -> Self {
        Self::zero().plus_steady(f)
    }

    pub fn closure(f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        Self::zero().plus_closure(f)
    }

    pub fn plus_separable(mut self, g: TimeFn, f: Field) -> Self {
        self.terms.push(Term::Separable { g, f });
        self
    }

    pub fn plus_steady(mut self, f: Field) -> Self {
        self.terms.push(Term::Steady(f));
        self
    }

    pub fn plus_closure(mut self, f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        self.terms.push(Term::Closure(Arc::new(f)));
        self
    }

    pub fn plus(mut self, other: Source) -> Self {
        self.terms.extend(other.terms);
        self
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Nodal values at time `t`.
    pub fn sample(&self, grid: SpaceGrid, t: f64) -> Result<Vec<f64>> {
        let mut out = vec![0.0; grid.node_count()];
        for term in &self.terms {
            match term {
                Term::Separable { g, f } => {
                    check_grid(f, grid)?;
                    let gt = g.eval(t);
                    for (o, v) in out.iter_mut().zip(f.values()) {
                        *o += gt * v;
                    }
                }
                Term::Steady(f) => {
                    check_grid(f, grid)?;
                    for (o, v) in out.iter_mut().zip(f.values()) {
                        *o += v;
                    }
                }
                Term::Closure(c) => {
                    for (i, o) in out.iter_mut().enumerate() {
                        *o += c(grid.node(i), t);
                    }
                }
            }
        }
        if let Some(i) = out.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!(
                "source sample at node {i}, t = {t}"
            )));
        }
        Ok(out)
    }
}

fn check_grid(f: &Field, grid: SpaceGrid) -> Result<()> {
    if f.grid() != grid {
        return Err(Error::GridMismatch(format!(
            "source field on {} subintervals, solver grid has {}",
            f.grid().intervals(),
            grid.intervals()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sums_terms() {
        let grid = SpaceGrid::new(4).unwrap();
        let f = Field::from_fn(grid, |x| x);
        let s = Source::separable(TimeFn::new(|t| 2.0 * t), f.clone())
            .plus_steady(Field::constant(grid, 1.0))
            .plus_closure(|x, t| x * t);
        let v = s.sample(grid, 0.5).unwrap();
        for (i, vi) in v.iter().enumerate() {
            let x = grid.node(i);
            assert!((vi - (x + 1.0 + 0.5 * x)).abs() < 1e-15);
        }
        assert!(Source::zero()
            .sample(grid, 1.0)
            .unwrap()
            .iter()
            .all(|&v| v == 0.0));
    }

    #[test]
    fn rejects_nonfinite_and_wrong_grid() {
        let grid = SpaceGrid::new(4).unwrap();
        let s = Source::closure(|x, _| 1.0 / (x - 0.5));
        assert!(matches!(s.sample(grid, 0.0), Err(Error::NonFinite(_))));
        let s = Source::steady(Field::zeros(SpaceGrid::new(3).unwrap()));
        assert!(matches!(s.sample(grid, 0.0), Err(Error::GridMismatch(_))));
    }
}
