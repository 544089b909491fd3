//! Exponential memory kernel `k(t) = a e^{-bt}` and its convolution quadratures.

use crate::error::{Error, Result};
use crate::grid::Field;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kernel {
    amplitude: f64,
    decay: f64,
}

impl Kernel {
    pub fn new(amplitude: f64, decay: f64) -> Result<Self> {
        if !(amplitude > 0.0 && amplitude.is_finite()) || !(decay > 0.0 && decay.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "kernel needs a > 0 and b > 0, got a = {amplitude}, b = {decay}"
            )));
        }
        Ok(Self { amplitude, decay })
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn decay(&self) -> f64 {
        self.decay
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "kernel evaluated at negative time {t}"
            )));
        }
        Ok(self.at(t))
    }

    pub(crate) fn at(&self, t: f64) -> f64 {
        self.amplitude * (-self.decay * t).exp()
    }

    /// `(k∗z)_i = Σ_{j=1}^{i} k(t_i − t_j) z_j τ`, where `z[j]` is level `j`.
    pub fn conv_forward(&self, z: &[Field], tau: f64, i: usize) -> Result<Field> {
        let first = z
            .first()
            .ok_or_else(|| Error::InvalidInput("empty sequence".into()))?;
        if i >= z.len() {
            return Err(Error::IndexOutOfRange {
                index: i,
                max: z.len() - 1,
            });
        }
        let mut acc = Field::zeros(first.grid());
        for (j, zj) in z.iter().enumerate().take(i + 1).skip(1) {
            let w = self.at((i - j) as f64 * tau) * tau;
            acc = acc.add_scaled(w, zj)?;
        }
        Ok(acc)
    }

    /// `(k⊛z)_i = Σ_{j=i}^{n_t−1} k(t_j − t_i) z_j τ` with `n_t = z.len() − 1`.
    pub fn conv_adjoint(&self, z: &[Field], tau: f64, i: usize) -> Result<Field> {
        let first = z
            .first()
            .ok_or_else(|| Error::InvalidInput("empty sequence".into()))?;
        let n_t = z.len() - 1;
        if i > n_t {
            return Err(Error::IndexOutOfRange { index: i, max: n_t });
        }
        let mut acc = Field::zeros(first.grid());
        for (j, zj) in z.iter().enumerate().take(n_t).skip(i) {
            let w = self.at((j - i) as f64 * tau) * tau;
            acc = acc.add_scaled(w, zj)?;
        }
        Ok(acc)
    }
}
