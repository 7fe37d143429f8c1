//! Complex functions sampled on a uniform grid of `[0, 1]`.

use crate::quadrature::simpson;
use crate::C64;

/// Values of a function on `x_k = k / (len - 1)`, `len` odd.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledFunction {
    pub values: Vec<C64>,
}

impl SampledFunction {
    pub fn new(values: Vec<C64>) -> Self {
        assert!(values.len() >= 3 && values.len() % 2 == 1);
        Self { values }
    }

    /// Samples `f` on `len` uniform nodes.
    pub fn from_fn<F: Fn(f64) -> C64>(len: usize, f: F) -> Self {
        let h = 1.0 / (len - 1) as f64;
        Self::new((0..len).map(|k| f(k as f64 * h)).collect())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn step(&self) -> f64 {
        1.0 / (self.values.len() - 1) as f64
    }

    pub fn grid(&self) -> Vec<f64> {
        let h = self.step();
        (0..self.len()).map(|k| k as f64 * h).collect()
    }

    /// `<self, other> = int self * conj(other)`. Both must share the grid.
    pub fn inner(&self, other: &SampledFunction) -> C64 {
        assert_eq!(self.len(), other.len(), "grids differ");
        let prod: Vec<C64> = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b.conj())
            .collect();
        simpson(&prod, self.step())
    }

    pub fn norm(&self) -> f64 {
        self.inner(self).re.max(0.0).sqrt()
    }

    pub fn scale(&mut self, s: C64) {
        for v in &mut self.values {
            *v *= s;
        }
    }

    /// L2 distance to another sampled function.
    pub fn distance(&self, other: &SampledFunction) -> f64 {
        let diff = SampledFunction::new(
            self.values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a - b)
                .collect(),
        );
        diff.norm()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cosine_norm() {
        let f = SampledFunction::from_fn(513, |x| {
            C64::new(
                2f64.sqrt() * (2.0 * std::f64::consts::PI * 3.0 * x).cos(),
                0.0,
            )
        });
        assert!((f.norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn inner_is_conjugate_linear_in_second_slot() {
        let f = SampledFunction::from_fn(33, |x| C64::new(1.0, x));
        let mut g = f.clone();
        g.scale(C64::new(0.0, 1.0));
        let a = f.inner(&g);
        let b = f.inner(&f) * C64::new(0.0, -1.0);
        assert!((a - b).norm() < 1e-14);
    }
}
