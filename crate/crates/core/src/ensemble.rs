use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridField;

/// `N` equally weighted particles of radius `delta` in `dim` dimensions.
///
/// Positions are stored flat, particle-major. The empirical measure
/// `(1/N) Σ δ_{x_i}` carries unit mass by construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticleEnsemble {
    positions: Vec<f64>,
    dim: usize,
    delta: f64,
}

impl ParticleEnsemble {
    /// One-dimensional ensemble.
    pub fn new(positions: Vec<f64>, delta: f64) -> Result<Self> {
        Self::with_dim(positions, 1, delta)
    }

    pub fn with_dim(positions: Vec<f64>, dim: usize, delta: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::input("particle dimension must be at least 1"));
        }
        if positions.is_empty() || positions.len() % dim != 0 {
            return Err(Error::input(format!(
                "need a non-empty position list whose length is a multiple of {dim}"
            )));
        }
        if positions.iter().any(|x| !x.is_finite()) {
            return Err(Error::input("particle positions must be finite"));
        }
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(Error::input(format!("particle radius must be positive, got {delta}")));
        }
        Ok(Self {
            positions,
            dim,
            delta,
        })
    }

    pub fn count(&self) -> usize {
        self.positions.len() / self.dim
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn weight(&self) -> f64 {
        1.0 / self.count() as f64
    }

    pub fn total_mass(&self) -> f64 {
        self.count() as f64 * self.weight()
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn position(&self, i: usize) -> &[f64] {
        &self.positions[i * self.dim..(i + 1) * self.dim]
    }

    /// Replaces all positions, re-validating finiteness.
    pub fn with_positions(&self, positions: Vec<f64>) -> Result<Self> {
        Self::with_dim(positions, self.dim, self.delta)
    }

    pub fn translated(&self, shift: f64) -> Self {
        Self {
            positions: self.positions.iter().map(|x| x + shift).collect(),
            dim: self.dim,
            delta: self.delta,
        }
    }

    fn require_1d(&self) -> Result<()> {
        if self.dim != 1 {
            return Err(Error::input("operation is only defined for 1D ensembles"));
        }
        Ok(())
    }

    /// Positions sorted ascending (1D only).
    pub fn sorted_positions(&self) -> Result<Vec<f64>> {
        self.require_1d()?;
        let mut x = self.positions.clone();
        x.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(x)
    }

    /// Deterministic stratified sampling `x_i = F⁻¹((i + ½)/N)` from a
    /// nonnegative grid density (piecewise constant, so `F` is piecewise linear).
    pub fn from_density_quantiles(density: &GridField, n: usize, delta: f64) -> Result<Self> {
        let q = QuantileSampler::new(density)?;
        let positions = (0..n).map(|i| q.inverse((i as f64 + 0.5) / n as f64)).collect();
        Self::new(positions, delta)
    }

    /// Stratified random sampling `x_i = F⁻¹((i + U_i)/N)` with `U_i` uniform
    /// on `[0, 1)` drawn from the supplied generator.
    pub fn from_density_stratified<R: Rng>(
        density: &GridField,
        n: usize,
        delta: f64,
        rng: &mut R,
    ) -> Result<Self> {
        let q = QuantileSampler::new(density)?;
        let positions = (0..n)
            .map(|i| q.inverse((i as f64 + rng.gen::<f64>()) / n as f64))
            .collect();
        Self::new(positions, delta)
    }
}

struct QuantileSampler {
    left: f64,
    dx: f64,
    cdf: Vec<f64>,
}

impl QuantileSampler {
    fn new(density: &GridField) -> Result<Self> {
        if density.min() < 0.0 {
            return Err(Error::input("sampling density must be nonnegative"));
        }
        let mass = density.mass();
        if !(mass > 0.0) {
            return Err(Error::input("sampling density has zero mass"));
        }
        let dx = density.dx();
        let mut cdf = Vec::with_capacity(density.len() + 1);
        cdf.push(0.0);
        let mut acc = 0.0;
        for v in &density.values {
            acc += v * dx / mass;
            cdf.push(acc);
        }
        Ok(Self {
            left: density.left,
            dx,
            cdf,
        })
    }

    fn inverse(&self, s: f64) -> f64 {
        let n = self.cdf.len() - 1;
        // first face index with cdf >= s
        let k = self.cdf.partition_point(|&c| c < s).clamp(1, n);
        let (c0, c1) = (self.cdf[k - 1], self.cdf[k]);
        let frac = if c1 > c0 { (s - c0) / (c1 - c0) } else { 0.5 };
        self.left + (k as f64 - 1.0 + frac) * self.dx
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::BoundaryKind;

    #[test]
    fn validation() {
        assert!(ParticleEnsemble::new(vec![], 0.1).is_err());
        assert!(ParticleEnsemble::new(vec![0.0], -0.1).is_err());
        assert!(ParticleEnsemble::new(vec![f64::INFINITY], 0.1).is_err());
        assert!(ParticleEnsemble::with_dim(vec![0.0, 1.0, 2.0], 2, 0.1).is_err());
        let e = ParticleEnsemble::new(vec![0.0, 1.0], 0.1).unwrap();
        assert_eq!(e.count(), 2);
        assert!((e.total_mass() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn quantile_sampling_of_uniform_density_is_midpoint_grid() {
        let d = GridField::indicator(10, 0.0, 1.0, BoundaryKind::NoFlux, 0.0, 1.0, 1.0).unwrap();
        let e = ParticleEnsemble::from_density_quantiles(&d, 4, 0.01).unwrap();
        let expect = [0.125, 0.375, 0.625, 0.875];
        for (x, y) in e.positions().iter().zip(expect) {
            assert!((x - y).abs() < 1e-12);
        }
    }
}
