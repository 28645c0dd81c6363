use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::GaussLegendre;

/// Boundary treatment of a grid field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundaryKind {
    /// Physical wall with zero normal flux.
    NoFlux,
    /// Whole-line problem truncated to a finite window; the boundary cells are
    /// monitored and must stay (numerically) empty.
    WholeLineTruncated,
}

/// Geometry of a uniform 1D grid without data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub cells: usize,
    pub left: f64,
    pub right: f64,
    pub bc: BoundaryKind,
}

impl GridSpec {
    pub fn new(cells: usize, left: f64, right: f64, bc: BoundaryKind) -> Result<Self> {
        if cells == 0 {
            return Err(Error::input("grid needs at least one cell"));
        }
        if !(right > left) || !left.is_finite() || !right.is_finite() {
            return Err(Error::input(format!("invalid grid interval [{left}, {right}]")));
        }
        Ok(Self {
            cells,
            left,
            right,
            bc,
        })
    }

    /// Grid on `[left, right]` with spacing at most `max_dx`.
    pub fn with_max_spacing(left: f64, right: f64, max_dx: f64, bc: BoundaryKind) -> Result<Self> {
        if !(max_dx > 0.0) {
            return Err(Error::input("grid spacing must be positive"));
        }
        let cells = ((right - left) / max_dx).ceil().max(1.0) as usize;
        Self::new(cells, left, right, bc)
    }

    pub fn of(field: &GridField) -> Self {
        Self {
            cells: field.len(),
            left: field.left,
            right: field.right,
            bc: field.bc,
        }
    }

    pub fn dx(&self) -> f64 {
        (self.right - self.left) / self.cells as f64
    }

    pub fn center(&self, i: usize) -> f64 {
        self.left + (i as f64 + 0.5) * self.dx()
    }

    pub fn zeros(&self) -> GridField {
        GridField {
            values: vec![0.0; self.cells],
            left: self.left,
            right: self.right,
            bc: self.bc,
        }
    }
}

/// Uniform 1D grid of cell averages on `[left, right]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridField {
    pub values: Vec<f64>,
    pub left: f64,
    pub right: f64,
    pub bc: BoundaryKind,
}

impl GridField {
    pub fn new(values: Vec<f64>, left: f64, right: f64, bc: BoundaryKind) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::input("grid field needs at least one cell"));
        }
        if !(right > left) || !left.is_finite() || !right.is_finite() {
            return Err(Error::input(format!("invalid grid interval [{left}, {right}]")));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::input("grid field contains non-finite values"));
        }
        Ok(Self {
            values,
            left,
            right,
            bc,
        })
    }

    pub fn zeros(cells: usize, left: f64, right: f64, bc: BoundaryKind) -> Result<Self> {
        Self::new(vec![0.0; cells], left, right, bc)
    }

    /// Cell averages of `f` computed with a 4-point Gauss rule per cell.
    pub fn from_fn<F: Fn(f64) -> f64>(
        cells: usize,
        left: f64,
        right: f64,
        bc: BoundaryKind,
        f: F,
    ) -> Result<Self> {
        if cells == 0 {
            return Err(Error::input("grid field needs at least one cell"));
        }
        let dx = (right - left) / cells as f64;
        let gl = GaussLegendre::new(4);
        let values = (0..cells)
            .map(|i| {
                let a = left + i as f64 * dx;
                gl.integrate(a, a + dx, &f) / dx
            })
            .collect();
        Self::new(values, left, right, bc)
    }

    /// Exact cell averages of a piecewise constant `value * 1_[a, b]`.
    pub fn indicator(
        cells: usize,
        left: f64,
        right: f64,
        bc: BoundaryKind,
        a: f64,
        b: f64,
        value: f64,
    ) -> Result<Self> {
        let dx = (right - left) / cells as f64;
        let values = (0..cells)
            .map(|i| {
                let lo = left + i as f64 * dx;
                let hi = lo + dx;
                let frac = ((hi.min(b) - lo.max(a)) / dx).clamp(0.0, 1.0);
                // snap rounding noise so that full and empty cells are exact
                if frac > 1.0 - 1e-10 {
                    value
                } else if frac < 1e-10 {
                    0.0
                } else {
                    value * frac
                }
            })
            .collect();
        Self::new(values, left, right, bc)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn dx(&self) -> f64 {
        (self.right - self.left) / self.values.len() as f64
    }

    pub fn center(&self, i: usize) -> f64 {
        self.left + (i as f64 + 0.5) * self.dx()
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.center(i)).collect()
    }

    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.dx()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn with_values(&self, values: Vec<f64>) -> Self {
        Self {
            values,
            left: self.left,
            right: self.right,
            bc: self.bc,
        }
    }

    pub fn same_grid(&self, other: &GridField) -> bool {
        self.len() == other.len()
            && (self.left - other.left).abs() <= 1e-12 * (1.0 + self.left.abs())
            && (self.right - other.right).abs() <= 1e-12 * (1.0 + self.right.abs())
    }

    /// L1 distance between two fields on the same grid.
    pub fn l1_distance(&self, other: &GridField) -> Result<f64> {
        if !self.same_grid(other) {
            return Err(Error::input("L1 distance requires identical grids"));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
            * self.dx())
    }

    /// Second moment `∫ x² ρ dx` with cell-exact weights for piecewise constants.
    pub fn second_moment(&self) -> f64 {
        let dx = self.dx();
        self.values
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let a = self.left + i as f64 * dx;
                let b = a + dx;
                v * (b * b * b - a * a * a) / 3.0
            })
            .sum()
    }

    /// `∫ ρ log ρ dx` (zero cells contribute nothing).
    pub fn entropy(&self) -> f64 {
        self.values
            .iter()
            .filter(|&&v| v > 0.0)
            .map(|&v| v * v.ln())
            .sum::<f64>()
            * self.dx()
    }

    /// Mass held by the first and last `k` cells.
    pub fn boundary_mass(&self, k: usize) -> f64 {
        let n = self.len();
        let k = k.min(n);
        let head: f64 = self.values[..k].iter().sum();
        let tail: f64 = self.values[n - k..].iter().sum();
        (head + tail) * self.dx()
    }

    /// Cell average on a different uniform grid, conservative remap assuming
    /// piecewise constant data.
    pub fn remap(&self, cells: usize, left: f64, right: f64) -> Result<GridField> {
        let dx_src = self.dx();
        let dx = (right - left) / cells as f64;
        let mut out = vec![0.0; cells];
        for (j, o) in out.iter_mut().enumerate() {
            let lo = left + j as f64 * dx;
            let hi = lo + dx;
            let i0 = (((lo - self.left) / dx_src).floor().max(0.0)) as usize;
            let i1 = ((((hi - self.left) / dx_src).ceil()).max(0.0) as usize).min(self.len());
            let mut acc = 0.0;
            for i in i0.min(self.len())..i1 {
                let a = self.left + i as f64 * dx_src;
                let b = a + dx_src;
                let ov = (hi.min(b) - lo.max(a)).max(0.0);
                acc += self.values[i] * ov;
            }
            *o = acc / dx;
        }
        GridField::new(out, left, right, self.bc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indicator_has_exact_mass() {
        let g = GridField::indicator(7, -1.0, 1.0, BoundaryKind::NoFlux, -0.33, 0.5, 2.0).unwrap();
        assert!((g.mass() - 2.0 * 0.83).abs() < 1e-14);
    }

    #[test]
    fn remap_conserves_mass() {
        let g = GridField::from_fn(50, -1.0, 1.0, BoundaryKind::NoFlux, |x| 1.0 - x * x).unwrap();
        let r = g.remap(73, -1.2, 1.1).unwrap();
        assert!((g.mass() - r.mass()).abs() < 1e-12);
    }

    #[test]
    fn rejects_empty_and_non_finite() {
        assert!(GridField::new(vec![], 0.0, 1.0, BoundaryKind::NoFlux).is_err());
        assert!(GridField::new(vec![f64::NAN], 0.0, 1.0, BoundaryKind::NoFlux).is_err());
    }
}
