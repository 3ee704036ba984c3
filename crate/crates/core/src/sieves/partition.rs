use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use super::Model;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Piecewise-constant function on the `K^d` axis-aligned cubes of `[0,1]^d`.
///
/// Cells are half-open `[j/K, (j+1)/K)` except the last one per axis, which
/// is closed so that `x = 1` belongs to it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionSieve {
    dim: usize,
    cells_per_axis: usize,
    values: Vec<f64>,
}

impl PartitionSieve {
    pub fn new(dim: usize, cells_per_axis: usize) -> Result<Self> {
        if dim == 0 || cells_per_axis == 0 {
            return Err(Error::Parameter("partition needs d >= 1 and K >= 1".into()));
        }
        let cells = cells_per_axis.checked_pow(dim as u32).ok_or_else(|| Error::Parameter("K^d overflows".into()))?;
        Ok(Self { dim, cells_per_axis, values: alloc::vec![0.0; cells] })
    }

    pub fn with_values(dim: usize, cells_per_axis: usize, values: Vec<f64>) -> Result<Self> {
        let mut sieve = Self::new(dim, cells_per_axis)?;
        if values.len() != sieve.values.len() {
            return Err(Error::Shape { expected: sieve.values.len(), found: values.len() });
        }
        sieve.values = values;
        Ok(sieve)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cells_per_axis(&self) -> usize {
        self.cells_per_axis
    }

    pub fn n_cells(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Flat index of the cell containing `x`; axis 0 varies fastest.
    pub fn cell_of(&self, x: &[f64]) -> Result<usize> {
        if x.len() != self.dim {
            return Err(Error::Shape { expected: self.dim, found: x.len() });
        }
        let k = self.cells_per_axis;
        let mut idx = 0;
        let mut stride = 1;
        for &coord in x {
            if !(0.0..=1.0).contains(&coord) {
                return Err(Error::OutOfSupport(alloc::format!("coordinate {coord} not in [0,1]")));
            }
            let j = ((coord * k as f64) as usize).min(k - 1);
            idx += j * stride;
            stride *= k;
        }
        Ok(idx)
    }

    /// Cell index for every row of `xs`.
    pub fn assign(&self, xs: &Matrix) -> Result<Vec<usize>> {
        xs.iter_rows().map(|x| self.cell_of(x)).collect()
    }
}

impl Model for PartitionSieve {
    fn input_dim(&self) -> usize {
        self.dim
    }

    fn predict_row(&self, x: &[f64]) -> f64 {
        let k = self.cells_per_axis;
        let mut idx = 0;
        let mut stride = 1;
        for &coord in x {
            let j = ((coord.clamp(0.0, 1.0) * k as f64) as usize).min(k - 1);
            idx += j * stride;
            stride *= k;
        }
        self.values[idx]
    }

    fn evaluate(&self, xs: &Matrix) -> Result<Vec<f64>> {
        let cells = self.assign(xs)?;
        Ok(cells.into_iter().map(|c| self.values[c]).collect())
    }
}
