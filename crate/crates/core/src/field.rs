use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{NlsError, Result};
use crate::grid::Grid;

/// Complex wave function sampled on a [`Grid`].
#[derive(Debug, Clone)]
pub struct Field {
    grid: Arc<Grid>,
    values: Vec<Complex64>,
}

impl Field {
    pub fn new(grid: Arc<Grid>, values: Vec<Complex64>) -> Result<Self> {
        grid.check_len(values.len())?;
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Arc<Grid>) -> Self {
        let values = vec![Complex64::default(); grid.len()];
        Self { grid, values }
    }

    /// Samples `f(x, |x|)` at every grid point.
    pub fn from_fn(grid: Arc<Grid>, f: impl Fn(&[f64; 3], f64) -> Complex64) -> Self {
        let values = grid
            .positions()
            .iter()
            .zip(grid.radius())
            .map(|(x, &r)| f(x, r))
            .collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn with_values(&self, values: Vec<Complex64>) -> Result<Self> {
        Self::new(Arc::clone(&self.grid), values)
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self {
            grid: Arc::clone(&self.grid),
            values: self.values.iter().map(|v| v * a).collect(),
        }
    }

    pub fn conj(&self) -> Self {
        Self {
            grid: Arc::clone(&self.grid),
            values: self.values.iter().map(|v| v.conj()).collect(),
        }
    }

    pub fn same_grid(&self, other: &Field) -> Result<()> {
        if Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid {
            Ok(())
        } else {
            Err(NlsError::GridMismatch)
        }
    }

    pub fn ensure_finite(&self) -> Result<()> {
        match self.values.iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
            Some(index) => Err(NlsError::NonFinite { index }),
            None => Ok(()),
        }
    }

    /// `‖self - other‖_{L²}`.
    pub fn l2_distance(&self, other: &Field) -> Result<f64> {
        self.same_grid(other)?;
        Ok(self
            .grid
            .integrate(self.values.iter().zip(&other.values).map(|(a, b)| (a - b).norm_sqr()))
            .sqrt())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}
