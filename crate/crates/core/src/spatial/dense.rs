use num_complex::Complex64;

use super::{check_len, SpatialOperator};
use crate::error::{Error, Result};
use crate::linalg::{lu_solve, CMatrix};

/// Any square matrix, solved by LU for every shift.
#[derive(Debug, Clone)]
pub struct DenseOperator {
    a: CMatrix,
}

impl DenseOperator {
    pub fn new(a: CMatrix) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::DimensionMismatch { expected: a.nrows(), found: a.ncols() });
        }
        Ok(Self { a })
    }

    pub fn from_real(a: &nalgebra::DMatrix<f64>) -> Result<Self> {
        Self::new(a.map(|v| Complex64::new(v, 0.0)))
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.a
    }
}

impl SpatialOperator for DenseOperator {
    fn dim(&self) -> usize {
        self.a.nrows()
    }

    fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        let m = self.dim();
        for (i, yi) in y.iter_mut().enumerate().take(m) {
            *yi = (0..m).map(|j| self.a[(i, j)] * x[j]).sum();
        }
    }

    fn shifted_solve(&self, shift: Complex64, rhs: &[Complex64], out: &mut [Complex64]) -> Result<()> {
        let m = self.dim();
        check_len(m, rhs.len())?;
        check_len(m, out.len())?;
        let mut shifted = self.a.clone();
        for i in 0..m {
            shifted[(i, i)] += shift;
        }
        let w = lu_solve(shifted, rhs).map_err(|_| Error::SingularShift { shift, mode: 0 })?;
        out.copy_from_slice(&w);
        Ok(())
    }

    fn to_dense(&self) -> CMatrix {
        self.a.clone()
    }
}
