use num_complex::Complex64;

use super::{check_len, SpatialOperator};
use crate::error::Result;

/// The first-order form `Q = [[0, -I], [A, 0]]` of `u'' + A u = 0`, acting on
/// `(u, v)` stacked into one vector of length `2m`.
#[derive(Debug, Clone)]
pub struct FirstOrderPair<B> {
    base: B,
}

impl<B: SpatialOperator> FirstOrderPair<B> {
    pub fn new(base: B) -> Self {
        Self { base }
    }

    pub fn base(&self) -> &B {
        &self.base
    }
}

impl<B: SpatialOperator> SpatialOperator for FirstOrderPair<B> {
    fn dim(&self) -> usize {
        2 * self.base.dim()
    }

    fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        let m = self.base.dim();
        let (u, v) = x.split_at(m);
        let (yu, yv) = y.split_at_mut(m);
        for (a, b) in yu.iter_mut().zip(v) {
            *a = -b;
        }
        self.base.apply(u, yv);
    }

    /// `sigma u - v = g1`, `A u + sigma v = g2` reduces to
    /// `(A + sigma^2) u = g2 + sigma g1`, then `v = sigma u - g1`.
    fn shifted_solve(&self, shift: Complex64, rhs: &[Complex64], out: &mut [Complex64]) -> Result<()> {
        let m = self.base.dim();
        check_len(2 * m, rhs.len())?;
        check_len(2 * m, out.len())?;
        let (g1, g2) = rhs.split_at(m);
        let combined: Vec<Complex64> = g1.iter().zip(g2).map(|(a, b)| b + shift * a).collect();
        let (u, v) = out.split_at_mut(m);
        self.base.shifted_solve(shift * shift, &combined, u)?;
        for ((vi, ui), gi) in v.iter_mut().zip(u.iter()).zip(g1) {
            *vi = shift * ui - gi;
        }
        Ok(())
    }
}
