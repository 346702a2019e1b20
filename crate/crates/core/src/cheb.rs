//! Chebyshev polynomials at complex arguments and the roots of the
//! characteristic equation `U_{n-1}(x) - i T_n(x) = 0`.
//!
//! The roots are found in the angle variable: with `x = cos(theta)` the
//! equation becomes `rho(theta) = sin(n theta) - i cos(n theta) sin(theta) = 0`,
//! and every root lies in the strip `0 < Re theta < pi`, `Im theta > 0`.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;

use crate::error::{Error, Result};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Two converged roots closer than this are treated as the same root.
const DUPLICATE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChebKind {
    /// `T_k`
    First,
    /// `U_k`
    Second,
}

/// Evaluates `T_k(x)` or `U_k(x)` with the three-term recurrence.
pub fn cheb_eval(kind: ChebKind, k: usize, x: Complex64) -> Complex64 {
    let one = Complex64::new(1.0, 0.0);
    let first = match kind {
        ChebKind::First => x,
        ChebKind::Second => 2.0 * x,
    };
    if k == 0 {
        return one;
    }
    let (mut prev, mut cur) = (one, first);
    for _ in 1..k {
        let next = 2.0 * x * cur - prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// `U_0(x), ..., U_{count-1}(x)`.
pub fn cheb_second_kind_sequence(count: usize, x: Complex64) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(count);
    let (mut prev, mut cur) = (Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0));
    for _ in 0..count {
        out.push(cur);
        let next = 2.0 * x * cur - prev;
        prev = cur;
        cur = next;
    }
    out
}

/// `rho(theta)` and its derivative `rho'(theta)`.
pub fn rho_and_derivative(theta: Complex64, n: usize) -> (Complex64, Complex64) {
    let nf = n as f64;
    let (s, c) = (theta.sin(), theta.cos());
    let nt = theta * nf;
    let (sn, cn) = (nt.sin(), nt.cos());
    let rho = sn - I * cn * s;
    let rho_prime = nf * cn + I * nf * sn * s - I * cn * c;
    (rho, rho_prime)
}

/// `theta_j = (j pi / n + j pi / (n + 1)) / 2 + i / n` for `j = 1..=n`.
///
/// This is the midpoint of the interval that bounds `Re theta_j` for the
/// lower half of the roots. It is not a usable starting point for
/// `j > (n + 1) / 2`; see [`newton_starting_points`].
pub fn initial_guesses(n: usize) -> Vec<Complex64> {
    let nf = n as f64;
    (1..=n)
        .map(|j| {
            let jf = j as f64;
            Complex64::new(0.5 * (jf * PI / nf + jf * PI / (nf + 1.0)), 1.0 / nf)
        })
        .collect()
}

/// Starting points used by [`find_roots`].
///
/// The roots satisfy `theta_{n+1-j} = pi - conj(theta_j)`, so the upper half
/// reuses the mirrored guesses of the lower half and, for odd `n`, the middle
/// root starts on the symmetry axis `Re theta = pi / 2`.
pub fn newton_starting_points(n: usize) -> Vec<Complex64> {
    let base = initial_guesses(n);
    (1..=n)
        .map(|j| {
            if 2 * j == n + 1 {
                Complex64::new(FRAC_PI_2, base[j - 1].im)
            } else if 2 * j > n + 1 {
                PI - base[n - j].conj()
            } else {
                base[j - 1]
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy)]
pub struct NewtonOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 50,
        }
    }
}

/// One root of the characteristic equation.
#[derive(Debug, Clone, Copy)]
pub struct Root {
    /// 1-based index, following the ordering of the starting points.
    pub index: usize,
    pub theta: Complex64,
    /// `cos(theta)`
    pub x: Complex64,
    /// `i x`, eigenvalue of the unit-step time matrix.
    pub lambda_unit: Complex64,
    pub newton_iters: usize,
    /// `|rho(theta)|` at the accepted iterate.
    pub residual: f64,
}

#[derive(Debug, Clone)]
pub struct RootSet {
    pub n: usize,
    pub roots: Vec<Root>,
}

impl RootSet {
    pub fn max_newton_iters(&self) -> usize {
        self.roots.iter().map(|r| r.newton_iters).max().unwrap_or(0)
    }

    pub fn xs(&self) -> Vec<Complex64> {
        self.roots.iter().map(|r| r.x).collect()
    }

    pub fn max_residual(&self) -> f64 {
        self.roots.iter().map(|r| r.residual).fold(0.0, f64::max)
    }
}

fn newton_root(n: usize, j: usize, start: Complex64, opts: NewtonOptions) -> Result<Root> {
    let mut theta = start;
    let mut iters = 0;
    loop {
        if iters >= opts.max_iter {
            let (rho, _) = rho_and_derivative(theta, n);
            return Err(Error::NonConvergence {
                root: j,
                max_iter: opts.max_iter,
                residual: rho.norm(),
            });
        }
        let (rho, rho_prime) = rho_and_derivative(theta, n);
        let step = rho / rho_prime;
        if !step.re.is_finite() || !step.im.is_finite() {
            return Err(Error::NonConvergence {
                root: j,
                max_iter: opts.max_iter,
                residual: rho.norm(),
            });
        }
        theta -= step;
        iters += 1;
        let (rho, _) = rho_and_derivative(theta, n);
        let residual = rho.norm();
        if residual <= opts.tol && step.norm() <= opts.tol * theta.norm().max(1.0) {
            let x = theta.cos();
            return Ok(Root {
                index: j,
                theta,
                x,
                lambda_unit: I * x,
                newton_iters: iters,
                residual,
            });
        }
    }
}

/// Computes all `n` roots by Newton's method on `rho(theta)`.
pub fn find_roots(n: usize, opts: NewtonOptions) -> Result<RootSet> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    if !(opts.tol > 0.0) || opts.max_iter == 0 {
        return Err(Error::InvalidArgument(
            "Newton tolerance must be positive and max_iter at least 1".into(),
        ));
    }
    let roots = newton_starting_points(n)
        .into_iter()
        .enumerate()
        .map(|(k, start)| newton_root(n, k + 1, start, opts))
        .collect::<Result<Vec<_>>>()?;
    check_distinct(&roots)?;
    Ok(RootSet { n, roots })
}

fn check_distinct(roots: &[Root]) -> Result<()> {
    let mut order: Vec<usize> = (0..roots.len()).collect();
    order.sort_by(|&a, &b| roots[a].x.re.total_cmp(&roots[b].x.re));
    for (pos, &a) in order.iter().enumerate() {
        for &b in &order[pos + 1..] {
            if roots[b].x.re - roots[a].x.re > DUPLICATE_TOL {
                break;
            }
            if (roots[a].x - roots[b].x).norm() <= DUPLICATE_TOL {
                let (first, second) = (roots[a].index.min(roots[b].index), roots[a].index.max(roots[b].index));
                return Err(Error::DuplicateRoots { first, second });
            }
        }
    }
    Ok(())
}

/// `p_n'(x_j)` for `p_n(x) = U_{n-1}(x) - i T_n(x)`, via
/// `p_n'(cos theta) = -rho'(theta) / sin^2(theta)` at a root of `rho`.
pub fn p_prime_at_root(root: &Root, n: usize) -> Result<Complex64> {
    let s = root.theta.sin();
    if s.norm() < 1e-14 {
        return Err(Error::DegenerateRoot {
            root: root.index,
            sin_theta: s.norm(),
        });
    }
    let (_, rho_prime) = rho_and_derivative(root.theta, n);
    Ok(-rho_prime / (s * s))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn recurrence_small_values() {
        assert_eq!(cheb_eval(ChebKind::First, 2, c(0.0, 0.0)), c(-1.0, 0.0));
        assert_eq!(cheb_eval(ChebKind::Second, 3, c(1.0, 0.0)), c(4.0, 0.0));
        assert_eq!(cheb_eval(ChebKind::First, 2, c(0.0, 1.0)), c(-3.0, 0.0));
        assert_eq!(cheb_eval(ChebKind::First, 0, c(3.0, 2.0)), c(1.0, 0.0));
        assert_eq!(cheb_eval(ChebKind::Second, 1, c(3.0, 2.0)), c(6.0, 4.0));
    }

    #[test]
    fn second_kind_sequence_matches_pointwise() {
        let x = c(0.3, -0.7);
        let seq = cheb_second_kind_sequence(12, x);
        for (k, v) in seq.iter().enumerate() {
            assert!((v - cheb_eval(ChebKind::Second, k, x)).norm() < 1e-12);
        }
    }

    #[test]
    fn rho_at_half_pi() {
        let (rho, _) = rho_and_derivative(c(FRAC_PI_2, 0.0), 2);
        assert!((rho - c(0.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn guesses_follow_formula() {
        let g1 = initial_guesses(1);
        assert!((g1[0] - c(3.0 * PI / 4.0, 1.0)).norm() < 1e-15);
        let g2 = initial_guesses(2);
        assert!((g2[0] - c(5.0 * PI / 12.0, 0.5)).norm() < 1e-15);
        assert!((g2[1] - c(5.0 * PI / 6.0, 0.5)).norm() < 1e-15);
    }

    #[test]
    fn starting_points_are_mirror_symmetric() {
        for n in [1usize, 2, 5, 8, 33] {
            let s = newton_starting_points(n);
            for j in 0..n {
                assert!((s[j] - (PI - s[n - 1 - j].conj())).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn single_root() {
        let set = find_roots(1, NewtonOptions { tol: 1e-12, max_iter: 50 }).unwrap();
        assert!((set.roots[0].x - c(0.0, -1.0)).norm() < 1e-12);
        assert!((set.roots[0].lambda_unit - c(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn two_roots_match_quadratic() {
        let set = find_roots(2, NewtonOptions { tol: 1e-12, max_iter: 50 }).unwrap();
        assert!((set.roots[0].x - c(0.5, -0.5)).norm() < 1e-12);
        assert!((set.roots[1].x - c(-0.5, -0.5)).norm() < 1e-12);
        assert!((set.roots[0].lambda_unit - c(0.5, 0.5)).norm() < 1e-12);
        assert!((set.roots[1].lambda_unit - c(0.5, -0.5)).norm() < 1e-12);
    }

    #[test]
    fn literal_guesses_fall_into_wrong_basins() {
        // Newton from the unmirrored upper-half guesses lands on roots that
        // were already found from the lower half.
        let n = 8;
        let opts = NewtonOptions::default();
        let roots: Vec<Root> = initial_guesses(n)
            .into_iter()
            .enumerate()
            .filter_map(|(k, g)| newton_root(n, k + 1, g, opts).ok())
            .collect();
        assert!(check_distinct(&roots).is_err());
    }

    #[test]
    fn non_convergence_is_reported() {
        let err = find_roots(64, NewtonOptions { tol: 1e-10, max_iter: 2 }).unwrap_err();
        assert!(matches!(err, Error::NonConvergence { .. }));
    }

    #[test]
    fn invalid_arguments() {
        assert!(find_roots(0, NewtonOptions::default()).is_err());
        assert!(find_roots(4, NewtonOptions { tol: 0.0, max_iter: 5 }).is_err());
    }

    #[test]
    fn p_prime_single_root() {
        let set = find_roots(1, NewtonOptions { tol: 1e-12, max_iter: 50 }).unwrap();
        let d = p_prime_at_root(&set.roots[0], 1).unwrap();
        assert!((d - c(0.0, -1.0)).norm() < 1e-12);
    }

    #[test]
    fn degenerate_root_rejected() {
        let fake = Root {
            index: 1,
            theta: c(PI, 0.0),
            x: c(-1.0, 0.0),
            lambda_unit: c(0.0, -1.0),
            newton_iters: 0,
            residual: 0.0,
        };
        assert!(matches!(p_prime_at_root(&fake, 3), Err(Error::DegenerateRoot { .. })));
    }
}
