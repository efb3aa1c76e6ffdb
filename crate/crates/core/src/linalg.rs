//! Small dense kernels used by the diagnostics and solvers.

use nalgebra::DMatrix;

use crate::error::Result;
use crate::operator::{dot, LinearOperator};

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
///
/// Meant for the small principal submatrices enumerated by the RIP
/// diagnostics; cost is `O(n^3)` per sweep.
pub fn symmetric_eigenvalues(a: &DMatrix<f64>) -> Vec<f64> {
    let n = a.nrows();
    debug_assert_eq!(n, a.ncols());
    let mut w = a.clone();
    let scale = w.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    if n <= 1 || scale == 0.0 {
        let mut d: Vec<f64> = (0..n).map(|i| w[(i, i)]).collect();
        d.sort_by(f64::total_cmp);
        return d;
    }
    for _sweep in 0..64 {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += w[(p, q)] * w[(p, q)];
            }
        }
        if off.sqrt() <= 1e-17 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = w[(p, q)];
                if apq.abs() <= f64::MIN_POSITIVE {
                    continue;
                }
                let theta = (w[(q, q)] - w[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = (t * t + 1.0).sqrt().recip();
                let s = t * c;
                for k in 0..n {
                    let akp = w[(k, p)];
                    let akq = w[(k, q)];
                    w[(k, p)] = c * akp - s * akq;
                    w[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = w[(p, k)];
                    let aqk = w[(q, k)];
                    w[(p, k)] = c * apk - s * aqk;
                    w[(q, k)] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut d: Vec<f64> = (0..n).map(|i| w[(i, i)]).collect();
    d.sort_by(f64::total_cmp);
    d
}

/// Principal submatrix `M[support, support]`.
pub fn principal_submatrix(m: &DMatrix<f64>, support: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(support.len(), support.len(), |i, j| m[(support[i], support[j])])
}

/// Largest `|M_ij - M_ji|`.
pub fn asymmetry(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgOutcome {
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
}

/// Conjugate gradients on `A A^T w = rhs` using only `apply`/`adjoint_apply`.
///
/// `w` holds the starting guess and receives the solution. Stops when
/// `||rhs - A A^T w|| <= tol * max(1, ||rhs||)` or after `max_iters`.
pub fn cg_normal_rows<A: LinearOperator + ?Sized>(
    op: &A,
    rhs: &[f64],
    w: &mut [f64],
    tol: f64,
    max_iters: usize,
) -> Result<CgOutcome> {
    let m = op.nrows();
    let mut tmp_n = vec![0.0; op.ncols()];
    let mut ap = vec![0.0; m];
    let mut normal = |v: &[f64], out: &mut [f64]| -> Result<()> {
        op.adjoint_apply_into(v, &mut tmp_n)?;
        op.apply_into(&tmp_n, out)
    };

    normal(w, &mut ap)?;
    let mut r: Vec<f64> = rhs.iter().zip(&ap).map(|(b, a)| b - a).collect();
    let target = tol * dot(rhs, rhs).sqrt().max(1.0);
    let mut rr = dot(&r, &r);
    if rr.sqrt() <= target {
        return Ok(CgOutcome {
            iterations: 0,
            residual: rr.sqrt(),
            converged: true,
        });
    }
    let mut p = r.clone();
    for it in 1..=max_iters {
        normal(&p, &mut ap)?;
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            return Ok(CgOutcome {
                iterations: it,
                residual: rr.sqrt(),
                converged: false,
            });
        }
        let alpha = rr / pap;
        for i in 0..m {
            w[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rr_new = dot(&r, &r);
        if rr_new.sqrt() <= target {
            return Ok(CgOutcome {
                iterations: it,
                residual: rr_new.sqrt(),
                converged: true,
            });
        }
        let beta = rr_new / rr;
        rr = rr_new;
        for i in 0..m {
            p[i] = r[i] + beta * p[i];
        }
    }
    Ok(CgOutcome {
        iterations: max_iters,
        residual: rr.sqrt(),
        converged: false,
    })
}

/// `C(n, k)` in `u128`, saturating.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// Lexicographic enumeration of the `k`-subsets of `0..n`.
#[derive(Debug, Clone)]
pub struct Combinations {
    n: usize,
    current: Option<Vec<usize>>,
}

impl Combinations {
    pub fn new(n: usize, k: usize) -> Self {
        let current = if k <= n { Some((0..k).collect()) } else { None };
        Self { n, current }
    }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let out = self.current.clone()?;
        let k = out.len();
        let mut next = out.clone();
        let mut i = k;
        loop {
            if i == 0 {
                self.current = None;
                break;
            }
            i -= 1;
            if next[i] < self.n - k + i {
                next[i] += 1;
                for j in (i + 1)..k {
                    next[j] = next[j - 1] + 1;
                }
                self.current = Some(next);
                break;
            }
        }
        Some(out)
    }
}
