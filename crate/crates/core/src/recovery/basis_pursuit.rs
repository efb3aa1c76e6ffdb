use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::omp::least_squares;
use super::{RecoveryProblem, RecoveryResult, SolverStatus};
use crate::error::{Error, Result};
use crate::linalg::cg_normal_rows;
use crate::operator::{norm2, LinearOperator};

/// Tolerance of the inner conjugate-gradient solve on `A A^T`.
pub const INNER_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BasisPursuitSettings {
    pub tol_primal: f64,
    pub tol_dual: f64,
    pub max_iters: usize,
    /// Soft-threshold level. `None` picks `0.1 * ||A^T y||_inf`.
    pub gamma: Option<f64>,
}

impl Default for BasisPursuitSettings {
    fn default() -> Self {
        Self {
            tol_primal: 1e-7,
            tol_dual: 1e-7,
            max_iters: 10_000,
            gamma: None,
        }
    }
}

/// Projection onto `{x : A x = y}`, warm-started through `w`.
struct AffineProjector<'a> {
    op: &'a dyn LinearOperator,
    y: &'a [f64],
    w: Vec<f64>,
    rhs: Vec<f64>,
    correction: Vec<f64>,
}

impl<'a> AffineProjector<'a> {
    fn new(op: &'a dyn LinearOperator, y: &'a [f64]) -> Self {
        Self {
            op,
            y,
            w: vec![0.0; op.nrows()],
            rhs: vec![0.0; op.nrows()],
            correction: vec![0.0; op.ncols()],
        }
    }

    /// `out <- u - A^T (A A^T)^{-1} (A u - y)`.
    fn project(&mut self, u: &[f64], out: &mut [f64]) -> Result<()> {
        self.op.apply_into(u, &mut self.rhs)?;
        for (r, y) in self.rhs.iter_mut().zip(self.y) {
            *r -= y;
        }
        let m = self.op.nrows();
        cg_normal_rows(self.op, &self.rhs, &mut self.w, INNER_TOL, m)?;
        self.op.adjoint_apply_into(&self.w, &mut self.correction)?;
        for ((o, ui), c) in out.iter_mut().zip(u).zip(&self.correction) {
            *o = ui - c;
        }
        Ok(())
    }
}

fn soft_threshold(z: &[f64], gamma: f64, out: &mut [f64]) {
    for (o, v) in out.iter_mut().zip(z) {
        *o = v.signum() * (v.abs() - gamma).max(0.0);
    }
}

/// Least-squares refit of `y` on the support of `x`. Kept only when it is
/// feasible and no worse in `l1` than `fallback`.
fn polish(op: &dyn LinearOperator, y: &[f64], x: &[f64], fallback: &[f64], tol: f64) -> Result<Option<Vec<f64>>> {
    let support: Vec<usize> = (0..x.len()).filter(|&i| x[i] != 0.0).collect();
    if support.is_empty() || support.len() > op.nrows() {
        return Ok(None);
    }
    let mut atoms = DMatrix::zeros(op.nrows(), support.len());
    for (k, &c) in support.iter().enumerate() {
        atoms.column_mut(k).copy_from_slice(&op.column(c)?);
    }
    let Some(coef) = least_squares(&atoms, y) else {
        return Ok(None);
    };
    let mut out = vec![0.0; x.len()];
    for (k, &c) in support.iter().enumerate() {
        out[c] = coef[k];
    }
    let ax = op.apply(&out)?;
    let primal = ax.iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let l1 = |v: &[f64]| v.iter().map(|t| t.abs()).sum::<f64>();
    if primal <= tol && l1(&out) <= l1(fallback) + tol {
        Ok(Some(out))
    } else {
        Ok(None)
    }
}

/// Minimizes `||x||_1` subject to `A x = y` by Douglas-Rachford splitting.
///
/// Each step soft-thresholds, reflects through the affine constraint set and
/// averages. On convergence the support of the thresholded iterate is refit
/// by least squares, which lands on the exact vertex when the support is
/// right; otherwise the feasible iterate is reported.
pub fn basis_pursuit(problem: &RecoveryProblem<'_>, settings: &BasisPursuitSettings) -> Result<RecoveryResult> {
    if !(settings.tol_primal > 0.0 && settings.tol_dual > 0.0) {
        return Err(Error::Domain("basis pursuit tolerances must be positive".into()));
    }
    let op = problem.operator();
    let y = problem.y();
    let n = op.ncols();
    if y.iter().all(|v| *v == 0.0) {
        return problem.finish(vec![0.0; n], 0, SolverStatus::Converged);
    }
    let gamma = match settings.gamma {
        Some(g) if g > 0.0 => g,
        Some(g) => return Err(Error::Domain(format!("gamma must be positive, got {g}"))),
        None => {
            let aty = op.adjoint_apply(y)?;
            0.1 * aty.iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
        }
    };

    let mut proj = AffineProjector::new(op, y);
    let mut z = vec![0.0; n];
    let mut v = vec![0.0; n];
    proj.project(&vec![0.0; n], &mut z)?;
    let mut x = vec![0.0; n];
    let mut reflected = vec![0.0; n];
    let mut v_prev = z.clone();
    let mut ax = vec![0.0; op.nrows()];

    for it in 1..=settings.max_iters {
        soft_threshold(&z, gamma, &mut x);
        for ((r, xi), zi) in reflected.iter_mut().zip(&x).zip(&z) {
            *r = 2.0 * xi - zi;
        }
        proj.project(&reflected, &mut v)?;
        for ((zi, vi), xi) in z.iter_mut().zip(&v).zip(&x) {
            *zi += vi - xi;
        }
        op.apply_into(&v, &mut ax)?;
        let primal = ax.iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let change = v.iter().zip(&v_prev).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        if primal <= settings.tol_primal && change <= settings.tol_dual * norm2(&v).max(1.0) {
            let best = polish(op, y, &x, &v, settings.tol_primal)?.unwrap_or(v);
            return problem.finish(best, it, SolverStatus::Converged);
        }
        v_prev.copy_from_slice(&v);
    }
    problem.finish(v, settings.max_iters, SolverStatus::MaxIterations)
}
