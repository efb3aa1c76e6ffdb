use serde::{Deserialize, Serialize};

use super::{RecoveryProblem, RecoveryResult, SolverStatus, RESIDUAL_TOL};
use crate::error::{check_len, Result};
use crate::operator::norm2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IhtSettings {
    pub step: f64,
    pub max_iters: usize,
}

impl Default for IhtSettings {
    fn default() -> Self {
        Self {
            step: 1.0,
            max_iters: 500,
        }
    }
}

/// Keeps the `s` entries of largest magnitude (lowest index on ties) and
/// zeroes the rest.
pub fn hard_threshold(v: &mut [f64], s: usize) {
    if s >= v.len() {
        return;
    }
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&i, &j| v[j].abs().total_cmp(&v[i].abs()).then(i.cmp(&j)));
    for &i in &order[s..] {
        v[i] = 0.0;
    }
}

/// Iterative hard thresholding, `x <- H_s(x + step A^T (y - A x))`.
///
/// Starts from `start` (zero when absent). Stops once the residual is below
/// `1e-10`, flags divergence when it exceeds ten times its starting value.
pub fn iht(problem: &RecoveryProblem<'_>, settings: &IhtSettings, start: Option<&[f64]>) -> Result<RecoveryResult> {
    let s = problem.required_sparsity()?;
    let op = problem.operator();
    let (m, n) = (op.nrows(), op.ncols());
    let y = problem.y();

    let mut x = match start {
        Some(x0) => {
            check_len(n, x0.len())?;
            x0.to_vec()
        }
        None => vec![0.0; n],
    };
    let mut ax = vec![0.0; m];
    let mut r = vec![0.0; m];
    let mut grad = vec![0.0; n];
    let mut update_residual = |x: &[f64], r: &mut [f64]| -> Result<f64> {
        op.apply_into(x, &mut ax)?;
        for ((ri, yi), ai) in r.iter_mut().zip(y).zip(&ax) {
            *ri = yi - ai;
        }
        Ok(norm2(r))
    };

    let initial = update_residual(&x, &mut r)?;
    if initial < RESIDUAL_TOL {
        return problem.finish(x, 0, SolverStatus::Converged);
    }
    for it in 1..=settings.max_iters {
        op.adjoint_apply_into(&r, &mut grad)?;
        for (xi, gi) in x.iter_mut().zip(&grad) {
            *xi += settings.step * gi;
        }
        hard_threshold(&mut x, s);
        let res = update_residual(&x, &mut r)?;
        if res < RESIDUAL_TOL {
            return problem.finish(x, it, SolverStatus::Converged);
        }
        if !res.is_finite() || res > 10.0 * initial {
            return problem.finish(x, it, SolverStatus::Diverged);
        }
    }
    problem.finish(x, settings.max_iters, SolverStatus::MaxIterations)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::LinearOperator;
    use crate::rip::delta_exact;
    use crate::sparse_city::{SparseCityMatrix, ThetaDistribution};

    fn sparse_city(m: usize, n: usize, b: usize, seed: u64) -> SparseCityMatrix {
        SparseCityMatrix::construct(m, n, b, seed, ThetaDistribution::four_point(true)).unwrap()
    }

    #[test]
    fn threshold_keeps_largest_with_low_index_ties() {
        let mut v = vec![1.0, -3.0, 2.0, 3.0, -2.0];
        hard_threshold(&mut v, 3);
        assert_eq!(v, vec![0.0, -3.0, 2.0, 3.0, 0.0]);
        let mut w = vec![1.0, 1.0, 1.0];
        hard_threshold(&mut w, 1);
        assert_eq!(w, vec![1.0, 0.0, 0.0]);
        let mut u = vec![5.0, 4.0];
        hard_threshold(&mut u, 3);
        assert_eq!(u, vec![5.0, 4.0]);
    }

    #[test]
    fn correct_start_is_a_fixed_point() {
        let a = sparse_city(32, 8, 8, 2);
        let mut x = vec![0.0; 64];
        x[3] = 1.0;
        x[40] = -1.0;
        let p = RecoveryProblem::from_ground_truth(&a, x.clone()).unwrap().with_sparsity(2);
        let r = iht(&p, &IhtSettings::default(), Some(&x)).unwrap();
        assert!(r.iterations <= 1);
        assert_eq!(r.x_hat, x);
        assert!(r.success);
    }

    #[test]
    fn one_sparse_recovery() {
        for seed in 0..10 {
            let a = sparse_city(32, 8, 8, seed);
            let mut x = vec![0.0; 64];
            x[(seed as usize * 7) % 64] = 1.0;
            let p = RecoveryProblem::from_ground_truth(&a, x).unwrap().with_sparsity(1);
            let r = iht(&p, &IhtSettings::default(), None).unwrap();
            assert!(r.success, "seed {seed}: {:?}", r.status);
        }
    }

    #[test]
    fn zero_step_makes_no_progress() {
        let a = sparse_city(16, 4, 4, 1);
        let mut x = vec![0.0; 16];
        x[0] = 1.0;
        let p = RecoveryProblem::from_ground_truth(&a, x).unwrap().with_sparsity(1);
        let settings = IhtSettings { step: 0.0, max_iters: 25 };
        let r = iht(&p, &settings, None).unwrap();
        assert_eq!(r.status, SolverStatus::MaxIterations);
        assert_eq!(r.iterations, 25);
        assert!(!r.success);
    }

    #[test]
    fn huge_step_diverges() {
        let a = sparse_city(16, 4, 4, 1);
        let mut x = vec![0.0; 16];
        x[0] = 1.0;
        x[5] = 1.0;
        let p = RecoveryProblem::from_ground_truth(&a, x).unwrap().with_sparsity(2);
        let r = iht(&p, &IhtSettings { step: 50.0, max_iters: 100 }, None).unwrap();
        assert_eq!(r.status, SolverStatus::Diverged);
    }

    #[test]
    fn fixed_point_when_rip_is_small() {
        // check the delta condition at small size, then start at the truth
        let a = sparse_city(64, 16, 2, 3);
        assert!(delta_exact(&a, 4).unwrap().value < 1.0);
        let mut x = vec![0.0; 32];
        x[1] = 0.5;
        x[20] = -2.0;
        let p = RecoveryProblem::from_ground_truth(&a, x.clone()).unwrap().with_sparsity(2);
        let r = iht(&p, &IhtSettings { step: 1.0, max_iters: 5 }, Some(&x)).unwrap();
        assert_eq!(r.x_hat, x);
        let y = a.apply(&x).unwrap();
        assert_eq!(p.y(), y.as_slice());
    }
}
