use nalgebra::{DMatrix, DVector};

use super::{RecoveryProblem, RecoveryResult, SolverStatus, RESIDUAL_TOL};
use crate::error::Result;
use crate::operator::norm2;

/// Relative pivot size below which the support least-squares is rank deficient.
const RANK_TOL: f64 = 1e-12;

/// Least-squares coefficients of `y` on the columns of `atoms`, or `None`
/// when the columns are numerically dependent.
pub(super) fn least_squares(atoms: &DMatrix<f64>, y: &[f64]) -> Option<DVector<f64>> {
    let qr = atoms.clone().qr();
    let r = qr.r();
    let diag_max = r.diagonal().iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if diag_max == 0.0 || r.diagonal().iter().any(|v| v.abs() <= RANK_TOL * diag_max) {
        return None;
    }
    let qty = qr.q().tr_mul(&DVector::from_column_slice(y));
    r.solve_upper_triangular(&qty)
}

/// Orthogonal matching pursuit.
///
/// Picks the column with the largest `|<a_i, r>|` (lowest index on ties),
/// refits by least squares on the selected columns and stops after `s`
/// atoms or once the residual drops below `1e-10`.
pub fn omp(problem: &RecoveryProblem<'_>) -> Result<RecoveryResult> {
    let s = problem.required_sparsity()?;
    let op = problem.operator();
    let (m, n) = (op.nrows(), op.ncols());
    let y = problem.y();

    let mut x = vec![0.0; n];
    let mut residual = y.to_vec();
    if norm2(&residual) < RESIDUAL_TOL {
        return problem.finish(x, 0, SolverStatus::Converged);
    }

    let mut selected: Vec<usize> = Vec::with_capacity(s);
    let mut atoms = DMatrix::<f64>::zeros(m, 0);
    let mut coeffs = DVector::<f64>::zeros(0);
    let mut corr = vec![0.0; n];
    let mut status = SolverStatus::Converged;
    let mut iterations = 0;

    while selected.len() < s {
        op.adjoint_apply_into(&residual, &mut corr)?;
        let mut best: Option<(usize, f64)> = None;
        for (i, c) in corr.iter().enumerate() {
            if selected.contains(&i) {
                continue;
            }
            if best.is_none_or(|(_, v)| c.abs() > v) {
                best = Some((i, c.abs()));
            }
        }
        let Some((atom, _)) = best else { break };
        iterations += 1;

        let column = op.column(atom)?;
        let k = atoms.ncols();
        let mut candidate = atoms.clone().insert_column(k, 0.0);
        candidate.column_mut(k).copy_from_slice(&column);
        let Some(z) = least_squares(&candidate, y) else {
            status = SolverStatus::RankDeficient;
            break;
        };
        selected.push(atom);
        atoms = candidate;
        coeffs = z;

        let fit = &atoms * &coeffs;
        for (r, (yi, fi)) in residual.iter_mut().zip(y.iter().zip(fit.iter())) {
            *r = yi - fi;
        }
        if norm2(&residual) < RESIDUAL_TOL {
            break;
        }
    }

    for (&i, &c) in selected.iter().zip(coeffs.iter()) {
        x[i] = c;
    }
    problem.finish(x, iterations, status)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{CountingOperator, DenseOperator, LinearOperator};
    use crate::recovery::SUCCESS_THRESHOLD;
    use crate::rng::{self, stream};
    use crate::sparse_city::{SparseCityMatrix, ThetaDistribution};

    fn sparse_city(m: usize, n: usize, b: usize, seed: u64) -> SparseCityMatrix {
        SparseCityMatrix::construct(m, n, b, seed, ThetaDistribution::four_point(true)).unwrap()
    }

    #[test]
    fn single_atom_recovered() {
        let a = sparse_city(32, 8, 8, 4);
        // independent oracle: dense least squares on every single column
        let dense = a.to_dense().unwrap();
        for c in [0, 17, 63] {
            let mut x = vec![0.0; 64];
            x[c] = 1.0;
            let y = a.apply(&x).unwrap();
            let best = (0..64)
                .map(|j| {
                    let col = dense.column(j);
                    let coef = col.dot(&DVector::from_column_slice(&y)) / col.norm_squared();
                    let res = (DVector::from_column_slice(&y) - col * coef).norm();
                    (j, res)
                })
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .unwrap();
            assert_eq!(best.0, c);

            let p = RecoveryProblem::from_ground_truth(&a, x).unwrap().with_sparsity(1);
            let r = omp(&p).unwrap();
            assert_eq!(r.support, vec![c]);
            assert!(r.relative_error.unwrap() < 1e-10);
            assert_eq!(r.iterations, 1);
        }
    }

    #[test]
    fn zero_measurement() {
        let a = sparse_city(16, 4, 4, 1);
        let p = RecoveryProblem::new(&a, vec![0.0; 16]).unwrap().with_sparsity(3);
        let r = omp(&p).unwrap();
        assert_eq!(r.iterations, 0);
        assert!(r.x_hat.iter().all(|&v| v == 0.0));
        assert_eq!(r.status, SolverStatus::Converged);
    }

    #[test]
    fn sparsity_validation() {
        let a = sparse_city(16, 4, 4, 1);
        let p = RecoveryProblem::new(&a, vec![1.0; 16]).unwrap();
        assert!(omp(&p).is_err());
        let p = RecoveryProblem::new(&a, vec![1.0; 16]).unwrap().with_sparsity(0);
        assert!(omp(&p).is_err());
        let p = RecoveryProblem::new(&a, vec![1.0; 16]).unwrap().with_sparsity(17);
        assert!(omp(&p).is_err());
        assert!(RecoveryProblem::new(&a, vec![1.0; 15]).is_err());
    }

    #[test]
    fn orthonormal_columns_recover_every_support() {
        let a = SparseCityMatrix::with_constant_theta(8, 8, 1, 1.0).unwrap();
        for mask in 1u32..256 {
            let x: Vec<f64> = (0..8).map(|i| if mask >> i & 1 == 1 { 1.0 + i as f64 } else { 0.0 }).collect();
            let s = mask.count_ones() as usize;
            let p = RecoveryProblem::from_ground_truth(&a, x).unwrap().with_sparsity(s);
            let r = omp(&p).unwrap();
            assert!(r.relative_error.unwrap() < 1e-14, "mask {mask}");
        }
    }

    #[test]
    fn rank_deficiency_is_flagged() {
        // y has a part outside the column span; once the first copy is in,
        // only its duplicate is left to pick
        let d = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 0.0]);
        let op = DenseOperator::new(d);
        let p = RecoveryProblem::new(&op, vec![1.0, 1.0]).unwrap().with_sparsity(2);
        let r = omp(&p).unwrap();
        assert_eq!(r.status, SolverStatus::RankDeficient);
        assert_eq!(r.support, vec![0]);
        assert!(!r.success);
    }

    #[test]
    fn desk_scale_success_rate() {
        let mut wins = 0;
        for seed in 0..100u64 {
            let a = sparse_city(32, 8, 8, seed);
            let mut r = stream(rng::derive_seed(seed, &[7]));
            let support = rng::sample_subset(&mut r, 64, 3);
            let mut x = vec![0.0; 64];
            for &i in &support {
                x[i] = rng::sign(&mut r);
            }
            let counted = CountingOperator::new(&a);
            let p = RecoveryProblem::from_ground_truth(&counted, x).unwrap().with_sparsity(3);
            let res = omp(&p).unwrap();
            assert_eq!(counted.usage().densifications, 0);
            if res.relative_error.unwrap() <= SUCCESS_THRESHOLD {
                wins += 1;
            }
        }
        assert!(wins >= 95, "{wins}/100");
    }
}
