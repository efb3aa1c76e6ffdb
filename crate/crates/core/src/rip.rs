//! Restricted-isometry diagnostics.
//!
//! The restricted norm of a symmetric `N x N` matrix `M` is
//! `sup |<M x, y>|` over unit `x`, `y` supported on one common set `Gamma`
//! with `|Gamma| <= s`, i.e. the largest spectral norm of an `s x s`
//! principal submatrix (principal submatrix norms only grow with the
//! support, so only `|Gamma| = s` needs enumerating). Applied to
//! `M = I - A^T A` it gives the RIP constant `delta_s`.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{asymmetry, binomial, principal_submatrix, symmetric_eigenvalues, Combinations};
use crate::operator::{LinearOperator, DENSE_ENTRY_LIMIT};
use crate::rng::{derive_seed, sample_subset, stream};
use crate::sparse_city::{SparseCityMatrix, ThetaDistribution};

/// Default cap on the number of supports enumerated exactly.
pub const ENUMERATION_BUDGET: u128 = 1_000_000;

const SYMMETRY_TOL: f64 = 1e-10;
const FORMULA_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RipMethod {
    Exact,
    MonteCarlo,
}

impl RipMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            RipMethod::Exact => "exact",
            RipMethod::MonteCarlo => "monte_carlo",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RipReport {
    pub s: usize,
    pub value: f64,
    pub method: RipMethod,
    pub supports_evaluated: u64,
    pub extremal_support: Vec<usize>,
    pub in_theorem_regime: bool,
}

/// Candidate maximum; larger value wins, then the lexicographically smaller support.
#[derive(Debug, Clone)]
struct Candidate {
    value: f64,
    support: Vec<usize>,
}

impl Candidate {
    fn beats(&self, other: &Candidate) -> bool {
        self.value > other.value || (self.value == other.value && self.support < other.support)
    }
}

fn best_of(cands: impl Iterator<Item = Candidate>) -> Option<Candidate> {
    cands.fold(None, |best: Option<Candidate>, c| match best {
        Some(b) if !c.beats(&b) => Some(b),
        _ => Some(c),
    })
}

fn check_budget(n: usize, s: usize, budget: u128) -> Result<u128> {
    let required = binomial(n, s);
    if required > budget {
        return Err(Error::Budget { required, budget });
    }
    Ok(required)
}

fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    let e = symmetric_eigenvalues(m);
    match (e.first(), e.last()) {
        (Some(lo), Some(hi)) => lo.abs().max(hi.abs()),
        _ => 0.0,
    }
}

/// Restricted norm of a symmetric matrix, with the maximizing support.
pub fn restricted_norm_exact(m: &DMatrix<f64>, s: usize) -> Result<(f64, Vec<usize>)> {
    restricted_norm_exact_with_budget(m, s, ENUMERATION_BUDGET)
}

pub fn restricted_norm_exact_with_budget(
    m: &DMatrix<f64>,
    s: usize,
    budget: u128,
) -> Result<(f64, Vec<usize>)> {
    if m.nrows() != m.ncols() {
        return Err(Error::InvalidDimensions(format!(
            "restricted norm needs a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let gap = asymmetry(m);
    if gap > SYMMETRY_TOL {
        return Err(Error::Asymmetric(gap));
    }
    let s = s.min(m.nrows());
    if s == 0 {
        return Ok((0.0, Vec::new()));
    }
    check_budget(m.nrows(), s, budget)?;
    let supports: Vec<Vec<usize>> = Combinations::new(m.nrows(), s).collect();
    let scored: Vec<Candidate> = supports
        .into_par_iter()
        .map(|support| Candidate {
            value: spectral_norm(&principal_submatrix(m, &support)),
            support,
        })
        .collect();
    let best = best_of(scored.into_iter()).expect("at least one support");
    Ok((best.value, best.support))
}

/// Exact `delta_s = ||I - A^T A||_Gamma` by enumerating every size-`s` support.
///
/// Each support is scored twice, as the spectral norm of `(I - G)_Gamma` and
/// as `max(|lambda_min - 1|, |lambda_max - 1|)` of `G_Gamma`; the two must
/// agree to `1e-10`.
pub fn delta_exact<A: LinearOperator + ?Sized>(a: &A, s: usize) -> Result<RipReport> {
    delta_exact_with_budget(a, s, ENUMERATION_BUDGET)
}

pub fn delta_exact_with_budget<A: LinearOperator + ?Sized>(
    a: &A,
    s: usize,
    budget: u128,
) -> Result<RipReport> {
    let n = a.ncols();
    let s = s.min(n);
    let in_theorem_regime = a.nrows() <= n;
    if s == 0 {
        return Ok(RipReport {
            s,
            value: 0.0,
            method: RipMethod::Exact,
            supports_evaluated: 0,
            extremal_support: Vec::new(),
            in_theorem_regime,
        });
    }
    let required = check_budget(n, s, budget)?;
    if n.saturating_mul(n) > DENSE_ENTRY_LIMIT {
        return Err(Error::Size {
            requested: n * n,
            threshold: DENSE_ENTRY_LIMIT,
        });
    }
    let dense = a.to_dense()?;
    let gram = dense.tr_mul(&dense);
    let deviation = DMatrix::identity(n, n) - &gram;

    let supports: Vec<Vec<usize>> = Combinations::new(n, s).collect();
    let scored: Vec<(Candidate, f64)> = supports
        .into_par_iter()
        .map(|support| {
            let by_norm = spectral_norm(&principal_submatrix(&deviation, &support));
            let e = symmetric_eigenvalues(&principal_submatrix(&gram, &support));
            let by_eigs = (e[0] - 1.0).abs().max((e[e.len() - 1] - 1.0).abs());
            (
                Candidate {
                    value: by_norm,
                    support,
                },
                (by_norm - by_eigs).abs(),
            )
        })
        .collect();
    let worst_gap = scored.iter().fold(0.0f64, |acc, (_, g)| acc.max(*g));
    if worst_gap > FORMULA_TOL {
        return Err(Error::Numerical(format!(
            "restricted-norm and eigenvalue formulations differ by {worst_gap:e}"
        )));
    }
    let best = best_of(scored.into_iter().map(|(c, _)| c)).expect("at least one support");
    Ok(RipReport {
        s,
        value: best.value,
        method: RipMethod::Exact,
        supports_evaluated: required as u64,
        extremal_support: best.support,
        in_theorem_regime,
    })
}

/// `max |lambda - 1|` over the spectrum of `A_Gamma^T A_Gamma`, built from columns.
fn support_deviation<A: LinearOperator + ?Sized>(a: &A, support: &[usize]) -> Result<f64> {
    let cols = support
        .iter()
        .map(|&c| a.column(c))
        .collect::<Result<Vec<_>>>()?;
    let k = support.len();
    let gram = DMatrix::from_fn(k, k, |i, j| crate::operator::dot(&cols[i], &cols[j]));
    let e = symmetric_eigenvalues(&gram);
    Ok((e[0] - 1.0).abs().max((e[k - 1] - 1.0).abs()))
}

/// Lower bound on `delta_s`: the maximum over `trials` uniformly random
/// supports, using only column products. Trial `t` draws its support from
/// the stream `derive_seed(seed, [t])`, so more trials never lower the value.
/// When `trials` covers every support, all of them are evaluated instead.
pub fn delta_monte_carlo<A: LinearOperator + ?Sized>(
    a: &A,
    s: usize,
    trials: usize,
    seed: u64,
) -> Result<RipReport> {
    if trials == 0 {
        return Err(Error::InvalidDimensions("trials must be at least 1".into()));
    }
    let n = a.ncols();
    let s = s.min(n);
    let in_theorem_regime = a.nrows() <= n;
    if s == 0 {
        return Ok(RipReport {
            s,
            value: 0.0,
            method: RipMethod::MonteCarlo,
            supports_evaluated: 0,
            extremal_support: Vec::new(),
            in_theorem_regime,
        });
    }
    let total = binomial(n, s);
    let supports: Vec<Vec<usize>> = if total <= trials as u128 {
        Combinations::new(n, s).collect()
    } else {
        (0..trials)
            .map(|t| sample_subset(&mut stream(derive_seed(seed, &[t as u64])), n, s))
            .collect()
    };
    let evaluated = supports.len() as u64;
    let scored = supports
        .into_par_iter()
        .map(|support| {
            support_deviation(a, &support).map(|value| Candidate { value, support })
        })
        .collect::<Result<Vec<_>>>()?;
    let best = best_of(scored.into_iter()).expect("at least one support");
    Ok(RipReport {
        s,
        value: best.value,
        method: RipMethod::MonteCarlo,
        supports_evaluated: evaluated,
        extremal_support: best.support,
        in_theorem_regime,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridPoint {
    pub m: usize,
    pub n: usize,
    pub b: usize,
}

/// Settings shared by [`expectation_scan`] and [`tail_estimate`].
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorConfig {
    pub dist: ThetaDistribution,
    /// Largest support count evaluated exactly; above it the Monte-Carlo
    /// estimator runs instead.
    pub budget: u128,
    /// Supports sampled per matrix by the Monte-Carlo fallback.
    pub mc_trials: usize,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            dist: ThetaDistribution::four_point(true),
            budget: ENUMERATION_BUDGET,
            mc_trials: 2000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub m: usize,
    pub n: usize,
    pub b: usize,
    pub s: usize,
    pub trials: usize,
    pub mean_value: f64,
    pub std_value: f64,
    /// `sqrt(s log^2(s) log(m b) log(n b) / m)`, natural logarithms.
    pub bound_proxy: f64,
    pub method: RipMethod,
    pub in_theorem_regime: bool,
    /// Set for `s = 0`, where the value is zero by convention.
    pub degenerate: bool,
}

pub fn bound_proxy(m: usize, n: usize, b: usize, s: usize) -> f64 {
    if s == 0 {
        return 0.0;
    }
    let ls = (s as f64).ln();
    let v = s as f64 * ls * ls * ((m * b) as f64).ln() * ((n * b) as f64).ln() / m as f64;
    v.max(0.0).sqrt()
}

/// Seed of the `t`-th matrix drawn at a grid point.
pub fn trial_matrix_seed(seed: u64, p: GridPoint, t: usize) -> u64 {
    derive_seed(seed, &[p.m as u64, p.n as u64, p.b as u64, t as u64])
}

fn pick_method(p: GridPoint, s: usize, cfg: &EstimatorConfig) -> RipMethod {
    let n = p.n * p.b;
    let dense_ok = n.saturating_mul(n) <= DENSE_ENTRY_LIMIT && p.m.saturating_mul(n) <= DENSE_ENTRY_LIMIT;
    if dense_ok && binomial(n, s) <= cfg.budget {
        RipMethod::Exact
    } else {
        RipMethod::MonteCarlo
    }
}

/// `delta_s` of the `t`-th matrix at a grid point.
fn trial_estimate(p: GridPoint, s: usize, seed: u64, t: usize, cfg: &EstimatorConfig) -> Result<(f64, RipMethod)> {
    let matrix_seed = trial_matrix_seed(seed, p, t);
    let a = SparseCityMatrix::construct(p.m, p.n, p.b, matrix_seed, cfg.dist.clone())?;
    let method = pick_method(p, s, cfg);
    let report = match method {
        RipMethod::Exact => delta_exact_with_budget(&a, s, cfg.budget)?,
        RipMethod::MonteCarlo => delta_monte_carlo(&a, s, cfg.mc_trials, derive_seed(matrix_seed, &[1]))?,
    };
    Ok((report.value, method))
}

/// Mean and spread of `delta_s` over `trials` independent matrices per grid point.
pub fn expectation_scan(
    grid: &[GridPoint],
    s: usize,
    trials: usize,
    seed: u64,
    cfg: &EstimatorConfig,
) -> Result<Vec<ScalingRow>> {
    if trials == 0 {
        return Err(Error::InvalidDimensions("trials must be at least 1".into()));
    }
    grid.iter()
        .map(|&p| {
            let method = pick_method(p, s, cfg);
            let base = ScalingRow {
                m: p.m,
                n: p.n,
                b: p.b,
                s,
                trials,
                mean_value: 0.0,
                std_value: 0.0,
                bound_proxy: bound_proxy(p.m, p.n, p.b, s),
                method,
                in_theorem_regime: p.m <= p.n * p.b,
                degenerate: s == 0,
            };
            if s == 0 {
                // still validates the dimensions
                SparseCityMatrix::construct(p.m, p.n, p.b, 0, cfg.dist.clone())?;
                return Ok(base);
            }
            let values = (0..trials)
                .into_par_iter()
                .map(|t| trial_estimate(p, s, seed, t, cfg).map(|(v, _)| v))
                .collect::<Result<Vec<f64>>>()?;
            let mean = values.iter().sum::<f64>() / trials as f64;
            let var = if trials > 1 {
                values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (trials - 1) as f64
            } else {
                0.0
            };
            Ok(ScalingRow {
                mean_value: mean,
                std_value: var.sqrt(),
                ..base
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailEstimate {
    pub m: usize,
    pub n: usize,
    pub b: usize,
    pub s: usize,
    pub delta: f64,
    pub trials: usize,
    pub exceedances: usize,
    /// Fraction of matrices whose `delta_s` estimate is at least `delta`.
    pub probability: f64,
    pub method: RipMethod,
}

pub fn tail_estimate(
    p: GridPoint,
    s: usize,
    delta: f64,
    trials: usize,
    seed: u64,
    cfg: &EstimatorConfig,
) -> Result<TailEstimate> {
    if trials == 0 {
        return Err(Error::InvalidDimensions("trials must be at least 1".into()));
    }
    let values = (0..trials)
        .into_par_iter()
        .map(|t| {
            if s == 0 {
                Ok(0.0)
            } else {
                trial_estimate(p, s, seed, t, cfg).map(|(v, _)| v)
            }
        })
        .collect::<Result<Vec<f64>>>()?;
    let exceedances = values.iter().filter(|&&v| v >= delta).count();
    Ok(TailEstimate {
        m: p.m,
        n: p.n,
        b: p.b,
        s,
        delta,
        trials,
        exceedances,
        probability: exceedances as f64 / trials as f64,
        method: pick_method(p, s, cfg),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::DenseOperator;

    fn matrix(m: usize, n: usize, b: usize, seed: u64) -> SparseCityMatrix {
        SparseCityMatrix::construct(m, n, b, seed, ThetaDistribution::four_point(true)).unwrap()
    }

    /// Independent route: every support of size 1..=s, nalgebra's solver.
    fn brute_force(m: &DMatrix<f64>, s: usize) -> f64 {
        let n = m.nrows();
        let mut best = 0.0f64;
        for size in 1..=s.min(n) {
            for mask in 0u32..(1 << n) {
                if mask.count_ones() as usize != size {
                    continue;
                }
                let idx: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
                let sub = DMatrix::from_fn(size, size, |i, j| m[(idx[i], idx[j])]);
                let eig = sub.symmetric_eigen().eigenvalues;
                best = best.max(eig.iter().fold(0.0f64, |a, v| a.max(v.abs())));
            }
        }
        best
    }

    #[test]
    fn restricted_norm_examples() {
        assert_eq!(restricted_norm_exact(&DMatrix::zeros(4, 4), 2).unwrap().0, 0.0);
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![0.1, -0.3, 0.2]));
        let (v, sup) = restricted_norm_exact(&d, 1).unwrap();
        assert!((v - 0.3).abs() < 1e-15);
        assert_eq!(sup, vec![1]);

        let mut r = stream(17);
        let b = DMatrix::from_fn(6, 6, |_, _| crate::rng::unit_f64(&mut r) - 0.5);
        let sym = &b + b.transpose();
        let (v, sup) = restricted_norm_exact(&sym, 2).unwrap();
        assert_eq!(sup.len(), 2);
        assert!((v - brute_force(&sym, 2)).abs() < 1e-10);
    }

    #[test]
    fn restricted_norm_errors() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        assert!(matches!(restricted_norm_exact(&a, 1), Err(Error::Asymmetric(_))));
        let big = DMatrix::<f64>::identity(40, 40);
        assert!(matches!(
            restricted_norm_exact_with_budget(&big, 5, 1000),
            Err(Error::Budget { .. })
        ));
        assert!(restricted_norm_exact(&DMatrix::zeros(2, 3), 1).is_err());
    }

    #[test]
    fn orthonormal_columns_have_zero_delta() {
        let a = SparseCityMatrix::with_constant_theta(8, 8, 1, 1.0).unwrap();
        for s in 0..=8 {
            assert!(delta_exact(&a, s).unwrap().value < 1e-12);
        }
    }

    #[test]
    fn order_one_is_column_norm_deviation() {
        let a = matrix(16, 4, 3, 9);
        let d = a.to_dense().unwrap();
        let expect = d
            .column_iter()
            .map(|c| (c.norm_squared() - 1.0).abs())
            .fold(0.0f64, f64::max);
        let r = delta_exact(&a, 1).unwrap();
        assert!((r.value - expect).abs() < 1e-12);
        assert_eq!(r.supports_evaluated, 12);
    }

    #[test]
    fn exact_matches_brute_force() {
        let a = matrix(16, 4, 2, 2024);
        let d = a.to_dense().unwrap();
        let dev = DMatrix::identity(8, 8) - d.tr_mul(&d);
        let r = delta_exact(&a, 2).unwrap();
        assert_eq!(r.supports_evaluated, 28);
        assert!((r.value - brute_force(&dev, 2)).abs() < 1e-10);
        assert!(!r.in_theorem_regime);
    }

    #[test]
    fn all_sizes_agree_with_top_size() {
        // enumerating only |Gamma| = s equals enumerating all |Gamma| <= s
        let a = matrix(8, 2, 3, 5);
        let d = a.to_dense().unwrap();
        let dev = DMatrix::identity(6, 6) - d.tr_mul(&d);
        for s in 1..=6 {
            let (v, _) = restricted_norm_exact(&dev, s).unwrap();
            assert!((v - brute_force(&dev, s)).abs() < 1e-10);
        }
    }

    #[test]
    fn monotone_in_s() {
        for seed in 0..5 {
            let a = matrix(8, 4, 3, seed);
            let mut prev = 0.0;
            for s in 0..=12 {
                let v = delta_exact(&a, s).unwrap().value;
                assert!(v >= prev - 1e-12);
                prev = v;
            }
        }
    }

    #[test]
    fn monte_carlo_bounds() {
        for seed in 0..20 {
            let a = matrix(16, 8, 2, seed);
            let exact = delta_exact(&a, 3).unwrap();
            let mc = delta_monte_carlo(&a, 3, 50, seed).unwrap();
            assert_eq!(mc.method, RipMethod::MonteCarlo);
            assert!(mc.value <= exact.value + 1e-12);
        }
        let a = matrix(8, 4, 2, 1);
        let exhaustive = delta_monte_carlo(&a, 2, 1000, 0).unwrap();
        let exact = delta_exact(&a, 2).unwrap();
        assert!((exhaustive.value - exact.value).abs() < 1e-12);
        assert_eq!(exhaustive.supports_evaluated, 28);

        let a = matrix(32, 16, 4, 3);
        let one = delta_monte_carlo(&a, 3, 1, 11).unwrap();
        let many = delta_monte_carlo(&a, 3, 1000, 11).unwrap();
        assert!(many.value >= one.value);
        assert!(delta_monte_carlo(&a, 3, 0, 11).is_err());
    }

    #[test]
    fn monte_carlo_works_on_dense_operators() {
        let op = DenseOperator::new(DMatrix::identity(5, 5) * 2.0);
        let r = delta_monte_carlo(&op, 2, 3, 0).unwrap();
        assert!((r.value - 3.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_s_zero() {
        let cfg = EstimatorConfig::default();
        let rows = expectation_scan(&[GridPoint { m: 16, n: 4, b: 2 }], 0, 3, 1, &cfg).unwrap();
        assert_eq!(rows[0].mean_value, 0.0);
        assert!(rows[0].degenerate);
        let a = matrix(8, 4, 2, 0);
        assert_eq!(delta_exact(&a, 0).unwrap().value, 0.0);
    }

    #[test]
    fn scan_is_reproducible() {
        let cfg = EstimatorConfig::default();
        let grid = [GridPoint { m: 16, n: 4, b: 2 }];
        let a = expectation_scan(&grid, 2, 2, 99, &cfg).unwrap();
        let b = expectation_scan(&grid, 2, 2, 99, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a[0].method, RipMethod::Exact);
    }

    #[test]
    fn scan_falls_back_to_monte_carlo() {
        let cfg = EstimatorConfig {
            budget: 10,
            mc_trials: 20,
            ..EstimatorConfig::default()
        };
        let rows = expectation_scan(&[GridPoint { m: 16, n: 4, b: 2 }], 2, 2, 5, &cfg).unwrap();
        assert_eq!(rows[0].method, RipMethod::MonteCarlo);
        assert!(rows[0].mean_value > 0.0);
    }

    #[test]
    fn tail_extremes() {
        let cfg = EstimatorConfig::default();
        let p = GridPoint { m: 16, n: 4, b: 2 };
        assert_eq!(tail_estimate(p, 2, 0.0, 20, 3, &cfg).unwrap().probability, 1.0);
        assert_eq!(tail_estimate(p, 2, 2.0, 20, 3, &cfg).unwrap().probability, 0.0);
        assert_eq!(
            tail_estimate(p, 2, 0.5, 20, 3, &cfg).unwrap(),
            tail_estimate(p, 2, 0.5, 20, 3, &cfg).unwrap()
        );
    }

    #[test]
    fn proxy_values() {
        assert_eq!(bound_proxy(32, 8, 4, 0), 0.0);
        assert_eq!(bound_proxy(32, 8, 4, 1), 0.0);
        let l2 = 2f64.ln();
        let expect = (2.0 * l2 * l2 * 128f64.ln() * 32f64.ln() / 32.0).sqrt();
        assert!((bound_proxy(32, 8, 4, 2) - expect).abs() < 1e-15);
    }
}
