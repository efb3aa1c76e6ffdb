//! Sparse recovery from noiseless measurements `y = A x`.
//!
//! Every solver touches the operator only through `apply`, `adjoint_apply`
//! and single columns; none of them materializes `A`.

mod basis_pursuit;
mod iht;
mod omp;
mod phase;

use serde::{Deserialize, Serialize};

pub use basis_pursuit::{basis_pursuit, BasisPursuitSettings};
pub use iht::{hard_threshold, iht, IhtSettings};
pub use omp::omp;
pub use phase::{phase_transition, Ensemble, PhaseRow};

use crate::error::{check_len, Error, Result};
use crate::operator::{norm2, LinearOperator};

/// Relative error at or below which a recovery counts as exact.
pub const SUCCESS_THRESHOLD: f64 = 1e-4;

/// Residual norm treated as zero by the greedy solvers.
pub const RESIDUAL_TOL: f64 = 1e-10;

/// Magnitude above which an entry of `x_hat` is reported in the support.
pub const SUPPORT_TOL: f64 = 1e-10;

pub struct RecoveryProblem<'a> {
    operator: &'a dyn LinearOperator,
    y: Vec<f64>,
    sparsity: Option<usize>,
    ground_truth: Option<Vec<f64>>,
}

impl<'a> RecoveryProblem<'a> {
    pub fn new(operator: &'a dyn LinearOperator, y: Vec<f64>) -> Result<Self> {
        check_len(operator.nrows(), y.len())?;
        Ok(Self {
            operator,
            y,
            sparsity: None,
            ground_truth: None,
        })
    }

    /// Builds `y = A x` and keeps `x` for scoring.
    pub fn from_ground_truth(operator: &'a dyn LinearOperator, x: Vec<f64>) -> Result<Self> {
        let y = operator.apply(&x)?;
        Self::new(operator, y)?.with_ground_truth(x)
    }

    pub fn with_sparsity(mut self, s: usize) -> Self {
        self.sparsity = Some(s);
        self
    }

    pub fn with_ground_truth(mut self, x: Vec<f64>) -> Result<Self> {
        check_len(self.operator.ncols(), x.len())?;
        self.ground_truth = Some(x);
        Ok(self)
    }

    pub fn operator(&self) -> &dyn LinearOperator {
        self.operator
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn sparsity(&self) -> Option<usize> {
        self.sparsity
    }

    pub fn ground_truth(&self) -> Option<&[f64]> {
        self.ground_truth.as_deref()
    }

    fn required_sparsity(&self) -> Result<usize> {
        match self.sparsity {
            Some(s) if s >= 1 && s <= self.operator.nrows() => Ok(s),
            Some(s) => Err(Error::InvalidDimensions(format!(
                "sparsity {s} must lie in 1..={}",
                self.operator.nrows()
            ))),
            None => Err(Error::InvalidDimensions("this solver needs a target sparsity".into())),
        }
    }

    fn residual_norm(&self, x: &[f64]) -> Result<f64> {
        let ax = self.operator.apply(x)?;
        Ok(self.y.iter().zip(&ax).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt())
    }

    fn finish(&self, x_hat: Vec<f64>, iterations: usize, status: SolverStatus) -> Result<RecoveryResult> {
        let residual = self.residual_norm(&x_hat)?;
        let support = x_hat
            .iter()
            .enumerate()
            .filter(|(_, v)| v.abs() > SUPPORT_TOL)
            .map(|(i, _)| i)
            .collect();
        let relative_error = self.ground_truth.as_ref().map(|x| relative_error(&x_hat, x));
        let success = match relative_error {
            Some(e) => e <= SUCCESS_THRESHOLD,
            None => status == SolverStatus::Converged,
        };
        Ok(RecoveryResult {
            x_hat,
            support,
            residual,
            iterations,
            relative_error,
            success,
            status,
        })
    }
}

/// `||x_hat - x|| / ||x||`, or `||x_hat||` when `x = 0`.
pub fn relative_error(x_hat: &[f64], x: &[f64]) -> f64 {
    let diff: Vec<f64> = x_hat.iter().zip(x).map(|(a, b)| a - b).collect();
    let scale = norm2(x);
    if scale == 0.0 {
        norm2(&diff)
    } else {
        norm2(&diff) / scale
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverStatus {
    Converged,
    MaxIterations,
    RankDeficient,
    Diverged,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryResult {
    pub x_hat: Vec<f64>,
    pub support: Vec<usize>,
    /// `||y - A x_hat||_2`.
    pub residual: f64,
    pub iterations: usize,
    pub relative_error: Option<f64>,
    /// Relative error within [`SUCCESS_THRESHOLD`] when the truth is known,
    /// otherwise whether the solver converged.
    pub success: bool,
    pub status: SolverStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "solver", rename_all = "snake_case")]
pub enum SolverConfig {
    Omp,
    Iht(IhtSettings),
    BasisPursuit(BasisPursuitSettings),
}

impl SolverConfig {
    pub fn name(&self) -> &'static str {
        match self {
            SolverConfig::Omp => "omp",
            SolverConfig::Iht(_) => "iht",
            SolverConfig::BasisPursuit(_) => "basis_pursuit",
        }
    }

    /// `omp`, `iht` or `bp`/`basis_pursuit` with default settings.
    pub fn from_name(name: &str) -> Result<Self> {
        match name.replace('-', "_").as_str() {
            "omp" => Ok(SolverConfig::Omp),
            "iht" => Ok(SolverConfig::Iht(IhtSettings::default())),
            "bp" | "basis_pursuit" => Ok(SolverConfig::BasisPursuit(BasisPursuitSettings::default())),
            other => Err(Error::InvalidDimensions(format!("unknown solver {other:?}"))),
        }
    }
}

pub fn solve(problem: &RecoveryProblem<'_>, config: &SolverConfig) -> Result<RecoveryResult> {
    match config {
        SolverConfig::Omp => omp(problem),
        SolverConfig::Iht(settings) => iht(problem, settings, None),
        SolverConfig::BasisPursuit(settings) => basis_pursuit(problem, settings),
    }
}
