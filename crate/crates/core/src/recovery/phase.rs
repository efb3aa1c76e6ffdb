use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{solve, RecoveryProblem, SolverConfig};
use crate::baselines::{BaselineKind, BaselineMatrix};
use crate::error::{Error, Result};
use crate::operator::LinearOperator;
use crate::rng::{derive_seed, sample_subset, sign, stream};
use crate::sparse_city::{DistName, SparseCityMatrix, ThetaDistribution};

/// Which random matrix family a phase-transition sweep draws from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "ensemble", rename_all = "snake_case")]
pub enum Ensemble {
    SparseCity {
        m: usize,
        n: usize,
        b: usize,
        dist_name: DistName,
        normalized: bool,
    },
    Baseline {
        kind: BaselineKind,
        m: usize,
        n: usize,
    },
}

impl Ensemble {
    pub fn build(&self, seed: u64) -> Result<Box<dyn LinearOperator + Send>> {
        Ok(match self {
            Ensemble::SparseCity {
                m,
                n,
                b,
                dist_name,
                normalized,
            } => Box::new(SparseCityMatrix::construct(
                *m,
                *n,
                *b,
                seed,
                ThetaDistribution::named(*dist_name, *normalized),
            )?),
            Ensemble::Baseline { kind, m, n } => Box::new(BaselineMatrix::build(*kind, *m, *n, seed)?),
        })
    }

    /// `(rows, columns)` of the matrices this ensemble produces.
    pub fn shape(&self) -> (usize, usize) {
        match self {
            Ensemble::SparseCity { m, n, b, .. } => (*m, n * b),
            Ensemble::Baseline {
                kind: BaselineKind::RandomDemodulator,
                m,
                n,
            } => (*m, *n),
            Ensemble::Baseline { m, n, .. } => (*m, *n),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseRow {
    pub s: usize,
    pub trials: usize,
    pub successes: usize,
    pub rate: f64,
    pub mean_iterations: f64,
    pub mean_residual: f64,
    pub solver: String,
}

struct CellOutcome {
    success: bool,
    iterations: usize,
    residual: f64,
}

fn run_cell(ensemble: &Ensemble, s: usize, solver: &SolverConfig, cell_seed: u64) -> Result<CellOutcome> {
    let a = ensemble.build(derive_seed(cell_seed, &[0]))?;
    let n = a.ncols();
    let mut rng = stream(derive_seed(cell_seed, &[1]));
    let mut x = vec![0.0; n];
    for i in sample_subset(&mut rng, n, s) {
        x[i] = sign(&mut rng);
    }
    let problem = RecoveryProblem::from_ground_truth(a.as_ref(), x)?.with_sparsity(s);
    let r = solve(&problem, solver)?;
    Ok(CellOutcome {
        success: r.success,
        iterations: r.iterations,
        residual: r.residual,
    })
}

/// Success rate of `solver` for each sparsity in `s_grid`.
///
/// Cell `(s, t)` uses `cell = derive_seed(seed, [s, t])`; its matrix is built
/// from `derive_seed(cell, [0])` and its signal (uniform support, +-1
/// amplitudes) from `derive_seed(cell, [1])`. Cells run in parallel and are
/// reduced in grid order, so the table does not depend on the thread count.
pub fn phase_transition(
    ensemble: &Ensemble,
    s_grid: &[usize],
    trials: usize,
    solver: &SolverConfig,
    seed: u64,
) -> Result<Vec<PhaseRow>> {
    let (m, n) = ensemble.shape();
    if trials == 0 {
        return Err(Error::InvalidDimensions("trials must be positive".into()));
    }
    for &s in s_grid {
        let cap = if matches!(solver, SolverConfig::BasisPursuit(_)) { n } else { m };
        if s == 0 || s > cap {
            return Err(Error::InvalidDimensions(format!("sparsity {s} must lie in 1..={cap}")));
        }
    }
    let cells: Vec<(usize, usize)> = s_grid.iter().flat_map(|&s| (0..trials).map(move |t| (s, t))).collect();
    let outcomes: Vec<CellOutcome> = cells
        .par_iter()
        .map(|&(s, t)| run_cell(ensemble, s, solver, derive_seed(seed, &[s as u64, t as u64])))
        .collect::<Result<_>>()?;

    Ok(s_grid
        .iter()
        .zip(outcomes.chunks(trials))
        .map(|(&s, chunk)| {
            let successes = chunk.iter().filter(|c| c.success).count();
            let denom = trials as f64;
            PhaseRow {
                s,
                trials,
                successes,
                rate: successes as f64 / denom,
                mean_iterations: chunk.iter().map(|c| c.iterations as f64).sum::<f64>() / denom,
                mean_residual: chunk.iter().map(|c| c.residual).sum::<f64>() / denom,
                solver: solver.name().to_string(),
            }
        })
        .collect())
}
