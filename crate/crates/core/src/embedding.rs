//! Johnson-Lindenstrauss style embeddings from column-sign randomization and
//! sparse-representation classification on synthetic subspace data.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::operator::{check_shapes, norm2, DenseOperator, LinearOperator};
use crate::recovery::{basis_pursuit, omp, BasisPursuitSettings, RecoveryProblem, SolverStatus};
use crate::recovery::Ensemble;
use crate::rng::{derive_seed, sign, stream, uniform_index};

/// `P x = base (signs .* x)`.
#[derive(Debug, Clone)]
pub struct JlProjector<A> {
    base: A,
    signs: Vec<f64>,
    seed: Option<u64>,
}

/// Draws i.i.d. +-1 column signs for `base` from `seed`.
pub fn make_projector<A: LinearOperator>(base: A, seed: u64) -> JlProjector<A> {
    let mut rng = stream(seed);
    let signs = (0..base.ncols()).map(|_| sign(&mut rng)).collect();
    JlProjector {
        base,
        signs,
        seed: Some(seed),
    }
}

impl<A: LinearOperator> JlProjector<A> {
    /// All signs `+1`, so that `P = base`.
    pub fn unsigned(base: A) -> Self {
        let signs = vec![1.0; base.ncols()];
        Self {
            base,
            signs,
            seed: None,
        }
    }

    pub fn base(&self) -> &A {
        &self.base
    }

    pub fn signs(&self) -> &[f64] {
        &self.signs
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }
}

impl<A: LinearOperator> LinearOperator for JlProjector<A> {
    fn nrows(&self) -> usize {
        self.base.nrows()
    }

    fn ncols(&self) -> usize {
        self.base.ncols()
    }

    fn apply_into(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        check_shapes(self.ncols(), x.len(), self.nrows(), out.len())?;
        let flipped: Vec<f64> = x.iter().zip(&self.signs).map(|(v, s)| v * s).collect();
        self.base.apply_into(&flipped, out)
    }

    fn adjoint_apply_into(&self, y: &[f64], out: &mut [f64]) -> Result<()> {
        self.base.adjoint_apply_into(y, out)?;
        out.iter_mut().zip(&self.signs).for_each(|(v, s)| *v *= s);
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistortionReport {
    /// Largest `| ||P(u - v)||^2 / ||u - v||^2 - 1 |` over distinct pairs.
    pub max_distortion: f64,
    pub violating_pairs: usize,
    pub pairs: usize,
    pub skipped_duplicates: usize,
}

/// Pairwise squared-distance distortion of `p` on `points`.
pub fn distortion_report(p: &dyn LinearOperator, points: &[Vec<f64>], eps: f64) -> Result<DistortionReport> {
    if points.len() < 2 {
        return Err(Error::InvalidDimensions("distortion needs at least two points".into()));
    }
    for x in points {
        check_len(p.ncols(), x.len())?;
    }
    let images: Vec<Vec<f64>> = points.iter().map(|x| p.apply(x)).collect::<Result<_>>()?;
    let mut report = DistortionReport {
        max_distortion: 0.0,
        violating_pairs: 0,
        pairs: 0,
        skipped_duplicates: 0,
    };
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            let d: f64 = points[i].iter().zip(&points[j]).map(|(a, b)| (a - b).powi(2)).sum();
            if d == 0.0 {
                report.skipped_duplicates += 1;
                continue;
            }
            let e: f64 = images[i].iter().zip(&images[j]).map(|(a, b)| (a - b).powi(2)).sum();
            let dist = (e / d - 1.0).abs();
            report.pairs += 1;
            report.max_distortion = report.max_distortion.max(dist);
            if dist > eps {
                report.violating_pairs += 1;
            }
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticClassSet {
    pub classes: usize,
    pub ambient_dim: usize,
    pub subspace_dim: usize,
    pub samples_per_class: usize,
    pub test_per_class: usize,
    pub noise: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticData {
    /// Training samples as columns, class by class.
    pub phi: DMatrix<f64>,
    pub labels: Vec<usize>,
    pub tests: Vec<Vec<f64>>,
    pub test_labels: Vec<usize>,
    /// Orthonormal basis of each class subspace.
    pub bases: Vec<DMatrix<f64>>,
}

fn gaussian_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> DMatrix<f64> {
    // column-major fill keeps the draw order independent of nalgebra internals
    let mut out = DMatrix::zeros(rows, cols);
    for c in 0..cols {
        for r in 0..rows {
            out[(r, c)] = rng.sample(StandardNormal);
        }
    }
    out
}

/// `count` standard Gaussian points in `R^dim`.
pub fn gaussian_points(count: usize, dim: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = stream(seed);
    (0..count).map(|_| gaussian_matrix(&mut rng, dim, 1).as_slice().to_vec()).collect()
}

/// Random class subspaces with training and test samples drawn from them.
pub fn synth_subspace_data(set: &SyntheticClassSet) -> Result<SyntheticData> {
    if set.classes == 0 || set.subspace_dim == 0 || set.samples_per_class == 0 {
        return Err(Error::InvalidDimensions("class set dimensions must be positive".into()));
    }
    if set.subspace_dim > set.ambient_dim {
        return Err(Error::InvalidDimensions(format!(
            "subspace dim {} exceeds ambient dim {}",
            set.subspace_dim, set.ambient_dim
        )));
    }
    if !(set.noise >= 0.0 && set.noise.is_finite()) {
        return Err(Error::Domain(format!("noise level {} must be finite and nonnegative", set.noise)));
    }
    let d = set.ambient_dim;
    let total = set.classes * set.samples_per_class;
    let mut phi = DMatrix::zeros(d, total);
    let mut labels = Vec::with_capacity(total);
    let mut tests = Vec::new();
    let mut test_labels = Vec::new();
    let mut bases = Vec::with_capacity(set.classes);
    for class in 0..set.classes {
        let mut rng = stream(derive_seed(set.seed, &[class as u64]));
        let basis = gaussian_matrix(&mut rng, d, set.subspace_dim).qr().q();
        let draw = |rng: &mut crate::rng::StreamRng| {
            let coef = gaussian_matrix(rng, set.subspace_dim, 1);
            let noise = gaussian_matrix(rng, d, 1) * set.noise;
            &basis * coef + noise
        };
        for k in 0..set.samples_per_class {
            phi.column_mut(class * set.samples_per_class + k).copy_from(&draw(&mut rng));
            labels.push(class);
        }
        for _ in 0..set.test_per_class {
            tests.push(draw(&mut rng).as_slice().to_vec());
            test_labels.push(class);
        }
        bases.push(basis);
    }
    Ok(SyntheticData {
        phi,
        labels,
        tests,
        test_labels,
        bases,
    })
}

/// Largest cosine of a principal angle between any two class subspaces.
pub fn max_principal_cosine(bases: &[DMatrix<f64>]) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..bases.len() {
        for j in (i + 1)..bases.len() {
            let cross = bases[i].tr_mul(&bases[j]);
            worst = worst.max(cross.singular_values().max());
        }
    }
    worst
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "solver", rename_all = "snake_case")]
pub enum SrcSolver {
    Omp { sparsity: usize },
    BasisPursuit(BasisPursuitSettings),
}

impl SrcSolver {
    pub fn name(&self) -> &'static str {
        match self {
            SrcSolver::Omp { .. } => "omp",
            SrcSolver::BasisPursuit(_) => "basis_pursuit",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SrcOutcome {
    pub class: usize,
    pub residuals: Vec<f64>,
    pub x_hat: Vec<f64>,
    pub status: SolverStatus,
}

/// Sparse-representation classification of `y_new` against the training
/// columns of `phi`.
///
/// With a projector both `phi` and `y_new` are projected first. Columns of
/// the (projected) dictionary are scaled to unit norm when `normalize` is set.
/// The class with the smallest residual wins, lowest class id on ties.
pub fn src_classify(
    phi: &DMatrix<f64>,
    labels: &[usize],
    y_new: &[f64],
    projector: Option<&dyn LinearOperator>,
    solver: &SrcSolver,
    normalize: bool,
) -> Result<SrcOutcome> {
    check_len(phi.ncols(), labels.len())?;
    check_len(phi.nrows(), y_new.len())?;
    if y_new.iter().all(|v| *v == 0.0) {
        return Err(Error::Degenerate("test sample is zero".into()));
    }
    let (mut dict, y) = match projector {
        Some(p) => {
            check_len(p.ncols(), phi.nrows())?;
            let mut dict = DMatrix::zeros(p.nrows(), phi.ncols());
            for c in 0..phi.ncols() {
                let col: Vec<f64> = phi.column(c).iter().copied().collect();
                dict.column_mut(c).copy_from_slice(&p.apply(&col)?);
            }
            (dict, p.apply(y_new)?)
        }
        None => (phi.clone(), y_new.to_vec()),
    };
    if norm2(&y) == 0.0 {
        return Err(Error::Degenerate("projected test sample is zero".into()));
    }
    if normalize {
        for mut col in dict.column_iter_mut() {
            let n = col.norm();
            if n > 0.0 {
                col /= n;
            }
        }
    }
    let op = DenseOperator::new(dict);
    let problem = RecoveryProblem::new(&op, y.clone())?;
    let result = match solver {
        SrcSolver::Omp { sparsity } => omp(&problem.with_sparsity(*sparsity))?,
        SrcSolver::BasisPursuit(settings) => basis_pursuit(&problem, settings)?,
    };
    let classes = labels.iter().max().map_or(0, |c| c + 1);
    let yv = DVector::from_column_slice(&y);
    let residuals: Vec<f64> = (0..classes)
        .map(|class| {
            let masked = DVector::from_iterator(
                labels.len(),
                result.x_hat.iter().zip(labels).map(|(v, &l)| if l == class { *v } else { 0.0 }),
            );
            (&yv - op.matrix() * masked).norm()
        })
        .collect();
    let mut class = 0;
    for (c, r) in residuals.iter().enumerate() {
        if *r < residuals[class] {
            class = c;
        }
    }
    Ok(SrcOutcome {
        class,
        residuals,
        x_hat: result.x_hat,
        status: result.status,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub accuracy: f64,
    /// `per_class_confusion[truth][predicted]`.
    pub per_class_confusion: Vec<Vec<usize>>,
    /// Ambient over projected dimension, 1 without a projector.
    pub compression_ratio: f64,
    pub solver: String,
    pub trials: usize,
    pub truths: Vec<usize>,
    pub predictions: Vec<usize>,
    pub nonconverged: usize,
}

/// Repeats SRC over `trials` fresh data sets.
///
/// Trial `t` draws its data (one test sample per class) from
/// `derive_seed(seed, [t, 0])` and classifies the test sample of a class
/// chosen from `[t, 2]`. The projector base is built at `[t, 1]` and its
/// column signs drawn at `[t, 3]`. `set.test_per_class` is ignored.
pub fn classification_experiment(
    set: &SyntheticClassSet,
    trials: usize,
    projector: Option<&Ensemble>,
    solver: &SrcSolver,
    normalize: bool,
    seed: u64,
) -> Result<ClassificationReport> {
    if trials == 0 {
        return Err(Error::InvalidDimensions("trials must be positive".into()));
    }
    let mut compression_ratio = 1.0;
    if let Some(e) = projector {
        let (m, n) = e.shape();
        if n != set.ambient_dim {
            return Err(Error::Shape {
                expected: set.ambient_dim,
                actual: n,
            });
        }
        compression_ratio = set.ambient_dim as f64 / m as f64;
    }
    let trial_set = SyntheticClassSet {
        test_per_class: 1,
        ..*set
    };
    let outcomes: Vec<(usize, SrcOutcome)> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let t = t as u64;
            let data = synth_subspace_data(&SyntheticClassSet {
                seed: derive_seed(seed, &[t, 0]),
                ..trial_set
            })?;
            let truth = uniform_index(&mut stream(derive_seed(seed, &[t, 2])), set.classes);
            let sample = &data.tests[truth];
            let outcome = match projector {
                Some(e) => {
                    let p = make_projector(e.build(derive_seed(seed, &[t, 1]))?, derive_seed(seed, &[t, 3]));
                    src_classify(&data.phi, &data.labels, sample, Some(&p), solver, normalize)?
                }
                None => src_classify(&data.phi, &data.labels, sample, None, solver, normalize)?,
            };
            Ok((truth, outcome))
        })
        .collect::<Result<_>>()?;

    let mut confusion = vec![vec![0usize; set.classes]; set.classes];
    let mut correct = 0;
    let mut nonconverged = 0;
    for (truth, o) in &outcomes {
        confusion[*truth][o.class] += 1;
        correct += usize::from(*truth == o.class);
        nonconverged += usize::from(o.status != SolverStatus::Converged);
    }
    Ok(ClassificationReport {
        accuracy: correct as f64 / trials as f64,
        per_class_confusion: confusion,
        compression_ratio,
        solver: solver.name().to_string(),
        trials,
        truths: outcomes.iter().map(|(t, _)| *t).collect(),
        predictions: outcomes.iter().map(|(_, o)| o.class).collect(),
        nonconverged,
    })
}
