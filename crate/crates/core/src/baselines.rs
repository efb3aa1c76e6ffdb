//! Comparison ensembles: subsampled orthogonal transforms, partial
//! Toeplitz/circulant matrices and the random demodulator.
//!
//! All arithmetic is real. The Fourier-type kinds use the real orthogonal
//! DFT basis (a constant row, cosine/sine row pairs, and a Nyquist row
//! for even sizes) instead of the complex DFT. Applies are computed
//! directly; none of them is FFT accelerated.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::{check_shapes, LinearOperator};
use crate::rng::{self, permutation, sample_subset, stream};
use crate::walsh::{fwht_adjoint_in_place, fwht_in_place, HadamardOrder};

pub const MANIFEST_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineKind {
    SubsampledFourier,
    SubsampledHadamard,
    PartialToeplitz,
    PartialCirculant,
    RandomDemodulator,
}

impl BaselineKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            BaselineKind::SubsampledFourier => "subsampled_fourier",
            BaselineKind::SubsampledHadamard => "subsampled_hadamard",
            BaselineKind::PartialToeplitz => "partial_toeplitz",
            BaselineKind::PartialCirculant => "partial_circulant",
            BaselineKind::RandomDemodulator => "random_demodulator",
        }
    }
}

impl std::str::FromStr for BaselineKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.replace('-', "_").as_str() {
            "subsampled_fourier" => BaselineKind::SubsampledFourier,
            "subsampled_hadamard" => BaselineKind::SubsampledHadamard,
            "partial_toeplitz" => BaselineKind::PartialToeplitz,
            "partial_circulant" => BaselineKind::PartialCirculant,
            "random_demodulator" => BaselineKind::RandomDemodulator,
            other => return Err(Error::InvalidDimensions(format!("unknown baseline kind {other:?}"))),
        })
    }
}

/// Persisted form. `m x n` is the operator shape; for the demodulator
/// `m = R` and `n = W`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BaselineManifest {
    pub format_version: u32,
    pub kind: BaselineKind,
    pub m: usize,
    pub n: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub column_permutation: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq)]
enum Repr {
    HadamardRows { order: HadamardOrder, rows: Vec<usize>, scale: f64 },
    DenseRows { rows: Vec<usize>, matrix: DMatrix<f64> },
    Toeplitz { generator: Vec<f64> },
    Circulant { generator: Vec<f64> },
    Demodulator { signs: Vec<f64>, permutation: Vec<usize>, transform: DMatrix<f64>, block: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineMatrix {
    kind: BaselineKind,
    m: usize,
    n: usize,
    seed: u64,
    repr: Repr,
}

/// Entry `(r, t)` of the `size x size` real orthogonal DFT matrix.
pub fn real_dft_entry(size: usize, r: usize, t: usize) -> f64 {
    let nf = size as f64;
    if r == 0 {
        return nf.sqrt().recip();
    }
    if size % 2 == 0 && r == size - 1 {
        let sign = if t % 2 == 0 { 1.0 } else { -1.0 };
        return sign / nf.sqrt();
    }
    // frequency (r + 1)/2; reduce the phase exactly before converting to radians
    let phase = ((r + 1) / 2 * t % size) as f64 / nf;
    let angle = 2.0 * std::f64::consts::PI * phase;
    let amp = (2.0 / nf).sqrt();
    if r % 2 == 1 {
        amp * angle.cos()
    } else {
        amp * angle.sin()
    }
}

pub fn real_dft_matrix(size: usize) -> DMatrix<f64> {
    DMatrix::from_fn(size, size, |r, t| real_dft_entry(size, r, t))
}

/// `R x W` block-summing matrix: row `r` holds `W/R` ones starting at column `r W/R`.
pub fn summing_matrix(w: usize, r: usize) -> Result<DMatrix<f64>> {
    check_demodulator_dims(w, r)?;
    let block = w / r;
    Ok(DMatrix::from_fn(r, w, |i, j| if j / block == i { 1.0 } else { 0.0 }))
}

fn check_demodulator_dims(w: usize, r: usize) -> Result<()> {
    if r == 0 || w == 0 || w % r != 0 {
        return Err(Error::InvalidDimensions(format!(
            "sampling rate R = {r} must divide W = {w}"
        )));
    }
    Ok(())
}

fn check_wide(m: usize, n: usize) -> Result<()> {
    if m == 0 || m > n {
        return Err(Error::InvalidDimensions(format!("need 1 <= m <= N, got m = {m}, N = {n}")));
    }
    Ok(())
}

impl BaselineMatrix {
    /// `m` rows of an `N x N` orthogonal transform chosen uniformly without
    /// replacement, rescaled by `sqrt(N/m)`.
    pub fn subsampled_orthogonal(kind: BaselineKind, m: usize, n: usize, seed: u64) -> Result<Self> {
        check_wide(m, n)?;
        let rows = sample_subset(&mut stream(seed), n, m);
        let scale = (n as f64 / m as f64).sqrt();
        let repr = match kind {
            BaselineKind::SubsampledHadamard => Repr::HadamardRows {
                order: HadamardOrder::from_len(n)?,
                rows,
                scale,
            },
            BaselineKind::SubsampledFourier => {
                let matrix = DMatrix::from_fn(m, n, |i, t| scale * real_dft_entry(n, rows[i], t));
                Repr::DenseRows { rows, matrix }
            }
            other => {
                return Err(Error::InvalidDimensions(format!(
                    "{} is not a subsampled orthogonal kind",
                    other.as_str()
                )))
            }
        };
        Ok(Self { kind, m, n, seed, repr })
    }

    /// Partial Toeplitz (`a_ij` depends on `i - j` only) or circulant matrix
    /// with i.i.d. `+-1/sqrt(m)` generator entries.
    pub fn partial_toeplitz(m: usize, n: usize, seed: u64, circulant: bool) -> Result<Self> {
        check_wide(m, n)?;
        let len = if circulant { n } else { n + m - 1 };
        let mut r = stream(seed);
        let amp = (m as f64).sqrt().recip();
        let generator: Vec<f64> = (0..len).map(|_| amp * rng::sign(&mut r)).collect();
        let (kind, repr) = if circulant {
            (BaselineKind::PartialCirculant, Repr::Circulant { generator })
        } else {
            (BaselineKind::PartialToeplitz, Repr::Toeplitz { generator })
        };
        Ok(Self { kind, m, n, seed, repr })
    }

    /// `A = G D F` with `G` the block-summing matrix, `D` a random `+-1`
    /// diagonal and `F` the real DFT with a seeded column permutation.
    /// `G` is left unnormalized.
    pub fn random_demodulator(w: usize, r: usize, seed: u64) -> Result<Self> {
        check_demodulator_dims(w, r)?;
        let mut stream = stream(seed);
        let signs: Vec<f64> = (0..w).map(|_| rng::sign(&mut stream)).collect();
        let perm = permutation(&mut stream, w);
        Ok(Self::demodulator_from_parts(w, r, seed, signs, perm))
    }

    fn demodulator_from_parts(w: usize, r: usize, seed: u64, signs: Vec<f64>, perm: Vec<usize>) -> Self {
        let transform = DMatrix::from_fn(w, w, |i, j| real_dft_entry(w, i, perm[j]));
        Self {
            kind: BaselineKind::RandomDemodulator,
            m: r,
            n: w,
            seed,
            repr: Repr::Demodulator {
                signs,
                permutation: perm,
                transform,
                block: w / r,
            },
        }
    }

    /// Dispatch on kind; for the demodulator `m = R` and `n = W`.
    pub fn build(kind: BaselineKind, m: usize, n: usize, seed: u64) -> Result<Self> {
        match kind {
            BaselineKind::SubsampledFourier | BaselineKind::SubsampledHadamard => {
                Self::subsampled_orthogonal(kind, m, n, seed)
            }
            BaselineKind::PartialToeplitz => Self::partial_toeplitz(m, n, seed, false),
            BaselineKind::PartialCirculant => Self::partial_toeplitz(m, n, seed, true),
            BaselineKind::RandomDemodulator => Self::random_demodulator(n, m, seed),
        }
    }

    pub fn from_manifest(man: &BaselineManifest) -> Result<Self> {
        if man.format_version != MANIFEST_FORMAT_VERSION {
            return Err(Error::Serialization(format!(
                "unsupported baseline manifest version {}",
                man.format_version
            )));
        }
        let built = Self::build(man.kind, man.m, man.n, man.seed)?;
        if let (Some(stored), Some(regenerated)) = (&man.column_permutation, built.column_permutation()) {
            if stored != regenerated {
                return Err(Error::Serialization(
                    "stored column permutation does not match the seed".into(),
                ));
            }
        }
        Ok(built)
    }

    pub fn manifest(&self) -> BaselineManifest {
        BaselineManifest {
            format_version: MANIFEST_FORMAT_VERSION,
            kind: self.kind,
            m: self.m,
            n: self.n,
            seed: self.seed,
            column_permutation: self.column_permutation().map(<[usize]>::to_vec),
        }
    }

    pub fn kind(&self) -> BaselineKind {
        self.kind
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Selected rows of the full transform, for the subsampled kinds.
    pub fn selected_rows(&self) -> Option<&[usize]> {
        match &self.repr {
            Repr::HadamardRows { rows, .. } | Repr::DenseRows { rows, .. } => Some(rows),
            _ => None,
        }
    }

    /// Number of random generator entries, for the Toeplitz kinds.
    pub fn generator_len(&self) -> Option<usize> {
        match &self.repr {
            Repr::Toeplitz { generator } | Repr::Circulant { generator } => Some(generator.len()),
            _ => None,
        }
    }

    pub fn column_permutation(&self) -> Option<&[usize]> {
        match &self.repr {
            Repr::Demodulator { permutation, .. } => Some(permutation),
            _ => None,
        }
    }

    /// `G` for the demodulator.
    pub fn summing_matrix(&self) -> Option<DMatrix<f64>> {
        match &self.repr {
            Repr::Demodulator { .. } => summing_matrix(self.n, self.m).ok(),
            _ => None,
        }
    }

    /// `D` for the demodulator.
    pub fn demodulation_signs(&self) -> Option<&[f64]> {
        match &self.repr {
            Repr::Demodulator { signs, .. } => Some(signs),
            _ => None,
        }
    }

    /// Column-permuted `F` for the demodulator.
    pub fn permuted_transform(&self) -> Option<&DMatrix<f64>> {
        match &self.repr {
            Repr::Demodulator { transform, .. } => Some(transform),
            _ => None,
        }
    }
}

impl LinearOperator for BaselineMatrix {
    fn nrows(&self) -> usize {
        self.m
    }

    fn ncols(&self) -> usize {
        self.n
    }

    fn apply_into(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        check_shapes(self.n, x.len(), self.m, out.len())?;
        let (m, n) = (self.m, self.n);
        match &self.repr {
            Repr::HadamardRows { rows, scale, .. } => {
                let mut buf = x.to_vec();
                fwht_in_place(&mut buf);
                for (o, &r) in out.iter_mut().zip(rows) {
                    *o = scale * buf[r];
                }
            }
            Repr::DenseRows { matrix, .. } => {
                out.copy_from_slice((matrix * DVector::from_column_slice(x)).as_slice());
            }
            Repr::Toeplitz { generator } => {
                for (i, o) in out.iter_mut().enumerate() {
                    *o = x.iter().enumerate().map(|(j, xj)| generator[i + n - 1 - j] * xj).sum();
                }
            }
            Repr::Circulant { generator } => {
                for (i, o) in out.iter_mut().enumerate() {
                    *o = x
                        .iter()
                        .enumerate()
                        .map(|(j, xj)| generator[(i + n - j) % n] * xj)
                        .sum();
                }
            }
            Repr::Demodulator { signs, transform, block, .. } => {
                let u = transform * DVector::from_column_slice(x);
                for (r, o) in out.iter_mut().enumerate().take(m) {
                    *o = (r * block..(r + 1) * block).map(|t| signs[t] * u[t]).sum();
                }
            }
        }
        Ok(())
    }

    fn adjoint_apply_into(&self, y: &[f64], out: &mut [f64]) -> Result<()> {
        check_shapes(self.m, y.len(), self.n, out.len())?;
        let n = self.n;
        match &self.repr {
            Repr::HadamardRows { rows, scale, .. } => {
                out.iter_mut().for_each(|v| *v = 0.0);
                for (&yi, &r) in y.iter().zip(rows) {
                    out[r] = scale * yi;
                }
                fwht_adjoint_in_place(out);
            }
            Repr::DenseRows { matrix, .. } => {
                out.copy_from_slice(matrix.tr_mul(&DVector::from_column_slice(y)).as_slice());
            }
            Repr::Toeplitz { generator } => {
                for (j, o) in out.iter_mut().enumerate() {
                    *o = y.iter().enumerate().map(|(i, yi)| generator[i + n - 1 - j] * yi).sum();
                }
            }
            Repr::Circulant { generator } => {
                for (j, o) in out.iter_mut().enumerate() {
                    *o = y
                        .iter()
                        .enumerate()
                        .map(|(i, yi)| generator[(i + n - j) % n] * yi)
                        .sum();
                }
            }
            Repr::Demodulator { signs, transform, block, .. } => {
                let v = DVector::from_fn(n, |t, _| signs[t] * y[t / block]);
                out.copy_from_slice(transform.tr_mul(&v).as_slice());
            }
        }
        Ok(())
    }
}
