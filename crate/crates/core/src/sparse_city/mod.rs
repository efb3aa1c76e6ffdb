//! The Sparse City ensemble `A = [D_1 W | D_2 W | ... | D_b W]`.
//!
//! `W` is the `m x n` matrix of the first `n` columns of the Hadamard-Walsh
//! matrix `H_k` (`m = 2^k`) and every `D_j` is an `m x m` diagonal whose
//! entries are i.i.d. draws from a bounded zero-mean [`ThetaDistribution`].
//! Only the `b x m` table of diagonal entries is stored; products go through
//! the fast transform at `O(b m log m)` cost.

mod theta;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

pub use theta::{DistName, IntegerLevels, ThetaDistribution};

use crate::error::{check_len, Error, Result};
use crate::operator::{check_shapes, LinearOperator};
use crate::rng;
use crate::walsh::{fwht_adjoint_in_place, fwht_in_place, fwht_integer_in_place, HadamardOrder, PartialWalsh};

pub const MANIFEST_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct SparseCityMatrix {
    walsh: PartialWalsh,
    b: usize,
    seed: u64,
    dist: ThetaDistribution,
    levels: Vec<u8>,
    theta: Vec<f64>,
}

/// Persisted form of a [`SparseCityMatrix`]. The diagonal table is never
/// stored; it is regenerated from the seed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatrixManifest {
    pub format_version: u32,
    pub m: usize,
    pub n: usize,
    pub b: usize,
    pub seed: u64,
    pub dist_name: DistName,
    pub normalized: bool,
}

/// 1-based `(block, row)` pair selecting `y_kw`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RankOneIndex {
    pub k: usize,
    pub w: usize,
}

/// Result of the integer kernel: `A x = scale * z`.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegerProduct {
    pub z: Vec<i64>,
    pub scale: f64,
}

impl SparseCityMatrix {
    /// Draws the `b x m` diagonal table from the ChaCha20 stream keyed by
    /// `seed`, block by block, row by row.
    pub fn construct(m: usize, n: usize, b: usize, seed: u64, dist: ThetaDistribution) -> Result<Self> {
        let order = HadamardOrder::from_len(m)?;
        let walsh = PartialWalsh::new(order, n)?;
        if b == 0 {
            return Err(Error::InvalidDimensions("block count b must be at least 1".into()));
        }
        let cells = b
            .checked_mul(m)
            .ok_or_else(|| Error::InvalidDimensions("b * m overflows".into()))?;
        let mut stream = rng::stream(seed);
        let levels: Vec<u8> = (0..cells).map(|_| dist.sample_level(&mut stream)).collect();
        let theta = levels.iter().map(|&l| dist.values()[l as usize]).collect();
        Ok(Self {
            walsh,
            b,
            seed,
            dist,
            levels,
            theta,
        })
    }

    /// Same dimensions and distribution with every diagonal entry set to
    /// `value`. Mostly useful for tests (`value = 1` gives `[W | ... | W]`).
    pub fn with_constant_theta(m: usize, n: usize, b: usize, value: f64) -> Result<Self> {
        let dist = ThetaDistribution::custom(vec![value, -value], vec![0.5, 0.5])?;
        let mut a = Self::construct(m, n, b, 0, dist)?;
        a.levels.iter_mut().for_each(|l| *l = 0);
        a.theta.iter_mut().for_each(|t| *t = value);
        Ok(a)
    }

    pub fn from_manifest(manifest: &MatrixManifest) -> Result<Self> {
        if manifest.format_version != MANIFEST_FORMAT_VERSION {
            return Err(Error::Serialization(format!(
                "unsupported matrix manifest version {}",
                manifest.format_version
            )));
        }
        let dist = ThetaDistribution::named(manifest.dist_name, manifest.normalized);
        Self::construct(manifest.m, manifest.n, manifest.b, manifest.seed, dist)
    }

    pub fn manifest(&self) -> Result<MatrixManifest> {
        let dist_name = self.dist.name().ok_or_else(|| {
            Error::Serialization("custom distributions cannot be persisted by name".into())
        })?;
        Ok(MatrixManifest {
            format_version: MANIFEST_FORMAT_VERSION,
            m: self.m(),
            n: self.n(),
            b: self.b,
            seed: self.seed,
            dist_name,
            normalized: self.dist.normalized(),
        })
    }

    pub fn m(&self) -> usize {
        self.walsh.rows()
    }

    pub fn n(&self) -> usize {
        self.walsh.cols()
    }

    pub fn b(&self) -> usize {
        self.b
    }

    /// `N = n b`.
    pub fn total_cols(&self) -> usize {
        self.n() * self.b
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn dist(&self) -> &ThetaDistribution {
        &self.dist
    }

    pub fn walsh(&self) -> &PartialWalsh {
        &self.walsh
    }

    /// Diagonal of `D_j` (0-based block index).
    pub fn theta_block(&self, j: usize) -> &[f64] {
        let m = self.m();
        &self.theta[j * m..(j + 1) * m]
    }

    /// Row-major `b x m` table of diagonal entries.
    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    /// Row-major `b x m` table of indices into `dist().values()`.
    pub fn theta_levels(&self) -> &[u8] {
        &self.levels
    }

    /// Whether `m <= n b`, the regime the probabilistic RIP bounds assume.
    pub fn in_theorem_regime(&self) -> bool {
        self.m() <= self.total_cols()
    }

    /// Exact product through the integer Hadamard kernel.
    ///
    /// The integers carry the `+-1` Hadamard signs and the integer levels of
    /// the distribution; every irrational factor ends up in `scale`.
    pub fn integer_apply(&self, x: &[i64]) -> Result<IntegerProduct> {
        check_len(self.total_cols(), x.len())?;
        let ints = self.dist.integer_levels().ok_or_else(|| {
            Error::Distribution("integer kernel needs a distribution with integer levels".into())
        })?;
        let max_level = ints.levels.iter().map(|l| l.unsigned_abs()).max().unwrap_or(0) as u128;
        let max_x = x.iter().map(|v| v.unsigned_abs()).max().unwrap_or(0) as u128;
        let bound = (self.b as u128)
            .saturating_mul(self.n() as u128)
            .saturating_mul(max_level)
            .saturating_mul(max_x);
        if bound > i64::MAX as u128 {
            return Err(Error::Overflow { bound });
        }

        let (m, n) = (self.m(), self.n());
        let mut z = vec![0i64; m];
        let mut buf = vec![0i64; m];
        for (j, segment) in x.chunks_exact(n).enumerate() {
            buf[..n].copy_from_slice(segment);
            buf[n..].iter_mut().for_each(|v| *v = 0);
            fwht_integer_in_place(&mut buf);
            let block_levels = &self.levels[j * m..(j + 1) * m];
            for ((acc, &h), &l) in z.iter_mut().zip(&buf).zip(block_levels) {
                *acc += ints.levels[l as usize] * h;
            }
        }
        Ok(IntegerProduct {
            z,
            scale: self.walsh.order().entry_scale() * ints.scale,
        })
    }

    /// `y_kw`: zero except on block `k`, where it holds row `w` of `W`.
    pub fn y_kw(&self, idx: RankOneIndex) -> Result<Vec<f64>> {
        if idx.k == 0 || idx.k > self.b || idx.w == 0 || idx.w > self.m() {
            return Err(Error::Index(format!(
                "(k, w) = ({}, {}) outside 1..={} x 1..={}",
                idx.k,
                idx.w,
                self.b,
                self.m()
            )));
        }
        let mut row = vec![0.0; self.m()];
        row[idx.w - 1] = 1.0;
        fwht_adjoint_in_place(&mut row);
        let n = self.n();
        let mut out = vec![0.0; self.total_cols()];
        out[(idx.k - 1) * n..idx.k * n].copy_from_slice(&row[..n]);
        Ok(out)
    }

    /// All `y_kw` as columns of an `N x (b m)` matrix, column `(k-1) m + (w-1)`.
    fn y_kw_table(&self) -> Result<DMatrix<f64>> {
        let (m, b) = (self.m(), self.b);
        let entries = self.total_cols().saturating_mul(b * m);
        if entries > crate::operator::DENSE_ENTRY_LIMIT {
            return Err(Error::Size {
                requested: entries,
                threshold: crate::operator::DENSE_ENTRY_LIMIT,
            });
        }
        let mut table = DMatrix::zeros(self.total_cols(), b * m);
        for k in 1..=b {
            for w in 1..=m {
                let y = self.y_kw(RankOneIndex { k, w })?;
                table.column_mut((k - 1) * m + (w - 1)).copy_from_slice(&y);
            }
        }
        Ok(table)
    }

    /// `sum_{k, w} y_kw (x) y_kw`, which should be the `N x N` identity.
    pub fn rank_one_resolution(&self) -> Result<DMatrix<f64>> {
        let ys = self.y_kw_table()?;
        let nn = self.total_cols();
        let mut acc = DMatrix::zeros(nn, nn);
        for y in ys.column_iter() {
            acc.ger(1.0, &y, &y, 1.0);
        }
        Ok(acc)
    }

    /// `sum_k sum_j sum_w theta_kw theta_jw y_kw (x) y_jw`.
    pub fn gram_from_rank_ones(&self) -> Result<DMatrix<f64>> {
        let ys = self.y_kw_table()?;
        let (m, b, nn) = (self.m(), self.b, self.total_cols());
        let mut acc = DMatrix::zeros(nn, nn);
        for k in 0..b {
            for j in 0..b {
                for w in 0..m {
                    let coeff = self.theta[k * m + w] * self.theta[j * m + w];
                    acc.ger(coeff, &ys.column(k * m + w), &ys.column(j * m + w), 1.0);
                }
            }
        }
        Ok(acc)
    }

    /// Largest entry of `|A^T A - sum theta theta y (x) y|`, with `A^T A`
    /// built from the dense matrix.
    pub fn gram_decomposition_check(&self) -> Result<f64> {
        let dense = self.to_dense()?;
        let gram = dense.tr_mul(&dense);
        let expansion = self.gram_from_rank_ones()?;
        Ok((gram - expansion).amax())
    }
}

impl LinearOperator for SparseCityMatrix {
    fn nrows(&self) -> usize {
        self.m()
    }

    fn ncols(&self) -> usize {
        self.total_cols()
    }

    /// `sum_j D_j W x_j` over the length-`n` segments `x_j` of `x`.
    fn apply_into(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        check_shapes(self.ncols(), x.len(), self.nrows(), out.len())?;
        let (m, n) = (self.m(), self.n());
        out.iter_mut().for_each(|v| *v = 0.0);
        let mut buf = vec![0.0; m];
        for (j, segment) in x.chunks_exact(n).enumerate() {
            buf[..n].copy_from_slice(segment);
            buf[n..].iter_mut().for_each(|v| *v = 0.0);
            fwht_in_place(&mut buf);
            for ((acc, &h), &t) in out.iter_mut().zip(&buf).zip(self.theta_block(j)) {
                *acc += t * h;
            }
        }
        Ok(())
    }

    /// Segment `j` of the result is `W^T (theta_j * y)`.
    fn adjoint_apply_into(&self, y: &[f64], out: &mut [f64]) -> Result<()> {
        check_shapes(self.nrows(), y.len(), self.ncols(), out.len())?;
        let n = self.n();
        let mut buf = vec![0.0; self.m()];
        for (j, segment) in out.chunks_exact_mut(n).enumerate() {
            for ((dst, &yi), &t) in buf.iter_mut().zip(y).zip(self.theta_block(j)) {
                *dst = t * yi;
            }
            fwht_adjoint_in_place(&mut buf);
            segment.copy_from_slice(&buf[..n]);
        }
        Ok(())
    }
}
