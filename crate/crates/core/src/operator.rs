//! Matrix-free linear operators.
//!
//! Solvers and diagnostics only see an operator through [`LinearOperator`]:
//! its shape, `A x` and `A^T y`. Dense materialization goes through
//! [`LinearOperator::to_dense`] so that it can be counted and capped.

use std::sync::atomic::{AtomicUsize, Ordering};

use nalgebra::{DMatrix, DVector};

use crate::error::{check_len, Error, Result};

/// Default cap on the number of entries a dense materialization may hold.
pub const DENSE_ENTRY_LIMIT: usize = 1 << 22;

pub trait LinearOperator: Sync {
    fn nrows(&self) -> usize;

    fn ncols(&self) -> usize;

    /// `out <- A x`. Implementations check both lengths.
    fn apply_into(&self, x: &[f64], out: &mut [f64]) -> Result<()>;

    /// `out <- A^T y`. Implementations check both lengths.
    fn adjoint_apply_into(&self, y: &[f64], out: &mut [f64]) -> Result<()>;

    fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.nrows()];
        self.apply_into(x, &mut out)?;
        Ok(out)
    }

    fn adjoint_apply(&self, y: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.ncols()];
        self.adjoint_apply_into(y, &mut out)?;
        Ok(out)
    }

    /// Column `c`, i.e. `A e_c`.
    fn column(&self, c: usize) -> Result<Vec<f64>> {
        if c >= self.ncols() {
            return Err(Error::Index(format!("column {c} of {}", self.ncols())));
        }
        let mut e = vec![0.0; self.ncols()];
        e[c] = 1.0;
        self.apply(&e)
    }

    /// Dense matrix whose column `c` is `A e_c`.
    fn to_dense(&self) -> Result<DMatrix<f64>> {
        dense_by_columns(self, DENSE_ENTRY_LIMIT)
    }
}

impl<T: LinearOperator + ?Sized> LinearOperator for Box<T>
where
    Box<T>: Sync,
{
    fn nrows(&self) -> usize {
        (**self).nrows()
    }

    fn ncols(&self) -> usize {
        (**self).ncols()
    }

    fn apply_into(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        (**self).apply_into(x, out)
    }

    fn adjoint_apply_into(&self, y: &[f64], out: &mut [f64]) -> Result<()> {
        (**self).adjoint_apply_into(y, out)
    }

    fn to_dense(&self) -> Result<DMatrix<f64>> {
        (**self).to_dense()
    }
}

/// Builds the dense matrix column by column, refusing above `limit` entries.
pub fn dense_by_columns<A: LinearOperator + ?Sized>(op: &A, limit: usize) -> Result<DMatrix<f64>> {
    let (m, n) = (op.nrows(), op.ncols());
    let requested = m.saturating_mul(n);
    if requested > limit {
        return Err(Error::Size {
            requested,
            threshold: limit,
        });
    }
    let mut dense = DMatrix::zeros(m, n);
    let mut e = vec![0.0; n];
    let mut col = vec![0.0; m];
    for c in 0..n {
        e[c] = 1.0;
        op.apply_into(&e, &mut col)?;
        e[c] = 0.0;
        dense.column_mut(c).copy_from_slice(&col);
    }
    Ok(dense)
}

pub(crate) fn check_shapes(expected_in: usize, x: usize, expected_out: usize, out: usize) -> Result<()> {
    check_len(expected_in, x)?;
    check_len(expected_out, out)
}

/// An explicit dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseOperator {
    matrix: DMatrix<f64>,
}

impl DenseOperator {
    pub fn new(matrix: DMatrix<f64>) -> Self {
        Self { matrix }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.matrix
    }
}

impl LinearOperator for DenseOperator {
    fn nrows(&self) -> usize {
        self.matrix.nrows()
    }

    fn ncols(&self) -> usize {
        self.matrix.ncols()
    }

    fn apply_into(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        check_shapes(self.ncols(), x.len(), self.nrows(), out.len())?;
        let y = &self.matrix * DVector::from_column_slice(x);
        out.copy_from_slice(y.as_slice());
        Ok(())
    }

    fn adjoint_apply_into(&self, y: &[f64], out: &mut [f64]) -> Result<()> {
        check_shapes(self.nrows(), y.len(), self.ncols(), out.len())?;
        let x = self.matrix.tr_mul(&DVector::from_column_slice(y));
        out.copy_from_slice(x.as_slice());
        Ok(())
    }

    fn to_dense(&self) -> Result<DMatrix<f64>> {
        Ok(self.matrix.clone())
    }
}

/// Wraps an operator and counts how it is used.
#[derive(Debug)]
pub struct CountingOperator<'a, A: ?Sized> {
    inner: &'a A,
    applies: AtomicUsize,
    adjoint_applies: AtomicUsize,
    densifications: AtomicUsize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct OperatorUsage {
    pub applies: usize,
    pub adjoint_applies: usize,
    pub densifications: usize,
}

impl<'a, A: LinearOperator + ?Sized> CountingOperator<'a, A> {
    pub fn new(inner: &'a A) -> Self {
        Self {
            inner,
            applies: AtomicUsize::new(0),
            adjoint_applies: AtomicUsize::new(0),
            densifications: AtomicUsize::new(0),
        }
    }

    pub fn usage(&self) -> OperatorUsage {
        OperatorUsage {
            applies: self.applies.load(Ordering::Relaxed),
            adjoint_applies: self.adjoint_applies.load(Ordering::Relaxed),
            densifications: self.densifications.load(Ordering::Relaxed),
        }
    }
}

impl<A: LinearOperator + ?Sized> LinearOperator for CountingOperator<'_, A> {
    fn nrows(&self) -> usize {
        self.inner.nrows()
    }

    fn ncols(&self) -> usize {
        self.inner.ncols()
    }

    fn apply_into(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        self.applies.fetch_add(1, Ordering::Relaxed);
        self.inner.apply_into(x, out)
    }

    fn adjoint_apply_into(&self, y: &[f64], out: &mut [f64]) -> Result<()> {
        self.adjoint_applies.fetch_add(1, Ordering::Relaxed);
        self.inner.adjoint_apply_into(y, out)
    }

    fn to_dense(&self) -> Result<DMatrix<f64>> {
        self.densifications.fetch_add(1, Ordering::Relaxed);
        self.inner.to_dense()
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
