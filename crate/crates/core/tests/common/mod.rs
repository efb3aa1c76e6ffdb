//! Independent oracles shared by the integration tests. Nothing here calls
//! the library's transforms or eigensolver.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};

/// Orthonormal Hadamard matrix by the recursion `H_{k+1} = [[H, -H], [H, H]] / sqrt(2)`.
pub fn sylvester(k: u32) -> DMatrix<f64> {
    let mut h = DMatrix::from_element(1, 1, 1.0);
    let r = std::f64::consts::FRAC_1_SQRT_2;
    for _ in 0..k {
        let n = h.nrows();
        let mut next = DMatrix::zeros(2 * n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                let v = h[(i, j)] * r;
                next[(i, j)] = v;
                next[(i, j + n)] = -v;
                next[(i + n, j)] = v;
                next[(i + n, j + n)] = v;
            }
        }
        h = next;
    }
    h
}

/// `max |lambda - 1|` of `G[S, S]` over all size-`s` subsets `S`, by bitmask
/// enumeration and nalgebra's symmetric eigensolver.
pub fn brute_force_delta(a: &DMatrix<f64>, s: usize) -> f64 {
    let n = a.ncols();
    assert!(n < 64);
    let gram = a.tr_mul(a);
    let mut best = 0.0f64;
    for mask in 0u64..(1u64 << n) {
        if mask.count_ones() as usize != s {
            continue;
        }
        let idx: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
        let sub = DMatrix::from_fn(s, s, |i, j| gram[(idx[i], idx[j])]);
        for e in sub.symmetric_eigen().eigenvalues.iter() {
            best = best.max((e - 1.0).abs());
        }
    }
    best
}

/// Minimizer of `||x||_1` subject to `A x = y` by enumerating the basic
/// feasible solutions of `min 1^T (u + v)`, `[A, -A] (u; v) = y`, `u, v >= 0`.
/// Also returns how many distinct vertices attain the minimum.
pub fn lp_vertex_oracle(a: &DMatrix<f64>, y: &[f64]) -> (Vec<f64>, usize) {
    let (m, n) = a.shape();
    let big = DMatrix::from_fn(m, 2 * n, |i, j| if j < n { a[(i, j)] } else { -a[(i, j - n)] });
    let rhs = DVector::from_column_slice(y);
    let mut vertices: Vec<(f64, Vec<f64>)> = Vec::new();
    for mask in 0u64..(1u64 << (2 * n)) {
        if mask.count_ones() as usize != m {
            continue;
        }
        let cols: Vec<usize> = (0..2 * n).filter(|i| mask >> i & 1 == 1).collect();
        let basis = DMatrix::from_fn(m, m, |i, j| big[(i, cols[j])]);
        if basis.determinant().abs() < 1e-12 {
            continue;
        }
        let sol = basis.lu().solve(&rhs).expect("nonsingular");
        if sol.iter().any(|v| *v < -1e-12) {
            continue;
        }
        let mut x = vec![0.0; n];
        for (k, &c) in cols.iter().enumerate() {
            if c < n {
                x[c] += sol[k];
            } else {
                x[c - n] -= sol[k];
            }
        }
        vertices.push((sol.iter().sum(), x));
    }
    let best = vertices.iter().map(|(o, _)| *o).fold(f64::INFINITY, f64::min);
    let mut minimizers: Vec<Vec<f64>> = Vec::new();
    for (o, x) in vertices {
        let dup = minimizers.iter().any(|d| d.iter().zip(&x).all(|(p, q)| (p - q).abs() < 1e-9));
        if (o - best).abs() < 1e-9 && !dup {
            minimizers.push(x);
        }
    }
    let count = minimizers.len();
    (minimizers.swap_remove(0), count)
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(0.0f64, |acc, (x, y)| acc.max((x - y).abs()))
}

pub fn norm(a: &[f64]) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}
