//! Hadamard-Walsh matrices, fast transforms and the Walsh function system.
//!
//! The matrices follow the recursion
//!
//! ```text
//! H_0 = [1],   H_k = 1/sqrt(2) * [ H_{k-1}  -H_{k-1} ]
//!                                [ H_{k-1}   H_{k-1} ]
//! ```
//!
//! Note the `-H` block sits top-right. This is not the `[[1, 1], [1, -1]]`
//! convention used by most FWHT references, and `H_k` is not symmetric, so
//! the forward and adjoint transforms differ and selecting "the first n
//! columns" depends on it.

use nalgebra::DMatrix;

use crate::error::{check_len, Error, Result};

/// Largest side length [`hadamard_matrix`] will materialize by default.
pub const DENSE_HADAMARD_LIMIT: usize = 1 << 12;

/// Entries with absolute value at or below this count as zero in `||.||_0`.
pub const ZERO_THRESHOLD: f64 = 1e-10;

/// Exponent `k` of a Hadamard-Walsh matrix with side `m = 2^k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct HadamardOrder {
    k: u32,
}

impl HadamardOrder {
    pub fn new(k: u32) -> Result<Self> {
        if k >= usize::BITS - 1 {
            return Err(Error::InvalidDimensions(format!("order 2^{k} is too large")));
        }
        Ok(Self { k })
    }

    /// Order whose side length is `m`; fails unless `m` is a power of two.
    pub fn from_len(m: usize) -> Result<Self> {
        if m == 0 || !m.is_power_of_two() {
            return Err(Error::InvalidDimensions(format!(
                "side length {m} is not a power of two"
            )));
        }
        Ok(Self {
            k: m.trailing_zeros(),
        })
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn len(&self) -> usize {
        1usize << self.k
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Magnitude `2^{-k/2}` shared by every entry of `H_k`.
    pub fn entry_scale(&self) -> f64 {
        (self.len() as f64).sqrt().recip()
    }
}

/// The `m x n` matrix made of the first `n` columns of `H_k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PartialWalsh {
    order: HadamardOrder,
    n: usize,
}

impl PartialWalsh {
    pub fn new(order: HadamardOrder, n: usize) -> Result<Self> {
        if n == 0 || n > order.len() {
            return Err(Error::InvalidDimensions(format!(
                "column count n = {n} must satisfy 1 <= n <= m = {}",
                order.len()
            )));
        }
        Ok(Self { order, n })
    }

    pub fn order(&self) -> HadamardOrder {
        self.order
    }

    pub fn rows(&self) -> usize {
        self.order.len()
    }

    pub fn cols(&self) -> usize {
        self.n
    }

    /// Dense `m x n` matrix, built from [`hadamard_matrix`].
    pub fn to_dense(&self) -> Result<DMatrix<f64>> {
        let h = hadamard_matrix(self.order)?;
        Ok(h.columns(0, self.n).into_owned())
    }
}

fn check_unit_interval(x: f64) -> Result<()> {
    if !(0.0..1.0).contains(&x) {
        return Err(Error::Domain(format!("x = {x} is outside [0, 1)")));
    }
    Ok(())
}

/// Rademacher function `r_n(x) = sign(sin(2^{n+1} pi x))` on `[0, 1)`.
///
/// The sign is read off the fractional part of `2^n x`, which is exact in
/// binary floating point. Where the sine vanishes the result is `+1`.
pub fn rademacher(n: u32, x: f64) -> Result<i8> {
    check_unit_interval(x)?;
    // Every double in [0, 1) is a multiple of 2^-1074, so 2^n x is an integer
    // (sine zero) once n exceeds that.
    if n > 1074 {
        return Ok(1);
    }
    let scaled = x * 2f64.powi(n as i32);
    let frac = scaled - scaled.floor();
    Ok(if frac > 0.5 { -1 } else { 1 })
}

/// Walsh function `W_n(x)`: the product of `r_j(x)` over the set bits `j` of `n`.
pub fn walsh_function(n: u64, x: f64) -> Result<i8> {
    check_unit_interval(x)?;
    let mut sign = 1i8;
    let mut bits = n;
    while bits != 0 {
        let j = bits.trailing_zeros();
        sign *= rademacher(j, x)?;
        bits &= bits - 1;
    }
    Ok(sign)
}

/// Dense `H_k` built by literally expanding the recursion.
pub fn hadamard_matrix(order: HadamardOrder) -> Result<DMatrix<f64>> {
    hadamard_matrix_with_limit(order, DENSE_HADAMARD_LIMIT)
}

pub fn hadamard_matrix_with_limit(order: HadamardOrder, limit: usize) -> Result<DMatrix<f64>> {
    let m = order.len();
    if m > limit {
        return Err(Error::Size {
            requested: m * m,
            threshold: limit * limit,
        });
    }
    let mut h = DMatrix::from_element(1, 1, 1.0);
    let r = std::f64::consts::FRAC_1_SQRT_2;
    for _ in 0..order.k() {
        let p = h.nrows();
        let mut next = DMatrix::zeros(2 * p, 2 * p);
        for i in 0..p {
            for j in 0..p {
                let v = r * h[(i, j)];
                next[(i, j)] = v;
                next[(i, j + p)] = -v;
                next[(i + p, j)] = v;
                next[(i + p, j + p)] = v;
            }
        }
        h = next;
    }
    Ok(h)
}

/// In-place `v <- H_k v`.
///
/// Each stage combines pairs `(a, b)` at distance `h` into
/// `((a - b)/sqrt 2, (a + b)/sqrt 2)`; the `1/sqrt 2` is applied per stage.
pub fn fwht_in_place(v: &mut [f64]) {
    debug_assert!(v.len().is_power_of_two());
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let len = v.len();
    let mut h = 1;
    while h < len {
        for block in v.chunks_exact_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = r * (x - y);
                *b = r * (x + y);
            }
        }
        h *= 2;
    }
}

/// In-place `v <- H_k^T v`.
pub fn fwht_adjoint_in_place(v: &mut [f64]) {
    debug_assert!(v.len().is_power_of_two());
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let len = v.len();
    let mut h = len / 2;
    while h >= 1 {
        for block in v.chunks_exact_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = r * (x + y);
                *b = r * (y - x);
            }
        }
        h /= 2;
    }
}

/// In-place unnormalized transform `v <- 2^{k/2} H_k v` in integer arithmetic.
///
/// Only additions and subtractions are used. The caller is responsible for
/// keeping `len * max|v|` within `i64`.
pub fn fwht_integer_in_place(v: &mut [i64]) {
    debug_assert!(v.len().is_power_of_two());
    let len = v.len();
    let mut h = 1;
    while h < len {
        for block in v.chunks_exact_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = x - y;
                *b = x + y;
            }
        }
        h *= 2;
    }
}

pub fn fwht_apply(order: HadamardOrder, v: &[f64]) -> Result<Vec<f64>> {
    check_len(order.len(), v.len())?;
    let mut out = v.to_vec();
    fwht_in_place(&mut out);
    Ok(out)
}

pub fn fwht_adjoint_apply(order: HadamardOrder, v: &[f64]) -> Result<Vec<f64>> {
    check_len(order.len(), v.len())?;
    let mut out = v.to_vec();
    fwht_adjoint_in_place(&mut out);
    Ok(out)
}

/// `W_n^m x`: the transform of `x` zero-padded to length `m`.
pub fn partial_apply(pw: &PartialWalsh, x: &[f64]) -> Result<Vec<f64>> {
    check_len(pw.cols(), x.len())?;
    let mut out = vec![0.0; pw.rows()];
    out[..x.len()].copy_from_slice(x);
    fwht_in_place(&mut out);
    Ok(out)
}

/// `(W_n^m)^T y`: the first `n` entries of the adjoint transform.
pub fn partial_adjoint_apply(pw: &PartialWalsh, y: &[f64]) -> Result<Vec<f64>> {
    check_len(pw.rows(), y.len())?;
    let mut out = y.to_vec();
    fwht_adjoint_in_place(&mut out);
    out.truncate(pw.cols());
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UncertaintyCheck {
    /// Nonzero count of `y`.
    pub s_time: usize,
    /// Nonzero count of `H^T y`.
    pub s_freq: usize,
    /// Whether `s_time + s_freq >= 2 sqrt(m)`.
    pub holds: bool,
}

pub fn uncertainty_check(order: HadamardOrder, y: &[f64]) -> Result<UncertaintyCheck> {
    uncertainty_check_with_threshold(order, y, ZERO_THRESHOLD)
}

pub fn uncertainty_check_with_threshold(
    order: HadamardOrder,
    y: &[f64],
    tau: f64,
) -> Result<UncertaintyCheck> {
    check_len(order.len(), y.len())?;
    let count = |v: &[f64]| v.iter().filter(|e| e.abs() > tau).count();
    let s_time = count(y);
    if s_time == 0 {
        return Err(Error::Domain("uncertainty check needs a nonzero vector".into()));
    }
    let s_freq = count(&fwht_adjoint_apply(order, y)?);
    let holds = ((s_time + s_freq) as f64) >= 2.0 * (order.len() as f64).sqrt();
    Ok(UncertaintyCheck {
        s_time,
        s_freq,
        holds,
    })
}

/// Walsh function matched by column `j` of `H_k`, as observed for this sign
/// convention: sampling `sqrt(m) H_k[:, j]` at row midpoints `(i + 1/2)/m`
/// gives `sign * W_index`, where `index` is `j` with its `k` bits reversed
/// and `sign = (-1)^popcount(j)`.
pub fn walsh_index_of_column(order: HadamardOrder, j: usize) -> (u64, i8) {
    let k = order.k();
    let index = if k == 0 {
        0
    } else {
        (j as u64).reverse_bits() >> (64 - k)
    };
    let sign = if j.count_ones() % 2 == 0 { 1 } else { -1 };
    (index, sign)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const S: f64 = std::f64::consts::FRAC_1_SQRT_2;

    fn order(k: u32) -> HadamardOrder {
        HadamardOrder::new(k).unwrap()
    }

    fn dense_mul(h: &DMatrix<f64>, v: &[f64]) -> Vec<f64> {
        (h * nalgebra::DVector::from_column_slice(v)).as_slice().to_vec()
    }

    fn rel_err(a: &[f64], b: &[f64]) -> f64 {
        let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        let den: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
        if den == 0.0 {
            num
        } else {
            num / den
        }
    }

    #[test]
    fn order_rejects_non_powers() {
        assert!(HadamardOrder::from_len(0).is_err());
        assert!(HadamardOrder::from_len(12).is_err());
        assert_eq!(HadamardOrder::from_len(1024).unwrap().k(), 10);
        assert!(PartialWalsh::new(order(2), 5).is_err());
        assert!(PartialWalsh::new(order(2), 0).is_err());
    }

    #[test]
    fn rademacher_examples() {
        assert_eq!(rademacher(0, 0.25).unwrap(), 1);
        assert_eq!(rademacher(0, 0.75).unwrap(), -1);
        // sin(1.2 pi) < 0
        assert_eq!(rademacher(1, 0.30).unwrap(), -1);
        // zeros of the sine map to +1
        assert_eq!(rademacher(0, 0.0).unwrap(), 1);
        assert_eq!(rademacher(0, 0.5).unwrap(), 1);
        assert_eq!(rademacher(1, 0.5).unwrap(), 1);
        assert_eq!(rademacher(3000, 0.3).unwrap(), 1);
        assert!(rademacher(0, 1.0).is_err());
        assert!(rademacher(0, -0.1).is_err());
        assert!(rademacher(0, f64::NAN).is_err());
    }

    #[test]
    fn rademacher_matches_sine_away_from_zeros() {
        for n in 0..8u32 {
            for t in 0..997 {
                let x = (t as f64 + 0.37) / 997.0;
                let s = (2f64.powi(n as i32 + 1) * std::f64::consts::PI * x).sin();
                if s.abs() > 1e-6 {
                    let expected = if s > 0.0 { 1 } else { -1 };
                    assert_eq!(rademacher(n, x).unwrap(), expected, "n={n} x={x}");
                }
            }
        }
    }

    #[test]
    fn walsh_examples() {
        for x in [0.0, 0.1, 0.33, 0.9] {
            assert_eq!(walsh_function(0, x).unwrap(), 1);
            assert_eq!(
                walsh_function(3, x).unwrap(),
                rademacher(1, x).unwrap() * rademacher(0, x).unwrap()
            );
        }
        // r_2(0.1) = sign(sin(0.8 pi)) = +1, r_0(0.1) = sign(sin(0.2 pi)) = +1
        let r2 = (8.0 * std::f64::consts::PI * 0.1).sin().signum();
        let r0 = (2.0 * std::f64::consts::PI * 0.1).sin().signum();
        assert_eq!(walsh_function(5, 0.10).unwrap() as f64, r2 * r0);
        assert_eq!(walsh_function(5, 0.10).unwrap(), 1);
        assert!(walsh_function(5, 1.5).is_err());
    }

    #[test]
    fn hadamard_small_orders() {
        let h0 = hadamard_matrix(order(0)).unwrap();
        assert_eq!(h0, DMatrix::from_element(1, 1, 1.0));
        let h1 = hadamard_matrix(order(1)).unwrap();
        assert_eq!(h1, DMatrix::from_row_slice(2, 2, &[S, -S, S, S]));
        let h2 = hadamard_matrix(order(2)).unwrap();
        #[rustfmt::skip]
        let expected = DMatrix::from_row_slice(4, 4, &[
            1.0, -1.0, -1.0,  1.0,
            1.0,  1.0, -1.0, -1.0,
            1.0, -1.0,  1.0, -1.0,
            1.0,  1.0,  1.0,  1.0,
        ]) * 0.5;
        assert!((h2 - expected).amax() < 1e-15);
    }

    #[test]
    fn hadamard_is_orthogonal() {
        for k in 0..=6 {
            let h = hadamard_matrix(order(k)).unwrap();
            let m = h.nrows();
            let g = h.transpose() * &h;
            assert!((g - DMatrix::identity(m, m)).amax() < 1e-12, "k={k}");
        }
    }

    #[test]
    fn hadamard_threshold() {
        assert!(matches!(
            hadamard_matrix_with_limit(order(5), 16),
            Err(Error::Size { .. })
        ));
        assert!(hadamard_matrix(order(13)).is_err());
    }

    #[test]
    fn fwht_examples() {
        let o = order(1);
        let a = fwht_apply(o, &[1.0, 0.0]).unwrap();
        assert!((a[0] - S).abs() < 1e-15 && (a[1] - S).abs() < 1e-15);
        let b = fwht_apply(o, &[0.0, 1.0]).unwrap();
        assert!((b[0] + S).abs() < 1e-15 && (b[1] - S).abs() < 1e-15);
        let c = fwht_adjoint_apply(o, &[1.0, 0.0]).unwrap();
        assert!((c[0] - S).abs() < 1e-15 && (c[1] + S).abs() < 1e-15);
        assert!(matches!(
            fwht_apply(o, &[1.0, 2.0, 3.0]),
            Err(Error::Shape { expected: 2, actual: 3 })
        ));
        assert!(fwht_adjoint_apply(o, &[1.0]).is_err());
    }

    #[test]
    fn fwht_matches_dense_at_order_three_and_four() {
        let mut rng = crate::rng::stream(5);
        for k in [3u32, 4] {
            let o = order(k);
            let h = hadamard_matrix(o).unwrap();
            for _ in 0..20 {
                let v: Vec<f64> = (0..o.len()).map(|_| crate::rng::unit_f64(&mut rng) - 0.5).collect();
                assert!(rel_err(&fwht_apply(o, &v).unwrap(), &dense_mul(&h, &v)) < 1e-12);
                let ht = h.transpose();
                assert!(rel_err(&fwht_adjoint_apply(o, &v).unwrap(), &dense_mul(&ht, &v)) < 1e-12);
            }
        }
    }

    #[test]
    fn fwht_columns_match_dense_columns() {
        for k in 0..=7 {
            let o = order(k);
            let h = hadamard_matrix(o).unwrap();
            for j in 0..o.len() {
                let mut e = vec![0.0; o.len()];
                e[j] = 1.0;
                let col = fwht_apply(o, &e).unwrap();
                for i in 0..o.len() {
                    assert!((col[i] - h[(i, j)]).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn integer_transform_is_scaled_float_transform() {
        let o = order(5);
        let x: Vec<i64> = (0..32).map(|i| (i * 7 % 13) - 6).collect();
        let mut z = x.clone();
        fwht_integer_in_place(&mut z);
        let xf: Vec<f64> = x.iter().map(|&v| v as f64).collect();
        let f = fwht_apply(o, &xf).unwrap();
        let s = (32f64).sqrt();
        for (zi, fi) in z.iter().zip(&f) {
            assert!((*zi as f64 - s * fi).abs() < 1e-9);
        }
    }

    #[test]
    fn partial_examples() {
        let o = order(2);
        let full = PartialWalsh::new(o, 4).unwrap();
        let x = [0.3, -1.0, 2.0, 0.5];
        assert_eq!(partial_apply(&full, &x).unwrap(), fwht_apply(o, &x).unwrap());

        let pw = PartialWalsh::new(o, 2).unwrap();
        let h = hadamard_matrix(o).unwrap();
        let e1 = partial_apply(&pw, &[1.0, 0.0]).unwrap();
        for i in 0..4 {
            assert!((e1[i] - h[(i, 0)]).abs() < 1e-15);
        }
        let sum = partial_apply(&pw, &[1.0, 1.0]).unwrap();
        for i in 0..4 {
            assert!((sum[i] - (h[(i, 0)] + h[(i, 1)])).abs() < 1e-15);
        }
        assert!(partial_apply(&pw, &[1.0]).is_err());
        assert!(partial_adjoint_apply(&pw, &[1.0, 2.0]).is_err());
        assert_eq!(partial_adjoint_apply(&pw, &[0.0; 4]).unwrap(), vec![0.0, 0.0]);

        let y = partial_apply(&full, &x).unwrap();
        let back = partial_adjoint_apply(&full, &y).unwrap();
        assert!(rel_err(&back, &x) < 1e-14);
    }

    #[test]
    fn partial_dense_matches() {
        let o = order(3);
        let pw = PartialWalsh::new(o, 3).unwrap();
        let d = pw.to_dense().unwrap();
        assert_eq!(d.shape(), (8, 3));
        let x = [0.5, -0.25, 1.0];
        assert!(rel_err(&partial_apply(&pw, &x).unwrap(), &dense_mul(&d, &x)) < 1e-14);
    }

    #[test]
    fn uncertainty_examples() {
        let o = order(2);
        let r = uncertainty_check(o, &[1.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!((r.s_time, r.s_freq, r.holds), (1, 4, true));
        let h = hadamard_matrix(o).unwrap();
        let col: Vec<f64> = h.column(0).iter().copied().collect();
        let r = uncertainty_check(o, &col).unwrap();
        assert_eq!((r.s_time, r.s_freq, r.holds), (4, 1, true));
        assert!(matches!(uncertainty_check(o, &[0.0; 4]), Err(Error::Domain(_))));
        assert!(uncertainty_check(o, &[1.0; 3]).is_err());
    }

    #[test]
    fn walsh_columns_follow_bit_reversed_index() {
        for k in 0..=4u32 {
            let o = order(k);
            let m = o.len();
            let h = hadamard_matrix(o).unwrap() * (m as f64).sqrt();
            for j in 0..m {
                let (index, sign) = walsh_index_of_column(o, j);
                for i in 0..m {
                    let x = (i as f64 + 0.5) / m as f64;
                    let w = walsh_function(index, x).unwrap() * sign;
                    assert_eq!(h[(i, j)].round() as i8, w, "k={k} i={i} j={j}");
                }
            }
        }
    }

    proptest! {
        #[test]
        fn adjoint_round_trip(k in 0u32..9, seed in any::<u64>()) {
            let o = order(k);
            let mut rng = crate::rng::stream(seed);
            let v: Vec<f64> = (0..o.len()).map(|_| crate::rng::unit_f64(&mut rng) * 2.0 - 1.0).collect();
            let back = fwht_adjoint_apply(o, &fwht_apply(o, &v).unwrap()).unwrap();
            prop_assert!(rel_err(&back, &v) < 1e-12);
        }

        #[test]
        fn partial_adjoint_identity(k in 1u32..7, n_frac in 0.0f64..1.0, seed in any::<u64>()) {
            let o = order(k);
            let n = 1 + ((o.len() - 1) as f64 * n_frac) as usize;
            let pw = PartialWalsh::new(o, n).unwrap();
            let mut rng = crate::rng::stream(seed);
            let x: Vec<f64> = (0..n).map(|_| crate::rng::unit_f64(&mut rng) - 0.5).collect();
            let y: Vec<f64> = (0..o.len()).map(|_| crate::rng::unit_f64(&mut rng) - 0.5).collect();
            let lhs: f64 = partial_apply(&pw, &x).unwrap().iter().zip(&y).map(|(a, b)| a * b).sum();
            let rhs: f64 = x.iter().zip(partial_adjoint_apply(&pw, &y).unwrap()).map(|(a, b)| a * b).sum();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
        }
    }

    #[test]
    fn uncertainty_holds_for_random_vectors() {
        let mut rng = crate::rng::stream(99);
        for k in [4u32, 6] {
            let o = order(k);
            for t in 0..1000 {
                let mut v: Vec<f64> = (0..o.len()).map(|_| crate::rng::unit_f64(&mut rng) - 0.5).collect();
                // alternate dense vectors with sparse ones of random support size
                if t % 2 == 1 {
                    let keep = 1 + crate::rng::uniform_index(&mut rng, o.len());
                    let support = crate::rng::sample_subset(&mut rng, o.len(), keep);
                    for (i, e) in v.iter_mut().enumerate() {
                        if support.binary_search(&i).is_err() {
                            *e = 0.0;
                        }
                    }
                }
                assert!(uncertainty_check(o, &v).unwrap().holds);
            }
        }
    }
}
