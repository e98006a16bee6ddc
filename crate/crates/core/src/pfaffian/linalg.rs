//! Log-domain determinants and Pfaffians of dense real matrices.

use crate::logweight::LogWeight;
use nalgebra::DMatrix;

/// Largest `|A + A^T|` entry accepted as skew-symmetric, relative to `max |A|`.
pub const SKEW_TOLERANCE: f64 = 1e-12;

/// `det(A)` by LU with partial pivoting; exact zero for a singular matrix.
pub fn log_det(matrix: &DMatrix<f64>) -> LogWeight {
    assert!(matrix.is_square(), "determinant of a non-square matrix");
    let n = matrix.nrows();
    let mut a = matrix.clone();
    let mut log_mag = 0.0;
    let mut sign: i8 = 1;
    for k in 0..n {
        let (piv, max) =
            (k..n).map(|i| (i, a[(i, k)].abs())).fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if max == 0.0 {
            return LogWeight::ZERO;
        }
        if piv != k {
            a.swap_rows(piv, k);
            sign = -sign;
        }
        let p = a[(k, k)];
        log_mag += p.abs().ln();
        if p < 0.0 {
            sign = -sign;
        }
        for i in k + 1..n {
            let f = a[(i, k)] / p;
            if f != 0.0 {
                for j in k + 1..n {
                    let v = a[(k, j)];
                    a[(i, j)] -= f * v;
                }
            }
        }
    }
    LogWeight::new(log_mag, sign)
}

pub fn is_skew_symmetric(matrix: &DMatrix<f64>) -> bool {
    if !matrix.is_square() {
        return false;
    }
    let scale = matrix.amax().max(f64::MIN_POSITIVE);
    let n = matrix.nrows();
    (0..n).all(|i| (0..=i).all(|j| (matrix[(i, j)] + matrix[(j, i)]).abs() <= SKEW_TOLERANCE * scale))
}

/// `Pf(A)` of a skew-symmetric matrix by skew-symmetric Gaussian elimination
/// with partial pivoting; each row/column swap flips the sign.
///
/// Panics if `A` is not skew-symmetric.
pub fn log_pfaffian(matrix: &DMatrix<f64>) -> LogWeight {
    assert!(is_skew_symmetric(matrix), "Pfaffian of a non-skew-symmetric matrix");
    let n = matrix.nrows();
    if n % 2 == 1 {
        return LogWeight::ZERO;
    }
    let mut a = matrix.clone();
    let mut log_mag = 0.0;
    let mut sign: i8 = 1;
    let mut k = 0;
    while k + 1 < n {
        let (piv, max) =
            (k + 1..n)
                .map(|i| (i, a[(i, k)].abs()))
                .fold((k + 1, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if max == 0.0 {
            return LogWeight::ZERO;
        }
        if piv != k + 1 {
            a.swap_rows(piv, k + 1);
            a.swap_columns(piv, k + 1);
            sign = -sign;
        }
        let p = a[(k, k + 1)];
        log_mag += p.abs().ln();
        if p < 0.0 {
            sign = -sign;
        }
        if k + 2 < n {
            let tau: Vec<f64> = (k + 2..n).map(|j| a[(k, j)] / p).collect();
            let col: Vec<f64> = (k + 2..n).map(|i| a[(i, k + 1)]).collect();
            for (ii, i) in (k + 2..n).enumerate() {
                for (jj, j) in (k + 2..n).enumerate() {
                    a[(i, j)] += tau[ii] * col[jj] - col[ii] * tau[jj];
                }
            }
        }
        k += 2;
    }
    LogWeight::new(log_mag, sign)
}
