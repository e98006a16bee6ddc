//! Zero-temperature state in the maximum-spin block.

use crate::blocks::{block_spectrum, spin_x, two_m_of};
use crate::model::{CollectiveModelSpec, Family};
use nalgebra::DVector;
use serde::Serialize;
use spinmi_core::{Error, Result};

/// Number of eigenvalues of the symmetric tridiagonal matrix below `x`
/// (Sturm sequence).
fn count_below(diag: &[f64], off: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut q = 1.0;
    for i in 0..diag.len() {
        let coupling = if i == 0 { 0.0 } else { off[i - 1] * off[i - 1] / q };
        q = diag[i] - x - coupling;
        if q == 0.0 {
            q = -f64::EPSILON * (diag[i].abs() + x.abs()).max(f64::MIN_POSITIVE);
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// Solves `(T - shift) y = rhs` for a tridiagonal `T`; `T - shift` must be
/// positive definite.
fn solve_shifted(diag: &[f64], off: &[f64], shift: f64, rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut pivot = diag[0] - shift;
    c[0] = if n > 1 { off[0] / pivot } else { 0.0 };
    d[0] = rhs[0] / pivot;
    for i in 1..n {
        pivot = diag[i] - shift - off[i - 1] * c[i - 1];
        c[i] = if i + 1 < n { off[i] / pivot } else { 0.0 };
        d[i] = (rhs[i] - off[i - 1] * d[i - 1]) / pivot;
    }
    let mut y = vec![0.0; n];
    y[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        y[i] = d[i] - c[i] * y[i + 1];
    }
    y
}

/// Lowest eigenpair of a symmetric tridiagonal matrix: bisection on the
/// Sturm count, then inverse iteration just below the eigenvalue.
pub fn lowest_tridiagonal(diag: &[f64], off: &[f64]) -> Result<(f64, Vec<f64>)> {
    let n = diag.len();
    if n == 0 || off.len() + 1 != n {
        return Err(Error::InvalidModel("tridiagonal shape mismatch".into()));
    }
    let radius = |i: usize| {
        let left = if i > 0 { off[i - 1].abs() } else { 0.0 };
        let right = if i + 1 < n { off[i].abs() } else { 0.0 };
        left + right
    };
    let mut lo = (0..n).map(|i| diag[i] - radius(i)).fold(f64::INFINITY, f64::min);
    let mut hi = (0..n).map(|i| diag[i] + radius(i)).fold(f64::NEG_INFINITY, f64::max);
    let scale = lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE);
    while hi - lo > 4.0 * f64::EPSILON * scale {
        let mid = 0.5 * (lo + hi);
        if count_below(diag, off, mid) >= 1 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let shift = lo - 1e-10 * scale;
    let mut v = vec![1.0 / (n as f64).sqrt(); n];
    let mut previous = f64::INFINITY;
    for _ in 0..200 {
        let mut y = solve_shifted(diag, off, shift, &v);
        let norm = y.iter().map(|x| x * x).sum::<f64>().sqrt();
        y.iter_mut().for_each(|x| *x /= norm);
        let sign = if y.iter().map(|x| x.signum() * x * x).sum::<f64>() < 0.0 { -1.0 } else { 1.0 };
        y.iter_mut().for_each(|x| *x *= sign);
        let change = y.iter().zip(&v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        v = y;
        if change < 1e-14 || (change >= previous && change < 1e-10) {
            break;
        }
        previous = change;
    }
    let mut rayleigh = 0.0;
    for i in 0..n {
        rayleigh += v[i] * diag[i] * v[i];
        if i + 1 < n {
            rayleigh += 2.0 * v[i] * off[i] * v[i + 1];
        }
    }
    Ok((rayleigh, v))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Quantization {
    /// Amplitudes on `|s, m_x>`.
    X,
    /// Amplitudes on `|s, m_z>`.
    Z,
}

#[derive(Debug, Clone, Serialize)]
pub struct GroundState {
    pub energy: f64,
    pub two_s: usize,
    pub basis: Quantization,
    /// Real amplitudes on `m = -s, ..., s` of the chosen axis.
    pub amplitudes: Vec<f64>,
    /// `2 sqrt(<S_x^2>) / N`.
    pub m_x: f64,
}

/// Lowest state of the maximum-spin block. The Ising-type LMG model is
/// tridiagonal in the `x` basis and scales to thousands of spins; other
/// models diagonalise the dense block.
pub fn ground_state(spec: &CollectiveModelSpec) -> Result<GroundState> {
    spec.validate()?;
    let n = spec.spins;
    let two_s = n;
    let s = two_s as f64 / 2.0;
    if let Family::Lmg { anisotropy, field } = spec.family {
        if anisotropy == 0.0 {
            // In the x basis S_z couples neighbouring m_x by S_x's ladder
            // elements; the sign is a gauge choice.
            let diag: Vec<f64> = (0..=two_s).map(|i| -(two_m_of(two_s, i) as f64 / 2.0).powi(2) / n as f64).collect();
            let off: Vec<f64> = (0..two_s)
                .map(|i| {
                    let m = two_m_of(two_s, i) as f64 / 2.0;
                    -0.5 * field.abs() * (s * (s + 1.0) - m * (m + 1.0)).max(0.0).sqrt()
                })
                .collect();
            let (energy, amplitudes) = lowest_tridiagonal(&diag, &off)?;
            let sx2: f64 =
                amplitudes.iter().enumerate().map(|(i, a)| a * a * (two_m_of(two_s, i) as f64 / 2.0).powi(2)).sum();
            return Ok(GroundState {
                energy,
                two_s,
                basis: Quantization::X,
                amplitudes,
                m_x: 2.0 * sx2.sqrt() / n as f64,
            });
        }
    }
    let spectrum = block_spectrum(spec, two_s);
    let v: DVector<f64> = spectrum.vectors.column(0).into_owned();
    let sx = spin_x(two_s);
    let sx2 = (&sx * &sx * &v).dot(&v);
    Ok(GroundState {
        energy: spectrum.energies[0],
        two_s,
        basis: Quantization::Z,
        amplitudes: v.iter().copied().collect(),
        m_x: 2.0 * sx2.max(0.0).sqrt() / n as f64,
    })
}
