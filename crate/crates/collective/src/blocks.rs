//! Total-spin blocks `h^(s)` in the `|s, m>` basis, `m = -s, ..., s` ascending.
//!
//! Ladder operators follow the Condon-Shortley convention (positive
//! matrix elements), which the recoupling code relies on.

use crate::model::{mn_coupling, CollectiveModelSpec, Family};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;
use serde::Serialize;

/// `<m+1| S_+ |m>` for spin `two_s / 2`.
pub fn raising_element(two_s: usize, two_m: i64) -> f64 {
    let s = two_s as f64 / 2.0;
    let m = two_m as f64 / 2.0;
    (s * (s + 1.0) - m * (m + 1.0)).max(0.0).sqrt()
}

pub fn block_dim(two_s: usize) -> usize {
    two_s + 1
}

/// `2m` of basis index `i`.
pub fn two_m_of(two_s: usize, i: usize) -> i64 {
    2 * i as i64 - two_s as i64
}

pub fn spin_z(two_s: usize) -> DMatrix<f64> {
    let d = block_dim(two_s);
    DMatrix::from_fn(d, d, |i, j| if i == j { two_m_of(two_s, i) as f64 / 2.0 } else { 0.0 })
}

pub fn spin_plus(two_s: usize) -> DMatrix<f64> {
    let d = block_dim(two_s);
    let mut m = DMatrix::zeros(d, d);
    for i in 0..d.saturating_sub(1) {
        m[(i + 1, i)] = raising_element(two_s, two_m_of(two_s, i));
    }
    m
}

pub fn spin_x(two_s: usize) -> DMatrix<f64> {
    let p = spin_plus(two_s);
    (&p + p.transpose()) * 0.5
}

/// `S_y^2 = -(S_+ - S_-)^2 / 4`, which is real.
pub fn spin_y_squared(two_s: usize) -> DMatrix<f64> {
    let p = spin_plus(two_s);
    let diff = &p - p.transpose();
    -(&diff * &diff) * 0.25
}

fn matrix_power(base: &DMatrix<f64>, exponent: u32) -> DMatrix<f64> {
    let mut out = DMatrix::identity(base.nrows(), base.ncols());
    for _ in 0..exponent {
        out = &out * base;
    }
    out
}

/// Block Hamiltonian for total spin `two_s / 2`.
pub fn build_block(spec: &CollectiveModelSpec, two_s: usize) -> DMatrix<f64> {
    let n = spec.spins as f64;
    let d = block_dim(two_s);
    match spec.family {
        Family::Lmg { anisotropy, field } => {
            let s = two_s as f64 / 2.0;
            let mut h = DMatrix::zeros(d, d);
            for i in 0..d {
                let m = two_m_of(two_s, i) as f64 / 2.0;
                h[(i, i)] = -(1.0 + anisotropy) / (2.0 * n) * (s * (s + 1.0) - m * m) + field * m;
                if i + 2 < d {
                    let up2 =
                        raising_element(two_s, two_m_of(two_s, i)) * raising_element(two_s, two_m_of(two_s, i + 1));
                    let v = -(1.0 - anisotropy) / (4.0 * n) * up2;
                    h[(i + 2, i)] = v;
                    h[(i, i + 2)] = v;
                }
            }
            h
        }
        Family::Mn { x_order, z_order, angle } => {
            let k = mn_coupling(x_order, z_order);
            let sx = spin_x(two_s) * (2.0 / n);
            let sz = spin_z(two_s) * (2.0 / n);
            -(matrix_power(&sx, x_order) * angle.cos() + matrix_power(&sz, z_order) * (k * angle.sin())) * n
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BlockSpectrum {
    pub two_s: usize,
    /// Ascending eigenvalues.
    pub energies: Vec<f64>,
    /// Column `alpha` holds the eigenvector `a_{alpha; m}`.
    #[serde(skip)]
    pub vectors: DMatrix<f64>,
}

pub fn diagonalize(matrix: DMatrix<f64>, two_s: usize) -> BlockSpectrum {
    let eig = SymmetricEigen::new(matrix);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let energies = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(eig.eigenvectors.nrows(), order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
    BlockSpectrum { two_s, energies, vectors }
}

pub fn block_spectrum(spec: &CollectiveModelSpec, two_s: usize) -> BlockSpectrum {
    diagonalize(build_block(spec, two_s), two_s)
}

/// Spectra of every admissible block, ascending in `s`.
pub fn all_spectra(spec: &CollectiveModelSpec) -> Vec<BlockSpectrum> {
    let n = spec.spins;
    let two_spins: Vec<usize> = (n % 2..=n).step_by(2).collect();
    two_spins.into_par_iter().map(|t| block_spectrum(spec, t)).collect()
}

/// `<alpha| O |alpha>` for every eigenvector.
pub fn diagonal_expectations(spectrum: &BlockSpectrum, op: &DMatrix<f64>) -> DVector<f64> {
    let v = &spectrum.vectors;
    let ov = op * v;
    DVector::from_fn(v.ncols(), |a, _| v.column(a).dot(&ov.column(a)))
}
