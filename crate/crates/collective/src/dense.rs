//! Full `2^N` Hilbert-space oracle for small collective models.
//!
//! Basis index bit `i` is spin `i`, with bit value 0 meaning `S_z = +1/2`.
//! Subsystem A is spins `0..L`.

use crate::model::{mn_coupling, CollectiveModelSpec, Family};
use nalgebra::{DMatrix, SymmetricEigen};
use spinmi_core::{Error, Result};

pub const DENSE_SPIN_BOUND: usize = 12;

fn collective_x(n: usize) -> DMatrix<f64> {
    let dim = 1usize << n;
    let mut m = DMatrix::zeros(dim, dim);
    for b in 0..dim {
        for i in 0..n {
            m[(b ^ (1 << i), b)] += 0.5;
        }
    }
    m
}

fn collective_z(n: usize) -> DMatrix<f64> {
    let dim = 1usize << n;
    DMatrix::from_fn(dim, dim, |r, c| if r == c { n as f64 / 2.0 - r.count_ones() as f64 } else { 0.0 })
}

fn collective_plus(n: usize) -> DMatrix<f64> {
    let dim = 1usize << n;
    let mut m = DMatrix::zeros(dim, dim);
    for b in 0..dim {
        for i in 0..n {
            if b & (1 << i) != 0 {
                m[(b & !(1 << i), b)] += 1.0;
            }
        }
    }
    m
}

fn power(base: &DMatrix<f64>, k: u32) -> DMatrix<f64> {
    let mut out = DMatrix::identity(base.nrows(), base.ncols());
    for _ in 0..k {
        out = &out * base;
    }
    out
}

pub fn dense_hamiltonian(spec: &CollectiveModelSpec) -> Result<DMatrix<f64>> {
    spec.validate()?;
    let n = spec.spins;
    if n > DENSE_SPIN_BOUND {
        return Err(Error::TooLarge { states: (n as f64).exp2(), bound: (DENSE_SPIN_BOUND as f64).exp2() });
    }
    let nf = n as f64;
    let sx = collective_x(n);
    let sz = collective_z(n);
    Ok(match spec.family {
        Family::Lmg { anisotropy, field } => {
            let p = collective_plus(n);
            let diff = &p - p.transpose();
            let sy2 = -(&diff * &diff) * 0.25;
            -(&sx * &sx + sy2 * anisotropy) / nf + sz * field
        }
        Family::Mn { x_order, z_order, angle } => {
            let k = mn_coupling(x_order, z_order);
            -(power(&(sx * (2.0 / nf)), x_order) * angle.cos() + power(&(sz * (2.0 / nf)), z_order) * (k * angle.sin()))
                * nf
        }
    })
}

fn entropy_bits(values: impl Iterator<Item = f64>) -> f64 {
    values.filter(|&v| v > 0.0).map(|v| -v * v.log2()).sum()
}

pub struct DenseModel {
    pub spins: usize,
    pub beta: f64,
    pub energies: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

impl DenseModel {
    pub fn new(spec: &CollectiveModelSpec) -> Result<Self> {
        let h = dense_hamiltonian(spec)?;
        let eig = SymmetricEigen::new(h);
        Ok(DenseModel {
            spins: spec.spins,
            beta: spec.beta,
            energies: eig.eigenvalues.iter().copied().collect(),
            vectors: eig.eigenvectors,
        })
    }

    pub fn sorted_energies(&self) -> Vec<f64> {
        let mut e = self.energies.clone();
        e.sort_by(f64::total_cmp);
        e
    }

    fn probabilities(&self) -> Vec<f64> {
        let e0 = self.energies.iter().copied().fold(f64::INFINITY, f64::min);
        let w: Vec<f64> = self.energies.iter().map(|e| (-self.beta * (e - e0)).exp()).collect();
        let z: f64 = w.iter().sum();
        w.into_iter().map(|x| x / z).collect()
    }

    pub fn log_z(&self) -> f64 {
        let e0 = self.energies.iter().copied().fold(f64::INFINITY, f64::min);
        let z: f64 = self.energies.iter().map(|e| (-self.beta * (e - e0)).exp()).sum();
        z.ln() - self.beta * e0
    }

    pub fn density(&self) -> DMatrix<f64> {
        let p = self.probabilities();
        let scaled = DMatrix::from_fn(self.vectors.nrows(), self.vectors.ncols(), |r, c| self.vectors[(r, c)] * p[c]);
        &scaled * self.vectors.transpose()
    }

    fn check_size(&self, size_a: usize) -> Result<()> {
        if size_a == 0 || size_a >= self.spins {
            return Err(Error::PartitionMismatch(format!("cannot put {size_a} of {} spins in A", self.spins)));
        }
        Ok(())
    }

    /// Traces out every spin outside `keep` (a contiguous low or high range).
    fn partial_trace(rho: &DMatrix<f64>, n: usize, size_a: usize, keep_low: bool) -> DMatrix<f64> {
        let (kept, traced) = if keep_low { (size_a, n - size_a) } else { (n - size_a, size_a) };
        let dk = 1usize << kept;
        let mut out = DMatrix::zeros(dk, dk);
        let index = |k: usize, t: usize| if keep_low { k | (t << size_a) } else { t | (k << size_a) };
        for t in 0..1usize << traced {
            for a in 0..dk {
                for b in 0..dk {
                    out[(a, b)] += rho[(index(a, t), index(b, t))];
                }
            }
        }
        out
    }

    /// Eigenvalues of `rho_A` for A = the first `size_a` spins.
    pub fn reduced_spectrum(&self, size_a: usize) -> Result<Vec<f64>> {
        self.check_size(size_a)?;
        let rho_a = Self::partial_trace(&self.density(), self.spins, size_a, true);
        Ok(SymmetricEigen::new(rho_a).eigenvalues.iter().copied().collect())
    }

    pub fn mutual_information(&self, size_a: usize) -> Result<f64> {
        self.check_size(size_a)?;
        let rho = self.density();
        let ea = entropy_bits(
            SymmetricEigen::new(Self::partial_trace(&rho, self.spins, size_a, true)).eigenvalues.iter().copied(),
        );
        let eb = entropy_bits(
            SymmetricEigen::new(Self::partial_trace(&rho, self.spins, size_a, false)).eigenvalues.iter().copied(),
        );
        let eab = entropy_bits(self.probabilities().into_iter());
        Ok(ea + eb - eab)
    }

    /// Twice the entanglement entropy of the lowest eigenvector.
    pub fn ground_state_mi(&self, size_a: usize) -> Result<f64> {
        self.check_size(size_a)?;
        let lowest = (0..self.energies.len()).min_by(|&a, &b| self.energies[a].total_cmp(&self.energies[b])).unwrap();
        let v = self.vectors.column(lowest);
        let rho = &v * v.transpose();
        let rho_a = Self::partial_trace(&rho, self.spins, size_a, true);
        Ok(2.0 * entropy_bits(SymmetricEigen::new(rho_a).eigenvalues.iter().copied()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blocks::all_spectra;
    use crate::multiplicity::multiplicities;
    use crate::thermal::ThermalState;

    fn block_spectrum_with_multiplicity(spec: &CollectiveModelSpec) -> Vec<f64> {
        let table = multiplicities(spec.spins);
        let mut all = Vec::new();
        for b in all_spectra(spec) {
            let d = table.degeneracy(b.two_s).unwrap();
            for _ in 0..d {
                all.extend(&b.energies);
            }
        }
        all.sort_by(f64::total_cmp);
        all
    }

    #[test]
    fn block_spectra_reproduce_full_spectrum() {
        for spec in [
            CollectiveModelSpec::lmg(8, 0.0, 1.0, 1.0),
            CollectiveModelSpec::lmg(8, 0.25, 0.3, 1.0),
            CollectiveModelSpec::lmg(7, 1.0, 0.6, 1.0),
            CollectiveModelSpec::mn(8, 3, 2, 0.9, 1.0),
        ] {
            let dense = DenseModel::new(&spec).unwrap().sorted_energies();
            let blocks = block_spectrum_with_multiplicity(&spec);
            assert_eq!(dense.len(), blocks.len());
            for (a, b) in dense.iter().zip(&blocks) {
                assert!((a - b).abs() < 1e-11, "{spec:?}");
            }
        }
    }

    #[test]
    fn partition_function_matches_trace() {
        let spec = CollectiveModelSpec::lmg(10, 0.0, 0.5, 2.0);
        let dense = DenseModel::new(&spec).unwrap().log_z();
        let blocks = ThermalState::new(&spec).unwrap().log_z();
        assert!(((dense - blocks) / dense).abs() < 1e-10);
    }

    #[test]
    fn ground_state_in_maximum_spin_block() {
        for n in [4usize, 7, 12] {
            for &gamma in &[0.0, 0.5, 1.0] {
                for &h in &[0.0, 0.7, 1.5] {
                    let spec = CollectiveModelSpec::lmg(n, gamma, h, 1.0);
                    let e0 = all_spectra(&spec).iter().map(|b| b.energies[0]).fold(f64::INFINITY, f64::min);
                    let top = all_spectra(&spec).into_iter().find(|b| b.two_s == n).unwrap().energies[0];
                    assert!(top <= e0 + 1e-12, "N={n} gamma={gamma} h={h}");
                    if n <= 8 {
                        let dense = DenseModel::new(&spec).unwrap().sorted_energies()[0];
                        assert!((dense - top).abs() < 1e-11);
                    }
                }
            }
        }
    }
}
