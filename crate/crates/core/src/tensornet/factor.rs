//! Rank factorization of a bond Boltzmann weight:
//! `exp(-E(s, s')) = sum_l g[l][s] h[l] g[l][s']`.

use crate::error::{Error, Result};
use crate::model::{LatticeModelSpec, ModelKind};
use nalgebra::{DMatrix, SymmetricEigen};

#[derive(Debug, Clone, PartialEq)]
pub struct BondFactorization {
    /// `g[l][s]`.
    pub g: Vec<Vec<f64>>,
    pub h: Vec<f64>,
}

impl BondFactorization {
    pub fn q(&self) -> usize {
        self.g.first().map_or(0, Vec::len)
    }

    /// Number of channels with nonzero `h`.
    pub fn rank(&self) -> usize {
        self.h.iter().filter(|&&x| x != 0.0).count()
    }

    pub fn weight(&self, s: usize, t: usize) -> f64 {
        self.h.iter().zip(&self.g).map(|(h, g)| g[s] * h * g[t]).sum()
    }
}

/// Boltzmann weight matrix `W[s][t] = exp(-E(s, t))`.
pub fn weight_matrix(kind: ModelKind, q: usize, k: f64) -> Result<DMatrix<f64>> {
    let mut w = DMatrix::zeros(q, q);
    for s in 0..q {
        for t in 0..q {
            w[(s, t)] = (-kind.pair_energy(q, k, s, t)?).exp();
        }
    }
    Ok(w)
}

/// Factorize a bond of coupling `k`; the Ising case uses the closed form
/// `g = [[1, 1], [1, -1]]`, `h = (cosh K, sinh K)`.
pub fn factorize_pair(kind: ModelKind, q: usize, k: f64) -> Result<BondFactorization> {
    if !k.is_finite() {
        return Err(Error::InvalidModel(format!("cannot factorize the non-finite coupling {k}")));
    }
    if kind == ModelKind::Ising {
        return Ok(BondFactorization { g: vec![vec![1.0, 1.0], vec![1.0, -1.0]], h: vec![k.cosh(), k.sinh()] });
    }
    let w = weight_matrix(kind, q, k)?;
    let eig = SymmetricEigen::new(w);
    let mut order: Vec<usize> = (0..q).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].abs().total_cmp(&eig.eigenvalues[a].abs()));
    let g = order.iter().map(|&l| eig.eigenvectors.column(l).iter().copied().collect()).collect();
    let h = order.iter().map(|&l| eig.eigenvalues[l]).collect();
    Ok(BondFactorization { g, h })
}

/// Factorization of the model's uniform bond.
pub fn factorize_bond(model: &LatticeModelSpec) -> Result<BondFactorization> {
    model.validate()?;
    factorize_pair(model.kind, model.q, model.uniform_k()?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Columns, VerticalBc};

    #[test]
    fn ising_closed_form() {
        let m = LatticeModelSpec::ising(0.5, 2, Columns::Infinite, VerticalBc::Open);
        let f = factorize_bond(&m).unwrap();
        assert_eq!(f.g, vec![vec![1.0, 1.0], vec![1.0, -1.0]]);
        assert_eq!(f.h, vec![0.5f64.cosh(), 0.5f64.sinh()]);
        for (s, t, sign) in [(0, 0, 1.0), (0, 1, -1.0), (1, 1, 1.0)] {
            assert!((f.weight(s, t) - (0.5 * sign as f64).exp()).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_coupling_is_rank_one() {
        let m = LatticeModelSpec::ising(0.0, 2, Columns::Infinite, VerticalBc::Open);
        assert_eq!(factorize_bond(&m).unwrap().rank(), 1);
        let p = factorize_pair(ModelKind::Potts, 3, 0.0).unwrap();
        assert_eq!(p.h.iter().filter(|x| x.abs() > 1e-12).count(), 1);
    }

    #[test]
    fn potts_and_clock_reconstruct() {
        for (kind, q, k) in [
            (ModelKind::Potts, 3, 0.8),
            (ModelKind::Potts, 5, -0.3),
            (ModelKind::Clock, 4, 0.6),
            (ModelKind::Clock, 6, 1.1),
        ] {
            let f = factorize_pair(kind, q, k).unwrap();
            let w = weight_matrix(kind, q, k).unwrap();
            for s in 0..q {
                for t in 0..q {
                    assert!((f.weight(s, t) - w[(s, t)]).abs() < 1e-12, "{kind:?} q={q}");
                }
            }
        }
    }

    #[test]
    fn infinite_coupling_is_rejected() {
        assert!(factorize_pair(ModelKind::Ising, 2, f64::INFINITY).is_err());
    }
}
