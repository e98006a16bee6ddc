//! Mutual information between `L` and `N - L` spins of a collective model.
//!
//! Spins of A and B are coupled separately to `s1` and `s2`, which couple
//! to the total spin `s`. Within each `(s1, s2; s)` the state is the block
//! density matrix `rho^(s)`, so the reduced block of A is
//!
//! `r^(s1)[m1', m1] = sum_{s2} d_{s2} sum_s sum_m rho^(s)[m, m + m1' - m1]
//!                    C(s1 m1; s2 m-m1 | s m) C(s1 m1'; s2 m-m1 | s m+m1'-m1)`
//!
//! and `rho_A` is `r^(s1)` repeated `d_{s1}` times. Inner density blocks are
//! built once; the sum runs over `m`, not `m2`.

use crate::blocks::{block_dim, BlockSpectrum};
use crate::cg::CouplingTable;
use crate::classical::subsystem_size;
use crate::ground::{ground_state, GroundState};
use crate::model::CollectiveModelSpec;
use crate::multiplicity::{multiplicities, MultiplicityTable};
use crate::thermal::ThermalState;
use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::Serialize;
use spinmi_core::{Error, Result};

/// Eigenvalues in `[-EIGEN_CLIP, 0)` are treated as zero.
pub const EIGEN_CLIP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BipartitionSpec {
    pub spins: usize,
    /// Spins in A, `1 <= L <= N - 1`.
    pub size_a: usize,
}

impl BipartitionSpec {
    pub fn new(spins: usize, size_a: usize) -> Result<Self> {
        if size_a == 0 || size_a >= spins {
            return Err(Error::PartitionMismatch(format!("cannot put {size_a} of {spins} spins in A")));
        }
        Ok(BipartitionSpec { spins, size_a })
    }

    pub fn from_fraction(spins: usize, tau: f64) -> Result<Self> {
        Self::new(spins, subsystem_size(spins, tau)?)
    }

    pub fn size_b(&self) -> usize {
        self.spins - self.size_a
    }

    pub fn swapped(&self) -> Self {
        BipartitionSpec { spins: self.spins, size_a: self.size_b() }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ReducedBlock {
    pub two_s1: usize,
    /// Copies of this block in `rho_A`.
    pub multiplicity: f64,
    #[serde(skip)]
    pub matrix: DMatrix<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumBlock {
    pub two_s1: usize,
    pub multiplicity: f64,
    /// Descending eigenvalues.
    pub eigenvalues: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CollectiveMi {
    pub mi: f64,
    pub entropy_a: f64,
    pub entropy_b: f64,
    pub entropy_ab: f64,
    pub spectrum_a: Vec<SpectrumBlock>,
}

/// Normalized block density matrices `rho^(s) / Z`, without multiplicity.
fn normalized_block_densities(state: &ThermalState) -> Vec<DMatrix<f64>> {
    state
        .blocks
        .iter()
        .map(|b| {
            let weights: Vec<f64> = b.energies.iter().map(|&e| state.state_probability(e)).collect();
            let scaled = DMatrix::from_fn(b.vectors.nrows(), b.vectors.ncols(), |r, c| b.vectors[(r, c)] * weights[c]);
            &scaled * b.vectors.transpose()
        })
        .collect()
}

fn block_index(blocks: &[BlockSpectrum], two_s: usize) -> Option<usize> {
    blocks.iter().position(|b| b.two_s == two_s)
}

/// Adds one `(s1, s2; s)` term, weighted by `weight`, into `r`.
fn accumulate(r: &mut DMatrix<f64>, table: &CouplingTable, rho: &DMatrix<f64>, weight: f64) {
    let (two_s1, two_s2, two_s) = (table.two_s1 as i64, table.two_s2 as i64, table.two_s as i64);
    let dim1 = (two_s1 + 1) as usize;
    for i1 in 0..dim1 {
        let two_m1 = 2 * i1 as i64 - two_s1;
        for j1 in 0..dim1 {
            let two_m1p = 2 * j1 as i64 - two_s1;
            let shift = two_m1p - two_m1;
            // m ranges over max(-s, -s + m1 - m1', -s2 + m1) ..= min(s, s + m1 - m1', s2 + m1).
            let lo = (-two_s).max(-two_s - shift).max(-two_s2 + two_m1);
            let hi = two_s.min(two_s - shift).min(two_s2 + two_m1);
            if lo > hi {
                continue;
            }
            let mut acc = 0.0;
            let mut two_m = lo;
            while two_m <= hi {
                let im = ((two_m + two_s) / 2) as usize;
                let imp = ((two_m + shift + two_s) / 2) as usize;
                let c = table.column(im).get(two_m1);
                let cp = table.column(imp).get(two_m1p);
                acc += rho[(im, imp)] * c * cp;
                two_m += 2;
            }
            r[(j1, i1)] += weight * acc;
        }
    }
}

fn reduced_from_densities(
    spins: usize,
    part: &BipartitionSpec,
    blocks: &[BlockSpectrum],
    densities: &[DMatrix<f64>],
) -> Vec<ReducedBlock> {
    let table_a = multiplicities(part.size_a);
    let table_b = multiplicities(part.size_b());
    let two_s1_list: Vec<usize> = table_a.two_spins().collect();
    two_s1_list
        .into_par_iter()
        .map(|two_s1| {
            let mut r = DMatrix::zeros(block_dim(two_s1), block_dim(two_s1));
            for two_s2 in table_b.two_spins() {
                let d2 = table_b.log_degeneracy(two_s2).exp();
                let lo = two_s1.abs_diff(two_s2);
                for two_s in (lo..=two_s1 + two_s2).step_by(2) {
                    debug_assert!(two_s <= spins);
                    let Some(idx) = block_index(blocks, two_s) else { continue };
                    let table = CouplingTable::new(two_s1, two_s2, two_s).expect("triangle holds");
                    accumulate(&mut r, &table, &densities[idx], d2);
                }
            }
            let sym = (&r + r.transpose()) * 0.5;
            ReducedBlock { two_s1, multiplicity: table_a.log_degeneracy(two_s1).exp(), matrix: sym }
        })
        .collect()
}

/// Reduced blocks of subsystem A for the thermal state.
pub fn reduced_density(spec: &CollectiveModelSpec, part: &BipartitionSpec) -> Result<Vec<ReducedBlock>> {
    check_partition(spec, part)?;
    let state = ThermalState::new(spec)?;
    let densities = normalized_block_densities(&state);
    Ok(reduced_from_densities(spec.spins, part, &state.blocks, &densities))
}

fn check_partition(spec: &CollectiveModelSpec, part: &BipartitionSpec) -> Result<()> {
    if part.spins != spec.spins || part.size_a == 0 || part.size_a >= spec.spins {
        return Err(Error::PartitionMismatch(format!(
            "partition {}+{} does not split {} spins",
            part.size_a,
            part.size_b(),
            spec.spins
        )));
    }
    Ok(())
}

fn entropy_term(x: f64) -> f64 {
    if x > 0.0 {
        -x * x.log2()
    } else {
        0.0
    }
}

/// Entropy and spectrum of `rho_A` assembled from its blocks.
pub fn blocks_entropy(blocks: &[ReducedBlock]) -> Result<(f64, Vec<SpectrumBlock>)> {
    let mut entropy = 0.0;
    let mut spectrum = Vec::with_capacity(blocks.len());
    for b in blocks {
        let eig = SymmetricEigen::new(b.matrix.clone());
        let mut values: Vec<f64> = Vec::with_capacity(eig.eigenvalues.len());
        for &v in eig.eigenvalues.iter() {
            if v < -EIGEN_CLIP {
                return Err(Error::Numerical(format!("reduced density eigenvalue {v} is negative")));
            }
            values.push(v.max(0.0));
        }
        values.sort_by(|a, b| b.total_cmp(a));
        entropy += b.multiplicity * values.iter().map(|&v| entropy_term(v)).sum::<f64>();
        spectrum.push(SpectrumBlock { two_s1: b.two_s1, multiplicity: b.multiplicity, eigenvalues: values });
    }
    Ok((entropy, spectrum))
}

/// `sum_s1 d_s1 tr r^(s1)`, which is 1.
pub fn total_trace(blocks: &[ReducedBlock]) -> f64 {
    blocks.iter().map(|b| b.multiplicity * b.matrix.trace()).sum()
}

fn total_entropy(state: &ThermalState, table: &MultiplicityTable) -> f64 {
    state
        .blocks
        .iter()
        .map(|b| {
            let d = table.log_degeneracy(b.two_s).exp();
            d * b.energies.iter().map(|&e| entropy_term(state.state_probability(e))).sum::<f64>()
        })
        .sum()
}

/// `I = E_A + E_B - E_AB` for the thermal state.
pub fn mutual_information(spec: &CollectiveModelSpec, part: &BipartitionSpec) -> Result<CollectiveMi> {
    check_partition(spec, part)?;
    let state = ThermalState::new(spec)?;
    let densities = normalized_block_densities(&state);
    let blocks_a = reduced_from_densities(spec.spins, part, &state.blocks, &densities);
    let blocks_b = reduced_from_densities(spec.spins, &part.swapped(), &state.blocks, &densities);
    let (entropy_a, spectrum_a) = blocks_entropy(&blocks_a)?;
    let (entropy_b, _) = blocks_entropy(&blocks_b)?;
    let entropy_ab = total_entropy(&state, &state.table);
    Ok(CollectiveMi { mi: entropy_a + entropy_b - entropy_ab, entropy_a, entropy_b, entropy_ab, spectrum_a })
}

/// Entanglement entropy (bits) of A in a pure state of total spin `s`
/// built from the maximal `s1 = L/2`, `s2 = (N-L)/2`.
pub fn pure_state_entropy(ground: &GroundState, part: &BipartitionSpec) -> Result<f64> {
    if ground.two_s != part.spins {
        return Err(Error::Unsupported("pure-state entropy needs the maximum-spin block".into()));
    }
    let (two_s1, two_s2) = (part.size_a, part.size_b());
    let table = CouplingTable::new(two_s1, two_s2, ground.two_s).expect("stretched coupling");
    // psi[m1][m2] = a_{m1+m2} C(s1 m1; s2 m2 | s m1+m2).
    let psi = DMatrix::from_fn(two_s1 + 1, two_s2 + 1, |i1, i2| {
        let two_m1 = 2 * i1 as i64 - two_s1 as i64;
        let two_m2 = 2 * i2 as i64 - two_s2 as i64;
        let im = ((two_m1 + two_m2 + ground.two_s as i64) / 2) as usize;
        ground.amplitudes[im] * table.column(im).get(two_m1)
    });
    let rho = if two_s1 <= two_s2 { &psi * psi.transpose() } else { psi.transpose() * &psi };
    let eig = SymmetricEigen::new(rho);
    Ok(eig.eigenvalues.iter().map(|&v| entropy_term(v.max(0.0))).sum())
}

/// Zero-temperature mutual information, twice the entanglement entropy.
pub fn ground_state_mi(spec: &CollectiveModelSpec, part: &BipartitionSpec) -> Result<f64> {
    check_partition(spec, part)?;
    let ground = ground_state(spec)?;
    Ok(2.0 * pure_state_entropy(&ground, part)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::DenseModel;
    use proptest::prelude::*;

    #[test]
    fn infinite_temperature_is_maximally_mixed() {
        let spec = CollectiveModelSpec::lmg(9, 0.25, 0.5, 0.0);
        let part = BipartitionSpec::new(9, 4).unwrap();
        let blocks = reduced_density(&spec, &part).unwrap();
        assert!((total_trace(&blocks) - 1.0).abs() < 1e-12);
        let r = mutual_information(&spec, &part).unwrap();
        assert!((r.entropy_a - 4.0).abs() < 1e-10);
        assert!(r.mi.abs() < 1e-10);
    }

    #[test]
    fn matches_dense_partial_trace_spectrum() {
        let spec = CollectiveModelSpec::lmg(8, 0.0, 0.5, 1.0);
        let part = BipartitionSpec::new(8, 4).unwrap();
        let blocks = reduced_density(&spec, &part).unwrap();
        let (_, spectrum) = blocks_entropy(&blocks).unwrap();
        let mut ours: Vec<f64> = Vec::new();
        for b in &spectrum {
            for _ in 0..b.multiplicity.round() as usize {
                ours.extend(&b.eigenvalues);
            }
        }
        ours.sort_by(f64::total_cmp);
        let dense = DenseModel::new(&spec).unwrap();
        let mut theirs = dense.reduced_spectrum(4).unwrap();
        theirs.sort_by(f64::total_cmp);
        assert_eq!(ours.len(), theirs.len());
        for (a, b) in ours.iter().zip(&theirs) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn swapped_partition_matches_direct() {
        let spec = CollectiveModelSpec::mn(9, 2, 2, 0.5, 1.5);
        let part = BipartitionSpec::new(9, 3).unwrap();
        let direct = mutual_information(&spec, &part).unwrap();
        let swapped = mutual_information(&spec, &part.swapped()).unwrap();
        assert!((direct.entropy_b - swapped.entropy_a).abs() < 1e-10);
        assert!((direct.mi - swapped.mi).abs() < 1e-10);
    }

    #[test]
    fn low_temperature_is_twice_ground_entropy() {
        // Ordered side: the beta needed to resolve the tunnelling splitting is
        // checked against the block gap first.
        let spec = CollectiveModelSpec::lmg(12, 0.0, 0.5, 1.0);
        let state = ThermalState::new(&spec).unwrap();
        let top = state.blocks.iter().find(|b| b.two_s == 12).unwrap();
        let gap = top.energies[1] - top.energies[0];
        let beta = 60.0 / gap;
        let part = BipartitionSpec::new(12, 6).unwrap();
        let thermal = mutual_information(&spec.with_beta(beta), &part).unwrap().mi;
        let ground = ground_state_mi(&spec, &part).unwrap();
        assert!((thermal - ground).abs() < 1e-8, "{thermal} vs {ground}");
    }

    #[test]
    fn ground_state_paths_agree() {
        // Tridiagonal x-basis state and dense z-basis state give the same entropy.
        let part = BipartitionSpec::new(14, 5).unwrap();
        let fast = ground_state_mi(&CollectiveModelSpec::lmg(14, 0.0, 1.0, 1.0), &part).unwrap();
        let slow = ground_state_mi(&CollectiveModelSpec::lmg(14, 1e-300, 1.0, 1.0), &part).unwrap();
        assert!((fast - slow).abs() < 1e-9);
        let dense = DenseModel::new(&CollectiveModelSpec::lmg(10, 0.0, 1.0, 1.0)).unwrap().ground_state_mi(5).unwrap();
        let ours = ground_state_mi(&CollectiveModelSpec::lmg(10, 0.0, 1.0, 1.0), &BipartitionSpec::new(10, 5).unwrap())
            .unwrap();
        assert!((dense - ours).abs() < 1e-9);
    }

    fn family(kind: usize, gamma: f64, field: f64, angle: f64) -> crate::model::Family {
        match kind {
            0 => crate::model::Family::Lmg { anisotropy: gamma, field },
            1 => crate::model::Family::Mn { x_order: 2, z_order: 2, angle },
            _ => crate::model::Family::Mn { x_order: 3, z_order: 1, angle },
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(20))]

        #[test]
        fn trace_is_one(n in 2usize..9, la in 1usize..8, kind in 0usize..3, gamma in 0.0f64..1.0,
                        field in 0.0f64..1.5, angle in 0.0f64..1.5, beta in 0.0f64..5.0) {
            let la = 1 + la % (n - 1);
            let spec = CollectiveModelSpec { spins: n, family: family(kind, gamma, field, angle), beta };
            let blocks = reduced_density(&spec, &BipartitionSpec::new(n, la).unwrap()).unwrap();
            prop_assert!((total_trace(&blocks) - 1.0).abs() < 1e-12);
            for b in &blocks {
                prop_assert!((&b.matrix - b.matrix.transpose()).amax() < 1e-12);
            }
        }

        #[test]
        fn matches_dense_oracle(n in 2usize..8, la in 1usize..7, kind in 0usize..3, gamma in 0.0f64..1.0,
                                field in 0.0f64..1.5, angle in 0.0f64..1.5, beta in 0.0f64..5.0) {
            let la = 1 + la % (n - 1);
            let spec = CollectiveModelSpec { spins: n, family: family(kind, gamma, field, angle), beta };
            let ours = mutual_information(&spec, &BipartitionSpec::new(n, la).unwrap()).unwrap();
            let dense = DenseModel::new(&spec).unwrap().mutual_information(la).unwrap();
            prop_assert!((ours.mi - dense).abs() < 1e-8, "{} vs {}", ours.mi, dense);
            prop_assert!(ours.mi >= -1e-10);
        }
    }
}
