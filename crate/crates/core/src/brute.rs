//! Exhaustive enumeration oracles for small finite lattices.

use crate::error::{Error, Result};
use crate::logweight::LogWeight;
use crate::model::{Bipartition, Bond, LatticeModelSpec};
use rayon::prelude::*;

/// Largest number of configurations any enumeration here will visit.
pub const ENUMERATION_BOUND: f64 = (1u64 << 24) as f64;

fn check_bound(q: usize, sites: usize) -> Result<()> {
    let states = (q as f64).powi(sites as i32);
    if states > ENUMERATION_BOUND {
        return Err(Error::TooLarge { states, bound: ENUMERATION_BOUND });
    }
    Ok(())
}

/// Decode `index` into base-q digits for the listed sites.
fn scatter(mut index: usize, q: usize, sites: &[usize], spins: &mut [usize]) {
    for &s in sites.iter().rev() {
        spins[s] = index % q;
        index /= q;
    }
}

struct PairTable {
    q: usize,
    // -E(si, sj) for each bond, flattened as [bond][si * q + sj].
    neg_energy: Vec<f64>,
}

impl PairTable {
    fn new(model: &LatticeModelSpec, bonds: &[Bond]) -> Result<Self> {
        let q = model.q;
        let mut neg_energy = Vec::with_capacity(bonds.len() * q * q);
        for bond in bonds {
            if !bond.k.is_finite() {
                return Err(Error::InvalidModel("enumeration needs finite couplings".into()));
            }
            for si in 0..q {
                for sj in 0..q {
                    neg_energy.push(-model.kind.pair_energy(q, bond.k, si, sj)?);
                }
            }
        }
        Ok(PairTable { q, neg_energy })
    }

    fn log_weight(&self, bonds: &[(usize, Bond)], spins: &[usize]) -> f64 {
        let q2 = self.q * self.q;
        bonds.iter().map(|(idx, b)| self.neg_energy[idx * q2 + spins[b.a] * self.q + spins[b.b]]).sum()
    }

    fn max_log_weight(&self, bonds: &[(usize, Bond)]) -> f64 {
        let q2 = self.q * self.q;
        bonds
            .iter()
            .map(|(idx, _)| self.neg_energy[idx * q2..(idx + 1) * q2].iter().copied().fold(f64::MIN, f64::max))
            .sum()
    }
}

/// Mutual information (bits) between regions A and B of a finite lattice by
/// summing all `q^N` configurations.
pub fn brute_force_mi(model: &LatticeModelSpec, part: &Bipartition) -> Result<f64> {
    model.validate()?;
    let n = model.num_sites()?;
    if part.num_sites() != n {
        return Err(Error::PartitionMismatch(format!("partition has {} sites, lattice {n}", part.num_sites())));
    }
    check_bound(model.q, n)?;
    let q = model.q;
    let sites_a = part.sites_a();
    let sites_b = part.sites_b();
    let mut in_a = vec![false; n];
    for &s in &sites_a {
        in_a[s] = true;
    }
    let bonds = model.bonds()?;
    let table = PairTable::new(model, &bonds)?;
    let classify = |want: (bool, bool)| -> Vec<(usize, Bond)> {
        bonds
            .iter()
            .copied()
            .enumerate()
            .filter(|(_, b)| {
                let key = (in_a[b.a], in_a[b.b]);
                key == want || (want.0 != want.1 && key == (want.1, want.0))
            })
            .collect()
    };
    let bonds_a = classify((true, true));
    let bonds_b = classify((false, false));
    let bonds_ab = classify((true, false));
    let shift = table.max_log_weight(&bonds_a) + table.max_log_weight(&bonds_b) + table.max_log_weight(&bonds_ab);

    let count_a = q.pow(sites_a.len() as u32);
    let count_b = q.pow(sites_b.len() as u32);
    let region_weights = |sites: &[usize], region_bonds: &[(usize, Bond)], count: usize| -> Vec<f64> {
        (0..count)
            .into_par_iter()
            .map_init(
                || vec![0usize; n],
                |spins, idx| {
                    scatter(idx, q, sites, spins);
                    table.log_weight(region_bonds, spins)
                },
            )
            .collect()
    };
    let log_a = region_weights(&sites_a, &bonds_a, count_a);
    let log_b = region_weights(&sites_b, &bonds_b, count_b);

    // Only the cross bonds depend on both halves; map them to (border digit) lookups.
    let joint = |a: usize, spins: &mut Vec<usize>| -> Vec<f64> {
        scatter(a, q, &sites_a, spins);
        (0..count_b)
            .map(|b| {
                scatter(b, q, &sites_b, spins);
                log_a[a] + log_b[b] + table.log_weight(&bonds_ab, spins) - shift
            })
            .collect()
    };

    let (z, p_a, p_b) = (0..count_a)
        .into_par_iter()
        .map_init(
            || vec![0usize; n],
            |spins, a| {
                let row = joint(a, spins);
                let w: Vec<f64> = row.iter().map(|l| l.exp()).collect();
                (w.iter().sum::<f64>(), a, w)
            },
        )
        .fold(
            || (0.0, vec![0.0; count_a], vec![0.0; count_b]),
            |(z, mut pa, mut pb), (sum, a, w)| {
                pa[a] = sum;
                for (acc, x) in pb.iter_mut().zip(&w) {
                    *acc += x;
                }
                (z + sum, pa, pb)
            },
        )
        .reduce(
            || (0.0, vec![0.0; count_a], vec![0.0; count_b]),
            |(z1, mut a1, mut b1), (z2, a2, b2)| {
                for (x, y) in a1.iter_mut().zip(&a2) {
                    *x += y;
                }
                for (x, y) in b1.iter_mut().zip(&b2) {
                    *x += y;
                }
                (z1 + z2, a1, b1)
            },
        );

    // I = sum_ab p_ab ln(p_ab / (p_a p_b)) with unnormalized weights.
    let nats: f64 = (0..count_a)
        .into_par_iter()
        .map_init(
            || vec![0usize; n],
            |spins, a| {
                let row = joint(a, spins);
                row.iter()
                    .zip(&p_b)
                    .map(|(l, pb)| {
                        let w = l.exp();
                        if w == 0.0 {
                            0.0
                        } else {
                            w * (l + z.ln() - p_a[a].ln() - pb.ln())
                        }
                    })
                    .sum::<f64>()
            },
        )
        .sum();
    Ok((nats / z / std::f64::consts::LN_2).max(0.0))
}

/// `ln Z` with some spins held fixed. Bonds whose endpoints are both fixed
/// are omitted; every other bond contributes `exp(-E)`.
pub fn brute_force_log_z(model: &LatticeModelSpec, fixed: &[Option<u8>]) -> Result<LogWeight> {
    model.validate()?;
    let n = model.num_sites()?;
    if fixed.len() != n {
        return Err(Error::PartitionMismatch("fixed-spin list length differs from the site count".into()));
    }
    let q = model.q;
    let free: Vec<usize> = (0..n).filter(|&i| fixed[i].is_none()).collect();
    check_bound(q, free.len())?;
    let bonds: Vec<(usize, Bond)> =
        model.bonds()?.into_iter().filter(|b| fixed[b.a].is_none() || fixed[b.b].is_none()).enumerate().collect();
    let plain: Vec<Bond> = bonds.iter().map(|(_, b)| *b).collect();
    let table = PairTable::new(model, &plain)?;
    let shift = table.max_log_weight(&bonds);
    let mut base = vec![0usize; n];
    for (i, f) in fixed.iter().enumerate() {
        if let Some(s) = f {
            if *s as usize >= q {
                return Err(Error::StateOutOfRange { state: *s as usize, q });
            }
            base[i] = *s as usize;
        }
    }
    let count = q.pow(free.len() as u32);
    let z: f64 = (0..count)
        .into_par_iter()
        .map_init(
            || base.clone(),
            |spins, idx| {
                scatter(idx, q, &free, spins);
                (table.log_weight(&bonds, spins) - shift).exp()
            },
        )
        .sum();
    Ok(LogWeight::from_log(z.ln() + shift))
}
