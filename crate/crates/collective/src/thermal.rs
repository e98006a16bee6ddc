//! Partition function and thermal observables from the block spectra.

use crate::blocks::{all_spectra, diagonal_expectations, spin_x, spin_z, BlockSpectrum};
use crate::classical;
use crate::model::{CollectiveModelSpec, Family};
use crate::multiplicity::{log_sum_exp, multiplicities, MultiplicityTable};
use serde::Serialize;
use spinmi_core::{LogWeight, Result};
use std::f64::consts::LN_2;

/// Central-difference step for the field susceptibility.
pub const SUSCEPTIBILITY_STEP: f64 = 1e-3;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ThermalObservables {
    pub log_z: LogWeight,
    pub energy: f64,
    pub heat_capacity: f64,
    /// `2 sqrt(<S_x^2>) / N`.
    pub m_x: f64,
    /// `2 sqrt(<S_z^2>) / N`.
    pub m_z: f64,
    /// Von Neumann entropy of the full state, bits.
    pub entropy_bits: f64,
}

/// Block spectra with multiplicities and the Boltzmann weights that all
/// thermal quantities share.
#[derive(Debug, Clone)]
pub struct ThermalState {
    pub spec: CollectiveModelSpec,
    pub table: MultiplicityTable,
    pub blocks: Vec<BlockSpectrum>,
    /// Global energy shift `E_0`, the lowest eigenvalue over all blocks.
    pub ground_energy: f64,
    /// `ln Z' = ln sum_s d_s sum_alpha exp(-beta (E - E_0))`.
    pub log_z_shifted: f64,
}

impl ThermalState {
    pub fn new(spec: &CollectiveModelSpec) -> Result<Self> {
        spec.validate()?;
        let table = multiplicities(spec.spins);
        let blocks = all_spectra(spec);
        let ground_energy = blocks.iter().map(|b| b.energies[0]).fold(f64::INFINITY, f64::min);
        let terms: Vec<f64> =
            blocks.iter().map(|b| table.log_degeneracy(b.two_s) + block_log_z(b, spec.beta, ground_energy)).collect();
        let log_z_shifted = log_sum_exp(&terms);
        Ok(ThermalState { spec: *spec, table, blocks, ground_energy, log_z_shifted })
    }

    pub fn log_z(&self) -> f64 {
        self.log_z_shifted - self.spec.beta * self.ground_energy
    }

    /// Probability of one eigenstate of block `b` (not counting its
    /// multiplicity).
    pub fn state_probability(&self, energy: f64) -> f64 {
        (-self.spec.beta * (energy - self.ground_energy) - self.log_z_shifted).exp()
    }

    /// Relative weight of each block, `d_s Z^(s) / Z`.
    fn block_weights(&self) -> Vec<f64> {
        self.blocks
            .iter()
            .map(|b| {
                (self.table.log_degeneracy(b.two_s) + block_log_z(b, self.spec.beta, self.ground_energy)
                    - self.log_z_shifted)
                    .exp()
            })
            .collect()
    }

    /// Thermal average of a per-eigenstate quantity.
    fn average(&self, f: impl Fn(&BlockSpectrum, usize) -> f64) -> f64 {
        let beta = self.spec.beta;
        self.blocks
            .iter()
            .zip(self.block_weights())
            .map(|(b, wb)| {
                if wb == 0.0 {
                    return 0.0;
                }
                let w: Vec<f64> = b.energies.iter().map(|e| (-beta * (e - self.ground_energy)).exp()).collect();
                let z: f64 = w.iter().sum();
                wb * w.iter().enumerate().map(|(a, wa)| wa * f(b, a)).sum::<f64>() / z
            })
            .sum()
    }

    pub fn observables(&self) -> ThermalObservables {
        let n = self.spec.spins as f64;
        let energy = self.average(|b, a| b.energies[a]);
        let variance = self.average(|b, a| (b.energies[a] - energy).powi(2));
        let beta = self.spec.beta;
        let sx2 = self.block_expectation(|t| {
            let sx = spin_x(t);
            &sx * &sx
        });
        let sz2 = self.block_expectation(|t| {
            let sz = spin_z(t);
            &sz * &sz
        });
        let log_z = self.log_z();
        ThermalObservables {
            log_z: LogWeight::from_log(log_z),
            energy,
            heat_capacity: beta * beta * variance,
            m_x: 2.0 * sx2.max(0.0).sqrt() / n,
            m_z: 2.0 * sz2.max(0.0).sqrt() / n,
            entropy_bits: (log_z + beta * energy) / LN_2,
        }
    }

    fn block_expectation(&self, op: impl Fn(usize) -> nalgebra::DMatrix<f64>) -> f64 {
        let diagonals: Vec<_> = self.blocks.iter().map(|b| diagonal_expectations(b, &op(b.two_s))).collect();
        let index = |two_s: usize| self.blocks.iter().position(|b| b.two_s == two_s).unwrap();
        self.average(|b, a| diagonals[index(b.two_s)][a])
    }
}

fn block_log_z(b: &BlockSpectrum, beta: f64, shift: f64) -> f64 {
    let terms: Vec<f64> = b.energies.iter().map(|e| -beta * (e - shift)).collect();
    log_sum_exp(&terms)
}

/// `Z`, `U`, `C_v`, `m_x`, `m_z` and the total entropy. The field-free
/// Ising-type point uses the binomial sums directly.
pub fn partition_and_observables(spec: &CollectiveModelSpec) -> Result<ThermalObservables> {
    spec.validate()?;
    if spec.is_classical() {
        let n = spec.spins;
        let m = classical::moments(n, spec.beta)?;
        return Ok(ThermalObservables {
            log_z: LogWeight::from_log(m.log_z),
            energy: m.energy,
            heat_capacity: m.heat_capacity,
            m_x: 2.0 * m.sx_squared.sqrt() / n as f64,
            // In the x basis every product state has <S_z^2> = N/4.
            m_z: 1.0 / (n as f64).sqrt(),
            entropy_bits: (m.log_z + spec.beta * m.energy) / LN_2,
        });
    }
    Ok(ThermalState::new(spec)?.observables())
}

/// `d m_x / d h` by central differences; LMG only.
pub fn susceptibility(spec: &CollectiveModelSpec) -> Result<f64> {
    let Family::Lmg { anisotropy, field } = spec.family else {
        return Err(spinmi_core::Error::Unsupported("susceptibility is defined for the LMG field".into()));
    };
    let at = |h: f64| {
        let s = CollectiveModelSpec { family: Family::Lmg { anisotropy, field: h }, ..*spec };
        ThermalState::new(&s).map(|t| t.observables().m_x)
    };
    Ok((at(field + SUSCEPTIBILITY_STEP)? - at(field - SUSCEPTIBILITY_STEP)?) / (2.0 * SUSCEPTIBILITY_STEP))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn infinite_temperature() {
        let spec = CollectiveModelSpec::lmg(12, 0.25, 0.7, 0.0);
        let obs = partition_and_observables(&spec).unwrap();
        assert!((obs.log_z.ln() - 12.0 * LN_2).abs() < 1e-12);
        assert!((obs.m_x - 1.0 / 12f64.sqrt()).abs() < 1e-12);
        assert!((obs.entropy_bits - 12.0).abs() < 1e-10);
    }

    #[test]
    fn zero_temperature_polarisation() {
        let spec = CollectiveModelSpec::lmg(40, 0.0, 0.0, 500.0);
        assert!(partition_and_observables(&spec).unwrap().m_x > 0.999);
    }

    #[test]
    fn classical_shortcut_matches_blocks() {
        let spec = CollectiveModelSpec::lmg(30, 0.0, 0.0, 1.3);
        let fast = partition_and_observables(&spec).unwrap();
        let slow = ThermalState::new(&spec).unwrap().observables();
        assert!((fast.log_z.ln() - slow.log_z.ln()).abs() < 1e-10);
        assert!((fast.m_x - slow.m_x).abs() < 1e-10);
        assert!((fast.m_z - slow.m_z).abs() < 1e-10);
        assert!((fast.heat_capacity - slow.heat_capacity).abs() < 1e-9);
    }

    #[test]
    fn heat_capacity_matches_log_z_curvature() {
        let spec = CollectiveModelSpec::mn(16, 3, 2, 0.6, 2.0);
        let c = partition_and_observables(&spec).unwrap().heat_capacity;
        let lz = |b: f64| ThermalState::new(&spec.with_beta(b)).unwrap().log_z();
        let d = 1e-3;
        let curvature = (lz(2.0 + d) - 2.0 * lz(2.0) + lz(2.0 - d)) / (d * d);
        assert!((c - 4.0 * curvature).abs() < 1e-4 * c.max(1.0), "{c} vs {}", 4.0 * curvature);
    }

    #[test]
    fn susceptibility_is_negative_in_field() {
        // Transverse field suppresses x order.
        let spec = CollectiveModelSpec::lmg(24, 0.0, 0.5, 4.0);
        assert!(susceptibility(&spec).unwrap() < 0.0);
    }
}
