//! Fully connected spin-1/2 models that commute with the total spin.

use serde::{Deserialize, Serialize};
use spinmi_core::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Family {
    /// `H = -(S_x^2 + anisotropy S_y^2)/N + field S_z`.
    Lmg { anisotropy: f64, field: f64 },
    /// `H = -N (cos w (2S_x/N)^x_order + K sin w (2S_z/N)^z_order)`.
    Mn { x_order: u32, z_order: u32, angle: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollectiveModelSpec {
    pub spins: usize,
    pub family: Family,
    pub beta: f64,
}

/// Prefactor of the `S_z` term that puts the zero-temperature transition of
/// the `(x_order, z_order)` model at `angle = pi/4`.
pub fn mn_coupling(x_order: u32, z_order: u32) -> f64 {
    match (x_order, z_order) {
        (2, 1) => 2.0,
        (m, 1) if m > 2 => {
            let m = m as f64;
            m.powf(m / 2.0) * (m - 2.0).powf(m / 2.0 - 1.0) * (m - 1.0).powf(1.0 - m)
        }
        _ => 1.0,
    }
}

impl CollectiveModelSpec {
    pub fn lmg(spins: usize, anisotropy: f64, field: f64, beta: f64) -> Self {
        CollectiveModelSpec { spins, family: Family::Lmg { anisotropy, field }, beta }
    }

    pub fn mn(spins: usize, x_order: u32, z_order: u32, angle: f64, beta: f64) -> Self {
        CollectiveModelSpec { spins, family: Family::Mn { x_order, z_order, angle }, beta }
    }

    pub fn with_beta(self, beta: f64) -> Self {
        CollectiveModelSpec { beta, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.spins == 0 {
            return Err(Error::InvalidModel("at least one spin is required".into()));
        }
        if !(self.beta >= 0.0) || !self.beta.is_finite() {
            return Err(Error::InvalidModel(format!("inverse temperature {} must be finite and >= 0", self.beta)));
        }
        match self.family {
            Family::Lmg { anisotropy, field } => {
                if !anisotropy.is_finite() || !field.is_finite() {
                    return Err(Error::InvalidModel("LMG parameters must be finite".into()));
                }
            }
            Family::Mn { x_order, z_order, angle } => {
                if x_order == 0 || z_order == 0 {
                    return Err(Error::InvalidModel("interaction orders must be >= 1".into()));
                }
                if !angle.is_finite() {
                    return Err(Error::InvalidModel("mixing angle must be finite".into()));
                }
            }
        }
        Ok(())
    }

    /// True for the field-free Ising-type LMG point, where everything is
    /// diagonal in the `S_x` basis.
    pub fn is_classical(&self) -> bool {
        matches!(self.family, Family::Lmg { anisotropy, field } if anisotropy == 0.0 && field == 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coupling_table() {
        assert_eq!(mn_coupling(2, 1), 2.0);
        assert_eq!(mn_coupling(2, 2), 1.0);
        assert_eq!(mn_coupling(3, 2), 1.0);
        // 3^{3/2} 1^{1/2} 2^{-2}
        assert!((mn_coupling(3, 1) - 27f64.sqrt() / 4.0).abs() < 1e-15);
        // 4^2 2^1 3^{-3}
        assert!((mn_coupling(4, 1) - 32.0 / 27.0).abs() < 1e-15);
    }

    #[test]
    fn validation() {
        assert!(CollectiveModelSpec::lmg(0, 0.0, 0.0, 1.0).validate().is_err());
        assert!(CollectiveModelSpec::lmg(4, 0.0, 0.0, -1.0).validate().is_err());
        assert!(CollectiveModelSpec::mn(4, 0, 1, 0.3, 1.0).validate().is_err());
        assert!(CollectiveModelSpec::mn(4, 3, 1, 0.3, 1.0).validate().is_ok());
    }
}
