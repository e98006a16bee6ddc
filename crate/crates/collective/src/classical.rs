//! Field-free Ising-type LMG model `H = -S_x^2 / N`.
//!
//! Every eigenstate is a product state in the `x` basis; with `p` spins
//! pointing along `-x` the energy is `-(N/2 - p)^2 / N` with degeneracy
//! `C(N, p)`. Thermal entropies reduce to binomial sums, evaluated here in
//! the log domain.

use crate::multiplicity::{log_binomial_row, log_sum_exp};
use rayon::prelude::*;
use serde::Serialize;
use spinmi_core::{Error, Result};
use std::f64::consts::LN_2;

/// Tolerance on `|beta - 2|` that selects the critical asymptotics.
pub const CRITICAL_WINDOW: f64 = 1e-9;
pub const CRITICAL_BETA: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum SystemSize {
    Finite(usize),
    Infinite,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassicalLimit {
    /// `ln Z`; `None` in the thermodynamic limit.
    pub log_z: Option<f64>,
    pub entropy_ab: Option<f64>,
    pub entropy_a: Option<f64>,
    pub entropy_b: Option<f64>,
    /// Mutual information in bits; `+inf` at the critical point of the
    /// infinite system.
    pub mi: f64,
}

/// Thermal moments of the finite system.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ClassicalMoments {
    pub log_z: f64,
    pub energy: f64,
    pub heat_capacity: f64,
    /// `<S_x^2>`.
    pub sx_squared: f64,
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta >= 0.0) || !beta.is_finite() {
        return Err(Error::InvalidModel(format!("inverse temperature {beta} must be finite and >= 0")));
    }
    Ok(())
}

/// Size of subsystem A for fraction `tau`, clamped to `1..N-1`.
pub fn subsystem_size(n: usize, tau: f64) -> Result<usize> {
    if n < 2 || !(tau > 0.0 && tau < 1.0) {
        return Err(Error::PartitionMismatch(format!("cannot split {n} spins at fraction {tau}")));
    }
    Ok(((tau * n as f64).round() as usize).clamp(1, n - 1))
}

/// `beta (N/2 - p)^2 / N`, the exponent of the Boltzmann factor.
fn exponent(beta: f64, n: usize, p: usize) -> f64 {
    let x = n as f64 / 2.0 - p as f64;
    beta * x * x / n as f64
}

pub fn moments(n: usize, beta: f64) -> Result<ClassicalMoments> {
    check_beta(beta)?;
    if n == 0 {
        return Err(Error::InvalidModel("at least one spin is required".into()));
    }
    let binom = log_binomial_row(n);
    let logs: Vec<f64> = (0..=n).map(|p| binom[p] + exponent(beta, n, p)).collect();
    let log_z = log_sum_exp(&logs);
    let probs: Vec<f64> = logs.iter().map(|l| (l - log_z).exp()).collect();
    let sq = |p: usize| (n as f64 / 2.0 - p as f64).powi(2);
    let sx_squared: f64 = probs.iter().enumerate().map(|(p, w)| w * sq(p)).sum();
    let energy = -sx_squared / n as f64;
    let var: f64 = probs.iter().enumerate().map(|(p, w)| w * (-sq(p) / n as f64 - energy).powi(2)).sum();
    Ok(ClassicalMoments { log_z, energy, heat_capacity: beta * beta * var, sx_squared })
}

/// `2 sqrt(<S_x^2>) / N`.
pub fn order_parameter(n: usize, beta: f64) -> Result<f64> {
    Ok(2.0 * moments(n, beta)?.sx_squared.sqrt() / n as f64)
}

/// Entropy of one side: `-sum_pA C(NA, pA) R(pA) log2 R(pA)` with
/// `R(pA) = Z^-1 sum_pB C(NB, pB) exp(beta (N/2 - pA - pB)^2 / N)`.
fn subsystem_entropy(n: usize, n_a: usize, beta: f64, log_z: f64) -> f64 {
    let n_b = n - n_a;
    let binom_a = log_binomial_row(n_a);
    let binom_b = log_binomial_row(n_b);
    (0..=n_a)
        .into_par_iter()
        .map(|pa| {
            let terms: Vec<f64> = (0..=n_b).map(|pb| binom_b[pb] + exponent(beta, n, pa + pb)).collect();
            let log_r = log_sum_exp(&terms) - log_z;
            -(binom_a[pa] + log_r).exp() * log_r / LN_2
        })
        .sum()
}

fn finite(n: usize, beta: f64, tau: f64) -> Result<ClassicalLimit> {
    let n_a = subsystem_size(n, tau)?;
    let m = moments(n, beta)?;
    let entropy_ab = (m.log_z + beta * m.energy) / LN_2;
    let entropy_a = subsystem_entropy(n, n_a, beta, m.log_z);
    let entropy_b = subsystem_entropy(n, n - n_a, beta, m.log_z);
    Ok(ClassicalLimit {
        log_z: Some(m.log_z),
        entropy_ab: Some(entropy_ab),
        entropy_a: Some(entropy_a),
        entropy_b: Some(entropy_b),
        mi: entropy_a + entropy_b - entropy_ab,
    })
}

/// Mutual information of the disordered phase, `beta < 2`.
pub fn high_temperature_mi(beta: f64, tau: f64) -> f64 {
    0.5 * (((2.0 - beta * tau) * (2.0 - beta * (1.0 - tau))) / (2.0 * (2.0 - beta))).log2()
}

/// Leading critical law `I = log2(N) / 4`.
pub fn critical_mi_law(n: f64) -> f64 {
    0.25 * n.log2()
}

/// Positive root of `u = tanh(beta u) / 2` for `beta > 2`.
pub fn ordered_saddle(beta: f64) -> f64 {
    let g = |u: f64| u - 0.5 * (beta * u).tanh();
    let (mut lo, mut hi) = (1e-300f64.max(1e-12 / beta), 0.5);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-16 {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Gaussian fluctuations of the two subsystem magnetisations around one of
/// the two symmetric minima, plus one bit for the shared choice of minimum.
pub fn low_temperature_mi(beta: f64, tau: f64) -> f64 {
    let u = ordered_saddle(beta);
    let curvature = 1.0 / (0.25 - u * u);
    let h_aa = tau * curvature - 2.0 * beta * tau * tau;
    let h_bb = (1.0 - tau) * curvature - 2.0 * beta * (1.0 - tau) * (1.0 - tau);
    let h_ab = -2.0 * beta * tau * (1.0 - tau);
    let rho2 = h_ab * h_ab / (h_aa * h_bb);
    1.0 - 0.5 * (1.0 - rho2).log2()
}

fn infinite(beta: f64, tau: f64) -> Result<ClassicalLimit> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::PartitionMismatch(format!("fraction {tau} outside (0, 1)")));
    }
    let mi = if (beta - CRITICAL_BETA).abs() < CRITICAL_WINDOW {
        f64::INFINITY
    } else if beta < CRITICAL_BETA {
        high_temperature_mi(beta, tau)
    } else {
        low_temperature_mi(beta, tau)
    };
    Ok(ClassicalLimit { log_z: None, entropy_ab: None, entropy_a: None, entropy_b: None, mi })
}

pub fn classical_limit(size: SystemSize, beta: f64, tau: f64) -> Result<ClassicalLimit> {
    check_beta(beta)?;
    match size {
        SystemSize::Finite(n) => finite(n, beta, tau),
        SystemSize::Infinite => infinite(beta, tau),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::function::gamma::gamma;

    #[test]
    fn infinite_temperature() {
        assert_eq!(high_temperature_mi(0.0, 0.3), 0.0);
        let r = classical_limit(SystemSize::Finite(40), 0.0, 0.5).unwrap();
        assert!(r.mi.abs() < 1e-10);
        assert!((r.log_z.unwrap() - 40.0 * LN_2).abs() < 1e-10);
        assert!((r.entropy_a.unwrap() - 20.0).abs() < 1e-10);
    }

    #[test]
    fn closed_form_value() {
        let expected = 0.5 * (9.0f64 / 8.0).log2();
        assert!((high_temperature_mi(1.0, 0.5) - expected).abs() < 1e-15);
        assert!((expected - 0.0849625).abs() < 1e-7);
        let inf = classical_limit(SystemSize::Infinite, 2.0, 0.5).unwrap();
        assert!(inf.mi.is_infinite());
    }

    #[test]
    fn finite_matches_brute_force_probabilities() {
        // Independent route: enumerate all 2^N x-basis product states.
        let (n, n_a, beta) = (8usize, 3usize, 1.7);
        let mut joint = vec![0.0; 1 << n];
        for (b, w) in joint.iter_mut().enumerate() {
            let p = b.count_ones() as usize;
            *w = exponent(beta, n, p).exp();
        }
        let z: f64 = joint.iter().sum();
        let mut pa = vec![0.0; 1 << n_a];
        let mut pb = vec![0.0; 1 << (n - n_a)];
        for (b, w) in joint.iter().enumerate() {
            pa[b & ((1 << n_a) - 1)] += w / z;
            pb[b >> n_a] += w / z;
        }
        let h = |p: &[f64]| -p.iter().filter(|&&x| x > 0.0).map(|x| x * x.log2()).sum::<f64>();
        let pj: Vec<f64> = joint.iter().map(|w| w / z).collect();
        let mi = h(&pa) + h(&pb) - h(&pj);
        let r = classical_limit(SystemSize::Finite(n), beta, n_a as f64 / n as f64).unwrap();
        assert!((r.mi - mi).abs() < 1e-12, "{} vs {}", r.mi, mi);
    }

    #[test]
    fn finite_converges_to_closed_form() {
        let limit = high_temperature_mi(1.0, 0.5);
        let d: Vec<f64> = [256usize, 512, 1024]
            .iter()
            .map(|&n| classical_limit(SystemSize::Finite(n), 1.0, 0.5).unwrap().mi - limit)
            .collect();
        // Halving differences: the error shrinks like 1/N.
        assert!((d[0] / d[1] - 2.0).abs() < 0.1, "{d:?}");
        assert!((d[1] / d[2] - 2.0).abs() < 0.1, "{d:?}");
    }

    #[test]
    fn ordered_side_tends_to_saddle_value() {
        let limit = low_temperature_mi(3.0, 0.5);
        assert!(limit > 1.0);
        let finite = classical_limit(SystemSize::Finite(2048), 3.0, 0.5).unwrap().mi;
        assert!((finite - limit).abs() < 5e-3, "{finite} vs {limit}");
    }

    #[test]
    fn saddle_matches_high_temperature_branch_near_two() {
        // Both sides diverge at beta = 2, from the same Gaussian structure.
        let below = high_temperature_mi(2.0 - 1e-6, 0.5);
        let above = low_temperature_mi(2.0 + 1e-6, 0.5) - 1.0;
        assert!(below > 5.0 && above > 5.0);
    }

    #[test]
    fn critical_energy_leading_coefficient() {
        let coefficient = -(3.0f64).sqrt() * gamma(0.75) / (2.0 * gamma(0.25));
        let n = 1usize << 16;
        let u = moments(n, 2.0).unwrap().energy / (n as f64).sqrt();
        assert!((u - coefficient).abs() < 0.01 * coefficient.abs(), "{u} vs {coefficient}");
    }

    #[test]
    fn order_parameter_limits() {
        assert!((order_parameter(200, 0.0).unwrap() - 1.0 / (200f64).sqrt()).abs() < 1e-12);
        assert!(order_parameter(200, 200.0).unwrap() > 0.999);
    }
}
