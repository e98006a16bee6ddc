//! Shannon entropies in bits.

use crate::error::{Error, Result};

const SUM_TOLERANCE: f64 = 1e-12;

/// `-sum p log2 p`; zero entries contribute nothing.
pub fn shannon_entropy(p: &[f64]) -> Result<f64> {
    let mut total = 0.0;
    for &x in p {
        if !(x >= 0.0) {
            return Err(Error::InvalidDistribution(format!("entry {x} is negative or NaN")));
        }
        total += x;
    }
    if (total - 1.0).abs() > SUM_TOLERANCE {
        return Err(Error::InvalidDistribution(format!("entries sum to {total}")));
    }
    Ok(p.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.log2()).sum())
}

pub fn mutual_information_from_entropies(s_a: f64, s_b: f64, s_ab: f64) -> f64 {
    s_a + s_b - s_ab
}

/// Entropy of unnormalized weights `w_i = exp(log_w_i)`, in bits.
pub fn entropy_of_log_weights(log_w: &[f64]) -> f64 {
    let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return 0.0;
    }
    let mut z = 0.0;
    let mut acc = 0.0;
    for &l in log_w {
        let w = (l - max).exp();
        z += w;
        acc += w * (l - max);
    }
    (z.ln() - acc / z) / std::f64::consts::LN_2
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn uniform_and_degenerate() {
        assert!((shannon_entropy(&[0.25; 4]).unwrap() - 2.0).abs() < 1e-15);
        assert_eq!(shannon_entropy(&[1.0, 0.0]).unwrap(), 0.0);
        assert!(shannon_entropy(&[0.5, 0.6]).is_err());
        assert!(shannon_entropy(&[1.1, -0.1]).is_err());
    }

    fn normalized(raw: Vec<f64>) -> Vec<f64> {
        let s: f64 = raw.iter().sum();
        raw.into_iter().map(|x| x / s).collect()
    }

    proptest! {
        #[test]
        fn joint_mi_bounds(raw in prop::collection::vec(0.01f64..1.0, 12)) {
            // 3 x 4 joint distribution.
            let p = normalized(raw);
            let pa: Vec<f64> = (0..3).map(|a| (0..4).map(|b| p[a * 4 + b]).sum()).collect();
            let pb: Vec<f64> = (0..4).map(|b| (0..3).map(|a| p[a * 4 + b]).sum()).collect();
            let (sa, sb, sab) = (
                shannon_entropy(&pa).unwrap(),
                shannon_entropy(&pb).unwrap(),
                shannon_entropy(&p).unwrap(),
            );
            let i_ab = mutual_information_from_entropies(sa, sb, sab);
            let i_ba = mutual_information_from_entropies(sb, sa, sab);
            prop_assert!((i_ab - i_ba).abs() < 1e-12);
            prop_assert!(i_ab >= -1e-9);
            prop_assert!(i_ab <= sa.min(sb) + 1e-9);
        }

        #[test]
        fn log_weight_entropy_matches(raw in prop::collection::vec(0.01f64..1.0, 1..20)) {
            let logs: Vec<f64> = raw.iter().map(|x| x.ln() + 300.0).collect();
            let p = normalized(raw);
            prop_assert!((entropy_of_log_weights(&logs) - shannon_entropy(&p).unwrap()).abs() < 1e-12);
        }
    }
}
