//! Number of total-spin-`s` multiplets in `N` spins 1/2.
//!
//! Spins are carried as `two_s = 2s` so half-integers stay exact.

use serde::Serialize;

/// `ln C(n, k)` for `k = 0..=n`, built by a compensated running sum from the
/// exact end point `ln C(n, 0) = 0` and mirrored about the centre.
pub fn log_binomial_row(n: usize) -> Vec<f64> {
    let mut row = vec![0.0; n + 1];
    let mut sum = 0.0f64;
    let mut carry = 0.0f64;
    for k in 1..=n / 2 {
        let term = ((n - k + 1) as f64 / k as f64).ln();
        let t = sum + term;
        carry += if sum.abs() >= term.abs() { (sum - t) + term } else { (term - t) + sum };
        sum = t;
        row[k] = sum + carry;
    }
    for k in n / 2 + 1..=n {
        row[k] = row[n - k];
    }
    row
}

#[derive(Debug, Clone, Serialize)]
pub struct MultiplicityTable {
    pub n: usize,
    /// `ln d_s` for `two_s = two_s_min(), two_s_min() + 2, ..., n`.
    pub log_d: Vec<f64>,
    /// Exact counts when every entry fits below `2^63`.
    pub exact: Option<Vec<u64>>,
}

impl MultiplicityTable {
    pub fn two_s_min(&self) -> usize {
        self.n % 2
    }

    pub fn two_spins(&self) -> impl Iterator<Item = usize> + '_ {
        (self.two_s_min()..=self.n).step_by(2)
    }

    fn index(&self, two_s: usize) -> Option<usize> {
        (two_s % 2 == self.n % 2 && two_s <= self.n).then(|| (two_s - self.two_s_min()) / 2)
    }

    /// `ln d_s`, `-inf` for inadmissible spins.
    pub fn log_degeneracy(&self, two_s: usize) -> f64 {
        self.index(two_s).map_or(f64::NEG_INFINITY, |i| self.log_d[i])
    }

    pub fn degeneracy(&self, two_s: usize) -> Option<u64> {
        let i = self.index(two_s)?;
        self.exact.as_ref().map(|d| d[i])
    }

    /// `ln sum_s (2s+1) d_s`, which equals `N ln 2`.
    pub fn log_state_count(&self) -> f64 {
        let terms: Vec<f64> = self.two_spins().zip(&self.log_d).map(|(t, &l)| l + ((t + 1) as f64).ln()).collect();
        log_sum_exp(&terms)
    }
}

/// Row `N` of the branching table: `d^N_s = d^{N-1}_{s-1/2} + d^{N-1}_{s+1/2}`,
/// in integers while they fit.
pub fn exact_multiplicities(n: usize) -> Option<Vec<u64>> {
    assert!(n >= 1);
    // Indexed by two_s in 0..=n.
    let mut row = vec![0u64; n + 2];
    row[1] = 1;
    for size in 2..=n {
        let mut next = vec![0u64; n + 2];
        for two_s in (size % 2..=size).step_by(2) {
            let below = if two_s >= 1 { row[two_s - 1] } else { 0 };
            let above = row[two_s + 1];
            let v = below.checked_add(above)?;
            if v > i64::MAX as u64 {
                return None;
            }
            next[two_s] = v;
        }
        row = next;
    }
    Some((n % 2..=n).step_by(2).map(|t| row[t]).collect())
}

/// Closed form `d_s = C(N, N/2-s) - C(N, N/2-s-1) = C(N, k) (2s+1)/(N/2+s+1)`
/// with `k = N/2 - s`.
pub fn multiplicities(n: usize) -> MultiplicityTable {
    assert!(n >= 1, "at least one spin");
    let binom = log_binomial_row(n);
    let log_d = (n % 2..=n)
        .step_by(2)
        .map(|two_s| {
            let k = (n - two_s) / 2;
            binom[k] + ((two_s + 1) as f64).ln() - ((n + two_s + 2) as f64 / 2.0).ln()
        })
        .collect();
    MultiplicityTable { n, log_d, exact: exact_multiplicities(n) }
}

pub fn log_sum_exp(terms: &[f64]) -> f64 {
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + terms.iter().map(|&t| (t - max).exp()).sum::<f64>().ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use statrs::function::factorial::ln_binomial;

    #[test]
    fn small_rows() {
        let t5 = multiplicities(5);
        assert_eq!(t5.exact.as_deref(), Some(&[5u64, 4, 1][..]));
        let t4 = multiplicities(4);
        assert_eq!(t4.exact.as_deref(), Some(&[2u64, 3, 1][..]));
        let count: u64 = t4.two_spins().zip(t4.exact.as_ref().unwrap()).map(|(t, d)| (t as u64 + 1) * d).sum();
        assert_eq!(count, 16);
        assert_eq!(multiplicities(1).exact.as_deref(), Some(&[1u64][..]));
    }

    #[test]
    fn integer_sum_rule_up_to_sixty() {
        for n in 1..=60usize {
            let t = multiplicities(n);
            let d = t.exact.as_ref().unwrap();
            let count: u128 = t.two_spins().zip(d).map(|(tw, &x)| (tw as u128 + 1) * x as u128).sum();
            assert_eq!(count, 1u128 << n, "N = {n}");
            for (&l, &x) in t.log_d.iter().zip(d) {
                assert!((l - (x as f64).ln()).abs() < 1e-12 * l.abs().max(1.0));
            }
        }
    }

    #[test]
    fn log_sum_rule_beyond_integers() {
        for n in [61usize, 100, 257, 1000, 4096] {
            let t = multiplicities(n);
            let expected = n as f64 * std::f64::consts::LN_2;
            assert!((t.log_state_count() - expected).abs() < 1e-12 * expected);
        }
    }

    #[test]
    fn binomial_row_matches_gamma() {
        for n in [1usize, 2, 7, 64, 1001, 16384] {
            let row = log_binomial_row(n);
            for k in [0, n / 3, n / 2, n] {
                let reference = ln_binomial(n as u64, k as u64);
                assert!((row[k] - reference).abs() < 1e-10 * reference.max(1.0), "n={n} k={k}");
            }
        }
    }

    proptest! {
        #[test]
        fn recursion_matches_closed_form(n in 1usize..62) {
            let t = multiplicities(n);
            let binom = log_binomial_row(n);
            let d = t.exact.clone().unwrap();
            for (i, two_s) in t.two_spins().enumerate() {
                let k = (n - two_s) / 2;
                let lower = if k == 0 { 0.0 } else { binom[k - 1].exp() };
                let closed = binom[k].exp() - lower;
                prop_assert!((closed - d[i] as f64).abs() <= 1e-9 * closed.max(1.0));
            }
        }
    }
}
