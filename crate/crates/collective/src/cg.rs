//! Clebsch-Gordan coefficients by three-term recursion in `m1`.
//!
//! For fixed `(s1, s2, s, m)` the coefficients `C(m1) = <s1 m1; s2 m-m1 | s m>`
//! form the null vector of the symmetric tridiagonal matrix of `S^2 - s(s+1)`
//! in the product basis:
//!
//! `X(m1-1) C(m1-1) + D(m1) C(m1) + X(m1) C(m1+1) = 0`
//!
//! with `D(m1) = s1(s1+1) + s2(s2+1) + 2 m1 (m-m1) - s(s+1)` and
//! `X(m1) = sqrt(s1(s1+1) - m1(m1+1)) sqrt(s2(s2+1) - (m-m1)(m-m1-1))`.
//! The recursion grows monotonically out of each end of the range, so it
//! is run inwards from both ends and the two halves are joined at the first
//! local maximum of the forward sweep. All spins are passed doubled.

const RESCALE: f64 = 1e100;

/// Coefficients for one `(s1, s2, s, m)`, indexed from `m1 = m1_min`.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingColumn {
    pub two_m1_min: i64,
    pub values: Vec<f64>,
}

impl CouplingColumn {
    pub fn get(&self, two_m1: i64) -> f64 {
        let offset = two_m1 - self.two_m1_min;
        if offset < 0 || offset % 2 != 0 {
            return 0.0;
        }
        self.values.get((offset / 2) as usize).copied().unwrap_or(0.0)
    }
}

pub fn triangle(two_s1: usize, two_s2: usize, two_s: usize) -> bool {
    let (a, b, c) = (two_s1 as i64, two_s2 as i64, two_s as i64);
    c >= (a - b).abs() && c <= a + b && (a + b + c) % 2 == 0
}

fn admissible(two_s1: usize, two_s2: usize, two_s: usize, two_m: i64) -> bool {
    triangle(two_s1, two_s2, two_s) && two_m.abs() <= two_s as i64 && (two_s as i64 - two_m) % 2 == 0
}

fn casimir(two_s: f64) -> f64 {
    two_s / 2.0 * (two_s / 2.0 + 1.0)
}

/// All non-zero `C(m1)` for the given total projection.
pub fn coupling_column(two_s1: usize, two_s2: usize, two_s: usize, two_m: i64) -> Option<CouplingColumn> {
    if !admissible(two_s1, two_s2, two_s, two_m) {
        return None;
    }
    if two_m < 0 {
        // <s1 m1; s2 m2|s m> = (-1)^{s1+s2-s} <s1 -m1; s2 -m2|s -m>.
        let mirror = coupling_column(two_s1, two_s2, two_s, -two_m)?;
        let phase = if ((two_s1 + two_s2 - two_s) / 2) % 2 == 0 { 1.0 } else { -1.0 };
        let len = mirror.values.len() as i64;
        let top = mirror.two_m1_min + 2 * (len - 1);
        return Some(CouplingColumn {
            two_m1_min: -top,
            values: mirror.values.iter().rev().map(|v| phase * v).collect(),
        });
    }
    let (a, b) = (two_s1 as i64, two_s2 as i64);
    let lo = (-a).max(two_m - b);
    let hi = a.min(two_m + b);
    let len = ((hi - lo) / 2 + 1) as usize;
    let (s1, s2, s) = (two_s1 as f64, two_s2 as f64, two_s as f64);
    let m = two_m as f64 / 2.0;
    let m1_at = |k: usize| (lo + 2 * k as i64) as f64 / 2.0;
    let diag = |k: usize| {
        let m1 = m1_at(k);
        casimir(s1) + casimir(s2) + 2.0 * m1 * (m - m1) - casimir(s)
    };
    let off = |k: usize| {
        let m1 = m1_at(k);
        let m2 = m - m1;
        ((casimir(s1) - m1 * (m1 + 1.0)).max(0.0) * (casimir(s2) - m2 * (m2 - 1.0)).max(0.0)).sqrt()
    };
    let mut values = vec![0.0; len];
    if len == 1 {
        values[0] = 1.0;
    } else {
        // Forward sweep until |C| stops growing.
        let mut fwd = vec![0.0; len];
        fwd[0] = 1.0;
        fwd[1] = -diag(0) / off(0);
        let mut join = len - 1;
        for k in 1..len - 1 {
            if fwd[k].abs() < fwd[k - 1].abs() {
                join = k - 1;
                break;
            }
            fwd[k + 1] = -(diag(k) * fwd[k] + off(k - 1) * fwd[k - 1]) / off(k);
            if fwd[k + 1].abs() > RESCALE {
                fwd[..=k + 1].iter_mut().for_each(|v| *v /= RESCALE);
            }
        }
        if join == len - 1 && len >= 2 && fwd[len - 1].abs() < fwd[len - 2].abs() {
            join = len - 2;
        }
        // Backward sweep from the top end down to the join point.
        let mut bwd = vec![0.0; len];
        bwd[len - 1] = 1.0;
        if join < len - 1 {
            bwd[len - 2] = -diag(len - 1) / off(len - 2);
            let mut k = len - 2;
            while k > join {
                bwd[k - 1] = -(diag(k) * bwd[k] + off(k) * bwd[k + 1]) / off(k - 1);
                if bwd[k - 1].abs() > RESCALE {
                    bwd[k - 1..].iter_mut().for_each(|v| *v /= RESCALE);
                }
                k -= 1;
            }
            let ratio = fwd[join] / bwd[join];
            values[..=join].copy_from_slice(&fwd[..=join]);
            for k in join + 1..len {
                values[k] = bwd[k] * ratio;
            }
        } else {
            values.copy_from_slice(&fwd);
        }
    }
    let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
    // Condon-Shortley: positive at m1 = s1, or with phase (-1)^{s1+s2-s}
    // at m2 = s2. For m >= 0 one of the two ends qualifies.
    let reference = if hi == a {
        values[len - 1]
    } else {
        let phase = if ((two_s1 + two_s2 - two_s) / 2) % 2 == 0 { 1.0 } else { -1.0 };
        phase * values[0]
    };
    let sign = if reference < 0.0 { -1.0 } else { 1.0 };
    values.iter_mut().for_each(|v| *v *= sign / norm);
    Some(CouplingColumn { two_m1_min: lo, values })
}

/// `<s1 m1; s2 m2 | s m>`; zero for inadmissible arguments.
pub fn cg(two_s1: usize, two_s2: usize, two_s: usize, two_m1: i64, two_m2: i64, two_m: i64) -> f64 {
    if two_m1 + two_m2 != two_m || two_m1.abs() > two_s1 as i64 || two_m2.abs() > two_s2 as i64 {
        return 0.0;
    }
    if (two_s1 as i64 - two_m1) % 2 != 0 || (two_s2 as i64 - two_m2) % 2 != 0 {
        return 0.0;
    }
    coupling_column(two_s1, two_s2, two_s, two_m).map_or(0.0, |c| c.get(two_m1))
}

/// Every column for fixed `(s1, s2, s)`, indexed by `m = -s, ..., s`.
#[derive(Debug, Clone)]
pub struct CouplingTable {
    pub two_s1: usize,
    pub two_s2: usize,
    pub two_s: usize,
    pub columns: Vec<CouplingColumn>,
}

impl CouplingTable {
    pub fn new(two_s1: usize, two_s2: usize, two_s: usize) -> Option<Self> {
        if !triangle(two_s1, two_s2, two_s) {
            return None;
        }
        let columns =
            (0..=two_s).map(|i| coupling_column(two_s1, two_s2, two_s, 2 * i as i64 - two_s as i64).unwrap()).collect();
        Some(CouplingTable { two_s1, two_s2, two_s, columns })
    }

    /// Column for projection index `i` (`m = -s + i`).
    pub fn column(&self, i: usize) -> &CouplingColumn {
        &self.columns[i]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ln_fact(n: i64) -> f64 {
        (1..=n).map(|k| (k as f64).ln()).sum()
    }

    /// Racah's closed formula, evaluated directly.
    fn racah(two_s1: i64, two_s2: i64, two_s: i64, two_m1: i64, two_m2: i64) -> f64 {
        let two_m = two_m1 + two_m2;
        let h = |x: i64| {
            assert!(x % 2 == 0);
            x / 2
        };
        let pre = 0.5
            * (((two_s + 1) as f64).ln()
                + ln_fact(h(two_s1 + two_s2 - two_s))
                + ln_fact(h(two_s1 - two_s2 + two_s))
                + ln_fact(h(-two_s1 + two_s2 + two_s))
                - ln_fact(h(two_s1 + two_s2 + two_s + 2))
                + ln_fact(h(two_s1 + two_m1))
                + ln_fact(h(two_s1 - two_m1))
                + ln_fact(h(two_s2 + two_m2))
                + ln_fact(h(two_s2 - two_m2))
                + ln_fact(h(two_s + two_m))
                + ln_fact(h(two_s - two_m)));
        let mut sum = 0.0;
        for k in 0..=200i64 {
            let args = [
                h(two_s1 + two_s2 - two_s) - k,
                h(two_s1 - two_m1) - k,
                h(two_s2 + two_m2) - k,
                h(two_s - two_s2 + two_m1) + k,
                h(two_s - two_s1 - two_m2) + k,
            ];
            if args.iter().any(|&x| x < 0) {
                continue;
            }
            let l = ln_fact(k) + args.iter().map(|&x| ln_fact(x)).sum::<f64>();
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            sum += sign * (pre - l).exp();
        }
        sum
    }

    #[test]
    fn stretched_state_is_one() {
        for (a, b) in [(1usize, 1usize), (4, 3), (10, 7)] {
            assert!((cg(a, b, a + b, a as i64, b as i64, (a + b) as i64) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn two_halves_singlet() {
        let r = 1.0 / 2f64.sqrt();
        assert!((cg(1, 1, 0, 1, -1, 0) - r).abs() < 1e-15);
        assert!((cg(1, 1, 0, -1, 1, 0) + r).abs() < 1e-15);
        assert!((cg(1, 1, 2, 1, -1, 0) - r).abs() < 1e-15);
        assert!((cg(1, 1, 2, -1, 1, 0) - r).abs() < 1e-15);
    }

    #[test]
    fn orthonormality_example() {
        let col = coupling_column(6, 4, 8, 2).unwrap();
        let norm: f64 = col.values.iter().map(|v| v * v).sum();
        assert!((norm - 1.0).abs() < 1e-14);
    }

    #[test]
    fn matches_racah_formula_exhaustively_small() {
        for two_s1 in 0..=6i64 {
            for two_s2 in 0..=6i64 {
                for two_s in ((two_s1 - two_s2).abs()..=two_s1 + two_s2).step_by(2) {
                    for two_m1 in (-two_s1..=two_s1).step_by(2) {
                        for two_m2 in (-two_s2..=two_s2).step_by(2) {
                            if (two_m1 + two_m2).abs() > two_s {
                                continue;
                            }
                            let got =
                                cg(two_s1 as usize, two_s2 as usize, two_s as usize, two_m1, two_m2, two_m1 + two_m2);
                            let want = racah(two_s1, two_s2, two_s, two_m1, two_m2);
                            assert!(
                                (got - want).abs() < 1e-13,
                                "{two_s1} {two_s2} {two_s} {two_m1} {two_m2}: {got} vs {want}"
                            );
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn large_spins_stay_accurate() {
        // Stretched coupling has the closed form
        // C = sqrt(C(2 s1, s1+m1) C(2 s2, s2+m2) / C(2s, s+m)).
        let (a, b) = (4000usize, 6000usize);
        let ln_binom = |n: i64, k: i64| ln_fact(n) - ln_fact(k) - ln_fact(n - k);
        let two_m = 2000i64;
        let col = coupling_column(a, b, a + b, two_m).unwrap();
        for two_m1 in [-2000i64, 0, 1000, 2000] {
            let two_m2 = two_m - two_m1;
            let l = 0.5
                * (ln_binom(a as i64, (a as i64 + two_m1) / 2) + ln_binom(b as i64, (b as i64 + two_m2) / 2)
                    - ln_binom((a + b) as i64, ((a + b) as i64 + two_m) / 2));
            assert!((col.get(two_m1) - l.exp()).abs() < 1e-12);
        }
        let norm: f64 = col.values.iter().map(|v| v * v).sum();
        assert!((norm - 1.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn columns_are_unit_vectors(two_s1 in 0usize..60, two_s2 in 0usize..60, k in 0usize..60, j in 0usize..120) {
            let lo = two_s1.abs_diff(two_s2);
            let two_s = lo + 2 * (k % ((two_s1 + two_s2 - lo) / 2 + 1));
            let two_m = 2 * (j % (two_s + 1)) as i64 - two_s as i64;
            let col = coupling_column(two_s1, two_s2, two_s, two_m).unwrap();
            let norm: f64 = col.values.iter().map(|v| v * v).sum();
            prop_assert!((norm - 1.0).abs() < 1e-12);
            prop_assert_eq!(cg(two_s1, two_s2, two_s, col.two_m1_min, two_m - col.two_m1_min + 2, two_m), 0.0);
        }

        #[test]
        fn rows_are_orthonormal(two_s1 in 0usize..12, two_s2 in 0usize..12, j in 0usize..40) {
            // Fixed (m1, m2): sum over s of C^2 is 1.
            let two_m1 = 2 * (j % (two_s1 + 1)) as i64 - two_s1 as i64;
            let two_m2 = 2 * ((j / 3) % (two_s2 + 1)) as i64 - two_s2 as i64;
            let lo = two_s1.abs_diff(two_s2);
            let total: f64 = (lo..=two_s1 + two_s2)
                .step_by(2)
                .map(|t| cg(two_s1, two_s2, t, two_m1, two_m2, two_m1 + two_m2).powi(2))
                .sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
        }
    }
}
