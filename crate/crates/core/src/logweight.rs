//! Signed numbers stored as `sign * exp(log_magnitude)`.
//!
//! Zero is `sign == 0` with `log_magnitude == -inf`; every operation keeps
//! that representation canonical.

use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogWeight {
    pub log_magnitude: f64,
    pub sign: i8,
}

impl LogWeight {
    pub const ZERO: LogWeight = LogWeight { log_magnitude: f64::NEG_INFINITY, sign: 0 };
    pub const ONE: LogWeight = LogWeight { log_magnitude: 0.0, sign: 1 };

    /// Positive value `exp(log)`.
    pub fn from_log(log: f64) -> Self {
        if log == f64::NEG_INFINITY {
            Self::ZERO
        } else {
            LogWeight { log_magnitude: log, sign: 1 }
        }
    }

    pub fn new(log_magnitude: f64, sign: i8) -> Self {
        if sign == 0 || log_magnitude == f64::NEG_INFINITY {
            Self::ZERO
        } else {
            LogWeight { log_magnitude, sign: sign.signum() }
        }
    }

    pub fn from_f64(x: f64) -> Self {
        if x == 0.0 {
            Self::ZERO
        } else {
            LogWeight { log_magnitude: x.abs().ln(), sign: if x > 0.0 { 1 } else { -1 } }
        }
    }

    pub fn to_f64(self) -> f64 {
        if self.sign == 0 {
            0.0
        } else {
            f64::from(self.sign) * self.log_magnitude.exp()
        }
    }

    pub fn is_zero(self) -> bool {
        self.sign == 0
    }

    /// Natural log of a positive value; `-inf` for zero, NaN for negative.
    pub fn ln(self) -> f64 {
        match self.sign {
            1 => self.log_magnitude,
            0 => f64::NEG_INFINITY,
            _ => f64::NAN,
        }
    }

    pub fn abs(self) -> Self {
        LogWeight::new(self.log_magnitude, self.sign.abs())
    }

    pub fn powi(self, n: i32) -> Self {
        if self.sign == 0 {
            return if n == 0 { Self::ONE } else { Self::ZERO };
        }
        let sign = if n % 2 == 0 { 1 } else { self.sign };
        LogWeight::new(self.log_magnitude * f64::from(n), sign)
    }

    pub fn sqrt(self) -> Self {
        debug_assert!(self.sign >= 0);
        LogWeight::new(0.5 * self.log_magnitude, self.sign)
    }

    /// Sum with log-sum-exp; opposite signs subtract magnitudes.
    pub fn sum<I: IntoIterator<Item = LogWeight>>(items: I) -> LogWeight {
        items.into_iter().fold(Self::ZERO, |acc, w| acc + w)
    }

    /// Relative difference `|a - b| / max(|a|, |b|)` evaluated in the log domain.
    pub fn relative_difference(self, other: LogWeight) -> f64 {
        if self.sign == 0 && other.sign == 0 {
            return 0.0;
        }
        let scale = self.log_magnitude.max(other.log_magnitude);
        let a = self.scaled(scale);
        let b = other.scaled(scale);
        (a - b).abs()
    }

    /// Value times `exp(-log_scale)` as a plain float.
    pub fn scaled(self, log_scale: f64) -> f64 {
        if self.sign == 0 {
            0.0
        } else {
            f64::from(self.sign) * (self.log_magnitude - log_scale).exp()
        }
    }
}

impl Add for LogWeight {
    type Output = LogWeight;
    fn add(self, rhs: LogWeight) -> LogWeight {
        if self.sign == 0 {
            return rhs;
        }
        if rhs.sign == 0 {
            return self;
        }
        let (hi, lo) = if self.log_magnitude >= rhs.log_magnitude { (self, rhs) } else { (rhs, self) };
        let ratio = (lo.log_magnitude - hi.log_magnitude).exp();
        if hi.sign == lo.sign {
            LogWeight::new(hi.log_magnitude + ratio.ln_1p(), hi.sign)
        } else if ratio == 1.0 {
            Self::ZERO
        } else {
            LogWeight::new(hi.log_magnitude + (-ratio).ln_1p(), hi.sign)
        }
    }
}

impl Neg for LogWeight {
    type Output = LogWeight;
    fn neg(self) -> LogWeight {
        LogWeight { log_magnitude: self.log_magnitude, sign: -self.sign }
    }
}

impl Sub for LogWeight {
    type Output = LogWeight;
    fn sub(self, rhs: LogWeight) -> LogWeight {
        self + (-rhs)
    }
}

impl Mul for LogWeight {
    type Output = LogWeight;
    fn mul(self, rhs: LogWeight) -> LogWeight {
        LogWeight::new(self.log_magnitude + rhs.log_magnitude, self.sign * rhs.sign)
    }
}

impl Div for LogWeight {
    type Output = LogWeight;
    fn div(self, rhs: LogWeight) -> LogWeight {
        assert!(rhs.sign != 0, "division by a zero LogWeight");
        LogWeight::new(self.log_magnitude - rhs.log_magnitude, self.sign * rhs.sign)
    }
}

impl PartialOrd for LogWeight {
    fn partial_cmp(&self, other: &LogWeight) -> Option<Ordering> {
        let key = |w: &LogWeight| match w.sign {
            0 => (0, 0.0),
            1 => (1, w.log_magnitude),
            _ => (-1, -w.log_magnitude),
        };
        let (sa, ma) = key(self);
        let (sb, mb) = key(other);
        match sa.cmp(&sb) {
            Ordering::Equal => ma.partial_cmp(&mb),
            o => Some(o),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_is_canonical() {
        assert_eq!(LogWeight::from_f64(0.0), LogWeight::ZERO);
        assert_eq!(LogWeight::from_f64(2.0) - LogWeight::from_f64(2.0), LogWeight::ZERO);
        assert_eq!((LogWeight::ZERO * LogWeight::from_f64(3.0)).sign, 0);
    }

    #[test]
    fn large_magnitudes_do_not_overflow() {
        let a = LogWeight::from_log(5000.0);
        let b = LogWeight::from_log(5000.0 + 2f64.ln());
        let s = a + a;
        assert!((s.log_magnitude - b.log_magnitude).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn combination_matches_plain_arithmetic(x in -1e3f64..1e3, y in -1e3f64..1e3) {
            let (a, b) = (LogWeight::from_f64(x), LogWeight::from_f64(y));
            let tol = |v: f64| 1e-14 * (x.abs() + y.abs()).max(v.abs());
            let sum = (a + b).to_f64();
            prop_assert!((sum - (x + y)).abs() <= 4.0 * tol(x + y));
            let prod = (a * b).to_f64();
            prop_assert!((prod - x * y).abs() <= 4e-14 * (x * y).abs());
            if y != 0.0 {
                let q = (a / b).to_f64();
                prop_assert!((q - x / y).abs() <= 4e-14 * (x / y).abs());
            }
        }

        #[test]
        fn ordering_matches_floats(x in -1e6f64..1e6, y in -1e6f64..1e6) {
            let (a, b) = (LogWeight::from_f64(x), LogWeight::from_f64(y));
            prop_assert_eq!(a.partial_cmp(&b), x.partial_cmp(&y));
        }
    }
}
