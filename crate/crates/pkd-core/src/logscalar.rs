//! Nonnegative reals stored in natural-log space.
//!
//! The discrimination probabilities of this protocol live at magnitudes like
//! 1e-3657 — thousands of decades below `f64::MIN_POSITIVE` — so they are kept
//! as natural logarithms end to end and only rendered as mantissa/exponent
//! pairs on output.

use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::special::{log_add_exp, log_sub_exp};

/// A nonnegative real magnitude held as its natural logarithm.
///
/// Exact zero is represented by `ln = -inf`. Multiplication adds logs; addition
/// goes through log-sum-exp and never overflows for any representable operands.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct LogScalar {
    ln: f64,
}

impl LogScalar {
    pub const ZERO: LogScalar = LogScalar {
        ln: f64::NEG_INFINITY,
    };
    pub const ONE: LogScalar = LogScalar { ln: 0.0 };

    /// Wrap a natural logarithm. `-inf` means exact zero; NaN is rejected.
    pub fn from_ln(ln: f64) -> Self {
        assert!(!ln.is_nan(), "LogScalar from NaN");
        assert!(ln != f64::INFINITY, "LogScalar magnitude must be finite");
        LogScalar { ln }
    }

    /// Wrap an ordinary nonnegative double.
    pub fn from_value(x: f64) -> Self {
        assert!(x >= 0.0, "LogScalar requires a nonnegative value, got {x}");
        LogScalar { ln: x.ln() }
    }

    pub fn is_zero(&self) -> bool {
        self.ln == f64::NEG_INFINITY
    }

    /// The stored natural log (`-inf` for zero).
    pub fn ln_value(&self) -> f64 {
        self.ln
    }

    /// Back to a plain double; underflows to 0.0 below ~1e-308.
    pub fn value(&self) -> f64 {
        self.ln.exp()
    }

    pub fn sqrt(self) -> LogScalar {
        LogScalar { ln: self.ln * 0.5 }
    }

    /// Decompose into `(mantissa, exponent)` with `mantissa ∈ [1, 10)` so the
    /// value reads `mantissa × 10^exponent`. Zero decomposes to `(0, 0)`.
    pub fn to_scientific(&self) -> (f64, i64) {
        if self.is_zero() {
            return (0.0, 0);
        }
        let log10 = self.ln / std::f64::consts::LN_10;
        let mut exp = log10.floor() as i64;
        let mut mant = 10f64.powf(log10 - exp as f64);
        // guard the open upper edge against rounding
        if mant >= 10.0 {
            mant /= 10.0;
            exp += 1;
        }
        (mant, exp)
    }

    /// Render like "1.94e-3657" with three significant digits.
    pub fn to_sci_string(&self) -> String {
        if self.is_zero() {
            return "0".to_string();
        }
        let (mut mant, mut exp) = self.to_scientific();
        mant = (mant * 100.0).round() / 100.0;
        if mant >= 10.0 {
            mant /= 10.0;
            exp += 1;
        }
        format!("{mant:.2}e{exp}")
    }
}

impl std::ops::Mul for LogScalar {
    type Output = LogScalar;
    fn mul(self, rhs: LogScalar) -> LogScalar {
        if self.is_zero() || rhs.is_zero() {
            return LogScalar::ZERO;
        }
        LogScalar {
            ln: self.ln + rhs.ln,
        }
    }
}

impl std::ops::Div for LogScalar {
    type Output = LogScalar;
    fn div(self, rhs: LogScalar) -> LogScalar {
        assert!(!rhs.is_zero(), "LogScalar division by zero");
        if self.is_zero() {
            return LogScalar::ZERO;
        }
        LogScalar {
            ln: self.ln - rhs.ln,
        }
    }
}

impl std::ops::Add for LogScalar {
    type Output = LogScalar;
    fn add(self, rhs: LogScalar) -> LogScalar {
        LogScalar {
            ln: log_add_exp(self.ln, rhs.ln),
        }
    }
}

/// Log-space subtraction; panics if the result would be negative.
impl std::ops::Sub for LogScalar {
    type Output = LogScalar;
    fn sub(self, rhs: LogScalar) -> LogScalar {
        LogScalar {
            ln: log_sub_exp(self.ln, rhs.ln),
        }
    }
}

impl std::fmt::Display for LogScalar {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.to_sci_string())
    }
}

/// Serialized as both the rendered scientific string and the lossless raw log.
impl Serialize for LogScalar {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("LogScalar", 2)?;
        s.serialize_field("sci", &self.to_sci_string())?;
        if self.is_zero() {
            s.serialize_field("ln", &Option::<f64>::None)?;
        } else {
            s.serialize_field("ln", &Some(self.ln))?;
        }
        s.end()
    }
}
