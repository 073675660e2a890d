//! Scalar special functions shared across the crate: log-factorials, the
//! modified Bessel function `I0`, the binary entropy, and stable log-space
//! combinators.

use thiserror::Error;

/// Domain violations for the scalar functions in this module.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum DomainError {
    #[error("binary entropy requires a probability in [0, 1], got {0}")]
    EntropyRange(f64),
    #[error("secrecy epsilon closed form assumes a large phase count (m >= 100), got m = {0}")]
    SecrecyEpsilonSmallM(usize),
}

const EXACT_LN_FACTORIAL_MAX: u64 = 256;

/// ln(n!), exact cumulative sum up to n = 256, log-gamma beyond.
pub fn log_factorial(n: u64) -> f64 {
    if n <= EXACT_LN_FACTORIAL_MAX {
        let mut acc = 0.0;
        for k in 2..=n {
            acc += (k as f64).ln();
        }
        acc
    } else {
        ln_gamma(n as f64 + 1.0)
    }
}

/// ln Γ(x) for x > 0.
pub fn ln_gamma(x: f64) -> f64 {
    statrs::function::gamma::ln_gamma(x)
}

/// log2(m!), used for the mapping-rule key-cost comparison.
pub fn log2_factorial(m: u64) -> f64 {
    log_factorial(m) / std::f64::consts::LN_2
}

/// Modified Bessel function of the first kind, order zero, by power series
/// `sum_k (x/2)^{2k} / (k!)^2`, truncated at relative term < 1e-15.
pub fn bessel_i0(x: f64) -> f64 {
    assert!(x >= 0.0, "bessel_i0 defined here for x >= 0");
    let q = x * x / 4.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 1.0;
    loop {
        term *= q / (k * k);
        sum += term;
        if term < 1e-15 * sum {
            return sum;
        }
        k += 1.0;
    }
}

/// Binary Shannon entropy h(x) in bits, with h(0) = h(1) = 0 by continuity.
pub fn binary_entropy(x: f64) -> Result<f64, DomainError> {
    if !(0.0..=1.0).contains(&x) {
        return Err(DomainError::EntropyRange(x));
    }
    if x == 0.0 || x == 1.0 {
        return Ok(0.0);
    }
    Ok(-x * x.log2() - (1.0 - x) * (1.0 - x).log2())
}

/// ln(exp(a) + exp(b)) without overflow.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    if a >= b {
        a + (b - a).exp().ln_1p()
    } else {
        b + (a - b).exp().ln_1p()
    }
}

/// ln(exp(a) - exp(b)) for a >= b; NEG_INFINITY when a == b.
pub fn log_sub_exp(a: f64, b: f64) -> f64 {
    assert!(a >= b, "log_sub_exp needs a >= b (a = {a}, b = {b})");
    if b == f64::NEG_INFINITY {
        return a;
    }
    if a == b {
        return f64::NEG_INFINITY;
    }
    a + (-((b - a).exp())).ln_1p()
}

/// ln(1 + exp(x)), stable for any x; tends to exp(x) as x -> -inf and to x as
/// x -> +inf.
pub fn ln_1p_exp(x: f64) -> f64 {
    if x > 33.0 {
        // exp(-x) below 2^-47; x + exp(-x) to double precision
        x + (-x).exp()
    } else if x < -37.0 {
        x.exp() // ln(1+y) = y to double precision here
    } else {
        x.exp().ln_1p()
    }
}

/// Mean of a periodic integrand over [0, 2π) on a uniform grid (trapezoid rule,
/// which is spectrally accurate for smooth periodic functions).
pub fn periodic_mean<F: Fn(f64) -> f64>(nodes: usize, f: F) -> f64 {
    let step = std::f64::consts::TAU / nodes as f64;
    let mut acc = 0.0;
    for i in 0..nodes {
        acc += f(i as f64 * step);
    }
    acc / nodes as f64
}

/// Number of quadrature nodes used throughout for periodic integrals.
pub const QUADRATURE_NODES: usize = 4096;
