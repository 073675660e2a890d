//! Scalar mathematics of discrete phase-randomized weak coherent states:
//! pseudo photon-number distributions, their distance to the Poisson/Fock
//! limit, phase-measurement densities, and the two optimal discrimination
//! probabilities (unambiguous and minimum-error).
//!
//! Everything below double underflow is carried as a [`LogScalar`]; all
//! functions are pure and thread-safe.

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::logscalar::LogScalar;
use crate::special::{
    binary_entropy as entropy_impl, ln_1p_exp, log_add_exp, log_factorial, DomainError,
};

/// ln of the relative truncation threshold (1e-30) for the pseudo
/// photon-number series.
const SERIES_REL_TOL_LN: f64 = -69.07755278982137;

/// Largest phase count for which the exact USD sum survives cancellation.
pub const USD_EXACT_MAX_M: usize = 12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CoherentError {
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error("mean photon number must be nonnegative, got {0}")]
    NegativeIntensity(f64),
    #[error("phase count must be at least {min}, got {got}")]
    PhaseCount { min: usize, got: usize },
    #[error("pseudo photon-number index {k} out of range for phase count {m}")]
    IndexRange { k: usize, m: usize },
    #[error("Gram eigenvalue imaginary residue {residue:e} exceeds tolerance {tol:e}")]
    EigenvalueResidue { residue: f64, tol: f64 },
}

/// One component of the pseudo photon-number decomposition: intensity `mu`,
/// phase count `m`, and class index `k` (photon numbers `l*m + k`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PseudoPhotonSpec {
    pub mu: f64,
    pub m: usize,
    pub k: usize,
}

impl PseudoPhotonSpec {
    pub fn new(mu: f64, m: usize, k: usize) -> Result<Self, CoherentError> {
        if mu.is_nan() || mu < 0.0 {
            return Err(CoherentError::NegativeIntensity(mu));
        }
        if m < 1 {
            return Err(CoherentError::PhaseCount { min: 1, got: m });
        }
        if k >= m {
            return Err(CoherentError::IndexRange { k, m });
        }
        Ok(PseudoPhotonSpec { mu, m, k })
    }
}

/// Poisson weight e^{-mu} mu^k / k! in log space.
pub fn poisson_pmf(mu: f64, k: u64) -> LogScalar {
    assert!(mu >= 0.0);
    if mu == 0.0 {
        return if k == 0 {
            LogScalar::ONE
        } else {
            LogScalar::ZERO
        };
    }
    LogScalar::from_ln(-mu + k as f64 * mu.ln() - log_factorial(k))
}

/// P^mu_m(k) = e^{-mu} sum_{l>=0} mu^{lm+k} / (lm+k)!, the probability of the
/// k-th pseudo photon-number class.
pub fn pseudo_photon_prob(spec: PseudoPhotonSpec) -> LogScalar {
    let PseudoPhotonSpec { mu, m, k } = spec;
    if mu == 0.0 {
        return if k == 0 {
            LogScalar::ONE
        } else {
            LogScalar::ZERO
        };
    }
    let ln_mu = mu.ln();
    let mut acc = f64::NEG_INFINITY;
    let mut l: u64 = 0;
    loop {
        let n = l * m as u64 + k as u64;
        let term = -mu + n as f64 * ln_mu - log_factorial(n);
        acc = log_add_exp(acc, term);
        if l > 0 && term < acc + SERIES_REL_TOL_LN {
            return LogScalar::from_ln(acc);
        }
        l += 1;
    }
}

/// The probability excess Delta(mu, m, k) = sum_{l>=1} mu^{lm} k! / (lm+k)!,
/// i.e. the relative gap between P^mu_m(k) and the Poisson weight.
pub fn prob_excess_delta(spec: PseudoPhotonSpec) -> LogScalar {
    let PseudoPhotonSpec { mu, m, k } = spec;
    if mu == 0.0 {
        return LogScalar::ZERO;
    }
    let ln_mu = mu.ln();
    let ln_k_fact = log_factorial(k as u64);
    let mut acc = f64::NEG_INFINITY;
    let mut l: u64 = 1;
    loop {
        let term =
            (l * m as u64) as f64 * ln_mu + ln_k_fact - log_factorial(l * m as u64 + k as u64);
        acc = log_add_exp(acc, term);
        if l > 1 && term < acc + SERIES_REL_TOL_LN {
            return LogScalar::from_ln(acc);
        }
        l += 1;
    }
}

/// Trace distance between the pseudo photon-number state and the Fock state of
/// the same index: D = sqrt(1 - 1/(1 + Delta)) = sqrt(Delta / (1 + Delta)).
pub fn trace_distance_pseudo_fock(spec: PseudoPhotonSpec) -> LogScalar {
    let delta = prob_excess_delta(spec);
    if delta.is_zero() {
        return LogScalar::ZERO;
    }
    // ln D = (ln Delta - ln(1 + Delta)) / 2, with ln(1+Delta) via ln(1+e^x)
    let ln_delta = delta.ln_value();
    LogScalar::from_ln(0.5 * (ln_delta - ln_1p_exp(ln_delta)))
}

/// Secrecy parameter of the phase against the optical mode,
/// eps ~= e^{-mu} mu^m / (2 m!). The closed form is only valid for large phase
/// counts, so small m is rejected.
pub fn secrecy_epsilon(mu: f64, m: usize) -> Result<LogScalar, CoherentError> {
    if m < 100 {
        return Err(DomainError::SecrecyEpsilonSmallM(m).into());
    }
    if mu.is_nan() || mu < 0.0 {
        return Err(CoherentError::NegativeIntensity(mu));
    }
    if mu == 0.0 {
        return Ok(LogScalar::ZERO);
    }
    let ln = -mu + m as f64 * mu.ln() - log_factorial(m as u64) - std::f64::consts::LN_2;
    Ok(LogScalar::from_ln(ln))
}

/// Truncation order for the phase-distribution series: smallest K covering all
/// but 1e-14 of the Poisson mass, and never less than 30.
fn phase_series_order(mu: f64) -> usize {
    let mut cum = f64::NEG_INFINITY;
    let mut k = 0u64;
    loop {
        cum = log_add_exp(cum, poisson_pmf(mu, k).ln_value());
        // cum >= 1 - 1e-14  <=>  ln cum >= ln(1 - 1e-14) ~= -1e-14
        if cum >= -1e-14 && k >= 30 {
            return k as usize;
        }
        k += 1;
    }
}

/// Phase-measurement probability density of a coherent state:
/// P(x | mu, theta) = (1/2pi) |sum_k e^{-i(x-theta)k} e^{-mu/2} mu^{k/2} / sqrt(k!)|^2.
pub fn phase_pdf(mu: f64, theta: f64, x: f64) -> f64 {
    assert!(mu >= 0.0);
    let order = phase_series_order(mu);
    let mut sum = Complex64::new(0.0, 0.0);
    for k in 0..=order {
        let ln_amp = if k == 0 {
            -mu / 2.0
        } else {
            -mu / 2.0 + 0.5 * (k as f64 * mu.ln() - log_factorial(k as u64))
        };
        let amp = ln_amp.exp();
        if amp == 0.0 {
            continue;
        }
        let phase = -(x - theta) * k as f64;
        sum += Complex64::from_polar(amp, phase);
    }
    sum.norm_sqr() / std::f64::consts::TAU
}

/// Phase density averaged over the m discrete preparation phases 2*pi*j/m;
/// flat at 1/(2pi) for any realistic (mu, m).
pub fn avg_phase_pdf(mu: f64, m: usize, x: f64) -> f64 {
    assert!(m >= 1);
    let mut acc = 0.0;
    for j in 0..m {
        acc += phase_pdf(mu, std::f64::consts::TAU * j as f64 / m as f64, x);
    }
    acc / m as f64
}

/// Optimal unambiguous-discrimination probability for the m symmetric coherent
/// states.
///
/// The asymptotic form m mu^{m-1}/(m-1)! is always returned (log space); the
/// exact minimum-over-r sum is evaluated with compensated summation and
/// returned only for m <= [`USD_EXACT_MAX_M`], beyond which its O(1) terms
/// cancel past double precision.
pub fn usd_probability(mu: f64, m: usize) -> (LogScalar, Option<f64>) {
    assert!(mu >= 0.0);
    assert!(m >= 2, "state discrimination needs at least two states");
    let approx = if mu == 0.0 {
        LogScalar::ZERO
    } else {
        LogScalar::from_ln(
            (m as f64).ln() + (m as f64 - 1.0) * mu.ln() - log_factorial(m as u64 - 1),
        )
    };
    if m > USD_EXACT_MAX_M {
        return (approx, None);
    }

    let mut best = f64::INFINITY;
    for r in 0..m {
        // Kahan-compensated complex accumulation
        let (mut s_re, mut c_re, mut s_im, mut c_im) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
        for j in 0..m {
            let alpha = std::f64::consts::TAU * j as f64 / m as f64;
            let modulus = (mu * (alpha.cos() - 1.0)).exp();
            let angle = mu * alpha.sin() - std::f64::consts::TAU * (j * r) as f64 / m as f64;
            let term = Complex64::from_polar(modulus, angle);
            let y = term.re - c_re;
            let t = s_re + y;
            c_re = (t - s_re) - y;
            s_re = t;
            let y = term.im - c_im;
            let t = s_im + y;
            c_im = (t - s_im) - y;
            s_im = t;
        }
        assert!(
            s_im.abs() < 1e-9,
            "USD sum imaginary residue {s_im:e} out of tolerance"
        );
        best = best.min(s_re);
    }
    (approx, Some(best.max(0.0)))
}

/// Minimum-error discrimination probability for the m symmetric coherent
/// states, via the circulant Gram spectrum:
/// P_min = 1 - (sum_r sqrt(lambda_r))^2 / m^2 with
/// lambda_r = sum_k e^{-mu(1 - e^{i 2pi k/m})} e^{i 2pi k r/m}.
pub fn min_error_probability(mu: f64, m: usize) -> Result<f64, CoherentError> {
    if mu.is_nan() || mu < 0.0 {
        return Err(CoherentError::NegativeIntensity(mu));
    }
    if m < 1 {
        return Err(CoherentError::PhaseCount { min: 1, got: m });
    }
    // circulant coefficients c_k
    let coeffs: Vec<Complex64> = (0..m)
        .map(|k| {
            let alpha = std::f64::consts::TAU * k as f64 / m as f64;
            Complex64::from_polar((mu * (alpha.cos() - 1.0)).exp(), mu * alpha.sin())
        })
        .collect();

    let eigenvalue = |r: usize| -> Complex64 {
        let mut s = Complex64::new(0.0, 0.0);
        for (k, c) in coeffs.iter().enumerate() {
            let angle = std::f64::consts::TAU * ((k * r) % m) as f64 / m as f64;
            s += c * Complex64::from_polar(1.0, angle);
        }
        s
    };

    #[cfg(feature = "parallel")]
    let lambdas: Vec<Complex64> = {
        use rayon::prelude::*;
        (0..m).into_par_iter().map(eigenvalue).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let lambdas: Vec<Complex64> = (0..m).map(eigenvalue).collect();

    let max_re = lambdas.iter().map(|l| l.re).fold(f64::MIN, f64::max);
    let tol = 1e-9 * max_re.max(f64::MIN_POSITIVE);
    let mut sqrt_sum = 0.0;
    for l in &lambdas {
        if l.im.abs() >= tol {
            return Err(CoherentError::EigenvalueResidue {
                residue: l.im.abs(),
                tol,
            });
        }
        sqrt_sum += l.re.max(0.0).sqrt(); // PSD analytically; roundoff clamped
    }
    Ok(1.0 - (sqrt_sum / m as f64).powi(2))
}

/// Binary Shannon entropy, re-exported where the key-length formula needs it.
pub fn binary_entropy(x: f64) -> Result<f64, CoherentError> {
    Ok(entropy_impl(x)?)
}

/// The one-wayness figures for a given (mu, m) working point.
#[derive(Debug, Clone, Serialize)]
pub struct AnalysisReport {
    pub mu: f64,
    pub m: usize,
    /// Asymptotic unambiguous-discrimination probability.
    pub p_usd: LogScalar,
    /// Exact USD value, present only for m <= [`USD_EXACT_MAX_M`].
    pub p_usd_exact: Option<f64>,
    /// Minimum-error discrimination probability.
    pub p_min: f64,
    /// Error probability of guessing the phase blind: 1 - 1/m.
    pub random_guess_error: f64,
    /// Trace distance between pseudo photon-number class 0 and vacuum-adjacent Fock state.
    pub trace_distance_k0: LogScalar,
    /// Relative probability excess of class 0 over the Poisson weight.
    pub delta_k0: LogScalar,
    /// Phase secrecy parameter; absent for m < 100 where the closed form is invalid.
    pub secrecy_epsilon: Option<LogScalar>,
}

/// Evaluate the full discrimination/secrecy record at one working point.
pub fn analyze(mu: f64, m: usize) -> Result<AnalysisReport, CoherentError> {
    if mu.is_nan() || mu < 0.0 {
        return Err(CoherentError::NegativeIntensity(mu));
    }
    if m < 2 {
        return Err(CoherentError::PhaseCount { min: 2, got: m });
    }
    let spec0 = PseudoPhotonSpec::new(mu, m, 0)?;
    let (p_usd, p_usd_exact) = usd_probability(mu, m);
    Ok(AnalysisReport {
        mu,
        m,
        p_usd,
        p_usd_exact,
        p_min: min_error_probability(mu, m)?,
        random_guess_error: 1.0 - 1.0 / m as f64,
        trace_distance_k0: trace_distance_pseudo_fock(spec0),
        delta_k0: prob_excess_delta(spec0),
        secrecy_epsilon: if m >= 100 {
            Some(secrecy_epsilon(mu, m)?)
        } else {
            None
        },
    })
}
