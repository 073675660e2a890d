//! Local single-photon interference: click probabilities, exclusive-click
//! gains, the analytic detection rate and bit error rate, and the seeded
//! Monte Carlo round model.
//!
//! Rounds are simulated in fixed shards of [`SHARD_ROUNDS`]; each shard draws
//! from its own stream derived from (master seed, party, shard index), so the
//! merged event list is identical for any worker count.

use rand::{Rng, RngCore};
use serde::Serialize;
use thiserror::Error;

use crate::special::{bessel_i0, periodic_mean, QUADRATURE_NODES};
use crate::streams::{party_shard_stream, stream_rng, Party};

pub const SHARD_ROUNDS: u64 = 1 << 16;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OpticsError {
    #[error("pulse intensity must be nonnegative, got {0}")]
    Intensity(f64),
    #[error("detector efficiency must lie in [0, 1], got {0}")]
    Efficiency(f64),
    #[error("dark count probability must lie in [0, 1), got {0}")]
    DarkCount(f64),
}

/// Detector bank parameters for one party's interference measurement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OpticsParams {
    /// Mean photon number per pulse.
    pub mu: f64,
    /// Detector efficiency.
    pub eta_d: f64,
    /// Dark count probability per detector per gate.
    pub p_d: f64,
}

impl OpticsParams {
    pub fn new(mu: f64, eta_d: f64, p_d: f64) -> Result<Self, OpticsError> {
        let p = OpticsParams { mu, eta_d, p_d };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), OpticsError> {
        if self.mu.is_nan() || self.mu < 0.0 {
            return Err(OpticsError::Intensity(self.mu));
        }
        if !(0.0..=1.0).contains(&self.eta_d) {
            return Err(OpticsError::Efficiency(self.eta_d));
        }
        if !(0.0..1.0).contains(&self.p_d) {
            return Err(OpticsError::DarkCount(self.p_d));
        }
        Ok(())
    }
}

/// Which of the two detectors fired.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Detector {
    L,
    R,
}

/// One successful (exactly-one-click) round.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DetectionEvent {
    pub round: u64,
    /// Global phase index j, meaning phase 2*pi*j/m.
    pub phase_index: u32,
    pub key_bit: u8,
    pub detector: Detector,
}

/// Marginal click probabilities of the L and R detectors at signal phase phi:
/// pL = 1 - (1-p_d) e^{-mu eta (1+cos phi)}, pR with the opposite sign of cos.
pub fn click_probs(p: &OpticsParams, phi: f64) -> (f64, f64) {
    let a = p.mu * p.eta_d;
    let q = 1.0 - p.p_d;
    let p_l = 1.0 - q * (-a * (1.0 + phi.cos())).exp();
    let p_r = 1.0 - q * (-a * (1.0 - phi.cos())).exp();
    (p_l, p_r)
}

/// Exclusive-click gains: Q_L = pL (1 - pR), Q_R = pR (1 - pL). The two clicks
/// are modeled as independent events with the [`click_probs`] marginals, which
/// reproduces these products exactly.
pub fn gains(p: &OpticsParams, phi: f64) -> (f64, f64) {
    let (p_l, p_r) = click_probs(p, phi);
    (p_l * (1.0 - p_r), p_r * (1.0 - p_l))
}

/// Probability of a successful detection per round, phase-averaged:
/// 2[(1-p_d) e^{-mu eta} I0(mu eta) - (1-p_d)^2 e^{-2 mu eta}].
pub fn detection_rate(p: &OpticsParams) -> f64 {
    let a = p.mu * p.eta_d;
    let q = 1.0 - p.p_d;
    2.0 * (q * (-a).exp() * bessel_i0(a) - q * q * (-2.0 * a).exp())
}

/// Analytic bit error rate: the phase average of 2 Q_L Q_R / (Q_L + Q_R)^2,
/// with the empty-gain points contributing zero.
pub fn ber_analytic(p: &OpticsParams) -> f64 {
    periodic_mean(QUADRATURE_NODES, |theta| {
        let (ql, qr) = gains(p, theta);
        let s = ql + qr;
        if s == 0.0 {
            0.0
        } else {
            2.0 * ql * qr / (s * s)
        }
    })
}

/// Simulate one interference round at phase index `j` (of `m`) with key bit
/// `r`, i.e. signal phase 2*pi*j/m + r*pi. Returns an event iff exactly one
/// detector clicked; both the draw order (L then R) and the comparison are
/// part of the determinism contract.
pub fn simulate_round<R: Rng>(
    rng: &mut R,
    p: &OpticsParams,
    round: u64,
    phase_index: u32,
    m: usize,
    key_bit: u8,
) -> Option<DetectionEvent> {
    let phi = std::f64::consts::TAU * phase_index as f64 / m as f64
        + key_bit as f64 * std::f64::consts::PI;
    let (p_l, p_r) = click_probs(p, phi);
    let click_l = rng.random::<f64>() < p_l;
    let click_r = rng.random::<f64>() < p_r;
    match (click_l, click_r) {
        (true, false) => Some(DetectionEvent {
            round,
            phase_index,
            key_bit,
            detector: Detector::L,
        }),
        (false, true) => Some(DetectionEvent {
            round,
            phase_index,
            key_bit,
            detector: Detector::R,
        }),
        _ => None, // no click, or a double click: discarded
    }
}

fn simulate_shard(
    master_seed: u64,
    party: Party,
    p: &OpticsParams,
    m: usize,
    shard: u64,
    rounds: u64,
) -> Vec<DetectionEvent> {
    let mut rng = stream_rng(master_seed, party_shard_stream(party, shard));
    let start = shard * SHARD_ROUNDS;
    let end = (start + SHARD_ROUNDS).min(rounds);
    let mask = (m - 1) as u64;
    let mut events = Vec::new();
    for round in start..end {
        let j = (rng.next_u64() & mask) as u32;
        let r = (rng.next_u64() & 1) as u8;
        if let Some(ev) = simulate_round(&mut rng, p, round, j, m, r) {
            events.push(ev);
        }
    }
    events
}

/// Run all `rounds` rounds for one party, sequentially shard by shard.
pub fn simulate_party_sequential(
    master_seed: u64,
    party: Party,
    p: &OpticsParams,
    m: usize,
    rounds: u64,
) -> Vec<DetectionEvent> {
    assert!(
        m >= 2 && m.is_power_of_two(),
        "phase count must be a power of two"
    );
    let shards = rounds.div_ceil(SHARD_ROUNDS);
    (0..shards)
        .flat_map(|s| simulate_shard(master_seed, party, p, m, s, rounds))
        .collect()
}

/// Run all `rounds` rounds for one party; shards run on rayon when the
/// `parallel` feature is enabled, with output identical to the sequential path.
pub fn simulate_party(
    master_seed: u64,
    party: Party,
    p: &OpticsParams,
    m: usize,
    rounds: u64,
) -> Vec<DetectionEvent> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        assert!(
            m >= 2 && m.is_power_of_two(),
            "phase count must be a power of two"
        );
        let shards = rounds.div_ceil(SHARD_ROUNDS);
        (0..shards)
            .into_par_iter()
            .map(|s| simulate_shard(master_seed, party, p, m, s, rounds))
            .reduce(Vec::new, |mut acc, mut chunk| {
                acc.append(&mut chunk);
                acc
            })
    }
    #[cfg(not(feature = "parallel"))]
    simulate_party_sequential(master_seed, party, p, m, rounds)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn published_params() -> OpticsParams {
        OpticsParams::new(0.1, 0.8, 1e-8).unwrap()
    }

    #[test]
    fn click_probs_limits() {
        let p = OpticsParams::new(0.1, 0.8, 0.0).unwrap();
        let (p_l, p_r) = click_probs(&p, 0.0);
        assert_eq!(p_r, 0.0, "destructive arm is dark without dark counts");
        assert!((p_l - (1.0 - (-0.16f64).exp())).abs() < 1e-15);
        let vac = OpticsParams::new(0.0, 0.8, 1e-3).unwrap();
        let (p_l, p_r) = click_probs(&vac, 1.234);
        assert!((p_l - 1e-3).abs() < 1e-15 && (p_r - 1e-3).abs() < 1e-15);
    }

    #[test]
    fn gains_match_closed_form() {
        let p = published_params();
        let phi = std::f64::consts::PI / 3.0;
        let a = p.mu * p.eta_d;
        let q = 1.0 - p.p_d;
        let ql_cf = (1.0 - q * (-a * (1.0 + phi.cos())).exp()) * q * (-a * (1.0 - phi.cos())).exp();
        let qr_cf = (1.0 - q * (-a * (1.0 - phi.cos())).exp()) * q * (-a * (1.0 + phi.cos())).exp();
        let (ql, qr) = gains(&p, phi);
        assert!((ql - ql_cf).abs() < 1e-15 && (qr - qr_cf).abs() < 1e-15);
    }

    #[test]
    fn gains_swap_under_half_turn() {
        let p = published_params();
        for phi in [0.0, 0.4, 1.1, 2.9] {
            let (ql, qr) = gains(&p, phi);
            let (ql2, qr2) = gains(&p, phi + std::f64::consts::PI);
            assert!((ql - qr2).abs() < 1e-15 && (qr - ql2).abs() < 1e-15);
        }
        let dead = OpticsParams::new(0.0, 0.8, 0.0).unwrap();
        assert_eq!(gains(&dead, 0.7), (0.0, 0.0));
    }

    #[test]
    fn gains_are_probabilities_with_bounded_sum() {
        let p = OpticsParams::new(0.9, 0.7, 0.05).unwrap();
        for i in 0..64 {
            let phi = std::f64::consts::TAU * i as f64 / 64.0;
            let (ql, qr) = gains(&p, phi);
            assert!((0.0..=1.0).contains(&ql) && (0.0..=1.0).contains(&qr));
            assert!(ql + qr <= 1.0 + 1e-15);
        }
    }

    #[test]
    fn detection_rate_reference_point() {
        let rate = detection_rate(&published_params());
        assert!((rate - 0.144900284542).abs() < 1e-9, "rate = {rate}");
        assert_eq!(
            detection_rate(&OpticsParams::new(0.0, 0.8, 0.0).unwrap()),
            0.0
        );
    }

    #[test]
    fn detection_rate_equals_gain_quadrature() {
        let p = published_params();
        let quad = periodic_mean(QUADRATURE_NODES, |theta| {
            let (ql, qr) = gains(&p, theta);
            ql + qr
        });
        assert!((detection_rate(&p) - quad).abs() < 1e-10);
    }

    #[test]
    fn ber_reference_point() {
        let e = ber_analytic(&published_params());
        assert!((e - 0.25).abs() < 0.01, "E = {e}");
        assert!((e - 0.244985069739).abs() < 1e-9); // frozen quadrature value
    }

    #[test]
    fn ber_small_intensity_limit() {
        // integrand tends to sin^2(theta)/2 whose mean is exactly 1/4
        let p = OpticsParams::new(1e-4 / 0.8, 0.8, 1e-8).unwrap();
        let e = ber_analytic(&p);
        assert!((e - 0.25).abs() < 1e-4, "E = {e}");
    }

    #[test]
    fn ber_pure_dark_counts_are_uncorrelated() {
        let p = OpticsParams::new(0.0, 0.8, 0.01).unwrap();
        assert!((ber_analytic(&p) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn simulate_round_rate_matches_gains() {
        let p = OpticsParams::new(0.1, 0.8, 0.0).unwrap();
        let mut rng = stream_rng(7, 99);
        let trials = 1_000_000u64;
        let mut hits = 0u64;
        for round in 0..trials {
            if simulate_round(&mut rng, &p, round, 0, 1024, 0).is_some() {
                hits += 1;
            }
        }
        let (ql, qr) = gains(&p, 0.0);
        let expect = ql + qr;
        let sigma = (expect * (1.0 - expect) / trials as f64).sqrt();
        let got = hits as f64 / trials as f64;
        assert!(
            (got - expect).abs() < 3.0 * sigma,
            "got {got}, expect {expect} ± {sigma}"
        );
    }

    #[test]
    fn simulate_round_dead_source_never_clicks() {
        let p = OpticsParams::new(0.0, 0.8, 0.0).unwrap();
        let mut rng = stream_rng(8, 99);
        for round in 0..10_000 {
            assert!(simulate_round(&mut rng, &p, round, 3, 8, 1).is_none());
        }
    }

    #[test]
    fn simulate_round_balanced_at_quarter_turn() {
        // phi = pi/2: cos = 0, both detectors symmetric
        let p = published_params();
        let mut rng = stream_rng(9, 99);
        let (mut l, mut n) = (0u64, 0u64);
        for round in 0..1_000_000 {
            if let Some(ev) = simulate_round(&mut rng, &p, round, 256, 1024, 0) {
                n += 1;
                if ev.detector == Detector::L {
                    l += 1;
                }
            }
        }
        let frac = l as f64 / n as f64;
        let sigma = (0.25 / n as f64).sqrt();
        assert!(
            (frac - 0.5).abs() < 3.0 * sigma,
            "L fraction {frac} over {n}"
        );
    }

    #[test]
    fn party_simulation_is_deterministic_and_matches_rate() {
        let p = published_params();
        let n = 1_000_000u64;
        let a1 = simulate_party(42, Party::Alice, &p, 1024, n);
        let a2 = simulate_party(42, Party::Alice, &p, 1024, n);
        assert_eq!(a1, a2, "same seed, same events");
        let seq = simulate_party_sequential(42, Party::Alice, &p, 1024, n);
        assert_eq!(a1, seq, "parallel and sequential shard runs agree");
        let b = simulate_party(42, Party::Bob, &p, 1024, n);
        assert_ne!(a1, b, "parties draw from distinct streams");

        let rate = detection_rate(&p);
        let sigma = (rate * (1.0 - rate) / n as f64).sqrt();
        for (events, who) in [(&a1, "alice"), (&b, "bob")] {
            let frac = events.len() as f64 / n as f64;
            assert!(
                (frac - rate).abs() < 3.0 * sigma,
                "{who}: {frac} vs {rate} ± {sigma}"
            );
        }
        // rounds are strictly increasing across shard boundaries
        for w in a1.windows(2) {
            assert!(w[0].round < w[1].round);
        }
    }
}
