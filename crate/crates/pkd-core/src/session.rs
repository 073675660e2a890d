//! One full PKD session: per-round state preparation and interference for both
//! parties, announcement, phase negotiation through the Toeplitz-expanded pad,
//! pairing/sifting/flips, error-correction accounting, error verification,
//! privacy amplification, and the pre-shared-key ledger.
//!
//! The session is a pure function of its [`SessionConfig`]: every random draw
//! comes from a stream derived from the master seed (see [`crate::streams`]),
//! and the shard layout is fixed, so reports and transcripts are byte-identical
//! across runs and worker counts.
//!
//! Modeled pre-shared key pool. The pool feeds, in draw order: the mapping-rule
//! one-time pad (m·log2 m bits), the per-session update key (s bits), the
//! verification tag pad (always drawn, charged to the net rate only under
//! `count_verification_key`), and the privacy-amplification seed (drawn from
//! the pool only under `count_pa_seed`, otherwise taken from a public stream).
//! The negotiation matrix seed and the verification hash seed are reusable
//! across sessions and are not charged per session.

use rand::RngCore;
use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::bits::BitString;
use crate::mapping::{
    generate_rule, otp_decrypt_rule, otp_encrypt_rule, MappingError, MappingRule,
};
use crate::optics::{
    ber_analytic, detection_rate, simulate_party, DetectionEvent, Detector, OpticsError,
    OpticsParams,
};
use crate::special::binary_entropy;
use crate::streams::{stream_id, stream_rng, Party};
use crate::toeplitz::{compress, mac_tag, toeplitz_product, ToeplitzError, ToeplitzSeed};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SessionError {
    #[error("invalid session configuration: {0}")]
    InvalidConfig(String),
    #[error("pre-shared key pool exhausted: need {needed} bits, {available} available")]
    InsufficientKeyPool { needed: u64, available: u64 },
    #[error("negotiation overflow: {needed_bits} phase bits exceed the pad capacity {capacity}")]
    NegotiationOverflow { needed_bits: usize, capacity: usize },
    #[error(transparent)]
    Mapping(#[from] MappingError),
    #[error(transparent)]
    Toeplitz(#[from] ToeplitzError),
    #[error(transparent)]
    Optics(#[from] OpticsError),
}

/// What the net-rate accounting counts beyond the baseline `ell - s - m log2 m`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct AccountingFlags {
    /// Charge the verification tag pad to the net rate.
    pub count_verification_key: bool,
    /// Draw the privacy-amplification seed from the pool and charge it.
    pub count_pa_seed: bool,
}

/// Full description of one session; the report is a pure function of this.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SessionConfig {
    /// Rounds per session (N).
    pub rounds: u64,
    /// Phase count m (power of two).
    pub m: usize,
    pub optics: OpticsParams,
    /// Error-correction efficiency f >= 1.
    pub ec_efficiency: f64,
    pub eps_cor: f64,
    pub eps_sec: f64,
    /// Update-key length s.
    pub update_key_len: usize,
    /// Negotiation pad length t; `None` sizes it from the expected event count.
    pub negotiation_len: Option<usize>,
    pub master_seed: u64,
    pub flags: AccountingFlags,
    /// Modeled pool size in bits; `None` means an ample pool.
    pub pool_bits: Option<u64>,
}

impl SessionConfig {
    /// The published working point: mu = 0.1, m = 1024, eta_d = 0.8,
    /// p_d = 1e-8, f = 1.05, eps_cor = 1e-15, eps_sec = 1e-10, s = 10^4.
    pub fn published_defaults(rounds: u64, master_seed: u64) -> Self {
        SessionConfig {
            rounds,
            m: 1024,
            optics: OpticsParams {
                mu: 0.1,
                eta_d: 0.8,
                p_d: 1e-8,
            },
            ec_efficiency: 1.05,
            eps_cor: 1e-15,
            eps_sec: 1e-10,
            update_key_len: 10_000,
            negotiation_len: None,
            master_seed,
            flags: AccountingFlags::default(),
            pool_bits: None,
        }
    }

    /// Bits per phase substring, log2(m).
    pub fn substring_width(&self) -> Result<u32, SessionError> {
        if self.m < 2 || !self.m.is_power_of_two() {
            return Err(SessionError::InvalidConfig(format!(
                "phase count must be a power of two >= 2, got {}",
                self.m
            )));
        }
        Ok(self.m.trailing_zeros())
    }

    /// Expected successful events per party.
    pub fn expected_events(&self) -> f64 {
        self.rounds as f64 * detection_rate(&self.optics)
    }

    /// Default pad sizing: 5% headroom over the expected phase-bit volume,
    /// floored so small sessions keep at least a 5-sigma margin.
    pub fn default_negotiation_len(&self) -> Result<usize, SessionError> {
        let width = self.substring_width()? as f64;
        let mean = self.expected_events();
        let sigma = self.event_sigma();
        Ok((width * (1.05 * mean).max(mean + 5.0 * sigma).max(16.0)).ceil() as usize)
    }

    fn event_sigma(&self) -> f64 {
        let p = detection_rate(&self.optics);
        (self.rounds as f64 * p * (1.0 - p)).sqrt()
    }

    /// Resolve and validate, returning (substring width, pad length t, tag length).
    fn resolve(&self) -> Result<(u32, usize, usize), SessionError> {
        self.optics.validate()?;
        let width = self.substring_width()?;
        if self.ec_efficiency.is_nan() || self.ec_efficiency < 1.0 {
            return Err(SessionError::InvalidConfig(format!(
                "error-correction efficiency must be >= 1, got {}",
                self.ec_efficiency
            )));
        }
        for (name, eps) in [("eps_cor", self.eps_cor), ("eps_sec", self.eps_sec)] {
            if !(eps > 0.0 && eps < 1.0) {
                return Err(SessionError::InvalidConfig(format!(
                    "{name} must lie in (0, 1), got {eps}"
                )));
            }
        }
        if self.update_key_len == 0 {
            return Err(SessionError::InvalidConfig(
                "update key length must be positive".into(),
            ));
        }
        let t = match self.negotiation_len {
            Some(t) => t,
            None => self.default_negotiation_len()?,
        };
        // capacity must clear the expected phase-bit volume by >= 5 sigma
        let needed = (self.expected_events() + 5.0 * self.event_sigma()) * width as f64;
        if (t as f64) < needed {
            return Err(SessionError::InvalidConfig(format!(
                "negotiation pad of {t} bits cannot absorb the expected {needed:.0} phase bits"
            )));
        }
        Ok((width, t, verification_tag_len(self.eps_cor)))
    }
}

/// Pre-shared bits consumed and secret bits produced by one session.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct KeyLedger {
    /// One-time pad for the mapping rule: m·log2(m) bits.
    pub consumed_mapping_otp: u64,
    /// Per-session update key: s bits.
    pub consumed_k_upd: u64,
    /// Verification tag pad (charged to the net rate only when flagged).
    pub consumed_verification: u64,
    /// Privacy-amplification seed bits drawn from the pool (0 unless flagged).
    pub consumed_pa_seed: u64,
    /// Final secret key length ell.
    pub produced_ell: u64,
    /// Net rate R = ell - s - m·log2(m), minus the flagged items.
    pub net_rate: i64,
}

/// Outcome summary of one session.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SessionReport {
    pub n_alice: u64,
    pub n_bob: u64,
    pub n_matched: u64,
    /// Realized mismatch fraction of the sifted keys.
    pub empirical_error_rate: f64,
    /// Error-correction disclosure charged against the key, ceil(n f h(E)).
    pub disclosed_ec_bits: u64,
    pub verification_passed: bool,
    /// Final key length ell.
    pub final_key_len: u64,
    pub ledger: KeyLedger,
    /// SHA-256 of the transcript JSON.
    pub transcript_digest: String,
}

/// An announced successful event: round index and detector only — phases and
/// key bits never appear in public messages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct AnnouncedEvent {
    pub round: u64,
    pub detector: Detector,
}

/// A bit blob on the wire, hex-encoded with its exact bit length.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WireBits {
    pub hex: String,
    pub bits: usize,
}

impl WireBits {
    fn of(b: &BitString) -> Self {
        WireBits {
            hex: b.to_hex(),
            bits: b.len(),
        }
    }
}

/// Everything that crossed the public channel, plus the config echo and ledger.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Transcript {
    pub config: SessionConfig,
    /// Resolved negotiation pad length t.
    pub negotiation_capacity_bits: usize,
    pub alice_events: Vec<AnnouncedEvent>,
    pub bob_events: Vec<AnnouncedEvent>,
    pub mapping_rule_ciphertext: WireBits,
    pub negotiation_ciphertext: WireBits,
    pub verification_tag: WireBits,
    pub ledger: KeyLedger,
}

/// Report, transcript, and both final keys (the keys stay out of the transcript).
#[derive(Debug, Clone)]
pub struct SessionOutcome {
    pub report: SessionReport,
    pub transcript: Transcript,
    pub alice_key: BitString,
    pub bob_key: BitString,
}

/// One matched pair of events sharing a phase index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MatchedPair {
    pub alice: DetectionEvent,
    pub bob: DetectionEvent,
}

/// Bucket both event lists by phase index and pair within each bucket in
/// arrival order; the shorter bucket bounds the pair count and the leftovers
/// are discarded. Output follows Alice's arrival order.
pub fn pair_events(alice: &[DetectionEvent], bob: &[DetectionEvent], m: usize) -> Vec<MatchedPair> {
    let mut alice_buckets: Vec<Vec<&DetectionEvent>> = vec![Vec::new(); m];
    let mut bob_buckets: Vec<Vec<&DetectionEvent>> = vec![Vec::new(); m];
    for ev in alice {
        alice_buckets[ev.phase_index as usize].push(ev);
    }
    for ev in bob {
        bob_buckets[ev.phase_index as usize].push(ev);
    }
    let mut pairs: Vec<MatchedPair> = alice_buckets
        .iter()
        .zip(&bob_buckets)
        .flat_map(|(a, b)| {
            a.iter()
                .zip(b.iter())
                .map(|(&&alice, &&bob)| MatchedPair { alice, bob })
        })
        .collect();
    pairs.sort_by_key(|p| p.alice.round);
    pairs
}

/// Expand the update key through the fixed Toeplitz seed and XOR the phase
/// bits against the pad prefix. Fails when the payload exceeds the pad.
pub fn negotiate_encrypt(
    seed: &ToeplitzSeed,
    k_upd: &BitString,
    phase_bits: &BitString,
) -> Result<BitString, SessionError> {
    if phase_bits.len() > seed.cols() {
        return Err(SessionError::NegotiationOverflow {
            needed_bits: phase_bits.len(),
            capacity: seed.cols(),
        });
    }
    let pad = toeplitz_product(seed, k_upd)?;
    Ok(phase_bits.xor(&pad.slice(0, phase_bits.len())))
}

/// The receiving side of [`negotiate_encrypt`]; XOR with the same pad prefix.
pub fn negotiate_decrypt(
    seed: &ToeplitzSeed,
    k_upd: &BitString,
    ciphertext: &BitString,
) -> Result<BitString, SessionError> {
    negotiate_encrypt(seed, k_upd, ciphertext)
}

/// Raw keys from the matched pairs: Alice keeps her bits, Bob flips his where
/// the pair clicked opposite detectors ({aL, bR} or {aR, bL}).
pub fn sift_and_flip(pairs: &[MatchedPair]) -> (BitString, BitString) {
    let mut z_a = BitString::zeros(0);
    let mut z_b = BitString::zeros(0);
    for p in pairs {
        z_a.push(p.alice.key_bit == 1);
        let flip = p.alice.detector != p.bob.detector;
        z_b.push((p.bob.key_bit == 1) ^ flip);
    }
    (z_a, z_b)
}

/// Result of the error-correction step.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorCorrection {
    /// Bob's corrected string (bit-identical to Alice's).
    pub corrected: BitString,
    /// Disclosure charged by the model: ceil(n f h(E_emp)).
    pub disclosed_bits: u64,
    /// Realized mismatch fraction E_emp.
    pub error_rate: f64,
}

/// Oracle-disclosure error correction: the simulator hands Bob Alice's string
/// and charges the information-theoretic leak for the observed error rate.
pub fn error_correct(z_a: &BitString, z_b: &BitString, f: f64) -> ErrorCorrection {
    assert_eq!(z_a.len(), z_b.len(), "raw keys must have equal length");
    let n = z_a.len();
    let error_rate = if n == 0 {
        0.0
    } else {
        z_a.xor(z_b).count_ones() as f64 / n as f64
    };
    let h = binary_entropy(error_rate).expect("mismatch fraction is a probability");
    ErrorCorrection {
        corrected: z_a.clone(),
        disclosed_bits: (n as f64 * f * h).ceil() as u64,
        error_rate,
    }
}

/// Tag length for error verification: ceil(log2(2 / eps_cor)).
pub fn verification_tag_len(eps_cor: f64) -> usize {
    (2.0 / eps_cor).log2().ceil() as usize
}

/// Verification outcome with the tag that would be published.
#[derive(Debug, Clone, PartialEq)]
pub struct Verification {
    pub passed: bool,
    pub tag: BitString,
}

/// Compare the two strings through a fresh one-time-padded Toeplitz tag of
/// ceil(log2(2/eps_cor)) bits. `hash_rng` supplies the reusable hash seed and
/// `otp` is the pool-drawn pad of exactly the tag length.
pub fn verify_keys<R: RngCore>(
    z_a: &BitString,
    z_b: &BitString,
    eps_cor: f64,
    hash_rng: &mut R,
    otp: &BitString,
) -> Result<Verification, SessionError> {
    assert_eq!(z_a.len(), z_b.len());
    let tag_len = verification_tag_len(eps_cor);
    assert_eq!(otp.len(), tag_len, "pad must match the tag length");
    let seed = if z_a.is_empty() {
        // empty message: the tag is just the pad on both sides
        None
    } else {
        Some(ToeplitzSeed::new(
            BitString::random(hash_rng, tag_len + z_a.len() - 1),
            tag_len,
            z_a.len(),
        )?)
    };
    let (tag_a, tag_b) = match &seed {
        Some(seed) => (mac_tag(seed, otp, z_a)?, mac_tag(seed, otp, z_b)?),
        None => (otp.clone(), otp.clone()),
    };
    Ok(Verification {
        passed: tag_a == tag_b,
        tag: tag_a,
    })
}

/// Secret key length per the composable bound, with the zero-phase-error
/// simplification built in:
/// ell = max(0, floor(n - n f h(E) - log2(2/eps_cor) - 2 log2(3/(2 eps_sec)))).
pub fn key_length(n: u64, error_rate: f64, f: f64, eps_cor: f64, eps_sec: f64) -> u64 {
    key_length_real(n as f64, error_rate, f, eps_cor, eps_sec)
}

/// Same bound on a real-valued event count (for the analytic pipeline).
pub fn key_length_real(n: f64, error_rate: f64, f: f64, eps_cor: f64, eps_sec: f64) -> u64 {
    let h = binary_entropy(error_rate).expect("error rate is a probability");
    let bound = n - n * f * h - (2.0 / eps_cor).log2() - 2.0 * (3.0 / (2.0 * eps_sec)).log2();
    bound.floor().max(0.0) as u64
}

/// Compress the reconciled key to `ell` bits through the Toeplitz family; the
/// seed must carry ell + n - 1 bits.
pub fn privacy_amplify(
    z: &BitString,
    ell: u64,
    pa_seed: &BitString,
) -> Result<BitString, SessionError> {
    if ell == 0 {
        return Ok(BitString::zeros(0));
    }
    let seed = ToeplitzSeed::new(pa_seed.clone(), ell as usize, z.len())?;
    Ok(compress(&seed, z)?)
}

/// Net per-session rate from a finished report: R = ell - s - m·log2(m),
/// minus the verification pad and PA seed only under their flags.
pub fn net_rate(report: &SessionReport, cfg: &SessionConfig) -> i64 {
    let width = cfg.m.trailing_zeros() as i64;
    let mut r = report.final_key_len as i64 - cfg.update_key_len as i64 - cfg.m as i64 * width;
    if cfg.flags.count_verification_key {
        r -= report.ledger.consumed_verification as i64;
    }
    if cfg.flags.count_pa_seed {
        r -= report.ledger.consumed_pa_seed as i64;
    }
    r
}

/// The modeled pre-shared pool: a deterministic bit stream with an optional
/// budget. Draw order is part of the determinism contract.
struct KeyPool {
    rng: rand_chacha::ChaCha12Rng,
    remaining: Option<u64>,
    drawn: u64,
}

impl KeyPool {
    fn new(master_seed: u64, budget: Option<u64>) -> Self {
        KeyPool {
            rng: stream_rng(master_seed, stream_id::KEY_POOL),
            remaining: budget,
            drawn: 0,
        }
    }

    fn draw(&mut self, bits: u64) -> Result<BitString, SessionError> {
        if let Some(rem) = self.remaining {
            if bits > rem {
                return Err(SessionError::InsufficientKeyPool {
                    needed: bits,
                    available: rem,
                });
            }
            self.remaining = Some(rem - bits);
        }
        self.drawn += bits;
        Ok(BitString::random(&mut self.rng, bits as usize))
    }
}

/// The analytic (formula-only) session outcome at a working point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatePoint {
    /// Expected successful events per party, N · detection_rate.
    pub n: f64,
    /// Analytic bit error rate.
    pub error_rate: f64,
    /// Key length from the composable bound.
    pub key_len: u64,
    /// Net rate after the per-session overhead.
    pub net_rate: i64,
}

/// Evaluate the analytic pipeline: n = N·rate, E = analytic BER, ell from the
/// bound, R = ell - s - m·log2(m) (minus flagged items).
pub fn analytic_rate(cfg: &SessionConfig) -> Result<RatePoint, SessionError> {
    let (width, _, tag_len) = cfg.resolve()?;
    let n = cfg.expected_events();
    let error_rate = ber_analytic(&cfg.optics);
    let key_len = key_length_real(n, error_rate, cfg.ec_efficiency, cfg.eps_cor, cfg.eps_sec);
    let mut r = key_len as i64 - cfg.update_key_len as i64 - (cfg.m as i64) * width as i64;
    if cfg.flags.count_verification_key {
        r -= tag_len as i64;
    }
    if cfg.flags.count_pa_seed {
        r -= key_len as i64 + n as i64 - 1;
    }
    Ok(RatePoint {
        n,
        error_rate,
        key_len,
        net_rate: r,
    })
}

/// Run one full session.
pub fn run_session(cfg: &SessionConfig) -> Result<SessionOutcome, SessionError> {
    let (width, t, tag_len) = cfg.resolve()?;

    // pre-session pool check: abort before any protocol step if the
    // guaranteed draws cannot be covered
    let upfront = (cfg.m as u64) * width as u64 + cfg.update_key_len as u64 + tag_len as u64;
    if let Some(budget) = cfg.pool_bits {
        if budget < upfront {
            return Err(SessionError::InsufficientKeyPool {
                needed: upfront,
                available: budget,
            });
        }
    }
    let mut pool = KeyPool::new(cfg.master_seed, cfg.pool_bits);

    // step (i): per-session mapping rule, shared under the one-time pad
    let rule = generate_rule_from_stream(cfg.master_seed, cfg.m, width)?;
    let rule_otp = pool.draw((cfg.m as u64) * width as u64)?;
    let rule_ciphertext = otp_encrypt_rule(&rule, &rule_otp)?;
    let bob_rule = otp_decrypt_rule(&rule_ciphertext, &rule_otp, cfg.m)?;
    debug_assert_eq!(bob_rule, rule);

    // step (ii): both parties run their rounds and announce successes
    let alice_events = simulate_party(
        cfg.master_seed,
        Party::Alice,
        &cfg.optics,
        cfg.m,
        cfg.rounds,
    );
    let bob_events = simulate_party(cfg.master_seed, Party::Bob, &cfg.optics, cfg.m, cfg.rounds);

    // step (iii): pair by phase, negotiate Alice's substrings, sift and flip
    let pairs = pair_events(&alice_events, &bob_events, cfg.m);
    let phase_bits_len = pairs.len() * width as usize;
    if phase_bits_len > t {
        return Err(SessionError::NegotiationOverflow {
            needed_bits: phase_bits_len,
            capacity: t,
        });
    }
    let negotiation_seed = ToeplitzSeed::new(
        BitString::random(
            &mut stream_rng(cfg.master_seed, stream_id::NEGOTIATION_FIXED),
            cfg.update_key_len + t - 1,
        ),
        cfg.update_key_len,
        t,
    )?;
    let k_upd = pool.draw(cfg.update_key_len as u64)?;
    let mut phase_bits = BitString::zeros(0);
    for p in &pairs {
        phase_bits.extend(&rule.substring_of(p.alice.phase_index as usize));
    }
    let negotiation_ciphertext = negotiate_encrypt(&negotiation_seed, &k_upd, &phase_bits)?;
    let recovered = negotiate_decrypt(&negotiation_seed, &k_upd, &negotiation_ciphertext)?;
    for (i, p) in pairs.iter().enumerate() {
        let value = recovered.block_value(i * width as usize, width as usize);
        assert_eq!(
            bob_rule.phase_index_of_value(value) as u32,
            p.bob.phase_index,
            "negotiated phase must match the paired bucket"
        );
    }
    let (z_a, z_b) = sift_and_flip(&pairs);

    // step (iv): error correction (disclosure model) and verification
    let ec = error_correct(&z_a, &z_b, cfg.ec_efficiency);
    let verification_otp = pool.draw(tag_len as u64)?;
    let mut hash_rng = stream_rng(cfg.master_seed, stream_id::VERIFICATION_SEED);
    let verification = verify_keys(
        &z_a,
        &ec.corrected,
        cfg.eps_cor,
        &mut hash_rng,
        &verification_otp,
    )?;

    // step (v): privacy amplification
    let n_matched = pairs.len() as u64;
    let ell = if verification.passed {
        key_length(
            n_matched,
            ec.error_rate,
            cfg.ec_efficiency,
            cfg.eps_cor,
            cfg.eps_sec,
        )
    } else {
        0
    };
    let pa_seed_len = if ell > 0 { ell + n_matched - 1 } else { 0 };
    let (pa_seed, consumed_pa_seed) = if ell == 0 {
        (BitString::zeros(0), 0)
    } else if cfg.flags.count_pa_seed {
        (pool.draw(pa_seed_len)?, pa_seed_len)
    } else {
        let mut rng = stream_rng(cfg.master_seed, stream_id::PA_PUBLIC);
        (BitString::random(&mut rng, pa_seed_len as usize), 0)
    };
    let alice_key = privacy_amplify(&z_a, ell, &pa_seed)?;
    let bob_key = privacy_amplify(&ec.corrected, ell, &pa_seed)?;

    let mut ledger = KeyLedger {
        consumed_mapping_otp: (cfg.m as u64) * width as u64,
        consumed_k_upd: cfg.update_key_len as u64,
        consumed_verification: tag_len as u64,
        consumed_pa_seed,
        produced_ell: ell,
        net_rate: 0,
    };
    ledger.net_rate = net_rate_from(&ledger, cfg, ell);
    debug_assert_eq!(
        pool.drawn,
        ledger.consumed_mapping_otp
            + ledger.consumed_k_upd
            + ledger.consumed_verification
            + ledger.consumed_pa_seed,
        "every pool bit must appear in exactly one ledger field"
    );

    let transcript = Transcript {
        config: cfg.clone(),
        negotiation_capacity_bits: t,
        alice_events: announce(&alice_events),
        bob_events: announce(&bob_events),
        mapping_rule_ciphertext: WireBits::of(&rule_ciphertext),
        negotiation_ciphertext: WireBits::of(&negotiation_ciphertext),
        verification_tag: WireBits::of(&verification.tag),
        ledger,
    };

    let digest = Sha256::digest(serde_json::to_vec(&transcript).expect("transcript serializes"));
    let digest_hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
    let report = SessionReport {
        n_alice: alice_events.len() as u64,
        n_bob: bob_events.len() as u64,
        n_matched,
        empirical_error_rate: ec.error_rate,
        disclosed_ec_bits: ec.disclosed_bits,
        verification_passed: verification.passed,
        final_key_len: ell,
        ledger,
        transcript_digest: digest_hex,
    };
    Ok(SessionOutcome {
        report,
        transcript,
        alice_key,
        bob_key,
    })
}

fn net_rate_from(ledger: &KeyLedger, cfg: &SessionConfig, ell: u64) -> i64 {
    let mut r = ell as i64 - ledger.consumed_k_upd as i64 - ledger.consumed_mapping_otp as i64;
    if cfg.flags.count_verification_key {
        r -= ledger.consumed_verification as i64;
    }
    if cfg.flags.count_pa_seed {
        r -= ledger.consumed_pa_seed as i64;
    }
    r
}

fn announce(events: &[DetectionEvent]) -> Vec<AnnouncedEvent> {
    events
        .iter()
        .map(|e| AnnouncedEvent {
            round: e.round,
            detector: e.detector,
        })
        .collect()
}

/// Scan rule entropy off the dedicated stream, extending it on exhaustion
/// (the first-appearance scan needs a coupon-collector-sized stream and the
/// tail probability of needing more is tiny but nonzero).
fn generate_rule_from_stream(
    master_seed: u64,
    m: usize,
    width: u32,
) -> Result<MappingRule, SessionError> {
    let mut rng = stream_rng(master_seed, stream_id::RULE_ENTROPY);
    let chunk = 10 * m * width as usize;
    let mut entropy = BitString::random(&mut rng, chunk);
    for _ in 0..64 {
        match generate_rule(&entropy, m) {
            Ok(rule) => return Ok(rule),
            Err(MappingError::EntropyExhausted { .. }) => {
                entropy.extend(&BitString::random(&mut rng, chunk));
            }
            Err(other) => return Err(other.into()),
        }
    }
    unreachable!("entropy stream cannot fail to cover {m} values 64 times in a row");
}
