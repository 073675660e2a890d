//! The per-session random mapping rule: a bijection between the m global
//! phases and the m possible log2(m)-bit substrings.
//!
//! The rule is built by first appearance: the entropy stream is read in
//! consecutive log2(m)-bit blocks and each previously unseen block value
//! becomes the substring of the next phase index, duplicates discarded. The
//! table serializes as c_0 ‖ c_1 ‖ … ‖ c_{m-1} (MSB-first per block,
//! zero-padded to whole bytes) and travels between the parties under a
//! one-time pad of the same length.

use thiserror::Error;

use crate::bits::BitString;
use crate::special::log2_factorial;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MappingError {
    #[error("phase count must be a power of two >= 2, got {0}")]
    NotPowerOfTwo(usize),
    #[error("entropy length {0} is not a multiple of the {1}-bit block width")]
    RaggedEntropy(usize, u32),
    #[error("entropy stream exhausted after {seen} of {needed} distinct substrings")]
    EntropyExhausted { seen: usize, needed: usize },
    #[error("key/ciphertext length {got} does not match the rule table length {expected}")]
    KeyLength { expected: usize, got: usize },
    #[error("decrypted table is not a permutation: substring value {value} repeats")]
    MalformedRule { value: u64 },
}

/// A bijection phase index j  <->  log2(m)-bit substring c_j.
#[derive(Debug, Clone, PartialEq)]
pub struct MappingRule {
    m: usize,
    width: u32,
    /// forward[j] = substring value for phase index j
    forward: Vec<u32>,
    /// inverse[substring value] = phase index
    inverse: Vec<u32>,
}

fn check_power_of_two(m: usize) -> Result<u32, MappingError> {
    if m < 2 || !m.is_power_of_two() {
        return Err(MappingError::NotPowerOfTwo(m));
    }
    Ok(m.trailing_zeros())
}

impl MappingRule {
    /// Build from an explicit forward table; validates the bijection.
    pub fn from_forward(forward: Vec<u32>) -> Result<Self, MappingError> {
        let m = forward.len();
        let width = check_power_of_two(m)?;
        let mut inverse = vec![u32::MAX; m];
        for (j, &c) in forward.iter().enumerate() {
            if c as usize >= m || inverse[c as usize] != u32::MAX {
                return Err(MappingError::MalformedRule { value: c as u64 });
            }
            inverse[c as usize] = j as u32;
        }
        Ok(MappingRule {
            m,
            width,
            forward,
            inverse,
        })
    }

    /// The identity rule forward[j] = j; handy as a fixture.
    pub fn identity(m: usize) -> Result<Self, MappingError> {
        check_power_of_two(m)?;
        MappingRule::from_forward((0..m as u32).collect())
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Substring width log2(m) in bits.
    pub fn width(&self) -> u32 {
        self.width
    }

    /// Phase index j for the substring x (length log2 m).
    pub fn phase_index_of(&self, x: &BitString) -> usize {
        assert_eq!(x.len(), self.width as usize, "substring width mismatch");
        self.phase_index_of_value(x.block_value(0, self.width as usize))
    }

    /// Same lookup on the packed block value.
    pub fn phase_index_of_value(&self, value: u64) -> usize {
        self.inverse[value as usize] as usize
    }

    /// Substring c_j for phase index j, MSB-first.
    pub fn substring_of(&self, j: usize) -> BitString {
        let mut out = BitString::zeros(0);
        out.push_block(self.substring_value_of(j), self.width as usize);
        out
    }

    pub fn substring_value_of(&self, j: usize) -> u64 {
        assert!(j < self.m, "phase index {j} out of range {}", self.m);
        self.forward[j] as u64
    }

    /// The wire form c_0 ‖ c_1 ‖ … ‖ c_{m-1}, m·log2(m) bits.
    pub fn serialize(&self) -> BitString {
        let mut out = BitString::zeros(0);
        for &c in &self.forward {
            out.push_block(c as u64, self.width as usize);
        }
        out
    }

    pub fn deserialize(bits: &BitString, m: usize) -> Result<Self, MappingError> {
        let width = check_power_of_two(m)?;
        let expected = m * width as usize;
        if bits.len() != expected {
            return Err(MappingError::KeyLength {
                expected,
                got: bits.len(),
            });
        }
        let forward: Vec<u32> = (0..m)
            .map(|j| bits.block_value(j * width as usize, width as usize) as u32)
            .collect();
        MappingRule::from_forward(forward)
    }
}

/// Scan `entropy` in log2(m)-bit blocks and collect the first appearance of
/// each distinct value into the rule table.
pub fn generate_rule(entropy: &BitString, m: usize) -> Result<MappingRule, MappingError> {
    let width = check_power_of_two(m)?;
    if !entropy.len().is_multiple_of(width as usize) {
        return Err(MappingError::RaggedEntropy(entropy.len(), width));
    }
    let mut seen = vec![false; m];
    let mut forward = Vec::with_capacity(m);
    for block in 0..entropy.len() / width as usize {
        let value = entropy.block_value(block * width as usize, width as usize) as usize;
        if !seen[value] {
            seen[value] = true;
            forward.push(value as u32);
            if forward.len() == m {
                return MappingRule::from_forward(forward);
            }
        }
    }
    Err(MappingError::EntropyExhausted {
        seen: forward.len(),
        needed: m,
    })
}

/// One-time-pad encryption of the serialized rule; the key must be exactly
/// m·log2(m) bits.
pub fn otp_encrypt_rule(rule: &MappingRule, key: &BitString) -> Result<BitString, MappingError> {
    let plain = rule.serialize();
    if key.len() != plain.len() {
        return Err(MappingError::KeyLength {
            expected: plain.len(),
            got: key.len(),
        });
    }
    Ok(plain.xor(key))
}

/// Invert [`otp_encrypt_rule`] and validate that the table is a permutation;
/// a wrong key or tampering surfaces as [`MappingError::MalformedRule`].
pub fn otp_decrypt_rule(
    ciphertext: &BitString,
    key: &BitString,
    m: usize,
) -> Result<MappingRule, MappingError> {
    if key.len() != ciphertext.len() {
        return Err(MappingError::KeyLength {
            expected: ciphertext.len(),
            got: key.len(),
        });
    }
    MappingRule::deserialize(&ciphertext.xor(key), m)
}

/// Pre-shared key cost of transporting one rule: m·log2(m) bits, together with
/// the information-theoretic floor log2(m!) for the ledger report.
pub fn rule_key_cost(m: usize) -> Result<(u64, f64), MappingError> {
    let width = check_power_of_two(m)?;
    Ok(((m as u64) * width as u64, log2_factorial(m as u64)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    /// The six worked 10-bit substrings with the duplicate fifth block.
    const WORKED_BLOCKS: [&str; 6] = [
        "1111011010",
        "0110110000",
        "1110100100",
        "0101111001",
        "0110110000",
        "1110000110",
    ];

    fn entropy_from_blocks(blocks: &[&str]) -> BitString {
        BitString::from_binary_str(&blocks.concat())
    }

    #[test]
    fn first_appearance_order_drops_duplicates() {
        // complete the stream so all 1024 values eventually appear
        let mut entropy = entropy_from_blocks(&WORKED_BLOCKS);
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        while entropy.len() < 200 * 1024 * 10 {
            entropy.extend(&BitString::random(&mut rng, 10 * 1024));
        }
        let rule = generate_rule(&entropy, 1024).unwrap();
        assert_eq!(rule.substring_value_of(0), 986);
        assert_eq!(rule.substring_value_of(1), 432);
        assert_eq!(rule.substring_value_of(2), 932);
        assert_eq!(rule.substring_value_of(3), 377);
        assert_eq!(rule.substring_value_of(4), 902); // duplicate block discarded
        let x = BitString::from_binary_str("1111011010");
        assert_eq!(
            rule.phase_index_of(&x),
            0,
            "first substring maps to phase 0"
        );
    }

    #[test]
    fn two_fresh_blocks_fill_m2() {
        let rule = generate_rule(&BitString::from_binary_str("10"), 2).unwrap();
        assert_eq!(rule.substring_value_of(0), 1);
        assert_eq!(rule.substring_value_of(1), 0);
    }

    #[test]
    fn exhaustion_is_reported() {
        // only 3 distinct 2-bit values in the stream
        let entropy = BitString::from_binary_str("00 01 10 00 01 10 00");
        match generate_rule(&entropy, 4) {
            Err(MappingError::EntropyExhausted { seen: 3, needed: 4 }) => {}
            other => panic!("expected exhaustion, got {other:?}"),
        }
    }

    #[test]
    fn identity_rule_lookups() {
        let rule = MappingRule::identity(1024).unwrap();
        let x = BitString::from_binary_str("0000000011");
        assert_eq!(rule.phase_index_of(&x), 3);
        assert_eq!(rule.substring_of(3), x);
    }

    #[test]
    fn lookup_roundtrip_on_random_rule() {
        let mut rng = ChaCha12Rng::seed_from_u64(2);
        let entropy = BitString::random(&mut rng, 300 * 1024 * 10);
        let rule = generate_rule(&entropy, 1024).unwrap();
        for _ in 0..1000 {
            let j = (rand::RngCore::next_u64(&mut rng) & 1023) as usize;
            assert_eq!(rule.phase_index_of(&rule.substring_of(j)), j);
        }
    }

    #[test]
    fn generated_rules_are_permutations() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        for m in [4usize, 16, 256, 1024] {
            let width = m.trailing_zeros() as usize;
            let entropy = BitString::random(&mut rng, 200 * m * width);
            let rule = generate_rule(&entropy, m).unwrap();
            let mut seen = vec![false; m];
            for j in 0..m {
                let v = rule.substring_value_of(j) as usize;
                assert!(!seen[v], "m = {m}: value {v} repeated");
                seen[v] = true;
            }
        }
    }

    #[test]
    fn otp_roundtrip_is_exact() {
        let mut rng = ChaCha12Rng::seed_from_u64(4);
        let entropy = BitString::random(&mut rng, 400 * 16 * 4);
        let rule = generate_rule(&entropy, 16).unwrap();
        let key = BitString::random(&mut rng, 16 * 4);
        let ct = otp_encrypt_rule(&rule, &key).unwrap();
        assert_eq!(otp_decrypt_rule(&ct, &key, 16).unwrap(), rule);
        // all-zero key leaves the plain serialization
        let zero = BitString::zeros(16 * 4);
        assert_eq!(otp_encrypt_rule(&rule, &zero).unwrap(), rule.serialize());
        // serialization round-trips bit-exactly
        assert_eq!(
            MappingRule::deserialize(&rule.serialize(), 16).unwrap(),
            rule
        );
    }

    #[test]
    fn flipped_key_bit_always_breaks_the_permutation() {
        // the table lists every block value exactly once, so any single-bit
        // change collides with another entry
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let mut malformed = 0;
        for _ in 0..1000 {
            let entropy = BitString::random(&mut rng, 400 * 16 * 4);
            let rule = generate_rule(&entropy, 16).unwrap();
            let key = BitString::random(&mut rng, 64);
            let ct = otp_encrypt_rule(&rule, &key).unwrap();
            let mut bad_key = key.clone();
            let i = (rand::RngCore::next_u64(&mut rng) % 64) as usize;
            bad_key.set(i, !bad_key.get(i));
            if matches!(
                otp_decrypt_rule(&ct, &bad_key, 16),
                Err(MappingError::MalformedRule { .. })
            ) {
                malformed += 1;
            }
        }
        assert!(
            malformed as f64 >= 1000.0 * (1.0 - 1.0 / 16.0),
            "only {malformed}/1000 detected"
        );
    }

    #[test]
    fn key_cost_dominates_information_floor() {
        assert_eq!(rule_key_cost(1024).unwrap().0, 10240);
        assert_eq!(rule_key_cost(2).unwrap().0, 2);
        let mut m = 2usize;
        while m <= 4096 {
            let (bits, floor) = rule_key_cost(m).unwrap();
            assert!(bits as f64 >= floor, "m = {m}: {bits} < {floor}");
            m *= 2;
        }
        assert!(rule_key_cost(24).is_err());
    }

    #[test]
    fn forward_entry_distribution_is_uniform() {
        // chi-square over forward[0] for 2000 seeded rules at m = 16;
        // critical value at significance 0.001 with 15 dof
        let mut rng = ChaCha12Rng::seed_from_u64(6);
        let mut counts = [0u32; 16];
        for _ in 0..2000 {
            let entropy = BitString::random(&mut rng, 400 * 16 * 4);
            let rule = generate_rule(&entropy, 16).unwrap();
            counts[rule.substring_value_of(0) as usize] += 1;
        }
        let expected = 2000.0 / 16.0;
        let chi2: f64 = counts
            .iter()
            .map(|&o| (o as f64 - expected).powi(2) / expected)
            .sum();
        assert!(chi2 < 37.697, "chi2 = {chi2}, counts = {counts:?}");
    }
}
