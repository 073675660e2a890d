//! GF(2) Toeplitz-matrix products.
//!
//! A seed of `rows + cols - 1` bits h_0 … h_{rows+cols-2} defines the matrix
//! `H[i][j] = h[(rows-1) + j - i]` (top-left h_{rows-1}, top-right
//! h_{rows+cols-2}, bottom-left h_0). Three operations share this family:
//!
//! * [`toeplitz_product`] — row-vector times matrix, `d = v · H`, expanding an
//!   update key into the negotiation pad;
//! * [`compress`] — matrix times column-vector, `out = H · v`, the universal
//!   hash used for privacy amplification and tag cores;
//! * [`mac_tag`]/[`mac_verify`] — `tag = compress(message) ⊕ otp`.
//!
//! The naive double-loop implementations are the normative definition; the
//! packed word-level kernels must match them bit for bit (both are exported,
//! and the equivalence is part of the acceptance suite). Both products reduce
//! to XOR-accumulating shifted windows of the seed, one window per set input
//! bit, which is what the packed kernel does — in parallel chunks when the
//! `parallel` feature is enabled, with identical results.

use thiserror::Error;

use crate::bits::BitString;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ToeplitzError {
    #[error("seed needs rows + cols - 1 = {expected} bits, got {got}")]
    SeedLength { expected: usize, got: usize },
    #[error("input vector length {got} does not match {expected}")]
    InputLength { expected: usize, got: usize },
    #[error("one-time pad length {got} does not match the tag length {expected}")]
    OtpLength { expected: usize, got: usize },
}

/// Seed bits plus the matrix shape they define.
#[derive(Debug, Clone, PartialEq)]
pub struct ToeplitzSeed {
    bits: BitString,
    rows: usize,
    cols: usize,
}

impl ToeplitzSeed {
    pub fn new(bits: BitString, rows: usize, cols: usize) -> Result<Self, ToeplitzError> {
        assert!(rows >= 1 && cols >= 1, "degenerate matrix shape");
        let expected = rows + cols - 1;
        if bits.len() != expected {
            return Err(ToeplitzError::SeedLength {
                expected,
                got: bits.len(),
            });
        }
        Ok(ToeplitzSeed { bits, rows, cols })
    }

    pub fn random<R: rand::RngCore>(rng: &mut R, rows: usize, cols: usize) -> Self {
        ToeplitzSeed::new(BitString::random(rng, rows + cols - 1), rows, cols)
            .expect("fresh bits have the right length")
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn bits(&self) -> &BitString {
        &self.bits
    }

    /// Matrix entry H[i][j].
    pub fn entry(&self, i: usize, j: usize) -> bool {
        assert!(i < self.rows && j < self.cols);
        self.bits.get(self.rows - 1 + j - i)
    }
}

/// XOR-accumulate the windows `src[off .. off + out_len)` for every offset,
/// splitting the output range into independent chunks when it is large.
fn accumulate_windows(src: &BitString, offsets: &[usize], out_len: usize) -> BitString {
    const PAR_MIN_BITS: usize = 1 << 18;
    #[cfg(feature = "parallel")]
    if out_len >= PAR_MIN_BITS && !offsets.is_empty() {
        use rayon::prelude::*;
        const CHUNK_BITS: usize = 1 << 20; // multiple of 64 so words concatenate
        let chunks: Vec<BitString> = (0..out_len.div_ceil(CHUNK_BITS))
            .into_par_iter()
            .map(|c| {
                let start = c * CHUNK_BITS;
                let len = CHUNK_BITS.min(out_len - start);
                let mut acc = BitString::zeros(len);
                for &off in offsets {
                    acc.xor_window(src, off + start);
                }
                acc
            })
            .collect();
        let mut words = Vec::with_capacity(out_len.div_ceil(64));
        for chunk in &chunks {
            words.extend_from_slice(chunk.words());
        }
        return BitString::from_words(words, out_len);
    }
    #[cfg(not(feature = "parallel"))]
    let _ = PAR_MIN_BITS;

    let mut acc = BitString::zeros(out_len);
    for &off in offsets {
        acc.xor_window(src, off);
    }
    acc
}

/// `d = v · H`: d_j = XOR_i v_i h_{(rows-1-i)+j}, for j = 0 … cols-1.
/// Packed shift-and-XOR implementation.
pub fn toeplitz_product(seed: &ToeplitzSeed, v: &BitString) -> Result<BitString, ToeplitzError> {
    if v.len() != seed.rows {
        return Err(ToeplitzError::InputLength {
            expected: seed.rows,
            got: v.len(),
        });
    }
    let offsets: Vec<usize> = v.iter_ones().map(|i| seed.rows - 1 - i).collect();
    Ok(accumulate_windows(&seed.bits, &offsets, seed.cols))
}

/// Naive double-loop reference for [`toeplitz_product`]; normative.
pub fn toeplitz_product_naive(
    seed: &ToeplitzSeed,
    v: &BitString,
) -> Result<BitString, ToeplitzError> {
    if v.len() != seed.rows {
        return Err(ToeplitzError::InputLength {
            expected: seed.rows,
            got: v.len(),
        });
    }
    let mut out = BitString::zeros(seed.cols);
    for j in 0..seed.cols {
        let mut bit = false;
        for i in 0..seed.rows {
            bit ^= v.get(i) & seed.entry(i, j);
        }
        out.set(j, bit);
    }
    Ok(out)
}

/// `out = H · v`: out_i = XOR_j h_{(rows-1-i)+j} v_j, for i = 0 … rows-1.
/// Packed implementation (same window kernel, output reversed).
pub fn compress(seed: &ToeplitzSeed, v: &BitString) -> Result<BitString, ToeplitzError> {
    if v.len() != seed.cols {
        return Err(ToeplitzError::InputLength {
            expected: seed.cols,
            got: v.len(),
        });
    }
    let offsets: Vec<usize> = v.iter_ones().collect();
    Ok(accumulate_windows(&seed.bits, &offsets, seed.rows).reversed())
}

/// Naive double-loop reference for [`compress`]; normative.
pub fn compress_naive(seed: &ToeplitzSeed, v: &BitString) -> Result<BitString, ToeplitzError> {
    if v.len() != seed.cols {
        return Err(ToeplitzError::InputLength {
            expected: seed.cols,
            got: v.len(),
        });
    }
    let mut out = BitString::zeros(seed.rows);
    for i in 0..seed.rows {
        let mut bit = false;
        for j in 0..seed.cols {
            bit ^= seed.entry(i, j) & v.get(j);
        }
        out.set(i, bit);
    }
    Ok(out)
}

/// Wegman-Carter style tag: `compress(seed, message) ⊕ otp`. The seed shape is
/// (tag length) × (message length); the pad is as long as the tag and must be
/// fresh per message.
pub fn mac_tag(
    seed: &ToeplitzSeed,
    otp: &BitString,
    message: &BitString,
) -> Result<BitString, ToeplitzError> {
    if otp.len() != seed.rows {
        return Err(ToeplitzError::OtpLength {
            expected: seed.rows,
            got: otp.len(),
        });
    }
    Ok(compress(seed, message)?.xor(otp))
}

/// Recompute and compare.
pub fn mac_verify(
    seed: &ToeplitzSeed,
    otp: &BitString,
    message: &BitString,
    tag: &BitString,
) -> Result<bool, ToeplitzError> {
    Ok(&mac_tag(seed, otp, message)? == tag)
}
