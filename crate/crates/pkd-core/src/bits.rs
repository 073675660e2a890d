//! Packed bit strings.
//!
//! Bits are stored little-endian within `u64` words: logical bit `i` lives in
//! word `i / 64` at position `i % 64`. Byte serialization keeps the same order
//! (bit `i` at position `i % 8` of byte `i / 8`) and zero-pads the final byte,
//! so serialized hashes and rule tables are reproducible bit-for-bit.
//!
//! Substring semantics (who is the MSB of a block) belong to the consumers;
//! [`BitString::block_value`] reads blocks MSB-first as the mapping rule
//! requires.

use rand::RngCore;

/// A packed sequence of bits with a defined length.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitString {
    words: Vec<u64>,
    len: usize,
}

fn words_for(len: usize) -> usize {
    len.div_ceil(64)
}

impl BitString {
    pub fn zeros(len: usize) -> Self {
        BitString {
            words: vec![0; words_for(len)],
            len,
        }
    }

    /// Build from 0/1 values, first element = bit 0.
    pub fn from_bits<I: IntoIterator<Item = u8>>(bits: I) -> Self {
        let mut out = BitString::zeros(0);
        for b in bits {
            out.push(b & 1 == 1);
        }
        out
    }

    /// Parse "0101…" (whitespace ignored).
    pub fn from_binary_str(s: &str) -> Self {
        BitString::from_bits(s.chars().filter(|c| !c.is_whitespace()).map(|c| match c {
            '0' => 0,
            '1' => 1,
            other => panic!("invalid bit character {other:?}"),
        }))
    }

    /// Fill `len` bits from an RNG, consuming whole 64-bit draws.
    pub fn random<R: RngCore>(rng: &mut R, len: usize) -> Self {
        let mut words: Vec<u64> = (0..words_for(len)).map(|_| rng.next_u64()).collect();
        if let Some(last) = words.last_mut() {
            let tail = len % 64;
            if tail != 0 {
                *last &= (1u64 << tail) - 1;
            }
        }
        BitString { words, len }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        (self.words[i >> 6] >> (i & 63)) & 1 == 1
    }

    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        let mask = 1u64 << (i & 63);
        if value {
            self.words[i >> 6] |= mask;
        } else {
            self.words[i >> 6] &= !mask;
        }
    }

    pub fn push(&mut self, value: bool) {
        if self.len.is_multiple_of(64) {
            self.words.push(0);
        }
        self.len += 1;
        if value {
            self.set(self.len - 1, true);
        }
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Copy of bits [start, start + len).
    pub fn slice(&self, start: usize, len: usize) -> BitString {
        assert!(start + len <= self.len, "slice out of range");
        let mut out = BitString::zeros(len);
        for w in 0..out.words.len() {
            out.words[w] = self.read_word(start + w * 64);
        }
        out.mask_tail();
        out
    }

    /// 64 bits starting at logical offset `pos` (zero-padded past the end).
    fn read_word(&self, pos: usize) -> u64 {
        if pos >= self.len {
            return 0;
        }
        let w = pos >> 6;
        let off = pos & 63;
        let lo = self.words[w] >> off;
        if off == 0 || w + 1 >= self.words.len() {
            lo
        } else {
            lo | (self.words[w + 1] << (64 - off))
        }
    }

    fn mask_tail(&mut self) {
        let tail = self.len % 64;
        if tail != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << tail) - 1;
            }
        }
    }

    pub fn extend(&mut self, other: &BitString) {
        for i in 0..other.len {
            self.push(other.get(i));
        }
    }

    /// Value of the `width`-bit block starting at `start`, read MSB-first
    /// (the first bit of the block is the most significant).
    pub fn block_value(&self, start: usize, width: usize) -> u64 {
        assert!(width <= 63 && start + width <= self.len);
        let mut v = 0u64;
        for i in 0..width {
            v = (v << 1) | self.get(start + i) as u64;
        }
        v
    }

    /// Inverse of [`block_value`]: `width` bits of `value`, MSB first.
    ///
    /// [`block_value`]: BitString::block_value
    pub fn push_block(&mut self, value: u64, width: usize) {
        assert!(width <= 63 && value < (1u64 << width));
        for i in (0..width).rev() {
            self.push((value >> i) & 1 == 1);
        }
    }

    pub fn xor(&self, rhs: &BitString) -> BitString {
        assert_eq!(self.len, rhs.len, "XOR requires equal lengths");
        let words = self
            .words
            .iter()
            .zip(&rhs.words)
            .map(|(a, b)| a ^ b)
            .collect();
        BitString {
            words,
            len: self.len,
        }
    }

    pub fn xor_in_place(&mut self, rhs: &BitString) {
        assert_eq!(self.len, rhs.len, "XOR requires equal lengths");
        for (a, b) in self.words.iter_mut().zip(&rhs.words) {
            *a ^= b;
        }
    }

    /// Bit-reversed copy (bit i of the result = bit len-1-i of self).
    pub fn reversed(&self) -> BitString {
        let mut out = BitString::zeros(self.len);
        for w in 0..out.words.len() {
            // reversed bits [w*64, w*64+64) = source bits (len-w*64-64, len-w*64], bit-flipped
            let src_end = self.len - w * 64;
            let pos = src_end.saturating_sub(64);
            let mut word = self.read_word(pos);
            if src_end < 64 {
                word <<= 64 - src_end;
            }
            out.words[w] = word.reverse_bits();
        }
        out.mask_tail();
        out
    }

    /// Serialize with bit `i` at position `i % 8` of byte `i / 8`; the last
    /// byte is zero-padded.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = vec![0u8; self.len.div_ceil(8)];
        for (i, byte) in out.iter_mut().enumerate() {
            *byte = (self.read_word(i * 8) & 0xff) as u8;
        }
        out
    }

    pub fn from_bytes(bytes: &[u8], len: usize) -> Self {
        assert!(len <= bytes.len() * 8, "byte buffer shorter than len");
        let mut out = BitString::zeros(len);
        for (i, &byte) in bytes.iter().enumerate() {
            for b in 0..8 {
                let pos = i * 8 + b;
                if pos < len && (byte >> b) & 1 == 1 {
                    out.set(pos, true);
                }
            }
        }
        out
    }

    pub fn to_hex(&self) -> String {
        self.to_bytes().iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Iterator over the indices of set bits.
    pub fn iter_ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(w, &word)| {
            let mut word = word;
            std::iter::from_fn(move || {
                if word == 0 {
                    None
                } else {
                    let tz = word.trailing_zeros() as usize;
                    word &= word - 1;
                    Some(w * 64 + tz)
                }
            })
        })
    }

    /// XOR the window `src[offset, offset + self.len)` into self, word-packed.
    /// The window must lie fully inside `src`.
    pub fn xor_window(&mut self, src: &BitString, offset: usize) {
        assert!(offset + self.len <= src.len, "window out of range");
        for w in 0..self.words.len() {
            self.words[w] ^= src.read_word(offset + w * 64);
        }
        self.mask_tail();
    }

    pub(crate) fn words(&self) -> &[u64] {
        &self.words
    }

    pub(crate) fn from_words(words: Vec<u64>, len: usize) -> Self {
        debug_assert_eq!(words.len(), words_for(len));
        let mut out = BitString { words, len };
        out.mask_tail();
        out
    }
}

impl std::fmt::Debug for BitString {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "BitString[{}]<", self.len)?;
        for i in 0..self.len.min(96) {
            write!(f, "{}", self.get(i) as u8)?;
        }
        if self.len > 96 {
            write!(f, "…")?;
        }
        write!(f, ">")
    }
}
