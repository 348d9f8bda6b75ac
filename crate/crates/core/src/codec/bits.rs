//! Append-only bit buffer and cursor with big-endian bit order (the first
//! bit written is the most significant bit of the first byte), plus Elias
//! gamma codes for prefix-free integers.

use num_bigint::BigUint;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BitsError {
    #[error("unexpected end of stream at bit {at}")]
    EndOfStream { at: usize },
    #[error("malformed gamma code at bit {at}")]
    BadGamma { at: usize },
}

/// Growable bitstring.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Bits {
    bytes: Vec<u8>,
    len: usize,
}

impl Bits {
    pub fn new() -> Bits {
        Bits::default()
    }

    /// Reconstructs a bitstring from packed bytes, keeping the first `len`
    /// bits.
    pub fn from_bytes(bytes: Vec<u8>, len: usize) -> Option<Bits> {
        if len > bytes.len() * 8 {
            return None;
        }
        let mut b = Bits { bytes, len };
        // Zero the tail so equality is structural.
        b.bytes.truncate(len.div_ceil(8));
        if len % 8 != 0 {
            if let Some(last) = b.bytes.last_mut() {
                *last &= !0u8 << (8 - len % 8) as u32;
            }
        }
        Some(b)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn push(&mut self, bit: bool) {
        if self.len % 8 == 0 {
            self.bytes.push(0);
        }
        if bit {
            let byte = self.len / 8;
            self.bytes[byte] |= 1 << (7 - self.len % 8);
        }
        self.len += 1;
    }

    pub fn get(&self, i: usize) -> Option<bool> {
        if i >= self.len {
            return None;
        }
        Some(self.bytes[i / 8] >> (7 - i % 8) & 1 == 1)
    }

    /// Appends `width` bits of `value`, most significant first.
    /// `value` must fit in `width` bits.
    pub fn write_bits(&mut self, value: u64, width: usize) {
        debug_assert!(width <= 64);
        debug_assert!(width == 64 || value >> width == 0, "value does not fit");
        for i in (0..width).rev() {
            self.push(value >> i & 1 == 1);
        }
    }

    /// Appends `width` bits of a big integer, most significant first.
    pub fn write_biguint(&mut self, value: &BigUint, width: usize) {
        debug_assert!(value.bits() as usize <= width, "value does not fit");
        for i in (0..width).rev() {
            self.push(value.bit(i as u64));
        }
    }

    /// Elias gamma code: floor(log2 x) zeros, then x in floor(log2 x)+1
    /// bits. Uses 2·floor(log2 x) + 1 bits total; x must be >= 1.
    pub fn write_gamma(&mut self, x: u64) {
        assert!(x >= 1, "gamma codes positive integers only");
        let n = 63 - x.leading_zeros() as usize;
        for _ in 0..n {
            self.push(false);
        }
        self.write_bits(x, n + 1);
    }
}

/// Bit length of the gamma code of x.
pub fn gamma_len(x: u64) -> usize {
    debug_assert!(x >= 1);
    2 * (63 - x.leading_zeros() as usize) + 1
}

/// Read cursor over a [`Bits`].
#[derive(Debug, Clone)]
pub struct BitCursor<'a> {
    bits: &'a Bits,
    pos: usize,
}

impl<'a> BitCursor<'a> {
    pub fn new(bits: &'a Bits) -> BitCursor<'a> {
        BitCursor { bits, pos: 0 }
    }

    pub fn at(bits: &'a Bits, pos: usize) -> BitCursor<'a> {
        BitCursor { bits, pos }
    }

    pub fn pos(&self) -> usize {
        self.pos
    }

    pub fn read_bit(&mut self) -> Result<bool, BitsError> {
        let bit = self
            .bits
            .get(self.pos)
            .ok_or(BitsError::EndOfStream { at: self.pos })?;
        self.pos += 1;
        Ok(bit)
    }

    pub fn read_bits(&mut self, width: usize) -> Result<u64, BitsError> {
        debug_assert!(width <= 64);
        let mut out = 0u64;
        for _ in 0..width {
            out = out << 1 | self.read_bit()? as u64;
        }
        Ok(out)
    }

    pub fn read_biguint(&mut self, width: usize) -> Result<BigUint, BitsError> {
        let mut out = BigUint::from(0u32);
        for _ in 0..width {
            out <<= 1;
            if self.read_bit()? {
                out |= BigUint::from(1u32);
            }
        }
        Ok(out)
    }

    pub fn read_gamma(&mut self) -> Result<u64, BitsError> {
        let start = self.pos;
        let mut zeros = 0usize;
        while !self.read_bit()? {
            zeros += 1;
            if zeros > 63 {
                return Err(BitsError::BadGamma { at: start });
            }
        }
        let rest = self.read_bits(zeros)?;
        Ok(1u64 << zeros | rest)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn gamma_examples() {
        // 1 -> "1", 3 -> "011", 5 -> "00101".
        let mut b = Bits::new();
        b.write_gamma(1);
        assert_eq!(bit_string(&b), "1");
        let mut b = Bits::new();
        b.write_gamma(3);
        assert_eq!(bit_string(&b), "011");
        let mut b = Bits::new();
        b.write_gamma(5);
        assert_eq!(bit_string(&b), "00101");
        assert_eq!(gamma_len(1), 1);
        assert_eq!(gamma_len(3), 3);
        assert_eq!(gamma_len(5), 5);
    }

    fn bit_string(b: &Bits) -> String {
        (0..b.len())
            .map(|i| if b.get(i).unwrap() { '1' } else { '0' })
            .collect()
    }

    #[test]
    fn malformed_gamma() {
        let mut b = Bits::new();
        b.write_bits(0, 5);
        let mut c = BitCursor::new(&b);
        assert!(matches!(c.read_gamma(), Err(BitsError::EndOfStream { .. })));
    }

    #[test]
    fn byte_roundtrip_with_partial_tail() {
        let mut b = Bits::new();
        b.write_bits(0b1011, 4);
        b.write_bits(0b110010111, 9);
        let restored = Bits::from_bytes(b.as_bytes().to_vec(), b.len()).unwrap();
        assert_eq!(restored, b);
        assert!(Bits::from_bytes(vec![0], 9).is_none());
    }

    proptest! {
        #[test]
        fn gamma_roundtrip(xs in proptest::collection::vec(1u64..=1 << 40, 1..50)) {
            let mut b = Bits::new();
            for &x in &xs {
                b.write_gamma(x);
            }
            let mut c = BitCursor::new(&b);
            for &x in &xs {
                prop_assert_eq!(c.read_gamma().unwrap(), x);
            }
            prop_assert_eq!(c.pos(), b.len());
        }

        #[test]
        fn bits_roundtrip(vals in proptest::collection::vec((0u64..=u64::MAX, 1usize..=64), 1..40)) {
            let mut b = Bits::new();
            for &(v, w) in &vals {
                let v = if w == 64 { v } else { v & ((1 << w) - 1) };
                b.write_bits(v, w);
            }
            let mut c = BitCursor::new(&b);
            for &(v, w) in &vals {
                let v = if w == 64 { v } else { v & ((1 << w) - 1) };
                prop_assert_eq!(c.read_bits(w).unwrap(), v);
            }
        }

        #[test]
        fn biguint_roundtrip(bytes in proptest::collection::vec(any::<u8>(), 1..32), extra in 0usize..16) {
            use num_bigint::BigUint;
            let v = BigUint::from_bytes_be(&bytes);
            let width = v.bits() as usize + extra;
            let mut b = Bits::new();
            b.write_biguint(&v, width);
            let mut c = BitCursor::new(&b);
            prop_assert_eq!(c.read_biguint(width).unwrap(), v);
        }
    }
}
