//! MSB-first bit packing shared by the Huffman and ZFP streams.

use alloc::vec::Vec;

use crate::{Error, Result};

#[derive(Debug, Default, Clone)]
pub struct BitWriter {
    bytes: Vec<u8>,
    bits: u64,
}

impl BitWriter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity_bits(bits: u64) -> Self {
        BitWriter {
            bytes: Vec::with_capacity(bits.div_ceil(8) as usize),
            bits: 0,
        }
    }

    pub fn bit_len(&self) -> u64 {
        self.bits
    }

    pub fn write_bit(&mut self, bit: bool) {
        let off = (self.bits % 8) as u32;
        if off == 0 {
            self.bytes.push(0);
        }
        if bit {
            *self.bytes.last_mut().unwrap() |= 0x80 >> off;
        }
        self.bits += 1;
    }

    /// Writes the low `n` bits of `value`, most significant first.
    pub fn write_bits(&mut self, value: u64, n: u32) {
        debug_assert!(n <= 64);
        let mut remaining = n;
        while remaining > 0 {
            let off = (self.bits % 8) as u32;
            if off == 0 {
                self.bytes.push(0);
            }
            let room = 8 - off;
            let take = room.min(remaining);
            let shift = remaining - take;
            let chunk = ((value >> shift) & ((1u64 << take) - 1)) as u8;
            *self.bytes.last_mut().unwrap() |= chunk << (room - take);
            self.bits += take as u64;
            remaining -= take;
        }
    }

    /// Appends another MSB-first bit sequence.
    pub fn append(&mut self, bytes: &[u8], bit_len: u64) {
        if self.bits.is_multiple_of(8) {
            let full = (bit_len / 8) as usize;
            self.bytes.extend_from_slice(&bytes[..full]);
            self.bits += full as u64 * 8;
            let rest = (bit_len % 8) as u32;
            if rest > 0 {
                self.write_bits((bytes[full] >> (8 - rest)) as u64, rest);
            }
            return;
        }
        let mut r = BitReader::new(bytes, bit_len);
        let mut left = bit_len;
        while left > 0 {
            let n = left.min(56) as u32;
            self.write_bits(r.read_bits(n).unwrap(), n);
            left -= n as u64;
        }
    }

    pub fn into_bytes(self) -> (Vec<u8>, u64) {
        (self.bytes, self.bits)
    }
}

#[derive(Debug, Clone)]
pub struct BitReader<'a> {
    bytes: &'a [u8],
    limit: u64,
    pos: u64,
}

impl<'a> BitReader<'a> {
    /// Reader over the first `limit` bits of `bytes`.
    pub fn new(bytes: &'a [u8], limit: u64) -> Self {
        let limit = limit.min(bytes.len() as u64 * 8);
        BitReader {
            bytes,
            limit,
            pos: 0,
        }
    }

    pub fn at(bytes: &'a [u8], limit: u64, pos: u64) -> Self {
        let mut r = Self::new(bytes, limit);
        r.pos = pos;
        r
    }

    pub fn position(&self) -> u64 {
        self.pos
    }

    pub fn remaining(&self) -> u64 {
        self.limit.saturating_sub(self.pos)
    }

    pub fn read_bit(&mut self) -> Result<bool> {
        if self.pos >= self.limit {
            return Err(Error::Corrupt {
                bit_offset: self.pos,
                reason: "read past end of stream",
            });
        }
        let byte = self.bytes[(self.pos / 8) as usize];
        let bit = byte & (0x80 >> (self.pos % 8)) != 0;
        self.pos += 1;
        Ok(bit)
    }

    pub fn read_bits(&mut self, n: u32) -> Result<u64> {
        debug_assert!(n <= 64);
        if self.remaining() < n as u64 {
            return Err(Error::Corrupt {
                bit_offset: self.pos,
                reason: "read past end of stream",
            });
        }
        let mut v = 0u64;
        let mut remaining = n;
        while remaining > 0 {
            let off = (self.pos % 8) as u32;
            let room = 8 - off;
            let take = room.min(remaining);
            let byte = self.bytes[(self.pos / 8) as usize] as u64;
            let chunk = (byte >> (room - take)) & ((1u64 << take) - 1);
            v = (v << take) | chunk;
            self.pos += take as u64;
            remaining -= take;
        }
        Ok(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn write_then_read(fields in proptest::collection::vec((any::<u64>(), 0u32..=64), 0..50)) {
            let mut w = BitWriter::new();
            for &(v, n) in &fields {
                w.write_bits(v, n);
            }
            let (bytes, bits) = w.into_bytes();
            let mut r = BitReader::new(&bytes, bits);
            for &(v, n) in &fields {
                let mask = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
                prop_assert_eq!(r.read_bits(n).unwrap(), v & mask);
            }
            prop_assert_eq!(r.remaining(), 0);
        }

        #[test]
        fn append_matches_bitwise(a in proptest::collection::vec(any::<bool>(), 0..40),
                                  b in proptest::collection::vec(any::<bool>(), 0..40)) {
            let mut wb = BitWriter::new();
            for &x in &b { wb.write_bit(x); }
            let (bb, blen) = wb.into_bytes();
            let mut w = BitWriter::new();
            for &x in &a { w.write_bit(x); }
            w.append(&bb, blen);
            let (bytes, bits) = w.into_bytes();
            let mut r = BitReader::new(&bytes, bits);
            for &x in a.iter().chain(b.iter()) {
                prop_assert_eq!(r.read_bit().unwrap(), x);
            }
        }
    }

    #[test]
    fn reading_past_end_is_an_error() {
        let mut r = BitReader::new(&[0xff], 3);
        assert_eq!(r.read_bits(3).unwrap(), 0b111);
        assert!(matches!(
            r.read_bit(),
            Err(Error::Corrupt { bit_offset: 3, .. })
        ));
    }
}
