//! Canonical Huffman coding of unsigned keys.
//!
//! The histogram runs as a two-stage domain execution (per-lane partial
//! counts, then a merge over disjoint key ranges). Encoding is blockwise:
//! every 4096 symbols form an independent fragment, and an exclusive scan
//! over fragment lengths places them in one packed stream. The scan results
//! double as the decode index, so decoding is parallel per unit.

use alloc::vec;
use alloc::vec::Vec;

use crate::bits::{BitReader, BitWriter};
use crate::exec::{
    exclusive_scan, execute_dem, partition, DeviceAdapter, ExecStage, Lane, DEFAULT_DEM_LANES,
};
use crate::{Error, Result};

mod codebook;

pub use codebook::{build_codebook, HuffmanCodebook, MAX_CODE_LEN};

/// Symbols per encode block and per decode unit.
pub const BLOCK_SYMBOLS: usize = 4096;
/// Largest dictionary the stream header can describe.
pub const MAX_DICT_SIZE: usize = u16::MAX as usize;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrequencyTable {
    pub dict_size: usize,
    pub counts: Vec<u64>,
}

impl FrequencyTable {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Shannon entropy in bits per symbol.
    pub fn entropy(&self) -> f64 {
        let n = self.total() as f64;
        if n == 0.0 {
            return 0.0;
        }
        self.counts
            .iter()
            .filter(|&&c| c > 0)
            .map(|&c| {
                let p = c as f64 / n;
                -p * libm::log2(p)
            })
            .sum()
    }
}

/// Per-block output of [`encode`]: packed MSB-first bits and their count.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Fragment {
    pub bytes: Vec<u8>,
    pub bits: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedStream {
    pub symbol_count: u64,
    /// Bit offset where every decode unit starts.
    pub unit_offsets: Vec<u64>,
    pub total_bits: u64,
    pub bits: Vec<u8>,
}

fn histogram_lanes(n: usize) -> usize {
    (n / BLOCK_SYMBOLS).clamp(1, DEFAULT_DEM_LANES)
}

/// Counts key multiplicities.
pub fn histogram<A: DeviceAdapter>(
    adapter: &A,
    keys: &[u32],
    dict_size: usize,
) -> Result<FrequencyTable> {
    if dict_size == 0 {
        return Err(Error::param("dictionary size must be positive"));
    }
    if let Some(&k) = keys.iter().find(|&&k| k as usize >= dict_size) {
        return Err(Error::KeyOutOfRange {
            key: k as u64,
            dict_size,
        });
    }
    let lanes = histogram_lanes(keys.len());
    let bins = partition(dict_size, lanes);
    // The lanes index `keys` through their ranges; the domain itself carries
    // no data.
    let mut domain = vec![(); keys.len()];
    let partial = |l: &mut Lane<'_, (), Vec<u64>>| {
        let mut h = vec![0u64; dict_size];
        for &k in &keys[l.range.clone()] {
            h[k as usize] += 1;
        }
        *l.slot = h;
    };
    let merge = |l: &mut Lane<'_, (), Vec<u64>>| {
        let r = bins[l.index].clone();
        let mut h = vec![0u64; r.len()];
        for p in l.peers {
            for (a, b) in h.iter_mut().zip(&p[r.clone()]) {
                *a += b;
            }
        }
        *l.slot = h;
    };
    let slots = execute_dem(
        adapter,
        &mut domain,
        lanes,
        &[ExecStage::dem(&partial), ExecStage::dem(&merge)],
    )?;
    Ok(FrequencyTable {
        dict_size,
        counts: slots.concat(),
    })
}

fn encode_block(keys: &[u32], cb: &HuffmanCodebook) -> Result<Fragment> {
    let mut w = BitWriter::with_capacity_bits(keys.len() as u64 * 4);
    for &k in keys {
        let len = *cb
            .lengths
            .get(k as usize)
            .ok_or(Error::AbsentKey { key: k })? as u32;
        if len == 0 {
            return Err(Error::AbsentKey { key: k });
        }
        w.write_bits(cb.codes[k as usize] as u64, len);
    }
    let (bytes, bits) = w.into_bytes();
    Ok(Fragment { bytes, bits })
}

/// Encodes every block of [`BLOCK_SYMBOLS`] keys independently.
pub fn encode<A: DeviceAdapter>(
    adapter: &A,
    keys: &[u32],
    cb: &HuffmanCodebook,
) -> Result<Vec<Fragment>> {
    let blocks = keys.len().div_ceil(BLOCK_SYMBOLS);
    adapter
        .map(blocks, |b| {
            let end = ((b + 1) * BLOCK_SYMBOLS).min(keys.len());
            encode_block(&keys[b * BLOCK_SYMBOLS..end], cb)
        })
        .into_iter()
        .collect()
}

/// Shifts `frag` right by `shift` bits (< 8) so it can be OR-ed into a
/// byte-aligned destination.
fn shifted(frag: &Fragment, shift: u32) -> Vec<u8> {
    let n = ((frag.bits + shift as u64).div_ceil(8)) as usize;
    let mut out = vec![0u8; n];
    if shift == 0 {
        out.copy_from_slice(&frag.bytes[..n]);
        return out;
    }
    for (i, &b) in frag.bytes.iter().enumerate() {
        out[i] |= b >> shift;
        if i + 1 < n {
            out[i + 1] |= b << (8 - shift);
        }
    }
    out
}

/// Concatenates fragments at offsets given by an exclusive scan of their
/// lengths.
pub fn serialize<A: DeviceAdapter>(
    adapter: &A,
    fragments: &[Fragment],
    symbol_count: u64,
) -> EncodedStream {
    let lens: Vec<u64> = fragments.iter().map(|f| f.bits).collect();
    let (offsets, total) = exclusive_scan(adapter, &lens, DEFAULT_DEM_LANES);
    let pieces = adapter.map(fragments.len(), |i| {
        shifted(&fragments[i], (offsets[i] % 8) as u32)
    });
    let mut bits = vec![0u8; total.div_ceil(8) as usize];
    for (piece, &off) in pieces.iter().zip(&offsets) {
        let start = (off / 8) as usize;
        for (d, s) in bits[start..].iter_mut().zip(piece) {
            *d |= s;
        }
    }
    EncodedStream {
        symbol_count,
        unit_offsets: offsets,
        total_bits: total,
        bits,
    }
}

/// Decodes `count` symbols starting at bit `start`, requiring the unit to
/// end exactly at `end`.
fn decode_unit(
    bytes: &[u8],
    start: u64,
    end: u64,
    count: usize,
    cb: &HuffmanCodebook,
) -> Result<Vec<u32>> {
    let mut r = BitReader::at(bytes, end, start);
    let mut out = Vec::with_capacity(count);
    let max = cb.max_len();
    for _ in 0..count {
        let at = r.position();
        let mut code = 0u64;
        let mut len = 0u32;
        loop {
            if len == max {
                return Err(Error::Corrupt {
                    bit_offset: at,
                    reason: "invalid prefix",
                });
            }
            code = (code << 1) | r.read_bit()? as u64;
            len += 1;
            if let Some(k) = cb.lookup(code, len) {
                out.push(k);
                break;
            }
        }
    }
    if r.position() != end {
        return Err(Error::Corrupt {
            bit_offset: r.position(),
            reason: "decode unit does not end at the next unit offset",
        });
    }
    Ok(out)
}

/// Decodes every unit independently from its recorded offset.
pub fn decode<A: DeviceAdapter>(
    adapter: &A,
    stream: &EncodedStream,
    cb: &HuffmanCodebook,
) -> Result<Vec<u32>> {
    let n = stream.symbol_count as usize;
    let units = n.div_ceil(BLOCK_SYMBOLS);
    if stream.unit_offsets.len() != units {
        return Err(Error::Corrupt {
            bit_offset: 0,
            reason: "decode unit count does not match symbol count",
        });
    }
    if stream.total_bits > stream.bits.len() as u64 * 8 {
        return Err(Error::Corrupt {
            bit_offset: stream.bits.len() as u64 * 8,
            reason: "bit buffer shorter than total bit count",
        });
    }
    let offs = &stream.unit_offsets;
    for (i, &o) in offs.iter().enumerate() {
        let next = offs.get(i + 1).copied().unwrap_or(stream.total_bits);
        if o > next || (i == 0 && o != 0) {
            return Err(Error::Corrupt {
                bit_offset: o,
                reason: "decode unit offsets not increasing",
            });
        }
    }
    let parts = adapter.map(units, |u| {
        let end = offs.get(u + 1).copied().unwrap_or(stream.total_bits);
        let count = (n - u * BLOCK_SYMBOLS).min(BLOCK_SYMBOLS);
        decode_unit(&stream.bits, offs[u], end, count, cb)
    });
    let mut out = Vec::with_capacity(n);
    for p in parts {
        out.extend(p?);
    }
    Ok(out)
}

/// Self-contained stream: the codebook travels as its length array.
///
/// A stream whose input holds a single distinct key stores no bits at all;
/// every symbol is that key.
pub fn huffman_compress<A: DeviceAdapter>(
    adapter: &A,
    keys: &[u32],
    dict_size: usize,
) -> Result<Vec<u8>> {
    if dict_size == 0 || dict_size > MAX_DICT_SIZE {
        return Err(Error::param(alloc::format!(
            "dictionary size {dict_size} outside 1..={MAX_DICT_SIZE}"
        )));
    }
    let freq = histogram(adapter, keys, dict_size)?;
    let mut out = Vec::new();
    out.extend_from_slice(&(dict_size as u16).to_le_bytes());
    out.extend_from_slice(&(keys.len() as u64).to_le_bytes());
    if keys.is_empty() {
        out.extend(core::iter::repeat_n(0u8, dict_size));
        out.extend_from_slice(&0u32.to_le_bytes());
        out.extend_from_slice(&0u64.to_le_bytes());
        return Ok(out);
    }
    let cb = build_codebook(&freq)?;
    out.extend_from_slice(&cb.lengths);
    if cb.sole_key().is_some() {
        out.extend_from_slice(&0u32.to_le_bytes());
        out.extend_from_slice(&0u64.to_le_bytes());
        return Ok(out);
    }
    let frags = encode(adapter, keys, &cb)?;
    let stream = serialize(adapter, &frags, keys.len() as u64);
    out.extend_from_slice(&(stream.unit_offsets.len() as u32).to_le_bytes());
    for o in &stream.unit_offsets {
        out.extend_from_slice(&o.to_le_bytes());
    }
    out.extend_from_slice(&stream.total_bits.to_le_bytes());
    out.extend_from_slice(&stream.bits);
    Ok(out)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or(Error::Truncated {
                needed: self.pos.saturating_add(n),
                available: self.bytes.len(),
            })?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

/// Parses a stream produced by [`huffman_compress`]. Returns the keys and
/// the number of bytes consumed.
pub fn huffman_decompress_prefix<A: DeviceAdapter>(
    adapter: &A,
    bytes: &[u8],
) -> Result<(Vec<u32>, usize)> {
    let mut c = Cursor { bytes, pos: 0 };
    let dict = c.u16()? as usize;
    let count = c.u64()?;
    let lengths = c.take(dict)?.to_vec();
    if let Some(&l) = lengths.iter().find(|&&l| l as u32 > MAX_CODE_LEN) {
        return Err(Error::CodeTooLong { length: l as u32 });
    }
    let units = c.u32()? as usize;
    let unit_bytes = units.checked_mul(8).ok_or(Error::Corrupt {
        bit_offset: 0,
        reason: "unit count overflow",
    })?;
    let offsets: Vec<u64> = c
        .take(unit_bytes)?
        .chunks_exact(8)
        .map(|b| u64::from_le_bytes(b.try_into().unwrap()))
        .collect();
    let total_bits = c.u64()?;
    let nbytes = usize::try_from(total_bits.div_ceil(8)).map_err(|_| Error::Truncated {
        needed: usize::MAX,
        available: bytes.len(),
    })?;
    let bits = c.take(nbytes)?.to_vec();
    let used = c.pos;

    if count == 0 {
        return Ok((Vec::new(), used));
    }
    let cb = HuffmanCodebook::from_lengths(lengths);
    if cb.present_keys() == 0 {
        return Err(Error::Corrupt {
            bit_offset: 0,
            reason: "empty codebook for non-empty stream",
        });
    }
    if let Some(k) = cb.sole_key() {
        if units != 0 || total_bits != 0 {
            return Err(Error::Corrupt {
                bit_offset: 0,
                reason: "single-key stream carries bits",
            });
        }
        let n = usize::try_from(count).map_err(|_| Error::param("symbol count too large"))?;
        return Ok((vec![k; n], used));
    }
    // A complete code spends at least one bit per symbol.
    if count > total_bits {
        return Err(Error::Corrupt {
            bit_offset: total_bits,
            reason: "fewer bits than symbols",
        });
    }
    let stream = EncodedStream {
        symbol_count: count,
        unit_offsets: offsets,
        total_bits,
        bits,
    };
    Ok((decode(adapter, &stream, &cb)?, used))
}

pub fn huffman_decompress<A: DeviceAdapter>(adapter: &A, bytes: &[u8]) -> Result<Vec<u32>> {
    let (keys, used) = huffman_decompress_prefix(adapter, bytes)?;
    if used != bytes.len() {
        return Err(Error::Corrupt {
            bit_offset: used as u64 * 8,
            reason: "trailing bytes after stream",
        });
    }
    Ok(keys)
}
