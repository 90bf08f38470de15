//! Self-describing chunked container.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! "HPDR" | version u16 | pipeline u8 | dtype u8 | rank u8 | dims u64 x rank
//! params (by pipeline)
//!   huffman: dict_size u16
//!   zfp:     rate u8
//!   mgard:   eb_rel f64 | dict_size u32 | global min f64 | global max f64
//! chunk count u32
//! per chunk: raw offset u64 | raw size u64 | payload offset u64 | payload size u64
//! crc32 u32 over every preceding header byte
//! payloads
//! ```
//!
//! Chunks are slabs along the chunking axis (the largest dimension, first
//! one on ties), so raw offset and size count positions along that axis.
//! Payload offsets are absolute file offsets.

use alloc::vec::Vec;

use crate::tensor::validate_dims;
use crate::{DType, Error, Result};

pub const MAGIC: [u8; 4] = *b"HPDR";
pub const VERSION: u16 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PipelineId {
    Huffman = 0,
    Zfp = 1,
    Mgard = 2,
}

impl PipelineId {
    pub fn from_code(code: u8) -> Result<Self> {
        match code {
            0 => Ok(PipelineId::Huffman),
            1 => Ok(PipelineId::Zfp),
            2 => Ok(PipelineId::Mgard),
            other => Err(Error::UnknownPipeline(other)),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            PipelineId::Huffman => "huffman",
            PipelineId::Zfp => "zfp",
            PipelineId::Mgard => "mgard",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Params {
    Huffman {
        dict_size: u16,
    },
    Zfp {
        rate: u8,
    },
    Mgard {
        eb_rel: f64,
        dict_size: u32,
        min: f64,
        max: f64,
    },
}

impl Params {
    pub fn pipeline(&self) -> PipelineId {
        match self {
            Params::Huffman { .. } => PipelineId::Huffman,
            Params::Zfp { .. } => PipelineId::Zfp,
            Params::Mgard { .. } => PipelineId::Mgard,
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        match *self {
            Params::Huffman { dict_size } => out.extend_from_slice(&dict_size.to_le_bytes()),
            Params::Zfp { rate } => out.push(rate),
            Params::Mgard {
                eb_rel,
                dict_size,
                min,
                max,
            } => {
                out.extend_from_slice(&eb_rel.to_le_bytes());
                out.extend_from_slice(&dict_size.to_le_bytes());
                out.extend_from_slice(&min.to_le_bytes());
                out.extend_from_slice(&max.to_le_bytes());
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ChunkEntry {
    pub raw_offset: u64,
    pub raw_size: u64,
    pub payload_offset: u64,
    pub payload_size: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContainerHeader {
    pub version: u16,
    pub dtype: DType,
    pub dims: Vec<usize>,
    pub params: Params,
    pub chunks: Vec<ChunkEntry>,
}

/// Axis along which data is cut into chunks: the largest dimension.
pub fn chunk_axis(dims: &[usize]) -> usize {
    let mut best = 0;
    for (i, &d) in dims.iter().enumerate() {
        if d > dims[best] {
            best = i;
        }
    }
    best
}

const CHUNK_ENTRY_BYTES: usize = 32;

impl ContainerHeader {
    pub fn pipeline(&self) -> PipelineId {
        self.params.pipeline()
    }

    pub fn chunk_axis(&self) -> usize {
        chunk_axis(&self.dims)
    }

    /// Encoded header size including the checksum.
    pub fn encoded_len(&self) -> usize {
        4 + 2
            + 3
            + 8 * self.dims.len()
            + self.params.to_bytes().len()
            + 4
            + CHUNK_ENTRY_BYTES * self.chunks.len()
            + 4
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.encoded_len());
        out.extend_from_slice(&MAGIC);
        out.extend_from_slice(&self.version.to_le_bytes());
        out.push(self.pipeline() as u8);
        out.push(self.dtype.code());
        out.push(self.dims.len() as u8);
        for &d in &self.dims {
            out.extend_from_slice(&(d as u64).to_le_bytes());
        }
        out.extend_from_slice(&self.params.to_bytes());
        out.extend_from_slice(&(self.chunks.len() as u32).to_le_bytes());
        for c in &self.chunks {
            for v in [c.raw_offset, c.raw_size, c.payload_offset, c.payload_size] {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        let crc = crc32fast::hash(&out);
        out.extend_from_slice(&crc.to_le_bytes());
        out
    }

    fn validate(&self) -> Result<()> {
        validate_dims(&self.dims)?;
        if self.chunks.is_empty() {
            return Ok(());
        }
        let extent = self.dims[self.chunk_axis()] as u64;
        let mut next = 0u64;
        for c in &self.chunks {
            if c.raw_offset != next || c.raw_size == 0 {
                return Err(Error::InvalidShape(
                    "chunk raw regions do not tile the input".into(),
                ));
            }
            next += c.raw_size;
        }
        if next != extent {
            return Err(Error::InvalidShape(
                "chunk raw regions do not tile the input".into(),
            ));
        }
        if self
            .chunks
            .windows(2)
            .any(|w| w[1].payload_offset <= w[0].payload_offset)
        {
            return Err(Error::InvalidShape(
                "payload offsets must increase strictly".into(),
            ));
        }
        Ok(())
    }
}

/// Writes `header` followed by the payloads, filling in the payload offsets
/// and sizes of the chunk table.
pub fn write_container(header: &ContainerHeader, payloads: &[&[u8]]) -> Result<Vec<u8>> {
    if payloads.len() != header.chunks.len() {
        return Err(Error::param("one payload per chunk entry is required"));
    }
    let mut h = header.clone();
    let mut at = h.encoded_len() as u64;
    for (c, p) in h.chunks.iter_mut().zip(payloads) {
        c.payload_offset = at;
        c.payload_size = p.len() as u64;
        at += p.len() as u64;
    }
    h.validate()?;
    let mut out = h.encode();
    out.reserve(at as usize - out.len());
    for p in payloads {
        out.extend_from_slice(p);
    }
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

    fn array<const N: usize>(&mut self) -> Result<[u8; N]> {
        Ok(self.take(N)?.try_into().unwrap())
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.array()?))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.array()?))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.array()?))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.array()?))
    }
}

/// Parses and verifies the header only; payload bytes are never touched.
/// Returns the header and its encoded length.
pub fn read_header(bytes: &[u8]) -> Result<(ContainerHeader, usize)> {
    let mut c = Cursor { bytes, pos: 0 };
    if c.array::<4>()? != MAGIC {
        return Err(Error::BadMagic);
    }
    let version = c.u16()?;
    if version != VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let pipeline = c.u8()?;
    let dtype = c.u8()?;
    let rank = c.u8()? as usize;
    let dims: Vec<u64> = (0..rank).map(|_| c.u64()).collect::<Result<_>>()?;
    let params = match PipelineId::from_code(pipeline) {
        Ok(PipelineId::Huffman) => Some(Params::Huffman {
            dict_size: c.u16()?,
        }),
        Ok(PipelineId::Zfp) => Some(Params::Zfp { rate: c.u8()? }),
        Ok(PipelineId::Mgard) => Some(Params::Mgard {
            eb_rel: c.f64()?,
            dict_size: c.u32()?,
            min: c.f64()?,
            max: c.f64()?,
        }),
        // Without knowing the parameter layout the checksum cannot be
        // located; report the pipeline id itself.
        Err(e) => return Err(e),
    };
    let count = c.u32()? as usize;
    if count.saturating_mul(CHUNK_ENTRY_BYTES) > bytes.len().saturating_sub(c.pos) {
        // Fail before allocating a table that cannot be present.
        return Err(Error::Truncated {
            needed: c
                .pos
                .saturating_add(count.saturating_mul(CHUNK_ENTRY_BYTES)),
            available: bytes.len(),
        });
    }
    let mut chunks = Vec::with_capacity(count);
    for _ in 0..count {
        chunks.push(ChunkEntry {
            raw_offset: c.u64()?,
            raw_size: c.u64()?,
            payload_offset: c.u64()?,
            payload_size: c.u64()?,
        });
    }
    let computed = crc32fast::hash(&bytes[..c.pos]);
    let stored = c.u32()?;
    if stored != computed {
        return Err(Error::ChecksumMismatch { stored, computed });
    }
    let dtype = DType::from_code(dtype)?;
    let header = ContainerHeader {
        version,
        dtype,
        dims: dims.into_iter().map(|d| d as usize).collect(),
        params: params.unwrap(),
        chunks,
    };
    header.validate()?;
    Ok((header, c.pos))
}

/// Parses the header and returns a view of every chunk payload.
pub fn read_container(bytes: &[u8]) -> Result<(ContainerHeader, Vec<&[u8]>)> {
    let (header, len) = read_header(bytes)?;
    let mut views = Vec::with_capacity(header.chunks.len());
    for (i, c) in header.chunks.iter().enumerate() {
        let end = c.payload_offset.checked_add(c.payload_size);
        match end {
            Some(end) if c.payload_offset >= len as u64 && end <= bytes.len() as u64 => {
                views.push(&bytes[c.payload_offset as usize..end as usize]);
            }
            _ => {
                return Err(Error::Truncated {
                    needed: end.unwrap_or(u64::MAX) as usize,
                    available: bytes.len(),
                }
                .in_chunk(i))
            }
        }
    }
    Ok((header, views))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn header(chunks: Vec<ChunkEntry>, dims: Vec<usize>) -> ContainerHeader {
        ContainerHeader {
            version: VERSION,
            dtype: DType::F32,
            dims,
            params: Params::Mgard {
                eb_rel: 1e-2,
                dict_size: 4096,
                min: -1.0,
                max: 2.5,
            },
            chunks,
        }
    }

    fn raw(spans: &[(u64, u64)]) -> Vec<ChunkEntry> {
        spans
            .iter()
            .map(|&(raw_offset, raw_size)| ChunkEntry {
                raw_offset,
                raw_size,
                ..Default::default()
            })
            .collect()
    }

    #[test]
    fn empty_table_round_trips() {
        let h = header(vec![], vec![4, 4]);
        let bytes = write_container(&h, &[]).unwrap();
        assert_eq!(bytes.len(), h.encoded_len());
        let (back, views) = read_container(&bytes).unwrap();
        assert_eq!(back, h);
        assert!(views.is_empty());
    }

    #[test]
    fn many_chunks_round_trip_with_identical_payloads() {
        let spans: Vec<(u64, u64)> = (0..43).map(|k| (k * 10, 10)).collect();
        let h = header(raw(&spans), vec![430, 7]);
        let payloads: Vec<Vec<u8>> = (0..43u8).map(|k| vec![k; 100 + k as usize]).collect();
        let refs: Vec<&[u8]> = payloads.iter().map(Vec::as_slice).collect();
        let bytes = write_container(&h, &refs).unwrap();
        let (back, views) = read_container(&bytes).unwrap();
        assert_eq!(back.chunks.len(), 43);
        assert_eq!(back.params, h.params);
        for (v, p) in views.iter().zip(&payloads) {
            assert_eq!(*v, p.as_slice());
        }
        for p in [Params::Huffman { dict_size: 300 }, Params::Zfp { rate: 8 }] {
            let h = ContainerHeader {
                params: p,
                ..h.clone()
            };
            let (back, _) = read_container(&write_container(&h, &refs).unwrap()).unwrap();
            assert_eq!(back.params, p);
        }
    }

    #[test]
    fn any_header_byte_flip_is_caught() {
        let h = header(raw(&[(0, 3), (3, 2)]), vec![5, 2]);
        let bytes = write_container(&h, &[b"abc", b"de"]).unwrap();
        for i in 0..h.encoded_len() {
            let mut bad = bytes.clone();
            bad[i] ^= 0x10;
            assert!(read_header(&bad).is_err(), "byte {i}");
        }
        let mut bad = bytes.clone();
        let n = h.encoded_len() - 5;
        bad[n] ^= 1;
        assert!(matches!(
            read_header(&bad),
            Err(Error::ChecksumMismatch { .. })
        ));
    }

    #[test]
    fn rejects_bad_magic_version_pipeline_and_truncation() {
        let h = header(raw(&[(0, 5)]), vec![5]);
        let bytes = write_container(&h, &[b"xyz"]).unwrap();
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert_eq!(read_header(&bad).unwrap_err(), Error::BadMagic);
        let mut bad = bytes.clone();
        bad[4] = 9;
        assert_eq!(read_header(&bad).unwrap_err(), Error::UnsupportedVersion(9));
        let mut bad = bytes.clone();
        bad[6] = 7;
        assert_eq!(read_header(&bad).unwrap_err(), Error::UnknownPipeline(7));
        assert!(matches!(
            read_container(&bytes[..bytes.len() - 1]),
            Err(Error::Chunk { chunk: 0, .. })
        ));
        assert!(matches!(
            read_header(&bytes[..10]),
            Err(Error::Truncated { .. })
        ));
    }

    #[test]
    fn tiling_is_enforced() {
        let h = header(raw(&[(0, 3), (4, 1)]), vec![5]);
        assert!(write_container(&h, &[b"a", b"b"]).is_err());
        let h = header(raw(&[(0, 3)]), vec![5]);
        assert!(write_container(&h, &[b"a"]).is_err());
        assert_eq!(chunk_axis(&[4, 9, 9]), 1);
    }
}
