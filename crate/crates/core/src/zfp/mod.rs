//! Fixed-rate block transform coding of 1–3 dimensional float arrays.
//!
//! Each 4^d block is aligned to a common exponent and converted to fixed
//! point, decorrelated with a reversible integer lifting transform per
//! dimension, reordered by sequency, mapped to negabinary and written plane
//! by plane from the block's highest occupied plane until the budget of
//! `r * 4^d` bits is spent. Every block costs exactly the same number of
//! bits, so the stream size depends only on shape, dtype and rate.

use alloc::vec;
use alloc::vec::Vec;

use crate::bits::{BitReader, BitWriter};
use crate::exec::DeviceAdapter;
use crate::tensor::{element_count, validate_dims};
use crate::{DType, Error, Result, TensorData};

/// Blocks per independently coded group. A group always spans a whole
/// number of bytes, so groups are written and read in parallel.
const GROUP_BLOCKS: usize = 8;

/// Width of the per-block field counting leading all-zero planes skipped.
pub const LEAD_BITS: u32 = 4;
const MAX_LEAD: u32 = (1 << LEAD_BITS) - 1;

const NEGABINARY_MASK: u128 = 0xAAAA_AAAA_AAAA_AAAA_AAAA_AAAA_AAAA_AAAA;

/// Precision `q` of the fixed-point representation.
pub fn precision(dtype: DType) -> Result<u32> {
    match dtype {
        DType::F32 => Ok(32),
        DType::F64 => Ok(64),
        other => Err(Error::UnsupportedDType(other)),
    }
}

fn exponent_bits(dtype: DType) -> u32 {
    if dtype == DType::F32 {
        8
    } else {
        11
    }
}

fn exponent_bias(dtype: DType) -> i32 {
    if dtype == DType::F32 {
        127
    } else {
        1023
    }
}

/// Negabinary planes carried per coefficient: the fixed-point precision plus
/// two bits of growth per transformed dimension plus one for the negabinary
/// range.
pub fn plane_count(dtype: DType, d: usize) -> Result<u32> {
    Ok(precision(dtype)? + 2 * d as u32 + 1)
}

/// Bits per compressed block: flag, exponent, plane lead and the payload.
pub fn block_bits(dtype: DType, d: usize, rate: u32) -> Result<u64> {
    Ok(block_header_bits(dtype) + rate as u64 * (1u64 << (2 * d)))
}

/// Per-block header bits ahead of the payload.
pub fn block_header_bits(dtype: DType) -> u64 {
    1 + exponent_bits(dtype) as u64 + LEAD_BITS as u64
}

fn check_rate(dtype: DType, rate: u32) -> Result<()> {
    let q = precision(dtype)?;
    if rate == 0 || rate > q {
        return Err(Error::param(alloc::format!("rate {rate} outside 1..={q}")));
    }
    Ok(())
}

fn check_rank(dims: &[usize]) -> Result<()> {
    validate_dims(dims)?;
    if dims.len() > 3 {
        return Err(Error::RankMismatch {
            expected: 3,
            got: dims.len(),
        });
    }
    Ok(())
}

/// Number of blocks per dimension.
pub fn block_grid(dims: &[usize]) -> Vec<usize> {
    dims.iter().map(|n| n.div_ceil(4)).collect()
}

/// Payload size in bits for an array of shape `dims`.
pub fn payload_bits(dims: &[usize], dtype: DType, rate: u32) -> Result<u64> {
    check_rank(dims)?;
    check_rate(dtype, rate)?;
    let blocks: usize = block_grid(dims).iter().product();
    Ok(blocks as u64 * block_bits(dtype, dims.len(), rate)?)
}

/// Compressed stream size in bytes: header plus payload.
pub fn compressed_size(dims: &[usize], dtype: DType, rate: u32) -> Result<usize> {
    Ok(header_len(dims.len()) + payload_bits(dims, dtype, rate)?.div_ceil(8) as usize)
}

/// Origin of block `b` (row-major over the block grid).
fn block_origin(grid: &[usize], mut b: usize) -> [usize; 3] {
    let mut o = [0usize; 3];
    for k in (0..grid.len()).rev() {
        o[k] = (b % grid[k]) * 4;
        b /= grid[k];
    }
    o
}

/// Gathers every 4^d block in row-major block order, padding partial
/// blocks by replicating the last in-range value along each short axis.
pub fn partition_blocks(dims: &[usize], values: &[f64]) -> Result<Vec<Vec<f64>>> {
    check_rank(dims)?;
    let grid = block_grid(dims);
    let n: usize = grid.iter().product();
    Ok((0..n)
        .map(|b| gather_block(dims, values, block_origin(&grid, b)))
        .collect())
}

fn gather_block(dims: &[usize], values: &[f64], origin: [usize; 3]) -> Vec<f64> {
    let d = dims.len();
    let size = 1 << (2 * d);
    let mut out = Vec::with_capacity(size);
    for i in 0..size {
        let mut flat = 0;
        for k in 0..d {
            let local = (i >> (2 * (d - 1 - k))) & 3;
            let idx = (origin[k] + local).min(dims[k] - 1);
            flat = flat * dims[k] + idx;
        }
        out.push(values[flat]);
    }
    out
}

fn scatter_block(dims: &[usize], out: &mut [f64], origin: [usize; 3], block: &[f64]) {
    let d = dims.len();
    'cells: for (i, &v) in block.iter().enumerate() {
        let mut flat = 0;
        for k in 0..d {
            let idx = origin[k] + ((i >> (2 * (d - 1 - k))) & 3);
            if idx >= dims[k] {
                continue 'cells;
            }
            flat = flat * dims[k] + idx;
        }
        out[flat] = v;
    }
}

/// A block in common-exponent fixed point. `e_max` is `None` for an
/// all-zero block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlignedBlock {
    pub e_max: Option<i32>,
    pub fixed: Vec<i64>,
}

/// Aligns a block to the exponent of its largest magnitude:
/// `fixed = round(v * 2^(q - 2 - e_max))`.
pub fn exp_align(values: &[f64], dtype: DType) -> Result<AlignedBlock> {
    let q = precision(dtype)? as i32;
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { index: i });
    }
    let max = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if max == 0.0 {
        return Ok(AlignedBlock {
            e_max: None,
            fixed: vec![0; values.len()],
        });
    }
    let bias = exponent_bias(dtype);
    let (_, e) = libm::frexp(max);
    let e_max = (e - 1).clamp(-bias, bias + 1);
    let shift = q - 2 - e_max;
    let fixed = values
        .iter()
        .map(|&v| libm::round(libm::scalbn(v, shift)) as i64)
        .collect();
    Ok(AlignedBlock {
        e_max: Some(e_max),
        fixed,
    })
}

/// Inverse of [`exp_align`].
pub fn exp_restore(block: &AlignedBlock, dtype: DType) -> Result<Vec<f64>> {
    let q = precision(dtype)? as i32;
    Ok(match block.e_max {
        None => vec![0.0; block.fixed.len()],
        Some(e) => block
            .fixed
            .iter()
            .map(|&f| libm::scalbn(f as f64, e - (q - 2)))
            .collect(),
    })
}

fn forward_lift(v: &mut [i128; 4]) {
    let [mut x, mut y, mut z, mut w] = *v;
    y -= x;
    x += y >> 1;
    w -= z;
    z += w >> 1;
    z -= x;
    x += z >> 1;
    w -= y;
    y += w >> 1;
    // mean, coarse difference, mean difference, second difference
    *v = [x, z, y, w];
}

fn inverse_lift(v: &mut [i128; 4]) {
    let [mut x, mut z, mut y, mut w] = *v;
    y -= w >> 1;
    w += y;
    x -= z >> 1;
    z += x;
    z -= w >> 1;
    w += z;
    x -= y >> 1;
    y += x;
    *v = [x, y, z, w];
}

fn lift_axes(block: &mut [i128], d: usize, f: fn(&mut [i128; 4])) {
    for axis in 0..d {
        let stride = 1usize << (2 * (d - 1 - axis));
        for base in 0..block.len() {
            if !(base / stride).is_multiple_of(4) {
                continue;
            }
            let mut v = [
                block[base],
                block[base + stride],
                block[base + 2 * stride],
                block[base + 3 * stride],
            ];
            f(&mut v);
            for (j, x) in v.into_iter().enumerate() {
                block[base + j * stride] = x;
            }
        }
    }
}

/// Decorrelating transform along each dimension in ascending order.
pub fn forward_transform(block: &mut [i128], d: usize) {
    lift_axes(block, d, forward_lift);
}

/// Exact inverse of [`forward_transform`].
pub fn inverse_transform(block: &mut [i128], d: usize) {
    // Undo the axes in reverse order.
    for axis in (0..d).rev() {
        let stride = 1usize << (2 * (d - 1 - axis));
        for base in 0..block.len() {
            if !(base / stride).is_multiple_of(4) {
                continue;
            }
            let mut v = [
                block[base],
                block[base + stride],
                block[base + 2 * stride],
                block[base + 3 * stride],
            ];
            inverse_lift(&mut v);
            for (j, x) in v.into_iter().enumerate() {
                block[base + j * stride] = x;
            }
        }
    }
}

/// Coefficient visiting order: by total frequency index, then
/// lexicographically.
pub fn sequency_order(d: usize) -> Vec<usize> {
    let n = 1usize << (2 * d);
    let key = |i: usize| (0..d).map(|k| (i >> (2 * k)) & 3).sum::<usize>();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| (key(i), i));
    order
}

pub fn to_negabinary(v: i128) -> u128 {
    (v as u128).wrapping_add(NEGABINARY_MASK) ^ NEGABINARY_MASK
}

pub fn from_negabinary(u: u128) -> i128 {
    (u ^ NEGABINARY_MASK).wrapping_sub(NEGABINARY_MASK) as i128
}

/// Number of leading all-zero planes among the `planes` planes of a
/// transformed block, capped at what the lead field can hold.
pub fn leading_zero_planes(block: &[i128], planes: u32) -> u32 {
    let all = block.iter().fold(0u128, |acc, &v| acc | to_negabinary(v));
    let top = 128 - all.leading_zeros();
    (planes - top.min(planes)).min(MAX_LEAD)
}

/// Writes `rate` negabinary planes of a transformed block, starting at
/// plane `top - 1` and moving down, coefficients in sequency order within
/// each plane. Planes below zero are written as zero bits.
pub fn bitplane_encode(block: &[i128], order: &[usize], top: u32, rate: u32, w: &mut BitWriter) {
    let nb: Vec<u128> = order.iter().map(|&i| to_negabinary(block[i])).collect();
    for p in (top as i64 - rate as i64..top as i64).rev() {
        if p < 0 {
            for _ in &nb {
                w.write_bit(false);
            }
            continue;
        }
        for &u in &nb {
            w.write_bit((u >> p) & 1 == 1);
        }
    }
}

/// Reads what [`bitplane_encode`] wrote; missing low planes read as zero.
pub fn bitplane_decode(
    r: &mut BitReader<'_>,
    order: &[usize],
    top: u32,
    rate: u32,
) -> Result<Vec<i128>> {
    let mut nb = vec![0u128; order.len()];
    for p in (top as i64 - rate as i64..top as i64).rev() {
        for u in nb.iter_mut() {
            let bit = r.read_bit()? as u128;
            if p >= 0 {
                *u |= bit << p;
            }
        }
    }
    let mut block = vec![0i128; order.len()];
    for (&i, &u) in order.iter().zip(&nb) {
        block[i] = from_negabinary(u);
    }
    Ok(block)
}

struct Codec {
    dtype: DType,
    d: usize,
    rate: u32,
    planes: u32,
    order: Vec<usize>,
}

impl Codec {
    fn new(dtype: DType, d: usize, rate: u32) -> Result<Self> {
        check_rate(dtype, rate)?;
        Ok(Codec {
            dtype,
            d,
            rate,
            planes: plane_count(dtype, d)?,
            order: sequency_order(d),
        })
    }

    fn encode_block(&self, values: &[f64], w: &mut BitWriter) -> Result<()> {
        let a = exp_align(values, self.dtype)?;
        let ebits = exponent_bits(self.dtype);
        match a.e_max {
            None => {
                w.write_bit(true);
                w.write_bits(0, ebits + LEAD_BITS);
                let zeros = vec![0i128; values.len()];
                bitplane_encode(&zeros, &self.order, self.planes, self.rate, w);
            }
            Some(e) => {
                w.write_bit(false);
                w.write_bits((e + exponent_bias(self.dtype)) as u64, ebits);
                let mut block: Vec<i128> = a.fixed.iter().map(|&f| f as i128).collect();
                forward_transform(&mut block, self.d);
                let lead = leading_zero_planes(&block, self.planes);
                w.write_bits(lead as u64, LEAD_BITS);
                bitplane_encode(&block, &self.order, self.planes - lead, self.rate, w);
            }
        }
        Ok(())
    }

    fn decode_block(&self, r: &mut BitReader<'_>) -> Result<Vec<f64>> {
        let zero = r.read_bit()?;
        let e = r.read_bits(exponent_bits(self.dtype))? as i32 - exponent_bias(self.dtype);
        let lead = r.read_bits(LEAD_BITS)? as u32;
        let mut block = bitplane_decode(r, &self.order, self.planes - lead, self.rate)?;
        if zero {
            return Ok(vec![0.0; block.len()]);
        }
        inverse_transform(&mut block, self.d);
        let q = precision(self.dtype)? as i32;
        Ok(block
            .iter()
            .map(|&f| libm::scalbn(f as f64, e - (q - 2)))
            .collect())
    }
}

fn header_len(rank: usize) -> usize {
    2 + 8 * rank + 1
}

/// Compresses a float tensor of rank 1–3 at `rate` bits per value.
///
/// Layout: `[dtype u8][rank u8][dims u64 x rank][rate u8][blocks]`.
pub fn zfp_compress<A: DeviceAdapter>(adapter: &A, u: &TensorData, rate: u32) -> Result<Vec<u8>> {
    let dims = u.dims();
    check_rank(dims)?;
    let codec = Codec::new(u.dtype(), dims.len(), rate)?;
    let values = u.to_f64()?;
    let grid = block_grid(dims);
    let blocks: usize = grid.iter().product();
    let bb = block_bits(u.dtype(), dims.len(), rate)?;

    let groups = blocks.div_ceil(GROUP_BLOCKS);
    let parts: Vec<Result<Vec<u8>>> = adapter.map(groups, |g| {
        let mut w = BitWriter::with_capacity_bits(bb * GROUP_BLOCKS as u64);
        for b in g * GROUP_BLOCKS..((g + 1) * GROUP_BLOCKS).min(blocks) {
            let block = gather_block(dims, &values, block_origin(&grid, b));
            codec.encode_block(&block, &mut w)?;
        }
        Ok(w.into_bytes().0)
    });

    let mut out = Vec::with_capacity(compressed_size(dims, u.dtype(), rate)?);
    out.push(u.dtype().code());
    out.push(dims.len() as u8);
    for &n in dims {
        out.extend_from_slice(&(n as u64).to_le_bytes());
    }
    out.push(rate as u8);
    for p in parts {
        out.extend(p?);
    }
    Ok(out)
}

pub fn zfp_decompress<A: DeviceAdapter>(adapter: &A, bytes: &[u8]) -> Result<TensorData> {
    let truncated = |needed| Error::Truncated {
        needed,
        available: bytes.len(),
    };
    if bytes.len() < 2 {
        return Err(truncated(2));
    }
    let dtype = DType::from_code(bytes[0])?;
    let rank = bytes[1] as usize;
    if rank == 0 || rank > 3 {
        return Err(Error::Corrupt {
            bit_offset: 8,
            reason: "rank outside 1..=3",
        });
    }
    let hl = header_len(rank);
    if bytes.len() < hl {
        return Err(truncated(hl));
    }
    let dims: Vec<usize> = bytes[2..2 + 8 * rank]
        .chunks_exact(8)
        .map(|b| u64::from_le_bytes(b.try_into().unwrap()) as usize)
        .collect();
    check_rank(&dims)?;
    let rate = bytes[hl - 1] as u32;
    let codec = Codec::new(dtype, rank, rate)?;
    let total = compressed_size(&dims, dtype, rate)?;
    if bytes.len() < total {
        return Err(truncated(total));
    }
    if bytes.len() > total {
        return Err(Error::Corrupt {
            bit_offset: total as u64 * 8,
            reason: "trailing bytes after block payload",
        });
    }
    let payload = &bytes[hl..];
    let grid = block_grid(&dims);
    let blocks: usize = grid.iter().product();
    let bb = block_bits(dtype, rank, rate)?;
    let group_bytes = (bb * GROUP_BLOCKS as u64 / 8) as usize;
    let groups = blocks.div_ceil(GROUP_BLOCKS);

    let decoded: Vec<Result<Vec<Vec<f64>>>> = adapter.map(groups, |g| {
        let start = g * group_bytes;
        let slice = &payload[start..payload.len().min(start + group_bytes)];
        let mut r = BitReader::new(slice, slice.len() as u64 * 8);
        (g * GROUP_BLOCKS..((g + 1) * GROUP_BLOCKS).min(blocks))
            .map(|_| codec.decode_block(&mut r))
            .collect()
    });

    let mut out = vec![0.0f64; element_count(&dims)];
    let mut b = 0;
    for group in decoded {
        for block in group? {
            scatter_block(&dims, &mut out, block_origin(&grid, b), &block);
            b += 1;
        }
    }
    TensorData::from_f64_as(dims, dtype, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::Serial;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn partition_counts_and_padding() {
        let v: Vec<f64> = (0..8).map(|i| i as f64).collect();
        assert_eq!(partition_blocks(&[8], &v).unwrap().len(), 2);
        let v: Vec<f64> = (0..5).map(|i| i as f64).collect();
        let b = partition_blocks(&[5], &v).unwrap();
        assert_eq!(b[1], vec![4.0; 4]);
        let v: Vec<f64> = (0..36).map(|i| i as f64).collect();
        let b = partition_blocks(&[6, 6], &v).unwrap();
        assert_eq!(b.len(), 4);
        // Block (1,1) covers rows 4..6, cols 4..6, padded by replication.
        let expect = [
            28., 29., 29., 29., 34., 35., 35., 35., 34., 35., 35., 35., 34., 35., 35., 35.,
        ];
        assert_eq!(b[3], expect);
        assert_eq!(b[1][..4], [4., 5., 5., 5.]);
        assert!(partition_blocks(&[2, 2, 2, 2], &[0.0; 16]).is_err());
    }

    #[test]
    fn exp_align_examples() {
        let a = exp_align(&[1.0, 2.0, 4.0, 0.5], DType::F32).unwrap();
        assert_eq!(a.e_max, Some(2));
        assert_eq!(a.fixed, vec![1 << 28, 1 << 29, 1 << 30, 1 << 27]);
        let z = exp_align(&[0.0; 4], DType::F32).unwrap();
        assert_eq!(
            z,
            AlignedBlock {
                e_max: None,
                fixed: vec![0; 4]
            }
        );
        assert!(matches!(
            exp_align(&[1.0, f64::NAN], DType::F64),
            Err(Error::NonFinite { index: 1 })
        ));
    }

    #[test]
    fn exp_align_round_trip_within_half_step() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for dtype in [DType::F32, DType::F64] {
            let q = precision(dtype).unwrap() as i32;
            for _ in 0..1000 {
                let scale = libm::exp2(rng.random_range(-30.0..30.0));
                let v: Vec<f64> = (0..16)
                    .map(|_| (rng.random::<f64>() - 0.5) * scale)
                    .collect();
                let a = exp_align(&v, dtype).unwrap();
                let back = exp_restore(&a, dtype).unwrap();
                let bound = libm::exp2((a.e_max.unwrap() + 1 - q) as f64);
                for (x, y) in v.iter().zip(&back) {
                    assert!((x - y).abs() <= bound);
                }
            }
        }
    }

    #[test]
    fn constant_vector_maps_to_dc() {
        for c in [0i128, 1, -1, 7, -1000, 1 << 40] {
            let mut v = [c; 4];
            forward_lift(&mut v);
            assert_eq!(v, [c, 0, 0, 0]);
        }
        let mut v = [1i128, 2, 3, 4];
        forward_lift(&mut v);
        inverse_lift(&mut v);
        assert_eq!(v, [1, 2, 3, 4]);
    }

    #[test]
    fn transform_regression_2d() {
        // Recorded from the first verified run; pins the axis order.
        let mut b: Vec<i128> = (0..16).map(|i| (i * i) as i128).collect();
        forward_transform(&mut b, 2);
        assert_eq!(
            b,
            vec![77, 30, 15, 4, 120, 32, 16, 0, 60, 16, 8, 0, 64, 0, 0, 0]
                .into_iter()
                .map(|x| x as i128)
                .collect::<Vec<_>>()
        );
        inverse_transform(&mut b, 2);
        assert_eq!(b, (0..16).map(|i| (i * i) as i128).collect::<Vec<_>>());
    }

    #[test]
    fn transform_inverts_random_blocks() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for d in 1..=3 {
            for _ in 0..2000 {
                let n = 1 << (2 * d);
                let orig: Vec<i128> = (0..n).map(|_| rng.random::<i64>() as i128 >> 1).collect();
                let mut b = orig.clone();
                forward_transform(&mut b, d);
                inverse_transform(&mut b, d);
                assert_eq!(b, orig);
            }
        }
    }

    #[test]
    fn sequency_tables() {
        assert_eq!(sequency_order(1), vec![0, 1, 2, 3]);
        let o = sequency_order(2);
        assert_eq!(&o[..6], &[0, 1, 4, 2, 5, 8]);
        assert_eq!(sequency_order(3).len(), 64);
    }

    #[test]
    fn negabinary_round_trip() {
        for v in [-5i128, -1, 0, 1, 2, 3, 1 << 70, -(1 << 70)] {
            assert_eq!(from_negabinary(to_negabinary(v)), v);
        }
        assert_eq!(to_negabinary(2), 0b110);
        assert_eq!(to_negabinary(-1), 0b11);
    }

    #[test]
    fn all_planes_reproduce_fixed_point_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for (dtype, d) in [
            (DType::F32, 1),
            (DType::F32, 3),
            (DType::F64, 2),
            (DType::F64, 3),
        ] {
            let q = precision(dtype).unwrap();
            let planes = plane_count(dtype, d).unwrap();
            let order = sequency_order(d);
            for _ in 0..200 {
                let n = 1 << (2 * d);
                let orig: Vec<i128> = (0..n)
                    .map(|_| rng.random_range(-(1i128 << (q - 1)) + 1..1i128 << (q - 1)))
                    .collect();
                let mut b = orig.clone();
                forward_transform(&mut b, d);
                let mut w = BitWriter::new();
                bitplane_encode(&b, &order, planes, planes, &mut w);
                let (bytes, bits) = w.into_bytes();
                let mut r = BitReader::new(&bytes, bits);
                let mut back = bitplane_decode(&mut r, &order, planes, planes).unwrap();
                inverse_transform(&mut back, d);
                assert_eq!(back, orig);
            }
        }
    }

    #[test]
    fn one_plane_matches_truncation_oracle() {
        let planes = plane_count(DType::F32, 1).unwrap();
        let order = sequency_order(1);
        for c in [1i128 << 30, -(1i128 << 30), 12345, (1 << 31) - 1] {
            let mut b = vec![c; 4];
            forward_transform(&mut b, 1);
            let mut w = BitWriter::new();
            bitplane_encode(&b, &order, planes, 1, &mut w);
            let (bytes, bits) = w.into_bytes();
            assert_eq!(bits, 4);
            let got =
                bitplane_decode(&mut BitReader::new(&bytes, bits), &order, planes, 1).unwrap();
            let top = 1u128 << (planes - 1);
            let oracle: Vec<i128> = b
                .iter()
                .map(|&x| from_negabinary(to_negabinary(x) & top))
                .collect();
            assert_eq!(got, oracle);
        }
    }

    #[test]
    fn zero_block_codes_to_zero_planes() {
        let c = Codec::new(DType::F32, 1, 8).unwrap();
        let mut w = BitWriter::new();
        c.encode_block(&[0.0; 4], &mut w).unwrap();
        let (bytes, bits) = w.into_bytes();
        assert_eq!(bits, 1 + 8 + 4 + 32);
        assert_eq!(bytes[0], 0x80);
        assert!(bytes[1..].iter().all(|&b| b == 0));
        let back = c.decode_block(&mut BitReader::new(&bytes, bits)).unwrap();
        assert_eq!(back, vec![0.0; 4]);
    }

    fn smooth(dims: &[usize]) -> TensorData {
        let n = element_count(dims);
        let st = crate::tensor::strides(dims);
        let v: Vec<f32> = (0..n)
            .map(|i| {
                let mut s = 0.0;
                for (k, &stride) in st.iter().enumerate() {
                    let x = ((i / stride) % dims[k]) as f64 / dims[k] as f64;
                    s += libm::sin(6.0 * x + k as f64);
                }
                s as f32
            })
            .collect();
        TensorData::from_f32(dims.to_vec(), v).unwrap()
    }

    #[test]
    fn size_is_fixed_by_shape_and_rate() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = Serial::new();
        for dims in [vec![17], vec![9, 6], vec![5, 7, 9]] {
            for rate in [4, 8, 16] {
                let expect = compressed_size(&dims, DType::F32, rate).unwrap();
                for _ in 0..3 {
                    let n = element_count(&dims);
                    let v: Vec<f32> = (0..n).map(|_| rng.random_range(-1e3..1e3)).collect();
                    let t = TensorData::from_f32(dims.clone(), v).unwrap();
                    assert_eq!(zfp_compress(&s, &t, rate).unwrap().len(), expect);
                }
            }
        }
        // rate 8, F32, 512^3: one payload byte per value plus 13 header bits
        // per 64-value block.
        let n = 512usize * 512 * 512;
        assert_eq!(
            payload_bits(&[512, 512, 512], DType::F32, 8).unwrap(),
            8 * n as u64 + 13 * (n / 64) as u64
        );
    }

    #[test]
    fn error_shrinks_with_rate() {
        let s = Serial::new();
        for dims in [vec![64], vec![20, 30], vec![12, 13, 14]] {
            let u = smooth(&dims);
            let orig = u.to_f64().unwrap();
            let mut last = (f64::INFINITY, f64::INFINITY);
            for rate in [4, 8, 16, 24] {
                let b = zfp_compress(&s, &u, rate).unwrap();
                let back = zfp_decompress(&s, &b).unwrap();
                assert_eq!(back.dims(), &dims[..]);
                let got = back.to_f64().unwrap();
                let mut se = 0.0;
                let mut mx: f64 = 0.0;
                for (a, b) in orig.iter().zip(&got) {
                    se += (a - b) * (a - b);
                    mx = mx.max((a - b).abs());
                }
                let rms = libm::sqrt(se / orig.len() as f64);
                assert!(
                    rms <= last.0 && mx <= last.1,
                    "rate {rate} rms {rms} max {mx} prev {last:?}"
                );
                last = (rms, mx);
            }
        }
    }

    #[test]
    fn max_rate_is_near_lossless() {
        let s = Serial::new();
        let u = smooth(&[10, 11, 12]);
        let orig = u.to_f64().unwrap();
        let back = zfp_decompress(&s, &zfp_compress(&s, &u, 32).unwrap())
            .unwrap()
            .to_f64()
            .unwrap();
        let range = 6.0;
        for (a, b) in orig.iter().zip(&back) {
            assert!((a - b).abs() <= range * 1e-6);
        }
    }

    #[test]
    fn max_rate_error_within_alignment_bound() {
        let s = Serial::new();
        for dims in [vec![64], vec![20, 30], vec![12, 13, 14]] {
            let u = smooth(&dims);
            let orig = u.to_f64().unwrap();
            let back = zfp_decompress(&s, &zfp_compress(&s, &u, 32).unwrap())
                .unwrap()
                .to_f64()
                .unwrap();
            let grid = block_grid(&dims);
            for (b, block) in partition_blocks(&dims, &orig).unwrap().iter().enumerate() {
                let e = exp_align(block, DType::F32).unwrap().e_max.unwrap();
                let bound = libm::exp2((e + 1 - 32) as f64);
                let got = gather_block(&dims, &back, block_origin(&grid, b));
                for (x, y) in block.iter().zip(&got) {
                    assert!((x - y).abs() <= bound, "{dims:?} block {b}: {x} vs {y}");
                }
            }
        }
    }

    #[test]
    fn rejects_bad_rates_and_types() {
        let s = Serial::new();
        let u = smooth(&[8]);
        assert!(zfp_compress(&s, &u, 0).is_err());
        assert!(zfp_compress(&s, &u, 33).is_err());
        let k = TensorData::new(vec![4], crate::Values::U32(vec![1, 2, 3, 4])).unwrap();
        assert!(matches!(
            zfp_compress(&s, &k, 8),
            Err(Error::UnsupportedDType(_))
        ));
    }

    #[test]
    fn truncated_stream_is_an_error() {
        let s = Serial::new();
        let b = zfp_compress(&s, &smooth(&[9, 9]), 8).unwrap();
        assert!(zfp_decompress(&s, &b[..b.len() - 1]).is_err());
        assert!(zfp_decompress(&s, &b[..5]).is_err());
    }
}
