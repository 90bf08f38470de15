//! Multilevel error-bounded lossy compression.
//!
//! The field is decomposed into multilevel coefficients, which are then
//! quantized with a bin width derived from the absolute error bound, and
//! the resulting keys are Huffman coded. The coarsest nodal values are
//! stored exactly.
//!
//! The bin rule `2 * eb_abs / total_levels` is a heuristic, so compression
//! checks its own output: the stream is decoded in memory and the bin is
//! narrowed until the reconstruction meets the bound.

use alloc::vec;
use alloc::vec::Vec;

use crate::exec::DeviceAdapter;
use crate::huffman::{huffman_compress, huffman_decompress_prefix};
use crate::tensor::element_count;
use crate::{DType, Error, Result, TensorData};

mod decompose;
mod hierarchy;
mod quantize;

pub use decompose::{decompose, decompose_into, recompose, CoefficientSet};
pub use hierarchy::Hierarchy;
pub use quantize::{
    dequantize, element_levels, level_bins, quantize, unzigzag, zigzag, QuantizedSet,
};

pub const DEFAULT_DICT_SIZE: usize = 4096;

/// Narrowing rounds before giving up on the error bound.
const MAX_TIGHTEN_ROUNDS: usize = 12;

const FLAG_CONSTANT: u8 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct MgardConfig {
    /// Error bound relative to the value range.
    pub eb_rel: f64,
    pub dict_size: usize,
    /// Bin width multiplier per level towards the coarsest level.
    pub level_scale: f64,
    /// Value range used to turn `eb_rel` into an absolute bound. Chunked
    /// compression passes the global range so every chunk honours the
    /// global bound; `None` measures the input.
    pub range: Option<(f64, f64)>,
}

impl MgardConfig {
    pub fn new(eb_rel: f64) -> Self {
        MgardConfig {
            eb_rel,
            dict_size: DEFAULT_DICT_SIZE,
            level_scale: 1.0,
            range: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.eb_rel > 0.0 && self.eb_rel < 1.0) {
            return Err(Error::param(alloc::format!(
                "relative error bound {} outside (0, 1)",
                self.eb_rel
            )));
        }
        if !(self.level_scale > 0.0 && self.level_scale.is_finite()) {
            return Err(Error::param("level scale must be positive"));
        }
        if !(2..=65536).contains(&self.dict_size) {
            return Err(Error::param(alloc::format!(
                "dictionary size {} outside 2..=65536",
                self.dict_size
            )));
        }
        Ok(())
    }
}

/// Reusable buffers for one reduction shape.
#[derive(Debug, Default)]
pub struct MgardWorkspace {
    pub coeffs: Vec<f64>,
}

fn value_range(v: &[f64]) -> (f64, f64) {
    v.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        })
}

fn round_to(dtype: DType, v: f64) -> f64 {
    if dtype == DType::F32 {
        v as f32 as f64
    } else {
        v
    }
}

fn coarsest_indices(h: &Hierarchy) -> Vec<usize> {
    element_levels(h)
        .iter()
        .enumerate()
        .filter(|(_, &l)| l == 0)
        .map(|(i, _)| i)
        .collect()
}

pub fn mgard_compress<A: DeviceAdapter>(
    adapter: &A,
    u: &TensorData,
    eb_rel: f64,
    dict_size: usize,
) -> Result<Vec<u8>> {
    let cfg = MgardConfig {
        dict_size,
        ..MgardConfig::new(eb_rel)
    };
    mgard_compress_with(adapter, u, &cfg, &mut MgardWorkspace::default())
}

pub fn mgard_compress_with<A: DeviceAdapter>(
    adapter: &A,
    u: &TensorData,
    cfg: &MgardConfig,
    ws: &mut MgardWorkspace,
) -> Result<Vec<u8>> {
    cfg.validate()?;
    let dtype = u.dtype();
    if !dtype.is_float() {
        return Err(Error::UnsupportedDType(dtype));
    }
    let values = u.to_f64()?;
    if let Some(index) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { index });
    }
    let (lo, hi) = cfg.range.unwrap_or_else(|| value_range(&values));
    let eb_abs = cfg.eb_rel * (hi - lo);

    let mut out = Vec::new();
    out.push(dtype.code());
    out.push(u.rank() as u8);
    for &d in u.dims() {
        out.extend_from_slice(&(d as u64).to_le_bytes());
    }
    let (vlo, vhi) = value_range(&values);
    if vlo == vhi {
        out.push(FLAG_CONSTANT);
        out.extend_from_slice(&vlo.to_le_bytes());
        return Ok(out);
    }
    if eb_abs.is_nan() || eb_abs <= 0.0 {
        return Err(Error::param("error bound is zero for a non-constant field"));
    }
    out.push(0);

    let h = Hierarchy::build(u.dims())?;
    ws.coeffs.resize(values.len(), 0.0);
    decompose_into(adapter, &values, &h, &mut ws.coeffs)?;
    let coeffs = CoefficientSet {
        values: core::mem::take(&mut ws.coeffs),
        level_counts: h.level_element_counts(),
    };
    let coarse_idx = coarsest_indices(&h);

    // A float result is rounded to its dtype on output; keep that rounding
    // inside the bound.
    let cast_err = if dtype == DType::F32 {
        vlo.abs().max(vhi.abs()) * libm::exp2(-24.0)
    } else {
        0.0
    };
    let budget = (eb_abs - cast_err).max(0.5 * eb_abs);
    let mut bin = 2.0 * budget / h.total_levels() as f64;

    let mut result = None;
    for _ in 0..MAX_TIGHTEN_ROUNDS {
        let q = quantize(&coeffs, &h, bin, cfg.level_scale, eb_abs, cfg.dict_size)?;
        let mut restored = dequantize(&q, &h)?;
        for &i in &coarse_idx {
            restored.values[i] = coeffs.values[i];
        }
        let recon = recompose(adapter, &restored, &h)?;
        let err = recon
            .iter()
            .zip(&values)
            .fold(0.0f64, |m, (r, v)| m.max((round_to(dtype, *r) - v).abs()));
        if err <= eb_abs {
            result = Some(q);
            break;
        }
        bin *= (0.9 * eb_abs / err).min(0.5);
    }
    let q = result.ok_or_else(|| Error::param("error bound could not be met"))?;

    out.extend_from_slice(&eb_abs.to_le_bytes());
    out.extend_from_slice(&q.bin_width.to_le_bytes());
    out.extend_from_slice(&q.level_scale.to_le_bytes());
    out.extend_from_slice(&(q.dict_size as u32).to_le_bytes());
    out.extend_from_slice(&(coarse_idx.len() as u64).to_le_bytes());
    for &i in &coarse_idx {
        out.extend_from_slice(&coeffs.values[i].to_le_bytes());
    }
    out.extend_from_slice(&(q.outliers.len() as u64).to_le_bytes());
    for &(i, b) in &q.outliers {
        out.extend_from_slice(&i.to_le_bytes());
        out.extend_from_slice(&b.to_le_bytes());
    }
    // Only the keys that occur need a code length.
    let used = q.keys.iter().copied().max().unwrap_or(0) as usize + 1;
    let coded = huffman_compress(adapter, &q.keys, used)?;
    out.extend_from_slice(&(coded.len() as u64).to_le_bytes());
    out.extend_from_slice(&coded);
    ws.coeffs = coeffs.values;
    Ok(out)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        match self.pos.checked_add(n) {
            Some(end) if end <= self.bytes.len() => {
                let s = &self.bytes[self.pos..end];
                self.pos = end;
                Ok(s)
            }
            _ => Err(Error::Truncated {
                needed: self.pos.saturating_add(n),
                available: self.bytes.len(),
            }),
        }
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn count(&mut self, item_bytes: usize) -> Result<usize> {
        let n = self.u64()?;
        let remaining = (self.bytes.len() - self.pos) as u64;
        if n.saturating_mul(item_bytes as u64) > remaining {
            return Err(Error::Truncated {
                needed: usize::MAX,
                available: self.bytes.len(),
            });
        }
        Ok(n as usize)
    }
}

pub fn mgard_decompress<A: DeviceAdapter>(adapter: &A, bytes: &[u8]) -> Result<TensorData> {
    let mut r = Reader { bytes, pos: 0 };
    let dtype = DType::from_code(r.u8()?)?;
    if !dtype.is_float() {
        return Err(Error::UnsupportedDType(dtype));
    }
    let rank = r.u8()? as usize;
    let dims: Vec<usize> = (0..rank)
        .map(|_| r.u64().map(|d| d as usize))
        .collect::<Result<_>>()?;
    crate::tensor::validate_dims(&dims)?;
    let n = element_count(&dims);
    let flags = r.u8()?;
    if flags & FLAG_CONSTANT != 0 {
        let v = r.f64()?;
        return TensorData::from_f64_as(dims, dtype, vec![v; n]);
    }
    let eb_abs = r.f64()?;
    let bin_width = r.f64()?;
    let level_scale = r.f64()?;
    let dict_size = r.u32()? as usize;
    let h = Hierarchy::build(&dims)?;
    let coarse_idx = coarsest_indices(&h);
    let nc = r.count(8)?;
    if nc != coarse_idx.len() {
        return Err(Error::Corrupt {
            bit_offset: r.pos as u64 * 8,
            reason: "coarsest node count does not match the shape",
        });
    }
    let coarse: Vec<f64> = (0..nc).map(|_| r.f64()).collect::<Result<_>>()?;
    let no = r.count(16)?;
    let mut outliers = Vec::with_capacity(no);
    for _ in 0..no {
        outliers.push((r.u64()?, r.u64()? as i64));
    }
    let hl = r.count(1)?;
    let coded = r.take(hl)?;
    let (keys, used) = huffman_decompress_prefix(adapter, coded)?;
    if used != hl || keys.len() != n || r.pos != bytes.len() {
        return Err(Error::Corrupt {
            bit_offset: r.pos as u64 * 8,
            reason: "key stream does not match the shape",
        });
    }
    let q = QuantizedSet {
        keys,
        outliers,
        bin_width,
        level_scale,
        eb_abs,
        dict_size,
    };
    if !(bin_width > 0.0 && bin_width.is_finite() && level_scale > 0.0 && level_scale.is_finite()) {
        return Err(Error::Corrupt {
            bit_offset: 0,
            reason: "invalid quantizer parameters",
        });
    }
    let mut c = dequantize(&q, &h)?;
    for (&i, &v) in coarse_idx.iter().zip(&coarse) {
        c.values[i] = v;
    }
    let v = recompose(adapter, &c, &h)?;
    TensorData::from_f64_as(dims, dtype, v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::Serial;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn smooth(dims: &[usize]) -> TensorData {
        let st = crate::tensor::strides(dims);
        let v: Vec<f32> = (0..element_count(dims))
            .map(|i| {
                let mut s = 0.0;
                for (k, &stride) in st.iter().enumerate() {
                    let x = ((i / stride) % dims[k]) as f64 / dims[k] as f64;
                    s += libm::sin(2.0 * core::f64::consts::PI * x * (k + 1) as f64)
                        + 0.3 * libm::cos(5.0 * x);
                }
                s as f32
            })
            .collect();
        TensorData::from_f32(dims.to_vec(), v).unwrap()
    }

    fn max_err(a: &TensorData, b: &TensorData) -> f64 {
        a.to_f64()
            .unwrap()
            .iter()
            .zip(&b.to_f64().unwrap())
            .fold(0.0, |m, (x, y)| m.max((x - y).abs()))
    }

    #[test]
    fn constant_field_compresses_extremely() {
        let u = TensorData::from_f32(vec![32, 32, 32], vec![3.25; 32 * 32 * 32]).unwrap();
        let b = mgard_compress(&Serial::new(), &u, 1e-2, 4096).unwrap();
        assert!(u.byte_len() / b.len() > 50);
        assert_eq!(mgard_decompress(&Serial::new(), &b).unwrap(), u);
    }

    #[test]
    fn error_bound_holds_on_random_and_smooth_fields() {
        let s = Serial::new();
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for eb in [1e-2, 1e-4, 1e-6] {
            for dims in [vec![100], vec![33, 17], vec![9, 10, 11]] {
                let n = element_count(&dims);
                let rnd = TensorData::from_f64(
                    dims.clone(),
                    (0..n).map(|_| rng.random_range(-3.0..7.0)).collect(),
                )
                .unwrap();
                for u in [rnd, smooth(&dims)] {
                    let (lo, hi) = u.float_range().unwrap();
                    let b = mgard_compress(&s, &u, eb, 4096).unwrap();
                    let back = mgard_decompress(&s, &b).unwrap();
                    assert_eq!(back.dims(), u.dims());
                    assert!(
                        max_err(&u, &back) <= eb * (hi - lo),
                        "eb {eb} dims {dims:?}"
                    );
                }
            }
        }
    }

    #[test]
    fn tiny_bound_is_nearly_lossless() {
        let s = Serial::new();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = TensorData::from_f64(
            vec![20, 20],
            (0..400).map(|_| rng.random::<f64>()).collect(),
        )
        .unwrap();
        let (lo, hi) = u.float_range().unwrap();
        let back = mgard_decompress(&s, &mgard_compress(&s, &u, 1e-8, 4096).unwrap()).unwrap();
        assert!(max_err(&u, &back) <= 1e-7 * (hi - lo));
    }

    #[test]
    fn ratio_falls_as_bound_tightens() {
        let s = Serial::new();
        let u = smooth(&[32, 32, 32]);
        let sizes: Vec<usize> = [1e-2, 1e-4, 1e-6]
            .iter()
            .map(|&eb| mgard_compress(&s, &u, eb, 4096).unwrap().len())
            .collect();
        assert!(sizes[0] <= sizes[1] && sizes[1] <= sizes[2], "{sizes:?}");
    }

    #[test]
    fn global_range_controls_the_bound() {
        let s = Serial::new();
        let u = smooth(&[40]);
        let cfg = MgardConfig {
            range: Some((-10.0, 10.0)),
            ..MgardConfig::new(1e-3)
        };
        let b = mgard_compress_with(&s, &u, &cfg, &mut MgardWorkspace::default()).unwrap();
        assert!(max_err(&u, &mgard_decompress(&s, &b).unwrap()) <= 1e-3 * 20.0);
    }

    #[test]
    fn invalid_inputs() {
        let s = Serial::new();
        let u = smooth(&[10]);
        assert!(mgard_compress(&s, &u, 0.0, 4096).is_err());
        assert!(mgard_compress(&s, &u, 1.0, 4096).is_err());
        let nan = TensorData::from_f64(vec![3], vec![1.0, f64::NAN, 0.0]).unwrap();
        assert!(matches!(
            mgard_compress(&s, &nan, 1e-2, 4096),
            Err(Error::NonFinite { index: 1 })
        ));
        let b = mgard_compress(&s, &u, 1e-3, 4096).unwrap();
        assert!(mgard_decompress(&s, &b[..b.len() - 3]).is_err());
    }
}
