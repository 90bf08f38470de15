//! One entry point for the three reducers, as used per chunk by the
//! pipeline and the container.

use alloc::vec::Vec;

use crate::container::Params;
use crate::exec::{Buffer, BufferSpec, ContextCache, ContextKey, DeviceAdapter};
use crate::huffman::{huffman_compress, huffman_decompress, MAX_DICT_SIZE};
use crate::mgard::{mgard_compress_with, mgard_decompress, MgardConfig, MgardWorkspace};
use crate::zfp::{zfp_compress, zfp_decompress};
use crate::{DType, Error, Result, TensorData};

/// Reducer choice before the data has been seen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ReducerSpec {
    Mgard {
        eb_rel: f64,
        dict_size: u32,
    },
    Zfp {
        rate: u8,
    },
    /// `None` sizes the dictionary from the largest key present.
    Huffman {
        dict_size: Option<u16>,
    },
}

impl ReducerSpec {
    /// Fixes data-dependent parameters (global value range, dictionary
    /// size) so every chunk of `u` is reduced the same way.
    pub fn params_for(&self, u: &TensorData) -> Result<Params> {
        match *self {
            ReducerSpec::Mgard { eb_rel, dict_size } => {
                let (min, max) = u.float_range().ok_or(Error::UnsupportedDType(u.dtype()))?;
                Ok(Params::Mgard {
                    eb_rel,
                    dict_size,
                    min,
                    max,
                })
            }
            ReducerSpec::Zfp { rate } => Ok(Params::Zfp { rate }),
            ReducerSpec::Huffman { dict_size } => {
                let dict_size = match dict_size {
                    Some(d) => d,
                    None => {
                        let max = u.to_keys()?.into_iter().max().unwrap_or(0) as usize;
                        if max >= MAX_DICT_SIZE {
                            return Err(Error::KeyOutOfRange {
                                key: max as u64,
                                dict_size: MAX_DICT_SIZE,
                            });
                        }
                        (max + 1) as u16
                    }
                };
                Ok(Params::Huffman { dict_size })
            }
        }
    }
}

fn context_key(params: &Params, chunk: &TensorData) -> ContextKey {
    ContextKey::new(
        params.pipeline() as u8,
        chunk.dims(),
        chunk.dtype(),
        &params.to_bytes(),
    )
}

/// Reduces one chunk. Persistent working buffers come from `cache`, so
/// repeated chunks of one shape reuse them.
pub fn compress_chunk<A: DeviceAdapter>(
    adapter: &A,
    cache: &mut ContextCache,
    params: &Params,
    chunk: &TensorData,
) -> Result<Vec<u8>> {
    match *params {
        Params::Mgard {
            eb_rel,
            dict_size,
            min,
            max,
        } => {
            let cfg = MgardConfig {
                eb_rel,
                dict_size: dict_size as usize,
                level_scale: 1.0,
                range: Some((min, max)),
            };
            let ctx = cache.acquire(
                context_key(params, chunk),
                &[BufferSpec::f64("coeffs", chunk.len())],
            )?;
            let mut ws = MgardWorkspace {
                coeffs: match ctx.take("coeffs") {
                    Some(Buffer::F64(v)) => v,
                    _ => Vec::new(),
                },
            };
            let out = mgard_compress_with(adapter, chunk, &cfg, &mut ws);
            ctx.restore("coeffs", Buffer::F64(ws.coeffs));
            out
        }
        Params::Zfp { rate } => zfp_compress(adapter, chunk, rate as u32),
        Params::Huffman { dict_size } => {
            huffman_compress(adapter, &chunk.to_keys()?, dict_size as usize)
        }
    }
}

/// Inverse of [`compress_chunk`]; `dims` and `dtype` describe the chunk.
pub fn decompress_chunk<A: DeviceAdapter>(
    adapter: &A,
    params: &Params,
    bytes: &[u8],
    dims: &[usize],
    dtype: DType,
) -> Result<TensorData> {
    let t = match params {
        Params::Mgard { .. } => mgard_decompress(adapter, bytes)?,
        Params::Zfp { .. } => zfp_decompress(adapter, bytes)?,
        Params::Huffman { .. } => {
            TensorData::from_keys(dims.to_vec(), dtype, huffman_decompress(adapter, bytes)?)?
        }
    };
    if t.dims() != dims || t.dtype() != dtype {
        return Err(Error::Corrupt {
            bit_offset: 0,
            reason: "chunk shape disagrees with the chunk table",
        });
    }
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::Serial;
    use alloc::vec;

    #[test]
    fn repeated_chunks_allocate_once() {
        let s = Serial::new();
        let u = TensorData::from_f32(
            vec![16, 16],
            (0..256).map(|i| (i as f32 * 0.1).sin()).collect(),
        )
        .unwrap();
        let p = ReducerSpec::Mgard {
            eb_rel: 1e-3,
            dict_size: 4096,
        }
        .params_for(&u)
        .unwrap();
        let mut cache = ContextCache::default();
        let first = compress_chunk(&s, &mut cache, &p, &u).unwrap();
        let after_one = cache.allocation_events();
        for _ in 0..20 {
            assert_eq!(compress_chunk(&s, &mut cache, &p, &u).unwrap(), first);
        }
        assert_eq!(cache.allocation_events(), after_one);
        let back = decompress_chunk(&s, &p, &first, &[16, 16], DType::F32).unwrap();
        assert_eq!(back.dims(), &[16, 16]);
    }

    #[test]
    fn huffman_dictionary_from_data() {
        let u = TensorData::new(vec![4], crate::Values::U16(vec![1, 9, 3, 9])).unwrap();
        let p = ReducerSpec::Huffman { dict_size: None }
            .params_for(&u)
            .unwrap();
        assert_eq!(p, Params::Huffman { dict_size: 10 });
        let s = Serial::new();
        let b = compress_chunk(&s, &mut ContextCache::default(), &p, &u).unwrap();
        assert_eq!(decompress_chunk(&s, &p, &b, &[4], DType::U16).unwrap(), u);
        assert!(decompress_chunk(&s, &p, &b, &[5], DType::U16).is_err());
    }
}
