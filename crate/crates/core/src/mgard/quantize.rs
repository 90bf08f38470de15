use alloc::vec;
use alloc::vec::Vec;

use super::decompose::CoefficientSet;
use super::hierarchy::Hierarchy;
use crate::tensor::{element_count, strides};
use crate::{Error, Result};

/// Quantized coefficients. Coarsest nodes carry key 0; their values travel
/// separately.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedSet {
    pub keys: Vec<u32>,
    /// `(flat index, signed bin)` for bins too large for the dictionary.
    pub outliers: Vec<(u64, i64)>,
    /// Bin width at the finest level, in data units.
    pub bin_width: f64,
    /// Bin width multiplier per level step towards the coarsest level.
    pub level_scale: f64,
    pub eb_abs: f64,
    pub dict_size: usize,
}

#[inline]
pub fn zigzag(b: i64) -> u64 {
    ((b << 1) ^ (b >> 63)) as u64
}

#[inline]
pub fn unzigzag(k: u64) -> i64 {
    ((k >> 1) as i64) ^ -((k & 1) as i64)
}

/// Level at which each element first appears (0 = coarsest).
pub fn element_levels(h: &Hierarchy) -> Vec<u8> {
    let dims = h.dims();
    let per_dim: Vec<Vec<u8>> = (0..dims.len())
        .map(|d| {
            let mut lv = vec![0u8; dims[d]];
            for l in (0..h.total_levels()).rev() {
                for &p in h.positions(l, d) {
                    lv[p] = l as u8;
                }
            }
            lv
        })
        .collect();
    let st = strides(dims);
    (0..element_count(dims))
        .map(|i| {
            (0..dims.len())
                .map(|d| per_dim[d][(i / st[d]) % dims[d]])
                .max()
                .unwrap()
        })
        .collect()
}

/// Bin width of each level, coarsest first.
pub fn level_bins(h: &Hierarchy, bin_width: f64, level_scale: f64) -> Vec<f64> {
    let finest = h.finest() as i32;
    (0..=finest)
        .map(|l| bin_width * libm::pow(level_scale, (finest - l) as f64))
        .collect()
}

fn check_dict(dict_size: usize) -> Result<()> {
    if !(2..=65536).contains(&dict_size) {
        return Err(Error::param(alloc::format!(
            "dictionary size {dict_size} outside 2..=65536"
        )));
    }
    Ok(())
}

/// Linear quantization: `key = zigzag(round(mc / bin))`, with
/// `|bin| >= dict_size / 2` sent to the outlier list.
pub fn quantize(
    c: &CoefficientSet,
    h: &Hierarchy,
    bin_width: f64,
    level_scale: f64,
    eb_abs: f64,
    dict_size: usize,
) -> Result<QuantizedSet> {
    check_dict(dict_size)?;
    if !(bin_width > 0.0 && bin_width.is_finite())
        || !(level_scale > 0.0 && level_scale.is_finite())
    {
        return Err(Error::param(
            "bin width and level scale must be positive and finite",
        ));
    }
    if let Some(index) = c.values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { index });
    }
    let levels = element_levels(h);
    let bins = level_bins(h, bin_width, level_scale);
    let limit = (dict_size / 2) as i64;
    let mut keys = vec![0u32; c.values.len()];
    let mut outliers = Vec::new();
    for (i, (&v, &l)) in c.values.iter().zip(&levels).enumerate() {
        if l == 0 {
            continue;
        }
        let q = libm::round(v / bins[l as usize]);
        if q.abs() >= 4.0e18 {
            return Err(Error::param("coefficient too large for the bin width"));
        }
        let b = q as i64;
        if b.abs() >= limit {
            outliers.push((i as u64, b));
        } else {
            keys[i] = zigzag(b) as u32;
        }
    }
    Ok(QuantizedSet {
        keys,
        outliers,
        bin_width,
        level_scale,
        eb_abs,
        dict_size,
    })
}

/// Restores coefficients from keys and outliers. Coarsest positions come
/// back as zero; the caller fills them in.
pub fn dequantize(q: &QuantizedSet, h: &Hierarchy) -> Result<CoefficientSet> {
    if let Some(&k) = q.keys.iter().find(|&&k| k as usize >= q.dict_size) {
        return Err(Error::KeyOutOfRange {
            key: k as u64,
            dict_size: q.dict_size,
        });
    }
    let levels = element_levels(h);
    if levels.len() != q.keys.len() {
        return Err(Error::InvalidShape(alloc::format!(
            "{} keys for {} elements",
            q.keys.len(),
            levels.len()
        )));
    }
    let bins = level_bins(h, q.bin_width, q.level_scale);
    let mut values: Vec<f64> = q
        .keys
        .iter()
        .zip(&levels)
        .map(|(&k, &l)| {
            if l == 0 {
                0.0
            } else {
                unzigzag(k as u64) as f64 * bins[l as usize]
            }
        })
        .collect();
    for &(i, b) in &q.outliers {
        let i = i as usize;
        if i >= values.len() || levels[i] == 0 {
            return Err(Error::Corrupt {
                bit_offset: 0,
                reason: "outlier index outside the coefficient set",
            });
        }
        values[i] = b as f64 * bins[levels[i] as usize];
    }
    Ok(CoefficientSet {
        values,
        level_counts: h.level_element_counts(),
    })
}
