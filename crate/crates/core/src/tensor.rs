//! N-dimensional arrays handed to and returned by every reducer.

use alloc::format;
use alloc::vec::Vec;

use crate::{Error, Result};

pub const MAX_RANK: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DType {
    F32,
    F64,
    U8,
    U16,
    U32,
    U64,
    I32,
    I64,
}

impl DType {
    pub fn size(self) -> usize {
        match self {
            DType::U8 => 1,
            DType::U16 => 2,
            DType::F32 | DType::U32 | DType::I32 => 4,
            DType::F64 | DType::U64 | DType::I64 => 8,
        }
    }

    pub fn is_float(self) -> bool {
        matches!(self, DType::F32 | DType::F64)
    }

    /// Wire code used by the container and the per-reducer stream headers.
    pub fn code(self) -> u8 {
        match self {
            DType::F32 => 0,
            DType::F64 => 1,
            DType::U8 => 2,
            DType::U16 => 3,
            DType::U32 => 4,
            DType::U64 => 5,
            DType::I32 => 6,
            DType::I64 => 7,
        }
    }

    pub fn from_code(code: u8) -> Result<Self> {
        Ok(match code {
            0 => DType::F32,
            1 => DType::F64,
            2 => DType::U8,
            3 => DType::U16,
            4 => DType::U32,
            5 => DType::U64,
            6 => DType::I32,
            7 => DType::I64,
            _ => return Err(Error::param(format!("unknown dtype code {code}"))),
        })
    }
}

/// Contiguous row-major element storage.
#[derive(Debug, Clone, PartialEq)]
pub enum Values {
    F32(Vec<f32>),
    F64(Vec<f64>),
    U8(Vec<u8>),
    U16(Vec<u16>),
    U32(Vec<u32>),
    U64(Vec<u64>),
    I32(Vec<i32>),
    I64(Vec<i64>),
}

macro_rules! each_values {
    ($v:expr, $x:ident => $body:expr) => {
        match $v {
            Values::F32($x) => $body,
            Values::F64($x) => $body,
            Values::U8($x) => $body,
            Values::U16($x) => $body,
            Values::U32($x) => $body,
            Values::U64($x) => $body,
            Values::I32($x) => $body,
            Values::I64($x) => $body,
        }
    };
}

macro_rules! map_values {
    ($v:expr, $x:ident => $body:expr) => {
        match $v {
            Values::F32($x) => Values::F32($body),
            Values::F64($x) => Values::F64($body),
            Values::U8($x) => Values::U8($body),
            Values::U16($x) => Values::U16($body),
            Values::U32($x) => Values::U32($body),
            Values::U64($x) => Values::U64($body),
            Values::I32($x) => Values::I32($body),
            Values::I64($x) => Values::I64($body),
        }
    };
}

impl Values {
    pub fn len(&self) -> usize {
        each_values!(self, v => v.len())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dtype(&self) -> DType {
        match self {
            Values::F32(_) => DType::F32,
            Values::F64(_) => DType::F64,
            Values::U8(_) => DType::U8,
            Values::U16(_) => DType::U16,
            Values::U32(_) => DType::U32,
            Values::U64(_) => DType::U64,
            Values::I32(_) => DType::I32,
            Values::I64(_) => DType::I64,
        }
    }

    fn gather(&self, idx: &[usize]) -> Values {
        map_values!(self, v => idx.iter().map(|&i| v[i]).collect())
    }

    fn empty_like(&self, cap: usize) -> Values {
        map_values!(self, _v => Vec::with_capacity(cap))
    }

    fn extend_from(&mut self, other: &Values) -> Result<()> {
        match (self, other) {
            (Values::F32(a), Values::F32(b)) => a.extend_from_slice(b),
            (Values::F64(a), Values::F64(b)) => a.extend_from_slice(b),
            (Values::U8(a), Values::U8(b)) => a.extend_from_slice(b),
            (Values::U16(a), Values::U16(b)) => a.extend_from_slice(b),
            (Values::U32(a), Values::U32(b)) => a.extend_from_slice(b),
            (Values::U64(a), Values::U64(b)) => a.extend_from_slice(b),
            (Values::I32(a), Values::I32(b)) => a.extend_from_slice(b),
            (Values::I64(a), Values::I64(b)) => a.extend_from_slice(b),
            (a, b) => {
                return Err(Error::param(format!(
                    "dtype mismatch: {:?} vs {:?}",
                    a.dtype(),
                    b.dtype()
                )))
            }
        }
        Ok(())
    }
}

/// An n-dimensional array: logical extents (slowest-varying first) plus
/// contiguous row-major values.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorData {
    dims: Vec<usize>,
    values: Values,
}

pub fn element_count(dims: &[usize]) -> usize {
    dims.iter().product()
}

pub fn validate_dims(dims: &[usize]) -> Result<()> {
    if dims.is_empty() || dims.len() > MAX_RANK {
        return Err(Error::InvalidShape(format!(
            "rank must be 1..={MAX_RANK}, got {}",
            dims.len()
        )));
    }
    if let Some(dim) = dims.iter().position(|&d| d == 0) {
        return Err(Error::ZeroExtent { dim });
    }
    Ok(())
}

/// Row-major strides in elements.
pub fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = alloc::vec![1usize; dims.len()];
    for d in (0..dims.len().saturating_sub(1)).rev() {
        s[d] = s[d + 1] * dims[d + 1];
    }
    s
}

impl TensorData {
    pub fn new(dims: Vec<usize>, values: Values) -> Result<Self> {
        validate_dims(&dims)?;
        let n = element_count(&dims);
        if n != values.len() {
            return Err(Error::InvalidShape(format!(
                "dims {:?} need {} elements, got {}",
                dims,
                n,
                values.len()
            )));
        }
        Ok(TensorData { dims, values })
    }

    pub fn from_f32(dims: Vec<usize>, v: Vec<f32>) -> Result<Self> {
        Self::new(dims, Values::F32(v))
    }

    pub fn from_f64(dims: Vec<usize>, v: Vec<f64>) -> Result<Self> {
        Self::new(dims, Values::F64(v))
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn rank(&self) -> usize {
        self.dims.len()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn dtype(&self) -> DType {
        self.values.dtype()
    }

    pub fn values(&self) -> &Values {
        &self.values
    }

    pub fn into_values(self) -> Values {
        self.values
    }

    pub fn byte_len(&self) -> usize {
        self.len() * self.dtype().size()
    }

    /// Floating-point values widened to f64; errors for integer dtypes.
    pub fn to_f64(&self) -> Result<Vec<f64>> {
        match &self.values {
            Values::F32(v) => Ok(v.iter().map(|&x| x as f64).collect()),
            Values::F64(v) => Ok(v.clone()),
            _ => Err(Error::UnsupportedDType(self.dtype())),
        }
    }

    /// Builds a float tensor from f64 values, narrowing when `dtype` is F32.
    pub fn from_f64_as(dims: Vec<usize>, dtype: DType, v: Vec<f64>) -> Result<Self> {
        match dtype {
            DType::F64 => Self::new(dims, Values::F64(v)),
            DType::F32 => Self::new(dims, Values::F32(v.iter().map(|&x| x as f32).collect())),
            other => Err(Error::UnsupportedDType(other)),
        }
    }

    /// Little-endian raw bytes, row-major.
    pub fn to_le_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.byte_len());
        each_values!(&self.values, v => {
            for x in v {
                out.extend_from_slice(&x.to_le_bytes());
            }
        });
        out
    }

    pub fn from_le_bytes(dims: Vec<usize>, dtype: DType, bytes: &[u8]) -> Result<Self> {
        validate_dims(&dims)?;
        let n = element_count(&dims);
        let need = n * dtype.size();
        if bytes.len() != need {
            return Err(Error::InvalidShape(format!(
                "dims {:?} of {:?} need {} bytes, got {}",
                dims,
                dtype,
                need,
                bytes.len()
            )));
        }
        macro_rules! decode {
            ($t:ty, $var:ident) => {
                Values::$var(
                    bytes
                        .chunks_exact(core::mem::size_of::<$t>())
                        .map(|c| <$t>::from_le_bytes(c.try_into().unwrap()))
                        .collect(),
                )
            };
        }
        let values = match dtype {
            DType::F32 => decode!(f32, F32),
            DType::F64 => decode!(f64, F64),
            DType::U8 => Values::U8(bytes.to_vec()),
            DType::U16 => decode!(u16, U16),
            DType::U32 => decode!(u32, U32),
            DType::U64 => decode!(u64, U64),
            DType::I32 => decode!(i32, I32),
            DType::I64 => decode!(i64, I64),
        };
        Self::new(dims, values)
    }

    /// Sub-array `[start, start + len)` along `axis`, all other extents kept.
    pub fn slab(&self, axis: usize, start: usize, len: usize) -> Result<TensorData> {
        if axis >= self.rank() || len == 0 || start + len > self.dims[axis] {
            return Err(Error::param(format!(
                "slab [{start}, {}) outside axis {axis} of {:?}",
                start + len,
                self.dims
            )));
        }
        let mut dims = self.dims.clone();
        dims[axis] = len;
        if axis == 0 {
            let inner: usize = self.dims[1..].iter().product();
            let idx: Vec<usize> = (start * inner..(start + len) * inner).collect();
            return TensorData::new(dims, self.values.gather(&idx));
        }
        let outer: usize = self.dims[..axis].iter().product();
        let inner: usize = self.dims[axis + 1..].iter().product();
        let mut idx = Vec::with_capacity(outer * len * inner);
        for o in 0..outer {
            let base = o * self.dims[axis] * inner;
            idx.extend(base + start * inner..base + (start + len) * inner);
        }
        TensorData::new(dims, self.values.gather(&idx))
    }

    /// Reassembles slabs cut along `axis` in order.
    pub fn concat(axis: usize, parts: &[TensorData]) -> Result<TensorData> {
        let first = parts
            .first()
            .ok_or_else(|| Error::param("concat of zero parts"))?;
        let mut dims = first.dims.clone();
        if axis >= dims.len() {
            return Err(Error::param("concat axis out of range"));
        }
        dims[axis] = 0;
        for p in parts {
            if p.rank() != first.rank()
                || p.dtype() != first.dtype()
                || (0..p.rank()).any(|d| d != axis && p.dims[d] != first.dims[d])
            {
                return Err(Error::param("concat parts disagree in shape or dtype"));
            }
            dims[axis] += p.dims[axis];
        }
        let total = element_count(&dims);
        let mut values = first.values.empty_like(total);
        let outer: usize = dims[..axis].iter().product();
        for o in 0..outer {
            for p in parts {
                let run = p.dims[axis..].iter().product::<usize>();
                let idx: Vec<usize> = (o * run..(o + 1) * run).collect();
                values.extend_from(&p.values.gather(&idx))?;
            }
        }
        TensorData::new(dims, values)
    }

    /// `(min, max)` over float values, `None` if the dtype is not float.
    pub fn float_range(&self) -> Option<(f64, f64)> {
        let fold = |it: &mut dyn Iterator<Item = f64>| {
            it.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| {
                (lo.min(x), hi.max(x))
            })
        };
        match &self.values {
            Values::F32(v) => Some(fold(&mut v.iter().map(|&x| x as f64))),
            Values::F64(v) => Some(fold(&mut v.iter().copied())),
            _ => None,
        }
    }

    /// Integer values as dictionary keys (unsigned dtypes only).
    pub fn to_keys(&self) -> Result<Vec<u32>> {
        match &self.values {
            Values::U8(v) => Ok(v.iter().map(|&x| x as u32).collect()),
            Values::U16(v) => Ok(v.iter().map(|&x| x as u32).collect()),
            Values::U32(v) => Ok(v.clone()),
            _ => Err(Error::UnsupportedDType(self.dtype())),
        }
    }

    pub fn from_keys(dims: Vec<usize>, dtype: DType, keys: Vec<u32>) -> Result<Self> {
        let values = match dtype {
            DType::U8 => Values::U8(keys.iter().map(|&k| k as u8).collect()),
            DType::U16 => Values::U16(keys.iter().map(|&k| k as u16).collect()),
            DType::U32 => Values::U32(keys),
            other => return Err(Error::UnsupportedDType(other)),
        };
        Self::new(dims, values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn rejects_bad_shapes() {
        assert!(matches!(
            TensorData::from_f32(vec![2, 0], vec![]),
            Err(Error::ZeroExtent { dim: 1 })
        ));
        assert!(TensorData::from_f32(vec![2, 2], vec![0.0; 3]).is_err());
        assert!(TensorData::from_f32(vec![1, 1, 1, 1, 1], vec![0.0]).is_err());
        assert!(TensorData::from_f32(vec![], vec![]).is_err());
    }

    #[test]
    fn slab_and_concat_invert() {
        let v: Vec<f64> = (0..60).map(|i| i as f64).collect();
        let t = TensorData::from_f64(vec![3, 4, 5], v).unwrap();
        for axis in 0..3 {
            let n = t.dims()[axis];
            let parts: Vec<_> = (0..n).map(|i| t.slab(axis, i, 1).unwrap()).collect();
            assert_eq!(TensorData::concat(axis, &parts).unwrap(), t);
        }
        let s = t.slab(1, 1, 2).unwrap();
        assert_eq!(s.dims(), &[3, 2, 5]);
        assert_eq!(s.to_f64().unwrap()[..5], [5.0, 6.0, 7.0, 8.0, 9.0]);
    }

    #[test]
    fn bytes_round_trip() {
        let t = TensorData::new(vec![2, 2], Values::I32(vec![-1, 2, -3, 4])).unwrap();
        let b = t.to_le_bytes();
        assert_eq!(
            TensorData::from_le_bytes(vec![2, 2], DType::I32, &b).unwrap(),
            t
        );
        assert!(TensorData::from_le_bytes(vec![2, 2], DType::I32, &b[1..]).is_err());
    }
}
