//! Block decomposition with halos (locality abstraction).

use alloc::vec::Vec;

use crate::tensor::strides;
use crate::{Error, Result};

/// Axis-aligned box of indices: `start[d] .. start[d] + extent[d]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Region {
    pub start: Vec<usize>,
    pub extent: Vec<usize>,
}

impl Region {
    pub fn len(&self) -> usize {
        self.extent.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn end(&self, d: usize) -> usize {
        self.start[d] + self.extent[d]
    }

    /// Flat indices (into an array of shape `dims`) of this region, row-major.
    pub fn flat_indices(&self, dims: &[usize]) -> Vec<usize> {
        let st = strides(dims);
        let mut out = Vec::with_capacity(self.len());
        let rank = dims.len();
        let mut idx = self.start.clone();
        if self.is_empty() {
            return out;
        }
        loop {
            out.push(idx.iter().zip(&st).map(|(i, s)| i * s).sum());
            let mut d = rank;
            loop {
                if d == 0 {
                    return out;
                }
                d -= 1;
                idx[d] += 1;
                if idx[d] < self.end(d) {
                    break;
                }
                idx[d] = self.start[d];
            }
        }
    }

    pub fn gather<T: Copy>(&self, data: &[T], dims: &[usize]) -> Vec<T> {
        self.flat_indices(dims)
            .into_iter()
            .map(|i| data[i])
            .collect()
    }

    pub fn scatter<T: Copy>(&self, data: &mut [T], dims: &[usize], values: &[T]) {
        for (i, v) in self.flat_indices(dims).into_iter().zip(values) {
            data[i] = *v;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    /// The block's own cells; cores of a [`BlockSet`] tile the domain.
    pub core: Region,
    /// Core expanded by the halo width, clamped to the domain.
    pub halo: Region,
}

impl Block {
    pub fn origin(&self) -> &[usize] {
        &self.core.start
    }

    /// Core region expressed relative to the halo region.
    pub fn core_in_halo(&self) -> Region {
        Region {
            start: self
                .core
                .start
                .iter()
                .zip(&self.halo.start)
                .map(|(c, h)| c - h)
                .collect(),
            extent: self.core.extent.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockSet {
    pub dims: Vec<usize>,
    pub block_shape: Vec<usize>,
    pub halo: Vec<usize>,
    pub blocks: Vec<Block>,
}

impl BlockSet {
    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }
}

/// Tiles `dims` with blocks of `block_shape`; boundary blocks are truncated.
/// Halos are clamped at the domain edges. Blocks come out in lexicographic
/// order of their origin.
pub fn decompose_blocks(dims: &[usize], block_shape: &[usize], halo: &[usize]) -> Result<BlockSet> {
    if block_shape.len() != dims.len() {
        return Err(Error::RankMismatch {
            expected: dims.len(),
            got: block_shape.len(),
        });
    }
    if halo.len() != dims.len() {
        return Err(Error::RankMismatch {
            expected: dims.len(),
            got: halo.len(),
        });
    }
    if dims.is_empty() {
        return Err(Error::InvalidShape("rank 0".into()));
    }
    if let Some(dim) = dims.iter().position(|&d| d == 0) {
        return Err(Error::ZeroExtent { dim });
    }
    if let Some(dim) = block_shape.iter().position(|&d| d == 0) {
        return Err(Error::ZeroExtent { dim });
    }

    let rank = dims.len();
    let counts: Vec<usize> = dims
        .iter()
        .zip(block_shape)
        .map(|(n, b)| n.div_ceil(*b))
        .collect();
    let total: usize = counts.iter().product();
    let mut blocks = Vec::with_capacity(total);
    let mut bi = alloc::vec![0usize; rank];
    for _ in 0..total {
        let mut core = Region {
            start: Vec::with_capacity(rank),
            extent: Vec::with_capacity(rank),
        };
        let mut hal = core.clone();
        for d in 0..rank {
            let s = bi[d] * block_shape[d];
            let e = (s + block_shape[d]).min(dims[d]);
            core.start.push(s);
            core.extent.push(e - s);
            let hs = s.saturating_sub(halo[d]);
            let he = (e + halo[d]).min(dims[d]);
            hal.start.push(hs);
            hal.extent.push(he - hs);
        }
        blocks.push(Block { core, halo: hal });
        for d in (0..rank).rev() {
            bi[d] += 1;
            if bi[d] < counts[d] {
                break;
            }
            bi[d] = 0;
        }
    }
    Ok(BlockSet {
        dims: dims.to_vec(),
        block_shape: block_shape.to_vec(),
        halo: halo.to_vec(),
        blocks,
    })
}
