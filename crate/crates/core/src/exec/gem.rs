//! Group execution model.
//!
//! Each block is staged (core plus halo) into a group-private buffer, all
//! stages run on it in order, then the core is written back. Groups only see
//! the input as it was before the execution started, so the result does not
//! depend on group scheduling.

use alloc::vec;
use alloc::vec::Vec;

use super::{BlockSet, DeviceAdapter, ExecStage, StageKind, StageWork};
use crate::exec::blocks::{Block, Region};
use crate::{Error, Result};

/// What a GEM work function sees for its group.
pub struct Group<'a, T> {
    pub index: usize,
    pub stage: usize,
    pub block: &'a Block,
    /// Staged copy of the halo region, row-major over `block.halo.extent`.
    pub local: Vec<T>,
    /// Fast-tier scratch, persistent across the stages of this group.
    pub scratch: Vec<u8>,
    core_in_halo: Region,
}

impl<T: Copy> Group<'_, T> {
    pub fn extent(&self) -> &[usize] {
        &self.block.halo.extent
    }

    /// Core region relative to `local`.
    pub fn core(&self) -> &Region {
        &self.core_in_halo
    }
}

/// Runs GEM stages over `blocks` of the array `data` with shape `blocks.dims`.
pub fn execute_gem<T, S, A>(
    adapter: &A,
    data: &mut [T],
    blocks: &BlockSet,
    stages: &[ExecStage<'_, T, S>],
) -> Result<()>
where
    T: Copy + Send + Sync,
    A: DeviceAdapter,
{
    if stages.iter().any(|s| s.kind() != StageKind::Gem) {
        return Err(Error::MixedStages { expected: "GEM" });
    }
    if data.len() != blocks.dims.iter().product::<usize>() {
        return Err(Error::InvalidShape(alloc::format!(
            "data has {} elements, block set covers {:?}",
            data.len(),
            blocks.dims
        )));
    }
    let staging = stages.iter().map(|s| s.staging_bytes).max().unwrap_or(0);
    if staging > adapter.staging_capacity() {
        return Err(Error::StagingExceeded {
            requested: staging,
            capacity: adapter.staging_capacity(),
        });
    }
    if stages.is_empty() {
        return Ok(());
    }

    let input: &[T] = data;
    let dims = &blocks.dims;
    let cores: Vec<Vec<T>> = adapter.map(blocks.len(), |gi| {
        let block = &blocks.blocks[gi];
        let mut group = Group {
            index: gi,
            stage: 0,
            block,
            local: block.halo.gather(input, dims),
            scratch: vec![0u8; staging],
            core_in_halo: block.core_in_halo(),
        };
        for (si, stage) in stages.iter().enumerate() {
            group.stage = si;
            if let StageWork::Group(f) = stage.work {
                f(&mut group);
            }
        }
        group.core_in_halo.gather(&group.local, &block.halo.extent)
    });
    for (block, core) in blocks.blocks.iter().zip(&cores) {
        block.core.scatter(data, dims, core);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::{decompose_blocks, Serial};

    #[test]
    fn identity_leaves_data_unchanged() {
        let mut data: Vec<f32> = (0..30).map(|i| i as f32 * 0.5).collect();
        let before = data.clone();
        let bs = decompose_blocks(&[5, 6], &[2, 4], &[1, 1]).unwrap();
        let id = |_: &mut Group<'_, f32>| {};
        execute_gem::<_, (), _>(&Serial::new(), &mut data, &bs, &[ExecStage::gem(&id, 0)]).unwrap();
        assert_eq!(data, before);
    }

    #[test]
    fn stages_compose_in_order() {
        let mut data = vec![1.0f64, 2.0, 3.0, 4.0];
        let bs = decompose_blocks(&[4], &[4], &[0]).unwrap();
        let double = |g: &mut Group<'_, f64>| g.local.iter_mut().for_each(|x| *x *= 2.0);
        let add_one = |g: &mut Group<'_, f64>| g.local.iter_mut().for_each(|x| *x += 1.0);
        let stages = [
            ExecStage::<f64, ()>::gem(&double, 0),
            ExecStage::gem(&add_one, 0),
        ];
        execute_gem(&Serial::new(), &mut data, &bs, &stages).unwrap();
        assert_eq!(data, vec![3.0, 5.0, 7.0, 9.0]);
    }

    #[test]
    fn scratch_persists_across_stages() {
        let mut data = vec![0u32; 8];
        let bs = decompose_blocks(&[8], &[4], &[0]).unwrap();
        let write = |g: &mut Group<'_, u32>| g.scratch[0] = 7 + g.index as u8;
        let read = |g: &mut Group<'_, u32>| {
            let v = g.scratch[0] as u32;
            g.local.iter_mut().for_each(|x| *x = v);
        };
        let stages = [
            ExecStage::<u32, ()>::gem(&write, 4),
            ExecStage::gem(&read, 4),
        ];
        execute_gem(&Serial::new(), &mut data, &bs, &stages).unwrap();
        assert_eq!(data, vec![7, 7, 7, 7, 8, 8, 8, 8]);
    }

    #[test]
    fn halo_reads_see_pre_execution_values() {
        // Each group replaces its core with the sum of its halo window.
        let mut data: Vec<i64> = (0..8).collect();
        let bs = decompose_blocks(&[8], &[2], &[1]).unwrap();
        let sum = |g: &mut Group<'_, i64>| {
            let s: i64 = g.local.iter().sum();
            let core = g.core().clone();
            let ext = g.extent().to_vec();
            let n = core.len();
            core.scatter(&mut g.local, &ext, &vec![s; n]);
        };
        execute_gem::<_, (), _>(&Serial::new(), &mut data, &bs, &[ExecStage::gem(&sum, 0)])
            .unwrap();
        assert_eq!(data, vec![3, 3, 10, 10, 18, 18, 18, 18]);
    }

    #[test]
    fn staging_over_capacity_is_an_error() {
        let mut data = vec![0u8; 4];
        let bs = decompose_blocks(&[4], &[4], &[0]).unwrap();
        let f = |_: &mut Group<'_, u8>| {};
        let err = execute_gem::<_, (), _>(
            &Serial::with_staging_capacity(16),
            &mut data,
            &bs,
            &[ExecStage::gem(&f, 17)],
        )
        .unwrap_err();
        assert_eq!(
            err,
            Error::StagingExceeded {
                requested: 17,
                capacity: 16
            }
        );
    }

    #[test]
    fn dem_stage_rejected() {
        let mut data = vec![0u8; 4];
        let bs = decompose_blocks(&[4], &[4], &[0]).unwrap();
        let f = |_: &mut crate::exec::Lane<'_, u8, ()>| {};
        let err = execute_gem(&Serial::new(), &mut data, &bs, &[ExecStage::dem(&f)]).unwrap_err();
        assert!(matches!(err, Error::MixedStages { .. }));
    }
}
