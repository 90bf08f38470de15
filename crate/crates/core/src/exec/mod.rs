//! Parallel abstractions and execution models.
//!
//! Reducers express their parallelism through four abstractions (locality,
//! iterative, map-and-process, global) which are realised on two execution
//! models: the group execution model ([`gem`]), where independent groups run
//! with private staging scratch, and the domain execution model ([`dem`]),
//! where all lanes cover the whole domain with a barrier between stages.
//!
//! A [`DeviceAdapter`] maps these onto hardware. [`Serial`] is the reference
//! semantics; every other adapter must produce bit-identical results.

use alloc::vec::Vec;

pub mod blocks;
pub mod context;
pub mod dem;
pub mod gem;
pub mod lines;

pub use blocks::{decompose_blocks, Block, BlockSet, Region};
pub use context::{Buffer, BufferSpec, Context, ContextCache, ContextKey};
pub use dem::{exclusive_scan, execute_dem, Lane};
pub use gem::{execute_gem, Group};
pub use lines::{for_each_line, map_lines};

/// Default fast-tier (staging scratch) capacity per group, in bytes.
pub const DEFAULT_STAGING_CAPACITY: usize = 1 << 20;

/// Default number of logical lanes used by domain-model stages. Lanes are a
/// property of the computation, not of the adapter, so reductions over lanes
/// are reproducible across adapters.
pub const DEFAULT_DEM_LANES: usize = 64;

/// Backend that runs indexed work items.
///
/// Implementations may run items concurrently but must return results in
/// index order.
pub trait DeviceAdapter: Sync {
    fn name(&self) -> &'static str;

    /// Number of workers items are spread across.
    fn workers(&self) -> usize;

    /// Bytes of per-group staging scratch the adapter can provide.
    fn staging_capacity(&self) -> usize {
        DEFAULT_STAGING_CAPACITY
    }

    /// Evaluates `f(0..n)` and returns the results in index order.
    fn map<R, F>(&self, n: usize, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> R + Sync;

    /// Calls `f(i, &mut items[i])` for every item.
    fn for_each_mut<I, F>(&self, items: &mut [I], f: F)
    where
        I: Send,
        F: Fn(usize, &mut I) + Sync;
}

/// Single-threaded reference adapter.
#[derive(Debug, Clone)]
pub struct Serial {
    staging_capacity: usize,
}

impl Serial {
    pub fn new() -> Self {
        Serial {
            staging_capacity: DEFAULT_STAGING_CAPACITY,
        }
    }

    pub fn with_staging_capacity(bytes: usize) -> Self {
        Serial {
            staging_capacity: bytes,
        }
    }
}

impl Default for Serial {
    fn default() -> Self {
        Self::new()
    }
}

impl DeviceAdapter for Serial {
    fn name(&self) -> &'static str {
        "serial"
    }

    fn workers(&self) -> usize {
        1
    }

    fn staging_capacity(&self) -> usize {
        self.staging_capacity
    }

    fn map<R, F>(&self, n: usize, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> R + Sync,
    {
        (0..n).map(f).collect()
    }

    fn for_each_mut<I, F>(&self, items: &mut [I], f: F)
    where
        I: Send,
        F: Fn(usize, &mut I) + Sync,
    {
        for (i, item) in items.iter_mut().enumerate() {
            f(i, item);
        }
    }
}

/// Which execution model a stage runs under.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StageKind {
    Gem,
    Dem,
}

/// Work function run once per group under GEM.
pub type GroupFn<'f, T> = dyn Fn(&mut Group<'_, T>) + Sync + 'f;
/// Work function run once per lane under DEM.
pub type LaneFn<'f, T, S> = dyn Fn(&mut Lane<'_, T, S>) + Sync + 'f;

pub enum StageWork<'f, T, S> {
    Group(&'f GroupFn<'f, T>),
    Domain(&'f LaneFn<'f, T, S>),
}

/// One stage of a multi-stage execution. Stages sharing a model are fused
/// into one execution.
pub struct ExecStage<'f, T, S = ()> {
    pub work: StageWork<'f, T, S>,
    /// Fast-tier scratch requested per group (GEM only).
    pub staging_bytes: usize,
}

impl<'f, T, S> ExecStage<'f, T, S> {
    pub fn gem(work: &'f GroupFn<'f, T>, staging_bytes: usize) -> Self {
        ExecStage {
            work: StageWork::Group(work),
            staging_bytes,
        }
    }

    pub fn dem(work: &'f LaneFn<'f, T, S>) -> Self {
        ExecStage {
            work: StageWork::Domain(work),
            staging_bytes: 0,
        }
    }

    pub fn kind(&self) -> StageKind {
        match self.work {
            StageWork::Group(_) => StageKind::Gem,
            StageWork::Domain(_) => StageKind::Dem,
        }
    }
}

/// Splits `n` items into `parts` contiguous near-equal ranges.
pub fn partition(n: usize, parts: usize) -> Vec<core::ops::Range<usize>> {
    let parts = parts.max(1);
    let base = n / parts;
    let extra = n % parts;
    let mut start = 0;
    (0..parts)
        .map(|p| {
            let len = base + usize::from(p < extra);
            let r = start..start + len;
            start += len;
            r
        })
        .collect()
}
