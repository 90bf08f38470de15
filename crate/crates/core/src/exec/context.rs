//! Context memory model: a keyed LRU cache of persistent reduction buffers.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;

use crate::{DType, Error, Result};

pub const DEFAULT_CONTEXT_CAPACITY: usize = 4;

/// 64-bit FNV-1a hash of the canonical serialization of
/// (pipeline id, dims, dtype, parameters).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ContextKey(pub u64);

impl ContextKey {
    pub fn new(pipeline: u8, dims: &[usize], dtype: DType, params: &[u8]) -> Self {
        let mut h = Fnv1a::new();
        h.write(&[pipeline, dtype.code(), dims.len() as u8]);
        for d in dims {
            h.write(&(*d as u64).to_le_bytes());
        }
        h.write(&(params.len() as u64).to_le_bytes());
        h.write(params);
        ContextKey(h.finish())
    }
}

struct Fnv1a(u64);

impl Fnv1a {
    fn new() -> Self {
        Fnv1a(0xcbf2_9ce4_8422_2325)
    }

    fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 ^= b as u64;
            self.0 = self.0.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }

    fn finish(&self) -> u64 {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BufferKind {
    F64,
    U32,
    U8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BufferSpec {
    pub name: &'static str,
    pub kind: BufferKind,
    pub len: usize,
}

impl BufferSpec {
    pub const fn f64(name: &'static str, len: usize) -> Self {
        BufferSpec {
            name,
            kind: BufferKind::F64,
            len,
        }
    }

    pub const fn u32(name: &'static str, len: usize) -> Self {
        BufferSpec {
            name,
            kind: BufferKind::U32,
            len,
        }
    }

    pub const fn u8(name: &'static str, len: usize) -> Self {
        BufferSpec {
            name,
            kind: BufferKind::U8,
            len,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Buffer {
    F64(Vec<f64>),
    U32(Vec<u32>),
    U8(Vec<u8>),
}

impl Buffer {
    fn matches(&self, spec: &BufferSpec) -> bool {
        match (self, spec.kind) {
            (Buffer::F64(v), BufferKind::F64) => v.len() == spec.len,
            (Buffer::U32(v), BufferKind::U32) => v.len() == spec.len,
            (Buffer::U8(v), BufferKind::U8) => v.len() == spec.len,
            _ => false,
        }
    }

    fn allocate(spec: &BufferSpec) -> Result<Buffer> {
        fn zeroed<T: Clone + Default>(len: usize) -> Result<Vec<T>> {
            let mut v = Vec::new();
            v.try_reserve_exact(len)
                .map_err(|_| Error::AllocationFailed {
                    bytes: len * core::mem::size_of::<T>(),
                })?;
            v.resize(len, T::default());
            Ok(v)
        }
        Ok(match spec.kind {
            BufferKind::F64 => Buffer::F64(zeroed(spec.len)?),
            BufferKind::U32 => Buffer::U32(zeroed(spec.len)?),
            BufferKind::U8 => Buffer::U8(zeroed(spec.len)?),
        })
    }
}

/// Persistent buffers for one reduction configuration.
#[derive(Debug)]
pub struct Context {
    key: ContextKey,
    buffers: Vec<(&'static str, Buffer)>,
    allocations: u64,
    last_use: u64,
}

impl Context {
    pub fn key(&self) -> ContextKey {
        self.key
    }

    /// Buffer allocation events performed for this context so far.
    pub fn allocations(&self) -> u64 {
        self.allocations
    }

    fn slot(&mut self, name: &str) -> Option<&mut Buffer> {
        self.buffers
            .iter_mut()
            .find(|(n, _)| *n == name)
            .map(|(_, b)| b)
    }

    /// Moves a buffer out; hand it back with [`Context::restore`] to keep it
    /// cached.
    pub fn take(&mut self, name: &str) -> Option<Buffer> {
        let pos = self.buffers.iter().position(|(n, _)| *n == name)?;
        Some(self.buffers.swap_remove(pos).1)
    }

    pub fn restore(&mut self, name: &'static str, buffer: Buffer) {
        match self.slot(name) {
            Some(b) => *b = buffer,
            None => self.buffers.push((name, buffer)),
        }
    }

    pub fn f64_mut(&mut self, name: &str) -> Option<&mut Vec<f64>> {
        match self.slot(name)? {
            Buffer::F64(v) => Some(v),
            _ => None,
        }
    }

    pub fn u32_mut(&mut self, name: &str) -> Option<&mut Vec<u32>> {
        match self.slot(name)? {
            Buffer::U32(v) => Some(v),
            _ => None,
        }
    }

    pub fn u8_mut(&mut self, name: &str) -> Option<&mut Vec<u8>> {
        match self.slot(name)? {
            Buffer::U8(v) => Some(v),
            _ => None,
        }
    }
}

/// LRU cache of contexts keyed by [`ContextKey`]. Not shared between
/// concurrent reductions: each reduction stream owns its cache.
#[derive(Debug)]
pub struct ContextCache {
    capacity: usize,
    entries: BTreeMap<ContextKey, Context>,
    clock: u64,
    allocation_events: u64,
    evictions: u64,
}

impl Default for ContextCache {
    fn default() -> Self {
        Self::new(DEFAULT_CONTEXT_CAPACITY)
    }
}

impl ContextCache {
    pub fn new(capacity: usize) -> Self {
        ContextCache {
            capacity: capacity.max(1),
            entries: BTreeMap::new(),
            clock: 0,
            allocation_events: 0,
            evictions: 0,
        }
    }

    /// Total buffer allocations across all contexts ever held.
    pub fn allocation_events(&self) -> u64 {
        self.allocation_events
    }

    pub fn evictions(&self) -> u64 {
        self.evictions
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, key: ContextKey) -> bool {
        self.entries.contains_key(&key)
    }

    /// Returns the cached context for `key`, allocating any buffer from
    /// `specs` that is missing or differs in kind/size. A miss inserts a new
    /// context, evicting the least recently used one at capacity.
    pub fn acquire(&mut self, key: ContextKey, specs: &[BufferSpec]) -> Result<&mut Context> {
        if let Some(s) = specs.iter().find(|s| s.len == 0) {
            return Err(Error::param(format!("buffer '{}' has zero size", s.name)));
        }
        self.clock += 1;
        if !self.entries.contains_key(&key) {
            if self.entries.len() >= self.capacity {
                let victim = self
                    .entries
                    .iter()
                    .min_by_key(|(_, c)| c.last_use)
                    .map(|(k, _)| *k)
                    .unwrap();
                self.entries.remove(&victim);
                self.evictions += 1;
            }
            self.entries.insert(
                key,
                Context {
                    key,
                    buffers: Vec::with_capacity(specs.len()),
                    allocations: 0,
                    last_use: 0,
                },
            );
        }
        let ctx = self.entries.get_mut(&key).unwrap();
        ctx.last_use = self.clock;
        for spec in specs {
            let ok = ctx
                .buffers
                .iter()
                .any(|(n, b)| *n == spec.name && b.matches(spec));
            if !ok {
                let buf = Buffer::allocate(spec)?;
                ctx.restore(spec.name, buf);
                ctx.allocations += 1;
                self.allocation_events += 1;
            }
        }
        Ok(ctx)
    }
}
