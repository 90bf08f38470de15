use alloc::string::String;

/// Errors produced by the reduction kernels, the execution layer and the
/// container format.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("rank mismatch: expected {expected}, got {got}")]
    RankMismatch { expected: usize, got: usize },
    #[error("zero extent in dimension {dim}")]
    ZeroExtent { dim: usize },
    #[error("invalid shape: {0}")]
    InvalidShape(String),
    #[error("unsupported dtype {0:?} for this operation")]
    UnsupportedDType(crate::DType),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },
    #[error("key {key} out of range for dictionary of size {dict_size}")]
    KeyOutOfRange { key: u64, dict_size: usize },
    #[error("key {key} has no codeword")]
    AbsentKey { key: u32 },
    #[error("codeword length {length} exceeds the 32-bit limit")]
    CodeTooLong { length: u32 },
    #[error("corrupt stream at bit {bit_offset}: {reason}")]
    Corrupt {
        bit_offset: u64,
        reason: &'static str,
    },
    #[error("truncated input: needed {needed} bytes, have {available}")]
    Truncated { needed: usize, available: usize },
    #[error("bad magic")]
    BadMagic,
    #[error("unsupported container version {0}")]
    UnsupportedVersion(u16),
    #[error("header checksum mismatch (stored {stored:#010x}, computed {computed:#010x})")]
    ChecksumMismatch { stored: u32, computed: u32 },
    #[error("unknown pipeline id {0}")]
    UnknownPipeline(u8),
    #[error("staging request of {requested} bytes exceeds fast-tier capacity of {capacity} bytes")]
    StagingExceeded { requested: usize, capacity: usize },
    #[error("stage kinds mixed in one execution: expected {expected}")]
    MixedStages { expected: &'static str },
    #[error("allocation of {bytes} bytes failed")]
    AllocationFailed { bytes: usize },
    #[error("chunk {chunk}: {source}")]
    Chunk {
        chunk: usize,
        source: alloc::boxed::Box<Error>,
    },
}

pub type Result<T> = core::result::Result<T, Error>;

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub fn in_chunk(self, chunk: usize) -> Self {
        Error::Chunk {
            chunk,
            source: alloc::boxed::Box::new(self),
        }
    }
}
