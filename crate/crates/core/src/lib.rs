//! Portable scientific data-reduction kernels.
//!
//! The crate is `no_std` (with `alloc`) and carries everything that is pure
//! computation: the execution abstractions and the serial reference adapter,
//! the MGARD, ZFP fix-rate and Huffman reducers, the host/device pipeline
//! planning and timing model, and the chunked container format. Threads, file
//! IO and the command line live in the `hpdr` companion crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod bits;
pub mod codec;
pub mod container;
pub mod error;
pub mod exec;
pub mod huffman;
pub mod mgard;
pub mod pipeline;
pub mod tensor;
pub mod zfp;

pub use error::{Error, Result};
pub use tensor::{DType, TensorData, Values};
