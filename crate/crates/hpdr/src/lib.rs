//! Host-side companion to `hpdr-core`: a threaded device adapter, the
//! overlapped pipeline executor, trace export, synthetic fields, the
//! benchmark harness and the command line front end.

pub mod bench;
pub mod cli;
pub mod executor;
pub mod synth;
pub mod threaded;
pub mod trace;

pub use executor::{
    compress_sequential, decompress_sequential, Chunking, CostModel, Executor, HdemConfig,
    Reconstructed, Reduced, RunReport, Transport,
};
pub use threaded::ThreadedCpu;
