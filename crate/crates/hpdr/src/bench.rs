//! Chunk-size sweeps and throughput model fitting.

use std::io::Write;
use std::time::Instant;

use hpdr_core::codec::ReducerSpec;
use hpdr_core::exec::DeviceAdapter;
use hpdr_core::pipeline::{fit_throughput_model, overlap_ratio, TaskKind, ThroughputModel};
use hpdr_core::{Result, TensorData};

use crate::executor::{Chunking, Executor, RunReport, Transport};

pub const BENCH_COLUMNS: [&str; 10] = [
    "pipeline",
    "dataset",
    "chunk_bytes",
    "direction",
    "wall_s",
    "bytes_in",
    "bytes_out",
    "throughput",
    "ratio",
    "overlap",
];

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRecord {
    pub pipeline: String,
    pub dataset: String,
    pub chunk_bytes: usize,
    pub direction: &'static str,
    /// Makespan: wall clock for real transport, virtual for simulated.
    pub wall_s: f64,
    pub bytes_in: usize,
    pub bytes_out: usize,
    /// Uncompressed bytes per second, in either direction.
    pub throughput: f64,
    /// Uncompressed over compressed size, in either direction.
    pub ratio: f64,
    pub overlap: f64,
}

impl BenchRecord {
    #[allow(clippy::too_many_arguments)]
    fn new(
        pipeline: &str,
        dataset: &str,
        chunk_bytes: usize,
        direction: &'static str,
        wall_s: f64,
        bytes_in: usize,
        bytes_out: usize,
        overlap: f64,
    ) -> Self {
        let (raw, packed) = if direction == "reduce" {
            (bytes_in, bytes_out)
        } else {
            (bytes_out, bytes_in)
        };
        BenchRecord {
            pipeline: pipeline.to_string(),
            dataset: dataset.to_string(),
            chunk_bytes,
            direction,
            wall_s,
            bytes_in,
            bytes_out,
            throughput: raw as f64 / wall_s,
            ratio: raw as f64 / packed as f64,
            overlap,
        }
    }
}

/// Compute throughput of the first chunk of a run, as `(chunk bytes,
/// bytes per second)`.
pub fn first_chunk_sample(report: &RunReport, slab_bytes: usize) -> Option<(f64, f64)> {
    let t = report.plan.task_id(0, TaskKind::Compute);
    let bytes = (report.chunk_slabs[0] * slab_bytes) as f64;
    let dt = report.costs[t];
    (dt > 0.0).then_some((bytes, bytes / dt))
}

#[derive(Debug, Clone)]
pub struct Sweep {
    pub records: Vec<BenchRecord>,
    /// One `(chunk bytes, compute throughput)` sample per chunk size.
    pub samples: Vec<(f64, f64)>,
}

impl Sweep {
    pub fn fit(&self, f: f64) -> Result<ThroughputModel> {
        fit_throughput_model(&self.samples, f)
    }
}

/// Runs reduction and reconstruction with fixed chunks of every size from
/// `min_bytes` doubling up to `max_bytes`.
pub fn sweep<A: DeviceAdapter>(
    ex: &mut Executor<A>,
    u: &TensorData,
    dataset: &str,
    spec: &ReducerSpec,
    min_bytes: usize,
    max_bytes: usize,
) -> Result<Sweep> {
    let pipeline = spec.params_for(u)?.pipeline().name();
    let slab = crate::executor::slab_bytes(u.dims(), u.dtype());
    let raw = u.byte_len();
    let mut records = Vec::new();
    let mut samples: Vec<(f64, f64)> = Vec::new();
    let mut c = min_bytes.max(1);
    while c <= max_bytes {
        let t0 = Instant::now();
        let r = ex.run_pipeline(u, spec, &Chunking::Fixed(c))?;
        let reduce_wall = t0.elapsed().as_secs_f64();
        let t0 = Instant::now();
        let back = ex.reconstruct(&r.bytes)?;
        let rebuild_wall = t0.elapsed().as_secs_f64();
        let simulated = matches!(ex.config.transport, Transport::Simulated(_));
        let pick = |wall: f64, rep: &RunReport| {
            if simulated {
                rep.trace.makespan()
            } else {
                wall
            }
        };
        records.push(BenchRecord::new(
            pipeline,
            dataset,
            c,
            "reduce",
            pick(reduce_wall, &r.report),
            raw,
            r.bytes.len(),
            overlap_ratio(&r.report.trace),
        ));
        records.push(BenchRecord::new(
            pipeline,
            dataset,
            c,
            "reconstruct",
            pick(rebuild_wall, &back.report),
            r.bytes.len(),
            raw,
            overlap_ratio(&back.report.trace),
        ));
        if let Some(s) = first_chunk_sample(&r.report, slab) {
            // Sizes that round to the same slab count add no information.
            if samples.last().is_none_or(|l| s.0 > l.0) {
                samples.push(s);
            }
        }
        c = c.saturating_mul(2);
    }
    Ok(Sweep { records, samples })
}

pub fn write_bench_csv<W: Write>(records: &[BenchRecord], w: W) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(BENCH_COLUMNS)?;
    for r in records {
        out.write_record([
            r.pipeline.clone(),
            r.dataset.clone(),
            r.chunk_bytes.to_string(),
            r.direction.to_string(),
            format!("{:.9}", r.wall_s),
            r.bytes_in.to_string(),
            r.bytes_out.to_string(),
            format!("{:.6e}", r.throughput),
            format!("{:.6}", r.ratio),
            format!("{:.6}", r.overlap),
        ])?;
    }
    out.flush()?;
    Ok(())
}
