//! Overlapped chunked reduction on the host/device execution model.
//!
//! Three workers stand in for the input copy channel, the compute engine
//! and the output copy channel. Each walks its task list from the
//! [`PipelinePlan`] in submission order and starts a task only once every
//! predecessor has finished. The "device" is a pair of input and a pair of
//! output staging buffers that tasks really copy through.
//!
//! With [`Transport::Simulated`] the same tasks run, with the same bytes,
//! but timestamps come from a virtual clock driven by a [`CostModel`].

use std::borrow::Cow;
use std::sync::{Condvar, Mutex};
use std::time::Instant;

use hpdr_core::codec::{compress_chunk, decompress_chunk, ReducerSpec};
use hpdr_core::container::{self, chunk_axis, ChunkEntry, ContainerHeader, Params};
use hpdr_core::exec::{ContextCache, DeviceAdapter};
use hpdr_core::pipeline::{
    adaptive_chunk_slabs, build_plan_with, fixed_chunk_slabs, Direction, PipelinePlan,
    PipelineTrace, Resource, TaskKind, ThroughputModel, TraceRecord, TransportModel,
};
use hpdr_core::{DType, Error, Result, TensorData};

pub const MB: usize = 1 << 20;
pub const DEFAULT_CHUNK_INIT: usize = 16 * MB;
pub const DEFAULT_DEVICE_BYTES: usize = 1 << 30;

/// Virtual task costs, in seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CostModel {
    /// Copies cost `beta_copy` per byte; compute runs at
    /// `throughput.throughput(raw chunk bytes)` bytes per second.
    Roofline {
        throughput: ThroughputModel,
        beta_copy: f64,
        metadata: f64,
    },
    /// The same cost for every chunk, by task kind.
    Constant {
        h2d: f64,
        compute: f64,
        metadata: f64,
        d2h: f64,
    },
}

impl CostModel {
    /// `copied` is the number of bytes the task moves, `raw` the chunk's
    /// uncompressed size.
    pub fn cost(&self, kind: TaskKind, copied: usize, raw: usize) -> f64 {
        match *self {
            CostModel::Roofline {
                throughput,
                beta_copy,
                metadata,
            } => match kind {
                TaskKind::H2D | TaskKind::D2H => copied as f64 * beta_copy,
                TaskKind::Compute => raw as f64 / throughput.throughput(raw as f64),
                TaskKind::Serialize | TaskKind::Deserialize => metadata,
            },
            CostModel::Constant {
                h2d,
                compute,
                metadata,
                d2h,
            } => match kind {
                TaskKind::H2D => h2d,
                TaskKind::Compute => compute,
                TaskKind::Serialize | TaskKind::Deserialize => metadata,
                TaskKind::D2H => d2h,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Transport {
    Real,
    Simulated(CostModel),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Chunking {
    Whole,
    /// Chunks of this many bytes, rounded down to whole slabs.
    Fixed(usize),
    /// Start at `init` bytes and grow with the throughput and transport
    /// models; `limit` defaults to a quarter of the device memory.
    Adaptive {
        init: usize,
        limit: Option<usize>,
    },
    /// Explicit slab counts per chunk.
    Slabs(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct HdemConfig {
    pub transport: Transport,
    /// 2 with reuse dependencies, or 3 with one pair per queue.
    pub buffer_pairs: usize,
    /// Device memory for the staging buffers; bounds the chunk size.
    pub device_bytes: usize,
}

impl Default for HdemConfig {
    fn default() -> Self {
        HdemConfig {
            transport: Transport::Real,
            buffer_pairs: 2,
            device_bytes: DEFAULT_DEVICE_BYTES,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub plan: PipelinePlan,
    pub trace: PipelineTrace,
    /// Duration of every task as scheduled (virtual or measured).
    pub costs: Vec<f64>,
    pub chunk_slabs: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct Reduced {
    pub bytes: Vec<u8>,
    pub report: RunReport,
}

#[derive(Debug, Clone)]
pub struct Reconstructed {
    pub data: TensorData,
    pub report: RunReport,
}

/// Bytes in one slab of `dims` cut along the chunking axis.
pub fn slab_bytes(dims: &[usize], dtype: DType) -> usize {
    let axis = chunk_axis(dims);
    dims.iter()
        .enumerate()
        .filter(|&(i, _)| i != axis)
        .map(|(_, &d)| d)
        .product::<usize>()
        * dtype.size()
}

fn chunk_dims(dims: &[usize], slabs: usize) -> Vec<usize> {
    let mut d = dims.to_vec();
    d[chunk_axis(dims)] = slabs;
    d
}

/// Reference result: chunks reduced one after another, no pipeline.
pub fn compress_sequential<A: DeviceAdapter>(
    adapter: &A,
    u: &TensorData,
    spec: &ReducerSpec,
    chunk_slabs: &[usize],
) -> Result<Vec<u8>> {
    let params = spec.params_for(u)?;
    let axis = chunk_axis(u.dims());
    let mut cache = ContextCache::default();
    let mut entries = Vec::with_capacity(chunk_slabs.len());
    let mut payloads = Vec::with_capacity(chunk_slabs.len());
    let mut at = 0;
    for (k, &n) in chunk_slabs.iter().enumerate() {
        let chunk = u.slab(axis, at, n).map_err(|e| e.in_chunk(k))?;
        payloads
            .push(compress_chunk(adapter, &mut cache, &params, &chunk).map_err(|e| e.in_chunk(k))?);
        entries.push(ChunkEntry {
            raw_offset: at as u64,
            raw_size: n as u64,
            ..Default::default()
        });
        at += n;
    }
    let header = ContainerHeader {
        version: container::VERSION,
        dtype: u.dtype(),
        dims: u.dims().to_vec(),
        params,
        chunks: entries,
    };
    let refs: Vec<&[u8]> = payloads.iter().map(Vec::as_slice).collect();
    container::write_container(&header, &refs)
}

/// Reference decompression, chunk by chunk.
pub fn decompress_sequential<A: DeviceAdapter>(adapter: &A, bytes: &[u8]) -> Result<TensorData> {
    let (h, views) = container::read_container(bytes)?;
    let parts = views
        .iter()
        .zip(&h.chunks)
        .enumerate()
        .map(|(k, (v, c))| {
            decompress_chunk(
                adapter,
                &h.params,
                v,
                &chunk_dims(&h.dims, c.raw_size as usize),
                h.dtype,
            )
            .map_err(|e| e.in_chunk(k))
        })
        .collect::<Result<Vec<_>>>()?;
    assemble(&h, parts)
}

fn assemble(h: &ContainerHeader, parts: Vec<TensorData>) -> Result<TensorData> {
    match parts.len() {
        0 => Err(Error::InvalidShape("container holds no chunks".into())),
        1 => Ok(parts.into_iter().next().unwrap()),
        _ => TensorData::concat(h.chunk_axis(), &parts),
    }
}

/// What a finished task reports back to the scheduler.
#[derive(Debug, Clone, Copy, Default)]
struct TaskIo {
    copied: usize,
    raw: usize,
}

struct Board {
    done: Vec<Option<(f64, f64)>>,
    cost: Vec<f64>,
    failed: Option<Error>,
}

/// Runs every task of `plan` on one thread per resource.
fn drive<F>(plan: &PipelinePlan, transport: &Transport, run: F) -> Result<(PipelineTrace, Vec<f64>)>
where
    F: Fn(usize) -> Result<TaskIo> + Sync,
{
    let preds = plan.predecessors();
    let board = Mutex::new(Board {
        done: vec![None; plan.tasks.len()],
        cost: vec![0.0; plan.tasks.len()],
        failed: None,
    });
    let wake = Condvar::new();
    let clock = Instant::now();
    let worker = |r: Resource| {
        for &t in &plan.resource_order[r as usize] {
            let ready_at = {
                let mut b = board.lock().unwrap();
                loop {
                    if b.failed.is_some() {
                        return;
                    }
                    if preds[t].iter().all(|&p| b.done[p].is_some()) {
                        break preds[t]
                            .iter()
                            .fold(0.0f64, |m, &p| m.max(b.done[p].unwrap().1));
                    }
                    b = wake.wait(b).unwrap();
                }
            };
            let wall_start = clock.elapsed().as_secs_f64();
            let result = run(t);
            let wall_end = clock.elapsed().as_secs_f64();
            let mut b = board.lock().unwrap();
            match result {
                Ok(io) => {
                    let (span, cost) = match transport {
                        Transport::Real => ((wall_start, wall_end), wall_end - wall_start),
                        Transport::Simulated(m) => {
                            let c = m.cost(plan.tasks[t].kind, io.copied, io.raw);
                            ((ready_at, ready_at + c), c)
                        }
                    };
                    b.done[t] = Some(span);
                    b.cost[t] = cost;
                }
                Err(e) => {
                    if b.failed.is_none() {
                        b.failed = Some(e.in_chunk(plan.tasks[t].chunk));
                    }
                }
            }
            drop(b);
            wake.notify_all();
        }
    };
    std::thread::scope(|s| {
        for r in Resource::ALL {
            let worker = &worker;
            std::thread::Builder::new()
                .name(format!("hpdr-{r:?}").to_lowercase())
                .spawn_scoped(s, move || worker(r))
                .expect("failed to start pipeline worker");
        }
    });
    let b = board.into_inner().unwrap();
    if let Some(e) = b.failed {
        return Err(e);
    }
    let records: Vec<TraceRecord> = plan
        .tasks
        .iter()
        .enumerate()
        .map(|(t, task)| {
            let (start, end) = b.done[t].unwrap();
            TraceRecord {
                task: t,
                kind: task.kind,
                chunk: task.chunk,
                queue: task.queue,
                resource: task.kind.resource(),
                start,
                end,
            }
        })
        .collect();
    Ok((PipelineTrace { records }, b.cost))
}

/// One reduction stream: adapter, device buffers, models and context cache.
pub struct Executor<A: DeviceAdapter> {
    adapter: A,
    pub config: HdemConfig,
    /// Compute throughput model driving adaptive chunk sizes in real mode.
    pub throughput: ThroughputModel,
    /// Copy cost estimate, refined from observed input copies in real mode.
    pub transport: TransportModel,
    cache: ContextCache,
}

impl<A: DeviceAdapter> Executor<A> {
    pub fn new(adapter: A, config: HdemConfig) -> Self {
        Executor {
            adapter,
            config,
            // Desk-scale defaults: 1 GB/s compute, 4 GB/s copies.
            throughput: ThroughputModel::saturated(1.0e9),
            transport: TransportModel::estimating(0.25e-9),
            cache: ContextCache::default(),
        }
    }

    pub fn adapter(&self) -> &A {
        &self.adapter
    }

    pub fn cache(&self) -> &ContextCache {
        &self.cache
    }

    pub fn chunk_limit(&self) -> usize {
        self.config.device_bytes / 4
    }

    /// Slab counts for `chunking` over data of shape `dims`.
    pub fn chunk_slabs(
        &self,
        dims: &[usize],
        dtype: DType,
        chunking: &Chunking,
    ) -> Result<Vec<usize>> {
        let total = dims[chunk_axis(dims)];
        let slab = slab_bytes(dims, dtype);
        let slabs = match chunking {
            Chunking::Whole => vec![total],
            Chunking::Fixed(bytes) => fixed_chunk_slabs(total, slab, *bytes),
            Chunking::Adaptive { init, limit } => {
                let limit = limit.unwrap_or(self.chunk_limit());
                let (model, transport) = match self.config.transport {
                    Transport::Simulated(CostModel::Roofline {
                        throughput,
                        beta_copy,
                        ..
                    }) => (throughput, TransportModel::fixed(beta_copy)),
                    _ => (self.throughput, self.transport),
                };
                adaptive_chunk_slabs(total, slab, *init, limit, &model, &transport)
            }
            Chunking::Slabs(s) => {
                if s.iter().sum::<usize>() != total || s.contains(&0) {
                    return Err(Error::InvalidParameter(format!(
                        "slab counts {s:?} do not cover {total} slabs"
                    )));
                }
                s.clone()
            }
        };
        Ok(slabs)
    }

    fn observe_copies(&mut self, report: &RunReport, bytes: impl Fn(usize) -> usize) {
        if self.config.transport != Transport::Real {
            return;
        }
        for r in report
            .trace
            .records
            .iter()
            .filter(|r| r.kind == TaskKind::H2D)
        {
            self.transport.observe(bytes(r.chunk), r.end - r.start);
        }
    }

    /// Chunked, overlapped reduction of `u` into a container.
    pub fn run_pipeline(
        &mut self,
        u: &TensorData,
        spec: &ReducerSpec,
        chunking: &Chunking,
    ) -> Result<Reduced> {
        let params = spec.params_for(u)?;
        let dims = u.dims().to_vec();
        let dtype = u.dtype();
        let axis = chunk_axis(&dims);
        let slabs = self.chunk_slabs(&dims, dtype, chunking)?;
        let n = slabs.len();
        let offsets: Vec<usize> = slabs
            .iter()
            .scan(0, |at, &s| {
                let o = *at;
                *at += s;
                Some(o)
            })
            .collect();
        let slab = slab_bytes(&dims, dtype);
        let plan = build_plan_with(n, Direction::Reduce, self.config.buffer_pairs);

        // Host side: the input, and an output slot per chunk.
        let host = if axis == 0 {
            Some(u.to_le_bytes())
        } else {
            None
        };
        let host_chunk = |k: usize| -> Result<Cow<'_, [u8]>> {
            match &host {
                Some(h) => Ok(Cow::Borrowed(
                    &h[offsets[k] * slab..(offsets[k] + slabs[k]) * slab],
                )),
                None => Ok(Cow::Owned(
                    u.slab(axis, offsets[k], slabs[k])?.to_le_bytes(),
                )),
            }
        };
        let out: Vec<Mutex<Vec<u8>>> = (0..n).map(|_| Mutex::new(Vec::new())).collect();
        let table: Mutex<Vec<ChunkEntry>> = Mutex::new(vec![ChunkEntry::default(); n]);
        let pairs = self.config.buffer_pairs;
        let input: Vec<Mutex<Vec<u8>>> = (0..pairs).map(|_| Mutex::new(Vec::new())).collect();
        let output: Vec<Mutex<Vec<u8>>> = (0..pairs).map(|_| Mutex::new(Vec::new())).collect();
        let cache = Mutex::new(&mut self.cache);
        let adapter = &self.adapter;

        let run = |t: usize| -> Result<TaskIo> {
            let task = plan.tasks[t];
            let k = task.chunk;
            let raw = slabs[k] * slab;
            match task.kind {
                TaskKind::H2D => {
                    let src = host_chunk(k)?;
                    let mut dst = input[task.buffer].lock().unwrap();
                    dst.clear();
                    dst.extend_from_slice(&src);
                    Ok(TaskIo { copied: raw, raw })
                }
                TaskKind::Compute => {
                    let src = input[task.buffer].lock().unwrap();
                    let chunk =
                        TensorData::from_le_bytes(chunk_dims(&dims, slabs[k]), dtype, &src)?;
                    drop(src);
                    let payload =
                        compress_chunk(adapter, &mut cache.lock().unwrap(), &params, &chunk)?;
                    let mut dst = output[task.buffer].lock().unwrap();
                    dst.clear();
                    dst.extend_from_slice(&payload);
                    Ok(TaskIo { copied: 0, raw })
                }
                TaskKind::Serialize => {
                    let len = output[task.buffer].lock().unwrap().len();
                    table.lock().unwrap()[k] = ChunkEntry {
                        raw_offset: offsets[k] as u64,
                        raw_size: slabs[k] as u64,
                        payload_offset: 0,
                        payload_size: len as u64,
                    };
                    Ok(TaskIo {
                        copied: std::mem::size_of::<ChunkEntry>(),
                        raw,
                    })
                }
                TaskKind::D2H => {
                    let src = output[task.buffer].lock().unwrap();
                    let mut dst = out[k].lock().unwrap();
                    dst.clear();
                    dst.extend_from_slice(&src);
                    Ok(TaskIo {
                        copied: src.len(),
                        raw,
                    })
                }
                TaskKind::Deserialize => unreachable!("not part of a reduction"),
            }
        };
        let (trace, costs) = drive(&plan, &self.config.transport, run)?;

        let chunks = table.into_inner().unwrap();
        let payloads: Vec<Vec<u8>> = out.into_iter().map(|m| m.into_inner().unwrap()).collect();
        let header = ContainerHeader {
            version: container::VERSION,
            dtype,
            dims,
            params,
            chunks,
        };
        let refs: Vec<&[u8]> = payloads.iter().map(Vec::as_slice).collect();
        let bytes = container::write_container(&header, &refs)?;
        let report = RunReport {
            plan,
            trace,
            costs,
            chunk_slabs: slabs.clone(),
        };
        self.observe_copies(&report, |k| slabs[k] * slab);
        Ok(Reduced { bytes, report })
    }

    /// Overlapped reconstruction of a container.
    pub fn reconstruct(&mut self, bytes: &[u8]) -> Result<Reconstructed> {
        let (h, views) = container::read_container(bytes)?;
        let n = h.chunks.len();
        if n == 0 {
            return Err(Error::InvalidShape("container holds no chunks".into()));
        }
        let slab = slab_bytes(&h.dims, h.dtype);
        let plan = build_plan_with(n, Direction::Reconstruct, self.config.buffer_pairs);
        let pairs = self.config.buffer_pairs;
        let input: Vec<Mutex<Vec<u8>>> = (0..pairs).map(|_| Mutex::new(Vec::new())).collect();
        let output: Vec<Mutex<Vec<u8>>> = (0..pairs).map(|_| Mutex::new(Vec::new())).collect();
        let out: Vec<Mutex<Vec<u8>>> = (0..n).map(|_| Mutex::new(Vec::new())).collect();
        let adapter = &self.adapter;
        let run = |t: usize| -> Result<TaskIo> {
            let task = plan.tasks[t];
            let k = task.chunk;
            let entry = h.chunks[k];
            let raw = entry.raw_size as usize * slab;
            match task.kind {
                TaskKind::H2D => {
                    let mut dst = input[task.buffer].lock().unwrap();
                    dst.clear();
                    dst.extend_from_slice(views[k]);
                    Ok(TaskIo {
                        copied: views[k].len(),
                        raw,
                    })
                }
                TaskKind::Deserialize => {
                    if input[task.buffer].lock().unwrap().len() as u64 != entry.payload_size {
                        return Err(Error::Corrupt {
                            bit_offset: entry.payload_offset * 8,
                            reason: "staged payload disagrees with the chunk table",
                        });
                    }
                    Ok(TaskIo {
                        copied: std::mem::size_of::<ChunkEntry>(),
                        raw,
                    })
                }
                TaskKind::Compute => {
                    let src = input[task.buffer].lock().unwrap();
                    let t = decompress_chunk(
                        adapter,
                        &h.params,
                        &src,
                        &chunk_dims(&h.dims, entry.raw_size as usize),
                        h.dtype,
                    )?;
                    drop(src);
                    let mut dst = output[task.buffer].lock().unwrap();
                    *dst = t.to_le_bytes();
                    Ok(TaskIo { copied: 0, raw })
                }
                TaskKind::D2H => {
                    let src = output[task.buffer].lock().unwrap();
                    let mut dst = out[k].lock().unwrap();
                    dst.clear();
                    dst.extend_from_slice(&src);
                    Ok(TaskIo {
                        copied: src.len(),
                        raw,
                    })
                }
                TaskKind::Serialize => unreachable!("not part of a reconstruction"),
            }
        };
        let (trace, costs) = drive(&plan, &self.config.transport, run)?;
        let parts = out
            .into_iter()
            .zip(&h.chunks)
            .map(|(m, c)| {
                TensorData::from_le_bytes(
                    chunk_dims(&h.dims, c.raw_size as usize),
                    h.dtype,
                    &m.into_inner().unwrap(),
                )
            })
            .collect::<Result<Vec<_>>>()?;
        let data = assemble(&h, parts)?;
        let chunk_slabs: Vec<usize> = h.chunks.iter().map(|c| c.raw_size as usize).collect();
        let report = RunReport {
            plan,
            trace,
            costs,
            chunk_slabs,
        };
        let sizes: Vec<usize> = views.iter().map(|v| v.len()).collect();
        self.observe_copies(&report, |k| sizes[k]);
        Ok(Reconstructed { data, report })
    }
}

/// Describes a container without touching payload bytes.
pub fn params_summary(p: &Params) -> String {
    match *p {
        Params::Huffman { dict_size } => format!("dict_size={dict_size}"),
        Params::Zfp { rate } => format!("rate={rate}"),
        Params::Mgard {
            eb_rel,
            dict_size,
            min,
            max,
        } => format!("eb_rel={eb_rel:e} dict_size={dict_size} min={min} max={max}"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use hpdr_core::exec::Serial;
    use hpdr_core::pipeline::{buffer_conflicts, check_trace, simulate_makespan};

    fn field(dims: &[usize]) -> TensorData {
        let n: usize = dims.iter().product();
        TensorData::from_f32(
            dims.to_vec(),
            (0..n).map(|i| ((i as f32) * 0.013).sin() * 3.0).collect(),
        )
        .unwrap()
    }

    #[test]
    fn whole_chunk_matches_direct_container() {
        let u = field(&[24, 10]);
        let spec = ReducerSpec::Zfp { rate: 8 };
        let mut ex = Executor::new(Serial::new(), HdemConfig::default());
        let r = ex.run_pipeline(&u, &spec, &Chunking::Whole).unwrap();
        assert_eq!(
            r.bytes,
            compress_sequential(&Serial::new(), &u, &spec, &[24]).unwrap()
        );
        check_trace(&r.report.plan, &r.report.trace).unwrap();
    }

    #[test]
    fn simulated_run_reproduces_the_event_simulation() {
        let u = field(&[40, 8, 8]);
        let spec = ReducerSpec::Mgard {
            eb_rel: 1e-3,
            dict_size: 4096,
        };
        let cm = CostModel::Roofline {
            throughput: ThroughputModel::saturated(1.0e6),
            beta_copy: 2.0e-7,
            metadata: 1.0e-4,
        };
        let cfg = HdemConfig {
            transport: Transport::Simulated(cm),
            ..HdemConfig::default()
        };
        let mut ex = Executor::new(Serial::new(), cfg);
        let r = ex
            .run_pipeline(&u, &spec, &Chunking::Fixed(7 * 256))
            .unwrap();
        assert_eq!(r.report.chunk_slabs.len(), 6);
        let sim = simulate_makespan(&r.report.plan, &r.report.costs);
        assert_eq!(sim.records, r.report.trace.records);
        assert!(buffer_conflicts(&r.report.plan, &r.report.trace).is_empty());
        let slabs = r.report.chunk_slabs.clone();
        assert_eq!(
            r.bytes,
            compress_sequential(&Serial::new(), &u, &spec, &slabs).unwrap()
        );

        let back = ex.reconstruct(&r.bytes).unwrap();
        assert_eq!(
            back.data,
            decompress_sequential(&Serial::new(), &r.bytes).unwrap()
        );
        let sim = simulate_makespan(&back.report.plan, &back.report.costs);
        assert_eq!(sim.records, back.report.trace.records);
    }

    #[test]
    fn chunks_along_an_inner_axis() {
        let u = field(&[3, 50]);
        let spec = ReducerSpec::Mgard {
            eb_rel: 1e-2,
            dict_size: 4096,
        };
        let mut ex = Executor::new(Serial::new(), HdemConfig::default());
        let r = ex
            .run_pipeline(&u, &spec, &Chunking::Slabs(vec![20, 20, 10]))
            .unwrap();
        let back = ex.reconstruct(&r.bytes).unwrap().data;
        let (lo, hi) = u.float_range().unwrap();
        let err = u
            .to_f64()
            .unwrap()
            .iter()
            .zip(back.to_f64().unwrap())
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(err <= 1e-2 * (hi - lo));
    }

    #[test]
    fn reducer_errors_carry_the_chunk() {
        let u = TensorData::from_f64(vec![6], vec![1.0, 2.0, 3.0, 4.0, f64::NAN, 6.0]).unwrap();
        let spec = ReducerSpec::Zfp { rate: 8 };
        let mut ex = Executor::new(Serial::new(), HdemConfig::default());
        let e = ex
            .run_pipeline(&u, &spec, &Chunking::Slabs(vec![2, 2, 2]))
            .unwrap_err();
        assert!(matches!(e, Error::Chunk { chunk: 2, .. }), "{e:?}");
    }
}
