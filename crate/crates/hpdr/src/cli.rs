//! Command line front end: `compress`, `decompress`, `info` and `bench`.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context as _, Result};
use clap::{error::ErrorKind, Args, CommandFactory, Parser, Subcommand, ValueEnum};
use hpdr_core::codec::ReducerSpec;
use hpdr_core::container::{read_header, Params};
use hpdr_core::pipeline::{overlap_ratio, PipelineTrace, ThroughputModel, DEFAULT_FIT_CUTOFF};
use hpdr_core::{DType, Error as CoreError, TensorData};

use crate::bench::{sweep, write_bench_csv};
use crate::executor::{
    params_summary, Chunking, CostModel, Executor, HdemConfig, Transport, DEFAULT_CHUNK_INIT, MB,
};
use crate::synth::{field, FieldKind};
use crate::threaded::{default_threads, ThreadedCpu};
use crate::trace::write_trace_csv;

#[derive(Debug, Parser)]
#[command(
    name = "hpdr",
    version,
    about = "Chunked, overlapped scientific data reduction"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Reduce a raw row-major binary file into a container.
    Compress(CompressArgs),
    /// Rebuild the raw binary file from a container.
    Decompress(DecompressArgs),
    /// Print the container header.
    Info {
        #[arg(long)]
        input: PathBuf,
    },
    /// Sweep chunk sizes and emit one CSV row per size and direction.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PipelineArg {
    Mgard,
    Zfp,
    Huffman,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DTypeArg {
    F32,
    F64,
    U8,
    U16,
    U32,
}

impl From<DTypeArg> for DType {
    fn from(d: DTypeArg) -> DType {
        match d {
            DTypeArg::F32 => DType::F32,
            DTypeArg::F64 => DType::F64,
            DTypeArg::U8 => DType::U8,
            DTypeArg::U16 => DType::U16,
            DTypeArg::U32 => DType::U32,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TransportArg {
    Real,
    Sim,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DatasetArg {
    Smooth,
    Random,
}

#[derive(Debug, Clone, Args)]
pub struct ReducerArgs {
    #[arg(long, value_enum)]
    pub pipeline: PipelineArg,
    /// Relative error bound (mgard).
    #[arg(long)]
    pub eb: Option<f64>,
    /// Bits per value (zfp).
    #[arg(long)]
    pub rate: Option<u8>,
    /// Dictionary size (mgard, huffman).
    #[arg(long)]
    pub dict: Option<u32>,
}

/// Cost model of the simulated transport.
#[derive(Debug, Clone, Args)]
pub struct SimArgs {
    /// Saturated compute throughput, GB/s.
    #[arg(long, default_value_t = 2.0)]
    pub sim_gamma_gbps: f64,
    /// Compute throughput extrapolated to an empty chunk, GB/s.
    #[arg(long, default_value_t = 0.2)]
    pub sim_floor_gbps: f64,
    /// Chunk size at which compute saturates, MB.
    #[arg(long, default_value_t = 64.0)]
    pub sim_threshold_mb: f64,
    /// Host/device copy throughput, GB/s.
    #[arg(long, default_value_t = 4.0)]
    pub sim_copy_gbps: f64,
}

impl SimArgs {
    pub fn model(&self) -> ThroughputModel {
        let gamma = self.sim_gamma_gbps * 1e9;
        let beta = self.sim_floor_gbps * 1e9;
        let c = self.sim_threshold_mb * MB as f64;
        ThroughputModel {
            alpha: (gamma - beta) / c,
            beta,
            gamma,
            c_threshold: c,
            f: DEFAULT_FIT_CUTOFF,
        }
    }

    pub fn cost_model(&self) -> CostModel {
        CostModel::Roofline {
            throughput: self.model(),
            beta_copy: 1.0 / (self.sim_copy_gbps * 1e9),
            metadata: 0.0,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Worker threads; falls back to HPDR_THREADS, then the core count.
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long, value_enum, default_value_t = TransportArg::Real)]
    pub transport: TransportArg,
    /// Device memory for staging buffers, MB.
    #[arg(long, default_value_t = 1024.0)]
    pub device_mb: f64,
    #[command(flatten)]
    pub sim: SimArgs,
}

#[derive(Debug, Clone, Args)]
pub struct CompressArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, value_enum)]
    pub dtype: DTypeArg,
    /// Extents, slowest varying first, e.g. 64x64x64.
    #[arg(long)]
    pub dims: String,
    #[command(flatten)]
    pub reducer: ReducerArgs,
    /// Fixed chunk size, MB.
    #[arg(long, conflicts_with = "adaptive")]
    pub chunk_mb: Option<f64>,
    /// Adaptive chunk sizing.
    #[arg(long)]
    pub adaptive: bool,
    /// First adaptive chunk, MB.
    #[arg(long, requires = "adaptive")]
    pub chunk_init_mb: Option<f64>,
    #[command(flatten)]
    pub run: RunArgs,
    /// Write the task timeline as CSV.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Decompress the result in memory and check it against the input.
    #[arg(long)]
    pub verify: bool,
}

#[derive(Debug, Clone, Args)]
pub struct DecompressArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    #[command(flatten)]
    pub run: RunArgs,
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Original raw file to check the reconstruction against.
    #[arg(long)]
    pub verify: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub reducer: ReducerArgs,
    /// Raw input; a synthetic field is used when absent.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = DatasetArg::Smooth)]
    pub dataset: DatasetArg,
    #[arg(long, value_enum, default_value_t = DTypeArg::F32)]
    pub dtype: DTypeArg,
    #[arg(long, default_value = "64x64x64")]
    pub dims: String,
    #[arg(long, default_value_t = 0.125)]
    pub min_mb: f64,
    #[arg(long, default_value_t = 1.0)]
    pub max_mb: f64,
    /// Fit and print the throughput model.
    #[arg(long)]
    pub fit: bool,
    /// CSV destination; standard output when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[command(flatten)]
    pub run: RunArgs,
}

pub fn parse_dims(s: &str) -> Result<Vec<usize>> {
    let dims = s
        .split(['x', 'X', ','])
        .map(|p| {
            p.trim()
                .parse::<usize>()
                .with_context(|| format!("bad extent '{p}' in '{s}'"))
        })
        .collect::<Result<Vec<_>>>()?;
    hpdr_core::tensor::validate_dims(&dims)?;
    Ok(dims)
}

fn usage_error(msg: &str) -> ! {
    Cli::command()
        .error(ErrorKind::MissingRequiredArgument, msg)
        .exit()
}

fn reducer_spec(r: &ReducerArgs) -> Result<ReducerSpec> {
    Ok(match r.pipeline {
        PipelineArg::Mgard => {
            let Some(eb) = r.eb else {
                usage_error("--pipeline mgard requires --eb REL");
            };
            ReducerSpec::Mgard {
                eb_rel: eb,
                dict_size: r.dict.unwrap_or(hpdr_core::mgard::DEFAULT_DICT_SIZE as u32),
            }
        }
        PipelineArg::Zfp => {
            let Some(rate) = r.rate else {
                usage_error("--pipeline zfp requires --rate BITS");
            };
            ReducerSpec::Zfp { rate }
        }
        PipelineArg::Huffman => ReducerSpec::Huffman {
            dict_size: match r.dict {
                Some(d) => Some(u16::try_from(d).context("--dict must fit 16 bits for huffman")?),
                None => None,
            },
        },
    })
}

fn threads(run: &RunArgs) -> Result<usize> {
    if let Some(t) = run.threads {
        return Ok(t);
    }
    match std::env::var("HPDR_THREADS") {
        Ok(v) => v
            .trim()
            .parse()
            .with_context(|| format!("HPDR_THREADS='{v}' is not a count")),
        Err(_) => Ok(default_threads()),
    }
}

fn executor(run: &RunArgs) -> Result<Executor<ThreadedCpu>> {
    let transport = match run.transport {
        TransportArg::Real => Transport::Real,
        TransportArg::Sim => Transport::Simulated(run.sim.cost_model()),
    };
    let config = HdemConfig {
        transport,
        device_bytes: (run.device_mb * MB as f64) as usize,
        ..HdemConfig::default()
    };
    let mut ex = Executor::new(ThreadedCpu::new(threads(run)?), config);
    if run.transport == TransportArg::Sim {
        ex.throughput = run.sim.model();
    }
    Ok(ex)
}

/// Seconds the run took: virtual makespan under the simulated transport.
fn elapsed(run: &RunArgs, t0: Instant, trace: &PipelineTrace) -> f64 {
    match run.transport {
        TransportArg::Real => t0.elapsed().as_secs_f64(),
        TransportArg::Sim => trace.makespan(),
    }
}

fn read_raw(path: &Path, dims: &[usize], dtype: DType) -> Result<TensorData> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let expected = dims.iter().product::<usize>() * dtype.size();
    if bytes.len() != expected {
        bail!(
            "{} holds {} bytes but dims {:?} of {:?} need {}",
            path.display(),
            bytes.len(),
            dims,
            dtype,
            expected
        );
    }
    Ok(TensorData::from_le_bytes(dims.to_vec(), dtype, &bytes)?)
}

fn write_trace(path: &Option<PathBuf>, trace: &PipelineTrace) -> Result<()> {
    if let Some(p) = path {
        let f = File::create(p).with_context(|| format!("creating {}", p.display()))?;
        write_trace_csv(trace, BufWriter::new(f))?;
    }
    Ok(())
}

/// Checks a reconstruction: the error bound for mgard, exact equality for
/// huffman, and a report only for zfp. Returns the maximum error.
pub fn verify(params: &Params, original: &TensorData, rebuilt: &TensorData) -> Result<f64> {
    if original.dims() != rebuilt.dims() || original.dtype() != rebuilt.dtype() {
        bail!("verify: shape or dtype differs from the original");
    }
    match *params {
        Params::Huffman { .. } => {
            if original != rebuilt {
                bail!("verify: huffman round trip is not bit-exact");
            }
            Ok(0.0)
        }
        Params::Mgard {
            eb_rel, min, max, ..
        } => {
            let err = max_abs_error(original, rebuilt)?;
            let bound = eb_rel * (max - min);
            if err > bound {
                bail!("verify: max error {err:e} exceeds bound {bound:e}");
            }
            Ok(err)
        }
        Params::Zfp { .. } => max_abs_error(original, rebuilt),
    }
}

fn max_abs_error(a: &TensorData, b: &TensorData) -> Result<f64> {
    Ok(a.to_f64()?
        .iter()
        .zip(b.to_f64()?)
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs())))
}

fn compress(a: &CompressArgs) -> Result<()> {
    let spec = reducer_spec(&a.reducer)?;
    let dims = parse_dims(&a.dims)?;
    let dtype: DType = a.dtype.into();
    let u = read_raw(&a.input, &dims, dtype)?;
    let mut ex = executor(&a.run)?;
    let chunking = if a.adaptive {
        Chunking::Adaptive {
            init: a
                .chunk_init_mb
                .map_or(DEFAULT_CHUNK_INIT, |m| (m * MB as f64) as usize),
            limit: None,
        }
    } else if let Some(mb) = a.chunk_mb {
        Chunking::Fixed((mb * MB as f64) as usize)
    } else {
        Chunking::Whole
    };
    let t0 = Instant::now();
    let r = ex.run_pipeline(&u, &spec, &chunking)?;
    let wall = elapsed(&a.run, t0, &r.report.trace);
    std::fs::write(&a.output, &r.bytes)
        .with_context(|| format!("writing {}", a.output.display()))?;
    write_trace(&a.trace, &r.report.trace)?;
    let raw = u.byte_len();
    println!(
        "bytes_in={} bytes_out={} ratio={:.4} throughput_mbps={:.2} chunks={} overlap={:.3}",
        raw,
        r.bytes.len(),
        raw as f64 / r.bytes.len() as f64,
        raw as f64 / MB as f64 / wall.max(1e-9),
        r.report.chunk_slabs.len(),
        overlap_ratio(&r.report.trace)
    );
    if a.verify {
        let (h, _) = read_header(&r.bytes)?;
        let back = ex.reconstruct(&r.bytes)?;
        let err = verify(&h.params, &u, &back.data)?;
        println!("verify ok max_abs_error={err:e}");
    }
    Ok(())
}

fn decompress(a: &DecompressArgs) -> Result<()> {
    let bytes =
        std::fs::read(&a.input).with_context(|| format!("reading {}", a.input.display()))?;
    let mut ex = executor(&a.run)?;
    let t0 = Instant::now();
    let r = ex.reconstruct(&bytes)?;
    let wall = elapsed(&a.run, t0, &r.report.trace);
    let raw = r.data.to_le_bytes();
    std::fs::write(&a.output, &raw).with_context(|| format!("writing {}", a.output.display()))?;
    write_trace(&a.trace, &r.report.trace)?;
    println!(
        "bytes_in={} bytes_out={} ratio={:.4} throughput_mbps={:.2} chunks={}",
        bytes.len(),
        raw.len(),
        raw.len() as f64 / bytes.len() as f64,
        raw.len() as f64 / MB as f64 / wall.max(1e-9),
        r.report.chunk_slabs.len()
    );
    if let Some(orig) = &a.verify {
        let (h, _) = read_header(&bytes)?;
        let original = read_raw(orig, &h.dims, h.dtype)?;
        let err = verify(&h.params, &original, &r.data)?;
        println!("verify ok max_abs_error={err:e}");
    }
    Ok(())
}

/// Reads only as much of the file as the header needs.
fn read_header_prefix(path: &Path) -> Result<(hpdr_core::container::ContainerHeader, usize)> {
    let mut f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut buf = Vec::new();
    let mut want = 4096usize;
    loop {
        let have = buf.len();
        buf.resize(want, 0);
        let mut got = have;
        while got < want {
            let n = f.read(&mut buf[got..])?;
            if n == 0 {
                break;
            }
            got += n;
        }
        buf.truncate(got);
        match read_header(&buf) {
            Err(CoreError::Truncated { needed, .. }) if got == want && needed > got => {
                want = needed.max(2 * want);
            }
            other => return Ok(other?),
        }
    }
}

fn info(input: &Path) -> Result<()> {
    let (h, len) = read_header_prefix(input)?;
    let mut out = std::io::stdout().lock();
    writeln!(out, "pipeline: {}", h.pipeline().name())?;
    writeln!(out, "version: {}", h.version)?;
    writeln!(out, "dtype: {:?}", h.dtype)?;
    writeln!(
        out,
        "dims: {}",
        h.dims
            .iter()
            .map(|d| d.to_string())
            .collect::<Vec<_>>()
            .join("x")
    )?;
    writeln!(out, "params: {}", params_summary(&h.params))?;
    writeln!(out, "header_bytes: {len}")?;
    writeln!(out, "chunks: {}", h.chunks.len())?;
    let payload: u64 = h.chunks.iter().map(|c| c.payload_size).sum();
    let raw = h.dims.iter().product::<usize>() * h.dtype.size();
    writeln!(out, "raw_bytes: {raw}")?;
    writeln!(out, "payload_bytes: {payload}")?;
    for (k, c) in h.chunks.iter().enumerate() {
        writeln!(
            out,
            "chunk {k}: raw [{}, {}) payload {} bytes at {}",
            c.raw_offset,
            c.raw_offset + c.raw_size,
            c.payload_size,
            c.payload_offset
        )?;
    }
    Ok(())
}

fn bench(a: &BenchArgs) -> Result<()> {
    let spec = reducer_spec(&a.reducer)?;
    let dims = parse_dims(&a.dims)?;
    let dtype: DType = a.dtype.into();
    let (u, name) = match &a.input {
        Some(p) => (read_raw(p, &dims, dtype)?, p.display().to_string()),
        None => {
            let kind = match a.dataset {
                DatasetArg::Smooth => FieldKind::Smooth,
                DatasetArg::Random => FieldKind::Random,
            };
            (field(kind, &dims, dtype, 7)?, kind.name().to_string())
        }
    };
    let mut ex = executor(&a.run)?;
    let to_bytes = |mb: f64| (mb * MB as f64) as usize;
    let s = sweep(
        &mut ex,
        &u,
        &name,
        &spec,
        to_bytes(a.min_mb),
        to_bytes(a.max_mb),
    )?;
    match &a.output {
        Some(p) => write_bench_csv(&s.records, BufWriter::new(File::create(p)?))?,
        None => write_bench_csv(&s.records, std::io::stdout().lock())?,
    }
    if a.fit {
        let m = s.fit(DEFAULT_FIT_CUTOFF)?;
        // Parameters go to stderr so the CSV on stdout stays clean.
        eprintln!(
            "fit alpha={:.6e} beta={:.6e} gamma={:.6e} c_threshold={:.6e}",
            m.alpha, m.beta, m.gamma, m.c_threshold
        );
    }
    Ok(())
}

pub fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Compress(a) => compress(a),
        Command::Decompress(a) => decompress(a),
        Command::Info { input } => info(input),
        Command::Bench(a) => bench(a),
    }
}

/// Process entry: usage errors exit with 2, runtime errors with 1.
pub fn main() -> i32 {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}
