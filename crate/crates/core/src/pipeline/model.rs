use alloc::vec::Vec;

use crate::{Error, Result};

pub const DEFAULT_FIT_CUTOFF: f64 = 0.1;
pub const DEFAULT_EMA_WEIGHT: f64 = 0.25;

/// Samples within this fraction of the largest chunk's throughput count as
/// saturated when fitting.
const SATURATION_BAND: f64 = 0.9;

/// Roofline-style reduction throughput model, in bytes per second:
/// `alpha * c + beta` below `c_threshold`, `gamma` from there on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThroughputModel {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub c_threshold: f64,
    /// Fit cutoff: profiled chunks slower than `f * gamma` are ignored, and
    /// the linear part never predicts less than that.
    pub f: f64,
}

impl ThroughputModel {
    /// Throughput independent of chunk size.
    pub fn saturated(gamma: f64) -> Self {
        ThroughputModel {
            alpha: 0.0,
            beta: gamma,
            gamma,
            c_threshold: 0.0,
            f: DEFAULT_FIT_CUTOFF,
        }
    }

    pub fn throughput(&self, c: f64) -> f64 {
        if c >= self.c_threshold {
            self.gamma
        } else {
            (self.alpha * c + self.beta).max(self.f * self.gamma)
        }
    }
}

/// Fits a [`ThroughputModel`] to `(chunk bytes, bytes per second)` samples
/// sorted by increasing size.
///
/// The largest chunk sets `gamma`. Walking towards smaller chunks, samples
/// near `gamma` are treated as saturated, the following ones feed a least
/// squares line, and the walk stops at the first sample slower than
/// `f * gamma`. The threshold is where that line reaches `gamma`.
pub fn fit_throughput_model(samples: &[(f64, f64)], f: f64) -> Result<ThroughputModel> {
    if samples.len() < 3 {
        return Err(Error::param("at least three profiling samples are needed"));
    }
    if !(f > 0.0 && f < 1.0) {
        return Err(Error::param("fit cutoff must lie in (0, 1)"));
    }
    if samples
        .iter()
        .any(|&(c, p)| !(c > 0.0 && p > 0.0 && c.is_finite() && p.is_finite()))
    {
        return Err(Error::param(
            "sample sizes and throughputs must be positive",
        ));
    }
    if samples.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(Error::param("sample sizes must be strictly increasing"));
    }
    let gamma = samples[samples.len() - 1].1;
    let mut i = samples.len() - 1;
    while i > 0 && samples[i - 1].1 >= SATURATION_BAND * gamma {
        i -= 1;
    }
    let smallest_saturated = samples[i].0;
    let linear: Vec<(f64, f64)> = samples[..i]
        .iter()
        .rev()
        .take_while(|s| s.1 >= f * gamma)
        .copied()
        .collect();

    let flat = ThroughputModel {
        f,
        ..ThroughputModel::saturated(gamma)
    };
    if linear.len() < 2 {
        return Ok(flat);
    }
    let n = linear.len() as f64;
    let mx = linear.iter().map(|s| s.0).sum::<f64>() / n;
    let my = linear.iter().map(|s| s.1).sum::<f64>() / n;
    let sxx: f64 = linear.iter().map(|s| (s.0 - mx) * (s.0 - mx)).sum();
    let sxy: f64 = linear.iter().map(|s| (s.0 - mx) * (s.1 - my)).sum();
    let alpha = sxy / sxx;
    if alpha.is_nan() || alpha <= 0.0 {
        return Ok(flat);
    }
    let beta = my - alpha * mx;
    let largest_linear = linear[0].0;
    let c_threshold = ((gamma - beta) / alpha)
        .clamp(largest_linear, smallest_saturated.max(largest_linear))
        .max(0.0);
    // A noisy line can cross gamma past the first saturated sample; the
    // samples say that chunk is already saturated.
    Ok(ThroughputModel {
        alpha,
        beta,
        gamma,
        c_threshold,
        f,
    })
}

/// Host-to-device copy cost in seconds per byte.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransportModel {
    pub beta_copy: f64,
    /// Weight of a new observation; 0 keeps `beta_copy` fixed.
    pub ema_weight: f64,
}

impl TransportModel {
    pub fn fixed(beta_copy: f64) -> Self {
        assert!(beta_copy > 0.0, "copy cost must be positive");
        TransportModel {
            beta_copy,
            ema_weight: 0.0,
        }
    }

    pub fn estimating(initial_beta: f64) -> Self {
        TransportModel {
            ema_weight: DEFAULT_EMA_WEIGHT,
            ..Self::fixed(initial_beta)
        }
    }

    pub fn observe(&mut self, bytes: usize, seconds: f64) {
        if bytes == 0 || seconds.is_nan() || seconds <= 0.0 {
            return;
        }
        let w = self.ema_weight;
        self.beta_copy = (1.0 - w) * self.beta_copy + w * (seconds / bytes as f64);
    }

    /// Bytes that can be copied in `t` seconds.
    pub fn transferable(&self, t: f64) -> f64 {
        t / self.beta_copy
    }
}

/// Next chunk size in bytes: as much as can be copied while the current
/// chunk computes, capped by `c_limit` and `size_rest` and rounded down to
/// whole slabs. At least one slab is returned while data remains.
pub fn next_chunk_size(
    c_curr: usize,
    model: &ThroughputModel,
    transport: &TransportModel,
    c_limit: usize,
    size_rest: usize,
    slab_bytes: usize,
) -> usize {
    assert!(c_curr > 0 && slab_bytes > 0);
    if size_rest == 0 {
        return 0;
    }
    let t = c_curr as f64 / model.throughput(c_curr as f64);
    let budget = transport.transferable(t);
    // The small relative slack keeps products like gamma * beta = 1 from
    // losing a slab to rounding.
    let slabs = libm::floor(budget / slab_bytes as f64 * (1.0 + 1e-9));
    let formula = if slabs >= (usize::MAX / slab_bytes) as f64 {
        usize::MAX
    } else {
        slabs as usize * slab_bytes
    };
    let capped = formula
        .min(c_limit / slab_bytes * slab_bytes)
        .min(size_rest);
    capped.max(slab_bytes.min(size_rest))
}

/// Slab counts of fixed-size chunks covering `total_slabs`.
pub fn fixed_chunk_slabs(total_slabs: usize, slab_bytes: usize, chunk_bytes: usize) -> Vec<usize> {
    let per = (chunk_bytes / slab_bytes.max(1)).max(1);
    let mut out = Vec::with_capacity(total_slabs.div_ceil(per));
    let mut rest = total_slabs;
    while rest > 0 {
        let k = per.min(rest);
        out.push(k);
        rest -= k;
    }
    out
}

/// Slab counts of the adaptive chunk sequence: start from `init_bytes` and
/// size every following chunk with [`next_chunk_size`].
pub fn adaptive_chunk_slabs(
    total_slabs: usize,
    slab_bytes: usize,
    init_bytes: usize,
    limit_bytes: usize,
    model: &ThroughputModel,
    transport: &TransportModel,
) -> Vec<usize> {
    let total = total_slabs * slab_bytes;
    let mut out = Vec::new();
    if total == 0 {
        return out;
    }
    let first = (init_bytes / slab_bytes)
        .clamp(1, (limit_bytes / slab_bytes).max(1))
        .min(total_slabs);
    let mut curr = first * slab_bytes;
    let mut rest = total - curr;
    out.push(first);
    while rest > 0 {
        let next = next_chunk_size(curr, model, transport, limit_bytes, rest, slab_bytes);
        out.push(next / slab_bytes);
        rest -= next;
        curr = next;
    }
    out
}
