//! Multilevel decomposition and recomposition.
//!
//! One level step on the level-`l` grid `v`:
//!
//! 1. `mc = v - I(v)` at every node not on level `l - 1`, where `I` is the
//!    multilinear interpolant of the coarse nodes (a locality stage with a
//!    one-node halo).
//! 2. `z = M_c^-1 P^T M_f mc`, applied one coarsening dimension at a time:
//!    mass matrix on the fine nodes, transfer to the coarse nodes, then a
//!    tridiagonal solve with the coarse mass matrix (an iterative stage).
//! 3. The coarse nodes take `v + z` and become the next level's grid.
//!
//! Recomposition undoes the steps in reverse order, so it inverts
//! decomposition up to rounding.

use alloc::vec;
use alloc::vec::Vec;

use super::hierarchy::{coarse_to_fine, Hierarchy};
use crate::exec::{decompose_blocks, execute_gem, map_lines, DeviceAdapter, ExecStage, Group};
use crate::tensor::{element_count, strides};
use crate::{Error, Result};

/// Lines handed to one group by the iterative stages.
const LINES_PER_GROUP: usize = 64;

/// Multilevel coefficients in place: coefficients at the nodes introduced
/// by each level, coarsest nodal values at the coarsest nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientSet {
    pub values: Vec<f64>,
    /// Elements introduced per level, coarsest first.
    pub level_counts: Vec<usize>,
}

/// Geometry of one level step along one dimension.
struct Axis {
    /// Node count at the fine level.
    n: usize,
    coarsens: bool,
    /// Coordinates (original indices) of the fine nodes.
    x: Vec<f64>,
    /// Coarse index of each fine node that survives, per fine index.
    coarse: Vec<Option<usize>>,
    n_coarse: usize,
}

impl Axis {
    fn new(h: &Hierarchy, level: usize, dim: usize) -> Self {
        let x: Vec<f64> = h.positions(level, dim).iter().map(|&p| p as f64).collect();
        let n = x.len();
        let coarsens = h.coarsens(level, dim);
        let mut coarse = vec![None; n];
        let n_coarse = h.level_dims(level - 1)[dim];
        for i in 0..n_coarse {
            let j = if coarsens { coarse_to_fine(i, n) } else { i };
            coarse[j] = Some(i);
        }
        Axis {
            n,
            coarsens,
            x,
            coarse,
            n_coarse,
        }
    }

    /// Interpolation weights of fine-only node `j` onto its neighbours
    /// `j - 1` and `j + 1`.
    fn weights(&self, j: usize) -> (f64, f64) {
        let (a, m, b) = (self.x[j - 1], self.x[j], self.x[j + 1]);
        ((b - m) / (b - a), (m - a) / (b - a))
    }

    fn is_fine_only(&self, j: usize) -> bool {
        self.coarse[j].is_none()
    }
}

/// `out = M f` for the piecewise-linear mass matrix on nodes `x`.
pub(crate) fn mass_apply(x: &[f64], f: &[f64], out: &mut [f64]) {
    let n = x.len();
    if n == 1 {
        out[0] = f[0];
        return;
    }
    for i in 0..n {
        let mut s = 0.0;
        if i > 0 {
            let h = x[i] - x[i - 1];
            s += h / 3.0 * f[i] + h / 6.0 * f[i - 1];
        }
        if i + 1 < n {
            let h = x[i + 1] - x[i];
            s += h / 3.0 * f[i] + h / 6.0 * f[i + 1];
        }
        out[i] = s;
    }
}

/// Solves `M y = r` in place for the mass matrix on nodes `x` (Thomas
/// algorithm; the matrix is symmetric positive definite).
pub(crate) fn mass_solve(x: &[f64], r: &mut [f64], scratch: &mut Vec<f64>) {
    let n = x.len();
    if n == 1 {
        return;
    }
    let h = |i: usize| x[i + 1] - x[i];
    let diag = |i: usize| {
        let mut d = 0.0;
        if i > 0 {
            d += h(i - 1) / 3.0;
        }
        if i + 1 < n {
            d += h(i) / 3.0;
        }
        d
    };
    scratch.clear();
    scratch.resize(n, 0.0);
    let c = scratch;
    // forward sweep: c holds the modified super-diagonal
    let mut denom = diag(0);
    c[0] = h(0) / 6.0 / denom;
    r[0] /= denom;
    for i in 1..n {
        let sub = h(i - 1) / 6.0;
        denom = diag(i) - sub * c[i - 1];
        if i + 1 < n {
            c[i] = h(i) / 6.0 / denom;
        }
        r[i] = (r[i] - sub * r[i - 1]) / denom;
    }
    for i in (0..n - 1).rev() {
        r[i] -= c[i] * r[i + 1];
    }
}

/// `out = P^T g`: transfer of fine nodal loads to coarse nodes.
fn transfer(axis: &Axis, g: &[f64], out: &mut [f64]) {
    out.iter_mut().for_each(|v| *v = 0.0);
    for j in 0..axis.n {
        match axis.coarse[j] {
            Some(i) => out[i] += g[j],
            None => {
                let (wa, wb) = axis.weights(j);
                out[axis.coarse[j - 1].unwrap()] += wa * g[j];
                out[axis.coarse[j + 1].unwrap()] += wb * g[j];
            }
        }
    }
}

fn block_shape(rank: usize) -> Vec<usize> {
    let side = match rank {
        1 => 4096,
        2 => 64,
        3 => 16,
        _ => 8,
    };
    vec![side; rank]
}

/// Adds `sign * I(v)` to every fine-only node of the level grid `v`.
/// Coarse nodes are only read, so the result does not depend on block
/// scheduling.
fn interpolate<A: DeviceAdapter>(
    adapter: &A,
    v: &mut [f64],
    dims: &[usize],
    axes: &[Axis],
    sign: f64,
) -> Result<()> {
    let rank = dims.len();
    let blocks = decompose_blocks(dims, &block_shape(rank), &vec![1; rank])?;
    let work = |g: &mut Group<'_, f64>| {
        let ext = g.extent().to_vec();
        let st = strides(&ext);
        let start = g.block.halo.start.clone();
        let core = g.core().clone();
        let n_core = core.len();
        let mut fine = [0usize; 4];
        let mut local = [0usize; 4];
        for c in 0..n_core {
            let mut rem = c;
            let mut nf = 0;
            for d in (0..rank).rev() {
                local[d] = core.start[d] + rem % core.extent[d];
                rem /= core.extent[d];
            }
            for (d, axis) in axes.iter().enumerate() {
                if axis.is_fine_only(start[d] + local[d]) {
                    fine[nf] = d;
                    nf += 1;
                }
            }
            if nf == 0 {
                continue;
            }
            let at: usize = (0..rank).map(|d| local[d] * st[d]).sum();
            let mut acc = 0.0;
            for corner in 0..(1usize << nf) {
                let mut w = 1.0;
                let mut idx = at;
                for (bit, &d) in fine[..nf].iter().enumerate() {
                    let (wa, wb) = axes[d].weights(start[d] + local[d]);
                    if corner >> bit & 1 == 0 {
                        w *= wa;
                        idx -= st[d];
                    } else {
                        w *= wb;
                        idx += st[d];
                    }
                }
                acc += w * g.local[idx];
            }
            g.local[at] += sign * acc;
        }
    };
    execute_gem::<_, (), _>(adapter, v, &blocks, &[ExecStage::gem(&work, 0)])
}

/// Visits every node of a grid with its multi-index.
fn for_each_node(dims: &[usize], mut f: impl FnMut(usize, &[usize])) {
    let n = element_count(dims);
    let mut idx = vec![0usize; dims.len()];
    for flat in 0..n {
        f(flat, &idx);
        for d in (0..dims.len()).rev() {
            idx[d] += 1;
            if idx[d] < dims[d] {
                break;
            }
            idx[d] = 0;
        }
    }
}

/// Flat coarse-grid index of a fine node, if the node survives.
fn coarse_flat(axes: &[Axis], idx: &[usize]) -> Option<usize> {
    let mut flat = 0;
    for (axis, &j) in axes.iter().zip(idx) {
        flat = flat * axis.n_coarse + axis.coarse[j]?;
    }
    Some(flat)
}

/// `M_c^-1 P^T M_f mc`, dimension by dimension.
fn correction<A: DeviceAdapter>(
    adapter: &A,
    mc: Vec<f64>,
    dims: &[usize],
    axes: &[Axis],
) -> Vec<f64> {
    let mut cur = dims.to_vec();
    let mut data = mc;
    for (d, axis) in axes.iter().enumerate() {
        if !axis.coarsens {
            continue;
        }
        let xc: Vec<f64> = (0..axis.n)
            .filter(|&j| axis.coarse[j].is_some())
            .map(|j| axis.x[j])
            .collect();
        data = map_lines(
            adapter,
            &data,
            &cur,
            d,
            axis.n_coarse,
            LINES_PER_GROUP,
            |src, dst| {
                let mut load = vec![0.0; src.len()];
                mass_apply(&axis.x, src, &mut load);
                transfer(axis, &load, dst);
                let mut scratch = Vec::new();
                mass_solve(&xc, dst, &mut scratch);
            },
        );
        cur[d] = axis.n_coarse;
    }
    data
}

fn gather_level(h: &Hierarchy, level: usize, full: &[f64]) -> Vec<f64> {
    let dims = h.level_dims(level);
    let st = strides(h.dims());
    let pos: Vec<&[usize]> = (0..dims.len()).map(|d| h.positions(level, d)).collect();
    let mut out = vec![0.0; element_count(&dims)];
    for_each_node(&dims, |flat, idx| {
        let o: usize = idx
            .iter()
            .enumerate()
            .map(|(d, &i)| pos[d][i] * st[d])
            .sum();
        out[flat] = full[o];
    });
    out
}

/// Writes the level grid back to the full array, optionally only at nodes
/// that do not survive to the next coarser level.
fn scatter_level(
    h: &Hierarchy,
    level: usize,
    grid: &[f64],
    full: &mut [f64],
    axes: Option<&[Axis]>,
) {
    let dims = h.level_dims(level);
    let st = strides(h.dims());
    let pos: Vec<&[usize]> = (0..dims.len()).map(|d| h.positions(level, d)).collect();
    for_each_node(&dims, |flat, idx| {
        if axes.is_some_and(|a| coarse_flat(a, idx).is_some()) {
            return;
        }
        let o: usize = idx
            .iter()
            .enumerate()
            .map(|(d, &i)| pos[d][i] * st[d])
            .sum();
        full[o] = grid[flat];
    });
}

fn check_shape(h: &Hierarchy, n: usize) -> Result<()> {
    if element_count(h.dims()) != n {
        return Err(Error::InvalidShape(alloc::format!(
            "hierarchy covers {:?}, data has {n} elements",
            h.dims()
        )));
    }
    Ok(())
}

/// Decomposes `u` (row-major over `h.dims()`) into multilevel coefficients.
pub fn decompose<A: DeviceAdapter>(
    adapter: &A,
    u: &[f64],
    h: &Hierarchy,
) -> Result<CoefficientSet> {
    let mut out = vec![0.0; u.len()];
    decompose_into(adapter, u, h, &mut out)?;
    Ok(CoefficientSet {
        values: out,
        level_counts: h.level_element_counts(),
    })
}

/// [`decompose`] into a caller-provided buffer of the input's length.
pub fn decompose_into<A: DeviceAdapter>(
    adapter: &A,
    u: &[f64],
    h: &Hierarchy,
    out: &mut [f64],
) -> Result<()> {
    check_shape(h, u.len())?;
    check_shape(h, out.len())?;
    let mut work = u.to_vec();
    for level in (1..=h.finest()).rev() {
        let dims = h.level_dims(level);
        let axes: Vec<Axis> = (0..dims.len()).map(|d| Axis::new(h, level, d)).collect();
        interpolate(adapter, &mut work, &dims, &axes, -1.0)?;

        let mut coarse = vec![0.0; element_count(&h.level_dims(level - 1))];
        let mut mc = work.clone();
        for_each_node(&dims, |flat, idx| {
            if let Some(c) = coarse_flat(&axes, idx) {
                coarse[c] = work[flat];
                mc[flat] = 0.0;
            }
        });
        let z = correction(adapter, mc, &dims, &axes);
        for (c, z) in coarse.iter_mut().zip(&z) {
            *c += z;
        }
        scatter_level(h, level, &work, out, Some(&axes));
        work = coarse;
    }
    scatter_level(h, 0, &work, out, None);
    Ok(())
}

/// Inverse of [`decompose`].
pub fn recompose<A: DeviceAdapter>(
    adapter: &A,
    c: &CoefficientSet,
    h: &Hierarchy,
) -> Result<Vec<f64>> {
    recompose_values(adapter, &c.values, h)
}

pub(crate) fn recompose_values<A: DeviceAdapter>(
    adapter: &A,
    coeffs: &[f64],
    h: &Hierarchy,
) -> Result<Vec<f64>> {
    check_shape(h, coeffs.len())?;
    let mut work = gather_level(h, 0, coeffs);
    for level in 1..=h.finest() {
        let dims = h.level_dims(level);
        let axes: Vec<Axis> = (0..dims.len()).map(|d| Axis::new(h, level, d)).collect();
        let mut grid = gather_level(h, level, coeffs);
        let mut coarse_nodes = Vec::with_capacity(work.len());
        for_each_node(&dims, |flat, idx| {
            if let Some(c) = coarse_flat(&axes, idx) {
                grid[flat] = 0.0;
                coarse_nodes.push((flat, c));
            }
        });
        let z = correction(adapter, grid.clone(), &dims, &axes);
        for &(flat, c) in &coarse_nodes {
            grid[flat] = work[c] - z[c];
        }
        interpolate(adapter, &mut grid, &dims, &axes, 1.0)?;
        work = grid;
    }
    Ok(work)
}
