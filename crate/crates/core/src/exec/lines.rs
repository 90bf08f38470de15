//! Iterative abstraction: independent 1-D processing of every line of an
//! array along one axis, `per_group` lines to a group.

use alloc::vec;
use alloc::vec::Vec;

use super::DeviceAdapter;

fn line_layout(dims: &[usize], axis: usize) -> (usize, usize) {
    let outer: usize = dims[..axis].iter().product();
    let inner: usize = dims[axis + 1..].iter().product();
    (outer, inner)
}

/// Maps every line along `axis` of the row-major array `data` (shape `dims`)
/// through `f(input_line, output_line)`, where output lines have length
/// `out_len`. Returns the array with `dims[axis]` replaced by `out_len`.
pub fn map_lines<T, A, F>(
    adapter: &A,
    data: &[T],
    dims: &[usize],
    axis: usize,
    out_len: usize,
    per_group: usize,
    f: F,
) -> Vec<T>
where
    T: Copy + Default + Send + Sync,
    A: DeviceAdapter,
    F: Fn(&[T], &mut [T]) + Sync,
{
    let n_in = dims[axis];
    let (outer, inner) = line_layout(dims, axis);
    let lines = outer * inner;
    let per_group = per_group.max(1);
    let groups = lines.div_ceil(per_group);

    let staged: Vec<Vec<T>> = adapter.map(groups, |g| {
        let first = g * per_group;
        let last = (first + per_group).min(lines);
        let mut buf = vec![T::default(); n_in];
        let mut out = vec![T::default(); (last - first) * out_len];
        for (li, line) in (first..last).enumerate() {
            let (o, i) = (line / inner, line % inner);
            let base = o * n_in * inner + i;
            for (j, b) in buf.iter_mut().enumerate() {
                *b = data[base + j * inner];
            }
            f(&buf, &mut out[li * out_len..(li + 1) * out_len]);
        }
        out
    });

    let mut result = vec![T::default(); outer * out_len * inner];
    for (g, out) in staged.iter().enumerate() {
        for (li, chunk) in out.chunks(out_len.max(1)).enumerate() {
            let line = g * per_group + li;
            let (o, i) = (line / inner, line % inner);
            let base = o * out_len * inner + i;
            for (j, v) in chunk.iter().enumerate() {
                result[base + j * inner] = *v;
            }
        }
    }
    result
}

/// In-place variant of [`map_lines`] for length-preserving line operations.
pub fn for_each_line<T, A, F>(
    adapter: &A,
    data: &mut [T],
    dims: &[usize],
    axis: usize,
    per_group: usize,
    f: F,
) where
    T: Copy + Default + Send + Sync,
    A: DeviceAdapter,
    F: Fn(&mut [T]) + Sync,
{
    let out = map_lines(
        adapter,
        data,
        dims,
        axis,
        dims[axis],
        per_group,
        |src, dst| {
            dst.copy_from_slice(src);
            f(dst);
        },
    );
    data.copy_from_slice(&out);
}
