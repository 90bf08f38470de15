use alloc::vec;
use alloc::vec::Vec;

use crate::tensor::validate_dims;
use crate::Result;

/// Level structure of a tensor grid.
///
/// Levels run from `finest()` down to 0 (coarsest). Along each dimension a
/// level with `n` nodes coarsens to `n / 2 + 1` nodes, keeping every other
/// node plus the last one, until 2 nodes remain; extents of 1 never
/// coarsen. Dimensions that bottom out early keep their count on the
/// remaining levels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Hierarchy {
    dims: Vec<usize>,
    /// `counts[d][k]`: node count of dimension `d` at depth `k` (0 = finest).
    counts: Vec<Vec<usize>>,
    /// `positions[k][d]`: original indices of the depth-`k` nodes.
    positions: Vec<Vec<Vec<usize>>>,
}

pub(crate) fn coarser_count(n: usize) -> usize {
    if n <= 2 {
        n
    } else {
        n / 2 + 1
    }
}

/// Fine index of coarse node `i` when a dimension of `n` nodes coarsens.
pub(crate) fn coarse_to_fine(i: usize, n: usize) -> usize {
    (2 * i).min(n - 1)
}

impl Hierarchy {
    pub fn build(dims: &[usize]) -> Result<Self> {
        validate_dims(dims)?;
        let mut counts: Vec<Vec<usize>> = dims
            .iter()
            .map(|&n| {
                let mut c = vec![n];
                while coarser_count(*c.last().unwrap()) != *c.last().unwrap() {
                    c.push(coarser_count(*c.last().unwrap()));
                }
                c
            })
            .collect();
        let depth = counts.iter().map(Vec::len).max().unwrap();
        for c in &mut counts {
            let last = *c.last().unwrap();
            c.resize(depth, last);
        }
        let mut positions: Vec<Vec<Vec<usize>>> =
            vec![dims.iter().map(|&n| (0..n).collect()).collect()];
        for k in 1..depth {
            let prev = &positions[k - 1];
            let level = (0..dims.len())
                .map(|d| {
                    let nf = counts[d][k - 1];
                    (0..counts[d][k])
                        .map(|i| {
                            let j = if counts[d][k] < nf {
                                coarse_to_fine(i, nf)
                            } else {
                                i
                            };
                            prev[d][j]
                        })
                        .collect()
                })
                .collect();
            positions.push(level);
        }
        Ok(Hierarchy {
            dims: dims.to_vec(),
            counts,
            positions,
        })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Number of levels including the coarsest.
    pub fn total_levels(&self) -> usize {
        self.counts[0].len()
    }

    /// Index of the finest level.
    pub fn finest(&self) -> usize {
        self.total_levels() - 1
    }

    fn depth(&self, level: usize) -> usize {
        self.finest() - level
    }

    /// Per-dimension node counts of `level`.
    pub fn level_dims(&self, level: usize) -> Vec<usize> {
        let k = self.depth(level);
        self.counts.iter().map(|c| c[k]).collect()
    }

    /// Node counts of dimension `dim` from finest to coarsest.
    pub fn dim_counts(&self, dim: usize) -> &[usize] {
        &self.counts[dim]
    }

    /// Original indices of the nodes of `level` along `dim`.
    pub fn positions(&self, level: usize, dim: usize) -> &[usize] {
        &self.positions[self.depth(level)][dim]
    }

    /// Whether `dim` loses nodes going from `level` to `level - 1`.
    pub fn coarsens(&self, level: usize, dim: usize) -> bool {
        let k = self.depth(level);
        self.counts[dim][k + 1] < self.counts[dim][k]
    }

    /// Elements first appearing at each level, coarsest first; they sum to
    /// the total element count.
    pub fn level_element_counts(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.total_levels());
        let mut prev = 0;
        for l in 0..self.total_levels() {
            let n: usize = self.level_dims(l).iter().product();
            out.push(n - prev);
            prev = n;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_follow_coarsening_rule() {
        let h = Hierarchy::build(&[5]).unwrap();
        assert_eq!(h.dim_counts(0), &[5, 3, 2]);
        assert_eq!(h.total_levels(), 3);
        let h = Hierarchy::build(&[2]).unwrap();
        assert_eq!(h.dim_counts(0), &[2]);
        assert_eq!(h.total_levels(), 1);
        let h = Hierarchy::build(&[9, 5]).unwrap();
        assert_eq!(h.dim_counts(0), &[9, 5, 3, 2]);
        assert_eq!(h.dim_counts(1), &[5, 3, 2, 2]);
        assert_eq!(h.total_levels(), 4);
        assert_eq!(h.level_dims(0), vec![2, 2]);
        assert!(!h.coarsens(1, 1) && h.coarsens(1, 0));
    }

    #[test]
    fn last_node_is_always_kept_and_levels_nest() {
        for n in 1..70 {
            let h = Hierarchy::build(&[n]).unwrap();
            for l in 0..h.total_levels() {
                let p = h.positions(l, 0);
                assert_eq!(*p.last().unwrap(), n - 1);
                assert_eq!(p[0], 0);
                if l > 0 {
                    let fine = h.positions(l, 0);
                    assert!(h.positions(l - 1, 0).iter().all(|x| fine.contains(x)));
                }
            }
            let c = h.dim_counts(0);
            assert!(*c.last().unwrap() == n.min(2));
        }
    }

    #[test]
    fn level_counts_sum_to_total() {
        let h = Hierarchy::build(&[7, 1, 12]).unwrap();
        assert_eq!(h.level_element_counts().iter().sum::<usize>(), 7 * 12);
        assert_eq!(h.dim_counts(1), &[1, 1, 1, 1, 1]);
    }
}
