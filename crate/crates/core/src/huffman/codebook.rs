//! Treeless codebook generation: optimal lengths computed in place over the
//! sorted frequency array, then canonical code assignment.

use alloc::vec;
use alloc::vec::Vec;

use super::FrequencyTable;
use crate::{Error, Result};

pub const MAX_CODE_LEN: u32 = 32;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HuffmanCodebook {
    /// Codeword length per key, 0 for absent keys.
    pub lengths: Vec<u8>,
    /// Canonical code per key, right-aligned in `lengths[k]` bits.
    pub codes: Vec<u32>,
    decode: DecodeTable,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct DecodeTable {
    /// Keys sorted by (length, key).
    symbols: Vec<u32>,
    /// Per length: first canonical code, number of codes, index into `symbols`.
    first_code: [u64; MAX_CODE_LEN as usize + 1],
    count: [u64; MAX_CODE_LEN as usize + 1],
    first_index: [usize; MAX_CODE_LEN as usize + 1],
    max_len: u32,
}

/// Minimum-redundancy code lengths for ascending-sorted weights, computed in
/// place (Moffat–Katajainen). On return `w[i]` is the length of symbol `i`.
pub(crate) fn in_place_lengths(w: &mut [u64]) {
    let n = w.len();
    if n == 0 {
        return;
    }
    if n == 1 {
        w[0] = 1;
        return;
    }
    // Phase 1: build internal node weights, leaving parent pointers behind.
    w[0] += w[1];
    let mut root = 0usize;
    let mut leaf = 2usize;
    for next in 1..n - 1 {
        if leaf >= n || w[root] < w[leaf] {
            w[next] = w[root];
            w[root] = next as u64;
            root += 1;
        } else {
            w[next] = w[leaf];
            leaf += 1;
        }
        if leaf >= n || (root < next && w[root] < w[leaf]) {
            w[next] += w[root];
            w[root] = next as u64;
            root += 1;
        } else {
            w[next] += w[leaf];
            leaf += 1;
        }
    }
    // Phase 2: internal node depths.
    w[n - 2] = 0;
    for next in (0..n - 2).rev() {
        w[next] = w[w[next] as usize] + 1;
    }
    // Phase 3: leaf depths.
    let mut avail: i64 = 1;
    let mut used: i64 = 0;
    let mut depth: u64 = 0;
    let mut root = n as isize - 2;
    let mut next = n as isize - 1;
    while avail > 0 {
        while root >= 0 && w[root as usize] == depth {
            used += 1;
            root -= 1;
        }
        while avail > used {
            w[next as usize] = depth;
            next -= 1;
            avail -= 1;
        }
        avail = 2 * used;
        depth += 1;
        used = 0;
    }
}

/// Builds the canonical codebook for `freq`.
pub fn build_codebook(freq: &FrequencyTable) -> Result<HuffmanCodebook> {
    // Sort (frequency, key) ascending, ties by key, then drop absent keys.
    let mut order: Vec<(u64, u32)> = freq
        .counts
        .iter()
        .enumerate()
        .map(|(k, &c)| (c, k as u32))
        .collect();
    order.sort();
    order.retain(|&(c, _)| c > 0);
    if order.is_empty() {
        return Err(Error::param("codebook needs at least one present key"));
    }
    let mut w: Vec<u64> = order.iter().map(|&(c, _)| c).collect();
    in_place_lengths(&mut w);

    let mut lengths = vec![0u8; freq.dict_size];
    for (&(_, key), &len) in order.iter().zip(&w) {
        if len > MAX_CODE_LEN as u64 {
            return Err(Error::CodeTooLong { length: len as u32 });
        }
        lengths[key as usize] = len as u8;
    }
    Ok(HuffmanCodebook::from_lengths(lengths))
}

impl HuffmanCodebook {
    /// Canonical codes from a length array: keys ordered by (length, key),
    /// consecutive codes within a length, shifted left between lengths.
    pub fn from_lengths(lengths: Vec<u8>) -> Self {
        let mut symbols: Vec<u32> = (0..lengths.len() as u32)
            .filter(|&k| lengths[k as usize] > 0)
            .collect();
        symbols.sort_by_key(|&k| (lengths[k as usize], k));

        let mut codes = vec![0u32; lengths.len()];
        let mut t = DecodeTable {
            symbols: Vec::new(),
            first_code: [0; MAX_CODE_LEN as usize + 1],
            count: [0; MAX_CODE_LEN as usize + 1],
            first_index: [0; MAX_CODE_LEN as usize + 1],
            max_len: 0,
        };
        let mut code: u64 = 0;
        let mut prev_len = 0u32;
        for (i, &k) in symbols.iter().enumerate() {
            let len = lengths[k as usize] as u32;
            if i > 0 {
                code += 1;
            }
            code <<= len - prev_len;
            if t.count[len as usize] == 0 {
                t.first_code[len as usize] = code;
                t.first_index[len as usize] = i;
            }
            t.count[len as usize] += 1;
            codes[k as usize] = code as u32;
            prev_len = len;
        }
        t.max_len = prev_len;
        t.symbols = symbols;
        HuffmanCodebook {
            lengths,
            codes,
            decode: t,
        }
    }

    pub fn dict_size(&self) -> usize {
        self.lengths.len()
    }

    pub fn present_keys(&self) -> usize {
        self.decode.symbols.len()
    }

    /// The only present key, if exactly one exists.
    pub fn sole_key(&self) -> Option<u32> {
        (self.decode.symbols.len() == 1).then(|| self.decode.symbols[0])
    }

    pub fn max_len(&self) -> u32 {
        self.decode.max_len
    }

    /// Σ freq·len: the exact encoded size in bits.
    pub fn weighted_length(&self, freq: &FrequencyTable) -> u64 {
        freq.counts
            .iter()
            .zip(&self.lengths)
            .map(|(&c, &l)| c * l as u64)
            .sum()
    }

    /// Resolves one symbol from `code`, read so far as `len` bits; `None`
    /// means more bits are needed.
    #[inline]
    pub(crate) fn lookup(&self, code: u64, len: u32) -> Option<u32> {
        let t = &self.decode;
        let l = len as usize;
        let off = code.wrapping_sub(t.first_code[l]);
        (t.count[l] > 0 && code >= t.first_code[l] && off < t.count[l])
            .then(|| t.symbols[t.first_index[l] + off as usize])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::huffman::FrequencyTable;
    use alloc::collections::BinaryHeap;
    use core::cmp::Reverse;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Classic tree-building Huffman: repeatedly merge the two lightest
    /// nodes, then read depths off the tree.
    fn tree_huffman_cost(counts: &[u64]) -> u64 {
        let present: Vec<u64> = counts.iter().copied().filter(|&c| c > 0).collect();
        if present.len() == 1 {
            return present[0];
        }
        let mut parent: Vec<usize> = Vec::new();
        let mut heap = BinaryHeap::new();
        for (i, &c) in present.iter().enumerate() {
            heap.push(Reverse((c, i)));
            parent.push(usize::MAX);
        }
        while heap.len() > 1 {
            let Reverse((a, ia)) = heap.pop().unwrap();
            let Reverse((b, ib)) = heap.pop().unwrap();
            let id = parent.len();
            parent.push(usize::MAX);
            parent[ia] = id;
            parent[ib] = id;
            heap.push(Reverse((a + b, id)));
        }
        present
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                let mut d = 0;
                let mut n = i;
                while parent[n] != usize::MAX {
                    n = parent[n];
                    d += 1;
                }
                c * d
            })
            .sum()
    }

    fn table(counts: &[u64]) -> FrequencyTable {
        FrequencyTable {
            dict_size: counts.len(),
            counts: counts.to_vec(),
        }
    }

    #[test]
    fn four_symbol_example() {
        let cb = build_codebook(&table(&[5, 2, 1, 1])).unwrap();
        assert_eq!(cb.lengths, vec![1, 2, 3, 3]);
        assert_eq!(cb.codes, vec![0b0, 0b10, 0b110, 0b111]);
        assert_eq!(
            cb.weighted_length(&table(&[5, 2, 1, 1])),
            tree_huffman_cost(&[5, 2, 1, 1])
        );
    }

    #[test]
    fn single_and_pair() {
        let cb = build_codebook(&table(&[0, 0, 9, 0])).unwrap();
        assert_eq!(cb.lengths, vec![0, 0, 1, 0]);
        assert_eq!(cb.codes[2], 0);
        assert_eq!(cb.sole_key(), Some(2));
        let cb = build_codebook(&table(&[4, 4])).unwrap();
        assert_eq!(cb.lengths, vec![1, 1]);
        assert_eq!(cb.codes, vec![0, 1]);
    }

    #[test]
    fn empty_table_rejected() {
        assert!(build_codebook(&table(&[0, 0])).is_err());
    }

    #[test]
    fn over_long_codes_rejected() {
        // Fibonacci weights force a maximally skewed tree of depth n - 1.
        let mut fib = vec![1u64, 1];
        while fib.len() < 40 {
            let n = fib.len();
            fib.push(fib[n - 1] + fib[n - 2]);
        }
        assert!(matches!(
            build_codebook(&table(&fib)),
            Err(Error::CodeTooLong { .. })
        ));
    }

    fn assert_prefix_free_and_complete(cb: &HuffmanCodebook) {
        let keys: Vec<usize> = (0..cb.dict_size()).filter(|&k| cb.lengths[k] > 0).collect();
        if keys.len() >= 2 {
            let kraft: f64 = keys
                .iter()
                .map(|&k| libm::exp2(-(cb.lengths[k] as f64)))
                .sum();
            assert!((kraft - 1.0).abs() < 1e-12, "kraft sum {kraft}");
        }
        for &a in &keys {
            for &b in &keys {
                if a == b {
                    continue;
                }
                let (la, lb) = (cb.lengths[a] as u32, cb.lengths[b] as u32);
                if la <= lb {
                    assert_ne!(cb.codes[b] >> (lb - la), cb.codes[a], "{a} prefixes {b}");
                }
            }
        }
    }

    #[test]
    fn matches_tree_oracle_on_random_tables() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let dict = rng.random_range(1..=256);
            let counts: Vec<u64> = (0..dict)
                .map(|_| {
                    if rng.random_bool(0.3) {
                        0
                    } else {
                        rng.random_range(1..10_000)
                    }
                })
                .collect();
            if counts.iter().all(|&c| c == 0) {
                continue;
            }
            let cb = build_codebook(&table(&counts)).unwrap();
            assert_eq!(
                cb.weighted_length(&table(&counts)),
                tree_huffman_cost(&counts)
            );
            assert_prefix_free_and_complete(&cb);
        }
    }
}
