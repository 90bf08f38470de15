//! Domain execution model.
//!
//! All lanes cover the whole domain; each lane owns one contiguous partition
//! plus a typed slot. Between stages there is a domain-wide barrier: stage
//! `k + 1` reads a snapshot of the whole domain and of every lane's slot as
//! stage `k` left them. Cross-lane coordination happens only through these
//! snapshots and the scan/reduce helpers here.

use alloc::vec::Vec;
use core::ops::Range;

use super::{partition, DeviceAdapter, ExecStage, StageKind, StageWork};
use crate::{Error, Result};

pub struct Lane<'a, T, S> {
    pub index: usize,
    pub count: usize,
    /// Domain indices owned by this lane.
    pub range: Range<usize>,
    /// This lane's partition; writes become visible after the barrier.
    pub part: &'a mut [T],
    /// Whole domain as of the previous barrier.
    pub domain: &'a [T],
    /// This lane's slot.
    pub slot: &'a mut S,
    /// Every lane's slot as of the previous barrier.
    pub peers: &'a [S],
}

/// Runs DEM stages over `domain` with `lanes` logical lanes. Returns the
/// lanes' slots after the final stage.
pub fn execute_dem<T, S, A>(
    adapter: &A,
    domain: &mut [T],
    lanes: usize,
    stages: &[ExecStage<'_, T, S>],
) -> Result<Vec<S>>
where
    T: Clone + Send + Sync,
    S: Clone + Default + Send + Sync,
    A: DeviceAdapter,
{
    if stages.iter().any(|s| s.kind() != StageKind::Dem) {
        return Err(Error::MixedStages { expected: "DEM" });
    }
    let lanes = lanes.max(1);
    let ranges = partition(domain.len(), lanes);
    let mut slots: Vec<S> = alloc::vec![S::default(); lanes];

    for stage in stages {
        let StageWork::Domain(f) = stage.work else {
            unreachable!()
        };
        let snapshot: Vec<T> = domain.to_vec();
        let peers: Vec<S> = slots.clone();
        let mut work: Vec<(usize, &mut [T], &mut S)> = Vec::with_capacity(lanes);
        let mut rest: &mut [T] = domain;
        for ((i, r), slot) in ranges.iter().enumerate().zip(slots.iter_mut()) {
            let (head, tail) = core::mem::take(&mut rest).split_at_mut(r.len());
            rest = tail;
            work.push((i, head, slot));
        }
        adapter.for_each_mut(&mut work, |_, item| {
            let (i, part, slot) = item;
            let mut lane = Lane {
                index: *i,
                count: lanes,
                range: ranges[*i].clone(),
                part,
                domain: &snapshot,
                slot: &mut **slot,
                peers: &peers,
            };
            f(&mut lane);
        });
    }
    Ok(slots)
}

/// Exclusive prefix sum computed in lane-parallel form: per-lane totals,
/// a scan over the totals, then per-lane local scans. Returns the offsets
/// and the grand total.
pub fn exclusive_scan<A: DeviceAdapter>(
    adapter: &A,
    values: &[u64],
    lanes: usize,
) -> (Vec<u64>, u64) {
    let ranges = partition(values.len(), lanes.max(1));
    let totals: Vec<u64> = adapter.map(ranges.len(), |i| values[ranges[i].clone()].iter().sum());
    let mut base = Vec::with_capacity(totals.len());
    let mut acc = 0u64;
    for t in &totals {
        base.push(acc);
        acc += t;
    }
    let pieces: Vec<Vec<u64>> = adapter.map(ranges.len(), |i| {
        let mut run = base[i];
        values[ranges[i].clone()]
            .iter()
            .map(|v| {
                let out = run;
                run += v;
                out
            })
            .collect()
    });
    (pieces.concat(), acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::Serial;
    use alloc::vec;

    #[test]
    fn partitions_cover_domain_once() {
        let mut domain = vec![usize::MAX; 103];
        let mark = |l: &mut Lane<'_, usize, ()>| l.part.iter_mut().for_each(|x| *x = l.index);
        execute_dem(&Serial::new(), &mut domain, 8, &[ExecStage::dem(&mark)]).unwrap();
        let mut seen = [0usize; 8];
        let mut last = 0;
        for &x in &domain {
            assert!(x < 8 && x >= last);
            last = x;
            seen[x] += 1;
        }
        assert_eq!(seen.iter().sum::<usize>(), 103);
    }

    #[test]
    fn no_stages_is_a_noop() {
        let mut domain = vec![1, 2, 3];
        let slots: Vec<()> = execute_dem::<_, (), _>(&Serial::new(), &mut domain, 4, &[]).unwrap();
        assert_eq!(domain, vec![1, 2, 3]);
        assert_eq!(slots.len(), 4);
    }

    #[test]
    fn two_stage_histogram_matches_direct_count() {
        let mut keys: Vec<u32> = (0..1000u32).map(|i| (i * 7919) % 13).collect();
        let mut oracle = vec![0u64; 13];
        for &k in &keys {
            oracle[k as usize] += 1;
        }
        let partial = |l: &mut Lane<'_, u32, Vec<u64>>| {
            let mut h = vec![0u64; 13];
            for &k in l.part.iter() {
                h[k as usize] += 1;
            }
            *l.slot = h;
        };
        let merge = |l: &mut Lane<'_, u32, Vec<u64>>| {
            if l.index == 0 {
                let mut h = vec![0u64; 13];
                for p in l.peers {
                    for (a, b) in h.iter_mut().zip(p) {
                        *a += b;
                    }
                }
                *l.slot = h;
            }
        };
        let slots = execute_dem(
            &Serial::new(),
            &mut keys,
            5,
            &[ExecStage::dem(&partial), ExecStage::dem(&merge)],
        )
        .unwrap();
        assert_eq!(slots[0], oracle);
    }

    #[test]
    fn barrier_exposes_previous_stage_writes() {
        let mut domain = vec![0i64; 40];
        let write = |l: &mut Lane<'_, i64, ()>| {
            for (j, x) in l.part.iter_mut().enumerate() {
                *x = (l.range.start + j) as i64;
            }
        };
        // Each lane reads the mirrored element owned by another lane.
        let read = |l: &mut Lane<'_, i64, ()>| {
            let n = l.domain.len();
            for (j, x) in l.part.iter_mut().enumerate() {
                *x = l.domain[n - 1 - (l.range.start + j)];
            }
        };
        execute_dem(
            &Serial::new(),
            &mut domain,
            4,
            &[ExecStage::dem(&write), ExecStage::dem(&read)],
        )
        .unwrap();
        let expect: Vec<i64> = (0..40).rev().collect();
        assert_eq!(domain, expect);
    }

    #[test]
    fn scan_matches_sequential() {
        let v: Vec<u64> = vec![4, 7, 3];
        let (off, total) = exclusive_scan(&Serial::new(), &v, 2);
        assert_eq!(off, vec![0, 4, 11]);
        assert_eq!(total, 14);
        let (off, total) = exclusive_scan(&Serial::new(), &[5], 8);
        assert_eq!((off, total), (vec![0], 5));
        let (off, total) = exclusive_scan(&Serial::new(), &[], 3);
        assert!(off.is_empty() && total == 0);
    }
}
