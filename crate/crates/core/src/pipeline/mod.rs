//! Overlapped host/device pipeline.
//!
//! The host/device execution model has three resources: an input copy
//! channel, one compute engine and an output copy channel. A chunk passes
//! through four tasks on one of three queues. Chunk `k` uses queue `k % 3`
//! and buffer pair `k % 2`; extra reuse edges make two input and two output
//! buffers sufficient.
//!
//! This module holds the planning and timing model only. The executor that
//! moves real bytes lives in the `hpdr` crate and schedules against the same
//! [`PipelinePlan`].

use alloc::vec;
use alloc::vec::Vec;

mod model;
mod sim;

pub use model::{
    adaptive_chunk_slabs, fit_throughput_model, fixed_chunk_slabs, next_chunk_size,
    ThroughputModel, TransportModel, DEFAULT_EMA_WEIGHT, DEFAULT_FIT_CUTOFF,
};
pub use sim::{
    buffer_conflicts, check_trace, overlap_ratio, serial_makespan, simulate_makespan,
    BufferConflict, PipelineTrace, TraceRecord,
};

pub const QUEUES: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Reduce,
    Reconstruct,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TaskKind {
    H2D,
    Compute,
    Serialize,
    Deserialize,
    D2H,
}

impl TaskKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TaskKind::H2D => "H2D",
            TaskKind::Compute => "Compute",
            TaskKind::Serialize => "Serialize",
            TaskKind::Deserialize => "Deserialize",
            TaskKind::D2H => "D2H",
        }
    }

    /// Engine the task occupies. Metadata (de)serialization moves bytes to
    /// the host, so it shares the output channel.
    pub fn resource(self) -> Resource {
        match self {
            TaskKind::H2D => Resource::H2D,
            TaskKind::Compute => Resource::Compute,
            TaskKind::Serialize | TaskKind::Deserialize | TaskKind::D2H => Resource::D2H,
        }
    }

    pub fn is_copy(self) -> bool {
        matches!(self, TaskKind::H2D | TaskKind::D2H)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Resource {
    H2D = 0,
    Compute = 1,
    D2H = 2,
}

impl Resource {
    pub const ALL: [Resource; 3] = [Resource::H2D, Resource::Compute, Resource::D2H];
}

/// Why an edge exists.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EdgeKind {
    /// Consecutive tasks of one chunk.
    Chain,
    /// Last reader of an input buffer before the chunk two ahead refills it.
    InputReuse,
    /// Output copy of a buffer before the chunk two ahead overwrites it.
    OutputReuse,
    /// Tasks on one queue run in submission order.
    QueueOrder,
    /// Next chunk's deserialization goes ahead of the current output copy
    /// on the shared channel.
    LaunchOrder,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Task {
    pub kind: TaskKind,
    pub chunk: usize,
    pub queue: usize,
    /// Buffer pair the task touches.
    pub buffer: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub kind: EdgeKind,
}

/// Task DAG of a chunked reduction or reconstruction.
///
/// Task `4 * k + s` is stage `s` of chunk `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelinePlan {
    pub direction: Direction,
    pub n_chunks: usize,
    pub buffer_pairs: usize,
    pub tasks: Vec<Task>,
    pub edges: Vec<Edge>,
    /// Submission order of the tasks on each resource.
    pub resource_order: [Vec<usize>; 3],
}

pub const STAGES: usize = 4;

pub fn stages(direction: Direction) -> [TaskKind; STAGES] {
    match direction {
        Direction::Reduce => [
            TaskKind::H2D,
            TaskKind::Compute,
            TaskKind::Serialize,
            TaskKind::D2H,
        ],
        Direction::Reconstruct => [
            TaskKind::H2D,
            TaskKind::Deserialize,
            TaskKind::Compute,
            TaskKind::D2H,
        ],
    }
}

/// Plan with two buffer pairs and the reuse edges that make them safe.
pub fn build_plan(n_chunks: usize, direction: Direction) -> PipelinePlan {
    build_plan_with(n_chunks, direction, 2)
}

/// `buffer_pairs` is 2 (reuse edges added) or 3 (one pair per queue, no
/// reuse edges needed).
pub fn build_plan_with(n_chunks: usize, direction: Direction, buffer_pairs: usize) -> PipelinePlan {
    assert!(
        buffer_pairs == 2 || buffer_pairs == 3,
        "buffer pairs must be 2 or 3"
    );
    let kinds = stages(direction);
    let id = |k: usize, kind: TaskKind| STAGES * k + kinds.iter().position(|&x| x == kind).unwrap();
    let mut tasks = Vec::with_capacity(STAGES * n_chunks);
    let mut edges = Vec::new();
    for k in 0..n_chunks {
        for (s, &kind) in kinds.iter().enumerate() {
            tasks.push(Task {
                kind,
                chunk: k,
                queue: k % QUEUES,
                buffer: k % buffer_pairs,
            });
            if s > 0 {
                edges.push(Edge {
                    from: STAGES * k + s - 1,
                    to: STAGES * k + s,
                    kind: EdgeKind::Chain,
                });
            }
        }
    }
    let mut add = |from, to, kind| edges.push(Edge { from, to, kind });
    for k in 0..n_chunks {
        if k + QUEUES < n_chunks {
            add(
                id(k, TaskKind::D2H),
                id(k + QUEUES, TaskKind::H2D),
                EdgeKind::QueueOrder,
            );
        }
        if buffer_pairs == 2 && k + 2 < n_chunks {
            let last_input_reader = match direction {
                Direction::Reduce => TaskKind::Serialize,
                Direction::Reconstruct => TaskKind::Compute,
            };
            add(
                id(k, last_input_reader),
                id(k + 2, TaskKind::H2D),
                EdgeKind::InputReuse,
            );
            add(
                id(k, TaskKind::D2H),
                id(k + 2, TaskKind::Compute),
                EdgeKind::OutputReuse,
            );
        }
        if direction == Direction::Reconstruct && k + 1 < n_chunks {
            add(
                id(k + 1, TaskKind::Deserialize),
                id(k, TaskKind::D2H),
                EdgeKind::LaunchOrder,
            );
        }
    }

    // Channel submission order. On the output channel of a reconstruction
    // the next deserialization is issued before the current output copy.
    let mut resource_order: [Vec<usize>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    let mut keyed: Vec<(usize, usize, usize)> = (0..tasks.len())
        .map(|t| {
            let task = tasks[t];
            let rank = match (direction, task.kind) {
                (Direction::Reconstruct, TaskKind::Deserialize) => 2 * task.chunk,
                (Direction::Reconstruct, TaskKind::D2H) => 2 * task.chunk + 3,
                _ => STAGES * task.chunk + t % STAGES,
            };
            (task.kind.resource() as usize, rank, t)
        })
        .collect();
    keyed.sort_unstable();
    for (r, _, t) in keyed {
        resource_order[r].push(t);
    }
    PipelinePlan {
        direction,
        n_chunks,
        buffer_pairs,
        tasks,
        edges,
        resource_order,
    }
}

impl PipelinePlan {
    pub fn task_id(&self, chunk: usize, kind: TaskKind) -> usize {
        STAGES * chunk
            + stages(self.direction)
                .iter()
                .position(|&x| x == kind)
                .expect("kind not in direction")
    }

    pub fn edges_of(&self, kind: EdgeKind) -> impl Iterator<Item = &Edge> {
        self.edges.iter().filter(move |e| e.kind == kind)
    }

    /// Predecessors of every task, including the previous task on the same
    /// resource.
    pub fn predecessors(&self) -> Vec<Vec<usize>> {
        let mut preds = vec![Vec::new(); self.tasks.len()];
        for e in &self.edges {
            preds[e.to].push(e.from);
        }
        for order in &self.resource_order {
            for w in order.windows(2) {
                preds[w[1]].push(w[0]);
            }
        }
        preds
    }

    /// Topological order over plan edges and resource order, or `None` when
    /// the combined graph has a cycle.
    pub fn topological_order(&self) -> Option<Vec<usize>> {
        let preds = self.predecessors();
        let n = self.tasks.len();
        let mut indeg: Vec<usize> = preds.iter().map(Vec::len).collect();
        let mut succ = vec![Vec::new(); n];
        for (t, p) in preds.iter().enumerate() {
            for &q in p {
                succ[q].push(t);
            }
        }
        let mut ready: Vec<usize> = (0..n).filter(|&t| indeg[t] == 0).collect();
        ready.reverse();
        let mut order = Vec::with_capacity(n);
        while let Some(t) = ready.pop() {
            order.push(t);
            for &s in &succ[t] {
                indeg[s] -= 1;
                if indeg[s] == 0 {
                    ready.push(s);
                }
            }
        }
        (order.len() == n).then_some(order)
    }

    pub fn is_acyclic(&self) -> bool {
        self.topological_order().is_some()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_chunk_is_a_chain() {
        let p = build_plan(1, Direction::Reduce);
        assert_eq!(p.tasks.len(), 4);
        assert!(p.edges.iter().all(|e| e.kind == EdgeKind::Chain));
        assert_eq!(p.edges.len(), 3);
    }

    #[test]
    fn three_chunk_reduce_has_one_input_reuse_edge() {
        let p = build_plan(3, Direction::Reduce);
        let reuse: Vec<_> = p.edges_of(EdgeKind::InputReuse).collect();
        assert_eq!(reuse.len(), 1);
        assert_eq!(reuse[0].from, p.task_id(0, TaskKind::Serialize));
        assert_eq!(reuse[0].to, p.task_id(2, TaskKind::H2D));
        assert_eq!(p.edges_of(EdgeKind::QueueOrder).count(), 0);
        assert_eq!(
            p.tasks
                .iter()
                .map(|t| (t.queue, t.buffer))
                .step_by(4)
                .collect::<Vec<_>>(),
            vec![(0, 0), (1, 1), (2, 0)]
        );
    }

    #[test]
    fn reconstruct_reverses_output_copy_and_deserialization() {
        let p = build_plan(3, Direction::Reconstruct);
        let d2h: Vec<_> = p.resource_order[Resource::D2H as usize]
            .iter()
            .map(|&t| (p.tasks[t].kind, p.tasks[t].chunk))
            .collect();
        assert_eq!(
            d2h,
            vec![
                (TaskKind::Deserialize, 0),
                (TaskKind::Deserialize, 1),
                (TaskKind::D2H, 0),
                (TaskKind::Deserialize, 2),
                (TaskKind::D2H, 1),
                (TaskKind::D2H, 2)
            ]
        );
        assert_eq!(p.edges_of(EdgeKind::LaunchOrder).count(), 2);
    }

    #[test]
    fn plans_are_acyclic_up_to_a_thousand_chunks() {
        for dir in [Direction::Reduce, Direction::Reconstruct] {
            for n in (1..60).chain([999, 1000]) {
                for pairs in [2, 3] {
                    assert!(
                        build_plan_with(n, dir, pairs).is_acyclic(),
                        "{dir:?} {n} {pairs}"
                    );
                }
            }
        }
    }
}
