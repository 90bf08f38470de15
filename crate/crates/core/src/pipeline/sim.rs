use alloc::vec::Vec;

use super::{Direction, PipelinePlan, Resource, TaskKind};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub task: usize,
    pub kind: TaskKind,
    pub chunk: usize,
    pub queue: usize,
    pub resource: Resource,
    /// Seconds from the start of the run.
    pub start: f64,
    pub end: f64,
}

/// Timestamped execution record, one entry per plan task, indexed by task.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PipelineTrace {
    pub records: Vec<TraceRecord>,
}

impl PipelineTrace {
    pub fn makespan(&self) -> f64 {
        self.records.iter().fold(0.0, |m, r| m.max(r.end))
    }

    pub fn total(&self, kind: TaskKind) -> f64 {
        self.records
            .iter()
            .filter(|r| r.kind == kind)
            .map(|r| r.end - r.start)
            .sum()
    }
}

/// Earliest-start list schedule of `plan` with the given per-task costs.
///
/// Each resource serves its tasks one at a time in submission order, and a
/// task starts once all its plan predecessors have ended.
pub fn simulate_makespan(plan: &PipelinePlan, costs: &[f64]) -> PipelineTrace {
    assert_eq!(costs.len(), plan.tasks.len(), "one cost per task");
    assert!(
        costs.iter().all(|&c| c >= 0.0),
        "costs must be non-negative"
    );
    let order = plan.topological_order().expect("plan has a cycle");
    let preds = plan.predecessors();
    let mut end = alloc::vec![0.0f64; plan.tasks.len()];
    let mut records: Vec<Option<TraceRecord>> = alloc::vec![None; plan.tasks.len()];
    for t in order {
        let start = preds[t].iter().fold(0.0f64, |m, &p| m.max(end[p]));
        end[t] = start + costs[t];
        let task = plan.tasks[t];
        records[t] = Some(TraceRecord {
            task: t,
            kind: task.kind,
            chunk: task.chunk,
            queue: task.queue,
            resource: task.kind.resource(),
            start,
            end: end[t],
        });
    }
    PipelineTrace {
        records: records.into_iter().map(Option::unwrap).collect(),
    }
}

/// Makespan with no overlap at all: every task back to back.
pub fn serial_makespan(costs: &[f64]) -> f64 {
    costs.iter().sum()
}

fn merge(mut iv: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    iv.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(iv.len());
    for (s, e) in iv {
        match out.last_mut() {
            Some(last) if s <= last.1 => last.1 = last.1.max(e),
            _ => out.push((s, e)),
        }
    }
    out
}

/// Fraction of host/device copy time that coincides with compute time.
/// An empty trace, or one without copy time, has ratio 0.
pub fn overlap_ratio(trace: &PipelineTrace) -> f64 {
    let compute = merge(
        trace
            .records
            .iter()
            .filter(|r| r.kind == TaskKind::Compute && r.end > r.start)
            .map(|r| (r.start, r.end))
            .collect(),
    );
    let mut copy = 0.0;
    let mut overlapped = 0.0;
    for r in trace.records.iter().filter(|r| r.kind.is_copy()) {
        copy += r.end - r.start;
        for &(s, e) in &compute {
            let lo = s.max(r.start);
            let hi = e.min(r.end);
            if hi > lo {
                overlapped += hi - lo;
            }
        }
    }
    if copy > 0.0 {
        (overlapped / copy).clamp(0.0, 1.0)
    } else {
        0.0
    }
}

/// Checks that the trace honours every plan edge and that no resource runs
/// two tasks at once. Returns a description of the first violation.
pub fn check_trace(
    plan: &PipelinePlan,
    trace: &PipelineTrace,
) -> core::result::Result<(), alloc::string::String> {
    if trace.records.len() != plan.tasks.len() {
        return Err(alloc::format!(
            "{} records for {} tasks",
            trace.records.len(),
            plan.tasks.len()
        ));
    }
    for e in &plan.edges {
        let (a, b) = (&trace.records[e.from], &trace.records[e.to]);
        if b.start < a.end {
            return Err(alloc::format!(
                "{:?} edge {} -> {} violated",
                e.kind,
                e.from,
                e.to
            ));
        }
    }
    for r in Resource::ALL {
        let mut iv: Vec<&TraceRecord> = trace.records.iter().filter(|x| x.resource == r).collect();
        iv.sort_by(|a, b| a.start.total_cmp(&b.start).then(a.end.total_cmp(&b.end)));
        for w in iv.windows(2) {
            if w[1].start < w[0].end {
                return Err(alloc::format!(
                    "tasks {} and {} overlap on {:?}",
                    w[0].task,
                    w[1].task,
                    r
                ));
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BufferConflict {
    pub output: bool,
    pub buffer: usize,
    pub chunks: (usize, usize),
}

/// Buffer ledger: replays the trace and reports every pair of chunks whose
/// use of the same device buffer overlaps in time.
///
/// A chunk holds its input buffer from the input copy until the last task
/// that reads it, and its output buffer from compute until the output copy.
pub fn buffer_conflicts(plan: &PipelinePlan, trace: &PipelineTrace) -> Vec<BufferConflict> {
    let (input_users, output_users): (&[TaskKind], &[TaskKind]) = match plan.direction {
        Direction::Reduce => (
            &[TaskKind::H2D, TaskKind::Compute, TaskKind::Serialize],
            &[TaskKind::Compute, TaskKind::Serialize, TaskKind::D2H],
        ),
        Direction::Reconstruct => (
            &[TaskKind::H2D, TaskKind::Deserialize, TaskKind::Compute],
            &[TaskKind::Compute, TaskKind::D2H],
        ),
    };
    let span = |chunk: usize, users: &[TaskKind]| {
        users
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(s, e), &k| {
                let r = &trace.records[plan.task_id(chunk, k)];
                (s.min(r.start), e.max(r.end))
            })
    };
    let mut out = Vec::new();
    for (output, users) in [(false, input_users), (true, output_users)] {
        let spans: Vec<(f64, f64)> = (0..plan.n_chunks).map(|k| span(k, users)).collect();
        for a in 0..plan.n_chunks {
            for b in a + 1..plan.n_chunks {
                let (ta, tb) = (
                    plan.tasks[plan.task_id(a, users[0])],
                    plan.tasks[plan.task_id(b, users[0])],
                );
                if ta.buffer != tb.buffer {
                    continue;
                }
                let (sa, ea) = spans[a];
                let (sb, eb) = spans[b];
                if sa < eb && sb < ea {
                    out.push(BufferConflict {
                        output,
                        buffer: ta.buffer,
                        chunks: (a, b),
                    });
                }
            }
        }
    }
    out
}
