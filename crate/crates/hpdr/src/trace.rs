use std::io::Write;

use hpdr_core::pipeline::PipelineTrace;

pub const TRACE_COLUMNS: [&str; 5] = ["task_kind", "chunk_id", "queue", "start_ns", "end_ns"];

fn ns(seconds: f64) -> u64 {
    (seconds * 1e9).round().max(0.0) as u64
}

/// Writes one row per task, in task order.
pub fn write_trace_csv<W: Write>(trace: &PipelineTrace, w: W) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(TRACE_COLUMNS)?;
    for r in &trace.records {
        out.write_record([
            r.kind.as_str().to_string(),
            r.chunk.to_string(),
            r.queue.to_string(),
            ns(r.start).to_string(),
            ns(r.end).to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use hpdr_core::pipeline::{build_plan, simulate_makespan, Direction};

    #[test]
    fn one_row_per_task() {
        let p = build_plan(2, Direction::Reduce);
        let t = simulate_makespan(&p, &[1e-3; 8]);
        let mut buf = Vec::new();
        write_trace_csv(&t, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "task_kind,chunk_id,queue,start_ns,end_ns");
        assert_eq!(lines.len(), 9);
        assert_eq!(lines[1], "H2D,0,0,0,1000000");
    }
}
