//! Canonical trace files: one JSON record per tick, one per line.

use super::{SpeError, TraceRecord};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

pub fn trace_to_string(trace: &[TraceRecord]) -> String {
    let mut out = String::new();
    for r in trace {
        out.push_str(&serde_json::to_string(r).expect("trace records serialize"));
        out.push('\n');
    }
    out
}

pub fn emit_trace(trace: &[TraceRecord], path: &Path) -> Result<(), SpeError> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    f.write_all(trace_to_string(trace).as_bytes())?;
    f.flush()?;
    Ok(())
}

pub fn load_trace(path: &Path) -> Result<Vec<TraceRecord>, SpeError> {
    let f = BufReader::new(std::fs::File::open(path)?);
    let mut out = Vec::new();
    for line in f.lines() {
        let line = line?;
        if !line.trim().is_empty() {
            out.push(serde_json::from_str(&line)?);
        }
    }
    Ok(out)
}
