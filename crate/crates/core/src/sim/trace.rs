//! JSON-lines rollout traces.

use serde::{Deserialize, Serialize};

use super::SimError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartRecord {
    pub pos: [f64; 3],
    pub f_h: [f64; 3],
    pub kappa: f64,
}

/// One control step as written to a trace file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceRecord {
    pub t: f64,
    pub root_xy: [f64; 2],
    pub height_scale: f64,
    pub lean: f64,
    pub parts: Vec<PartRecord>,
    pub r_field: f64,
}

impl TraceRecord {
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("trace record serializes")
    }
}

/// Parse a single trace line. Non-finite numbers are rejected.
pub fn parse_trace_line(line: &str) -> Result<TraceRecord, SimError> {
    let rec: TraceRecord = serde_json::from_str(line.trim_end()).map_err(|e| SimError::Trace(e.to_string()))?;
    let mut nums = vec![rec.t, rec.height_scale, rec.lean, rec.r_field, rec.root_xy[0], rec.root_xy[1]];
    for p in &rec.parts {
        nums.extend(p.pos.iter().chain(&p.f_h).copied());
        nums.push(p.kappa);
    }
    if nums.iter().any(|v| !v.is_finite()) {
        return Err(SimError::Trace("non-finite value".into()));
    }
    Ok(rec)
}

/// Parse a whole trace, skipping blank lines.
pub fn parse_trace(text: &str) -> Result<Vec<TraceRecord>, SimError> {
    text.lines().filter(|l| !l.trim().is_empty()).map(parse_trace_line).collect()
}

/// Serialize records one per line, newline-terminated.
pub fn write_trace(records: &[TraceRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&r.to_line());
        out.push('\n');
    }
    out
}
