//! JSON-lines transcripts, one record per retained step.

use std::io::Write;

use serde::{Deserialize, Serialize};
use sr_mcmc::chains::Record;
use sr_mcmc::Move;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MoveTag {
    Add,
    Del,
    Swap,
    Hold,
}

impl From<&Move> for MoveTag {
    fn from(mv: &Move) -> Self {
        match mv {
            Move::Hold => MoveTag::Hold,
            Move::Add(_) => MoveTag::Add,
            Move::Delete(_) => MoveTag::Del,
            Move::Swap { .. } => MoveTag::Swap,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TranscriptLine {
    pub step: usize,
    pub set: Vec<usize>,
    pub logw: f64,
    #[serde(rename = "move")]
    pub mv: MoveTag,
    pub accepted: bool,
}

impl From<&Record> for TranscriptLine {
    fn from(r: &Record) -> Self {
        TranscriptLine {
            step: r.step,
            set: r.members.clone(),
            logw: r.log_weight.value(),
            mv: MoveTag::from(&r.outcome.proposal),
            accepted: r.outcome.accepted,
        }
    }
}

pub fn write_records<W: Write>(out: &mut W, records: &[Record]) -> std::io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut *out, &TranscriptLine::from(r))?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn parse_line(line: &str) -> serde_json::Result<TranscriptLine> {
    serde_json::from_str(line)
}

pub fn format_line(line: &TranscriptLine) -> String {
    serde_json::to_string(line).expect("transcript lines always serialize")
}
