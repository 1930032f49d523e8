use std::path::Path;

use serde::{Deserialize, Serialize};

use super::runner::{RunReport, RunSummary, Status};
use crate::jsonl::{write_jsonl, JsonlError};

/// Per-question histogram inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsLine {
    pub id: String,
    pub num_unique_docs: usize,
    pub num_snippets: usize,
    pub prompt_chars: usize,
    pub status: Status,
    pub wall_time_ms: f64,
}

/// Final line of the stats file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryLine {
    pub summary: RunSummary,
}

#[derive(Serialize)]
#[serde(untagged)]
enum Line<'a> {
    Question(StatsLine),
    Summary(&'a SummaryLine),
}

/// Writes one stats line per question followed by a summary line.
pub fn emit_stats(report: &RunReport, path: &Path) -> Result<(), JsonlError> {
    let summary = SummaryLine {
        summary: report.summary(),
    };
    let mut lines: Vec<Line> = report
        .questions
        .iter()
        .map(|q| {
            Line::Question(StatsLine {
                id: q.id.clone(),
                num_unique_docs: q.num_unique_docs,
                num_snippets: q.num_snippets,
                prompt_chars: q.prompt_chars,
                status: q.status,
                wall_time_ms: q.wall_time_ms,
            })
        })
        .collect();
    lines.push(Line::Summary(&summary));
    write_jsonl(&lines, path)
}
