//! Ingestion of per-frame scores produced by external tools (e.g. VMAF).
//!
//! Two layouts are accepted:
//!
//! * CSV with header `frame,score`, one row per frame.
//! * JSON object `{"frames": [{"metrics": {"<name>": <number>}}, ...]}`, the
//!   per-frame log layout written by the common VMAF command line tool.

use std::io::Read;

use serde::Deserialize;

use super::{MetricError, MetricId, Result, SequenceQuality};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ExternalSchema {
    Csv,
    /// JSON log; the string selects the key inside each frame's `metrics`.
    Json(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExternalScores {
    pub quality: SequenceQuality,
    pub warnings: Vec<String>,
}

#[derive(Deserialize)]
struct JsonLog {
    frames: Vec<JsonFrame>,
}

#[derive(Deserialize)]
struct JsonFrame {
    metrics: serde_json::Map<String, serde_json::Value>,
}

fn parse_csv<R: Read>(reader: R) -> Result<Vec<f64>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| MetricError::Parse(format!("score CSV header: {e}")))?
        .clone();
    if headers.len() != 2 || &headers[0] != "frame" || &headers[1] != "score" {
        return Err(MetricError::Parse(format!(
            "score CSV header must be `frame,score`, got `{}`",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut scores = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let line = row + 2;
        let record = record.map_err(|e| MetricError::Parse(format!("line {line}: {e}")))?;
        record[0]
            .parse::<u64>()
            .map_err(|_| MetricError::Parse(format!("line {line}: invalid frame `{}`", &record[0])))?;
        scores.push(parse_score(&record[1], line)?);
    }
    Ok(scores)
}

fn parse_score(text: &str, line: usize) -> Result<f64> {
    match text.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(MetricError::Parse(format!(
            "line {line}: non-numeric score `{text}`"
        ))),
    }
}

fn parse_json<R: Read>(reader: R, name: &str) -> Result<Vec<f64>> {
    let log: JsonLog = serde_json::from_reader(reader)
        .map_err(|e| MetricError::Parse(format!("score JSON: {e}")))?;
    log.frames
        .iter()
        .enumerate()
        .map(|(i, frame)| match frame.metrics.get(name) {
            Some(serde_json::Value::Number(n)) => n
                .as_f64()
                .filter(|v| v.is_finite())
                .ok_or_else(|| MetricError::Parse(format!("frame {i}: invalid `{name}` value"))),
            Some(other) => Err(MetricError::Parse(format!(
                "frame {i}: non-numeric `{name}` value {other}"
            ))),
            None => Err(MetricError::Parse(format!("frame {i}: no `{name}` metric"))),
        })
        .collect()
}

/// Loads per-frame scores verbatim and pools them by arithmetic mean.
///
/// A count different from `declared_frames` is not fatal; it produces a
/// warning and the mean covers the frames present.
pub fn ingest_external_scores<R: Read>(
    reader: R,
    schema: &ExternalSchema,
    name: &str,
    declared_frames: Option<u64>,
) -> Result<ExternalScores> {
    let scores = match schema {
        ExternalSchema::Csv => parse_csv(reader)?,
        ExternalSchema::Json(key) => parse_json(reader, key)?,
    };
    if scores.is_empty() {
        return Err(MetricError::Empty(format!("no scores for `{name}`")));
    }
    let mut warnings = Vec::new();
    if let Some(declared) = declared_frames {
        if declared != scores.len() as u64 {
            warnings.push(format!(
                "external metric `{name}` has {} frames, expected {declared}; mean covers present frames",
                scores.len()
            ));
        }
    }
    let quality = SequenceQuality::from_frames(MetricId::External(name.to_string()), scores, false)?;
    Ok(ExternalScores { quality, warnings })
}
