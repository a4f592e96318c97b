//! Encoder/decoder complexity: real-time factors from measured wall times
//! and per-stage repartition of Callgrind self costs.

mod callgrind;
mod stages;

use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::video::Rational;

pub use callgrind::{merge_costs, parse_callgrind, CallgrindProfile, FunctionCost};
pub use stages::{
    aggregate_stages, StageMapping, StageProfile, StageShare, DEFAULT_BUCKET_THRESHOLD,
    DEFAULT_MAPPING, OTHER_STAGE,
};

#[derive(Debug, thiserror::Error)]
pub enum ProfileError {
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("missing `events:` header")]
    MissingEvents,
    #[error("event `{event}` not declared (available: {})", available.join(", "))]
    UnknownEvent { event: String, available: Vec<String> },
    #[error("stage mapping line {line}: {message}")]
    Mapping { line: usize, message: String },
    #[error("profile has no cost")]
    EmptyProfile,
    #[error("degenerate duration: {0}")]
    DegenerateDuration(String),
    #[error("invalid timing record: {0}")]
    InvalidRecord(String),
    #[error("cannot compare timings: {0}")]
    Comparison(String),
    #[error("timing CSV: {0}")]
    Csv(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl ProfileError {
    /// True for errors caused by malformed file content.
    pub fn is_format(&self) -> bool {
        matches!(
            self,
            ProfileError::Format { .. }
                | ProfileError::MissingEvents
                | ProfileError::Mapping { .. }
                | ProfileError::Csv(_)
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TimingRecord {
    pub codec: String,
    pub sequence: String,
    pub qp: i32,
    pub wall_seconds: f64,
    pub frame_count: u64,
    pub fps: Rational,
}

impl TimingRecord {
    pub fn new(
        codec: impl Into<String>,
        sequence: impl Into<String>,
        qp: i32,
        wall_seconds: f64,
        frame_count: u64,
        fps: Rational,
    ) -> Result<Self, ProfileError> {
        let record = TimingRecord {
            codec: codec.into(),
            sequence: sequence.into(),
            qp,
            wall_seconds,
            frame_count,
            fps,
        };
        record.validate()?;
        Ok(record)
    }

    fn validate(&self) -> Result<(), ProfileError> {
        if !(self.wall_seconds.is_finite() && self.wall_seconds > 0.0) {
            return Err(ProfileError::DegenerateDuration(format!(
                "wall time {} s for {}/{}",
                self.wall_seconds, self.codec, self.sequence
            )));
        }
        if self.frame_count == 0 || self.fps.num == 0 || self.fps.den == 0 {
            return Err(ProfileError::DegenerateDuration(format!(
                "{} frames at {} fps for {}/{}",
                self.frame_count, self.fps, self.codec, self.sequence
            )));
        }
        Ok(())
    }

    /// Duration of the content in seconds.
    pub fn content_seconds(&self) -> f64 {
        self.frame_count as f64 * self.fps.den as f64 / self.fps.num as f64
    }
}

/// Wall time divided by content duration; 1.0 is real time.
pub fn time_factor(record: &TimingRecord) -> Result<f64, ProfileError> {
    record.validate()?;
    Ok(record.wall_seconds / record.content_seconds())
}

/// Ratio of the time factors of `a` and `b`, which must describe the same
/// sequence at the same duration.
pub fn speedup(a: &TimingRecord, b: &TimingRecord) -> Result<f64, ProfileError> {
    if a.sequence != b.sequence {
        return Err(ProfileError::Comparison(format!(
            "sequence `{}` vs `{}`",
            a.sequence, b.sequence
        )));
    }
    let lhs = a.frame_count as u128 * a.fps.den as u128 * b.fps.num as u128;
    let rhs = b.frame_count as u128 * b.fps.den as u128 * a.fps.num as u128;
    if lhs != rhs {
        return Err(ProfileError::Comparison(format!(
            "durations differ for `{}`: {} s vs {} s",
            a.sequence,
            a.content_seconds(),
            b.content_seconds()
        )));
    }
    Ok(time_factor(a)? / time_factor(b)?)
}

#[derive(Deserialize)]
struct TimingRow {
    codec: String,
    sequence: String,
    qp: i32,
    wall_seconds: f64,
    frame_count: u64,
    fps_num: u64,
    fps_den: u64,
}

/// Reads `codec,sequence,qp,wall_seconds,frame_count,fps_num,fps_den` rows.
pub fn read_timing_csv<R: Read>(reader: R) -> Result<Vec<TimingRecord>, ProfileError> {
    let mut csv = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut out = Vec::new();
    for (i, row) in csv.deserialize::<TimingRow>().enumerate() {
        let row = row.map_err(|e| ProfileError::Csv(e.to_string()))?;
        let fps = Rational::new(row.fps_num, row.fps_den).ok_or_else(|| {
            ProfileError::InvalidRecord(format!("row {}: frame rate {}/{}", i + 2, row.fps_num, row.fps_den))
        })?;
        let record = TimingRecord::new(row.codec, row.sequence, row.qp, row.wall_seconds, row.frame_count, fps)
            .map_err(|e| ProfileError::InvalidRecord(format!("row {}: {e}", i + 2)))?;
        out.push(record);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(wall: f64, frames: u64, num: u64, den: u64) -> TimingRecord {
        TimingRecord::new("c", "s", 32, wall, frames, Rational::new(num, den).unwrap()).unwrap()
    }

    #[test]
    fn time_factor_examples() {
        assert!((time_factor(&rec(100.0, 500, 50, 1)).unwrap() - 10.0).abs() < 1e-12);
        assert!((time_factor(&rec(10.0, 500, 50, 1)).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(
            time_factor(&rec(3.0, 500, 50, 1)).unwrap(),
            time_factor(&rec(3.0, 500, 100, 2)).unwrap()
        );
    }

    #[test]
    fn speedup_examples() {
        let a = rec(20.0, 500, 50, 1);
        assert_eq!(speedup(&a, &a).unwrap(), 1.0);
        assert!((speedup(&a, &rec(10.0, 500, 100, 2)).unwrap() - 2.0).abs() < 1e-12);
        assert!(matches!(speedup(&a, &rec(10.0, 400, 50, 1)), Err(ProfileError::Comparison(_))));
        let mut other = a.clone();
        other.sequence = "t".into();
        assert!(matches!(speedup(&a, &other), Err(ProfileError::Comparison(_))));
    }

    #[test]
    fn degenerate_records() {
        let fps = Rational::new(50, 1).unwrap();
        assert!(TimingRecord::new("c", "s", 0, 0.0, 10, fps).is_err());
        assert!(TimingRecord::new("c", "s", 0, 1.0, 0, fps).is_err());
        let mut r = rec(1.0, 1, 1, 1);
        r.wall_seconds = 0.0;
        assert!(matches!(time_factor(&r), Err(ProfileError::DegenerateDuration(_))));
    }

    #[test]
    fn timing_csv() {
        let text = "codec,sequence,qp,wall_seconds,frame_count,fps_num,fps_den\n\
                    VTM,Seq,32,414,500,50,1\nHM,Seq,32,123,500,50,1\n";
        let rows = read_timing_csv(text.as_bytes()).unwrap();
        assert_eq!(rows.len(), 2);
        assert!((speedup(&rows[0], &rows[1]).unwrap() - 414.0 / 123.0).abs() < 1e-12);
        assert!(read_timing_csv("codec,sequence\nx,y\n".as_bytes()).is_err());
        assert!(read_timing_csv(
            "codec,sequence,qp,wall_seconds,frame_count,fps_num,fps_den\nA,S,1,0,10,50,1\n".as_bytes()
        )
        .is_err());
    }
}
