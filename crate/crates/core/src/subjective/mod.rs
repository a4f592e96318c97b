//! Subjective test statistics: MOS with confidence intervals, subject
//! screening by correlation against the panel MOS, and one-way ANOVA.

mod anova;
mod correlation;
mod screening;
pub mod special;

use std::io::Read;

use serde::{Deserialize, Serialize};

pub use anova::{anova_groups, anova_oneway, AnovaResult, Factor};
pub use correlation::{pearson, ranks, spearman};
pub use screening::{screen_subjects, ScreeningResult, SubjectScreening, DEFAULT_THRESHOLD};

/// Multiplier applied to `δ/√N` for the 95% interval.
pub const DEFAULT_CI_CONSTANT: f64 = 1.95;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StatsError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("score {value} for subject `{subject}`, stimulus `{stimulus}` is outside [0, 100]")]
    ScoreRange {
        subject: String,
        stimulus: String,
        value: f64,
    },
    #[error("stimulus `{0}` has no scores")]
    EmptyColumn(String),
    #[error("need at least {required} scores, got {available}")]
    InsufficientSubjects { required: usize, available: usize },
    #[error("need at least {required} stimuli, got {available}")]
    InsufficientStimuli { required: usize, available: usize },
    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(String),
    #[error("factor level `{level}` of `{factor}` has {count} observation(s), need at least 2")]
    DegenerateLevel {
        factor: String,
        level: String,
        count: usize,
    },
    #[error("factor `{factor}` has {levels} level(s), need at least 2")]
    SingleLevel { factor: String, levels: usize },
    #[error("zero within-group variance for factor `{0}` with distinct group means")]
    ZeroWithinVariance(String),
    #[error("stimulus `{0}` has no factor metadata")]
    MissingMetadata(String),
    #[error("unknown stimulus `{0}`")]
    UnknownStimulus(String),
    #[error("{0}")]
    Parse(String),
}

pub type Result<T, E = StatsError> = std::result::Result<T, E>;

/// Factor annotations of a processed sequence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StimulusFactors {
    pub codec: String,
    pub resolution: String,
    pub bitrate_kbps: f64,
    pub content: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Stimulus {
    pub id: String,
    pub factors: Option<StimulusFactors>,
}

impl Stimulus {
    pub fn new(id: impl Into<String>) -> Self {
        Stimulus {
            id: id.into(),
            factors: None,
        }
    }
}

/// Subjects × stimuli grid of scores on `[0, 100]`; `None` marks a missing
/// score.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreMatrix {
    subjects: Vec<String>,
    stimuli: Vec<Stimulus>,
    scores: Vec<Vec<Option<f64>>>,
}

impl ScoreMatrix {
    pub fn new(
        subjects: Vec<String>,
        stimuli: Vec<Stimulus>,
        scores: Vec<Vec<Option<f64>>>,
    ) -> Result<Self> {
        if scores.len() != subjects.len() {
            return Err(StatsError::Dimension(format!(
                "{} subjects but {} score rows",
                subjects.len(),
                scores.len()
            )));
        }
        for (subject, row) in subjects.iter().zip(&scores) {
            if row.len() != stimuli.len() {
                return Err(StatsError::Dimension(format!(
                    "subject `{subject}` has {} scores for {} stimuli",
                    row.len(),
                    stimuli.len()
                )));
            }
            for (stimulus, value) in stimuli.iter().zip(row) {
                if let Some(v) = *value {
                    if !(0.0..=100.0).contains(&v) {
                        return Err(StatsError::ScoreRange {
                            subject: subject.clone(),
                            stimulus: stimulus.id.clone(),
                            value: v,
                        });
                    }
                }
            }
        }
        Ok(ScoreMatrix {
            subjects,
            stimuli,
            scores,
        })
    }

    pub fn subjects(&self) -> &[String] {
        &self.subjects
    }

    pub fn stimuli(&self) -> &[Stimulus] {
        &self.stimuli
    }

    pub fn stimuli_mut(&mut self) -> &mut [Stimulus] {
        &mut self.stimuli
    }

    pub fn score(&self, subject: usize, stimulus: usize) -> Option<f64> {
        self.scores[subject][stimulus]
    }

    pub fn row(&self, subject: usize) -> &[Option<f64>] {
        &self.scores[subject]
    }

    pub fn stimulus_index(&self, id: &str) -> Result<usize> {
        self.stimuli
            .iter()
            .position(|s| s.id == id)
            .ok_or_else(|| StatsError::UnknownStimulus(id.to_string()))
    }

    /// Present scores for one stimulus, in subject order.
    pub fn column(&self, stimulus: usize) -> Vec<f64> {
        self.scores.iter().filter_map(|row| row[stimulus]).collect()
    }

    pub fn missing_count(&self) -> usize {
        self.scores.iter().flatten().filter(|v| v.is_none()).count()
    }

    /// Keeps the subjects at `indices`, in the given order.
    pub fn select_subjects(&self, indices: &[usize]) -> ScoreMatrix {
        ScoreMatrix {
            subjects: indices.iter().map(|&i| self.subjects[i].clone()).collect(),
            stimuli: self.stimuli.clone(),
            scores: indices.iter().map(|&i| self.scores[i].clone()).collect(),
        }
    }

    /// Drops the named stimulus columns.
    pub fn without_stimuli(&self, ids: &[String]) -> Result<ScoreMatrix> {
        for id in ids {
            self.stimulus_index(id)?;
        }
        let keep: Vec<usize> = (0..self.stimuli.len())
            .filter(|&j| !ids.contains(&self.stimuli[j].id))
            .collect();
        Ok(ScoreMatrix {
            subjects: self.subjects.clone(),
            stimuli: keep.iter().map(|&j| self.stimuli[j].clone()).collect(),
            scores: self
                .scores
                .iter()
                .map(|row| keep.iter().map(|&j| row[j]).collect())
                .collect(),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MosPoint {
    pub stimulus: String,
    pub mos: f64,
    /// `None` when fewer than two scores are present.
    pub ci95: Option<f64>,
    pub n: usize,
}

/// Arithmetic mean of a score list.
pub fn mos_of(scores: &[f64]) -> Option<f64> {
    if scores.is_empty() {
        return None;
    }
    let mut sum = 0.0;
    for s in scores {
        sum += s;
    }
    Some(sum / scores.len() as f64)
}

/// Confidence half-width `constant · δ / √N`, where `δ` is the population
/// standard deviation of the scores.
pub fn ci95_of(scores: &[f64], constant: f64) -> Result<f64> {
    let n = scores.len();
    if n < 2 {
        return Err(StatsError::InsufficientSubjects {
            required: 2,
            available: n,
        });
    }
    let mean = mos_of(scores).expect("non-empty");
    let mut ss = 0.0;
    for s in scores {
        ss += (s - mean) * (s - mean);
    }
    let delta = (ss / n as f64).sqrt();
    Ok(constant * delta / (n as f64).sqrt())
}

pub fn mos(matrix: &ScoreMatrix, stimulus: usize) -> Result<f64> {
    mos_of(&matrix.column(stimulus))
        .ok_or_else(|| StatsError::EmptyColumn(matrix.stimuli[stimulus].id.clone()))
}

pub fn ci95(matrix: &ScoreMatrix, stimulus: usize, constant: f64) -> Result<f64> {
    ci95_of(&matrix.column(stimulus), constant)
}

/// MOS and interval for every stimulus that has at least one score.
pub fn mos_points(matrix: &ScoreMatrix, constant: f64) -> Result<Vec<MosPoint>> {
    (0..matrix.stimuli.len())
        .map(|j| {
            let column = matrix.column(j);
            let mos = mos_of(&column)
                .ok_or_else(|| StatsError::EmptyColumn(matrix.stimuli[j].id.clone()))?;
            Ok(MosPoint {
                stimulus: matrix.stimuli[j].id.clone(),
                mos,
                ci95: ci95_of(&column, constant).ok(),
                n: column.len(),
            })
        })
        .collect()
}

/// Reads a `subject,<stimulus>,...` score table. Empty cells are missing
/// scores.
pub fn read_scores_csv<R: Read>(reader: R) -> Result<ScoreMatrix> {
    let mut csv = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header = csv
        .headers()
        .map_err(|e| StatsError::Parse(format!("scores CSV: {e}")))?
        .clone();
    if header.get(0) != Some("subject") {
        return Err(StatsError::Parse(
            "scores CSV: first column must be `subject`".into(),
        ));
    }
    let stimuli: Vec<Stimulus> = header.iter().skip(1).map(Stimulus::new).collect();
    let mut subjects = Vec::new();
    let mut scores = Vec::new();
    for (i, record) in csv.records().enumerate() {
        let record = record.map_err(|e| StatsError::Parse(format!("scores CSV: {e}")))?;
        let line = i + 2;
        subjects.push(record.get(0).unwrap_or_default().to_string());
        let row = record
            .iter()
            .skip(1)
            .map(|cell| {
                if cell.is_empty() {
                    Ok(None)
                } else {
                    cell.parse::<f64>().map(Some).map_err(|_| {
                        StatsError::Parse(format!("scores CSV line {line}: `{cell}` is not a number"))
                    })
                }
            })
            .collect::<Result<Vec<_>>>()?;
        scores.push(row);
    }
    ScoreMatrix::new(subjects, stimuli, scores)
}

#[derive(Deserialize)]
struct MetadataRow {
    pvs: String,
    #[serde(flatten)]
    factors: StimulusFactors,
}

/// Reads `pvs,codec,resolution,bitrate_kbps,content` rows.
pub fn read_metadata_csv<R: Read>(reader: R) -> Result<Vec<(String, StimulusFactors)>> {
    let mut csv = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    csv.deserialize::<MetadataRow>()
        .map(|row| {
            row.map(|r| (r.pvs, r.factors))
                .map_err(|e| StatsError::Parse(format!("metadata CSV: {e}")))
        })
        .collect()
}

/// Attaches factor metadata to every stimulus of `matrix`.
pub fn attach_metadata(matrix: &mut ScoreMatrix, metadata: &[(String, StimulusFactors)]) -> Result<()> {
    for stimulus in matrix.stimuli_mut() {
        let factors = metadata
            .iter()
            .find(|(id, _)| *id == stimulus.id)
            .map(|(_, f)| f.clone())
            .ok_or_else(|| StatsError::MissingMetadata(stimulus.id.clone()))?;
        stimulus.factors = Some(factors);
    }
    Ok(())
}
