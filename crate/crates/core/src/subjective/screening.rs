use serde::Serialize;

use super::{mos_of, pearson, spearman, Result, ScoreMatrix, StatsError};

pub const DEFAULT_THRESHOLD: f64 = 0.75;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SubjectScreening {
    pub subject: String,
    pub pearson: f64,
    pub spearman: f64,
    pub retained: bool,
    /// Set when a correlation was undefined and replaced by -1.
    pub note: Option<String>,
}

impl SubjectScreening {
    pub fn min_correlation(&self) -> f64 {
        self.pearson.min(self.spearman)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScreeningResult {
    pub threshold: f64,
    pub subjects: Vec<SubjectScreening>,
    pub discarded: usize,
}

impl ScreeningResult {
    pub fn discarded_subjects(&self) -> impl Iterator<Item = &str> {
        self.subjects
            .iter()
            .filter(|s| !s.retained)
            .map(|s| s.subject.as_str())
    }
}

/// Single-pass screening: every subject is correlated against the MOS of
/// all subjects, over the stimuli that subject scored. A subject is kept
/// when `min(pearson, spearman) >= threshold`.
pub fn screen_subjects(matrix: &ScoreMatrix, threshold: f64) -> Result<(ScreeningResult, ScoreMatrix)> {
    let n_subjects = matrix.subjects().len();
    let n_stimuli = matrix.stimuli().len();
    if n_subjects < 3 {
        return Err(StatsError::InsufficientSubjects {
            required: 3,
            available: n_subjects,
        });
    }
    if n_stimuli < 3 {
        return Err(StatsError::InsufficientStimuli {
            required: 3,
            available: n_stimuli,
        });
    }
    let panel_mos: Vec<Option<f64>> = (0..n_stimuli).map(|j| mos_of(&matrix.column(j))).collect();

    let mut subjects = Vec::with_capacity(n_subjects);
    let mut retained = Vec::new();
    for (i, name) in matrix.subjects().iter().enumerate() {
        let (scores, reference): (Vec<f64>, Vec<f64>) = matrix
            .row(i)
            .iter()
            .zip(&panel_mos)
            .filter_map(|(s, m)| Some(((*s)?, (*m)?)))
            .unzip();
        let entry = match (pearson(&scores, &reference), spearman(&scores, &reference)) {
            (Ok(p), Ok(s)) => SubjectScreening {
                subject: name.clone(),
                pearson: p,
                spearman: s,
                retained: p.min(s) >= threshold,
                note: None,
            },
            (Err(e), _) | (_, Err(e)) => SubjectScreening {
                subject: name.clone(),
                pearson: -1.0,
                spearman: -1.0,
                retained: -1.0 >= threshold,
                note: Some(e.to_string()),
            },
        };
        if entry.retained {
            retained.push(i);
        }
        subjects.push(entry);
    }
    let discarded = n_subjects - retained.len();
    Ok((
        ScreeningResult {
            threshold,
            subjects,
            discarded,
        },
        matrix.select_subjects(&retained),
    ))
}
