use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use super::special::f_survival;
use super::{mos_of, Result, ScoreMatrix, StatsError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Factor {
    Codec,
    Resolution,
    Bitrate,
    Content,
}

impl Factor {
    pub const ALL: [Factor; 4] = [
        Factor::Codec,
        Factor::Resolution,
        Factor::Bitrate,
        Factor::Content,
    ];
}

impl fmt::Display for Factor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Factor::Codec => "codec",
            Factor::Resolution => "resolution",
            Factor::Bitrate => "bitrate",
            Factor::Content => "content",
        })
    }
}

impl FromStr for Factor {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Factor::ALL
            .into_iter()
            .find(|f| f.to_string() == s)
            .ok_or_else(|| format!("unknown factor `{s}`"))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AnovaResult {
    pub factor: String,
    pub levels: Vec<String>,
    pub df_between: usize,
    pub df_within: usize,
    pub ss_between: f64,
    pub ss_within: f64,
    pub f: f64,
    pub p_value: f64,
}

/// Classical one-way ANOVA over labelled groups of observations.
pub fn anova_groups(factor: &str, groups: &[(String, Vec<f64>)]) -> Result<AnovaResult> {
    if groups.len() < 2 {
        return Err(StatsError::SingleLevel {
            factor: factor.to_string(),
            levels: groups.len(),
        });
    }
    for (level, obs) in groups {
        if obs.len() < 2 {
            return Err(StatsError::DegenerateLevel {
                factor: factor.to_string(),
                level: level.clone(),
                count: obs.len(),
            });
        }
    }
    let k = groups.len();
    let n: usize = groups.iter().map(|(_, g)| g.len()).sum();
    let mut grand = 0.0;
    for (_, g) in groups {
        for v in g {
            grand += v;
        }
    }
    let grand = grand / n as f64;

    let mut ss_between = 0.0;
    let mut ss_within = 0.0;
    for (_, g) in groups {
        let mean = mos_of(g).expect("non-empty group");
        ss_between += g.len() as f64 * (mean - grand) * (mean - grand);
        for v in g {
            ss_within += (v - mean) * (v - mean);
        }
    }
    let df_between = k - 1;
    let df_within = n - k;
    let (f, p_value) = if ss_within == 0.0 {
        if ss_between == 0.0 {
            (0.0, 1.0)
        } else {
            return Err(StatsError::ZeroWithinVariance(factor.to_string()));
        }
    } else {
        let f = (ss_between / df_between as f64) / (ss_within / df_within as f64);
        (f, f_survival(f, df_between as f64, df_within as f64))
    };
    Ok(AnovaResult {
        factor: factor.to_string(),
        levels: groups.iter().map(|(l, _)| l.clone()).collect(),
        df_between,
        df_within,
        ss_between,
        ss_within,
        f,
        p_value,
    })
}

/// One-way ANOVA of per-stimulus MOS grouped by a factor. Levels are taken
/// in order of first appearance among the stimuli.
pub fn anova_oneway(matrix: &ScoreMatrix, factor: Factor) -> Result<AnovaResult> {
    let mut groups: Vec<(String, Vec<f64>)> = Vec::new();
    for (j, stimulus) in matrix.stimuli().iter().enumerate() {
        let factors = stimulus
            .factors
            .as_ref()
            .ok_or_else(|| StatsError::MissingMetadata(stimulus.id.clone()))?;
        let level = match factor {
            Factor::Codec => factors.codec.clone(),
            Factor::Resolution => factors.resolution.clone(),
            Factor::Bitrate => factors.bitrate_kbps.to_string(),
            Factor::Content => factors.content.clone(),
        };
        let Some(mos) = mos_of(&matrix.column(j)) else {
            continue;
        };
        match groups.iter_mut().find(|(l, _)| *l == level) {
            Some((_, g)) => g.push(mos),
            None => groups.push((level, vec![mos])),
        }
    }
    anova_groups(&factor.to_string(), &groups)
}
