//! Function-to-stage mapping and percentage repartition.

use regex::Regex;
use serde::Serialize;

use super::{FunctionCost, ProfileError};

pub const OTHER_STAGE: &str = "Other";
pub const DEFAULT_BUCKET_THRESHOLD: f64 = 1.0;

/// Built-in taxonomy for HM/VTM symbol names.
pub const DEFAULT_MAPPING: &str = include_str!("../../data/default_stages.map");

/// Ordered `pattern -> stage` rules; the first matching pattern wins and
/// unmatched functions go to [`OTHER_STAGE`].
#[derive(Clone, Debug)]
pub struct StageMapping {
    rules: Vec<(Regex, String)>,
}

impl StageMapping {
    pub fn new(rules: Vec<(Regex, String)>) -> Self {
        StageMapping { rules }
    }

    /// Parses the mapping file syntax: one `pattern -> stage` rule per line,
    /// `#` starts a comment line. Patterns are regular expressions matched
    /// anywhere in the function name.
    pub fn parse(text: &str) -> Result<Self, ProfileError> {
        let mut rules = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| ProfileError::Mapping {
                line: n + 1,
                message,
            };
            let (pattern, stage) = line
                .rsplit_once("->")
                .ok_or_else(|| err(format!("expected `pattern -> stage`, got `{line}`")))?;
            let (pattern, stage) = (pattern.trim(), stage.trim());
            if pattern.is_empty() || stage.is_empty() {
                return Err(err(format!("empty pattern or stage in `{line}`")));
            }
            let regex = Regex::new(pattern).map_err(|e| err(format!("bad pattern: {e}")))?;
            rules.push((regex, stage.to_string()));
        }
        Ok(StageMapping { rules })
    }

    pub fn builtin() -> Self {
        Self::parse(DEFAULT_MAPPING).expect("built-in mapping is valid")
    }

    pub fn stage_for(&self, function: &str) -> &str {
        self.rules
            .iter()
            .find(|(re, _)| re.is_match(function))
            .map_or(OTHER_STAGE, |(_, stage)| stage.as_str())
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StageShare {
    pub stage: String,
    pub cost: u64,
    pub percent: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StageProfile {
    pub total_cost: u64,
    /// Stages at or above the threshold by decreasing cost, then `Other`.
    pub stages: Vec<StageShare>,
    /// Stages folded into `Other` for falling under the threshold.
    pub other_bucket: Vec<String>,
    pub threshold: f64,
}

impl StageProfile {
    pub fn percent_of(&self, stage: &str) -> Option<f64> {
        self.stages.iter().find(|s| s.stage == stage).map(|s| s.percent)
    }
}

pub fn aggregate_stages(
    costs: &[FunctionCost],
    mapping: &StageMapping,
    bucket_threshold: f64,
) -> Result<StageProfile, ProfileError> {
    if costs.is_empty() {
        return Err(ProfileError::EmptyProfile);
    }
    let total: u64 = costs.iter().map(|f| f.self_cost).sum();
    if total == 0 {
        return Err(ProfileError::EmptyProfile);
    }
    let mut totals: Vec<(String, u64)> = Vec::new();
    for f in costs {
        let stage = mapping.stage_for(&f.name);
        match totals.iter_mut().find(|(s, _)| s == stage) {
            Some((_, c)) => *c += f.self_cost,
            None => totals.push((stage.to_string(), f.self_cost)),
        }
    }
    let percent = |c: u64| c as f64 * 100.0 / total as f64;

    let mut other = 0u64;
    let mut other_bucket = Vec::new();
    let mut kept = Vec::new();
    for (stage, cost) in totals {
        if stage == OTHER_STAGE {
            other += cost;
        } else if percent(cost) < bucket_threshold {
            other += cost;
            other_bucket.push(stage);
        } else {
            kept.push(StageShare {
                percent: percent(cost),
                stage,
                cost,
            });
        }
    }
    kept.sort_by(|a, b| b.cost.cmp(&a.cost).then_with(|| a.stage.cmp(&b.stage)));
    other_bucket.sort();
    if other > 0 {
        kept.push(StageShare {
            stage: OTHER_STAGE.to_string(),
            cost: other,
            percent: percent(other),
        });
    }
    Ok(StageProfile {
        total_cost: total,
        stages: kept,
        other_bucket,
        threshold: bucket_threshold,
    })
}
