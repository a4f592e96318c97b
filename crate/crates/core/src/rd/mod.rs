//! Rate-distortion curves and Bjøntegaard deltas.
//!
//! Each curve is interpolated with a monotone piecewise cubic (PCHIP) and
//! integrated exactly over the range shared by both curves. The delta
//! bit-rate interpolates `log10(bitrate)` as a function of quality; the delta
//! quality interpolates quality as a function of `log10(bitrate)`.

mod pchip;

use std::io::Read;

use serde::{Deserialize, Serialize};

pub use pchip::Pchip;

/// Below this quality overlap the BD figure is reported with a warning.
pub const NARROW_OVERLAP: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RdError {
    #[error("curve needs at least 3 points, got {0}")]
    InsufficientPoints(usize),
    #[error("duplicate bitrate {0} kbps")]
    Duplicate(f64),
    #[error(
        "quality is not increasing with bitrate between points {first} and {second} \
         ({first_quality} -> {second_quality}); inspect the data"
    )]
    NonMonotone {
        first: usize,
        second: usize,
        first_quality: f64,
        second_quality: f64,
    },
    #[error("invalid point: {0}")]
    InvalidPoint(String),
    #[error("curves do not overlap: [{low}, {high}]")]
    NoOverlap { low: f64, high: f64 },
    #[error("metric mismatch: anchor uses `{anchor}`, test uses `{test}`")]
    MetricMismatch { anchor: String, test: String },
    #[error("interpolation error: {0}")]
    Interpolation(String),
    #[error("RD CSV: {0}")]
    Parse(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RdPoint {
    pub bitrate_kbps: f64,
    pub quality: f64,
    pub label: String,
    /// Confidence half-width of a subjective quality value, when known.
    pub ci95: Option<f64>,
}

impl RdPoint {
    pub fn new(bitrate_kbps: f64, quality: f64, label: impl Into<String>) -> Self {
        RdPoint {
            bitrate_kbps,
            quality,
            label: label.into(),
            ci95: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RdCurve {
    pub codec: String,
    pub sequence: String,
    pub metric: String,
    points: Vec<RdPoint>,
}

impl RdCurve {
    pub fn points(&self) -> &[RdPoint] {
        &self.points
    }

    pub fn log_rates(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.bitrate_kbps.log10()).collect()
    }

    pub fn qualities(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.quality).collect()
    }

    /// `log10(bitrate)` as a function of quality.
    pub fn rate_interpolant(&self) -> Result<Pchip, RdError> {
        Pchip::new(&self.qualities(), &self.log_rates())
    }

    /// Quality as a function of `log10(bitrate)`.
    pub fn quality_interpolant(&self) -> Result<Pchip, RdError> {
        Pchip::new(&self.log_rates(), &self.qualities())
    }

    /// Adjacent points whose confidence intervals overlap.
    pub fn overlapping_intervals(&self) -> Vec<(usize, usize)> {
        self.points
            .windows(2)
            .enumerate()
            .filter_map(|(i, w)| match (w[0].ci95, w[1].ci95) {
                (Some(a), Some(b)) if w[0].quality + a >= w[1].quality - b => Some((i, i + 1)),
                _ => None,
            })
            .collect()
    }
}

/// Sorts points by bitrate and checks the curve invariants.
pub fn validate_curve(
    codec: impl Into<String>,
    sequence: impl Into<String>,
    metric: impl Into<String>,
    mut points: Vec<RdPoint>,
) -> Result<RdCurve, RdError> {
    for p in &points {
        if !(p.bitrate_kbps.is_finite() && p.bitrate_kbps > 0.0) {
            return Err(RdError::InvalidPoint(format!(
                "bitrate must be positive, got {} ({})",
                p.bitrate_kbps, p.label
            )));
        }
        if !p.quality.is_finite() {
            return Err(RdError::InvalidPoint(format!(
                "quality must be finite ({})",
                p.label
            )));
        }
        if matches!(p.ci95, Some(c) if !(c >= 0.0)) {
            return Err(RdError::InvalidPoint(format!(
                "confidence interval must be nonnegative ({})",
                p.label
            )));
        }
    }
    if points.len() < 3 {
        return Err(RdError::InsufficientPoints(points.len()));
    }
    points.sort_by(|a, b| a.bitrate_kbps.total_cmp(&b.bitrate_kbps));
    for w in points.windows(2) {
        if w[0].bitrate_kbps == w[1].bitrate_kbps {
            return Err(RdError::Duplicate(w[0].bitrate_kbps));
        }
    }
    for (i, w) in points.windows(2).enumerate() {
        if w[1].quality <= w[0].quality {
            return Err(RdError::NonMonotone {
                first: i,
                second: i + 1,
                first_quality: w[0].quality,
                second_quality: w[1].quality,
            });
        }
    }
    Ok(RdCurve {
        codec: codec.into(),
        sequence: sequence.into(),
        metric: metric.into(),
        points,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Overlap {
    pub low: f64,
    pub high: f64,
}

impl Overlap {
    pub fn width(&self) -> f64 {
        self.high - self.low
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BdRate {
    /// Negative when the test curve needs less rate for the same quality.
    pub percent: f64,
    /// Quality interval integrated over.
    pub overlap: Overlap,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BdQuality {
    /// Positive when the test curve reaches higher quality at the same rate.
    pub delta: f64,
    /// `log10(kbps)` interval integrated over.
    pub overlap: Overlap,
    pub warnings: Vec<String>,
}

fn check_metrics(anchor: &RdCurve, test: &RdCurve) -> Result<(), RdError> {
    if anchor.metric != test.metric {
        return Err(RdError::MetricMismatch {
            anchor: anchor.metric.clone(),
            test: test.metric.clone(),
        });
    }
    Ok(())
}

fn overlap_of(a: &[f64], b: &[f64]) -> Result<Overlap, RdError> {
    let low = a[0].max(b[0]);
    let high = a[a.len() - 1].min(b[b.len() - 1]);
    if !(high > low) {
        return Err(RdError::NoOverlap { low, high });
    }
    Ok(Overlap { low, high })
}

fn outside_warnings(role: &str, curve: &RdCurve, axis: &[f64], overlap: Overlap, out: &mut Vec<String>) {
    for (p, &v) in curve.points.iter().zip(axis) {
        if v < overlap.low || v > overlap.high {
            out.push(format!(
                "{role} point `{}` ({} kbps, quality {}) lies outside the overlap",
                p.label, p.bitrate_kbps, p.quality
            ));
        }
    }
}

fn ci_warnings(role: &str, curve: &RdCurve, out: &mut Vec<String>) {
    for (i, j) in curve.overlapping_intervals() {
        out.push(format!(
            "{role} points `{}` and `{}` have overlapping confidence intervals",
            curve.points[i].label, curve.points[j].label
        ));
    }
}

/// Bjøntegaard delta bit-rate of `test` against `anchor`, in percent.
pub fn bd_rate(anchor: &RdCurve, test: &RdCurve) -> Result<BdRate, RdError> {
    check_metrics(anchor, test)?;
    let (qa, qt) = (anchor.qualities(), test.qualities());
    let overlap = overlap_of(&qa, &qt)?;
    let fa = anchor.rate_interpolant()?;
    let ft = test.rate_interpolant()?;
    let ia = fa.integrate(overlap.low, overlap.high)?;
    let it = ft.integrate(overlap.low, overlap.high)?;
    let mean_log_diff = (it - ia) / overlap.width();

    let mut warnings = Vec::new();
    if overlap.width() <= NARROW_OVERLAP {
        warnings.push(format!(
            "quality overlap {} is narrower than {NARROW_OVERLAP}",
            overlap.width()
        ));
    }
    outside_warnings("anchor", anchor, &qa, overlap, &mut warnings);
    outside_warnings("test", test, &qt, overlap, &mut warnings);
    ci_warnings("anchor", anchor, &mut warnings);
    ci_warnings("test", test, &mut warnings);
    Ok(BdRate {
        percent: (10f64.powf(mean_log_diff) - 1.0) * 100.0,
        overlap,
        warnings,
    })
}

/// Bjøntegaard delta quality of `test` against `anchor`, in metric units.
pub fn bd_quality(anchor: &RdCurve, test: &RdCurve) -> Result<BdQuality, RdError> {
    check_metrics(anchor, test)?;
    let (ra, rt) = (anchor.log_rates(), test.log_rates());
    let overlap = overlap_of(&ra, &rt)?;
    let fa = anchor.quality_interpolant()?;
    let ft = test.quality_interpolant()?;
    let ia = fa.integrate(overlap.low, overlap.high)?;
    let it = ft.integrate(overlap.low, overlap.high)?;

    let mut warnings = Vec::new();
    outside_warnings("anchor", anchor, &ra, overlap, &mut warnings);
    outside_warnings("test", test, &rt, overlap, &mut warnings);
    ci_warnings("anchor", anchor, &mut warnings);
    ci_warnings("test", test, &mut warnings);
    Ok(BdQuality {
        delta: (it - ia) / overlap.width(),
        overlap,
        warnings,
    })
}

#[derive(Deserialize)]
struct RdRow {
    codec: String,
    sequence: String,
    metric: String,
    label: String,
    bitrate_kbps: f64,
    quality: f64,
    ci95: Option<f64>,
}

/// Reads `codec,sequence,metric,label,bitrate_kbps,quality[,ci95]` rows and
/// groups them into validated curves, in order of first appearance.
pub fn read_rd_csv<R: Read>(reader: R) -> Result<Vec<RdCurve>, RdError> {
    let mut csv = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut groups: Vec<((String, String, String), Vec<RdPoint>)> = Vec::new();
    for row in csv.deserialize::<RdRow>() {
        let row = row.map_err(|e| RdError::Parse(e.to_string()))?;
        let key = (row.codec, row.sequence, row.metric);
        let point = RdPoint {
            bitrate_kbps: row.bitrate_kbps,
            quality: row.quality,
            label: row.label,
            ci95: row.ci95,
        };
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, points)) => points.push(point),
            None => groups.push((key, vec![point])),
        }
    }
    if groups.is_empty() {
        return Err(RdError::Parse("no data rows".into()));
    }
    groups
        .into_iter()
        .map(|((codec, sequence, metric), points)| {
            validate_curve(codec.clone(), sequence.clone(), metric.clone(), points).map_err(|e| {
                RdError::InvalidPoint(format!("curve {codec}/{sequence}/{metric}: {e}"))
            })
        })
        .collect()
}
