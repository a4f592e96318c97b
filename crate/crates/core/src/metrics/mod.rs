//! Full-reference objective quality metrics.
//!
//! Per-frame values are pooled into a sequence value by arithmetic mean in
//! ascending frame order. Infinite per-frame PSNR (identical planes) is
//! replaced by a configurable clamp before pooling and the substitution is
//! flagged on the resulting [`SequenceQuality`].

mod external;
mod psnr;
mod siti;
mod ssim;

use std::fmt;

use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::video::{FrameBuffer, FrameSource, PlaneId, VideoError};

pub use external::{ingest_external_scores, ExternalSchema, ExternalScores};
pub use psnr::{mse, psnr_from_mse, wpsnr};
pub use siti::{
    content_features, frame_spatial_info, frame_temporal_info, spatial_info, temporal_info,
    ContentFeatures,
};
pub use ssim::{ssim_frame, ssim_frame_plane, ssim_plane, SsimParams};

pub const DEFAULT_CLAMP_DB: f64 = 100.0;

#[derive(Debug, thiserror::Error)]
pub enum MetricError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("bit depth mismatch: reference {reference}-bit, test {test}-bit")]
    DepthMismatch { reference: u8, test: u8 },
    #[error("{width}x{height} plane is smaller than the {window}x{window} window")]
    TooSmall {
        width: usize,
        height: usize,
        window: usize,
    },
    #[error("frame count mismatch: reference has {reference} frames, test has {test}")]
    Length { reference: u64, test: u64 },
    #[error("empty input: {0}")]
    Empty(String),
    #[error("need at least {required} frames, got {available}")]
    InsufficientFrames { required: usize, available: usize },
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Video(#[from] VideoError),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = MetricError> = std::result::Result<T, E>;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MetricId {
    PsnrY,
    PsnrU,
    PsnrV,
    Wpsnr,
    Ssim,
    SsimU,
    SsimV,
    External(String),
}

impl fmt::Display for MetricId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricId::PsnrY => f.write_str("PSNR_Y"),
            MetricId::PsnrU => f.write_str("PSNR_U"),
            MetricId::PsnrV => f.write_str("PSNR_V"),
            MetricId::Wpsnr => f.write_str("WPSNR"),
            MetricId::Ssim => f.write_str("SSIM"),
            MetricId::SsimU => f.write_str("SSIM_U"),
            MetricId::SsimV => f.write_str("SSIM_V"),
            MetricId::External(name) => write!(f, "EXTERNAL:{name}"),
        }
    }
}

impl Serialize for MetricId {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PlaneStats {
    pub plane: PlaneId,
    pub mse: f64,
    /// `f64::INFINITY` when `mse` is zero.
    pub psnr: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FrameQuality {
    pub frame_index: u64,
    /// Y, U, V statistics when PSNR was selected.
    pub planes: Option<[PlaneStats; 3]>,
    /// Weighted PSNR over clamped plane values.
    pub wpsnr: Option<f64>,
    pub ssim: Option<f64>,
    pub ssim_u: Option<f64>,
    pub ssim_v: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SequenceQuality {
    pub metric: MetricId,
    pub per_frame: Vec<f64>,
    pub value: f64,
    pub clamp_applied: bool,
}

impl SequenceQuality {
    /// Builds a sequence value from per-frame values, summing in order.
    pub fn from_frames(metric: MetricId, per_frame: Vec<f64>, clamp_applied: bool) -> Result<Self> {
        if per_frame.is_empty() {
            return Err(MetricError::Empty(format!("no per-frame values for {metric}")));
        }
        let value = mean_in_order(&per_frame);
        Ok(SequenceQuality {
            metric,
            per_frame,
            value,
            clamp_applied,
        })
    }
}

pub(crate) fn mean_in_order(values: &[f64]) -> f64 {
    let mut sum = 0.0f64;
    for v in values {
        sum += v;
    }
    sum / values.len() as f64
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricSelection {
    pub psnr: bool,
    pub ssim: bool,
    /// Also compute SSIM on the chroma planes.
    pub ssim_chroma: bool,
    pub ssim_params: SsimParams,
    /// Evaluate frames of a batch on the rayon pool.
    pub parallel: bool,
}

impl Default for MetricSelection {
    fn default() -> Self {
        MetricSelection {
            psnr: true,
            ssim: true,
            ssim_chroma: false,
            ssim_params: SsimParams::default(),
            parallel: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SequenceEvaluation {
    pub frames: Vec<FrameQuality>,
    pub metrics: Vec<SequenceQuality>,
}

/// Computes all selected metrics for one frame pair.
pub fn frame_quality(
    reference: &FrameBuffer,
    test: &FrameBuffer,
    selection: &MetricSelection,
    clamp_db: f64,
) -> Result<FrameQuality> {
    check_formats(reference, test)?;
    let depth = reference.info().bit_depth;
    let mut quality = FrameQuality {
        frame_index: reference.frame_index(),
        planes: None,
        wpsnr: None,
        ssim: None,
        ssim_u: None,
        ssim_v: None,
    };
    if selection.psnr {
        let mut stats = [PlaneStats {
            plane: PlaneId::Y,
            mse: 0.0,
            psnr: 0.0,
        }; 3];
        for plane in PlaneId::ALL {
            let m = mse(reference.plane(plane), test.plane(plane))?;
            stats[plane.index()] = PlaneStats {
                plane,
                mse: m,
                psnr: psnr_from_mse(m, depth),
            };
        }
        let clamp = |p: f64| if p.is_finite() { p } else { clamp_db };
        quality.wpsnr = Some(wpsnr(
            clamp(stats[0].psnr),
            clamp(stats[1].psnr),
            clamp(stats[2].psnr),
        ));
        quality.planes = Some(stats);
    }
    if selection.ssim {
        let p = &selection.ssim_params;
        quality.ssim = Some(ssim_frame_plane(reference, test, PlaneId::Y, p)?);
        if selection.ssim_chroma {
            quality.ssim_u = Some(ssim_frame_plane(reference, test, PlaneId::U, p)?);
            quality.ssim_v = Some(ssim_frame_plane(reference, test, PlaneId::V, p)?);
        }
    }
    Ok(quality)
}

fn check_formats(reference: &FrameBuffer, test: &FrameBuffer) -> Result<()> {
    let (r, t) = (reference.info(), test.info());
    if r.bit_depth != t.bit_depth {
        return Err(MetricError::DepthMismatch {
            reference: r.bit_depth,
            test: t.bit_depth,
        });
    }
    if !r.same_format(t) {
        return Err(MetricError::Dimension(format!(
            "reference is {}, test is {}",
            r.describe(),
            t.describe()
        )));
    }
    Ok(())
}

const BATCH: usize = 8;

/// Streams both sources once and evaluates the selected metrics per frame.
///
/// Frames inside a batch may be evaluated concurrently; results are always
/// pooled in ascending frame order, so the output is independent of
/// `selection.parallel`.
pub fn sequence_quality<R, T>(
    reference: &mut R,
    test: &mut T,
    selection: &MetricSelection,
    clamp_db: f64,
) -> Result<SequenceEvaluation>
where
    R: FrameSource + ?Sized,
    T: FrameSource + ?Sized,
{
    let (ri, ti) = (*reference.info(), *test.info());
    if ri.bit_depth != ti.bit_depth {
        return Err(MetricError::DepthMismatch {
            reference: ri.bit_depth,
            test: ti.bit_depth,
        });
    }
    if !ri.same_format(&ti) {
        return Err(MetricError::Dimension(format!(
            "reference is {}, test is {}",
            ri.describe(),
            ti.describe()
        )));
    }
    if let (Some(a), Some(b)) = (ri.frame_count, ti.frame_count) {
        if a != b {
            return Err(MetricError::Length {
                reference: a,
                test: b,
            });
        }
    }

    let mut frames = Vec::new();
    let mut seen = 0u64;
    loop {
        let mut batch = Vec::with_capacity(BATCH);
        let mut finished = false;
        while batch.len() < BATCH {
            match (reference.next_frame()?, test.next_frame()?) {
                (Some(r), Some(t)) => batch.push((r, t)),
                (None, None) => {
                    finished = true;
                    break;
                }
                (r, _) => {
                    // One side ended early: count the rest of the longer one.
                    let extra = 1 + if r.is_some() {
                        count_remaining(reference)?
                    } else {
                        count_remaining(test)?
                    };
                    let shorter = seen + batch.len() as u64;
                    let (reference, test) = if r.is_some() {
                        (shorter + extra, shorter)
                    } else {
                        (shorter, shorter + extra)
                    };
                    return Err(MetricError::Length { reference, test });
                }
            }
        }
        seen += batch.len() as u64;
        let evaluate = |(r, t): &(FrameBuffer, FrameBuffer)| frame_quality(r, t, selection, clamp_db);
        let results: Vec<Result<FrameQuality>> = if selection.parallel {
            batch.par_iter().map(evaluate).collect()
        } else {
            batch.iter().map(evaluate).collect()
        };
        for r in results {
            frames.push(r?);
        }
        if finished {
            break;
        }
    }
    if frames.is_empty() {
        return Err(MetricError::Empty("sequences contain no frames".into()));
    }
    let metrics = pool(&frames, selection, clamp_db)?;
    Ok(SequenceEvaluation { frames, metrics })
}

fn count_remaining<S: FrameSource + ?Sized>(source: &mut S) -> Result<u64> {
    let mut n = 0;
    while source.next_frame()?.is_some() {
        n += 1;
    }
    Ok(n)
}

fn pool(frames: &[FrameQuality], selection: &MetricSelection, clamp_db: f64) -> Result<Vec<SequenceQuality>> {
    let mut out = Vec::new();
    if selection.psnr {
        let mut any_clamped = false;
        for plane in PlaneId::ALL {
            let mut clamped = false;
            let values: Vec<f64> = frames
                .iter()
                .map(|f| {
                    let p = f.planes.expect("psnr selected")[plane.index()].psnr;
                    if p.is_finite() {
                        p
                    } else {
                        clamped = true;
                        clamp_db
                    }
                })
                .collect();
            any_clamped |= clamped;
            let id = match plane {
                PlaneId::Y => MetricId::PsnrY,
                PlaneId::U => MetricId::PsnrU,
                PlaneId::V => MetricId::PsnrV,
            };
            out.push(SequenceQuality::from_frames(id, values, clamped)?);
        }
        let values = frames.iter().map(|f| f.wpsnr.expect("psnr selected")).collect();
        out.push(SequenceQuality::from_frames(MetricId::Wpsnr, values, any_clamped)?);
    }
    if selection.ssim {
        let values = frames.iter().map(|f| f.ssim.expect("ssim selected")).collect();
        out.push(SequenceQuality::from_frames(MetricId::Ssim, values, false)?);
        if selection.ssim_chroma {
            let u = frames.iter().map(|f| f.ssim_u.expect("chroma ssim")).collect();
            out.push(SequenceQuality::from_frames(MetricId::SsimU, u, false)?);
            let v = frames.iter().map(|f| f.ssim_v.expect("chroma ssim")).collect();
            out.push(SequenceQuality::from_frames(MetricId::SsimV, v, false)?);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::video::{Chroma, MemorySource, Rational, SequenceInfo};

    fn info() -> SequenceInfo {
        SequenceInfo::new(16, 16, Rational::new(25, 1).unwrap(), 8, Chroma::C420, None).unwrap()
    }

    fn frame(index: u64, y: u16) -> FrameBuffer {
        FrameBuffer::new(info(), [vec![y; 256], vec![128; 64], vec![128; 64]], index).unwrap()
    }

    fn psnr_only() -> MetricSelection {
        MetricSelection {
            ssim: false,
            ..MetricSelection::default()
        }
    }

    fn find<'a>(e: &'a SequenceEvaluation, id: MetricId) -> &'a SequenceQuality {
        e.metrics.iter().find(|m| m.metric == id).unwrap()
    }

    #[test]
    fn identical_sequences_clamp() {
        let frames: Vec<_> = (0..10).map(|i| frame(i, 50)).collect();
        let mut a = MemorySource::new(info(), frames.clone());
        let mut b = MemorySource::new(info(), frames);
        let e = sequence_quality(&mut a, &mut b, &psnr_only(), DEFAULT_CLAMP_DB).unwrap();
        let y = find(&e, MetricId::PsnrY);
        assert!(y.per_frame.iter().all(|&v| v == 100.0));
        assert_eq!(y.value, 100.0);
        assert!(y.clamp_applied);
        assert!(find(&e, MetricId::Wpsnr).clamp_applied);
    }

    #[test]
    fn offset_on_middle_frame_only() {
        let reference: Vec<_> = (0..3).map(|i| frame(i, 50)).collect();
        let test = vec![frame(0, 50), frame(1, 51), frame(2, 50)];
        let mut a = MemorySource::new(info(), reference);
        let mut b = MemorySource::new(info(), test);
        let e = sequence_quality(&mut a, &mut b, &psnr_only(), DEFAULT_CLAMP_DB).unwrap();
        let y = find(&e, MetricId::PsnrY);
        assert_eq!(y.per_frame[0], 100.0);
        assert!((y.per_frame[1] - 48.1308).abs() < 1e-4);
        assert_eq!(y.per_frame[2], 100.0);
        assert!(y.clamp_applied);
        assert!((y.value - (200.0 + 20.0 * 255f64.log10()) / 3.0).abs() < 1e-12);
        // chroma untouched on every frame
        assert!(!find(&e, MetricId::PsnrU).per_frame.iter().any(|&v| v != 100.0));
    }

    #[test]
    fn frame_count_mismatch() {
        let mut a = MemorySource::new(info(), (0..3).map(|i| frame(i, 1)).collect());
        let mut b = MemorySource::new(info(), (0..2).map(|i| frame(i, 1)).collect());
        assert!(matches!(
            sequence_quality(&mut a, &mut b, &psnr_only(), 100.0),
            Err(MetricError::Length {
                reference: 3,
                test: 2
            })
        ));
    }

    #[test]
    fn mean_of_two_frames() {
        let q = SequenceQuality::from_frames(MetricId::PsnrY, vec![40.0, 50.0], false).unwrap();
        assert_eq!(q.value, 45.0);
    }

    #[test]
    fn metric_ids_render() {
        assert_eq!(MetricId::Wpsnr.to_string(), "WPSNR");
        assert_eq!(MetricId::External("vmaf".into()).to_string(), "EXTERNAL:vmaf");
    }
}
