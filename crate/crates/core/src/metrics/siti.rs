//! Spatial and temporal perceptual information of a sequence (luma only).

use serde::Serialize;

use super::{MetricError, Result};
use crate::video::{FrameSource, PlaneId};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ContentFeatures {
    pub si: f64,
    pub ti: f64,
}

/// Population standard deviation, two-pass, ascending summation.
fn population_stddev(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let (count, sum) = values
        .clone()
        .fold((0usize, 0.0f64), |(n, s), v| (n + 1, s + v));
    if count == 0 {
        return 0.0;
    }
    let mean = sum / count as f64;
    let ss = values.fold(0.0f64, |acc, v| acc + (v - mean) * (v - mean));
    (ss / count as f64).sqrt()
}

/// Standard deviation of the Sobel gradient magnitude over interior pixels.
pub fn frame_spatial_info(plane: &[u16], width: usize, height: usize) -> Result<f64> {
    if plane.len() != width * height {
        return Err(MetricError::Dimension(format!(
            "plane has {} samples, expected {width}x{height}",
            plane.len()
        )));
    }
    if width < 3 || height < 3 {
        return Err(MetricError::TooSmall {
            width,
            height,
            window: 3,
        });
    }
    let at = |x: usize, y: usize| i32::from(plane[y * width + x]);
    let mut magnitudes = Vec::with_capacity((width - 2) * (height - 2));
    for y in 1..height - 1 {
        for x in 1..width - 1 {
            let gx = (at(x + 1, y - 1) + 2 * at(x + 1, y) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + 2 * at(x - 1, y) + at(x - 1, y + 1));
            let gy = (at(x - 1, y + 1) + 2 * at(x, y + 1) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + 2 * at(x, y - 1) + at(x + 1, y - 1));
            magnitudes.push(f64::from(gx * gx + gy * gy).sqrt());
        }
    }
    Ok(population_stddev(magnitudes.iter().copied()))
}

/// Standard deviation of the sample-wise difference `current - previous`.
pub fn frame_temporal_info(previous: &[u16], current: &[u16]) -> Result<f64> {
    if previous.len() != current.len() {
        return Err(MetricError::Dimension(format!(
            "plane lengths differ: {} vs {}",
            previous.len(),
            current.len()
        )));
    }
    Ok(population_stddev(
        current
            .iter()
            .zip(previous)
            .map(|(&c, &p)| f64::from(i32::from(c) - i32::from(p))),
    ))
}

/// Maximum per-frame SI over the sequence.
pub fn spatial_info<S: FrameSource + ?Sized>(source: &mut S) -> Result<f64> {
    let (w, h) = source.info().plane_dims(PlaneId::Y);
    let mut best: Option<f64> = None;
    while let Some(frame) = source.next_frame()? {
        let si = frame_spatial_info(frame.plane(PlaneId::Y), w, h)?;
        best = Some(best.map_or(si, |b| b.max(si)));
    }
    best.ok_or_else(|| MetricError::Empty("sequence has no frames".into()))
}

/// Maximum TI over successive frame pairs.
pub fn temporal_info<S: FrameSource + ?Sized>(source: &mut S) -> Result<f64> {
    content_features_inner(source, false).map(|f| f.ti)
}

/// SI and TI in a single pass over the sequence.
pub fn content_features<S: FrameSource + ?Sized>(source: &mut S) -> Result<ContentFeatures> {
    content_features_inner(source, true)
}

fn content_features_inner<S: FrameSource + ?Sized>(
    source: &mut S,
    with_si: bool,
) -> Result<ContentFeatures> {
    let (w, h) = source.info().plane_dims(PlaneId::Y);
    let mut si = 0.0f64;
    let mut ti: Option<f64> = None;
    let mut previous: Option<Vec<u16>> = None;
    let mut frames = 0usize;
    while let Some(frame) = source.next_frame()? {
        frames += 1;
        let [luma, _, _] = frame.into_planes();
        if with_si {
            si = si.max(frame_spatial_info(&luma, w, h)?);
        }
        if let Some(prev) = &previous {
            let t = frame_temporal_info(prev, &luma)?;
            ti = Some(ti.map_or(t, |b| b.max(t)));
        }
        previous = Some(luma);
    }
    match ti {
        Some(ti) => Ok(ContentFeatures { si, ti }),
        None => Err(MetricError::InsufficientFrames {
            required: 2,
            available: frames,
        }),
    }
}
