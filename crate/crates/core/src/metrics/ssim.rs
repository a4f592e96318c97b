//! Gaussian-windowed SSIM computed over every window with full support.

use super::{MetricError, Result};
use crate::video::{FrameBuffer, PlaneId};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SsimParams {
    /// Side of the square window, in samples.
    pub window: usize,
    pub sigma: f64,
    pub k1: f64,
    pub k2: f64,
}

impl Default for SsimParams {
    fn default() -> Self {
        SsimParams {
            window: 11,
            sigma: 1.5,
            k1: 0.01,
            k2: 0.03,
        }
    }
}

impl SsimParams {
    /// Normalised 1-D Gaussian taps. The 2-D window is their outer product.
    pub fn taps(&self) -> Vec<f64> {
        let center = (self.window as f64 - 1.0) / 2.0;
        let raw: Vec<f64> = (0..self.window)
            .map(|i| {
                let d = i as f64 - center;
                (-(d * d) / (2.0 * self.sigma * self.sigma)).exp()
            })
            .collect();
        let total: f64 = raw.iter().sum();
        raw.into_iter().map(|v| v / total).collect()
    }

    /// Stabilising constants `(C1, C2)` for samples of the given depth.
    pub fn constants(&self, bit_depth: u8) -> (f64, f64) {
        let range = ((1u32 << bit_depth) - 1) as f64;
        ((self.k1 * range).powi(2), (self.k2 * range).powi(2))
    }
}

/// Mean SSIM between two planes of identical geometry.
pub fn ssim_plane(
    reference: &[u16],
    test: &[u16],
    width: usize,
    height: usize,
    bit_depth: u8,
    params: &SsimParams,
) -> Result<f64> {
    let n = params.window;
    if n == 0 {
        return Err(MetricError::Dimension("SSIM window must be non-empty".into()));
    }
    if reference.len() != width * height || test.len() != width * height {
        return Err(MetricError::Dimension(format!(
            "plane lengths {} and {} do not match {width}x{height}",
            reference.len(),
            test.len()
        )));
    }
    if width < n || height < n {
        return Err(MetricError::TooSmall {
            width,
            height,
            window: n,
        });
    }
    let taps = params.taps();
    let (c1, c2) = params.constants(bit_depth);
    let out_w = width - n + 1;
    let out_h = height - n + 1;

    // Horizontally filtered moments for the last `n` input rows, stored as
    // five interleaved channels: a, b, a², b², ab.
    let mut ring = vec![0.0f64; n * out_w * 5];
    let fill_row = |row: usize, slot: &mut [f64]| {
        let ra = &reference[row * width..(row + 1) * width];
        let rb = &test[row * width..(row + 1) * width];
        for x in 0..out_w {
            let mut m = [0.0f64; 5];
            for (k, &t) in taps.iter().enumerate() {
                let a = f64::from(ra[x + k]);
                let b = f64::from(rb[x + k]);
                m[0] += t * a;
                m[1] += t * b;
                m[2] += t * a * a;
                m[3] += t * b * b;
                m[4] += t * a * b;
            }
            slot[x * 5..x * 5 + 5].copy_from_slice(&m);
        }
    };
    for row in 0..n - 1 {
        fill_row(row, &mut ring[row * out_w * 5..(row + 1) * out_w * 5]);
    }

    let mut total = 0.0f64;
    for y in 0..out_h {
        let newest = y + n - 1;
        let slot = newest % n;
        fill_row(newest, &mut ring[slot * out_w * 5..(slot + 1) * out_w * 5]);
        for x in 0..out_w {
            let mut m = [0.0f64; 5];
            for (k, &t) in taps.iter().enumerate() {
                let base = ((y + k) % n) * out_w * 5 + x * 5;
                for c in 0..5 {
                    m[c] += t * ring[base + c];
                }
            }
            total += ssim_from_moments(m, c1, c2);
        }
    }
    Ok(total / (out_w * out_h) as f64)
}

/// SSIM of one window from its weighted moments `[μa, μb, E[a²], E[b²], E[ab]]`.
pub(crate) fn ssim_from_moments(m: [f64; 5], c1: f64, c2: f64) -> f64 {
    let [mu_a, mu_b, aa, bb, ab] = m;
    let var_a = aa - mu_a * mu_a;
    let var_b = bb - mu_b * mu_b;
    let cov = ab - mu_a * mu_b;
    ((2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2))
        / ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2))
}

fn check_pair(reference: &FrameBuffer, test: &FrameBuffer) -> Result<()> {
    if !reference.info().same_format(test.info()) {
        return Err(MetricError::Dimension(format!(
            "reference is {}, test is {}",
            reference.info().describe(),
            test.info().describe()
        )));
    }
    Ok(())
}

/// SSIM of one plane of a frame pair.
pub fn ssim_frame_plane(
    reference: &FrameBuffer,
    test: &FrameBuffer,
    plane: PlaneId,
    params: &SsimParams,
) -> Result<f64> {
    check_pair(reference, test)?;
    let (w, h) = reference.plane_dims(plane);
    ssim_plane(
        reference.plane(plane),
        test.plane(plane),
        w,
        h,
        reference.info().bit_depth,
        params,
    )
}

/// Luma SSIM of a frame pair.
pub fn ssim_frame(reference: &FrameBuffer, test: &FrameBuffer, params: &SsimParams) -> Result<f64> {
    ssim_frame_plane(reference, test, PlaneId::Y, params)
}
