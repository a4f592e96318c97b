#![allow(dead_code)]

use codec_eval::video::{Chroma, FrameBuffer, PlaneId, Rational, SequenceInfo};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn info(width: u32, height: u32, bit_depth: u8) -> SequenceInfo {
    SequenceInfo::new(width, height, Rational::new(25, 1).unwrap(), bit_depth, Chroma::C420, None).unwrap()
}

pub fn frame_from_fn(info: SequenceInfo, index: u64, mut f: impl FnMut(PlaneId, usize) -> u16) -> FrameBuffer {
    let planes = PlaneId::ALL.map(|p| (0..info.plane_len(p)).map(|i| f(p, i)).collect());
    FrameBuffer::new(info, planes, index).unwrap()
}

pub fn random_frame(rng: &mut impl Rng, info: SequenceInfo, index: u64) -> FrameBuffer {
    let max = info.max_sample();
    frame_from_fn(info, index, |_, _| rng.gen_range(0..=max))
}

pub fn random_plane(rng: &mut impl Rng, len: usize, max: u16) -> Vec<u16> {
    (0..len).map(|_| rng.gen_range(0..=max)).collect()
}

/// Direct 2-D evaluation of mean SSIM: for every window position the
/// Gaussian weights are built from scratch and the weighted moments are
/// taken around the weighted means.
pub fn brute_force_ssim(reference: &[u16], test: &[u16], width: usize, height: usize, bit_depth: u8) -> f64 {
    let n = 11usize;
    let sigma = 1.5f64;
    let c = (n as f64 - 1.0) / 2.0;
    let mut weights = vec![0.0f64; n * n];
    for dy in 0..n {
        for dx in 0..n {
            let (ry, rx) = (dy as f64 - c, dx as f64 - c);
            weights[dy * n + dx] = (-(rx * rx + ry * ry) / (2.0 * sigma * sigma)).exp();
        }
    }
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);

    let l = ((1u32 << bit_depth) - 1) as f64;
    let c1 = (0.01 * l).powi(2);
    let c2 = (0.03 * l).powi(2);
    let mut sum = 0.0;
    let mut count = 0usize;
    for y0 in 0..=height - n {
        for x0 in 0..=width - n {
            let at = |p: &[u16], dy: usize, dx: usize| p[(y0 + dy) * width + x0 + dx] as f64;
            let (mut mr, mut mt) = (0.0, 0.0);
            for dy in 0..n {
                for dx in 0..n {
                    let w = weights[dy * n + dx];
                    mr += w * at(reference, dy, dx);
                    mt += w * at(test, dy, dx);
                }
            }
            let (mut vr, mut vt, mut cov) = (0.0, 0.0, 0.0);
            for dy in 0..n {
                for dx in 0..n {
                    let w = weights[dy * n + dx];
                    let a = at(reference, dy, dx) - mr;
                    let b = at(test, dy, dx) - mt;
                    vr += w * a * a;
                    vt += w * b * b;
                    cov += w * a * b;
                }
            }
            sum += ((2.0 * mr * mt + c1) * (2.0 * cov + c2)) / ((mr * mr + mt * mt + c1) * (vr + vt + c2));
            count += 1;
        }
    }
    sum / count as f64
}

/// Population standard deviation of the Sobel gradient magnitude over the
/// interior pixels of one plane.
pub fn brute_force_si(plane: &[u16], width: usize, height: usize) -> f64 {
    let kx = [[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]];
    let ky = [[-1.0, -2.0, -1.0], [0.0, 0.0, 0.0], [1.0, 2.0, 1.0]];
    let mut mags = Vec::new();
    for y in 1..height - 1 {
        for x in 1..width - 1 {
            let (mut gx, mut gy) = (0.0f64, 0.0f64);
            for j in 0..3 {
                for i in 0..3 {
                    let v = plane[(y + j - 1) * width + (x + i - 1)] as f64;
                    gx += kx[j][i] * v;
                    gy += ky[j][i] * v;
                }
            }
            mags.push((gx * gx + gy * gy).sqrt());
        }
    }
    let n = mags.len() as f64;
    let mean = mags.iter().sum::<f64>() / n;
    (mags.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / n).sqrt()
}

/// Upper tail of the F distribution by numerical integration of its
/// density, `∫_F^∞ g / ∫_0^∞ g`, with `x = u²`, `u = t / (1 - t)` mapping
/// the half line onto `[0, 1)` and composite Simpson quadrature.
pub fn numeric_f_survival(f: f64, d1: f64, d2: f64) -> f64 {
    let h = |t: f64| -> f64 {
        if t >= 1.0 {
            return 0.0;
        }
        let u = t / (1.0 - t);
        let x = u * u;
        2.0 * u.powf(d1 - 1.0) * (1.0 + d1 * x / d2).powf(-(d1 + d2) / 2.0) / ((1.0 - t) * (1.0 - t))
    };
    let simpson = |a: f64, b: f64, intervals: usize| -> f64 {
        let step = (b - a) / intervals as f64;
        let mut s = h(a) + h(b);
        for i in 1..intervals {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * h(a + i as f64 * step);
        }
        s * step / 3.0
    };
    let uf = f.sqrt();
    let tf = uf / (1.0 + uf);
    let intervals = 400_000;
    simpson(tf, 1.0, intervals) / (simpson(0.0, tf, intervals) + simpson(tf, 1.0, intervals))
}

/// Pooled-variance two-sample t statistic.
pub fn t_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (ma, mb) = (mean(a), mean(b));
    let ss = |v: &[f64], m: f64| v.iter().map(|x| (x - m).powi(2)).sum::<f64>();
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let sp2 = (ss(a, ma) + ss(b, mb)) / (na + nb - 2.0);
    (ma - mb) / (sp2 * (1.0 / na + 1.0 / nb)).sqrt()
}

/// A 10-subject panel over `stimuli` stimuli with a clear quality ramp.
/// Subject `reversed` (if any) scores the ramp backwards.
pub fn synthetic_panel(stimuli: usize, reversed: Option<usize>, seed: u64) -> Vec<Vec<f64>> {
    let mut r = rng(seed);
    (0..10)
        .map(|s| {
            (0..stimuli)
                .map(|j| {
                    let j = if Some(s) == reversed { stimuli - 1 - j } else { j };
                    let base = 10.0 + 80.0 * j as f64 / (stimuli - 1) as f64;
                    (base + r.gen_range(-4.0..4.0)).clamp(0.0, 100.0)
                })
                .collect()
        })
        .collect()
}

/// Y4M streams that must be rejected as format errors.
pub fn malformed_y4m_cases() -> Vec<(&'static str, Vec<u8>)> {
    vec![
        ("no_magic", b"YUV4MPEG W4 H4 F25:1\nFRAME\n".to_vec()),
        ("zero_width", b"YUV4MPEG2 W0 H4 F25:1\n".to_vec()),
        ("bad_height", b"YUV4MPEG2 W4 Hx F25:1\n".to_vec()),
        ("zero_rate", b"YUV4MPEG2 W4 H4 F0:1\n".to_vec()),
        ("chroma_411", b"YUV4MPEG2 W4 H4 F25:1 C411\n".to_vec()),
        ("interlaced", b"YUV4MPEG2 W4 H4 F25:1 It\n".to_vec()),
        ("no_newline", b"YUV4MPEG2 W4 H4 F25:1".to_vec()),
        ("odd_420", b"YUV4MPEG2 W3 H4 F25:1 C420\n".to_vec()),
        ("bad_marker", b"YUV4MPEG2 W4 H4 F25:1\nFRAMEX\n".to_vec()),
        ("truncated", b"YUV4MPEG2 W4 H4 F25:1\nFRAME\n\x10\x10".to_vec()),
        ("binary", vec![0xff; 64]),
        ("empty", Vec::new()),
        ("ten_bit_range", {
            let mut v = b"YUV4MPEG2 W2 H2 F25:1 C420p10\nFRAME\n".to_vec();
            v.extend([0xff, 0x7f, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0]);
            v
        }),
    ]
}
