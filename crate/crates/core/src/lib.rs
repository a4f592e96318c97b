//! Codec evaluation toolkit.
//!
//! The crate covers the measurement side of a codec comparison:
//!
//! * [`video`]: Y4M and raw planar YUV readers/writers (8 and 10 bit).
//! * [`metrics`]: MSE, PSNR, weighted PSNR, SSIM, SI/TI and ingestion of
//!   externally computed per-frame scores.
//! * [`rd`]: rate-distortion curves and Bjøntegaard deltas using monotone
//!   piecewise-cubic interpolation.
//! * [`subjective`]: MOS, confidence intervals, subject screening and
//!   one-way ANOVA.
//! * [`profile`]: real-time factors and Callgrind-based stage repartition.
//! * [`cli`]: the `codec-eval` command line and its report format.

pub mod cli;
pub mod metrics;
pub mod profile;
pub mod rd;
pub mod report;
pub mod subjective;
pub mod video;
