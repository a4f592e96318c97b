use super::{MetricError, Result};

/// Mean squared error between two sample planes of equal length.
///
/// The squared differences are summed exactly in integer arithmetic, so the
/// result does not depend on evaluation order.
pub fn mse(reference: &[u16], test: &[u16]) -> Result<f64> {
    if reference.len() != test.len() {
        return Err(MetricError::Dimension(format!(
            "plane lengths differ: {} vs {}",
            reference.len(),
            test.len()
        )));
    }
    if reference.is_empty() {
        return Err(MetricError::Empty("empty plane".into()));
    }
    let sse: u64 = reference
        .iter()
        .zip(test)
        .map(|(&a, &b)| {
            let d = i64::from(a) - i64::from(b);
            (d * d) as u64
        })
        .sum();
    Ok(sse as f64 / reference.len() as f64)
}

/// PSNR in dB for a signal of amplitude `2^bit_depth - 1`.
///
/// Returns `f64::INFINITY` when `mse` is zero.
pub fn psnr_from_mse(mse: f64, bit_depth: u8) -> f64 {
    debug_assert!(mse >= 0.0);
    if mse <= 0.0 {
        return f64::INFINITY;
    }
    let peak = ((1u32 << bit_depth) - 1) as f64;
    10.0 * (peak * peak / mse).log10()
}

/// Weighted PSNR with luma/chroma weights 6:1:1.
pub fn wpsnr(psnr_y: f64, psnr_u: f64, psnr_v: f64) -> f64 {
    (6.0 * psnr_y + (psnr_u + psnr_v)) / 8.0
}
