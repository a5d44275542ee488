use super::Grid2D;
use crate::error::{ensure, Result};

/// Isotropic Gaussian sampled at pixel centers:
/// `exp(-((p - cr)² + (q - cc)²) / (2σ²))`.
///
/// The center may be fractional and may lie outside the grid. Values far
/// from the center underflow to zero in `f32`.
pub fn make_gaussian_label(height: usize, width: usize, center: (f64, f64), sigma: f64) -> Result<Grid2D> {
    ensure!(height > 0 && width > 0, Dimension, "label dims must be positive");
    ensure!(sigma > 0.0 && sigma.is_finite(), Parameter, "sigma must be positive, got {sigma}");
    ensure!(
        center.0.is_finite() && center.1.is_finite(),
        Parameter,
        "label center must be finite"
    );
    let denom = 2.0 * sigma * sigma;
    let (cr, cc) = center;
    Ok(Grid2D::from_fn(height, width, |p, q| {
        let dr = p as f64 - cr;
        let dc = q as f64 - cc;
        (-(dr * dr + dc * dc) / denom).exp() as f32
    }))
}
