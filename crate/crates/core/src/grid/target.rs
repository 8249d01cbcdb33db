//! Gaussian heatmap targets and the pixel-wise focal loss trained against them.

use super::{GridSpec, ProbabilityGrid};
use crate::error::{Error, Result};
use crate::geometry::Point;

/// Predictions are clamped to `[FOCAL_EPS, 1 - FOCAL_EPS]` before taking logs.
pub const FOCAL_EPS: f64 = 1e-7;

/// Training target: a Gaussian bump equal to 1 at the ground-truth pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetGrid {
    spec: GridSpec,
    values: Vec<f64>,
    center: (usize, usize),
}

impl TargetGrid {
    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Pixel holding the value 1.
    pub fn center(&self) -> (usize, usize) {
        self.center
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[self.spec.index(row, col)]
    }
}

/// Renders `exp(-d^2 / (2 sigma^2))`, `d` the pixel distance to the pixel
/// nearest to `gt`. `sigma` is in pixels.
pub fn render_gaussian_target(spec: GridSpec, gt: Point, sigma: f64) -> Result<TargetGrid> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidConfig(format!("sigma {sigma}")));
    }
    let (cr, cc) = spec.require_pixel(gt)?;
    let denom = 2.0 * sigma * sigma;
    let values = (0..spec.len())
        .map(|i| {
            let (r, c) = spec.row_col(i);
            let dr = r as f64 - cr as f64;
            let dc = c as f64 - cc as f64;
            (-(dr * dr + dc * dc) / denom).exp()
        })
        .collect();
    Ok(TargetGrid {
        spec,
        values,
        center: (cr, cc),
    })
}

fn check_inputs(pred: &ProbabilityGrid, target: &TargetGrid) -> Result<()> {
    if pred.spec() != target.spec() {
        return Err(Error::InvalidSpec(
            "prediction and target specs differ".into(),
        ));
    }
    if let Some((i, v)) = pred
        .values()
        .iter()
        .enumerate()
        .find(|(_, v)| !(**v > 0.0 && **v < 1.0))
    {
        return Err(Error::Domain(format!(
            "prediction {v} at pixel {i} is outside (0, 1)"
        )));
    }
    Ok(())
}

#[inline]
fn clamp_pred(p: f64) -> f64 {
    p.clamp(FOCAL_EPS, 1.0 - FOCAL_EPS)
}

#[inline]
fn pixel_loss(y: f64, p: f64) -> f64 {
    let p = clamp_pred(p);
    let err2 = (y - p) * (y - p);
    if y == 1.0 {
        -err2 * p.ln()
    } else {
        -err2 * (1.0 - y).powi(4) * (1.0 - p).ln()
    }
}

#[inline]
fn pixel_loss_derivative(y: f64, raw: f64) -> f64 {
    let p = clamp_pred(raw);
    if p != raw {
        return 0.0;
    }
    if y == 1.0 {
        // d/dp [-(1-p)^2 ln p]
        2.0 * (1.0 - p) * p.ln() - (1.0 - p) * (1.0 - p) / p
    } else {
        // d/dp [-(y-p)^2 (1-y)^4 ln(1-p)]
        let w = (1.0 - y).powi(4);
        w * (2.0 * (y - p) * (1.0 - p).ln() + (y - p) * (y - p) / (1.0 - p))
    }
}

/// Pixel-wise focal loss averaged over all pixels.
///
/// Pixels with target exactly 1 use `-(1-p)^2 ln p`; all others use
/// `-(y-p)^2 (1-y)^4 ln(1-p)`, so pixels near the center are penalized less.
pub fn focal_loss(pred: &ProbabilityGrid, target: &TargetGrid) -> Result<f64> {
    check_inputs(pred, target)?;
    let n = pred.values().len() as f64;
    let sum: f64 = pred
        .values()
        .iter()
        .zip(target.values())
        .map(|(&p, &y)| pixel_loss(y, p))
        .sum();
    Ok(sum / n)
}

/// Analytic gradient of [`focal_loss`] with respect to each prediction.
pub fn focal_loss_gradient(pred: &ProbabilityGrid, target: &TargetGrid) -> Result<Vec<f64>> {
    check_inputs(pred, target)?;
    let n = pred.values().len() as f64;
    Ok(pred
        .values()
        .iter()
        .zip(target.values())
        .map(|(&p, &y)| pixel_loss_derivative(y, p) / n)
        .collect())
}
