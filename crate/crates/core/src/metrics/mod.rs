//! Saliency evaluation: MAE, thresholded IoU, structure measure,
//! weighted F-beta and precision-recall curves.
//!
//! Every metric takes a prediction `P` in `[0, 1]` and a ground truth `G`
//! of the same shape. `G` is read as binary: pixels `>= 0.5` are
//! foreground. Inputs may carry leading unit extents (`[1, 1, H, W]`).

mod pr;
mod structure;
mod weighted;

pub use pr::{mean_curve, pr_curve, PrCurve, PR_THRESHOLDS};
pub use structure::{object_score, region_score, s_measure};
pub use weighted::{nearest_foreground, weighted_f, NearestForeground};

use crate::error::{param_err, shape_err, Result};
use crate::tensor::Tensor;

#[derive(Clone, Debug, PartialEq)]
pub struct MetricConfig {
    pub beta2: f64,
    pub alpha_s: f64,
    pub iou_threshold: f64,
}

impl Default for MetricConfig {
    fn default() -> Self {
        Self {
            beta2: 0.3,
            alpha_s: 0.5,
            iou_threshold: 0.5,
        }
    }
}

impl MetricConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta2.is_finite() && self.beta2 > 0.0) {
            return Err(param_err!("beta2 must be > 0, got {}", self.beta2));
        }
        if !(0.0..=1.0).contains(&self.alpha_s) {
            return Err(param_err!("alpha_s must lie in [0, 1], got {}", self.alpha_s));
        }
        if !(self.iou_threshold > 0.0 && self.iou_threshold < 1.0) {
            return Err(param_err!(
                "iou threshold must lie in (0, 1), got {}",
                self.iou_threshold
            ));
        }
        Ok(())
    }
}

/// A prediction and its ground truth viewed as `H x W` maps.
pub(crate) struct Pair<'a> {
    pub h: usize,
    pub w: usize,
    pub p: &'a [f32],
    pub g: Vec<bool>,
}

pub(crate) fn pair<'a>(p: &'a Tensor, g: &Tensor) -> Result<Pair<'a>> {
    if p.dims() != g.dims() {
        return Err(shape_err!("prediction {:?} vs ground truth {:?}", p.dims(), g.dims()));
    }
    let r = p.rank();
    if r < 2 || p.dims()[..r - 2].iter().any(|&d| d != 1) {
        return Err(shape_err!("expected a single map, got {:?}", p.dims()));
    }
    Ok(Pair {
        h: p.dims()[r - 2],
        w: p.dims()[r - 1],
        p: p.data(),
        g: g.data().iter().map(|&v| v >= 0.5).collect(),
    })
}

pub fn mae(p: &Tensor, g: &Tensor) -> Result<f64> {
    let m = pair(p, g)?;
    let sum: f64 =
        m.p.iter()
            .zip(&m.g)
            .map(|(&pv, &gv)| (pv as f64 - if gv { 1.0 } else { 0.0 }).abs())
            .sum();
    Ok(sum / m.p.len() as f64)
}

/// IoU of `P >= threshold` against `G`; 1 when both are empty.
pub fn msiou(p: &Tensor, g: &Tensor, threshold: f64) -> Result<f64> {
    let m = pair(p, g)?;
    let (mut inter, mut union) = (0usize, 0usize);
    for (&pv, &gv) in m.p.iter().zip(&m.g) {
        let pb = pv as f64 >= threshold;
        inter += (pb && gv) as usize;
        union += (pb || gv) as usize;
    }
    Ok(if union == 0 { 1.0 } else { inter as f64 / union as f64 })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ImageMetrics {
    pub mae: f64,
    pub msiou: f64,
    pub s_measure: f64,
    pub weighted_f: f64,
    /// Set when the ground truth has no foreground, which makes weighted F
    /// undefined (reported as 0).
    pub empty_gt: bool,
}

pub fn evaluate_image(p: &Tensor, g: &Tensor, cfg: &MetricConfig) -> Result<ImageMetrics> {
    cfg.validate()?;
    Ok(ImageMetrics {
        mae: mae(p, g)?,
        msiou: msiou(p, g, cfg.iou_threshold)?,
        s_measure: s_measure(p, g, cfg.alpha_s)?,
        weighted_f: weighted_f(p, g, cfg.beta2)?,
        empty_gt: !pair(p, g)?.g.contains(&true),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricReport {
    pub mae: f64,
    pub msiou: f64,
    pub s_measure: f64,
    pub weighted_f: f64,
    pub n_images: usize,
}

/// Arithmetic means, accumulated in slice order.
pub fn aggregate(images: &[ImageMetrics]) -> Result<MetricReport> {
    if images.is_empty() {
        return Err(param_err!("cannot aggregate zero images"));
    }
    let n = images.len() as f64;
    let mean = |f: fn(&ImageMetrics) -> f64| images.iter().map(f).sum::<f64>() / n;
    Ok(MetricReport {
        mae: mean(|m| m.mae),
        msiou: mean(|m| m.msiou),
        s_measure: mean(|m| m.s_measure),
        weighted_f: mean(|m| m.weighted_f),
        n_images: images.len(),
    })
}
