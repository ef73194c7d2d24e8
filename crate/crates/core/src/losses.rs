//! Training objective with closed-form gradients with respect to the
//! predicted maps, plus a central-difference checker for those gradients.
//!
//! All sums run in `f64` over the whole tensor in row-major order.

use crate::error::{param_err, shape_err, Result};
use crate::model::{Detach, MaskOutputs, SaliencyOutputs};
use crate::tensor::{area_downsample, bilinear_resize_adjoint, ResizePlan, Tensor};

pub const BCE_EPS: f64 = 1e-7;

/// A loss value with its gradient with respect to the prediction.
#[derive(Clone, Debug, PartialEq)]
pub struct LossValue {
    pub value: f64,
    pub grad: Tensor,
    /// Set when a degenerate input forced a conventional value.
    pub warning: bool,
}

fn same_shape(s: &Tensor, y: &Tensor) -> Result<()> {
    if s.dims() != y.dims() {
        return Err(shape_err!("prediction {:?} vs target {:?}", s.dims(), y.dims()));
    }
    Ok(())
}

/// Mean binary cross-entropy with the prediction clamped to `[eps, 1 - eps]`.
pub fn bce_loss(s: &Tensor, y: &Tensor) -> Result<LossValue> {
    same_shape(s, y)?;
    let n = s.len() as f64;
    let mut sum = 0f64;
    let mut grad = Vec::with_capacity(s.len());
    for (&sv, &yv) in s.data().iter().zip(y.data()) {
        let p = (sv as f64).clamp(BCE_EPS, 1.0 - BCE_EPS);
        let t = yv as f64;
        sum += t * p.ln() + (1.0 - t) * (1.0 - p).ln();
        grad.push(((p - t) / (p * (1.0 - p) * n)) as f32);
    }
    Ok(LossValue {
        value: -sum / n,
        grad: Tensor::new(s.dims(), grad)?,
        warning: false,
    })
}

/// `1 - I / D` with `I = sum S Y` and `D = sum (S + Y - S Y)`. When both maps
/// are empty (`D = 0`) the loss and gradient are zero and `warning` is set.
pub fn iou_loss(s: &Tensor, y: &Tensor) -> Result<LossValue> {
    same_shape(s, y)?;
    let (mut inter, mut union) = (0f64, 0f64);
    for (&sv, &yv) in s.data().iter().zip(y.data()) {
        let (p, t) = (sv as f64, yv as f64);
        inter += p * t;
        union += p + t - p * t;
    }
    if union == 0.0 {
        return Ok(LossValue {
            value: 0.0,
            grad: Tensor::zeros(s.dims()),
            warning: true,
        });
    }
    let d2 = union * union;
    let grad = y
        .data()
        .iter()
        .map(|&yv| {
            let t = yv as f64;
            (-(t * union - inter * (1.0 - t)) / d2) as f32
        })
        .collect();
    Ok(LossValue {
        value: 1.0 - inter / union,
        grad: Tensor::new(s.dims(), grad)?,
        warning: false,
    })
}

/// The six supervised outputs, coarsest saliency map first.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum OutputScale {
    S16,
    S8,
    S4,
    M4,
    M2,
    M1,
}

impl OutputScale {
    pub const ALL: [OutputScale; 6] = [Self::S16, Self::S8, Self::S4, Self::M4, Self::M2, Self::M1];

    pub fn label(self) -> &'static str {
        match self {
            Self::S16 => "S_1/16",
            Self::S8 => "S_1/8",
            Self::S4 => "S_1/4",
            Self::M4 => "M_1/4",
            Self::M2 => "M_1/2",
            Self::M1 => "M_1/1",
        }
    }

    /// Downsampling factor relative to the input.
    pub fn stride(self) -> usize {
        match self {
            Self::S16 => 16,
            Self::S8 => 8,
            Self::S4 | Self::M4 => 4,
            Self::M2 => 2,
            Self::M1 => 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScaleTerm {
    pub scale: OutputScale,
    pub bce: f64,
    pub iou: f64,
    pub grad: Tensor,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SaliencyLoss {
    pub terms: Vec<ScaleTerm>,
    pub sal: f64,
    pub warnings: usize,
}

fn outputs<'a>(s: &'a SaliencyOutputs, m: &'a MaskOutputs) -> [&'a Tensor; 6] {
    [&s.s16, &s.s8, &s.s4, &m.m4, &m.m2, &m.m1]
}

/// Sum of BCE and IoU over all six outputs, each against the target
/// area-averaged to its resolution.
pub fn saliency_loss(s: &SaliencyOutputs, m: &MaskOutputs, y: &Tensor) -> Result<SaliencyLoss> {
    let [_, yc, _, _] = y.nchw()?;
    if yc != 1 {
        return Err(shape_err!("target must have one channel, got {yc}"));
    }
    let mut terms = Vec::with_capacity(6);
    let mut sal = 0f64;
    let mut warnings = 0;
    for (scale, pred) in OutputScale::ALL.into_iter().zip(outputs(s, m)) {
        let [_, _, h, w] = pred.nchw()?;
        let target = area_downsample(y, h, w)?;
        let bce = bce_loss(pred, &target)?;
        let iou = iou_loss(pred, &target)?;
        warnings += iou.warning as usize;
        sal += bce.value + iou.value;
        terms.push(ScaleTerm {
            scale,
            bce: bce.value,
            iou: iou.value,
            grad: bce.grad.zip_map(&iou.grad, |a, b| a + b)?,
        });
    }
    Ok(SaliencyLoss { terms, sal, warnings })
}

/// Bilinear upsample kept in `f64`, so the L1 term is exactly piecewise
/// linear in the coarse map.
fn upsample_f64(x: &Tensor, h: usize, w: usize) -> Result<Vec<f64>> {
    let [b, c, sh, sw] = x.nchw()?;
    let plan = ResizePlan::new(sh, sw, h, w)?;
    let mut out = Vec::with_capacity(b * c * h * w);
    for i in 0..b * c {
        let src = x.plane(i / c, i % c);
        for y in 0..h {
            for xx in 0..w {
                out.push(plan.taps(y, xx).iter().map(|&(j, wt)| wt * src[j] as f64).sum());
            }
        }
    }
    Ok(out)
}

/// One adjacent-scale pair of the consistency term.
#[derive(Clone, Debug, PartialEq)]
pub struct PairTerm {
    pub value: f64,
    pub grad_coarse: Tensor,
    pub grad_fine: Tensor,
}

/// `lambda * mean |up(coarse) - fine|` with one member treated as constant.
///
/// The gradient of the detached member is the zero tensor; the other gets
/// `lambda / N * sign(.)`, routed through the upsampler's adjoint for the
/// coarse side. `sign(0) = 0`.
pub fn consistency_pair(coarse: &Tensor, fine: &Tensor, lambda_c: f64, detach: Detach) -> Result<PairTerm> {
    let [b, c, ch, cw] = coarse.nchw()?;
    let [fb, fc, fh, fw] = fine.nchw()?;
    if (b, c) != (fb, fc) {
        return Err(shape_err!("pair {:?} / {:?}", coarse.dims(), fine.dims()));
    }
    let up = upsample_f64(coarse, fh, fw)?;
    let n = fine.len() as f64;
    let mut sum = 0f64;
    let mut sign = Vec::with_capacity(fine.len());
    for (&u, &f) in up.iter().zip(fine.data()) {
        let diff = u - f as f64;
        sum += diff.abs();
        sign.push(if diff > 0.0 {
            1.0
        } else if diff < 0.0 {
            -1.0
        } else {
            0.0
        });
    }
    let g = (lambda_c / n) as f32;
    let dup = Tensor::new(fine.dims(), sign)?.scale(g);
    let (grad_coarse, grad_fine) = match detach {
        Detach::Finer => (bilinear_resize_adjoint(&dup, ch, cw)?, Tensor::zeros(fine.dims())),
        Detach::Coarser => (Tensor::zeros(coarse.dims()), dup.scale(-1.0)),
    };
    Ok(PairTerm {
        value: lambda_c * sum / n,
        grad_coarse,
        grad_fine,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConsistencyLoss {
    /// `(S_1/16, S_1/8)` then `(S_1/8, S_1/4)`.
    pub pairs: [PairTerm; 2],
    pub value: f64,
    pub grad_s16: Tensor,
    pub grad_s8: Tensor,
    pub grad_s4: Tensor,
}

pub fn consistency_loss(s: &SaliencyOutputs, lambda_c: f64, detach: Detach) -> Result<ConsistencyLoss> {
    if !(lambda_c.is_finite() && lambda_c >= 0.0) {
        return Err(param_err!("lambda_c {lambda_c} must be finite and >= 0"));
    }
    let a = consistency_pair(&s.s16, &s.s8, lambda_c, detach)?;
    let b = consistency_pair(&s.s8, &s.s4, lambda_c, detach)?;
    Ok(ConsistencyLoss {
        value: a.value + b.value,
        grad_s16: a.grad_coarse.clone(),
        grad_s8: a.grad_fine.zip_map(&b.grad_coarse, |x, y| x + y)?,
        grad_s4: b.grad_fine.clone(),
        pairs: [a, b],
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct LossBreakdown {
    pub terms: Vec<ScaleTerm>,
    pub sal: f64,
    pub consistency: f64,
    pub total: f64,
    pub warnings: usize,
}

impl LossBreakdown {
    pub fn bce(&self, scale: OutputScale) -> Option<f64> {
        self.terms.iter().find(|t| t.scale == scale).map(|t| t.bce)
    }

    pub fn iou(&self, scale: OutputScale) -> Option<f64> {
        self.terms.iter().find(|t| t.scale == scale).map(|t| t.iou)
    }
}

pub fn total_loss(
    s: &SaliencyOutputs,
    m: &MaskOutputs,
    y: &Tensor,
    lambda_c: f64,
    detach: Detach,
) -> Result<LossBreakdown> {
    let sal = saliency_loss(s, m, y)?;
    let cons = consistency_loss(s, lambda_c, detach)?;
    Ok(LossBreakdown {
        total: sal.sal + cons.value,
        terms: sal.terms,
        sal: sal.sal,
        consistency: cons.value,
        warnings: sal.warnings,
    })
}

/// Which loss [`finite_diff_check`] differentiates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CheckedLoss {
    Bce,
    Iou,
    /// Gradient with respect to the coarse member; the second tensor is the
    /// (detached) fine member.
    Consistency {
        lambda_c: f64,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub worst_index: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub threshold: f64,
    pub pass: bool,
}

fn eval_loss(loss: CheckedLoss, s: &Tensor, y: &Tensor) -> Result<LossValue> {
    match loss {
        CheckedLoss::Bce => bce_loss(s, y),
        CheckedLoss::Iou => iou_loss(s, y),
        CheckedLoss::Consistency { lambda_c } => {
            let p = consistency_pair(s, y, lambda_c, Detach::Finer)?;
            Ok(LossValue {
                value: p.value,
                grad: p.grad_coarse,
                warning: false,
            })
        }
    }
}

/// Central differences against the closed-form gradient at relative
/// tolerance `threshold`.
pub fn finite_diff_check(loss: CheckedLoss, s: &Tensor, y: &Tensor, h: f64, threshold: f64) -> Result<GradCheckReport> {
    let analytic = eval_loss(loss, s, y)?.grad;
    check_gradient(|x| Ok(eval_loss(loss, x, y)?.value), &analytic, s, h, threshold)
}

/// Compares `analytic` with central differences of `value` around `s`.
///
/// The step actually taken is measured after rounding to `f32`, so the
/// quotient uses `(s + h) - (s - h)` as represented rather than `2h`.
pub fn check_gradient(
    value: impl Fn(&Tensor) -> Result<f64>,
    analytic: &Tensor,
    s: &Tensor,
    h: f64,
    threshold: f64,
) -> Result<GradCheckReport> {
    if !(1e-5..=1e-2).contains(&h) {
        return Err(param_err!("step {h} outside [1e-5, 1e-2]"));
    }
    same_shape(s, analytic)?;
    let mut probe = s.clone();
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst_index: 0,
        analytic: 0.0,
        numeric: 0.0,
        threshold,
        pass: true,
    };
    for i in 0..s.len() {
        let x = s.data()[i];
        let hi = (x as f64 + h) as f32;
        let lo = (x as f64 - h) as f32;
        probe.data_mut()[i] = hi;
        let f_hi = value(&probe)?;
        probe.data_mut()[i] = lo;
        let f_lo = value(&probe)?;
        probe.data_mut()[i] = x;
        let numeric = (f_hi - f_lo) / (hi as f64 - lo as f64);
        let a = analytic.data()[i] as f64;
        let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-8);
        if rel > report.max_rel_error || i == 0 {
            report.max_rel_error = rel;
            report.worst_index = i;
            report.analytic = a;
            report.numeric = numeric;
        }
    }
    report.pass = report.max_rel_error < threshold;
    Ok(report)
}
