use super::Tensor;
use crate::error::{param_err, shape_err, Result};

#[derive(Clone, Debug)]
struct AxisTaps {
    lo: Vec<usize>,
    hi: Vec<usize>,
    frac: Vec<f64>,
}

impl AxisTaps {
    /// Half-pixel centers: `src = (dst + 0.5) * src_len / dst_len - 0.5`,
    /// clamped to `[0, src_len - 1]`.
    fn new(src: usize, dst: usize) -> Self {
        let scale = src as f64 / dst as f64;
        let max = (src - 1) as f64;
        let mut taps = Self {
            lo: Vec::with_capacity(dst),
            hi: Vec::with_capacity(dst),
            frac: Vec::with_capacity(dst),
        };
        for o in 0..dst {
            let s = ((o as f64 + 0.5) * scale - 0.5).clamp(0.0, max);
            let lo = s.floor() as usize;
            taps.lo.push(lo);
            taps.hi.push((lo + 1).min(src - 1));
            taps.frac.push(s - lo as f64);
        }
        taps
    }
}

/// Precomputed bilinear sampling between two grid sizes.
///
/// Exposes the four taps of each destination pixel so callers can apply the
/// interpolation (or its adjoint) to data that is not laid out as a plane.
#[derive(Clone, Debug)]
pub struct ResizePlan {
    src: [usize; 2],
    dst: [usize; 2],
    rows: AxisTaps,
    cols: AxisTaps,
}

impl ResizePlan {
    pub fn new(src_h: usize, src_w: usize, dst_h: usize, dst_w: usize) -> Result<Self> {
        if [src_h, src_w, dst_h, dst_w].contains(&0) {
            return Err(param_err!("resize extents must be >= 1"));
        }
        Ok(Self {
            src: [src_h, src_w],
            dst: [dst_h, dst_w],
            rows: AxisTaps::new(src_h, dst_h),
            cols: AxisTaps::new(src_w, dst_w),
        })
    }

    pub fn src(&self) -> [usize; 2] {
        self.src
    }

    pub fn dst(&self) -> [usize; 2] {
        self.dst
    }

    /// `(source index, weight)` for the four corners around destination
    /// pixel `(y, x)`. Weights sum to 1; duplicated indices occur at clamped
    /// borders.
    #[inline]
    pub fn taps(&self, y: usize, x: usize) -> [(usize, f64); 4] {
        let w = self.src[1];
        let (y0, y1, fy) = (self.rows.lo[y], self.rows.hi[y], self.rows.frac[y]);
        let (x0, x1, fx) = (self.cols.lo[x], self.cols.hi[x], self.cols.frac[x]);
        [
            (y0 * w + x0, (1.0 - fy) * (1.0 - fx)),
            (y0 * w + x1, (1.0 - fy) * fx),
            (y1 * w + x0, fy * (1.0 - fx)),
            (y1 * w + x1, fy * fx),
        ]
    }

    fn sample(&self, src: &[f32], y: usize, x: usize) -> f64 {
        let w = self.src[1];
        let (y0, y1, fy) = (self.rows.lo[y], self.rows.hi[y], self.rows.frac[y]);
        let (x0, x1, fx) = (self.cols.lo[x], self.cols.hi[x], self.cols.frac[x]);
        let top = (1.0 - fx) * src[y0 * w + x0] as f64 + fx * src[y0 * w + x1] as f64;
        let bot = (1.0 - fx) * src[y1 * w + x0] as f64 + fx * src[y1 * w + x1] as f64;
        (1.0 - fy) * top + fy * bot
    }

    pub fn apply_plane(&self, src: &[f32], dst: &mut [f32]) {
        let [dh, dw] = self.dst;
        for y in 0..dh {
            for x in 0..dw {
                dst[y * dw + x] = self.sample(src, y, x) as f32;
            }
        }
    }

    /// Transpose of [`apply_plane`](Self::apply_plane): scatters each
    /// destination value back onto its source taps.
    pub fn adjoint_plane(&self, grad_dst: &[f32], grad_src: &mut [f64]) {
        let [dh, dw] = self.dst;
        for y in 0..dh {
            for x in 0..dw {
                let g = grad_dst[y * dw + x] as f64;
                for (i, wt) in self.taps(y, x) {
                    grad_src[i] += wt * g;
                }
            }
        }
    }
}

/// Bilinear resize of every `[H, W]` plane to `[h2, w2]`.
pub fn bilinear_resize(x: &Tensor, h2: usize, w2: usize) -> Result<Tensor> {
    let [b, c, h, w] = x.nchw()?;
    if h2 == 0 || w2 == 0 {
        return Err(param_err!("target extent must be >= 1"));
    }
    if (h, w) == (h2, w2) {
        return Ok(x.clone());
    }
    let plan = ResizePlan::new(h, w, h2, w2)?;
    let mut out = vec![0f32; b * c * h2 * w2];
    for (i, dst) in out.chunks_exact_mut(h2 * w2).enumerate() {
        plan.apply_plane(x.plane(i / c, i % c), dst);
    }
    Tensor::new(&[b, c, h2, w2], out)
}

/// Adjoint of [`bilinear_resize`] from `[h2, w2]` back to `[h, w]`.
pub fn bilinear_resize_adjoint(grad: &Tensor, h: usize, w: usize) -> Result<Tensor> {
    let [b, c, h2, w2] = grad.nchw()?;
    if (h, w) == (h2, w2) {
        return Ok(grad.clone());
    }
    let plan = ResizePlan::new(h, w, h2, w2)?;
    let mut out = vec![0f32; b * c * h * w];
    let mut acc = vec![0f64; h * w];
    for (i, dst) in out.chunks_exact_mut(h * w).enumerate() {
        acc.fill(0.0);
        plan.adjoint_plane(grad.plane(i / c, i % c), &mut acc);
        for (d, &a) in dst.iter_mut().zip(&acc) {
            *d = a as f32;
        }
    }
    Tensor::new(&[b, c, h, w], out)
}

/// Average pooling with a square `factor x factor` window and stride
/// `factor`. Trailing partial windows average the pixels they cover.
pub fn avg_pool(x: &Tensor, factor: usize) -> Result<Tensor> {
    let [b, c, h, w] = x.nchw()?;
    if factor == 0 {
        return Err(param_err!("pool factor must be >= 1"));
    }
    if factor == 1 {
        return Ok(x.clone());
    }
    let (ho, wo) = (h.div_ceil(factor), w.div_ceil(factor));
    let mut out = Vec::with_capacity(b * c * ho * wo);
    for i in 0..b * c {
        let plane = x.plane(i / c, i % c);
        for oy in 0..ho {
            for ox in 0..wo {
                let (y0, y1) = (oy * factor, ((oy + 1) * factor).min(h));
                let (x0, x1) = (ox * factor, ((ox + 1) * factor).min(w));
                let mut s = 0f64;
                for y in y0..y1 {
                    s += plane[y * w + x0..y * w + x1].iter().map(|&v| v as f64).sum::<f64>();
                }
                out.push((s / ((y1 - y0) * (x1 - x0)) as f64) as f32);
            }
        }
    }
    Tensor::new(&[b, c, ho, wo], out)
}

/// Area-average downsampling to `[h2, w2]`; both extents must divide the source.
pub fn area_downsample(x: &Tensor, h2: usize, w2: usize) -> Result<Tensor> {
    let [_, _, h, w] = x.nchw()?;
    if h2 == 0 || w2 == 0 || h % h2 != 0 || w % w2 != 0 || h / h2 != w / w2 {
        return Err(shape_err!(
            "cannot area-downsample {h}x{w} to {h2}x{w2} with a square integer factor"
        ));
    }
    avg_pool(x, h / h2)
}
