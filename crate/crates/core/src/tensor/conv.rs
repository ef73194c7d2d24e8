use super::{init_uniform, Prng, Tensor};
use crate::error::{param_err, shape_err, Result};

/// Weights of a square 2-D convolution: `weight [C_out, C_in, k, k]`, `bias [C_out]`.
///
/// `k = 3` runs with padding 1, `k = 1` with padding 0, so stride-1
/// convolutions preserve the spatial extent.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvParams {
    weight: Tensor,
    bias: Tensor,
}

impl ConvParams {
    pub fn new(weight: Tensor, bias: Tensor) -> Result<Self> {
        let [co, _, kh, kw] = weight.nchw()?;
        if kh != kw || !(kh == 1 || kh == 3) {
            return Err(param_err!("kernel must be 1x1 or 3x3, got {kh}x{kw}"));
        }
        if bias.dims() != [co] {
            return Err(shape_err!("bias {:?} for {co} output channels", bias.dims()));
        }
        Ok(Self { weight, bias })
    }

    pub fn zeros(c_in: usize, c_out: usize, k: usize) -> Result<Self> {
        Self::new(Tensor::zeros(&[c_out, c_in, k, k]), Tensor::zeros(&[c_out]))
    }

    /// 1x1 kernel that copies its input.
    pub fn identity(c: usize) -> Self {
        let w = Tensor::from_fn(&[c, c, 1, 1], |i| if i / c == i % c { 1.0 } else { 0.0 });
        Self::new(w, Tensor::zeros(&[c])).expect("valid identity kernel")
    }

    /// Weight then bias, both uniform with `fan_in = C_in * k * k`.
    pub fn init(prng: &mut Prng, c_in: usize, c_out: usize, k: usize) -> Result<Self> {
        let fan_in = c_in * k * k;
        let w = init_uniform(prng, &[c_out, c_in, k, k], fan_in)?;
        let b = init_uniform(prng, &[c_out], fan_in)?;
        Self::new(w, b)
    }

    pub fn weight(&self) -> &Tensor {
        &self.weight
    }

    pub fn bias(&self) -> &Tensor {
        &self.bias
    }

    pub fn in_channels(&self) -> usize {
        self.weight.dims()[1]
    }

    pub fn out_channels(&self) -> usize {
        self.weight.dims()[0]
    }

    pub fn kernel(&self) -> usize {
        self.weight.dims()[2]
    }

    pub fn scaled(&self, a: f32) -> Self {
        Self {
            weight: self.weight.scale(a),
            bias: self.bias.scale(a),
        }
    }
}

/// Stride-1 cross-correlation (no kernel flip), zero padding.
pub fn conv(x: &Tensor, p: &ConvParams) -> Result<Tensor> {
    conv_strided(x, p, 1)
}

pub fn conv_strided(x: &Tensor, p: &ConvParams, stride: usize) -> Result<Tensor> {
    let [_, c, _, _] = x.nchw()?;
    if c != p.in_channels() {
        return Err(shape_err!("conv expects {} input channels, got {c}", p.in_channels()));
    }
    if stride == 0 {
        return Err(param_err!("stride must be >= 1"));
    }
    Ok(super::wide(
        #[inline(always)]
        || conv_kernel(x, p, stride),
    ))
}

#[inline(always)]
fn conv_kernel(x: &Tensor, p: &ConvParams, stride: usize) -> Tensor {
    let [b, c, h, w] = x.nchw().expect("checked by caller");
    let k = p.kernel();
    let pad = k / 2;
    let ho = (h + 2 * pad - k) / stride + 1;
    let wo = (w + 2 * pad - k) / stride + 1;
    let co = p.out_channels();
    let weight = p.weight.data();
    let bias = p.bias.data();

    let mut out = vec![0f32; b * co * ho * wo];
    let mut acc = vec![0f64; ho * wo];
    for bi in 0..b {
        for o in 0..co {
            acc.fill(bias[o] as f64);
            for ci in 0..c {
                let plane = x.plane(bi, ci);
                for ky in 0..k {
                    for kx in 0..k {
                        let wv = weight[((o * c + ci) * k + ky) * k + kx] as f64;
                        // output columns whose tap lands inside the input row
                        let ox_lo = pad.saturating_sub(kx).div_ceil(stride);
                        let ox_hi = (w + pad - kx).div_ceil(stride).min(wo);
                        if ox_lo >= ox_hi {
                            continue;
                        }
                        for oy in 0..ho {
                            let iy = oy * stride + ky;
                            if iy < pad || iy - pad >= h {
                                continue;
                            }
                            let row = &plane[(iy - pad) * w..(iy - pad + 1) * w];
                            let dst = &mut acc[oy * wo + ox_lo..oy * wo + ox_hi];
                            if stride == 1 {
                                let src = &row[ox_lo + kx - pad..ox_hi + kx - pad];
                                for (a, &v) in dst.iter_mut().zip(src) {
                                    *a += wv * v as f64;
                                }
                            } else {
                                for (j, a) in dst.iter_mut().enumerate() {
                                    let ix = (ox_lo + j) * stride + kx - pad;
                                    *a += wv * row[ix] as f64;
                                }
                            }
                        }
                    }
                }
            }
            let off = (bi * co + o) * ho * wo;
            for (dst, &a) in out[off..off + ho * wo].iter_mut().zip(&acc) {
                *dst = a as f32;
            }
        }
    }
    Tensor::new(&[b, co, ho, wo], out).expect("output dims match buffer")
}

/// Dense affine map `y = W x + b` with `weight [out, in]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Linear {
    weight: Tensor,
    bias: Tensor,
}

impl Linear {
    pub fn new(weight: Tensor, bias: Tensor) -> Result<Self> {
        let (out, _) = match weight.dims() {
            &[o, i] => (o, i),
            d => return Err(shape_err!("linear weight must be [out,in], got {d:?}")),
        };
        if bias.dims() != [out] {
            return Err(shape_err!("bias {:?} for {out} outputs", bias.dims()));
        }
        Ok(Self { weight, bias })
    }

    pub fn zeros(n_in: usize, n_out: usize) -> Self {
        Self::new(Tensor::zeros(&[n_out, n_in]), Tensor::zeros(&[n_out])).expect("valid dims")
    }

    pub fn init(prng: &mut Prng, n_in: usize, n_out: usize) -> Result<Self> {
        let w = init_uniform(prng, &[n_out, n_in], n_in)?;
        let b = init_uniform(prng, &[n_out], n_in)?;
        Self::new(w, b)
    }

    pub fn in_features(&self) -> usize {
        self.weight.dims()[1]
    }

    pub fn out_features(&self) -> usize {
        self.weight.dims()[0]
    }

    pub fn weight(&self) -> &Tensor {
        &self.weight
    }

    pub fn bias(&self) -> &Tensor {
        &self.bias
    }

    /// Applies the map to one input vector.
    pub fn apply(&self, x: &[f32]) -> Vec<f32> {
        let n_in = self.in_features();
        debug_assert_eq!(x.len(), n_in);
        let w = self.weight.data();
        self.bias
            .data()
            .iter()
            .enumerate()
            .map(|(o, &b)| {
                let row = &w[o * n_in..(o + 1) * n_in];
                let s: f64 = row.iter().zip(x).map(|(&a, &v)| a as f64 * v as f64).sum();
                (s + b as f64) as f32
            })
            .collect()
    }
}
