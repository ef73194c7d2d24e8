use super::Tensor;
use crate::error::{param_err, shape_err, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Sigmoid,
}

#[inline]
pub(crate) fn sigmoid(v: f64) -> f64 {
    1.0 / (1.0 + (-v).exp())
}

pub fn activate(x: &Tensor, kind: Activation) -> Tensor {
    match kind {
        Activation::Relu => x.map(|v| v.max(0.0)),
        Activation::Sigmoid => x.map(|v| sigmoid(v as f64) as f32),
    }
}

pub fn add(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    a.zip_map(b, |x, y| x + y)
}

/// Softmax along `axis`, max-subtracted, evaluated in `f64`.
pub fn softmax(x: &Tensor, axis: usize) -> Result<Tensor> {
    let dims = x.dims();
    if axis >= dims.len() {
        return Err(param_err!("axis {axis} out of range for rank {}", dims.len()));
    }
    if !x.all_finite() {
        return Err(Error::Numeric("softmax of non-finite input".into()));
    }
    let n = dims[axis];
    let inner: usize = dims[axis + 1..].iter().product();
    let outer: usize = dims[..axis].iter().product();
    let src = x.data();
    let mut out = vec![0f32; src.len()];
    let mut buf = vec![0f64; n];
    for o in 0..outer {
        for i in 0..inner {
            let at = |k: usize| (o * n + k) * inner + i;
            let max = (0..n).map(|k| src[at(k)]).fold(f32::NEG_INFINITY, f32::max) as f64;
            let mut sum = 0f64;
            for (k, b) in buf.iter_mut().enumerate() {
                *b = (src[at(k)] as f64 - max).exp();
                sum += *b;
            }
            for (k, &b) in buf.iter().enumerate() {
                out[at(k)] = (b / sum) as f32;
            }
        }
    }
    Tensor::new(dims, out)
}

/// Softmax of a contiguous row in place, `f64` internally.
pub(crate) fn softmax_row(row: &mut [f64]) {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0f64;
    for v in row.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    let inv = 1.0 / sum;
    for v in row.iter_mut() {
        *v *= inv;
    }
}

/// `c[n, m] = a[n, k] * b[k, m]` with `f64` accumulation in ascending `k`
/// order, written to `c` as `f64`.
///
/// Cache-blocked with packed operands. Every output still starts from zero
/// and adds its `k` terms in order, so the blocking never changes a bit.
pub(crate) fn gemm_f64acc(a: &[f32], b: &[f32], n: usize, k: usize, m: usize, c: &mut [f64]) {
    super::wide(
        #[inline(always)]
        || gemm_blocked(a, b, n, k, m, c),
    )
}

#[inline(always)]
fn gemm_blocked(a: &[f32], b: &[f32], n: usize, k: usize, m: usize, c: &mut [f64]) {
    const MR: usize = 4;
    const NR: usize = 4;
    const KC: usize = 256;
    const NC: usize = 512;
    debug_assert_eq!(a.len(), n * k);
    debug_assert_eq!(b.len(), k * m);
    debug_assert_eq!(c.len(), n * m);
    c.fill(0.0);
    let mut pb = vec![0f64; KC * NC.next_multiple_of(NR)];
    let mut pa = vec![0f64; KC * MR];
    for pc in (0..k).step_by(KC) {
        let kc = KC.min(k - pc);
        for jc in (0..m).step_by(NC) {
            let nc = NC.min(m - jc);
            let panels = nc.div_ceil(NR);
            // B block as NR-wide panels, each [kc][NR], zero-padded on the right.
            for jp in 0..panels {
                let panel = &mut pb[jp * kc * NR..(jp + 1) * kc * NR];
                for (p, dst) in panel.chunks_exact_mut(NR).enumerate() {
                    let row = &b[(pc + p) * m..(pc + p + 1) * m];
                    for (j, d) in dst.iter_mut().enumerate() {
                        let col = jc + jp * NR + j;
                        *d = if col < jc + nc { row[col] as f64 } else { 0.0 };
                    }
                }
            }
            for i0 in (0..n).step_by(MR) {
                let mr = MR.min(n - i0);
                for (p, dst) in pa[..kc * MR].chunks_exact_mut(MR).enumerate() {
                    for (r, d) in dst.iter_mut().enumerate() {
                        *d = if r < mr { a[(i0 + r) * k + pc + p] as f64 } else { 0.0 };
                    }
                }
                for jp in 0..panels {
                    let j0 = jc + jp * NR;
                    let nr = NR.min(jc + nc - j0);
                    let mut acc = [[0f64; NR]; MR];
                    for r in 0..mr {
                        acc[r][..nr].copy_from_slice(&c[(i0 + r) * m + j0..(i0 + r) * m + j0 + nr]);
                    }
                    let panel = &pb[jp * kc * NR..(jp + 1) * kc * NR];
                    for (av, bv) in pa[..kc * MR].chunks_exact(MR).zip(panel.chunks_exact(NR)) {
                        for (row, &x) in acc.iter_mut().zip(av) {
                            for (cv, &y) in row.iter_mut().zip(bv) {
                                *cv += x * y;
                            }
                        }
                    }
                    for r in 0..mr {
                        c[(i0 + r) * m + j0..(i0 + r) * m + j0 + nr].copy_from_slice(&acc[r][..nr]);
                    }
                }
            }
        }
    }
}

/// Batched product `[B, N, K] x [B, K, M] -> [B, N, M]`.
pub fn matmul_batched(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    let [ba, n, k] = a.bnk()?;
    let [bb, k2, m] = b.bnk()?;
    if ba != bb || k != k2 {
        return Err(shape_err!(
            "matmul {:?} x {:?}: batch or inner extent mismatch",
            a.dims(),
            b.dims()
        ));
    }
    let mut out = Vec::with_capacity(ba * n * m);
    let mut acc = vec![0f64; n * m];
    for bi in 0..ba {
        gemm_f64acc(
            &a.data()[bi * n * k..(bi + 1) * n * k],
            &b.data()[bi * k * m..(bi + 1) * k * m],
            n,
            k,
            m,
            &mut acc,
        );
        out.extend(acc.iter().map(|&v| v as f32));
    }
    Tensor::new(&[ba, n, m], out)
}

/// Channel concatenation of rank-4 tensors sharing `B`, `H`, `W`.
pub fn concat_channels(parts: &[&Tensor]) -> Result<Tensor> {
    let first = parts.first().ok_or_else(|| param_err!("nothing to concatenate"))?;
    let [b, _, h, w] = first.nchw()?;
    let mut c_total = 0;
    for p in parts {
        let [pb, pc, ph, pw] = p.nchw()?;
        if (pb, ph, pw) != (b, h, w) {
            return Err(shape_err!("concat {:?} with {:?}", first.dims(), p.dims()));
        }
        c_total += pc;
    }
    let mut out = Vec::with_capacity(b * c_total * h * w);
    for bi in 0..b {
        for p in parts {
            let pc = p.dims()[1];
            out.extend_from_slice(&p.data()[bi * pc * h * w..(bi + 1) * pc * h * w]);
        }
    }
    Tensor::new(&[b, c_total, h, w], out)
}

/// `[B, d, H, W] -> [B, H*W, d]`, nodes in row-major grid order.
pub fn flatten_nodes(x: &Tensor) -> Result<Tensor> {
    let [b, d, h, w] = x.nchw()?;
    let n = h * w;
    let src = x.data();
    let mut out = vec![0f32; b * n * d];
    for bi in 0..b {
        for c in 0..d {
            let plane = &src[(bi * d + c) * n..(bi * d + c + 1) * n];
            for (node, &v) in plane.iter().enumerate() {
                out[(bi * n + node) * d + c] = v;
            }
        }
    }
    Tensor::new(&[b, n, d], out)
}

/// Inverse of [`flatten_nodes`].
pub fn unflatten_nodes(x: &Tensor, h: usize, w: usize) -> Result<Tensor> {
    let [b, n, d] = x.bnk()?;
    if n != h * w {
        return Err(shape_err!("{n} nodes do not tile a {h}x{w} grid"));
    }
    let src = x.data();
    let mut out = vec![0f32; b * n * d];
    for bi in 0..b {
        for node in 0..n {
            for c in 0..d {
                out[(bi * d + c) * n + node] = src[(bi * n + node) * d + c];
            }
        }
    }
    Tensor::new(&[b, d, h, w], out)
}
