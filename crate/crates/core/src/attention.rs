//! Single-head scaled dot-product attention.
//!
//! Token sequences are `[B, N, d]`. Scores are `softmax(Q K^T / sqrt(d))`,
//! evaluated in `f64` one block of query rows at a time so the `N x M`
//! matrix is never materialized for large grids.

use crate::error::{shape_err, Result};
use crate::tensor::{gemm_f64acc, init_uniform, softmax_row, Prng, ResizePlan, Tensor};

const QUERY_BLOCK: usize = 64;

/// Query, key and value projections, each `[d_in, d_out]` applied as `x W`.
#[derive(Clone, Debug, PartialEq)]
pub struct AttentionWeights {
    pub wq: Tensor,
    pub wk: Tensor,
    pub wv: Tensor,
}

impl AttentionWeights {
    pub fn init(prng: &mut Prng, d: usize) -> Result<Self> {
        Ok(Self {
            wq: init_uniform(prng, &[d, d], d)?,
            wk: init_uniform(prng, &[d, d], d)?,
            wv: init_uniform(prng, &[d, d], d)?,
        })
    }

    pub fn zeros(d: usize) -> Self {
        Self {
            wq: Tensor::zeros(&[d, d]),
            wk: Tensor::zeros(&[d, d]),
            wv: Tensor::zeros(&[d, d]),
        }
    }
}

/// `x W` for every token: `[B, N, d_in] x [d_in, d_out] -> [B, N, d_out]`.
pub fn project(x: &Tensor, w: &Tensor) -> Result<Tensor> {
    let [b, n, d_in] = x.bnk()?;
    let d_out = match w.dims() {
        &[i, o] if i == d_in => o,
        dims => return Err(shape_err!("projection {dims:?} for {d_in}-dim tokens")),
    };
    let mut acc = vec![0f64; n * d_out];
    let mut out = Vec::with_capacity(b * n * d_out);
    for bi in 0..b {
        gemm_f64acc(
            &x.data()[bi * n * d_in..(bi + 1) * n * d_in],
            w.data(),
            n,
            d_in,
            d_out,
            &mut acc,
        );
        out.extend(acc.iter().map(|&v| v as f32));
    }
    Tensor::new(&[b, n, d_out], out)
}

fn transpose(x: &[f32], rows: usize, cols: usize) -> Vec<f32> {
    let mut t = vec![0f32; rows * cols];
    for r in 0..rows {
        for c in 0..cols {
            t[c * rows + r] = x[r * cols + c];
        }
    }
    t
}

fn check_qkv(q: &Tensor, k: &Tensor, v: Option<&Tensor>) -> Result<()> {
    let [bq, _, dq] = q.bnk()?;
    let [bk, mk, dk] = k.bnk()?;
    if bq != bk || dq != dk {
        return Err(shape_err!("queries {:?} vs keys {:?}", q.dims(), k.dims()));
    }
    if let Some(v) = v {
        let [bv, mv, _] = v.bnk()?;
        if bv != bk || mv != mk {
            return Err(shape_err!("keys {:?} vs values {:?}", k.dims(), v.dims()));
        }
    }
    Ok(())
}

/// Softmaxed score rows for one block of queries against transposed keys.
fn score_block(q_rows: &[f32], k_t: &[f32], d: usize, m: usize, out: &mut [f64]) {
    let rows = q_rows.len() / d;
    gemm_f64acc(q_rows, k_t, rows, d, m, &mut out[..rows * m]);
    let scale = 1.0 / (d as f64).sqrt();
    for row in out[..rows * m].chunks_exact_mut(m) {
        for s in row.iter_mut() {
            *s *= scale;
        }
        softmax_row(row);
    }
}

/// Full row-stochastic score matrix `[B, N, M]`. Intended for inspection
/// and small grids.
pub fn attention_scores(q: &Tensor, k: &Tensor) -> Result<Tensor> {
    check_qkv(q, k, None)?;
    let [b, n, d] = q.bnk()?;
    let m = k.dims()[1];
    let mut out = Vec::with_capacity(b * n * m);
    let mut buf = vec![0f64; QUERY_BLOCK * m];
    for bi in 0..b {
        let k_t = transpose(&k.data()[bi * m * d..(bi + 1) * m * d], m, d);
        for q_rows in q.data()[bi * n * d..(bi + 1) * n * d].chunks(QUERY_BLOCK * d) {
            let rows = q_rows.len() / d;
            score_block(q_rows, &k_t, d, m, &mut buf);
            out.extend(buf[..rows * m].iter().map(|&p| p as f32));
        }
    }
    Tensor::new(&[b, n, m], out)
}

/// `softmax(Q K^T / sqrt(d)) V`, bit-identical to multiplying
/// [`attention_scores`] by `V`.
pub fn attention(q: &Tensor, k: &Tensor, v: &Tensor) -> Result<Tensor> {
    check_qkv(q, k, Some(v))?;
    let [b, n, d] = q.bnk()?;
    let m = k.dims()[1];
    let dv = v.dims()[2];
    let mut out = Vec::with_capacity(b * n * dv);
    let mut scores = vec![0f64; QUERY_BLOCK * m];
    let mut probs = vec![0f32; QUERY_BLOCK * m];
    let mut acc = vec![0f64; QUERY_BLOCK * dv];
    for bi in 0..b {
        let k_t = transpose(&k.data()[bi * m * d..(bi + 1) * m * d], m, d);
        let vb = &v.data()[bi * m * dv..(bi + 1) * m * dv];
        for q_rows in q.data()[bi * n * d..(bi + 1) * n * d].chunks(QUERY_BLOCK * d) {
            let rows = q_rows.len() / d;
            score_block(q_rows, &k_t, d, m, &mut scores);
            for (p, &s) in probs.iter_mut().zip(&scores[..rows * m]) {
                *p = s as f32;
            }
            gemm_f64acc(&probs[..rows * m], vb, rows, m, dv, &mut acc[..rows * dv]);
            out.extend(acc[..rows * dv].iter().map(|&a| a as f32));
        }
    }
    Tensor::new(&[b, n, dv], out)
}

/// Attention whose keys and values are a bilinear upsample of coarse
/// tokens.
///
/// `k_coarse` / `v_coarse` are `[B, T, d]` on the plan's source grid; the
/// attended sequence is the plan's destination grid, where each fine token
/// is a 4-tap blend of coarse ones. Because the blend is linear, fine scores
/// are the same blend of coarse scores, and the softmax-weighted sum over
/// fine values collapses onto coarse values through the blend's adjoint.
/// The result equals upsampling first and calling [`attention`], up to
/// rounding, at `O(N * (T d + 8 M))` instead of `O(N M d)`.
pub fn attention_interpolated(q: &Tensor, k_coarse: &Tensor, v_coarse: &Tensor, plan: &ResizePlan) -> Result<Tensor> {
    check_qkv(q, k_coarse, Some(v_coarse))?;
    let [b, n, d] = q.bnk()?;
    let t = k_coarse.dims()[1];
    let dv = v_coarse.dims()[2];
    let [sh, sw] = plan.src();
    let [dh, dw] = plan.dst();
    if sh * sw != t {
        return Err(shape_err!("{t} coarse tokens for a {sh}x{sw} source grid"));
    }
    let m = dh * dw;
    let taps: Vec<[(usize, f64); 4]> = (0..m).map(|j| plan.taps(j / dw, j % dw)).collect();
    let scale = 1.0 / (d as f64).sqrt();

    let mut out = Vec::with_capacity(b * n * dv);
    let mut coarse = vec![0f64; QUERY_BLOCK * t];
    let mut fine = vec![0f64; m];
    let mut pulled = vec![0f64; t];
    let mut acc = vec![0f64; dv];
    for bi in 0..b {
        let k_t = transpose(&k_coarse.data()[bi * t * d..(bi + 1) * t * d], t, d);
        let vb = &v_coarse.data()[bi * t * dv..(bi + 1) * t * dv];
        for q_rows in q.data()[bi * n * d..(bi + 1) * n * d].chunks(QUERY_BLOCK * d) {
            let rows = q_rows.len() / d;
            gemm_f64acc(q_rows, &k_t, rows, d, t, &mut coarse[..rows * t]);
            for r in 0..rows {
                let cs = &coarse[r * t..(r + 1) * t];
                for (f, tp) in fine.iter_mut().zip(&taps) {
                    *f = scale * tp.iter().map(|&(i, w)| w * cs[i]).sum::<f64>();
                }
                softmax_row(&mut fine);
                pulled.fill(0.0);
                for (&p, tp) in fine.iter().zip(&taps) {
                    for &(i, w) in tp {
                        pulled[i] += w * p;
                    }
                }
                acc.fill(0.0);
                for (&p, vrow) in pulled.iter().zip(vb.chunks_exact(dv)) {
                    for (a, &x) in acc.iter_mut().zip(vrow) {
                        *a += p * x as f64;
                    }
                }
                out.extend(acc.iter().map(|&a| a as f32));
            }
        }
    }
    Tensor::new(&[b, n, dv], out)
}
