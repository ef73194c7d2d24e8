//! Slow, direct reference implementations used to cross-check the fast
//! paths. Each one is written from the defining formula with plain loops
//! over `f64` and shares no code with the module it checks.

use crate::graph::GridSpec;

/// Top-K by fully sorting each row's off-diagonal `(distance, column)` pairs.
pub fn topk_full_sort(dist: &[f32], n: usize, k: usize) -> Vec<bool> {
    let mut bits = vec![false; n * n];
    for i in 0..n {
        let mut row: Vec<(f32, usize)> = (0..n).filter(|&j| j != i).map(|j| (dist[i * n + j], j)).collect();
        row.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for &(_, j) in row.iter().take(k) {
            bits[i * n + j] = true;
        }
    }
    bits
}

fn dense_product(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    let mut c = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            c[i * n + j] = (0..n).map(|p| a[i * n + p] * b[p * n + j]).sum();
        }
    }
    c
}

/// `D^-1/2 (A + I) D^-1/2` as two explicit diagonal-matrix products.
pub fn normalize_dense(adj: &[bool], n: usize) -> Vec<f64> {
    let mut tilde = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            tilde[i * n + j] = if adj[i * n + j] || i == j { 1.0 } else { 0.0 };
        }
    }
    let mut dinv = vec![0.0; n * n];
    for i in 0..n {
        let deg: f64 = tilde[i * n..(i + 1) * n].iter().sum();
        dinv[i * n + i] = 1.0 / deg.sqrt();
    }
    dense_product(&dense_product(&dinv, &tilde, n), &dinv, n)
}

/// Combined distance by a double loop over node pairs.
pub fn pairwise_distances(features: &[f32], d: usize, grid: &GridSpec, alpha: f64) -> Vec<f64> {
    let n = grid.nodes();
    let norm = |i: usize| {
        features[i * d..(i + 1) * d]
            .iter()
            .map(|&v| (v as f64).powi(2))
            .sum::<f64>()
            .sqrt()
    };
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let (ri, ci) = ((i / grid.width) as f64, (i % grid.width) as f64);
            let (rj, cj) = ((j / grid.width) as f64, (j % grid.width) as f64);
            let sy = (grid.height.max(2) - 1) as f64;
            let sx = (grid.width.max(2) - 1) as f64;
            let spatial = (((ri - rj) / sy).powi(2) + ((ci - cj) / sx).powi(2)).sqrt();
            let dot: f64 = (0..d)
                .map(|c| features[i * d + c] as f64 * features[j * d + c] as f64)
                .sum();
            let (ni, nj) = (norm(i), norm(j));
            let cos = if ni == 0.0 || nj == 0.0 { 0.0 } else { dot / (ni * nj) };
            out[i * n + j] = alpha * spatial + (1.0 - alpha) * (1.0 - cos);
        }
    }
    out
}

/// Residual propagation with a dense operator: `X <- X + relu(op X W)`.
pub fn propagate_dense(x: &[f32], n: usize, d: usize, op: &[f64], weights: &[Vec<f32>]) -> Vec<f64> {
    let mut cur: Vec<f64> = x.iter().map(|&v| v as f64).collect();
    for w in weights {
        let mut next = cur.clone();
        for i in 0..n {
            for o in 0..d {
                let mut s = 0.0;
                for j in 0..n {
                    for c in 0..d {
                        s += op[i * n + j] * cur[j * d + c] * w[c * d + o] as f64;
                    }
                }
                next[i * d + o] += s.max(0.0);
            }
        }
        cur = next;
    }
    cur
}

/// Row-wise `softmax(q k^T / sqrt(d))`, `[n, m]`.
pub fn attention_scores(q: &[f64], k: &[f64], n: usize, m: usize, d: usize) -> Vec<f64> {
    let mut s = vec![0.0; n * m];
    for i in 0..n {
        for j in 0..m {
            s[i * m + j] = (0..d).map(|c| q[i * d + c] * k[j * d + c]).sum::<f64>() / (d as f64).sqrt();
        }
        let row = &mut s[i * m..(i + 1) * m];
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = row.iter().map(|v| (v - max).exp()).sum();
        for v in row.iter_mut() {
            *v = (*v - max).exp() / z;
        }
    }
    s
}

/// `softmax(q k^T / sqrt(d)) v`, `[n, dv]`.
pub fn attention(q: &[f64], k: &[f64], v: &[f64], n: usize, m: usize, d: usize, dv: usize) -> Vec<f64> {
    let s = attention_scores(q, k, n, m, d);
    let mut out = vec![0.0; n * dv];
    for i in 0..n {
        for c in 0..dv {
            out[i * dv + c] = (0..m).map(|j| s[i * m + j] * v[j * dv + c]).sum();
        }
    }
    out
}

/// `x W` for row vectors, `x [n, a]`, `W [a, b]`.
pub fn matmul(x: &[f64], w: &[f64], n: usize, a: usize, b: usize) -> Vec<f64> {
    let mut out = vec![0.0; n * b];
    for i in 0..n {
        for o in 0..b {
            out[i * b + o] = (0..a).map(|c| x[i * a + c] * w[c * b + o]).sum();
        }
    }
    out
}

/// Pixel counts `(tp, fp, fn, tn)` of `p >= t` against `g >= 0.5`.
pub fn confusion(p: &[f32], g: &[f32], t: f32) -> [u64; 4] {
    let mut c = [0u64; 4];
    for (&pv, &gv) in p.iter().zip(g) {
        let idx = match (pv >= t, gv >= 0.5) {
            (true, true) => 0,
            (true, false) => 1,
            (false, true) => 2,
            (false, false) => 3,
        };
        c[idx] += 1;
    }
    c
}

pub fn mae(p: &[f32], g: &[f32]) -> f64 {
    let mut s = 0.0;
    for (&pv, &gv) in p.iter().zip(g) {
        let gb = if gv >= 0.5 { 1.0 } else { 0.0 };
        s += (pv as f64 - gb).abs();
    }
    s / p.len() as f64
}

pub fn iou(p: &[f32], g: &[f32], t: f32) -> f64 {
    let [tp, fp, fnn, _] = confusion(p, g, t);
    if tp + fp + fnn == 0 {
        1.0
    } else {
        tp as f64 / (tp + fp + fnn) as f64
    }
}

/// `(precision, recall)` at `t = k / 255` for every `k`.
pub fn pr_points(p: &[f32], g: &[f32]) -> Vec<(f64, f64)> {
    (0..256)
        .map(|k| {
            let [tp, fp, fnn, _] = confusion(p, g, k as f32 / 255.0);
            let prec = if tp + fp == 0 {
                1.0
            } else {
                tp as f64 / (tp + fp) as f64
            };
            let rec = if tp + fnn == 0 {
                1.0
            } else {
                tp as f64 / (tp + fnn) as f64
            };
            (prec, rec)
        })
        .collect()
}
