//! Structure measure: a blend of an object-aware term (foreground and
//! background mean/spread similarity) and a region-aware term (SSIM over
//! four quadrants split at the ground-truth centroid).

use crate::error::Result;
use crate::tensor::Tensor;

const EPS: f64 = f64::EPSILON;

fn mean_std(vals: &[f64]) -> (f64, f64) {
    let n = vals.len() as f64;
    let mu = vals.iter().sum::<f64>() / n;
    if vals.len() <= 1 {
        return (mu, 0.0);
    }
    let var = vals.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / (n - 1.0);
    (mu, var.sqrt())
}

fn s_object(vals: &[f64]) -> f64 {
    let (mu, sigma) = mean_std(vals);
    2.0 * mu / (mu * mu + 1.0 + sigma + EPS)
}

/// Foreground similarity of `P` weighted by the foreground ratio, plus
/// background similarity of `1 - P`. Needs both classes present.
pub fn object_score(p: &[f64], g: &[bool]) -> f64 {
    let fg: Vec<f64> = p.iter().zip(g).filter(|(_, &m)| m).map(|(&v, _)| v).collect();
    let bg: Vec<f64> = p.iter().zip(g).filter(|(_, &m)| !m).map(|(&v, _)| 1.0 - v).collect();
    let u = fg.len() as f64 / g.len() as f64;
    u * s_object(&fg) + (1.0 - u) * s_object(&bg)
}

fn ssim(p: &[f64], g: &[f64]) -> f64 {
    let n = p.len() as f64;
    let x = p.iter().sum::<f64>() / n;
    let y = g.iter().sum::<f64>() / n;
    let (mut sx, mut sy, mut sxy) = (0.0, 0.0, 0.0);
    if p.len() > 1 {
        for (&a, &b) in p.iter().zip(g) {
            sx += (a - x) * (a - x);
            sy += (b - y) * (b - y);
            sxy += (a - x) * (b - y);
        }
        sx /= n - 1.0;
        sy /= n - 1.0;
        sxy /= n - 1.0;
    }
    let alpha = 4.0 * x * y * sxy;
    let beta = (x * x + y * y) * (sx + sy);
    if alpha != 0.0 {
        alpha / (beta + EPS)
    } else if beta == 0.0 {
        1.0
    } else {
        0.0
    }
}

/// MATLAB `round`: half away from zero.
fn round_half_away(v: f64) -> usize {
    (v + 0.5).floor() as usize
}

/// Area-weighted SSIM of the four blocks split at the 1-based, rounded
/// foreground centroid. Empty blocks contribute nothing.
pub fn region_score(p: &[f64], g: &[bool], h: usize, w: usize) -> f64 {
    let (mut rs, mut cs, mut n) = (0f64, 0f64, 0f64);
    for (i, &m) in g.iter().enumerate() {
        if m {
            rs += (i / w) as f64;
            cs += (i % w) as f64;
            n += 1.0;
        }
    }
    let x = round_half_away(cs / n + 1.0).min(w);
    let y = round_half_away(rs / n + 1.0).min(h);
    let area = (h * w) as f64;
    let blocks = [(0..y, 0..x), (0..y, x..w), (y..h, 0..x), (y..h, x..w)];
    let mut total = 0.0;
    for (rows, cols) in blocks {
        let size = rows.len() * cols.len();
        if size == 0 {
            continue;
        }
        let mut pp = Vec::with_capacity(size);
        let mut gg = Vec::with_capacity(size);
        for r in rows {
            for c in cols.clone() {
                pp.push(p[r * w + c]);
                gg.push(if g[r * w + c] { 1.0 } else { 0.0 });
            }
        }
        total += size as f64 / area * ssim(&pp, &gg);
    }
    total
}

/// `alpha * S_o + (1 - alpha) * S_r`, clamped at 0. An all-background
/// ground truth scores `1 - mean(P)`; an all-foreground one scores `mean(P)`.
pub fn s_measure(p: &Tensor, g: &Tensor, alpha: f64) -> Result<f64> {
    let m = super::pair(p, g)?;
    let pv: Vec<f64> = m.p.iter().map(|&v| v as f64).collect();
    let fg = m.g.iter().filter(|&&b| b).count();
    let mean_p = pv.iter().sum::<f64>() / pv.len() as f64;
    if fg == 0 {
        return Ok(1.0 - mean_p);
    }
    if fg == m.g.len() {
        return Ok(mean_p);
    }
    let q = alpha * object_score(&pv, &m.g) + (1.0 - alpha) * region_score(&pv, &m.g, m.h, m.w);
    Ok(q.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn degenerate_ground_truth() {
        let z = Tensor::zeros(&[4, 4]);
        let o = Tensor::full(&[4, 4], 1.0);
        assert_eq!(s_measure(&z, &z, 0.5).unwrap(), 1.0);
        assert_eq!(s_measure(&o, &z, 0.5).unwrap(), 0.0);
        assert_eq!(s_measure(&o, &o, 0.5).unwrap(), 1.0);
    }

    #[test]
    fn matches_reference_goldens() {
        let (p, g) = fixtures::fixture_a();
        assert!((s_measure(&p, &g, 0.5).unwrap() - fixtures::S_MEASURE_A).abs() < 1e-6);
        assert!((s_measure(&g, &g, 0.5).unwrap() - fixtures::S_MEASURE_A_PERFECT).abs() < 1e-6);
        let (p, g) = fixtures::fixture_b();
        assert!((s_measure(&p, &g, 0.5).unwrap() - fixtures::S_MEASURE_B).abs() < 1e-6);
    }
}
