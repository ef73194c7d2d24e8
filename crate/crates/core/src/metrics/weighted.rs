//! Weighted F-beta.
//!
//! The absolute error field is made spatially aware: background errors are
//! replaced by the error at their nearest foreground pixel and smoothed with
//! a 7x7 Gaussian (sigma 5), foreground errors keep the smaller of raw and
//! smoothed values, and background errors are amplified by distance to the
//! object, `2 - exp(ln(0.5) / 5 * dist)`.

use crate::error::Result;
use crate::tensor::Tensor;

const EPS: f64 = f64::EPSILON;
const RADIUS: usize = 3;
const SIGMA: f64 = 5.0;

/// Exact Euclidean distance to, and flat index of, the nearest foreground
/// pixel. Foreground pixels map to themselves at distance 0; ties go to the
/// first candidate in row-major order.
#[derive(Clone, Debug, PartialEq)]
pub struct NearestForeground {
    pub dist: Vec<f64>,
    pub index: Vec<usize>,
}

/// `None` when the mask has no foreground.
pub fn nearest_foreground(g: &[bool], h: usize, w: usize) -> Option<NearestForeground> {
    if !g.contains(&true) {
        return None;
    }
    // Per column: vertical offset and row of the nearest foreground pixel,
    // preferring the upper one on ties.
    let mut vrow = vec![usize::MAX; h * w];
    for c in 0..w {
        let mut above = None;
        for r in 0..h {
            if g[r * w + c] {
                above = Some(r);
            }
            vrow[r * w + c] = above.unwrap_or(usize::MAX);
        }
        let mut below = None;
        for r in (0..h).rev() {
            if g[r * w + c] {
                below = Some(r);
            }
            if let Some(b) = below {
                let cur = vrow[r * w + c];
                if cur == usize::MAX || b - r < r - cur {
                    vrow[r * w + c] = b;
                }
            }
        }
    }
    let mut dist = vec![0f64; h * w];
    let mut index = vec![0usize; h * w];
    for r in 0..h {
        for c in 0..w {
            let mut best: Option<(u64, usize, usize)> = None;
            for cc in 0..w {
                let rr = vrow[r * w + cc];
                if rr == usize::MAX {
                    continue;
                }
                let (dr, dc) = (rr.abs_diff(r) as u64, cc.abs_diff(c) as u64);
                let cand = (dr * dr + dc * dc, rr, cc);
                if !best.is_some_and(|b| cand >= b) {
                    best = Some(cand);
                }
            }
            let (d2, rr, cc) = best.expect("some column has foreground");
            dist[r * w + c] = (d2 as f64).sqrt();
            index[r * w + c] = rr * w + cc;
        }
    }
    Some(NearestForeground { dist, index })
}

fn gaussian_kernel() -> [[f64; 2 * RADIUS + 1]; 2 * RADIUS + 1] {
    let mut k = [[0f64; 2 * RADIUS + 1]; 2 * RADIUS + 1];
    let mut sum = 0.0;
    for (i, row) in k.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            let (y, x) = (i as f64 - RADIUS as f64, j as f64 - RADIUS as f64);
            *v = (-(x * x + y * y) / (2.0 * SIGMA * SIGMA)).exp();
            sum += *v;
        }
    }
    for v in k.iter_mut().flatten() {
        *v /= sum;
    }
    k
}

/// Weighted F-beta with `beta2 = beta^2`. An empty ground truth scores 0.
pub fn weighted_f(p: &Tensor, g: &Tensor, beta2: f64) -> Result<f64> {
    let m = super::pair(p, g)?;
    let (h, w) = (m.h, m.w);
    let Some(nf) = nearest_foreground(&m.g, h, w) else {
        return Ok(0.0);
    };
    let gf = |i: usize| if m.g[i] { 1.0 } else { 0.0 };
    let e: Vec<f64> = (0..h * w).map(|i| (m.p[i] as f64 - gf(i)).abs()).collect();
    let et: Vec<f64> = (0..h * w).map(|i| if m.g[i] { e[i] } else { e[nf.index[i]] }).collect();

    let k = gaussian_kernel();
    let mut ea = vec![0f64; h * w];
    for r in 0..h {
        for c in 0..w {
            let mut s = 0.0;
            for (dy, krow) in k.iter().enumerate() {
                let Some(rr) = (r + dy).checked_sub(RADIUS).filter(|&v| v < h) else {
                    continue;
                };
                for (dx, &kv) in krow.iter().enumerate() {
                    if let Some(cc) = (c + dx).checked_sub(RADIUS).filter(|&v| v < w) {
                        s += kv * et[rr * w + cc];
                    }
                }
            }
            ea[r * w + c] = s;
        }
    }

    let decay = 0.5f64.ln() / 5.0;
    let (mut fg_n, mut fg_ew, mut bg_ew) = (0f64, 0f64, 0f64);
    for i in 0..h * w {
        if m.g[i] {
            fg_n += 1.0;
            fg_ew += if ea[i] < e[i] { ea[i] } else { e[i] };
        } else {
            bg_ew += e[i] * (2.0 - (decay * nf.dist[i]).exp());
        }
    }
    let tpw = fg_n - fg_ew;
    let recall = 1.0 - fg_ew / fg_n;
    let precision = tpw / (EPS + tpw + bg_ew);
    Ok((1.0 + beta2) * recall * precision / (EPS + recall + beta2 * precision))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn brute(g: &[bool], h: usize, w: usize) -> NearestForeground {
        let fg: Vec<usize> = (0..h * w).filter(|&i| g[i]).collect();
        let mut dist = vec![0.0; h * w];
        let mut index = vec![0; h * w];
        for i in 0..h * w {
            let d2 = |j: usize| {
                let (dr, dc) = ((i / w).abs_diff(j / w), (i % w).abs_diff(j % w));
                dr * dr + dc * dc
            };
            let best = *fg.iter().min_by_key(|&&j| (d2(j), j)).unwrap();
            dist[i] = (d2(best) as f64).sqrt();
            index[i] = best;
        }
        NearestForeground { dist, index }
    }

    #[test]
    fn transform_matches_brute_force_with_ties() {
        let (_, g) = fixtures::fixture_b();
        let gb: Vec<bool> = g.data().iter().map(|&v| v >= 0.5).collect();
        assert_eq!(nearest_foreground(&gb, 24, 20).unwrap(), brute(&gb, 24, 20));
        // symmetric pair: every midpoint is a tie
        let mut two = vec![false; 7 * 7];
        two[3 * 7] = true;
        two[3 * 7 + 6] = true;
        two[3] = true;
        assert_eq!(nearest_foreground(&two, 7, 7).unwrap(), brute(&two, 7, 7));
        assert!(nearest_foreground(&[false; 4], 2, 2).is_none());
    }

    #[test]
    fn matches_reference_goldens() {
        let (p, g) = fixtures::fixture_a();
        assert!((weighted_f(&p, &g, 0.3).unwrap() - fixtures::WEIGHTED_F_A).abs() < 1e-6);
        let inv = g.map(|v| 1.0 - v);
        assert!((weighted_f(&inv, &g, 0.3).unwrap() - fixtures::WEIGHTED_F_A_INVERTED).abs() < 1e-6);
        let (p, g) = fixtures::fixture_b();
        assert!((weighted_f(&p, &g, 0.3).unwrap() - fixtures::WEIGHTED_F_B).abs() < 1e-6);
    }

    #[test]
    fn perfect_and_empty() {
        let (_, g) = fixtures::fixture_a();
        assert!((weighted_f(&g, &g, 0.3).unwrap() - 1.0).abs() < 1e-12);
        let z = Tensor::zeros(&[5, 5]);
        assert_eq!(weighted_f(&z, &z, 0.3).unwrap(), 0.0);
    }

    #[test]
    fn large_beta_rewards_recall() {
        // full recall, one false positive pixel
        let g = Tensor::from_fn(&[8, 8], |i| {
            if (2..6).contains(&(i / 8)) && (2..6).contains(&(i % 8)) {
                1.0
            } else {
                0.0
            }
        });
        let mut p = g.clone();
        p.data_mut()[0] = 1.0;
        let q = weighted_f(&p, &g, 1e6).unwrap();
        assert!(q > 0.999, "{q}");
        assert!(weighted_f(&p, &g, 0.3).unwrap() < q);
    }
}
