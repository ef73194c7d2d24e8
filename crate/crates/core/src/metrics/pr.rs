use crate::error::{param_err, Result};
use crate::tensor::Tensor;

pub const PR_THRESHOLDS: usize = 256;

/// Precision and recall of `P >= t` for `t = k / 255`, `k = 0..=255`.
#[derive(Clone, Debug, PartialEq)]
pub struct PrCurve {
    pub thresholds: Vec<f32>,
    pub precision: Vec<f64>,
    pub recall: Vec<f64>,
}

fn thresholds() -> Vec<f32> {
    (0..PR_THRESHOLDS).map(|k| k as f32 / 255.0).collect()
}

/// Per-image curve. Precision is 1 where nothing is predicted positive;
/// recall is 1 when the ground truth is empty.
pub fn pr_curve(p: &Tensor, g: &Tensor) -> Result<PrCurve> {
    let m = super::pair(p, g)?;
    let ts = thresholds();
    // hist[k]: pixels whose largest passed threshold is t_k
    let mut hist_fg = vec![0u64; PR_THRESHOLDS];
    let mut hist_bg = vec![0u64; PR_THRESHOLDS];
    let mut total_fg = 0u64;
    for (&pv, &gv) in m.p.iter().zip(&m.g) {
        total_fg += gv as u64;
        let passed = ts.partition_point(|&t| t <= pv);
        if passed > 0 {
            let hist = if gv { &mut hist_fg } else { &mut hist_bg };
            hist[passed - 1] += 1;
        }
    }
    let mut precision = vec![0f64; PR_THRESHOLDS];
    let mut recall = vec![0f64; PR_THRESHOLDS];
    let (mut tp, mut fp) = (0u64, 0u64);
    for k in (0..PR_THRESHOLDS).rev() {
        tp += hist_fg[k];
        fp += hist_bg[k];
        precision[k] = if tp + fp == 0 {
            1.0
        } else {
            tp as f64 / (tp + fp) as f64
        };
        recall[k] = if total_fg == 0 {
            1.0
        } else {
            tp as f64 / total_fg as f64
        };
    }
    Ok(PrCurve {
        thresholds: ts,
        precision,
        recall,
    })
}

/// Pointwise mean of per-image curves, accumulated in slice order.
pub fn mean_curve(curves: &[PrCurve]) -> Result<PrCurve> {
    if curves.is_empty() {
        return Err(param_err!("cannot average zero curves"));
    }
    let n = curves.len() as f64;
    let avg = |f: fn(&PrCurve) -> &Vec<f64>| -> Vec<f64> {
        (0..PR_THRESHOLDS)
            .map(|k| curves.iter().map(|c| f(c)[k]).sum::<f64>() / n)
            .collect()
    };
    Ok(PrCurve {
        thresholds: thresholds(),
        precision: avg(|c| &c.precision),
        recall: avg(|c| &c.recall),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{init_uniform, Prng};

    #[test]
    fn matches_counting_at_every_threshold() {
        let mut prng = Prng::new(21);
        let p = init_uniform(&mut prng, &[4, 4], 1)
            .unwrap()
            .map(|v| (v.abs() * 255.0).round() / 255.0);
        let g = init_uniform(&mut prng, &[4, 4], 1)
            .unwrap()
            .map(|v| if v > 0.0 { 1.0 } else { 0.0 });
        let c = pr_curve(&p, &g).unwrap();
        for k in 0..PR_THRESHOLDS {
            let t = k as f32 / 255.0;
            let (mut tp, mut fp, mut fg) = (0, 0, 0);
            for (&pv, &gv) in p.data().iter().zip(g.data()) {
                let pos = pv >= t;
                let gt = gv >= 0.5;
                tp += (pos && gt) as u32;
                fp += (pos && !gt) as u32;
                fg += gt as u32;
            }
            let prec = if tp + fp == 0 {
                1.0
            } else {
                tp as f64 / (tp + fp) as f64
            };
            let rec = if fg == 0 { 1.0 } else { tp as f64 / fg as f64 };
            assert_eq!((c.precision[k], c.recall[k]), (prec, rec), "k = {k}");
        }
        assert_eq!(c.recall[0], 1.0);
        assert!(c.recall.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn perfect_prediction() {
        let g = Tensor::from_fn(&[3, 3], |i| (i % 2) as f32);
        let c = pr_curve(&g, &g).unwrap();
        assert!(c.precision[1..].iter().all(|&v| v == 1.0));
        assert!(c.recall.iter().all(|&v| v == 1.0));
    }
}
