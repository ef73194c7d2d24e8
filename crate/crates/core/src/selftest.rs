//! Built-in verification suite: every fast path checked against the
//! brute-force references in [`crate::oracle`] and against closed-form
//! identities, on seeded random instances.

use std::fmt;
use std::time::{Duration, Instant};

use crate::attention::{attention, attention_interpolated, attention_scores, AttentionWeights};
use crate::dugc::{
    cross_attention_fuse, cross_attention_fuse_direct, propagate_uncertainty, uncertainty_gate, CrossAttentionFusion,
    UncertaintyMlp,
};
use crate::error::Result;
use crate::fixtures;
use crate::graph::{normalize, pairwise_distances, topk_adjacency, Adjacency, DistanceMatrix, GridSpec};
use crate::losses::{bce_loss, check_gradient, consistency_pair, finite_diff_check, iou_loss, total_loss, CheckedLoss};
use crate::mcf::{encode_modality, fuse, modality_weights, MODALITIES};
use crate::metrics::{mae, msiou, pr_curve, s_measure, weighted_f};
use crate::model::{Detach, MaskOutputs, SaliencyOutputs};
use crate::oracle;
use crate::tensor::{flatten_nodes, ConvParams, Prng, ResizePlan, Tensor};

pub const CRITERIA: [(u8, &str); 9] = [
    (1, "graph oracle"),
    (2, "normalization identity"),
    (3, "residual identity"),
    (4, "gate bound"),
    (5, "attention stochasticity"),
    (6, "modality gating"),
    (7, "loss values"),
    (8, "gradient checks"),
    (9, "metric oracles"),
];

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Options {
    /// Perturbs the analytic gradients handed to the checker so that the
    /// gradient criterion must fail.
    pub inject_gradient_bug: bool,
}

#[derive(Clone, Debug)]
pub struct CriterionResult {
    pub id: u8,
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
    pub elapsed: Duration,
}

#[derive(Clone, Debug)]
pub struct Report {
    pub results: Vec<CriterionResult>,
}

impl Report {
    pub fn all_passed(&self) -> bool {
        self.results.iter().all(|r| r.pass)
    }

    pub fn elapsed(&self) -> Duration {
        self.results.iter().map(|r| r.elapsed).sum()
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:>2}  {:<24} {:<6} {:>9}  detail", "#", "check", "result", "time")?;
        for r in &self.results {
            writeln!(
                f,
                "{:>2}  {:<24} {:<6} {:>8.3}s  {}",
                r.id,
                r.name,
                if r.pass { "PASS" } else { "FAIL" },
                r.elapsed.as_secs_f64(),
                r.detail
            )?;
        }
        let passed = self.results.iter().filter(|r| r.pass).count();
        write!(
            f,
            "{passed}/{} passed in {:.3}s",
            self.results.len(),
            self.elapsed().as_secs_f64()
        )
    }
}

pub fn run(opts: Options) -> Report {
    Report {
        results: CRITERIA.iter().map(|&(id, _)| run_one(id, opts)).collect(),
    }
}

/// Runs a single criterion by number (1 to 9).
pub fn run_one(id: u8, opts: Options) -> CriterionResult {
    let name = CRITERIA.iter().find(|c| c.0 == id).map(|c| c.1).unwrap_or("unknown");
    let start = Instant::now();
    let outcome = match id {
        1 => graph_oracle(),
        2 => normalization_identity(),
        3 => residual_identity(),
        4 => gate_bound(),
        5 => attention_stochasticity(),
        6 => modality_gating(),
        7 => loss_values(),
        8 => gradient_checks(opts),
        9 => metric_oracles(),
        _ => Ok(Check::fail(format!("no criterion {id}"))),
    };
    let check = outcome.unwrap_or_else(|e| Check::fail(format!("error: {e}")));
    CriterionResult {
        id,
        name,
        pass: check.pass,
        detail: check.detail,
        elapsed: start.elapsed(),
    }
}

struct Check {
    pass: bool,
    detail: String,
}

impl Check {
    fn new(pass: bool, detail: String) -> Self {
        Self { pass, detail }
    }

    fn fail(detail: String) -> Self {
        Self::new(false, detail)
    }
}

fn random(prng: &mut Prng, dims: &[usize], lo: f64, hi: f64) -> Tensor {
    Tensor::from_fn(dims, |_| prng.uniform(lo, hi) as f32)
}

fn to_f64(t: &Tensor) -> Vec<f64> {
    t.data().iter().map(|&v| v as f64).collect()
}

fn max_diff(a: &[f64], b: &[f32]) -> f64 {
    a.iter().zip(b).map(|(x, &y)| (x - y as f64).abs()).fold(0.0, f64::max)
}

fn random_grid(prng: &mut Prng, max_side: usize) -> Result<GridSpec> {
    loop {
        let (h, w) = (1 + prng.below(max_side), 1 + prng.below(max_side));
        if h * w >= 2 {
            return GridSpec::new(h, w);
        }
    }
}

fn graph_oracle() -> Result<Check> {
    let mut prng = Prng::new(0x6a09_e667);
    let mut mismatches = 0;
    let mut largest = 0;
    let mut dist_err = 0f64;
    for inst in 0..100 {
        // every tenth instance is a full 16x16 grid
        let grid = if inst % 10 == 0 {
            GridSpec::new(16, 16)?
        } else {
            random_grid(&mut prng, 16)?
        };
        let n = grid.nodes();
        largest = largest.max(n);
        let choices: Vec<usize> = [1, 4, 8, n - 1].into_iter().filter(|&k| k < n).collect();
        let k = choices[inst % choices.len()];
        let dist = if inst % 2 == 0 {
            let d = 1 + prng.below(6);
            let f = random(&mut prng, &[n, d], -1.0, 1.0);
            let alpha = prng.next_f64();
            let fast = pairwise_distances(&f, &grid, alpha)?;
            let reference = oracle::pairwise_distances(f.data(), d, &grid, alpha);
            dist_err = dist_err.max(max_diff(&reference, fast.values().data()));
            fast
        } else {
            // few distinct levels, so ties are everywhere
            let levels = 1 + prng.below(4);
            DistanceMatrix::from_values(Tensor::from_fn(&[n, n], |_| prng.below(levels) as f32))?
        };
        let fast = topk_adjacency(&dist, k)?;
        let reference = oracle::topk_full_sort(dist.values().data(), n, k);
        if (0..n).any(|i| fast.row(i) != &reference[i * n..(i + 1) * n]) {
            mismatches += 1;
        }
    }
    Ok(Check::new(
        mismatches == 0 && dist_err <= 1e-6,
        format!("100 instances up to N={largest}, {mismatches} mismatches; distances vs double loop {dist_err:.1e}"),
    ))
}

fn normalization_identity() -> Result<Check> {
    let mut worst = 0f64;
    for n in [2usize, 4, 16] {
        let complete = Adjacency::from_dense(n, (0..n * n).map(|i| i / n != i % n).collect())?;
        let op = normalize(&complete, false);
        let target = 1.0 / n as f64;
        worst = op
            .operator()
            .data()
            .iter()
            .map(|&v| (v as f64 - target).abs())
            .fold(worst, f64::max);
    }
    // the general operator against the dense formula
    let mut prng = Prng::new(0xbb67_ae85);
    let mut dense_err = 0f64;
    for _ in 0..20 {
        let n = 2 + prng.below(40);
        let bits: Vec<bool> = (0..n * n).map(|i| i / n != i % n && prng.next_f64() < 0.3).collect();
        let adj = Adjacency::from_dense(n, bits.clone())?;
        let op = normalize(&adj, false);
        dense_err = dense_err.max(max_diff(&oracle::normalize_dense(&bits, n), op.operator().data()));
    }
    Ok(Check::new(
        worst <= 1e-6 && dense_err <= 1e-6,
        format!("complete graphs N=2,4,16 max |op - 1/N| = {worst:.2e}; random graphs vs dense {dense_err:.2e}"),
    ))
}

fn residual_identity() -> Result<Check> {
    let mut prng = Prng::new(0x3c6e_f372);
    let mut exact = 0;
    let mut oracle_err = 0f64;
    for _ in 0..20 {
        let grid = random_grid(&mut prng, 12)?;
        let (n, d) = (grid.nodes(), 1 + prng.below(8));
        let x = random(&mut prng, &[1, n, d], -2.0, 2.0);
        let k = 1 + prng.below(n - 1);
        let dist = pairwise_distances(&x.clone().reshape(&[n, d])?, &grid, 0.5)?;
        let g = normalize(&topk_adjacency(&dist, k)?, false);
        let zero = vec![Tensor::zeros(&[d, d]); 3];
        let out = propagate_uncertainty(&x, std::slice::from_ref(&g), &zero)?;
        let same = out.data().iter().zip(x.data()).all(|(a, b)| a.to_bits() == b.to_bits());
        exact += same as usize;
        let ws: Vec<Tensor> = (0..3).map(|_| random(&mut prng, &[d, d], -0.5, 0.5)).collect();
        let out = propagate_uncertainty(&x, std::slice::from_ref(&g), &ws)?;
        let dense_op = to_f64(g.operator());
        let raw: Vec<Vec<f32>> = ws.iter().map(|w| w.data().to_vec()).collect();
        let reference = oracle::propagate_dense(x.data(), n, d, &dense_op, &raw);
        let scale = reference.iter().fold(1f64, |m, v| m.max(v.abs()));
        oracle_err = oracle_err.max(max_diff(&reference, out.data()) / scale);
    }
    Ok(Check::new(
        exact == 20 && oracle_err < 1e-5,
        format!("{exact}/20 bit-exact with zero weights; nonzero weights vs dense oracle {oracle_err:.2e}"),
    ))
}

fn gate_bound() -> Result<Check> {
    let mut prng = Prng::new(0xa54f_f53a);
    let mut violations = 0usize;
    let mut checked = 0usize;
    for inst in 0..20 {
        let d = 4 + prng.below(8);
        let (h, w) = (2 + prng.below(12), 2 + prng.below(12));
        // half the instances gate with a pooled (coarser) uncertainty grid
        let (gh, gw) = if inst % 2 == 0 {
            (h, w)
        } else {
            (h.div_ceil(2), w.div_ceil(2))
        };
        let grid = GridSpec::new(gh, gw)?;
        let f = random(&mut prng, &[1, d, h, w], -3.0, 3.0);
        let x3 = random(&mut prng, &[1, grid.nodes(), d], -3.0, 3.0);
        let unc = UncertaintyMlp::init(&mut prng, d)?;
        let gated = uncertainty_gate(&f, &x3, &grid, &unc)?;
        for (&a, &b) in f.data().iter().zip(gated.data()) {
            checked += 1;
            if !(b.abs() >= a.abs() && b.abs() <= 2.0 * a.abs()) {
                violations += 1;
            }
        }
    }
    Ok(Check::new(
        violations == 0,
        format!("{checked} elements over 20 instances, {violations} outside [|F|, 2|F|]"),
    ))
}

fn conv1x1_oracle(x: &Tensor, p: &ConvParams) -> Result<Vec<f64>> {
    let [_, c, h, w] = x.nchw()?;
    let co = p.out_channels();
    let (wt, b) = (p.weight().data(), p.bias().data());
    let mut out = vec![0.0; h * w * co];
    // token-major [hw, co]
    for pix in 0..h * w {
        for o in 0..co {
            out[pix * co + o] = b[o] as f64
                + (0..c)
                    .map(|ci| wt[o * c + ci] as f64 * x.data()[ci * h * w + pix] as f64)
                    .sum::<f64>();
        }
    }
    Ok(out)
}

fn attention_stochasticity() -> Result<Check> {
    let mut prng = Prng::new(0x510e_527f);
    let mut row_err = 0f64;
    for _ in 0..20 {
        let (n, m, d) = (1 + prng.below(64), 1 + prng.below(64), 1 + prng.below(16));
        let q = random(&mut prng, &[1, n, d], -4.0, 4.0);
        let k = random(&mut prng, &[1, m, d], -4.0, 4.0);
        let s = attention_scores(&q, &k)?;
        for row in s.data().chunks_exact(m) {
            row_err = row_err.max((row.iter().map(|&v| v as f64).sum::<f64>() - 1.0).abs());
        }
    }

    let (n, d) = (4usize, 2usize);
    let mut naive_err = 0f64;
    for _ in 0..20 {
        // plain attention
        let q = random(&mut prng, &[1, n, d], -2.0, 2.0);
        let k = random(&mut prng, &[1, n, d], -2.0, 2.0);
        let v = random(&mut prng, &[1, n, d], -2.0, 2.0);
        let fast = attention(&q, &k, &v)?;
        let reference = oracle::attention(&to_f64(&q), &to_f64(&k), &to_f64(&v), n, n, d, d);
        naive_err = naive_err.max(max_diff(&reference, fast.data()));

        // modality self-attention on a 2x2 map
        let c = 3;
        let f = random(&mut prng, &[1, c, 2, 2], -1.0, 1.0);
        let proj = ConvParams::init(&mut prng, c, d, 1)?;
        let aw = AttentionWeights::init(&mut prng, d)?;
        let fast = flatten_nodes(&encode_modality(&f, &proj, &aw)?)?;
        let x = conv1x1_oracle(&f, &proj)?;
        let [wq, wk, wv] = [&aw.wq, &aw.wk, &aw.wv].map(to_f64);
        let reference = oracle::attention(
            &oracle::matmul(&x, &wq, n, d, d),
            &oracle::matmul(&x, &wk, n, d, d),
            &oracle::matmul(&x, &wv, n, d, d),
            n,
            n,
            d,
            d,
        );
        naive_err = naive_err.max(max_diff(&reference, fast.data()));

        // cross-attention from a 2x2 anchor onto a same-size far map
        let fp = random(&mut prng, &[1, d, 2, 2], -1.0, 1.0);
        let far = random(&mut prng, &[1, c, 2, 2], -1.0, 1.0);
        let ca = CrossAttentionFusion::init(&mut prng, c, d)?;
        let xq = to_f64(&flatten_nodes(&fp)?);
        let tokens = conv1x1_oracle(&far, &ca.proj)?;
        let [wq, wk, wv, wo] = [&ca.attn.wq, &ca.attn.wk, &ca.attn.wv, &ca.out].map(to_f64);
        let attended = oracle::attention(
            &oracle::matmul(&xq, &wq, n, d, d),
            &oracle::matmul(&tokens, &wk, n, d, d),
            &oracle::matmul(&tokens, &wv, n, d, d),
            n,
            n,
            d,
            d,
        );
        let mixed = oracle::matmul(&attended, &wo, n, d, d);
        let reference: Vec<f64> = xq.iter().zip(&mixed).map(|(a, b)| a + b).collect();
        for out in [
            cross_attention_fuse(&fp, &far, &ca)?,
            cross_attention_fuse_direct(&fp, &far, &ca)?,
        ] {
            naive_err = naive_err.max(max_diff(&reference, flatten_nodes(&out)?.data()));
        }
    }

    // coarse-key factorization against explicit upsampling
    let mut interp_err = 0f64;
    for _ in 0..5 {
        let d = 1 + prng.below(8);
        let (sh, sw) = (1 + prng.below(6), 1 + prng.below(6));
        let (dh, dw) = (sh * (1 + prng.below(3)), sw * (1 + prng.below(3)));
        let q = random(&mut prng, &[1, dh * dw, d], -2.0, 2.0);
        let kc = random(&mut prng, &[1, sh * sw, d], -2.0, 2.0);
        let vc = random(&mut prng, &[1, sh * sw, d], -2.0, 2.0);
        let plan = ResizePlan::new(sh, sw, dh, dw)?;
        let up = |t: &Tensor| -> Vec<f64> {
            let mut out = vec![0.0; dh * dw * d];
            for j in 0..dh * dw {
                for (src, wt) in plan.taps(j / dw, j % dw) {
                    for c in 0..d {
                        out[j * d + c] += wt * t.data()[src * d + c] as f64;
                    }
                }
            }
            out
        };
        let reference = oracle::attention(&to_f64(&q), &up(&kc), &up(&vc), dh * dw, dh * dw, d, d);
        let fast = attention_interpolated(&q, &kc, &vc, &plan)?;
        interp_err = interp_err.max(max_diff(&reference, fast.data()));
    }

    Ok(Check::new(
        row_err <= 1e-5 && naive_err <= 1e-5 && interp_err <= 1e-5,
        format!("row sums within {row_err:.1e}; N=4,d=2 vs naive {naive_err:.1e}; interpolated keys {interp_err:.1e}"),
    ))
}

fn modality_gating() -> Result<Check> {
    let uniform = modality_weights(&[0.0; MODALITIES])?;
    let uniform_err = uniform.iter().map(|w| (w - 1.0 / 3.0).abs()).fold(0.0, f64::max);

    let mut prng = Prng::new(0x9b05_688c);
    let mut shift_err = 0f64;
    let mut violations = 0usize;
    for _ in 0..20 {
        let theta = [0; MODALITIES].map(|_| prng.uniform(-5.0, 5.0) as f32);
        let c = prng.uniform(-10.0, 10.0) as f32;
        let a = modality_weights(&theta)?;
        let b = modality_weights(&theta.map(|t| t + c))?;
        shift_err = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(shift_err, f64::max);

        let dims = [1, 1 + prng.below(4), 1 + prng.below(8), 1 + prng.below(8)];
        let enc: Vec<Tensor> = (0..MODALITIES).map(|_| random(&mut prng, &dims, -3.0, 3.0)).collect();
        let fused = fuse(&enc, &a)?;
        for (i, &v) in fused.data().iter().enumerate() {
            let vals = enc.iter().map(|t| t.data()[i]);
            let lo = vals.clone().fold(f32::INFINITY, f32::min);
            let hi = vals.fold(f32::NEG_INFINITY, f32::max);
            violations += !(lo <= v && v <= hi) as usize;
        }
    }
    Ok(Check::new(
        uniform_err <= 1e-7 && shift_err <= 1e-7 && violations == 0,
        format!("theta=0 off by {uniform_err:.1e}; shift {shift_err:.1e}; {violations} convexity violations"),
    ))
}

fn loss_values() -> Result<Check> {
    let mut prng = Prng::new(0x1f83_d9ab);
    let s = Tensor::full(&[1, 1, 8, 8], 0.5);
    let y = Tensor::from_fn(&[1, 1, 8, 8], |_| (prng.next_f64() < 0.5) as u8 as f32);
    let bce_err = (bce_loss(&s, &y)?.value - std::f64::consts::LN_2).abs();

    // I = 2, D = 2 + 4 - 2 = 4
    let s = Tensor::new(&[1, 1, 2, 2], vec![1.0, 1.0, 0.0, 0.0])?;
    let y = Tensor::full(&[1, 1, 2, 2], 1.0);
    let iou_err = (iou_loss(&s, &y)?.value - 0.5).abs();

    let mut exact = true;
    for _ in 0..5 {
        let mut map = |side: usize| random(&mut prng, &[1, 1, side, side], 0.01, 0.99);
        let so = SaliencyOutputs {
            s16: map(2),
            s8: map(4),
            s4: map(8),
        };
        let mo = MaskOutputs {
            m4: map(8),
            m2: map(16),
            m1: map(32),
        };
        let y = Tensor::from_fn(&[1, 1, 32, 32], |_| (prng.next_f64() < 0.4) as u8 as f32);
        for detach in [Detach::Finer, Detach::Coarser] {
            let l = total_loss(&so, &mo, &y, prng.uniform(0.0, 2.0), detach)?;
            let resum = l.terms.iter().fold(0f64, |acc, t| acc + (t.bce + t.iou));
            exact &= l.total == l.sal + l.consistency && l.sal == resum;
        }
    }
    Ok(Check::new(
        bce_err <= 1e-6 && iou_err <= 1e-6 && exact,
        format!("|BCE(0.5) - ln 2| = {bce_err:.1e}; |IoU - 0.5| = {iou_err:.1e}; total decomposition exact: {exact}"),
    ))
}

fn gradient_checks(opts: Options) -> Result<Check> {
    let mut prng = Prng::new(0x5be0_cd19);
    let mut worst = [0f64; 2];
    let mut passed = [0usize; 2];
    for _ in 0..20 {
        let s = random(&mut prng, &[1, 1, 8, 8], 0.05, 0.95);
        let y = Tensor::from_fn(&[1, 1, 8, 8], |_| (prng.next_f64() < 0.5) as u8 as f32);
        for (slot, loss) in [CheckedLoss::Bce, CheckedLoss::Iou].into_iter().enumerate() {
            let report = if opts.inject_gradient_bug {
                let value = |x: &Tensor| -> Result<f64> {
                    Ok(match loss {
                        CheckedLoss::Bce => bce_loss(x, &y)?.value,
                        _ => iou_loss(x, &y)?.value,
                    })
                };
                let grad = match loss {
                    CheckedLoss::Bce => bce_loss(&s, &y)?.grad,
                    _ => iou_loss(&s, &y)?.grad,
                };
                check_gradient(value, &grad.scale(1.01), &s, 1e-3, 1e-3)?
            } else {
                finite_diff_check(loss, &s, &y, 1e-3, 1e-3)?
            };
            worst[slot] = worst[slot].max(report.max_rel_error);
            passed[slot] += report.pass as usize;
        }
    }

    let mut detached_zero = true;
    for _ in 0..10 {
        let coarse = random(&mut prng, &[1, 1, 4, 4], 0.0, 1.0);
        let fine = random(&mut prng, &[1, 1, 8, 8], 0.0, 1.0);
        let lambda = prng.uniform(0.1, 2.0);
        let a = consistency_pair(&coarse, &fine, lambda, Detach::Finer)?;
        let b = consistency_pair(&coarse, &fine, lambda, Detach::Coarser)?;
        detached_zero &= a.grad_fine.data().iter().all(|&v| v == 0.0) && b.grad_coarse.data().iter().all(|&v| v == 0.0);
        detached_zero &= a.grad_coarse.data().iter().any(|&v| v != 0.0);
    }
    Ok(Check::new(
        passed == [20, 20] && detached_zero,
        format!(
            "BCE {}/20 (max rel {:.1e}), IoU {}/20 (max rel {:.1e}); detached gradient zero: {detached_zero}",
            passed[0], worst[0], passed[1], worst[1]
        ),
    ))
}

fn quantized_fixture(prng: &mut Prng, h: usize, w: usize) -> (Tensor, Tensor) {
    let g = Tensor::from_fn(&[h, w], |_| (prng.next_f64() < 0.35) as u8 as f32);
    let p = Tensor::from_fn(&[h, w], |_| prng.below(256) as f32 / 255.0);
    (p, g)
}

fn metric_oracles() -> Result<Check> {
    let mut prng = Prng::new(0xcbbb_9d5d);
    let mut cases = vec![fixtures::fixture_a()];
    cases.extend((0..4).map(|_| quantized_fixture(&mut prng, 32, 32)));
    let mut counting = true;
    for (p, g) in &cases {
        counting &= mae(p, g)? == oracle::mae(p.data(), g.data());
        counting &= msiou(p, g, 0.5)? == oracle::iou(p.data(), g.data(), 0.5);
        let curve = pr_curve(p, g)?;
        let reference = oracle::pr_points(p.data(), g.data());
        counting &= reference
            .iter()
            .enumerate()
            .all(|(k, &(pr, rc))| curve.precision[k] == pr && curve.recall[k] == rc);
    }

    let (pa, ga) = fixtures::fixture_a();
    let (pb, gb) = fixtures::fixture_b();
    let inverted = ga.map(|v| 1.0 - v);
    let golden = [
        (s_measure(&pa, &ga, 0.5)?, fixtures::S_MEASURE_A),
        (s_measure(&ga, &ga, 0.5)?, fixtures::S_MEASURE_A_PERFECT),
        (s_measure(&pb, &gb, 0.5)?, fixtures::S_MEASURE_B),
        (weighted_f(&pa, &ga, 0.3)?, fixtures::WEIGHTED_F_A),
        (weighted_f(&inverted, &ga, 0.3)?, fixtures::WEIGHTED_F_A_INVERTED),
        (weighted_f(&pb, &gb, 0.3)?, fixtures::WEIGHTED_F_B),
    ];
    let golden_err = golden.iter().map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);

    let mut perfect = true;
    for (_, g) in &cases {
        perfect &= mae(g, g)? == 0.0 && msiou(g, g, 0.5)? == 1.0 && (weighted_f(g, g, 0.3)? - 1.0).abs() < 1e-9;
    }
    Ok(Check::new(
        counting && golden_err <= 1e-6 && perfect,
        format!("counting oracles exact: {counting}; goldens within {golden_err:.1e}; perfect prediction: {perfect}"),
    ))
}
