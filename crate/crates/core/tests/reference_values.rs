//! Worked values and brute-force comparisons, one module per component.

use sodkit_core::oracle;
use sodkit_core::tensor::{init_uniform, ConvParams, Prng};
use sodkit_core::Tensor;

fn rand(prng: &mut Prng, dims: &[usize], lo: f64, hi: f64) -> Tensor {
    Tensor::from_fn(dims, |_| prng.uniform(lo, hi) as f32)
}

fn binary(prng: &mut Prng, dims: &[usize], p: f64) -> Tensor {
    Tensor::from_fn(dims, |_| (prng.next_f64() < p) as u8 as f32)
}

fn max_diff(a: &[f64], b: &[f32]) -> f64 {
    a.iter().zip(b).map(|(x, &y)| (x - y as f64).abs()).fold(0.0, f64::max)
}

mod graph {
    use super::*;
    use sodkit_core::graph::{normalize, pairwise_distances, topk_adjacency, Adjacency, DistanceMatrix, GridSpec};

    #[test]
    fn distances_match_double_loop() {
        let mut prng = Prng::new(1);
        let grid = GridSpec::new(4, 4).unwrap();
        for alpha in [0.0, 0.3, 0.5, 1.0] {
            let f = rand(&mut prng, &[16, 5], -1.0, 1.0);
            let d = pairwise_distances(&f, &grid, alpha).unwrap();
            let reference = oracle::pairwise_distances(f.data(), 5, &grid, alpha);
            assert!(max_diff(&reference, d.values().data()) < 1e-6);
            assert!((0..16).all(|i| d.get(i, i) == 0.0));
        }
    }

    #[test]
    fn topk_matches_full_sort_over_100_seeds() {
        for seed in 0..100 {
            let mut prng = Prng::new(seed);
            let n = 64;
            // coarse quantization on odd seeds to force ties
            let levels = if seed % 2 == 1 { 8.0 } else { 1e6 };
            let d = Tensor::from_fn(&[n, n], |_| (prng.next_f64() * levels).floor() as f32);
            let k = 1 + prng.below(n - 1);
            let fast = topk_adjacency(&DistanceMatrix::from_values(d.clone()).unwrap(), k).unwrap();
            let reference = oracle::topk_full_sort(d.data(), n, k);
            for i in 0..n {
                assert_eq!(fast.row(i), &reference[i * n..(i + 1) * n], "seed {seed} row {i}");
            }
        }
    }

    #[test]
    fn operator_matches_dense_formula() {
        let mut prng = Prng::new(2);
        for _ in 0..10 {
            let n = 16;
            let bits: Vec<bool> = (0..n * n).map(|i| i / n != i % n && prng.next_f64() < 0.4).collect();
            let g = normalize(&Adjacency::from_dense(n, bits.clone()).unwrap(), false);
            assert!(max_diff(&oracle::normalize_dense(&bits, n), g.operator().data()) < 1e-6);
        }
    }
}

mod dugc {
    use super::*;
    use sodkit_core::attention::AttentionWeights;
    use sodkit_core::dugc::*;
    use sodkit_core::graph::{build_graph, GridSpec};

    #[test]
    fn propagation_matches_dense_reimplementation() {
        let mut prng = Prng::new(3);
        for _ in 0..5 {
            let (n, d) = (36, 6);
            let x = rand(&mut prng, &[1, n, d], -1.0, 1.0);
            let grid = GridSpec::new(6, 6).unwrap();
            let g = build_graph(&x.clone().reshape(&[n, d]).unwrap(), &grid, 0.5, 5, false).unwrap();
            let ws: Vec<Tensor> = (0..3).map(|_| init_uniform(&mut prng, &[d, d], d).unwrap()).collect();
            let out = propagate_uncertainty(&x, std::slice::from_ref(&g), &ws).unwrap();
            let op: Vec<f64> = g.operator().data().iter().map(|&v| v as f64).collect();
            let raw: Vec<Vec<f32>> = ws.iter().map(|w| w.data().to_vec()).collect();
            assert!(max_diff(&oracle::propagate_dense(x.data(), n, d, &op, &raw), out.data()) < 1e-5);
        }
    }

    #[test]
    fn channel_attention_never_amplifies() {
        let mut prng = Prng::new(4);
        let f = rand(&mut prng, &[2, 8, 5, 5], -3.0, 3.0);
        let se = ChannelAttention::init(&mut prng, 8).unwrap();
        let out = channel_attention(&f, &se).unwrap();
        assert!(out.data().iter().zip(f.data()).all(|(o, x)| o.abs() <= x.abs()));
        let zero = channel_attention(&Tensor::zeros(&[1, 8, 3, 3]), &se).unwrap();
        assert!(zero.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn gate_of_zero_features_is_zero() {
        let mut prng = Prng::new(5);
        let grid = GridSpec::new(3, 3).unwrap();
        let x3 = rand(&mut prng, &[1, 9, 8], -1.0, 1.0);
        let unc = UncertaintyMlp::init(&mut prng, 8).unwrap();
        let out = uncertainty_gate(&Tensor::zeros(&[1, 8, 6, 6]), &x3, &grid, &unc).unwrap();
        assert!(out.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn zero_kernels_leave_the_bias_map() {
        let mut prng = Prng::new(6);
        let (d, c) = (4, 6);
        let bias = rand(&mut prng, &[d], -1.0, 1.0);
        let p = AdjacentFusion {
            proj: ConvParams::init(&mut prng, c, d, 1).unwrap(),
            conv1: ConvParams::init(&mut prng, 2 * d, d, 3).unwrap(),
            conv2: ConvParams::new(Tensor::zeros(&[d, d, 3, 3]), bias.clone()).unwrap(),
        };
        let out = fuse_adjacent(
            &rand(&mut prng, &[1, d, 8, 8], -1.0, 1.0),
            &rand(&mut prng, &[1, c, 2, 2], -1.0, 1.0),
            &p,
        )
        .unwrap();
        assert_eq!(out.dims(), [1, d, 8, 8]);
        for ch in 0..d {
            assert!(out.plane(0, ch).iter().all(|&v| v == bias.data()[ch]));
        }
    }

    #[test]
    fn zero_values_pass_the_anchor_through() {
        let mut prng = Prng::new(7);
        let d = 4;
        let mut p = CrossAttentionFusion::init(&mut prng, 6, d).unwrap();
        p.attn = AttentionWeights {
            wv: Tensor::zeros(&[d, d]),
            ..p.attn
        };
        let fp = rand(&mut prng, &[1, d, 8, 8], -1.0, 1.0);
        let far = rand(&mut prng, &[1, 6, 1, 1], -1.0, 1.0);
        assert_eq!(cross_attention_fuse(&fp, &far, &p).unwrap(), fp);
    }

    fn levels_at(prng: &mut Prng, side: usize, channels: [usize; 4]) -> LevelFeatures {
        let v = (0..4)
            .map(|l| rand(prng, &[1, channels[l], side >> l, side >> l], 0.0, 1.0))
            .collect();
        LevelFeatures::new(v).unwrap()
    }

    #[test]
    fn default_shapes_are_preserved() {
        let channels = [16, 32, 64, 128];
        let mut prng = Prng::new(8);
        let levels = levels_at(&mut prng, 96, channels);
        let params = init_stack(&mut prng, &channels, 64).unwrap();
        let out = dugc_forward(&levels, &params, &GraphSettings::default()).unwrap();
        for (a, b) in out.features.as_slice().iter().zip(levels.as_slice()) {
            assert_eq!(a.dims(), b.dims());
            assert!(a.all_finite());
        }
    }

    #[test]
    fn zero_parameters_give_finite_bias_maps_deterministically() {
        let channels = [4, 6, 8, 10];
        let mut prng = Prng::new(9);
        let levels = levels_at(&mut prng, 16, channels);
        let zero = dugc_forward(&levels, &zero_stack(&channels, 8).unwrap(), &GraphSettings::default()).unwrap();
        assert!(zero
            .features
            .as_slice()
            .iter()
            .all(|t| t.data().iter().all(|&v| v == 0.0)));

        let params = init_stack(&mut Prng::new(10), &channels, 8).unwrap();
        let again = init_stack(&mut Prng::new(10), &channels, 8).unwrap();
        assert_eq!(params, again);
        let a = dugc_forward(&levels, &params, &GraphSettings::default()).unwrap();
        let b = dugc_forward(&levels, &again, &GraphSettings::default()).unwrap();
        assert_eq!(a.features, b.features);
    }
}

mod model {
    use super::*;
    use sodkit_core::model::{backbone_forward, BackboneParams, ModelConfig};

    #[test]
    fn backbone_levels_for_384_input() {
        let cfg = ModelConfig::default();
        let p = BackboneParams::init(&mut Prng::new(0), &cfg.backbone_channels).unwrap();
        let x = rand(&mut Prng::new(1), &[1, 3, 384, 384], 0.0, 1.0);
        let levels = backbone_forward(&x, &p).unwrap();
        let sides: Vec<_> = levels
            .as_slice()
            .iter()
            .map(|t| (t.dims()[1], t.dims()[2], t.dims()[3]))
            .collect();
        assert_eq!(sides, [(16, 96, 96), (32, 48, 48), (64, 24, 24), (128, 12, 12)]);
    }
}

mod losses {
    use super::*;
    use sodkit_core::losses::{saliency_loss, total_loss};
    use sodkit_core::model::{Detach, MaskOutputs, SaliencyOutputs};

    fn bce(s: &[f32], y: &[f32]) -> f64 {
        let n = s.len() as f64;
        -s.iter()
            .zip(y)
            .map(|(&p, &t)| {
                let p = (p as f64).clamp(1e-7, 1.0 - 1e-7);
                t as f64 * p.ln() + (1.0 - t as f64) * (1.0 - p).ln()
            })
            .sum::<f64>()
            / n
    }

    fn iou(s: &[f32], y: &[f32]) -> f64 {
        let i: f64 = s.iter().zip(y).map(|(&a, &b)| a as f64 * b as f64).sum();
        let d: f64 = s
            .iter()
            .zip(y)
            .map(|(&a, &b)| a as f64 + b as f64 - a as f64 * b as f64)
            .sum();
        if d == 0.0 {
            0.0
        } else {
            1.0 - i / d
        }
    }

    fn block_mean(y: &Tensor, side: usize) -> Vec<f32> {
        let full = y.dims()[3];
        let f = full / side;
        (0..side * side)
            .map(|o| {
                let (r, c) = (o / side, o % side);
                let mut s = 0f64;
                for i in 0..f {
                    for j in 0..f {
                        s += y.data()[(r * f + i) * full + c * f + j] as f64;
                    }
                }
                (s / (f * f) as f64) as f32
            })
            .collect()
    }

    // half-pixel bilinear upsample, integer factor, edge-clamped
    fn upsample(x: &[f32], side: usize, out: usize) -> Vec<f64> {
        let scale = side as f64 / out as f64;
        let at = |r: i64, c: i64| {
            let cl = |v: i64| v.clamp(0, side as i64 - 1) as usize;
            x[cl(r) * side + cl(c)] as f64
        };
        let mut v = Vec::with_capacity(out * out);
        for i in 0..out {
            for j in 0..out {
                let sy = ((i as f64 + 0.5) * scale - 0.5).max(0.0);
                let sx = ((j as f64 + 0.5) * scale - 0.5).max(0.0);
                let (y0, x0) = (sy.floor() as i64, sx.floor() as i64);
                let (fy, fx) = (sy - y0 as f64, sx - x0 as f64);
                v.push(
                    (1.0 - fy) * ((1.0 - fx) * at(y0, x0) + fx * at(y0, x0 + 1))
                        + fy * ((1.0 - fx) * at(y0 + 1, x0) + fx * at(y0 + 1, x0 + 1)),
                );
            }
        }
        v
    }

    fn pyramid(prng: &mut Prng) -> (SaliencyOutputs, MaskOutputs, Tensor) {
        let mut map = |side| rand(prng, &[1, 1, side, side], 0.02, 0.98);
        let s = SaliencyOutputs {
            s16: map(2),
            s8: map(4),
            s4: map(8),
        };
        let m = MaskOutputs {
            m4: map(8),
            m2: map(16),
            m1: map(32),
        };
        (s, m, binary(prng, &[1, 1, 32, 32], 0.4))
    }

    #[test]
    fn saliency_term_matches_direct_summation() {
        let (s, m, y) = pyramid(&mut Prng::new(11));
        let got = saliency_loss(&s, &m, &y).unwrap();
        let maps = [&s.s16, &s.s8, &s.s4, &m.m4, &m.m2, &m.m1];
        let mut direct = 0.0;
        for (t, term) in maps.iter().zip(&got.terms) {
            let target = block_mean(&y, t.dims()[3]);
            let (b, i) = (bce(t.data(), &target), iou(t.data(), &target));
            assert!((term.bce - b).abs() < 1e-9 && (term.iou - i).abs() < 1e-9);
            assert!(term.bce >= 0.0 && term.iou >= 0.0);
            direct += b + i;
        }
        assert!((got.sal - direct).abs() < 1e-6);
    }

    #[test]
    fn total_matches_recomputation() {
        let (s, m, y) = pyramid(&mut Prng::new(12));
        let lambda = 0.1;
        let got = total_loss(&s, &m, &y, lambda, Detach::Finer).unwrap();
        let l1 = |c: &Tensor, f: &Tensor| {
            let up = upsample(c.data(), c.dims()[3], f.dims()[3]);
            up.iter().zip(f.data()).map(|(a, &b)| (a - b as f64).abs()).sum::<f64>() / f.len() as f64
        };
        let consistency = lambda * (l1(&s.s16, &s.s8) + l1(&s.s8, &s.s4));
        assert!((got.consistency - consistency).abs() < 1e-6);
        assert!((got.total - (got.sal + consistency)).abs() < 1e-6);
        assert!(got.total >= got.sal);
    }

    #[test]
    fn perfect_binary_pyramid_costs_nothing() {
        // foreground aligned to 16-pixel blocks pools to binary maps at every scale
        let y = Tensor::from_fn(&[1, 1, 32, 32], |i| ((i / 32) < 16 && (i % 32) >= 16) as u8 as f32);
        let exact = |side| Tensor::new(&[1, 1, side, side], block_mean(&y, side)).unwrap();
        let s = SaliencyOutputs {
            s16: exact(2),
            s8: exact(4),
            s4: exact(8),
        };
        let m = MaskOutputs {
            m4: exact(8),
            m2: exact(16),
            m1: exact(32),
        };
        assert!(saliency_loss(&s, &m, &y).unwrap().sal < 1e-5);
    }
}

mod metrics {
    use super::*;
    use sodkit_core::metrics::{aggregate, evaluate_image, mae, msiou, pr_curve, s_measure, weighted_f, MetricConfig};

    #[test]
    fn counting_oracles_on_random_maps() {
        let mut prng = Prng::new(13);
        for side in [4, 16] {
            for _ in 0..10 {
                let p = Tensor::from_fn(&[side, side], |_| prng.below(256) as f32 / 255.0);
                let g = binary(&mut prng, &[side, side], 0.4);
                assert_eq!(mae(&p, &g).unwrap(), oracle::mae(p.data(), g.data()));
                assert_eq!(msiou(&p, &g, 0.5).unwrap(), oracle::iou(p.data(), g.data(), 0.5));
                let c = pr_curve(&p, &g).unwrap();
                for (k, (pr, rc)) in oracle::pr_points(p.data(), g.data()).into_iter().enumerate() {
                    assert_eq!((c.precision[k], c.recall[k]), (pr, rc));
                }
            }
        }
    }

    #[test]
    fn complement_and_degenerate_values() {
        let mut prng = Prng::new(14);
        let g = binary(&mut prng, &[12, 12], 0.5);
        let inv = g.map(|v| 1.0 - v);
        assert_eq!(mae(&inv, &g).unwrap(), 1.0);
        let zeros = Tensor::zeros(&[6, 6]);
        let ones = Tensor::full(&[6, 6], 1.0);
        assert_eq!(s_measure(&zeros, &zeros, 0.5).unwrap(), 1.0);
        assert_eq!(s_measure(&ones, &zeros, 0.5).unwrap(), 0.0);
        assert!((weighted_f(&g, &g, 0.3).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn aggregation_is_order_insensitive_up_to_rounding() {
        let mut prng = Prng::new(15);
        let cfg = MetricConfig::default();
        let images: Vec<_> = (0..7)
            .map(|_| {
                let p = rand(&mut prng, &[16, 16], 0.0, 1.0);
                let g = binary(&mut prng, &[16, 16], 0.3);
                evaluate_image(&p, &g, &cfg).unwrap()
            })
            .collect();
        let one = aggregate(&images[..1]).unwrap();
        assert_eq!((one.mae, one.s_measure), (images[0].mae, images[0].s_measure));
        let twice = aggregate(&[images[0].clone(), images[0].clone()]).unwrap();
        assert_eq!(twice.weighted_f, one.weighted_f);
        let forward = aggregate(&images).unwrap();
        let mut rev = images.clone();
        rev.reverse();
        let backward = aggregate(&rev).unwrap();
        for (a, b) in [
            (forward.mae, backward.mae),
            (forward.msiou, backward.msiou),
            (forward.s_measure, backward.s_measure),
            (forward.weighted_f, backward.weighted_f),
        ] {
            assert!((a - b).abs() < 1e-9);
        }
    }
}
