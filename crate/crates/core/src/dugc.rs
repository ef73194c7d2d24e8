//! Dynamic uncertainty graph convolution.
//!
//! Per pyramid level: squeeze-excitation, a 1x1 embedding, a top-K graph
//! rebuilt from the current features, three residual propagation steps, an
//! uncertainty gate, then fusion with the coarser levels (convolution for
//! the next two, cross-attention for the third) and a bottleneck back to
//! the level's channel count.
//!
//! The graph is built on an average-pooled copy of the embedded map so the
//! dense `N x N` distance matrix stays small at fine levels; the per-node
//! uncertainty is upsampled back to full resolution before gating.

use crate::attention::{attention, attention_interpolated, project, AttentionWeights};
use crate::error::{param_err, shape_err, Result};
use crate::graph::{normalize, Adjacency, GridSpec, NormalizedGraph};
use crate::tensor::{
    add, avg_pool, bilinear_resize, concat_channels, conv, flatten_nodes, init_uniform, sigmoid, unflatten_nodes,
    ConvParams, Linear, Prng, ResizePlan, Tensor,
};

pub const LEVELS: usize = 4;
pub const PROPAGATION_STEPS: usize = 3;
pub const SE_REDUCTION: usize = 4;

/// Squeeze-excitation weights: `C -> C/r -> C`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelAttention {
    pub squeeze: Linear,
    pub excite: Linear,
}

impl ChannelAttention {
    pub fn init(prng: &mut Prng, c: usize) -> Result<Self> {
        let mid = (c / SE_REDUCTION).max(1);
        Ok(Self {
            squeeze: Linear::init(prng, c, mid)?,
            excite: Linear::init(prng, mid, c)?,
        })
    }

    pub fn zeros(c: usize) -> Self {
        let mid = (c / SE_REDUCTION).max(1);
        Self {
            squeeze: Linear::zeros(c, mid),
            excite: Linear::zeros(mid, c),
        }
    }
}

/// Per-node uncertainty head `d -> d/4 -> 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct UncertaintyMlp {
    pub hidden: Linear,
    pub out: Linear,
}

impl UncertaintyMlp {
    pub fn init(prng: &mut Prng, d: usize) -> Result<Self> {
        let mid = (d / 4).max(1);
        Ok(Self {
            hidden: Linear::init(prng, d, mid)?,
            out: Linear::init(prng, mid, 1)?,
        })
    }

    pub fn zeros(d: usize) -> Self {
        let mid = (d / 4).max(1);
        Self {
            hidden: Linear::zeros(d, mid),
            out: Linear::zeros(mid, 1),
        }
    }

    fn logit(&self, node: &[f32]) -> f32 {
        let h: Vec<f32> = self.hidden.apply(node).into_iter().map(|v| v.max(0.0)).collect();
        self.out.apply(&h)[0]
    }
}

/// Convolutional fusion with a nearby coarser level.
#[derive(Clone, Debug, PartialEq)]
pub struct AdjacentFusion {
    pub proj: ConvParams,
    pub conv1: ConvParams,
    pub conv2: ConvParams,
}

impl AdjacentFusion {
    pub fn init(prng: &mut Prng, c_hi: usize, d: usize) -> Result<Self> {
        Ok(Self {
            proj: ConvParams::init(prng, c_hi, d, 1)?,
            conv1: ConvParams::init(prng, 2 * d, d, 3)?,
            conv2: ConvParams::init(prng, d, d, 3)?,
        })
    }

    pub fn zeros(c_hi: usize, d: usize) -> Result<Self> {
        Ok(Self {
            proj: ConvParams::zeros(c_hi, d, 1)?,
            conv1: ConvParams::zeros(2 * d, d, 3)?,
            conv2: ConvParams::zeros(d, d, 3)?,
        })
    }
}

/// Cross-attention fusion with the far level. `out` is `[d, d]`, applied
/// as `x out` with no bias.
#[derive(Clone, Debug, PartialEq)]
pub struct CrossAttentionFusion {
    pub proj: ConvParams,
    pub attn: AttentionWeights,
    pub out: Tensor,
}

impl CrossAttentionFusion {
    pub fn init(prng: &mut Prng, c_far: usize, d: usize) -> Result<Self> {
        Ok(Self {
            proj: ConvParams::init(prng, c_far, d, 1)?,
            attn: AttentionWeights::init(prng, d)?,
            out: init_uniform(prng, &[d, d], d)?,
        })
    }

    pub fn zeros(c_far: usize, d: usize) -> Result<Self> {
        Ok(Self {
            proj: ConvParams::zeros(c_far, d, 1)?,
            attn: AttentionWeights::zeros(d),
            out: Tensor::zeros(&[d, d]),
        })
    }
}

/// Weights for one anchor level.
#[derive(Clone, Debug, PartialEq)]
pub struct DugcParams {
    pub se: ChannelAttention,
    pub proj: ConvParams,
    /// `W_g` for each propagation step, `[d, d]`.
    pub gcn: Vec<Tensor>,
    pub unc: UncertaintyMlp,
    /// One entry per available coarser level at distance 1 and 2.
    pub adjacent: Vec<AdjacentFusion>,
    /// Present only when a level three steps coarser exists.
    pub far: Option<CrossAttentionFusion>,
    pub bottleneck_mid: ConvParams,
    pub bottleneck_out: ConvParams,
}

fn path_layout(channels: &[usize; LEVELS], anchor: usize) -> (Vec<usize>, Option<usize>) {
    let adjacent = (1..=2)
        .filter(|k| anchor + k < LEVELS)
        .map(|k| channels[anchor + k])
        .collect();
    let far = (anchor + 3 < LEVELS).then(|| channels[anchor + 3]);
    (adjacent, far)
}

impl DugcParams {
    /// Draws weights for the level at zero-based `anchor`, in field order.
    pub fn init(prng: &mut Prng, channels: &[usize; LEVELS], anchor: usize, d: usize) -> Result<Self> {
        if anchor >= LEVELS || d == 0 {
            return Err(param_err!("anchor {anchor} / embedding dim {d} out of range"));
        }
        let c = channels[anchor];
        let (adj_ch, far_ch) = path_layout(channels, anchor);
        let se = ChannelAttention::init(prng, c)?;
        let proj = ConvParams::init(prng, c, d, 1)?;
        let gcn = (0..PROPAGATION_STEPS)
            .map(|_| init_uniform(prng, &[d, d], d))
            .collect::<Result<_>>()?;
        let unc = UncertaintyMlp::init(prng, d)?;
        let adjacent = adj_ch
            .iter()
            .map(|&ch| AdjacentFusion::init(prng, ch, d))
            .collect::<Result<Vec<_>>>()?;
        let far = far_ch.map(|ch| CrossAttentionFusion::init(prng, ch, d)).transpose()?;
        let paths = (adjacent.len() + far.is_some() as usize).max(1);
        Ok(Self {
            se,
            proj,
            gcn,
            unc,
            adjacent,
            far,
            bottleneck_mid: ConvParams::init(prng, paths * d, d, 3)?,
            bottleneck_out: ConvParams::init(prng, d, c, 1)?,
        })
    }

    pub fn zeros(channels: &[usize; LEVELS], anchor: usize, d: usize) -> Result<Self> {
        if anchor >= LEVELS || d == 0 {
            return Err(param_err!("anchor {anchor} / embedding dim {d} out of range"));
        }
        let c = channels[anchor];
        let (adj_ch, far_ch) = path_layout(channels, anchor);
        let adjacent = adj_ch
            .iter()
            .map(|&ch| AdjacentFusion::zeros(ch, d))
            .collect::<Result<Vec<_>>>()?;
        let far = far_ch.map(|ch| CrossAttentionFusion::zeros(ch, d)).transpose()?;
        let paths = (adjacent.len() + far.is_some() as usize).max(1);
        Ok(Self {
            se: ChannelAttention::zeros(c),
            proj: ConvParams::zeros(c, d, 1)?,
            gcn: vec![Tensor::zeros(&[d, d]); PROPAGATION_STEPS],
            unc: UncertaintyMlp::zeros(d),
            adjacent,
            far,
            bottleneck_mid: ConvParams::zeros(paths * d, d, 3)?,
            bottleneck_out: ConvParams::zeros(d, c, 1)?,
        })
    }

    pub fn embed_dim(&self) -> usize {
        self.proj.out_channels()
    }
}

/// One [`DugcParams`] per level, anchor 0 first.
pub fn init_stack(prng: &mut Prng, channels: &[usize; LEVELS], d: usize) -> Result<Vec<DugcParams>> {
    (0..LEVELS).map(|l| DugcParams::init(prng, channels, l, d)).collect()
}

pub fn zero_stack(channels: &[usize; LEVELS], d: usize) -> Result<Vec<DugcParams>> {
    (0..LEVELS).map(|l| DugcParams::zeros(channels, l, d)).collect()
}

/// How the per-level graph is built.
#[derive(Clone, Debug, PartialEq)]
pub struct GraphSettings {
    pub alpha: f64,
    /// Requested neighbors; clamped to `N - 1` on small grids.
    pub k: usize,
    /// Average-pooling factor applied before graph construction, per level.
    pub pool: [usize; LEVELS],
    pub symmetrize: bool,
}

impl Default for GraphSettings {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            k: 8,
            pool: [4, 2, 1, 1],
            symmetrize: false,
        }
    }
}

/// The four backbone levels, finest first.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelFeatures {
    levels: Vec<Tensor>,
}

impl LevelFeatures {
    pub fn new(levels: Vec<Tensor>) -> Result<Self> {
        if levels.len() != LEVELS {
            return Err(param_err!("expected {LEVELS} levels, got {}", levels.len()));
        }
        let [b, _, mut h, mut w] = levels[0].nchw()?;
        for (i, l) in levels.iter().enumerate().skip(1) {
            let [lb, _, lh, lw] = l.nchw()?;
            (h, w) = (h.div_ceil(2), w.div_ceil(2));
            if (lb, lh, lw) != (b, h, w) {
                return Err(shape_err!(
                    "level {} is {:?}; expected batch {b} at {h}x{w}",
                    i + 1,
                    l.dims()
                ));
            }
        }
        Ok(Self { levels })
    }

    pub fn get(&self, level: usize) -> &Tensor {
        &self.levels[level]
    }

    pub fn as_slice(&self) -> &[Tensor] {
        &self.levels
    }

    pub fn channels(&self) -> [usize; LEVELS] {
        std::array::from_fn(|i| self.levels[i].dims()[1])
    }

    pub fn into_vec(self) -> Vec<Tensor> {
        self.levels
    }
}

pub fn channel_attention(f: &Tensor, se: &ChannelAttention) -> Result<Tensor> {
    let [b, c, h, w] = f.nchw()?;
    if se.squeeze.in_features() != c {
        return Err(shape_err!(
            "channel attention for {} channels applied to {c}",
            se.squeeze.in_features()
        ));
    }
    let hw = (h * w) as f64;
    let mut out = Vec::with_capacity(f.len());
    for bi in 0..b {
        let pooled: Vec<f32> = (0..c)
            .map(|ci| (f.plane(bi, ci).iter().map(|&v| v as f64).sum::<f64>() / hw) as f32)
            .collect();
        let mid: Vec<f32> = se.squeeze.apply(&pooled).into_iter().map(|v| v.max(0.0)).collect();
        for (ci, g) in se.excite.apply(&mid).into_iter().enumerate() {
            let gate = sigmoid(g as f64) as f32;
            out.extend(f.plane(bi, ci).iter().map(|&v| v * gate));
        }
    }
    Tensor::new(f.dims(), out)
}

/// Returns the node sequence `X [B, N, d]` and the embedded map `F~ [B, d, H, W]`.
pub fn embed_and_flatten(f: &Tensor, proj: &ConvParams) -> Result<(Tensor, Tensor)> {
    let embedded = conv(f, proj)?;
    Ok((flatten_nodes(&embedded)?, embedded))
}

/// Graph over a `[N, d]` node set, with `K` clamped to `N - 1`. A single
/// node gets the identity operator.
pub fn level_graph(nodes: &Tensor, grid: &GridSpec, settings: &GraphSettings) -> Result<(NormalizedGraph, usize)> {
    let n = grid.nodes();
    if n == 1 {
        return Ok((normalize(&Adjacency::empty(1), settings.symmetrize), 0));
    }
    let d = crate::graph::pairwise_distances(nodes, grid, settings.alpha)?;
    let warnings = d.zero_norm_nodes();
    let adj = crate::graph::topk_adjacency(&d, settings.k.min(n - 1))?;
    Ok((normalize(&adj, settings.symmetrize), warnings))
}

/// Three residual steps `X <- X + ReLU(op X W_g)`, one graph per batch item.
pub fn propagate_uncertainty(x: &Tensor, graphs: &[NormalizedGraph], gcn: &[Tensor]) -> Result<Tensor> {
    let [b, n, d] = x.bnk()?;
    if graphs.len() != b {
        return Err(shape_err!("{} graphs for batch {b}", graphs.len()));
    }
    for w in gcn {
        if w.dims() != [d, d] {
            return Err(shape_err!("propagation weight {:?} for {d}-dim nodes", w.dims()));
        }
    }
    let mut out = x.data().to_vec();
    let mut agg = vec![0f32; n * d];
    let mut acc = vec![0f64; d];
    let mut mixed = vec![0f64; n * d];
    for (bi, g) in graphs.iter().enumerate() {
        if g.nodes() != n {
            return Err(shape_err!("graph over {} nodes for {n} features", g.nodes()));
        }
        let cur = &mut out[bi * n * d..(bi + 1) * n * d];
        for w in gcn {
            for (i, row) in g.sparse_rows().iter().enumerate() {
                acc.fill(0.0);
                for &(j, wt) in row {
                    let wt = wt as f64;
                    for (a, &v) in acc.iter_mut().zip(&cur[j * d..(j + 1) * d]) {
                        *a += wt * v as f64;
                    }
                }
                for (o, &a) in agg[i * d..(i + 1) * d].iter_mut().zip(&acc) {
                    *o = a as f32;
                }
            }
            crate::tensor::gemm_f64acc(&agg, w.data(), n, d, d, &mut mixed);
            for (c, &m) in cur.iter_mut().zip(&mixed) {
                let m = m as f32;
                if m > 0.0 {
                    *c += m;
                }
            }
        }
    }
    Tensor::new(&[b, n, d], out)
}

/// Per-node `sigmoid(MLP(x))` laid out as `[B, 1, h, w]`.
pub fn uncertainty_map(x3: &Tensor, grid: &GridSpec, unc: &UncertaintyMlp) -> Result<Tensor> {
    let [b, n, d] = x3.bnk()?;
    if n != grid.nodes() || unc.hidden.in_features() != d {
        return Err(shape_err!(
            "uncertainty head on {:?} for grid of {} nodes",
            x3.dims(),
            grid.nodes()
        ));
    }
    let u = x3
        .data()
        .chunks_exact(d)
        .map(|node| sigmoid(unc.logit(node) as f64) as f32)
        .collect();
    Tensor::new(&[b, 1, grid.height, grid.width], u)
}

/// `F' = F~ (1 + u)`. When `grid` is coarser than `F~`, `u` is bilinearly
/// upsampled first.
pub fn uncertainty_gate(f_tilde: &Tensor, x3: &Tensor, grid: &GridSpec, unc: &UncertaintyMlp) -> Result<Tensor> {
    let [b, d, h, w] = f_tilde.nchw()?;
    let u = bilinear_resize(&uncertainty_map(x3, grid, unc)?, h, w)?;
    if u.dims()[0] != b {
        return Err(shape_err!(
            "uncertainty batch {} for features {:?}",
            u.dims()[0],
            f_tilde.dims()
        ));
    }
    let mut out = Vec::with_capacity(f_tilde.len());
    for bi in 0..b {
        let ub = u.plane(bi, 0);
        for ci in 0..d {
            out.extend(f_tilde.plane(bi, ci).iter().zip(ub).map(|(&f, &u)| f * (1.0 + u)));
        }
    }
    Tensor::new(f_tilde.dims(), out)
}

pub fn fuse_adjacent(f_prime: &Tensor, f_hi: &Tensor, p: &AdjacentFusion) -> Result<Tensor> {
    let [_, _, h, w] = f_prime.nchw()?;
    let hi = bilinear_resize(&conv(f_hi, &p.proj)?, h, w)?;
    let mid = conv(&concat_channels(&[f_prime, &hi])?, &p.conv1)?.map(|v| v.max(0.0));
    conv(&mid, &p.conv2)
}

fn attention_inputs(f_prime: &Tensor, f_far: &Tensor, p: &CrossAttentionFusion) -> Result<(Tensor, Tensor)> {
    let q = project(&flatten_nodes(f_prime)?, &p.attn.wq)?;
    Ok((q, conv(f_far, &p.proj)?))
}

fn attention_residual(f_prime: &Tensor, attended: &Tensor, p: &CrossAttentionFusion) -> Result<Tensor> {
    let [_, _, h, w] = f_prime.nchw()?;
    add(f_prime, &unflatten_nodes(&project(attended, &p.out)?, h, w)?)
}

/// `F' + Attn(F' Wq, up(F_far) Wk, up(F_far) Wv) Wo`.
///
/// Keys and values are formed on the far level's own grid and the
/// upsampling is folded into the attention (see
/// [`attention_interpolated`]); [`cross_attention_fuse_direct`] materializes
/// the upsampled sequence instead.
pub fn cross_attention_fuse(f_prime: &Tensor, f_far: &Tensor, p: &CrossAttentionFusion) -> Result<Tensor> {
    let [_, _, h, w] = f_prime.nchw()?;
    let (q, far) = attention_inputs(f_prime, f_far, p)?;
    let [_, _, hf, wf] = far.nchw()?;
    let tokens = flatten_nodes(&far)?;
    let k = project(&tokens, &p.attn.wk)?;
    let v = project(&tokens, &p.attn.wv)?;
    let plan = ResizePlan::new(hf, wf, h, w)?;
    attention_residual(f_prime, &attention_interpolated(&q, &k, &v, &plan)?, p)
}

/// Same map as [`cross_attention_fuse`], computed over the explicitly
/// upsampled key/value sequence. `O(N^2 d)`.
pub fn cross_attention_fuse_direct(f_prime: &Tensor, f_far: &Tensor, p: &CrossAttentionFusion) -> Result<Tensor> {
    let [_, _, h, w] = f_prime.nchw()?;
    let (q, far) = attention_inputs(f_prime, f_far, p)?;
    let tokens = flatten_nodes(&bilinear_resize(&far, h, w)?)?;
    let k = project(&tokens, &p.attn.wk)?;
    let v = project(&tokens, &p.attn.wv)?;
    attention_residual(f_prime, &attention(&q, &k, &v)?, p)
}

/// Intermediate maps of one level, kept for inspection.
#[derive(Clone, Debug)]
pub struct LevelTrace {
    pub embedded: Tensor,
    pub gated: Tensor,
    pub uncertainty: Tensor,
    pub graphs: Vec<NormalizedGraph>,
    pub zero_norm_nodes: usize,
}

/// Full DUGC pass for zero-based level `anchor`; returns `F_out` with the
/// anchor's shape.
pub fn dugc_level(
    levels: &LevelFeatures,
    anchor: usize,
    p: &DugcParams,
    settings: &GraphSettings,
) -> Result<(Tensor, LevelTrace)> {
    if anchor >= LEVELS {
        return Err(param_err!("anchor level {anchor} out of range"));
    }
    let f = levels.get(anchor);
    let [b, _, h, w] = f.nchw()?;
    let (_, f_tilde) = embed_and_flatten(&channel_attention(f, &p.se)?, &p.proj)?;
    let d = f_tilde.dims()[1];

    let pooled = avg_pool(&f_tilde, settings.pool[anchor])?;
    let [_, _, gh, gw] = pooled.nchw()?;
    let grid = GridSpec::new(gh, gw)?;
    let x = flatten_nodes(&pooled)?;
    let n = grid.nodes();
    let mut graphs = Vec::with_capacity(b);
    let mut zero_norm_nodes = 0;
    for bi in 0..b {
        let nodes = Tensor::new(&[n, d], x.data()[bi * n * d..(bi + 1) * n * d].to_vec())?;
        let (g, warn) = level_graph(&nodes, &grid, settings)?;
        graphs.push(g);
        zero_norm_nodes += warn;
    }
    let x3 = propagate_uncertainty(&x, &graphs, &p.gcn)?;
    let uncertainty = bilinear_resize(&uncertainty_map(&x3, &grid, &p.unc)?, h, w)?;
    let gated = uncertainty_gate(&f_tilde, &x3, &grid, &p.unc)?;

    let mut paths = Vec::with_capacity(3);
    for (k, fusion) in p.adjacent.iter().enumerate() {
        paths.push(fuse_adjacent(&gated, levels.get(anchor + k + 1), fusion)?);
    }
    if let Some(far) = &p.far {
        paths.push(cross_attention_fuse(&gated, levels.get(anchor + 3), far)?);
    }
    let merged = if paths.is_empty() {
        gated.clone()
    } else {
        concat_channels(&paths.iter().collect::<Vec<_>>())?
    };
    let mid = conv(&merged, &p.bottleneck_mid)?.map(|v| v.max(0.0));
    let out = conv(&mid, &p.bottleneck_out)?;
    Ok((
        out,
        LevelTrace {
            embedded: f_tilde,
            gated,
            uncertainty,
            graphs,
            zero_norm_nodes,
        },
    ))
}

#[derive(Clone, Debug)]
pub struct DugcOutput {
    pub features: LevelFeatures,
    pub zero_norm_nodes: usize,
}

/// Runs [`dugc_level`] at every level.
pub fn dugc_forward(levels: &LevelFeatures, params: &[DugcParams], settings: &GraphSettings) -> Result<DugcOutput> {
    if params.len() != LEVELS {
        return Err(param_err!(
            "expected {LEVELS} level parameter sets, got {}",
            params.len()
        ));
    }
    let mut outs = Vec::with_capacity(LEVELS);
    let mut zero_norm_nodes = 0;
    for (anchor, p) in params.iter().enumerate() {
        let (o, trace) = dugc_level(levels, anchor, p, settings)?;
        zero_norm_nodes += trace.zero_norm_nodes;
        outs.push(o);
    }
    Ok(DugcOutput {
        features: LevelFeatures::new(outs)?,
        zero_norm_nodes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rand(prng: &mut Prng, dims: &[usize]) -> Tensor {
        init_uniform(prng, dims, 1).unwrap()
    }

    fn pyramid(prng: &mut Prng, b: usize, channels: [usize; 4], h: usize) -> LevelFeatures {
        let mut hs = h;
        let mut v = Vec::new();
        for c in channels {
            v.push(rand(prng, &[b, c, hs, hs]));
            hs = hs.div_ceil(2);
        }
        LevelFeatures::new(v).unwrap()
    }

    #[test]
    fn zero_excitation_halves_features() {
        let f = rand(&mut Prng::new(1), &[2, 8, 3, 3]);
        let out = channel_attention(&f, &ChannelAttention::zeros(8)).unwrap();
        assert_eq!(out, f.scale(0.5));
        let se = ChannelAttention::init(&mut Prng::new(2), 8).unwrap();
        let out = channel_attention(&f, &se).unwrap();
        assert!(out.data().iter().zip(f.data()).all(|(o, x)| o.abs() <= x.abs()));
    }

    #[test]
    fn embedding_shapes() {
        let f = rand(&mut Prng::new(3), &[2, 16, 4, 4]);
        let proj = ConvParams::zeros(16, 8, 1).unwrap();
        let (x, ft) = embed_and_flatten(&f, &proj).unwrap();
        assert_eq!(x.dims(), &[2, 16, 8]);
        assert_eq!(ft.dims(), &[2, 8, 4, 4]);
        let (x, _) = embed_and_flatten(&f, &ConvParams::identity(16)).unwrap();
        assert_eq!(x.data()[(16 + 5) * 16 + 3], f.plane(1, 3)[5]);
    }

    #[test]
    fn two_node_propagation_doubles_each_step() {
        let adj = Adjacency::from_dense(2, vec![false, true, true, false]).unwrap();
        let g = normalize(&adj, false);
        let x = Tensor::new(&[1, 2, 1], vec![1.0, 1.0]).unwrap();
        let eye = Tensor::new(&[1, 1], vec![1.0]).unwrap();
        let one = propagate_uncertainty(&x, std::slice::from_ref(&g), std::slice::from_ref(&eye)).unwrap();
        assert_eq!(one.data(), &[2.0, 2.0]);
        let three = propagate_uncertainty(&x, &[g], &[eye.clone(), eye.clone(), eye]).unwrap();
        assert_eq!(three.data(), &[8.0, 8.0]);
    }

    #[test]
    fn zero_mlp_gives_three_halves() {
        let ft = rand(&mut Prng::new(4), &[1, 4, 4, 4]);
        let grid = GridSpec::new(2, 2).unwrap();
        let x3 = rand(&mut Prng::new(5), &[1, 4, 4]);
        let out = uncertainty_gate(&ft, &x3, &grid, &UncertaintyMlp::zeros(4)).unwrap();
        assert_eq!(out, ft.scale(1.5));
    }

    #[test]
    fn adjacent_fusion_of_constants_is_constant_inside() {
        // Away from the zero-padded border both convs see constant windows,
        // so the output is the closed-form constant.
        let d = 2;
        let mut prng = Prng::new(6);
        let p = AdjacentFusion::init(&mut prng, 3, d).unwrap();
        let fp = Tensor::full(&[1, d, 9, 9], 0.3);
        let hi = Tensor::full(&[1, 3, 3, 3], -0.7);
        let out = fuse_adjacent(&fp, &hi, &p).unwrap();

        let lin = |w: &Tensor, b: &Tensor, x: &[f64], taps: usize| -> Vec<f64> {
            let ci = x.len();
            (0..b.len())
                .map(|o| {
                    let mut s = b.data()[o] as f64;
                    for (c, &xv) in x.iter().enumerate() {
                        let base = (o * ci + c) * taps;
                        s += xv * w.data()[base..base + taps].iter().map(|&v| v as f64).sum::<f64>();
                    }
                    s
                })
                .collect()
        };
        let hi_d = lin(p.proj.weight(), p.proj.bias(), &[-0.7; 3], 1);
        let mut cat = vec![0.3; d];
        cat.extend(hi_d);
        let mid: Vec<f64> = lin(p.conv1.weight(), p.conv1.bias(), &cat, 9)
            .into_iter()
            .map(|v| v.max(0.0))
            .collect();
        let expect = lin(p.conv2.weight(), p.conv2.bias(), &mid, 9);
        for (c, e) in expect.iter().enumerate() {
            let plane = out.plane(0, c);
            for y in 2..7 {
                for x in 2..7 {
                    assert!((plane[y * 9 + x] as f64 - e).abs() < 1e-5);
                }
            }
        }
        assert_eq!(
            fuse_adjacent(&fp, &hi, &AdjacentFusion::zeros(3, d).unwrap()).unwrap(),
            Tensor::zeros(&[1, d, 9, 9])
        );
    }

    #[test]
    fn cross_attention_routes_agree() {
        let mut prng = Prng::new(7);
        let p = CrossAttentionFusion::init(&mut prng, 5, 4).unwrap();
        let fp = rand(&mut prng, &[2, 4, 8, 8]);
        let far = rand(&mut prng, &[2, 5, 1, 1]);
        let a = cross_attention_fuse(&fp, &far, &p).unwrap();
        let b = cross_attention_fuse_direct(&fp, &far, &p).unwrap();
        assert!(a.max_abs_diff(&b) < 1e-5);
        let far = rand(&mut prng, &[2, 5, 3, 3]);
        let a = cross_attention_fuse(&fp, &far, &p).unwrap();
        let b = cross_attention_fuse_direct(&fp, &far, &p).unwrap();
        assert!(a.max_abs_diff(&b) < 1e-5);
        let mut p0 = p.clone();
        p0.attn.wv = Tensor::zeros(&[4, 4]);
        assert_eq!(cross_attention_fuse(&fp, &far, &p0).unwrap(), fp);
    }

    #[test]
    fn forward_preserves_level_shapes() {
        let ch = [4, 6, 8, 10];
        let mut prng = Prng::new(8);
        let levels = pyramid(&mut prng, 2, ch, 16);
        let params = init_stack(&mut prng, &ch, 8).unwrap();
        let settings = GraphSettings::default();
        let out = dugc_forward(&levels, &params, &settings).unwrap();
        for (a, b) in out.features.as_slice().iter().zip(levels.as_slice()) {
            assert_eq!(a.dims(), b.dims());
            assert!(a.all_finite());
        }
        let again = dugc_forward(&levels, &params, &settings).unwrap();
        assert_eq!(again.features, out.features);

        let zeros = zero_stack(&ch, 8).unwrap();
        let out = dugc_forward(&levels, &zeros, &settings).unwrap();
        assert!(out
            .features
            .as_slice()
            .iter()
            .all(|t| t.data().iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn level_validation() {
        let t = |c, h| Tensor::zeros(&[1, c, h, h]);
        assert!(LevelFeatures::new(vec![t(1, 8), t(1, 4), t(1, 2)]).is_err());
        assert!(LevelFeatures::new(vec![t(1, 8), t(1, 4), t(1, 2), t(1, 2)]).is_err());
        assert!(LevelFeatures::new(vec![t(1, 7), t(1, 4), t(1, 2), t(1, 1)]).is_ok());
    }
}
