//! End-to-end network: modality preparation, a small strided-conv backbone
//! shared by all modalities, per-level DUGC, per-level multimodal fusion,
//! and a progressive decoder emitting three saliency maps plus a mask
//! branch emitting three uncertainty masks.
//!
//! The backbone is an untrained stand-in; the point is the numerics of
//! everything after it.

use crate::dugc::{dugc_forward, init_stack, zero_stack, DugcParams, GraphSettings, LevelFeatures, LEVELS};
use crate::error::{param_err, shape_err, Result};
use crate::mcf::{mcf_forward, McfParams};
use crate::tensor::{add, bilinear_resize, concat_channels, conv, conv_strided, sigmoid, ConvParams, Prng, Tensor};

/// Depth fill value when no depth map is supplied.
pub const DEPTH_FALLBACK: f32 = 0.5;

/// Which member of an adjacent saliency pair the consistency term treats
/// as a constant.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Detach {
    #[default]
    Finer,
    Coarser,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelConfig {
    pub input_size: [usize; 2],
    pub backbone_channels: [usize; LEVELS],
    pub d: usize,
    pub alpha_graph: f64,
    pub k: usize,
    pub graph_pool: [usize; LEVELS],
    pub symmetrize: bool,
    pub lambda_c: f64,
    pub detach: Detach,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            input_size: [384, 384],
            backbone_channels: [16, 32, 64, 128],
            d: 64,
            alpha_graph: 0.5,
            k: 8,
            graph_pool: [4, 2, 1, 1],
            symmetrize: false,
            lambda_c: 0.1,
            detach: Detach::Finer,
            seed: 0,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        let [h, w] = self.input_size;
        if h == 0 || w == 0 || h % 32 != 0 || w % 32 != 0 {
            return Err(param_err!("input size {h}x{w} must be positive multiples of 32"));
        }
        if self.backbone_channels.contains(&0) || self.d == 0 {
            return Err(param_err!("channel counts and d must be >= 1"));
        }
        if !(0.0..=1.0).contains(&self.alpha_graph) {
            return Err(param_err!("alpha_graph {} outside [0, 1]", self.alpha_graph));
        }
        if self.k == 0 || self.graph_pool.contains(&0) {
            return Err(param_err!("k and graph_pool entries must be >= 1"));
        }
        if !(self.lambda_c.is_finite() && self.lambda_c >= 0.0) {
            return Err(param_err!("lambda_c {} must be finite and >= 0", self.lambda_c));
        }
        Ok(())
    }

    pub fn graph_settings(&self) -> GraphSettings {
        GraphSettings {
            alpha: self.alpha_graph,
            k: self.k,
            pool: self.graph_pool,
            symmetrize: self.symmetrize,
        }
    }

    /// Channel widths of the three mask-branch stages.
    pub fn mask_widths(&self) -> [usize; 3] {
        [(self.d / 2).max(1), (self.d / 4).max(1), (self.d / 8).max(1)]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModalityInputs {
    pub rgb: Tensor,
    pub depth: Option<Tensor>,
    pub edge: Option<Tensor>,
}

impl ModalityInputs {
    pub fn rgb_only(rgb: Tensor) -> Self {
        Self {
            rgb,
            depth: None,
            edge: None,
        }
    }

    /// The three 3-channel streams fed to the backbone: RGB, depth, edge.
    /// Missing depth becomes [`DEPTH_FALLBACK`]; missing edge is derived from RGB.
    pub fn streams(&self) -> Result<[Tensor; 3]> {
        let [b, c, h, w] = self.rgb.nchw()?;
        if c != 3 {
            return Err(shape_err!("rgb must have 3 channels, got {c}"));
        }
        let single = |t: &Tensor, name: &str| -> Result<()> {
            if t.dims() != [b, 1, h, w] {
                return Err(shape_err!("{name} {:?} for rgb {:?}", t.dims(), self.rgb.dims()));
            }
            Ok(())
        };
        for (t, name) in [
            (Some(&self.rgb), "rgb"),
            (self.depth.as_ref(), "depth"),
            (self.edge.as_ref(), "edge"),
        ] {
            if let Some(t) = t {
                if name != "rgb" {
                    single(t, name)?;
                }
                if t.data().iter().any(|v| !(0.0..=1.0).contains(v)) {
                    return Err(param_err!("{name} values must lie in [0, 1]"));
                }
            }
        }
        let depth = match &self.depth {
            Some(d) => d.clone(),
            None => Tensor::full(&[b, 1, h, w], DEPTH_FALLBACK),
        };
        let edge = match &self.edge {
            Some(e) => e.clone(),
            None => derive_edge(&self.rgb)?,
        };
        Ok([self.rgb.clone(), replicate3(&depth)?, replicate3(&edge)?])
    }
}

fn replicate3(x: &Tensor) -> Result<Tensor> {
    concat_channels(&[x, x, x])
}

/// Normalized Sobel magnitude of the luma channel, `[B, 1, H, W]` in `[0, 1]`.
/// Borders replicate the nearest pixel.
pub fn derive_edge(rgb: &Tensor) -> Result<Tensor> {
    let [b, c, h, w] = rgb.nchw()?;
    if c != 3 {
        return Err(shape_err!("edge derivation needs 3 channels, got {c}"));
    }
    let mut out = Vec::with_capacity(b * h * w);
    for bi in 0..b {
        let (r, g, bl) = (rgb.plane(bi, 0), rgb.plane(bi, 1), rgb.plane(bi, 2));
        let gray: Vec<f64> = (0..h * w)
            .map(|i| 0.299 * r[i] as f64 + 0.587 * g[i] as f64 + 0.114 * bl[i] as f64)
            .collect();
        let at = |y: isize, x: isize| {
            let y = y.clamp(0, h as isize - 1) as usize;
            let x = x.clamp(0, w as isize - 1) as usize;
            gray[y * w + x]
        };
        let mut mag = vec![0f64; h * w];
        for y in 0..h as isize {
            for x in 0..w as isize {
                let gx = (at(y - 1, x + 1) + 2.0 * at(y, x + 1) + at(y + 1, x + 1))
                    - (at(y - 1, x - 1) + 2.0 * at(y, x - 1) + at(y + 1, x - 1));
                let gy = (at(y + 1, x - 1) + 2.0 * at(y + 1, x) + at(y + 1, x + 1))
                    - (at(y - 1, x - 1) + 2.0 * at(y - 1, x) + at(y - 1, x + 1));
                mag[y as usize * w + x as usize] = gx.hypot(gy);
            }
        }
        let max = mag.iter().copied().fold(0.0, f64::max);
        out.extend(mag.iter().map(|&m| if max > 0.0 { (m / max) as f32 } else { 0.0 }));
    }
    Tensor::new(&[b, 1, h, w], out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct BackboneParams {
    /// Two stride-2 convolutions reaching stride 4.
    pub stem: [ConvParams; 2],
    /// Three stride-2 stages reaching strides 8, 16, 32.
    pub stages: [ConvParams; 3],
}

impl BackboneParams {
    pub fn init(prng: &mut Prng, channels: &[usize; LEVELS]) -> Result<Self> {
        let c0 = channels[0];
        Ok(Self {
            stem: [ConvParams::init(prng, 3, c0, 3)?, ConvParams::init(prng, c0, c0, 3)?],
            stages: [
                ConvParams::init(prng, channels[0], channels[1], 3)?,
                ConvParams::init(prng, channels[1], channels[2], 3)?,
                ConvParams::init(prng, channels[2], channels[3], 3)?,
            ],
        })
    }

    pub fn zeros(channels: &[usize; LEVELS]) -> Result<Self> {
        let c0 = channels[0];
        Ok(Self {
            stem: [ConvParams::zeros(3, c0, 3)?, ConvParams::zeros(c0, c0, 3)?],
            stages: [
                ConvParams::zeros(channels[0], channels[1], 3)?,
                ConvParams::zeros(channels[1], channels[2], 3)?,
                ConvParams::zeros(channels[2], channels[3], 3)?,
            ],
        })
    }
}

fn relu(x: Tensor) -> Tensor {
    x.map(|v| v.max(0.0))
}

pub fn backbone_forward(x: &Tensor, p: &BackboneParams) -> Result<LevelFeatures> {
    let [_, _, h, w] = x.nchw()?;
    if h % 32 != 0 || w % 32 != 0 {
        return Err(param_err!("backbone input {h}x{w} is not divisible by 32"));
    }
    let mut cur = relu(conv_strided(x, &p.stem[0], 2)?);
    cur = relu(conv_strided(&cur, &p.stem[1], 2)?);
    let mut levels = vec![cur];
    for stage in &p.stages {
        let next = relu(conv_strided(levels.last().expect("non-empty"), stage, 2)?);
        levels.push(next);
    }
    LevelFeatures::new(levels)
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecoderParams {
    /// 3x3 `d -> d` merges producing the stride-16, 8 and 4 decoder maps.
    pub merge: [ConvParams; 3],
    /// 1x1 `d -> 1` saliency heads for those maps.
    pub saliency_heads: [ConvParams; 3],
    /// 3x3 mask-branch convolutions at strides 4, 2 and 1.
    pub mask_convs: [ConvParams; 3],
    pub mask_heads: [ConvParams; 3],
}

impl DecoderParams {
    fn build(config: &ModelConfig, mut make: impl FnMut(usize, usize, usize) -> Result<ConvParams>) -> Result<Self> {
        let d = config.d;
        let [m0, m1, m2] = config.mask_widths();
        Ok(Self {
            merge: [make(d, d, 3)?, make(d, d, 3)?, make(d, d, 3)?],
            saliency_heads: [make(d, 1, 1)?, make(d, 1, 1)?, make(d, 1, 1)?],
            mask_convs: [make(d, m0, 3)?, make(m0, m1, 3)?, make(m1, m2, 3)?],
            mask_heads: [make(m0, 1, 1)?, make(m1, 1, 1)?, make(m2, 1, 1)?],
        })
    }

    pub fn init(prng: &mut Prng, config: &ModelConfig) -> Result<Self> {
        Self::build(config, |ci, co, k| ConvParams::init(prng, ci, co, k))
    }

    pub fn zeros(config: &ModelConfig) -> Result<Self> {
        Self::build(config, ConvParams::zeros)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    pub backbone: BackboneParams,
    pub dugc: Vec<DugcParams>,
    pub mcf: Vec<McfParams>,
    pub decoder: DecoderParams,
}

impl ModelParams {
    /// Draws every weight from `config.seed`: backbone, DUGC levels, fusion
    /// levels, decoder.
    pub fn init(config: &ModelConfig) -> Result<Self> {
        config.validate()?;
        let mut prng = Prng::new(config.seed);
        let ch = &config.backbone_channels;
        Ok(Self {
            backbone: BackboneParams::init(&mut prng, ch)?,
            dugc: init_stack(&mut prng, ch, config.d)?,
            mcf: ch
                .iter()
                .map(|&c| McfParams::init(&mut prng, c, config.d))
                .collect::<Result<_>>()?,
            decoder: DecoderParams::init(&mut prng, config)?,
        })
    }

    pub fn zeros(config: &ModelConfig) -> Result<Self> {
        config.validate()?;
        let ch = &config.backbone_channels;
        Ok(Self {
            backbone: BackboneParams::zeros(ch)?,
            dugc: zero_stack(ch, config.d)?,
            mcf: ch
                .iter()
                .map(|&c| McfParams::zeros(c, config.d))
                .collect::<Result<_>>()?,
            decoder: DecoderParams::zeros(config)?,
        })
    }
}

/// Saliency maps at strides 16, 8 and 4.
#[derive(Clone, Debug, PartialEq)]
pub struct SaliencyOutputs {
    pub s16: Tensor,
    pub s8: Tensor,
    pub s4: Tensor,
}

impl SaliencyOutputs {
    pub fn as_array(&self) -> [&Tensor; 3] {
        [&self.s16, &self.s8, &self.s4]
    }
}

/// Uncertainty masks at strides 4, 2 and 1.
#[derive(Clone, Debug, PartialEq)]
pub struct MaskOutputs {
    pub m4: Tensor,
    pub m2: Tensor,
    pub m1: Tensor,
}

impl MaskOutputs {
    pub fn as_array(&self) -> [&Tensor; 3] {
        [&self.m4, &self.m2, &self.m1]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ForwardOutput {
    pub saliency: SaliencyOutputs,
    pub masks: MaskOutputs,
    /// Graph nodes whose embedding had zero norm, summed over levels and modalities.
    pub zero_norm_nodes: usize,
}

/// Largest `f32` below 1; head outputs are clamped to `[f32::MIN_POSITIVE, OPEN_ONE]`.
const OPEN_ONE: f32 = 1.0 - f32::EPSILON / 2.0;

fn head(x: &Tensor, p: &ConvParams) -> Result<Tensor> {
    Ok(conv(x, p)?.map(|v| (sigmoid(v as f64) as f32).clamp(f32::MIN_POSITIVE, OPEN_ONE)))
}

fn up2(x: &Tensor) -> Result<Tensor> {
    let [_, _, h, w] = x.nchw()?;
    bilinear_resize(x, 2 * h, 2 * w)
}

pub fn model_forward(inputs: &ModalityInputs, params: &ModelParams, config: &ModelConfig) -> Result<ForwardOutput> {
    config.validate()?;
    let [_, _, h, w] = inputs.rgb.nchw()?;
    if [h, w] != config.input_size {
        return Err(shape_err!(
            "input {h}x{w} does not match configured {:?}",
            config.input_size
        ));
    }
    let settings = config.graph_settings();
    let mut per_modality = Vec::with_capacity(3);
    let mut zero_norm_nodes = 0;
    for stream in inputs.streams()? {
        let levels = backbone_forward(&stream, &params.backbone)?;
        let out = dugc_forward(&levels, &params.dugc, &settings)?;
        zero_norm_nodes += out.zero_norm_nodes;
        per_modality.push(out.features);
    }
    let fused = (0..LEVELS)
        .map(|l| {
            let streams: Vec<&Tensor> = per_modality.iter().map(|m| m.get(l)).collect();
            mcf_forward(&streams, &params.mcf[l])
        })
        .collect::<Result<Vec<_>>>()?;

    let dec = &params.decoder;
    let mut stage = fused[3].clone();
    let mut maps = Vec::with_capacity(3);
    let mut saliency = Vec::with_capacity(3);
    for (i, skip) in [&fused[2], &fused[1], &fused[0]].into_iter().enumerate() {
        stage = relu(conv(&add(&up2(&stage)?, skip)?, &dec.merge[i])?);
        saliency.push(head(&stage, &dec.saliency_heads[i])?);
        maps.push(stage.clone());
    }
    let mut mask_feat = relu(conv(&stage, &dec.mask_convs[0])?);
    let mut masks = vec![head(&mask_feat, &dec.mask_heads[0])?];
    for i in 1..3 {
        mask_feat = relu(conv(&up2(&mask_feat)?, &dec.mask_convs[i])?);
        masks.push(head(&mask_feat, &dec.mask_heads[i])?);
    }
    let [s16, s8, s4]: [Tensor; 3] = saliency.try_into().expect("three saliency maps");
    let [m4, m2, m1]: [Tensor; 3] = masks.try_into().expect("three masks");
    Ok(ForwardOutput {
        saliency: SaliencyOutputs { s16, s8, s4 },
        masks: MaskOutputs { m4, m2, m1 },
        zero_norm_nodes,
    })
}

/// Configuration and weights together.
#[derive(Clone, Debug)]
pub struct Model {
    pub config: ModelConfig,
    pub params: ModelParams,
}

impl Model {
    pub fn new(config: ModelConfig) -> Result<Self> {
        let params = ModelParams::init(&config)?;
        Ok(Self { config, params })
    }

    pub fn forward(&self, inputs: &ModalityInputs) -> Result<ForwardOutput> {
        model_forward(inputs, &self.params, &self.config)
    }
}
