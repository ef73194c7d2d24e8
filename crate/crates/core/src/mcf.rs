//! Multimodal fusion: each modality is projected to the shared embedding
//! width, encoded by (non-residual) self-attention, and the three encodings
//! are blended with softmax weights over learnable logits `theta`.

use crate::attention::{attention, project, AttentionWeights};
use crate::error::{param_err, shape_err, Error, Result};
use crate::tensor::{conv, flatten_nodes, unflatten_nodes, ConvParams, Prng, Tensor};

pub const MODALITIES: usize = 3;

#[derive(Clone, Debug, PartialEq)]
pub struct McfParams {
    pub proj: Vec<ConvParams>,
    pub attn: Vec<AttentionWeights>,
    pub theta: [f32; MODALITIES],
}

impl McfParams {
    /// Projections and attention weights drawn per modality; `theta` starts at zero.
    pub fn init(prng: &mut Prng, c: usize, d: usize) -> Result<Self> {
        let mut proj = Vec::with_capacity(MODALITIES);
        let mut attn = Vec::with_capacity(MODALITIES);
        for _ in 0..MODALITIES {
            proj.push(ConvParams::init(prng, c, d, 1)?);
            attn.push(AttentionWeights::init(prng, d)?);
        }
        Ok(Self {
            proj,
            attn,
            theta: [0.0; MODALITIES],
        })
    }

    pub fn zeros(c: usize, d: usize) -> Result<Self> {
        Ok(Self {
            proj: (0..MODALITIES)
                .map(|_| ConvParams::zeros(c, d, 1))
                .collect::<Result<_>>()?,
            attn: vec![AttentionWeights::zeros(d); MODALITIES],
            theta: [0.0; MODALITIES],
        })
    }
}

pub fn encode_modality(f: &Tensor, proj: &ConvParams, attn: &AttentionWeights) -> Result<Tensor> {
    let embedded = conv(f, proj)?;
    let [_, _, h, w] = embedded.nchw()?;
    let x = flatten_nodes(&embedded)?;
    let q = project(&x, &attn.wq)?;
    let k = project(&x, &attn.wk)?;
    let v = project(&x, &attn.wv)?;
    unflatten_nodes(&attention(&q, &k, &v)?, h, w)
}

pub fn modality_weights(theta: &[f32; MODALITIES]) -> Result<[f64; MODALITIES]> {
    if theta.iter().any(|t| !t.is_finite()) {
        return Err(Error::Numeric(format!("non-finite modality logits {theta:?}")));
    }
    let max = theta.iter().copied().fold(f32::NEG_INFINITY, f32::max) as f64;
    let e = theta.map(|t| (t as f64 - max).exp());
    let sum: f64 = e.iter().sum();
    Ok(e.map(|v| v / sum))
}

/// `sum_m w_m F_m`, accumulated in `f64`.
pub fn fuse(encoded: &[Tensor], w: &[f64; MODALITIES]) -> Result<Tensor> {
    if encoded.len() != MODALITIES {
        return Err(param_err!("expected {MODALITIES} modalities, got {}", encoded.len()));
    }
    let dims = encoded[0].dims();
    if encoded.iter().any(|t| t.dims() != dims) {
        return Err(shape_err!("modality shapes differ"));
    }
    let out = (0..encoded[0].len())
        .map(|i| {
            encoded
                .iter()
                .zip(w)
                .map(|(t, &wm)| wm * t.data()[i] as f64)
                .sum::<f64>() as f32
        })
        .collect();
    Tensor::new(dims, out)
}

/// Encodes and fuses one level's three modality streams.
pub fn mcf_forward(streams: &[&Tensor], p: &McfParams) -> Result<Tensor> {
    if streams.len() != MODALITIES {
        return Err(param_err!(
            "expected {MODALITIES} modality streams, got {}",
            streams.len()
        ));
    }
    let encoded = streams
        .iter()
        .zip(p.proj.iter().zip(&p.attn))
        .map(|(f, (proj, attn))| encode_modality(f, proj, attn))
        .collect::<Result<Vec<_>>>()?;
    fuse(&encoded, &modality_weights(&p.theta)?)
}
