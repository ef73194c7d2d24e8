//! Dense row-major `f32` tensors of rank 1 to 4 and the handful of kernels
//! the network needs.
//!
//! Everything here is a pure function of its inputs. Reductions accumulate in
//! `f64` in a fixed order and round once at the end, so results are
//! bit-reproducible across runs and platforms.

mod conv;
mod ops;
mod prng;
mod resize;

pub use conv::{conv, conv_strided, ConvParams, Linear};
pub use ops::{activate, add, concat_channels, flatten_nodes, matmul_batched, softmax, unflatten_nodes, Activation};
pub use prng::{init_uniform, Prng};
pub use resize::{area_downsample, avg_pool, bilinear_resize, bilinear_resize_adjoint, ResizePlan};

pub(crate) use ops::{gemm_f64acc, sigmoid, softmax_row};

use crate::error::{shape_err, Result};

/// Runs `f` from a function compiled with AVX2 enabled when the CPU has it,
/// so the inlined loops vectorize wider. No FMA is enabled and nothing is
/// reassociated, so results are bit-identical on either path.
#[inline(always)]
pub(crate) fn wide<R>(f: impl FnOnce() -> R) -> R {
    #[cfg(target_arch = "x86_64")]
    {
        #[target_feature(enable = "avx2")]
        unsafe fn run<R>(f: impl FnOnce() -> R) -> R {
            f()
        }
        if std::arch::is_x86_feature_detected!("avx2") {
            // SAFETY: the feature was detected at runtime.
            return unsafe { run(f) };
        }
    }
    f()
}

pub const MAX_RANK: usize = 4;

#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    dims: Vec<usize>,
    data: Vec<f32>,
}

fn check_dims(dims: &[usize]) -> Result<usize> {
    if dims.is_empty() || dims.len() > MAX_RANK {
        return Err(shape_err!("rank must be 1..={MAX_RANK}, got {}", dims.len()));
    }
    if dims.contains(&0) {
        return Err(shape_err!("zero extent in dims {dims:?}"));
    }
    dims.iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| shape_err!("dims {dims:?} overflow"))
}

impl Tensor {
    pub fn new(dims: &[usize], data: Vec<f32>) -> Result<Self> {
        let len = check_dims(dims)?;
        if data.len() != len {
            return Err(shape_err!("dims {dims:?} need {len} values, got {}", data.len()));
        }
        Ok(Self {
            dims: dims.to_vec(),
            data,
        })
    }

    /// # Panics
    /// On invalid dims (empty, rank > 4, or a zero extent).
    pub fn full(dims: &[usize], value: f32) -> Self {
        let len = check_dims(dims).expect("invalid tensor dims");
        Self {
            dims: dims.to_vec(),
            data: vec![value; len],
        }
    }

    pub fn zeros(dims: &[usize]) -> Self {
        Self::full(dims, 0.0)
    }

    /// Builds a tensor from its flat row-major index.
    pub fn from_fn(dims: &[usize], f: impl FnMut(usize) -> f32) -> Self {
        let len = check_dims(dims).expect("invalid tensor dims");
        Self {
            dims: dims.to_vec(),
            data: (0..len).map(f).collect(),
        }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn rank(&self) -> usize {
        self.dims.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    pub fn reshape(self, dims: &[usize]) -> Result<Self> {
        Self::new(dims, self.data)
    }

    /// `[B, C, H, W]` extents of a rank-4 tensor.
    pub fn nchw(&self) -> Result<[usize; 4]> {
        match self.dims[..] {
            [b, c, h, w] => Ok([b, c, h, w]),
            _ => Err(shape_err!("expected [B,C,H,W], got {:?}", self.dims)),
        }
    }

    /// `[B, N, K]` extents of a rank-3 tensor.
    pub fn bnk(&self) -> Result<[usize; 3]> {
        match self.dims[..] {
            [b, n, k] => Ok([b, n, k]),
            _ => Err(shape_err!("expected [B,N,K], got {:?}", self.dims)),
        }
    }

    /// `[H, W]` of a rank-2 tensor.
    pub fn hw(&self) -> Result<[usize; 2]> {
        match self.dims[..] {
            [h, w] => Ok([h, w]),
            _ => Err(shape_err!("expected [H,W], got {:?}", self.dims)),
        }
    }

    /// Drops leading unit extents down to `[H, W]`.
    pub fn squeeze_2d(&self) -> Result<Tensor> {
        let r = self.rank();
        if r < 2 || self.dims[..r - 2].iter().any(|&d| d != 1) {
            return Err(shape_err!("cannot view {:?} as a single [H,W] map", self.dims));
        }
        Tensor::new(&self.dims[r - 2..], self.data.clone())
    }

    pub fn map(&self, f: impl Fn(f32) -> f32) -> Tensor {
        Tensor {
            dims: self.dims.clone(),
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &Tensor, f: impl Fn(f32, f32) -> f32) -> Result<Tensor> {
        if self.dims != other.dims {
            return Err(shape_err!("{:?} vs {:?}", self.dims, other.dims));
        }
        Ok(Tensor {
            dims: self.dims.clone(),
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub fn scale(&self, a: f32) -> Tensor {
        self.map(|v| v * a)
    }

    /// Largest elementwise absolute difference; `f32::INFINITY` on a shape mismatch.
    pub fn max_abs_diff(&self, other: &Tensor) -> f32 {
        if self.dims != other.dims {
            return f32::INFINITY;
        }
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f32::max)
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().map(|&v| v as f64).sum::<f64>() / self.len() as f64
    }

    /// Contiguous slice of batch item `b`, channel `c` of a rank-4 tensor.
    pub fn plane(&self, b: usize, c: usize) -> &[f32] {
        let [_, cs, h, w] = self.nchw().expect("rank-4 tensor");
        let hw = h * w;
        let off = (b * cs + c) * hw;
        &self.data[off..off + hw]
    }
}
