use super::Tensor;
use crate::error::{param_err, Result};

/// SplitMix64 generator.
///
/// Fixed so parameter tensors and golden files are identical across
/// implementations that follow the same draw order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Prng {
    state: u64,
}

impl Prng {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in `[0, 1)` with 53 bits of resolution.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Uniform integer in `0..n`.
    pub fn below(&mut self, n: usize) -> usize {
        ((self.next_f64() * n as f64) as usize).min(n - 1)
    }
}

/// Entries i.i.d. uniform in `[-1/sqrt(fan_in), 1/sqrt(fan_in)]`, drawn in
/// row-major order.
pub fn init_uniform(prng: &mut Prng, dims: &[usize], fan_in: usize) -> Result<Tensor> {
    if fan_in == 0 {
        return Err(param_err!("fan_in must be >= 1"));
    }
    let bound = 1.0 / (fan_in as f64).sqrt();
    let len: usize = dims.iter().product();
    let data = (0..len).map(|_| prng.uniform(-bound, bound) as f32).collect();
    Tensor::new(dims, data)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splitmix_reference_stream() {
        // First outputs for seed 0 as published with the SplitMix64 reference code.
        let mut p = Prng::new(0);
        assert_eq!(p.next_u64(), 0xE220_A839_7B1D_CDAF);
        assert_eq!(p.next_u64(), 0x6E78_9E6A_A1B9_65F4);
    }

    #[test]
    fn init_is_deterministic_and_bounded() {
        let a = init_uniform(&mut Prng::new(7), &[4, 5], 1).unwrap();
        let b = init_uniform(&mut Prng::new(7), &[4, 5], 1).unwrap();
        assert_eq!(a, b);
        assert!(a.data().iter().all(|v| (-1.0..=1.0).contains(v)));
        assert!(init_uniform(&mut Prng::new(7), &[2], 0).is_err());
    }

    #[test]
    fn init_mean_is_near_zero() {
        let t = init_uniform(&mut Prng::new(2024), &[100_000], 1).unwrap();
        assert!(t.mean().abs() < 0.01, "mean {}", t.mean());
    }
}
