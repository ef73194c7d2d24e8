//! Deterministic metric fixtures and their reference values.
//!
//! The maps are defined by integer formulas so an independent
//! implementation can rebuild them exactly; the constants were produced by
//! such an implementation (`tests/fixtures/gen_goldens.py`), not by this
//! crate.

use crate::tensor::Tensor;

pub const S_MEASURE_A: f64 = 0.8283730523670403;
pub const S_MEASURE_A_PERFECT: f64 = 0.9999999999999982;
pub const S_MEASURE_B: f64 = 0.6548380495730738;
pub const WEIGHTED_F_A: f64 = 0.5169119201679493;
pub const WEIGHTED_F_A_INVERTED: f64 = 0.0;
pub const WEIGHTED_F_B: f64 = 0.49322473841231124;

fn build(
    h: usize,
    w: usize,
    fg: impl Fn(usize, usize) -> bool,
    level: impl Fn(usize, usize, bool) -> u32,
) -> (Tensor, Tensor) {
    let p = Tensor::from_fn(&[h, w], |k| level(k / w, k % w, fg(k / w, k % w)) as f32 / 255.0);
    let g = Tensor::from_fn(&[h, w], |k| if fg(k / w, k % w) { 1.0 } else { 0.0 });
    (p, g)
}

/// 32x32: an elliptical object with a textured, imperfect prediction.
pub fn fixture_a() -> (Tensor, Tensor) {
    build(
        32,
        32,
        |i, j| {
            let (di, dj) = (i as i64 - 13, j as i64 - 17);
            121 * di * di + 81 * dj * dj <= 9801
        },
        |i, j, fg| (if fg { 170 } else { 40 }) + ((i * 37 + j * 91) % 61) as u32,
    )
}

/// 24x20: two rectangles and a lone pixel, with a noisy prediction.
pub fn fixture_b() -> (Tensor, Tensor) {
    build(
        24,
        20,
        |i, j| {
            ((3..11).contains(&i) && (2..9).contains(&j))
                || ((12..21).contains(&i) && (11..18).contains(&j))
                || (i, j) == (22, 1)
        },
        |i, j, fg| {
            let r = ((i * i * 7 + j * 13 + i * j * 3) % 256) as u32;
            if fg {
                128 + r % 128
            } else {
                r % 128
            }
        },
    )
}
