//! 8-bit images as `[1, C, H, W]` tensors in `[0, 1]`.
//!
//! Binary netpbm (`P5` grayscale, `P6` RGB, maxval 255) is always
//! available; PNG needs the `png` feature. Reading maps a byte `v` to
//! `v / 255`; writing maps `x` to `floor(x * 255 + 0.5)` clamped to
//! `0..=255`, so a read-write-read cycle reproduces the first read exactly.

use std::fs;
use std::path::Path;

use sodkit_core::Tensor;

use crate::error::{Error, Result};

pub fn to_byte(x: f32) -> u8 {
    (x as f64 * 255.0 + 0.5).floor().clamp(0.0, 255.0) as u8
}

pub fn from_byte(v: u8) -> f32 {
    v as f32 / 255.0
}

fn planar(channels: usize, h: usize, w: usize, interleaved: &[u8]) -> Result<Tensor> {
    let mut data = vec![0f32; channels * h * w];
    for (i, &v) in interleaved.iter().enumerate() {
        let (pix, c) = (i / channels, i % channels);
        data[c * h * w + pix] = from_byte(v);
    }
    Ok(Tensor::new(&[1, channels, h, w], data)?)
}

fn interleaved(t: &Tensor) -> Result<(usize, usize, usize, Vec<u8>)> {
    let [b, c, h, w] = t.nchw()?;
    if b != 1 || !(c == 1 || c == 3) {
        return Err(Error::Data(format!(
            "cannot write {:?} as an image; need [1, 1|3, H, W]",
            t.dims()
        )));
    }
    if !t.all_finite() {
        return Err(Error::Data("image contains non-finite values".into()));
    }
    let mut out = vec![0u8; c * h * w];
    for ci in 0..c {
        for (pix, &v) in t.plane(0, ci).iter().enumerate() {
            out[pix * c + ci] = to_byte(v);
        }
    }
    Ok((c, h, w, out))
}

struct Header<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Header<'_> {
    fn skip_space(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while self.bytes.get(self.pos).is_some_and(|&b| b != b'\n') {
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<usize> {
        self.skip_space();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        if start == self.pos {
            let msg = match self.bytes.get(start) {
                None => format!("truncated header, expected {what}"),
                Some(b) => format!("expected {what}, found byte 0x{b:02x}"),
            };
            return Err(Error::format(start, msg));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .expect("ascii digits")
            .parse()
            .map_err(|_| Error::format(start, format!("{what} out of range")))
    }
}

pub fn decode_netpbm(bytes: &[u8]) -> Result<Tensor> {
    let channels = match bytes.get(..2) {
        Some(b"P5") => 1,
        Some(b"P6") => 3,
        _ => return Err(Error::format(0, "expected binary netpbm magic P5 or P6")),
    };
    let mut hd = Header { bytes, pos: 2 };
    if !bytes.get(2).is_some_and(|b| b.is_ascii_whitespace() || *b == b'#') {
        return Err(Error::format(2, "expected whitespace after magic"));
    }
    let w = hd.number("width")?;
    let h = hd.number("height")?;
    let maxval_at = hd.pos;
    let maxval = hd.number("maxval")?;
    if w == 0 || h == 0 {
        return Err(Error::format(2, format!("empty image {w}x{h}")));
    }
    if maxval != 255 {
        return Err(Error::Unsupported(format!(
            "netpbm maxval {maxval} (byte {maxval_at}); only 255 is supported"
        )));
    }
    match bytes.get(hd.pos) {
        Some(b) if b.is_ascii_whitespace() => hd.pos += 1,
        _ => return Err(Error::format(hd.pos, "expected one whitespace byte before pixel data")),
    }
    let need = channels * w * h;
    let payload = &bytes[hd.pos..];
    if payload.len() < need {
        return Err(Error::format(
            bytes.len(),
            format!(
                "truncated pixel data: {w}x{h}x{channels} needs {need} bytes, found {}",
                payload.len()
            ),
        ));
    }
    planar(channels, h, w, &payload[..need])
}

pub fn encode_netpbm(t: &Tensor) -> Result<Vec<u8>> {
    let (c, h, w, px) = interleaved(t)?;
    let mut out = format!("P{}\n{w} {h}\n255\n", if c == 1 { 5 } else { 6 }).into_bytes();
    out.extend_from_slice(&px);
    Ok(out)
}

#[cfg(feature = "png")]
fn decode_png(bytes: &[u8]) -> Result<Tensor> {
    use png::{BitDepth, ColorType, Transformations};
    let mut dec = png::Decoder::new(std::io::Cursor::new(bytes));
    dec.set_transformations(Transformations::EXPAND);
    let mut reader = dec.read_info().map_err(|e| Error::format(0, e.to_string()))?;
    let mut buf = vec![0; reader.output_buffer_size().unwrap_or(0)];
    let info = reader
        .next_frame(&mut buf)
        .map_err(|e| Error::format(0, e.to_string()))?;
    if info.bit_depth != BitDepth::Eight {
        return Err(Error::Unsupported(format!("PNG bit depth {:?}", info.bit_depth)));
    }
    let (w, h) = (info.width as usize, info.height as usize);
    let px = &buf[..info.buffer_size()];
    match info.color_type {
        ColorType::Grayscale => planar(1, h, w, px),
        ColorType::Rgb => planar(3, h, w, px),
        // alpha is dropped
        ColorType::GrayscaleAlpha => planar(1, h, w, &px.iter().step_by(2).copied().collect::<Vec<_>>()),
        ColorType::Rgba => {
            let rgb: Vec<u8> = px.chunks_exact(4).flat_map(|p| [p[0], p[1], p[2]]).collect();
            planar(3, h, w, &rgb)
        }
        ColorType::Indexed => Err(Error::Unsupported("indexed PNG".into())),
    }
}

#[cfg(feature = "png")]
fn encode_png(t: &Tensor) -> Result<Vec<u8>> {
    let (c, h, w, px) = interleaved(t)?;
    let mut out = Vec::new();
    let mut enc = png::Encoder::new(&mut out, w as u32, h as u32);
    enc.set_color(if c == 1 {
        png::ColorType::Grayscale
    } else {
        png::ColorType::Rgb
    });
    enc.set_depth(png::BitDepth::Eight);
    let mut writer = enc.write_header().map_err(|e| Error::Data(e.to_string()))?;
    writer.write_image_data(&px).map_err(|e| Error::Data(e.to_string()))?;
    writer.finish().map_err(|e| Error::Data(e.to_string()))?;
    Ok(out)
}

#[cfg(not(feature = "png"))]
fn no_png() -> Error {
    Error::Unsupported("PNG support was not compiled in (enable the `png` feature)".into())
}

#[cfg(not(feature = "png"))]
fn decode_png(_: &[u8]) -> Result<Tensor> {
    Err(no_png())
}

#[cfg(not(feature = "png"))]
fn encode_png(_: &Tensor) -> Result<Vec<u8>> {
    Err(no_png())
}

fn is_png(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("png"))
}

/// File extensions accepted as images.
pub fn is_image_path(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| ["pgm", "ppm", "pnm", "png"].contains(&e.to_ascii_lowercase().as_str()))
}

/// Reads by content: PNG files by their signature, everything else as netpbm.
pub fn decode_image(bytes: &[u8]) -> Result<Tensor> {
    if bytes.starts_with(b"\x89PNG") {
        decode_png(bytes)
    } else {
        decode_netpbm(bytes)
    }
}

pub fn read_image(path: &Path) -> Result<Tensor> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_image(&bytes).map_err(|e| e.in_file(path))
}

/// Writes PNG for a `.png` path and netpbm otherwise.
pub fn write_image(path: &Path, t: &Tensor) -> Result<()> {
    let bytes = if is_png(path) {
        encode_png(t)?
    } else {
        encode_netpbm(t)?
    };
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn p5_scales_by_255() {
        let t = decode_netpbm(b"P5\n2 2\n255\n\x00\x80\xff\x40").unwrap();
        assert_eq!(t.dims(), [1, 1, 2, 2]);
        assert_eq!(t.data(), [0.0, 128.0 / 255.0, 1.0, 64.0 / 255.0]);
    }

    #[test]
    fn p6_is_deinterleaved() {
        let t = decode_netpbm(b"P6 # rgb\n1 2 255\n\x01\x02\x03\x04\x05\x06").unwrap();
        assert_eq!(t.dims(), [1, 3, 2, 1]);
        assert_eq!(t.plane(0, 0), [1.0 / 255.0, 4.0 / 255.0]);
        assert_eq!(t.plane(0, 2), [3.0 / 255.0, 6.0 / 255.0]);
    }

    #[test]
    fn byte_mapping_round_trips() {
        for v in 0..=255u8 {
            assert_eq!(to_byte(from_byte(v)), v);
        }
        assert_eq!(to_byte(0.5), 128);
        assert_eq!(to_byte(-1.0), 0);
        assert_eq!(to_byte(7.0), 255);
    }

    #[test]
    fn header_errors() {
        assert!(matches!(
            decode_netpbm(b"P3\n1 1\n255\n0"),
            Err(Error::Format { offset: 0, .. })
        ));
        assert!(matches!(
            decode_netpbm(b"P6\n1 1\n65535\n\0\0\0\0\0\0"),
            Err(Error::Unsupported(_))
        ));
        assert!(matches!(
            decode_netpbm(b"P5\n2 x"),
            Err(Error::Format { offset: 5, .. })
        ));
        match decode_netpbm(b"P5\n2 2\n255\n\x00\x01") {
            Err(Error::Format { offset, msg }) => {
                assert_eq!(offset, 13);
                assert!(msg.contains("needs 4 bytes, found 2"), "{msg}");
            }
            other => panic!("{other:?}"),
        }
    }
}
