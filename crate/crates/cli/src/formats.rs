//! On-disk formats: raw `WCT1` tensors, binary PGM (P5) and kernel text files.

use std::fs;
use std::path::Path;

use wcprox_core::kernel::ConvKernel;
use wcprox_core::{ImageTensor, Shape};

use crate::error::{CliError, Result};

pub const TENSOR_MAGIC: &[u8; 4] = b"WCT1";
const HEADER_LEN: usize = 16;

/// `WCT1`, then `planes`, `height`, `width` as little-endian `u32`, then the
/// samples as little-endian `f64`, row-major per plane.
pub fn encode_tensor(x: &ImageTensor) -> Result<Vec<u8>> {
    let s = x.shape();
    let dim = |v: usize| {
        u32::try_from(v).map_err(|_| CliError::Malformed(format!("dimension {v} does not fit the header")))
    };
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * x.len());
    out.extend_from_slice(TENSOR_MAGIC);
    for v in [s.planes, s.height, s.width] {
        out.extend_from_slice(&dim(v)?.to_le_bytes());
    }
    for v in x.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

pub fn decode_tensor(bytes: &[u8]) -> Result<ImageTensor> {
    if bytes.len() < HEADER_LEN || &bytes[..4] != TENSOR_MAGIC {
        return Err(CliError::Malformed("not a WCT1 tensor (bad magic or short header)".into()));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[4 + 4 * i..8 + 4 * i].try_into().unwrap()) as usize;
    let shape = Shape::new(word(0), word(1), word(2));
    let body = &bytes[HEADER_LEN..];
    let expected = shape.len().checked_mul(8).filter(|_| !shape.is_empty());
    if expected != Some(body.len()) {
        return Err(CliError::Malformed(format!(
            "WCT1 header says {shape} but the payload has {} bytes",
            body.len()
        )));
    }
    let data = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    Ok(ImageTensor::from_vec(shape, data)?)
}

/// Single-plane tensor as an 8-bit P5 image; values are clipped to `[0, 1]`
/// and scaled to `0..=255`.
pub fn encode_pgm(x: &ImageTensor) -> Result<Vec<u8>> {
    let s = x.shape();
    if s.planes != 1 {
        return Err(CliError::Usage(format!("PGM export needs one plane, tensor has {}", s.planes)));
    }
    let mut out = format!("P5\n{} {}\n255\n", s.width, s.height).into_bytes();
    out.extend(x.data().iter().map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8));
    Ok(out)
}

pub fn decode_pgm(bytes: &[u8]) -> Result<ImageTensor> {
    let bad = |m: &str| CliError::Malformed(format!("PGM: {m}"));
    let mut pos = 0;
    let mut token = || -> Result<String> {
        loop {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            break;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(bad("truncated header"));
        }
        Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };
    if token()? != "P5" {
        return Err(bad("only binary P5 files are supported"));
    }
    let mut number = |what: &str| -> Result<usize> {
        token()?.parse::<usize>().map_err(|_| bad(&format!("invalid {what}")))
    };
    let width = number("width")?;
    let height = number("height")?;
    let maxval = number("maxval")?;
    if width == 0 || height == 0 {
        return Err(bad("empty image"));
    }
    if !(1..=255).contains(&maxval) {
        return Err(bad("only 8-bit images (maxval ≤ 255) are supported"));
    }
    // Exactly one whitespace byte separates the header from the raster.
    let raster = bytes.get(pos + 1..).ok_or_else(|| bad("missing raster"))?;
    if raster.len() != width * height {
        return Err(bad(&format!("expected {} raster bytes, found {}", width * height, raster.len())));
    }
    let scale = 1.0 / maxval as f64;
    let data = raster.iter().map(|&b| b as f64 * scale).collect();
    Ok(ImageTensor::from_vec(Shape::image(height, width), data)?)
}

/// `H W` on the first line, then `H` rows of `W` taps. Blank lines and
/// `#` comments are ignored.
pub fn parse_kernel_text(text: &str) -> Result<ConvKernel> {
    let mut lines = text.lines().map(|l| l.split('#').next().unwrap_or("").trim()).filter(|l| !l.is_empty());
    let header = lines.next().ok_or_else(|| CliError::Malformed("kernel file is empty".into()))?;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(|t| {
            t.parse().map_err(|_| CliError::Malformed(format!("kernel header {header:?} is not \"H W\"")))
        })
        .collect::<Result<_>>()?;
    let [h, w] = dims[..] else {
        return Err(CliError::Malformed(format!("kernel header {header:?} is not \"H W\"")));
    };
    let mut taps = Vec::with_capacity(h * w);
    for (row, line) in lines.enumerate() {
        let values: Vec<f64> = line
            .split_whitespace()
            .map(|t| {
                t.parse().map_err(|_| CliError::Malformed(format!("kernel row {}: bad tap {t:?}", row + 1)))
            })
            .collect::<Result<_>>()?;
        if values.len() != w {
            return Err(CliError::Malformed(format!(
                "kernel row {} has {} taps, expected {w}",
                row + 1,
                values.len()
            )));
        }
        taps.extend(values);
    }
    if taps.len() != h * w {
        return Err(CliError::Malformed(format!("kernel has {} rows, expected {h}", taps.len() / w.max(1))));
    }
    Ok(ConvKernel::new(h, w, taps)?)
}

pub fn format_kernel_text(k: &ConvKernel) -> String {
    let mut out = format!("{} {}\n", k.height(), k.width());
    for row in k.taps().chunks(k.width()) {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
        out.push_str(&cells.join(" "));
        out.push('\n');
    }
    out
}

pub fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| CliError::io(path, e))
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

/// Loads a tensor or PGM file, chosen by content.
pub fn load_image(path: &Path) -> Result<ImageTensor> {
    let bytes = read_bytes(path)?;
    let result = if bytes.starts_with(TENSOR_MAGIC) { decode_tensor(&bytes) } else { decode_pgm(&bytes) };
    result.map_err(|e| CliError::Malformed(format!("{}: {e}", path.display())))
}

pub fn load_kernel(path: &Path) -> Result<ConvKernel> {
    let bytes = read_bytes(path)?;
    let text = String::from_utf8(bytes)
        .map_err(|_| CliError::Malformed(format!("{}: kernel file is not UTF-8", path.display())))?;
    parse_kernel_text(&text).map_err(|e| CliError::Malformed(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn tensor_round_trip(planes in 1usize..3, h in 1usize..6, w in 1usize..6, seed: u64) {
            let shape = Shape::new(planes, h, w);
            let x = wcprox_core::rng::uniform_tensor(&mut wcprox_core::rng::seeded(seed), shape, -1e3, 1e3);
            let back = decode_tensor(&encode_tensor(&x).unwrap()).unwrap();
            prop_assert_eq!(back, x);
        }

        #[test]
        fn pgm_round_trip_on_8bit_levels(h in 1usize..8, w in 1usize..8, levels in prop::collection::vec(0u8..=255, 64)) {
            let data = (0..h * w).map(|i| levels[i % levels.len()] as f64 / 255.0).collect();
            let x = ImageTensor::from_vec(Shape::image(h, w), data).unwrap();
            let back = decode_pgm(&encode_pgm(&x).unwrap()).unwrap();
            prop_assert!(back.sub(&x).max_abs() < 1e-12);
        }
    }

    #[test]
    fn tensor_header_layout() {
        let x = ImageTensor::from_vec(Shape::new(1, 1, 2), vec![1.0, -2.0]).unwrap();
        let bytes = encode_tensor(&x).unwrap();
        assert_eq!(&bytes[..4], b"WCT1");
        assert_eq!(&bytes[4..16], &[1, 0, 0, 0, 1, 0, 0, 0, 2, 0, 0, 0]);
        assert_eq!(&bytes[16..24], &1.0f64.to_le_bytes());
        assert_eq!(bytes.len(), 32);
    }

    #[test]
    fn malformed_tensors() {
        assert!(decode_tensor(b"WCT2\0\0\0\0").is_err());
        let x = ImageTensor::zeros(Shape::image(2, 2));
        let mut bytes = encode_tensor(&x).unwrap();
        bytes.pop();
        assert!(decode_tensor(&bytes).is_err());
        let mut nan = encode_tensor(&x).unwrap();
        nan[16..24].copy_from_slice(&f64::NAN.to_le_bytes());
        assert!(decode_tensor(&nan).is_err());
    }

    #[test]
    fn pgm_with_comments_and_maxval() {
        let mut bytes = b"P5\n# made by hand\n2 1\n# levels\n15\n".to_vec();
        bytes.extend([0, 15]);
        let x = decode_pgm(&bytes).unwrap();
        assert_eq!(x.shape(), Shape::image(1, 2));
        assert_eq!(x.data(), &[0.0, 1.0]);
        assert!(decode_pgm(b"P2\n1 1\n255\n0").is_err());
        assert!(decode_pgm(b"P5\n2 2\n255\n\x01").is_err());
        assert!(encode_pgm(&ImageTensor::zeros(Shape::new(3, 2, 2))).is_err());
    }

    #[test]
    fn kernel_text() {
        let k = parse_kernel_text("# box\n3 1\n0.25\n0.5\n0.25\n").unwrap();
        assert_eq!((k.height(), k.width()), (3, 1));
        assert_eq!(parse_kernel_text(&format_kernel_text(&k)).unwrap(), k);
        assert!(parse_kernel_text("2 2\n1 0\n0 1\n").is_err());
        assert!(parse_kernel_text("1 2\n1\n").is_err());
        assert!(parse_kernel_text("1 1\n1\n2\n").is_err());
        assert!(parse_kernel_text("one one\n").is_err());
    }
}
