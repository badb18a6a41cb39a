//! File formats: binary PGM images with JSON sidecars and the `CSPT` raw
//! array dump.
//!
//! Raw dumps are a 16-byte header (`b"CSPT"`, u32 rows, u32 cols, 4 zero
//! bytes) followed by `rows * cols` little-endian `f64` values in row-major
//! order.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::image::SourceImage;
use crate::{Error, Result};

pub const RAW_MAGIC: &[u8; 4] = b"CSPT";
const RAW_HEADER_LEN: usize = 16;

/// 8-bit grayscale raster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pgm {
    pub width: usize,
    pub height: usize,
    pub maxval: u16,
    pub data: Vec<u8>,
}

impl Pgm {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Self {
        assert_eq!(data.len(), width * height);
        Self {
            width,
            height,
            maxval: 255,
            data,
        }
    }
}

/// Value range recorded next to every image written by [`write_image_pgm`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PgmSidecar {
    pub width: usize,
    pub height: usize,
    pub min: f64,
    pub max: f64,
}

pub fn read_pgm(path: impl AsRef<Path>) -> Result<Pgm> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::input(path, e))?;
    parse_pgm(&bytes).map_err(|msg| Error::input(path, msg))
}

fn parse_pgm(bytes: &[u8]) -> std::result::Result<Pgm, String> {
    let mut pos = 0;
    let mut token = || -> std::result::Result<String, String> {
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
            return Err("truncated header".into());
        }
        Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };
    let magic = token()?;
    if magic != "P5" {
        return Err(format!("not a binary PGM (magic {magic:?}, expected \"P5\")"));
    }
    let num = |s: String| s.parse::<usize>().map_err(|_| format!("bad header field {s:?}"));
    let width = num(token()?)?;
    let height = num(token()?)?;
    let maxval = num(token()?)?;
    if maxval == 0 || maxval > 255 {
        return Err(format!("only 8-bit PGM is supported (maxval {maxval})"));
    }
    // exactly one whitespace byte separates the header from the raster
    pos += 1;
    let len = width * height;
    if bytes.len() < pos + len {
        return Err(format!(
            "raster truncated: expected {len} bytes, found {}",
            bytes.len().saturating_sub(pos)
        ));
    }
    Ok(Pgm {
        width,
        height,
        maxval: maxval as u16,
        data: bytes[pos..pos + len].to_vec(),
    })
}

pub fn write_pgm(path: impl AsRef<Path>, pgm: &Pgm) -> Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    write!(out, "P5\n{} {}\n{}\n", pgm.width, pgm.height, pgm.maxval)?;
    out.write_all(&pgm.data)?;
    out.flush()?;
    Ok(())
}

/// Sidecar path for an image: `recon.pgm` → `recon.json`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("json")
}

/// Linearly maps `[min, max]` of the array onto `[0, 255]`.
pub fn to_pgm(values: &Array2<f64>) -> (Pgm, PgmSidecar) {
    let (h, w) = values.dim();
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let range = max - min;
    let data = values
        .iter()
        .map(|&v| {
            if range > 0.0 {
                ((v - min) / range * 255.0).round().clamp(0.0, 255.0) as u8
            } else {
                0
            }
        })
        .collect();
    (
        Pgm::new(w, h, data),
        PgmSidecar {
            width: w,
            height: h,
            min,
            max,
        },
    )
}

/// Writes an image as PGM plus a JSON sidecar holding the value range.
pub fn write_image_pgm(path: impl AsRef<Path>, img: &SourceImage) -> Result<PgmSidecar> {
    write_array_pgm(path, img.values())
}

pub fn write_array_pgm(path: impl AsRef<Path>, values: &Array2<f64>) -> Result<PgmSidecar> {
    let path = path.as_ref();
    let (pgm, sidecar) = to_pgm(values);
    write_pgm(path, &pgm)?;
    fs::write(sidecar_path(path), serde_json::to_string_pretty(&sidecar)?)?;
    Ok(sidecar)
}

pub fn encode_raw(values: &Array2<f64>) -> Vec<u8> {
    let (rows, cols) = values.dim();
    let mut buf = Vec::with_capacity(RAW_HEADER_LEN + 8 * rows * cols);
    buf.extend_from_slice(RAW_MAGIC);
    buf.extend_from_slice(&(rows as u32).to_le_bytes());
    buf.extend_from_slice(&(cols as u32).to_le_bytes());
    buf.extend_from_slice(&[0u8; 4]);
    for v in values.iter() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    buf
}

pub fn decode_raw(bytes: &[u8]) -> std::result::Result<Array2<f64>, String> {
    if bytes.len() < RAW_HEADER_LEN || &bytes[..4] != RAW_MAGIC {
        return Err("missing CSPT header".into());
    }
    let rows = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let cols = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let body = &bytes[RAW_HEADER_LEN..];
    if body.len() != 8 * rows * cols {
        return Err(format!(
            "payload has {} bytes, header announces {rows}x{cols} f64",
            body.len()
        ));
    }
    let values = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Array2::from_shape_vec((rows, cols), values).map_err(|e| e.to_string())
}

pub fn write_raw(path: impl AsRef<Path>, values: &Array2<f64>) -> Result<()> {
    fs::write(path, encode_raw(values))?;
    Ok(())
}

pub fn read_raw(path: impl AsRef<Path>) -> Result<Array2<f64>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::input(path, e))?;
    decode_raw(&bytes).map_err(|msg| Error::input(path, msg))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn raw_header_layout() {
        let a = Array2::from_shape_vec((2, 3), vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.5]).unwrap();
        let bytes = encode_raw(&a);
        assert_eq!(&bytes[..4], b"CSPT");
        assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 2);
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 3);
        assert_eq!(bytes.len(), 16 + 48);
        assert_eq!(f64::from_le_bytes(bytes[16..24].try_into().unwrap()), 1.0);
        assert_eq!(f64::from_le_bytes(bytes[56..64].try_into().unwrap()), 6.5);
    }

    #[test]
    fn raw_rejects_bad_input() {
        assert!(decode_raw(b"XXXX0000000000000000").is_err());
        let mut bytes = encode_raw(&Array2::zeros((2, 2)));
        bytes.pop();
        assert!(decode_raw(&bytes).is_err());
    }

    proptest! {
        #[test]
        fn raw_round_trip(rows in 1usize..6, cols in 1usize..6, seed in any::<u64>()) {
            let a = Array2::from_shape_fn((rows, cols), |(i, j)| {
                ((seed as f64) * 1e-12 + i as f64 * 0.37 - j as f64 * 1.3).sin()
            });
            let b = decode_raw(&encode_raw(&a)).unwrap();
            prop_assert_eq!(a, b);
        }
    }

    #[test]
    fn pgm_round_trip_with_comment() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.pgm");
        let pgm = Pgm::new(3, 2, vec![0, 10, 20, 30, 40, 255]);
        write_pgm(&path, &pgm).unwrap();
        assert_eq!(read_pgm(&path).unwrap(), pgm);

        let mut bytes = b"P5\n# comment line\n3 2\n255\n".to_vec();
        bytes.extend_from_slice(&pgm.data);
        assert_eq!(parse_pgm(&bytes).unwrap(), pgm);
    }

    #[test]
    fn pgm_rejects_ascii_and_16_bit() {
        assert!(parse_pgm(b"P2\n1 1\n255\n0").is_err());
        assert!(parse_pgm(b"P5\n1 1\n65535\n\0\0").is_err());
        assert!(parse_pgm(b"P5\n4 4\n255\n\0").is_err());
    }

    #[test]
    fn image_mapping_and_sidecar() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("img.pgm");
        let a = Array2::from_shape_vec((1, 3), vec![-1.0, 0.0, 1.0]).unwrap();
        let side = write_array_pgm(&path, &a).unwrap();
        assert_eq!((side.min, side.max), (-1.0, 1.0));
        let pgm = read_pgm(&path).unwrap();
        assert_eq!(pgm.data, vec![0, 128, 255]);
        let back: PgmSidecar =
            serde_json::from_str(&fs::read_to_string(sidecar_path(&path)).unwrap()).unwrap();
        assert_eq!(back, side);
    }
}
