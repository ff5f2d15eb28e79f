//! Provenance records and the JSON/PNG writers that embed them.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use image::RgbImage;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub analysis: String,
    pub seed: u64,
    pub parameters: Value,
    /// sha256 of each input, keyed by a stable label.
    pub inputs: BTreeMap<String, String>,
    /// sha256 over the fields above.
    pub digest: String,
}

impl Provenance {
    pub fn new(analysis: &str, seed: u64, parameters: Value, inputs: BTreeMap<String, String>) -> Self {
        let mut p = Self {
            tool: "cartolab".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            analysis: analysis.into(),
            seed,
            parameters,
            inputs,
            digest: String::new(),
        };
        let body = serde_json::to_vec(&p).expect("provenance serializes");
        p.digest = hex::encode(Sha256::digest(body));
        p
    }
}

pub fn sha256_bytes(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    Ok(sha256_bytes(&bytes))
}

#[derive(Serialize)]
struct Stamped<'a, T: Serialize> {
    provenance: &'a Provenance,
    result: &'a T,
}

/// Pretty JSON `{provenance, result}` with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, provenance: &Provenance, result: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(&Stamped { provenance, result }).map_err(|e| CliError::Json {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    bytes.push(b'\n');
    std::fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

/// The `result` part of a stamped JSON file.
pub fn read_result<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let json = |e: serde_json::Error| CliError::Json {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let mut v: Value = serde_json::from_str(&text).map_err(json)?;
    serde_json::from_value(v.get_mut("result").map(Value::take).unwrap_or(Value::Null)).map_err(json)
}

/// RGB PNG with the provenance digest in a `tEXt` chunk.
pub fn write_png(path: &Path, img: &RgbImage, provenance: &Provenance) -> Result<()> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut enc = png::Encoder::new(BufWriter::new(file), img.width(), img.height());
    enc.set_color(png::ColorType::Rgb);
    enc.set_depth(png::BitDepth::Eight);
    let png_err = |e: png::EncodingError| CliError::Png(e.to_string());
    enc.add_text_chunk("provenance".into(), provenance.digest.clone()).map_err(png_err)?;
    enc.add_text_chunk("analysis".into(), provenance.analysis.clone()).map_err(png_err)?;
    let mut w = enc.write_header().map_err(png_err)?;
    w.write_image_data(img.as_raw()).map_err(png_err)?;
    w.finish().map_err(png_err)?;
    Ok(())
}

/// Anchors of the fixed heatmap colormap (viridis, low to high).
const COLORMAP: [[f64; 3]; 5] = [
    [68.0, 1.0, 84.0],
    [59.0, 82.0, 139.0],
    [33.0, 145.0, 140.0],
    [94.0, 201.0, 98.0],
    [253.0, 231.0, 37.0],
];

/// Missing cells.
const NAN_COLOR: [u8; 3] = [200, 200, 200];

pub fn colormap(t: f64) -> [u8; 3] {
    if !t.is_finite() {
        return NAN_COLOR;
    }
    let x = t.clamp(0.0, 1.0) * (COLORMAP.len() - 1) as f64;
    let i = (x.floor() as usize).min(COLORMAP.len() - 2);
    let f = x - i as f64;
    let mut out = [0u8; 3];
    for (c, o) in out.iter_mut().enumerate() {
        *o = (COLORMAP[i][c] + f * (COLORMAP[i + 1][c] - COLORMAP[i][c])).round() as u8;
    }
    out
}

/// Per-cell raster of a matrix, min–max scaled over finite cells.
pub fn heatmap(matrix: &[Vec<f64>], cell_px: u32) -> RgbImage {
    let rows = matrix.len().max(1) as u32;
    let cols = matrix.iter().map(Vec::len).max().unwrap_or(0).max(1) as u32;
    let finite = matrix.iter().flatten().copied().filter(|v| v.is_finite());
    let (lo, hi) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    let span = if hi > lo { hi - lo } else { 1.0 };
    RgbImage::from_fn(cols * cell_px, rows * cell_px, |x, y| {
        let v = matrix
            .get((y / cell_px) as usize)
            .and_then(|r| r.get((x / cell_px) as usize))
            .copied()
            .unwrap_or(f64::NAN);
        image::Rgb(colormap((v - lo) / span))
    })
}

/// Flush helper for line-oriented text outputs.
pub fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut f = File::create(path).map_err(|e| CliError::io(path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| CliError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_depends_on_inputs() {
        let a = Provenance::new("x", 1, Value::Null, BTreeMap::from([("m".into(), "00".into())]));
        let b = Provenance::new("x", 1, Value::Null, BTreeMap::from([("m".into(), "01".into())]));
        assert_ne!(a.digest, b.digest);
        assert_eq!(a, Provenance::new("x", 1, Value::Null, BTreeMap::from([("m".into(), "00".into())])));
    }

    #[test]
    fn colormap_endpoints() {
        assert_eq!(colormap(0.0), [68, 1, 84]);
        assert_eq!(colormap(1.0), [253, 231, 37]);
        assert_eq!(colormap(f64::NAN), NAN_COLOR);
        let h = heatmap(&[vec![0.0, 1.0], vec![f64::NAN, 0.5]], 3);
        assert_eq!(h.dimensions(), (6, 6));
        assert_eq!(h.get_pixel(4, 0).0, [253, 231, 37]);
        assert_eq!(h.get_pixel(0, 4).0, NAN_COLOR);
    }

    #[test]
    fn png_carries_digest() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("h.png");
        let prov = Provenance::new("x", 0, Value::Null, BTreeMap::new());
        write_png(&p, &heatmap(&[vec![1.0]], 4), &prov).unwrap();
        let dec = png::Decoder::new(std::io::BufReader::new(File::open(&p).unwrap()));
        let reader = dec.read_info().unwrap();
        let text = &reader.info().uncompressed_latin1_text;
        assert!(text.iter().any(|t| t.keyword == "provenance" && t.text == prov.digest));
    }
}
