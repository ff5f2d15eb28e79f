use std::path::Path;

use image::{DynamicImage, GrayImage};
use serde::{Deserialize, Serialize};

use super::error::IngestError;

pub const N_CLASSES: usize = 6;

/// Semantic classes of a label mask, in their fixed file encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[repr(u8)]
pub enum SemanticClass {
    Background = 0,
    Contours = 1,
    Built = 2,
    NonBuilt = 3,
    Water = 4,
    Road = 5,
}

impl SemanticClass {
    pub const ALL: [SemanticClass; N_CLASSES] = [
        SemanticClass::Background,
        SemanticClass::Contours,
        SemanticClass::Built,
        SemanticClass::NonBuilt,
        SemanticClass::Water,
        SemanticClass::Road,
    ];

    pub fn from_u8(v: u8) -> Option<Self> {
        Self::ALL.get(v as usize).copied()
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            SemanticClass::Background => "background",
            SemanticClass::Contours => "contours",
            SemanticClass::Built => "built",
            SemanticClass::NonBuilt => "non_built",
            SemanticClass::Water => "water",
            SemanticClass::Road => "road",
        }
    }
}

/// Per-pixel class labels, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SemanticMask {
    width: u32,
    height: u32,
    labels: Vec<u8>,
}

impl SemanticMask {
    pub fn new(width: u32, height: u32, labels: Vec<u8>) -> Result<Self, IngestError> {
        if labels.len() != width as usize * height as usize {
            return Err(IngestError::CountMismatch {
                expected: width as usize * height as usize,
                found: labels.len(),
            });
        }
        if let Some(i) = labels.iter().position(|&v| v as usize >= N_CLASSES) {
            return Err(IngestError::BadLabelValue {
                value: labels[i],
                x: (i % width as usize) as u32,
                y: (i / width as usize) as u32,
            });
        }
        Ok(Self {
            width,
            height,
            labels,
        })
    }

    pub fn filled(width: u32, height: u32, class: SemanticClass) -> Self {
        Self {
            width,
            height,
            labels: vec![class as u8; width as usize * height as usize],
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> u8 {
        self.labels[y as usize * self.width as usize + x as usize]
    }

    /// Panics on an out-of-range pixel.
    pub fn set(&mut self, x: u32, y: u32, class: SemanticClass) {
        let w = self.width as usize;
        self.labels[y as usize * w + x as usize] = class as u8;
    }

    /// Pixel count per class inside `[x0, x1) × [y0, y1)` (clipped).
    pub fn class_counts_in(&self, x0: i64, y0: i64, x1: i64, y1: i64) -> [u64; N_CLASSES] {
        let mut counts = [0u64; N_CLASSES];
        let xa = x0.clamp(0, self.width as i64) as usize;
        let xb = x1.clamp(0, self.width as i64) as usize;
        let ya = y0.clamp(0, self.height as i64) as usize;
        let yb = y1.clamp(0, self.height as i64) as usize;
        for y in ya..yb {
            let row = &self.labels[y * self.width as usize..(y + 1) * self.width as usize];
            for &v in &row[xa..xb] {
                counts[v as usize] += 1;
            }
        }
        counts
    }

    /// Share of each class over the whole mask.
    pub fn class_shares(&self) -> [f64; N_CLASSES] {
        shares(&self.class_counts_in(0, 0, self.width as i64, self.height as i64))
    }

    /// Horizontally mirrored copy.
    pub fn mirrored(&self) -> Self {
        let w = self.width as usize;
        let mut labels = self.labels.clone();
        for row in labels.chunks_exact_mut(w) {
            row.reverse();
        }
        Self {
            labels,
            ..self.clone()
        }
    }
}

/// Normalize counts to a simplex; an empty count vector maps to all-background.
pub fn shares(counts: &[u64; N_CLASSES]) -> [f64; N_CLASSES] {
    let total: u64 = counts.iter().sum();
    let mut out = [0.0; N_CLASSES];
    if total == 0 {
        out[0] = 1.0;
        return out;
    }
    for (o, &c) in out.iter_mut().zip(counts) {
        *o = c as f64 / total as f64;
    }
    out
}

/// Read a single-channel 8-bit label image.
pub fn load_mask(path: impl AsRef<Path>) -> Result<SemanticMask, IngestError> {
    let path = path.as_ref();
    let img = image::ImageReader::open(path)
        .map_err(|e| IngestError::io(path, e))?
        .decode()
        .map_err(|e| IngestError::Image(e.to_string()))?;
    match img {
        DynamicImage::ImageLuma8(g) => {
            let (w, h) = g.dimensions();
            SemanticMask::new(w, h, g.into_raw())
        }
        _ => Err(IngestError::NotGrayscale),
    }
}

pub fn write_mask(mask: &SemanticMask, path: impl AsRef<Path>) -> Result<(), IngestError> {
    let img = GrayImage::from_raw(mask.width, mask.height, mask.labels.clone())
        .expect("mask buffer has matching dimensions");
    img.save(path.as_ref())
        .map_err(|e| IngestError::Image(e.to_string()))
}
