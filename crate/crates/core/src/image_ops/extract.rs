use std::io::Write as _;
use std::path::Path;

use image::RgbImage;
use serde::{Deserialize, Serialize};

use super::edges::graphic_load;
use super::features::{cv_features, FeatureVector};
use super::filter::{bilateral_smooth, luminance, rotate_crop};
use super::orientation::principal_orientation;
use super::sampling::{sample_mapel_positions, BackgroundMask, SamplingParams};
use super::ImageOpsError;
use crate::model::{load_mask, shares, EmbeddingTable, MapRecord, SemanticMask, N_CLASSES};
use crate::rng::key_seed;
use crate::vectors::Vectors;

const WHITE: [u8; 3] = [255, 255, 255];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub enum MapelSize {
    S49,
    S70,
    S98,
}

impl MapelSize {
    pub fn px(self) -> u32 {
        match self {
            MapelSize::S49 => 49,
            MapelSize::S70 => 70,
            MapelSize::S98 => 98,
        }
    }
}

impl TryFrom<u32> for MapelSize {
    type Error = String;

    fn try_from(v: u32) -> Result<Self, Self::Error> {
        match v {
            49 => Ok(MapelSize::S49),
            70 => Ok(MapelSize::S70),
            98 => Ok(MapelSize::S98),
            _ => Err(format!("mapel size must be 49, 70 or 98, got {v}")),
        }
    }
}

impl From<MapelSize> for u32 {
    fn from(s: MapelSize) -> u32 {
        s.px()
    }
}

/// Coarse semantic composition of a mapel. Modes overlap; a mapel carries
/// the first one (in numeric order) whose condition holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
#[repr(u8)]
pub enum SemanticMode {
    Built = 1,
    NonBuilt = 2,
    Water = 3,
    Road = 4,
    BuiltNonBuilt = 5,
    WaterNonBuilt = 6,
    RoadNonBuilt = 7,
    Boundary = 8,
}

impl SemanticMode {
    pub const ALL: [SemanticMode; 8] = [
        SemanticMode::Built,
        SemanticMode::NonBuilt,
        SemanticMode::Water,
        SemanticMode::Road,
        SemanticMode::BuiltNonBuilt,
        SemanticMode::WaterNonBuilt,
        SemanticMode::RoadNonBuilt,
        SemanticMode::Boundary,
    ];

    pub fn number(self) -> u8 {
        self as u8
    }

    /// Whether the class shares (`background, contours, built, non_built,
    /// water, road`) satisfy this mode.
    pub fn holds(self, r: &[f64; N_CLASSES]) -> bool {
        let (contours, built, non_built, water, road) = (r[1], r[2], r[3], r[4], r[5]);
        match self {
            SemanticMode::Built => built > 0.9,
            SemanticMode::NonBuilt => non_built > 0.9,
            SemanticMode::Water => water > 0.9,
            SemanticMode::Road => road > 0.9,
            SemanticMode::BuiltNonBuilt => built > 0.3 && non_built > 0.3,
            SemanticMode::WaterNonBuilt => water > 0.3 && non_built > 0.3,
            SemanticMode::RoadNonBuilt => road > 0.3 && non_built > 0.3,
            SemanticMode::Boundary => contours > 0.04,
        }
    }

    pub fn matching(r: &[f64; N_CLASSES]) -> Vec<SemanticMode> {
        Self::ALL.into_iter().filter(|m| m.holds(r)).collect()
    }

    pub fn assign(r: &[f64; N_CLASSES]) -> Option<SemanticMode> {
        Self::ALL.into_iter().find(|m| m.holds(r))
    }
}

impl TryFrom<u8> for SemanticMode {
    type Error = String;

    fn try_from(v: u8) -> Result<Self, Self::Error> {
        Self::ALL
            .get((v as usize).wrapping_sub(1))
            .copied()
            .ok_or_else(|| format!("semantic mode must be 1..=8, got {v}"))
    }
}

impl From<SemanticMode> for u8 {
    fn from(m: SemanticMode) -> u8 {
        m as u8
    }
}

/// A map element cut out at a graphic-load maximum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mapel {
    pub map_id: String,
    pub idx: usize,
    pub center: (u32, u32),
    pub size: MapelSize,
    /// Stroke direction before neutralization.
    pub orientation_deg: f64,
    pub features: Option<FeatureVector>,
    pub embedding_id: Option<String>,
    pub cluster_id: Option<u32>,
    pub semantic_ratio: Option<[f64; N_CLASSES]>,
    pub semantic_mode: Option<SemanticMode>,
}

impl Mapel {
    pub fn key(&self) -> String {
        format!("{}:{}", self.map_id, self.idx)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MapelParams {
    pub size: MapelSize,
    pub cell_px: u32,
    pub spatial_sigma: f32,
    /// Unit intensity scale.
    pub range_sigma: f32,
    /// Cells with a lower graphic load count as blank.
    pub blank_threshold: f64,
    pub sampling: SamplingParams,
}

impl Default for MapelParams {
    fn default() -> Self {
        Self {
            size: MapelSize::S49,
            cell_px: 32,
            spatial_sigma: 3.0,
            range_sigma: 25.0 / 255.0,
            blank_threshold: 0.005,
            sampling: SamplingParams::default(),
        }
    }
}

/// Square of side `size` centred on `center` after undoing the stroke
/// rotation `orientation_deg`.
pub fn neutralized_patch(smoothed: &RgbImage, center: (u32, u32), orientation_deg: f64, size: u32) -> RgbImage {
    rotate_crop(
        smoothed,
        (center.0 as f32, center.1 as f32),
        -orientation_deg as f32,
        size,
        WHITE,
    )
}

fn semantic_ratio(mask: &SemanticMask, center: (u32, u32), size: u32) -> [f64; N_CLASSES] {
    let x0 = center.0 as i64 - (size / 2) as i64;
    let y0 = center.1 as i64 - (size / 2) as i64;
    shares(&mask.class_counts_in(x0, y0, x0 + size as i64, y0 + size as i64))
}

/// Run the extraction pipeline on an in-memory image. A page without any
/// graphic content yields no mapels; a mask leaving no foreground is an
/// error.
pub fn extract_from_image(
    map_id: &str,
    img: &RgbImage,
    mask: Option<&SemanticMask>,
    params: &MapelParams,
) -> Result<Vec<Mapel>, ImageOpsError> {
    let (w, h) = img.dimensions();
    if let Some(m) = mask {
        if (m.width(), m.height()) != (w, h) {
            return Err(ImageOpsError::ShapeMismatch {
                expected: (w, h),
                got: (m.width(), m.height()),
            });
        }
    }
    let smoothed = bilateral_smooth(img, params.spatial_sigma, params.range_sigma);
    let grid = graphic_load(&luminance(&smoothed), params.cell_px)?;
    if grid.values.iter().all(|&v| v < params.blank_threshold) {
        return Ok(Vec::new());
    }
    let mut background = BackgroundMask::from_blank_cells(&grid, params.blank_threshold, w, h);
    if let Some(m) = mask {
        background = background.union(&BackgroundMask::from_semantic(m, w, h));
    }
    let sampling = SamplingParams {
        seed: key_seed(params.sampling.seed, map_id),
        ..params.sampling
    };
    let positions = sample_mapel_positions(&grid, &background, &sampling)?;
    let size = params.size.px();

    Ok(positions
        .into_iter()
        .enumerate()
        .map(|(idx, center)| {
            let raw = rotate_crop(&smoothed, (center.0 as f32, center.1 as f32), 0.0, size, WHITE);
            let orientation_deg = principal_orientation(&luminance(&raw)).degrees;
            let patch = neutralized_patch(&smoothed, center, orientation_deg, size);
            let semantic_ratio = mask.map(|m| semantic_ratio(m, center, size));
            Mapel {
                map_id: map_id.to_string(),
                idx,
                center,
                size: params.size,
                orientation_deg,
                features: Some(cv_features(&patch)),
                embedding_id: Some(format!("{map_id}:{idx}")),
                cluster_id: None,
                semantic_mode: semantic_ratio.as_ref().and_then(SemanticMode::assign),
                semantic_ratio,
            }
        })
        .collect())
}

/// Load a record's image (and mask, if any) and extract its mapels.
pub fn extract_mapels(record: &MapRecord, params: &MapelParams) -> Result<Vec<Mapel>, ImageOpsError> {
    let img = image::open(&record.image_path)
        .map_err(|e| ImageOpsError::Io(format!("{}: {e}", record.image_path.display())))?
        .to_rgb8();
    let mask = match &record.mask_path {
        Some(p) => Some(load_mask(p).map_err(|e| ImageOpsError::Io(e.to_string()))?),
        None => None,
    };
    extract_from_image(&record.map_id, &img, mask.as_ref(), params)
}

/// Flattened feature vectors keyed `map_id:idx`, for mapels that carry
/// features.
pub fn mapel_feature_table(mapels: &[Mapel]) -> EmbeddingTable {
    let with: Vec<&Mapel> = mapels.iter().filter(|m| m.features.is_some()).collect();
    let rows: Vec<Vec<f64>> = with.iter().map(|m| m.features.as_ref().unwrap().flatten()).collect();
    let ids = with.iter().map(|m| m.key()).collect();
    let v = if rows.is_empty() {
        Vectors::zeros(0, FeatureVector::LEN)
    } else {
        Vectors::from_rows(&rows)
    };
    EmbeddingTable::from_vectors(ids, &v).expect("features are finite and keys unique")
}

#[derive(Debug, Serialize, Deserialize)]
struct SidecarRow {
    map_id: String,
    idx: usize,
    x: u32,
    y: u32,
    size: u32,
    orientation_deg: f64,
    semantic_mode: Option<u8>,
    ratio_bg: Option<f64>,
    ratio_contours: Option<f64>,
    ratio_built: Option<f64>,
    ratio_non_built: Option<f64>,
    ratio_water: Option<f64>,
    ratio_road: Option<f64>,
}

/// Write the per-map mapel CSV, optionally preceded by a `#` comment line.
pub fn write_mapel_sidecar(path: impl AsRef<Path>, mapels: &[Mapel], comment: Option<&str>) -> Result<(), ImageOpsError> {
    let io = |e: &dyn std::fmt::Display| ImageOpsError::Io(e.to_string());
    let mut file = std::fs::File::create(path.as_ref()).map_err(|e| io(&e))?;
    if let Some(c) = comment {
        writeln!(file, "# {c}").map_err(|e| io(&e))?;
    }
    let mut w = csv::Writer::from_writer(file);
    for m in mapels {
        let r = m.semantic_ratio;
        w.serialize(SidecarRow {
            map_id: m.map_id.clone(),
            idx: m.idx,
            x: m.center.0,
            y: m.center.1,
            size: m.size.px(),
            orientation_deg: m.orientation_deg,
            semantic_mode: m.semantic_mode.map(u8::from),
            ratio_bg: r.map(|r| r[0]),
            ratio_contours: r.map(|r| r[1]),
            ratio_built: r.map(|r| r[2]),
            ratio_non_built: r.map(|r| r[3]),
            ratio_water: r.map(|r| r[4]),
            ratio_road: r.map(|r| r[5]),
        })
        .map_err(|e| io(&e))?;
    }
    w.flush().map_err(|e| io(&e))
}

pub fn read_mapel_sidecar(path: impl AsRef<Path>) -> Result<Vec<Mapel>, ImageOpsError> {
    let io = |e: &dyn std::fmt::Display| ImageOpsError::Io(e.to_string());
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path.as_ref())
        .map_err(|e| io(&e))?;
    let mut out = Vec::new();
    for row in rdr.deserialize::<SidecarRow>() {
        let r = row.map_err(|e| io(&e))?;
        let ratios = [r.ratio_bg, r.ratio_contours, r.ratio_built, r.ratio_non_built, r.ratio_water, r.ratio_road];
        let semantic_ratio = if ratios.iter().all(Option::is_some) {
            Some(ratios.map(Option::unwrap))
        } else {
            None
        };
        out.push(Mapel {
            embedding_id: Some(format!("{}:{}", r.map_id, r.idx)),
            map_id: r.map_id,
            idx: r.idx,
            center: (r.x, r.y),
            size: MapelSize::try_from(r.size).map_err(ImageOpsError::InvalidParam)?,
            orientation_deg: r.orientation_deg,
            features: None,
            cluster_id: None,
            semantic_ratio,
            semantic_mode: r
                .semantic_mode
                .map(SemanticMode::try_from)
                .transpose()
                .map_err(ImageOpsError::InvalidParam)?,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SemanticClass;
    use image::Rgb;

    fn hatched_square(w: u32, h: u32, x0: u32, y0: u32, side: u32) -> RgbImage {
        RgbImage::from_fn(w, h, |x, y| {
            let inside = x >= x0 && x < x0 + side && y >= y0 && y < y0 + side;
            if inside && (x + y) % 6 < 2 {
                Rgb([0, 0, 0])
            } else {
                Rgb([255, 255, 255])
            }
        })
    }

    #[test]
    fn blank_page_yields_nothing() {
        let img = RgbImage::from_pixel(200, 200, Rgb([250, 248, 240]));
        assert!(extract_from_image("b", &img, None, &MapelParams::default()).unwrap().is_empty());
    }

    #[test]
    fn mapels_fall_inside_the_hatched_square() {
        let img = hatched_square(480, 480, 128, 160, 224);
        let params = MapelParams::default();
        let mapels = extract_from_image("h", &img, None, &params).unwrap();
        assert!(!mapels.is_empty());
        for m in &mapels {
            let (x, y) = m.center;
            assert!((128..352).contains(&x) && (160..384).contains(&y), "{:?}", m.center);
            assert!((0.0..180.0).contains(&m.orientation_deg));
            let f = m.features.as_ref().unwrap();
            assert!((f.color_hist.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn all_water_mask_gives_mode_three() {
        let img = hatched_square(256, 256, 0, 0, 256);
        let mask = SemanticMask::filled(256, 256, SemanticClass::Water);
        let mapels = extract_from_image("w", &img, Some(&mask), &MapelParams::default()).unwrap();
        assert!(!mapels.is_empty());
        for m in &mapels {
            assert_eq!(m.semantic_ratio.unwrap()[SemanticClass::Water.index()], 1.0);
            assert_eq!(m.semantic_mode, Some(SemanticMode::Water));
        }
    }

    #[test]
    fn mode_assignment_prefers_lower_numbers() {
        // 45% built, 45% non-built, 10% contours: modes 5 and 8 both hold
        let r = [0.0, 0.1, 0.45, 0.45, 0.0, 0.0];
        assert_eq!(SemanticMode::matching(&r), vec![SemanticMode::BuiltNonBuilt, SemanticMode::Boundary]);
        assert_eq!(SemanticMode::assign(&r), Some(SemanticMode::BuiltNonBuilt));
        assert_eq!(SemanticMode::assign(&[1.0, 0.0, 0.0, 0.0, 0.0, 0.0]), None);
    }

    #[test]
    fn sidecar_round_trip() {
        let img = hatched_square(256, 256, 0, 0, 256);
        let mut mask = SemanticMask::filled(256, 256, SemanticClass::Built);
        for y in 0..256 {
            for x in 0..128 {
                mask.set(x, y, SemanticClass::NonBuilt);
            }
        }
        let mapels = extract_from_image("s", &img, Some(&mask), &MapelParams::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.csv");
        write_mapel_sidecar(&p, &mapels, Some("provenance test")).unwrap();
        let back = read_mapel_sidecar(&p).unwrap();
        assert_eq!(back.len(), mapels.len());
        for (a, b) in mapels.iter().zip(&back) {
            assert_eq!(a.center, b.center);
            assert_eq!(a.orientation_deg, b.orientation_deg);
            assert_eq!(a.semantic_mode, b.semantic_mode);
            assert_eq!(a.semantic_ratio, b.semantic_ratio);
        }
        let table = mapel_feature_table(&mapels);
        assert_eq!(table.len(), mapels.len());
        assert_eq!(table.dim(), FeatureVector::LEN);
    }
}
