use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::error::IngestError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
    pub score: f64,
    pub cluster_id: Option<u32>,
    pub class_label: Option<String>,
}

/// Sign detections of one map.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DetectionSet {
    pub map_id: String,
    pub boxes: Vec<Detection>,
}

impl DetectionSet {
    /// Indices of boxes extending outside a `width × height` image.
    pub fn out_of_bounds(&self, width: u32, height: u32) -> Vec<usize> {
        self.boxes
            .iter()
            .enumerate()
            .filter(|(_, b)| {
                b.x < 0.0 || b.y < 0.0 || b.x + b.w > width as f64 || b.y + b.h > height as f64
            })
            .map(|(i, _)| i)
            .collect()
    }
}

/// Load a detection CSV (`map_id,x,y,w,h,score[,cluster_id][,class]`),
/// grouped by map. When `image_dims` knows a map, its boxes are checked
/// against the image bounds.
pub fn load_detections(
    path: impl AsRef<Path>,
    image_dims: &BTreeMap<String, (u32, u32)>,
) -> Result<BTreeMap<String, DetectionSet>, IngestError> {
    let path = path.as_ref();
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| IngestError::csv(path, e))?;
    let headers = rdr.headers().map_err(|e| IngestError::csv(path, e))?.clone();
    let pos = |name: &str| headers.iter().position(|h| h == name);
    let mut cols = [0usize; 6];
    for (slot, name) in cols.iter_mut().zip(["map_id", "x", "y", "w", "h", "score"]) {
        *slot = pos(name).ok_or_else(|| IngestError::MissingColumn(name.into()))?;
    }
    let ccluster = pos("cluster_id");
    let cclass = pos("class");

    let mut out: BTreeMap<String, DetectionSet> = BTreeMap::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| IngestError::csv(path, e))?;
        let num = |c: usize, name: &str| -> Result<f64, IngestError> {
            let s = rec.get(c).unwrap_or("");
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| IngestError::BadField {
                    row,
                    column: name.into(),
                    value: s.into(),
                })
        };
        let map_id = rec.get(cols[0]).unwrap_or("").to_string();
        let (x, y, w, h, score) = (
            num(cols[1], "x")?,
            num(cols[2], "y")?,
            num(cols[3], "w")?,
            num(cols[4], "h")?,
            num(cols[5], "score")?,
        );
        if w < 0.0 || h < 0.0 {
            return Err(IngestError::NegativeExtent { row });
        }
        if !(0.0..=1.0).contains(&score) {
            return Err(IngestError::ScoreOutOfRange { row, score });
        }
        if let Some(&(iw, ih)) = image_dims.get(&map_id) {
            if x < 0.0 || y < 0.0 || x + w > iw as f64 || y + h > ih as f64 {
                return Err(IngestError::OutOfBounds {
                    row,
                    width: iw,
                    height: ih,
                });
            }
        }
        let cluster_id = match ccluster.and_then(|c| rec.get(c)).filter(|s| !s.is_empty()) {
            None => None,
            Some(s) => Some(s.parse::<u32>().map_err(|_| IngestError::BadField {
                row,
                column: "cluster_id".into(),
                value: s.into(),
            })?),
        };
        let class_label = cclass
            .and_then(|c| rec.get(c))
            .filter(|s| !s.is_empty())
            .map(str::to_string);
        out.entry(map_id.clone())
            .or_insert_with(|| DetectionSet {
                map_id,
                boxes: Vec::new(),
            })
            .boxes
            .push(Detection {
                x,
                y,
                w,
                h,
                score,
                cluster_id,
                class_label,
            });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn load(body: &str) -> Result<BTreeMap<String, DetectionSet>, IngestError> {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("det.csv");
        std::fs::write(&p, body).unwrap();
        let dims = BTreeMap::from([("m".to_string(), (100u32, 100u32))]);
        load_detections(&p, &dims)
    }

    #[test]
    fn single_box() {
        let sets = load("map_id,x,y,w,h,score\nm,10,10,20,20,0.9\n").unwrap();
        assert_eq!(sets["m"].boxes.len(), 1);
    }

    #[test]
    fn score_and_extent_errors() {
        assert!(matches!(
            load("map_id,x,y,w,h,score\nm,10,10,20,20,1.3\n"),
            Err(IngestError::ScoreOutOfRange { row: 1, .. })
        ));
        assert!(matches!(
            load("map_id,x,y,w,h,score\nm,10,10,-1,20,0.5\n"),
            Err(IngestError::NegativeExtent { row: 1 })
        ));
        assert!(matches!(
            load("map_id,x,y,w,h,score\nm,90,10,20,20,0.5\n"),
            Err(IngestError::OutOfBounds { .. })
        ));
    }

    #[test]
    fn optional_columns() {
        let sets = load("map_id,x,y,w,h,score,cluster_id,class\nm,1,1,2,2,0.5,7,tree\nq,1,1,2,2,0.5,,\n")
            .unwrap();
        assert_eq!(sets["m"].boxes[0].cluster_id, Some(7));
        assert_eq!(sets["m"].boxes[0].class_label.as_deref(), Some("tree"));
        assert_eq!(sets["q"].boxes[0].cluster_id, None);
    }
}
