use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::dataset::Dataset;
use super::error::IngestError;

/// Required metadata columns, in file order.
pub const METADATA_COLUMNS: [&str; 13] = [
    "map_id",
    "image_path",
    "mask_path",
    "year",
    "year_lo",
    "year_hi",
    "scale_denominator",
    "lat",
    "lon",
    "city",
    "country",
    "creators",
    "domestic",
];

/// A coverage footprint: center plus area in square degrees (0 for points).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverageGeom {
    pub center: (f64, f64),
    pub area_deg2: f64,
}

/// One catalog entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapRecord {
    pub map_id: String,
    pub image_path: PathBuf,
    pub mask_path: Option<PathBuf>,
    /// Publication year; the midpoint when only a range is known.
    pub year: i32,
    pub year_range: Option<(i32, i32)>,
    /// `S` in a `1:S` scale.
    pub scale_denominator: Option<f64>,
    pub pub_place: Option<(f64, f64)>,
    pub pub_city: Option<String>,
    pub pub_country: Option<String>,
    pub creators: Vec<String>,
    pub coverage: Vec<CoverageGeom>,
    pub domestic: Option<bool>,
    /// Series/atlas identifier shared by images of one record group.
    pub group_id: Option<String>,
}

impl MapRecord {
    /// Minimal record, mostly for tests and synthetic corpora.
    pub fn new(map_id: impl Into<String>, image_path: impl Into<PathBuf>, year: i32) -> Self {
        Self {
            map_id: map_id.into(),
            image_path: image_path.into(),
            mask_path: None,
            year,
            year_range: None,
            scale_denominator: None,
            pub_place: None,
            pub_city: None,
            pub_country: None,
            creators: Vec::new(),
            coverage: Vec::new(),
            domestic: None,
            group_id: None,
        }
    }
}

/// Result of [`load_metadata`]: the parsed dataset plus rejected rows.
#[derive(Debug)]
pub struct MetadataReport {
    pub dataset: Dataset,
    pub rejected: Vec<IngestError>,
}

/// Load catalog metadata from a CSV file, or JSONL when the extension is
/// `.jsonl`. Relative image and mask paths resolve against the file's
/// directory. Rows that fail validation are reported, never dropped silently.
pub fn load_metadata(path: impl AsRef<Path>) -> Result<MetadataReport, IngestError> {
    let path = path.as_ref();
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let rows = if path.extension().is_some_and(|e| e == "jsonl") {
        read_jsonl_rows(path)?
    } else {
        read_csv_rows(path)?
    };

    let mut records = BTreeMap::new();
    let mut rejected = Vec::new();
    for (row_no, row) in rows {
        match parse_record(row_no, &row, &base) {
            Ok(rec) => {
                if records.contains_key(&rec.map_id) {
                    rejected.push(IngestError::DuplicateMapId {
                        row: row_no,
                        map_id: rec.map_id,
                    });
                } else {
                    records.insert(rec.map_id.clone(), rec);
                }
            }
            Err(e) => rejected.push(e),
        }
    }
    Ok(MetadataReport {
        dataset: Dataset::new(records),
        rejected,
    })
}

type Row = HashMap<String, String>;

fn read_csv_rows(path: &Path) -> Result<Vec<(usize, Row)>, IngestError> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_open_error(path, e))?;
    let headers: Vec<String> = rdr
        .headers()
        .map_err(|e| IngestError::csv(path, e))?
        .iter()
        .map(str::to_string)
        .collect();
    for col in METADATA_COLUMNS {
        if !headers.iter().any(|h| h == col) {
            return Err(IngestError::MissingColumn(col.to_string()));
        }
    }
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| IngestError::csv(path, e))?;
        let row: Row = headers
            .iter()
            .cloned()
            .zip(rec.iter().map(str::to_string))
            .collect();
        // 1-based data row number, header excluded
        out.push((i + 1, row));
    }
    Ok(out)
}

fn read_jsonl_rows(path: &Path) -> Result<Vec<(usize, Row)>, IngestError> {
    let text = std::fs::read_to_string(path).map_err(|e| IngestError::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value =
            serde_json::from_str(line).map_err(|e| IngestError::csv(path, e))?;
        let obj = value
            .as_object()
            .ok_or_else(|| IngestError::csv(path, format!("line {} is not an object", i + 1)))?;
        let mut row = Row::new();
        for (k, v) in obj {
            let s = match v {
                serde_json::Value::Null => String::new(),
                serde_json::Value::String(s) => s.clone(),
                serde_json::Value::Array(items) => items
                    .iter()
                    .map(|x| x.as_str().map(str::to_string).unwrap_or_else(|| x.to_string()))
                    .collect::<Vec<_>>()
                    .join(";"),
                other => other.to_string(),
            };
            row.insert(k.clone(), s);
        }
        for col in ["map_id", "image_path", "year"] {
            if !row.contains_key(col) {
                return Err(IngestError::MissingColumn(col.to_string()));
            }
        }
        out.push((i + 1, row));
    }
    Ok(out)
}

fn csv_open_error(path: &Path, e: csv::Error) -> IngestError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => IngestError::io(path, io),
        other => IngestError::csv(path, format!("{other:?}")),
    }
}

fn field<'a>(row: &'a Row, col: &str) -> &'a str {
    row.get(col).map(String::as_str).unwrap_or("").trim()
}

fn opt_field<'a>(row: &'a Row, col: &str) -> Option<&'a str> {
    let v = field(row, col);
    (!v.is_empty()).then_some(v)
}

fn parse_year(row_no: usize, s: &str) -> Result<i32, IngestError> {
    s.parse::<i32>().map_err(|_| IngestError::BadYear {
        row: row_no,
        value: s.to_string(),
    })
}

fn resolve(base: &Path, p: &str) -> PathBuf {
    let p = PathBuf::from(p);
    if p.is_absolute() {
        p
    } else {
        base.join(p)
    }
}

fn parse_record(row_no: usize, row: &Row, base: &Path) -> Result<MapRecord, IngestError> {
    let map_id = field(row, "map_id").to_string();
    if map_id.is_empty() {
        return Err(IngestError::BadField {
            row: row_no,
            column: "map_id".into(),
            value: String::new(),
        });
    }

    let lo = opt_field(row, "year_lo").map(|s| parse_year(row_no, s)).transpose()?;
    let hi = opt_field(row, "year_hi").map(|s| parse_year(row_no, s)).transpose()?;
    let year_range = match (lo, hi) {
        (Some(lo), Some(hi)) if lo <= hi => Some((lo, hi)),
        (None, None) => None,
        _ => {
            return Err(IngestError::BadYear {
                row: row_no,
                value: format!("{}..{}", field(row, "year_lo"), field(row, "year_hi")),
            })
        }
    };
    let year = match (opt_field(row, "year"), year_range) {
        (Some(s), _) => parse_year(row_no, s)?,
        (None, Some((lo, hi))) => lo + (hi - lo) / 2,
        (None, None) => {
            return Err(IngestError::BadYear {
                row: row_no,
                value: String::new(),
            })
        }
    };
    if let Some((lo, hi)) = year_range {
        if year < lo || year > hi {
            return Err(IngestError::BadYear {
                row: row_no,
                value: format!("{year} outside {lo}..{hi}"),
            });
        }
    }

    let scale_denominator = match opt_field(row, "scale_denominator") {
        None => None,
        Some(s) => match s.parse::<f64>() {
            Ok(v) if v > 0.0 && v.is_finite() => Some(v),
            _ => {
                return Err(IngestError::BadField {
                    row: row_no,
                    column: "scale_denominator".into(),
                    value: s.to_string(),
                })
            }
        },
    };

    let pub_place = match (opt_field(row, "lat"), opt_field(row, "lon")) {
        (None, None) => None,
        (lat, lon) => {
            let bad = || IngestError::BadLatLon {
                row: row_no,
                lat: lat.unwrap_or("").to_string(),
                lon: lon.unwrap_or("").to_string(),
            };
            let la = lat.and_then(|s| s.parse::<f64>().ok()).ok_or_else(bad)?;
            let lo = lon.and_then(|s| s.parse::<f64>().ok()).ok_or_else(bad)?;
            if !(-90.0..=90.0).contains(&la) || !(-180.0..=180.0).contains(&lo) {
                return Err(bad());
            }
            Some((la, lo))
        }
    };

    let domestic = match opt_field(row, "domestic").map(str::to_ascii_lowercase).as_deref() {
        None => None,
        Some("true" | "1" | "yes") => Some(true),
        Some("false" | "0" | "no") => Some(false),
        Some(other) => {
            return Err(IngestError::BadField {
                row: row_no,
                column: "domestic".into(),
                value: other.to_string(),
            })
        }
    };

    let mut creators: Vec<String> = field(row, "creators")
        .split(';')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect();
    creators.sort();
    creators.dedup();

    Ok(MapRecord {
        map_id,
        image_path: resolve(base, field(row, "image_path")),
        mask_path: opt_field(row, "mask_path").map(|p| resolve(base, p)),
        year,
        year_range,
        scale_denominator,
        pub_place,
        pub_city: opt_field(row, "city").map(str::to_string),
        pub_country: opt_field(row, "country").map(str::to_string),
        creators,
        coverage: Vec::new(),
        domestic,
        group_id: opt_field(row, "group_id").map(str::to_string),
    })
}

/// Attach coverage geometries (`map_id,lat,lon,area_deg2`) to a dataset.
/// Rows naming unknown maps or carrying invalid geometry are returned.
pub fn load_coverage(
    path: impl AsRef<Path>,
    dataset: &mut Dataset,
) -> Result<Vec<IngestError>, IngestError> {
    let path = path.as_ref();
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_open_error(path, e))?;
    let headers = rdr.headers().map_err(|e| IngestError::csv(path, e))?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| IngestError::MissingColumn(name.to_string()))
    };
    let (ci, clat, clon, carea) = (col("map_id")?, col("lat")?, col("lon")?, col("area_deg2")?);

    let mut geoms: BTreeMap<String, Vec<CoverageGeom>> = BTreeMap::new();
    let mut rejected = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| IngestError::csv(path, e))?;
        let map_id = rec.get(ci).unwrap_or("").to_string();
        if !dataset.records.contains_key(&map_id) {
            rejected.push(IngestError::UnknownMap { row, map_id });
            continue;
        }
        let lat = rec.get(clat).and_then(|s| s.parse::<f64>().ok());
        let lon = rec.get(clon).and_then(|s| s.parse::<f64>().ok());
        let (lat, lon) = match (lat, lon) {
            (Some(a), Some(b)) if (-90.0..=90.0).contains(&a) && (-180.0..=180.0).contains(&b) => {
                (a, b)
            }
            _ => {
                rejected.push(IngestError::BadLatLon {
                    row,
                    lat: rec.get(clat).unwrap_or("").into(),
                    lon: rec.get(clon).unwrap_or("").into(),
                });
                continue;
            }
        };
        let area = match rec.get(carea).and_then(|s| s.parse::<f64>().ok()) {
            Some(a) if a >= 0.0 && a.is_finite() => a,
            _ => {
                rejected.push(IngestError::BadField {
                    row,
                    column: "area_deg2".into(),
                    value: rec.get(carea).unwrap_or("").into(),
                });
                continue;
            }
        };
        geoms.entry(map_id).or_default().push(CoverageGeom {
            center: (lat, lon),
            area_deg2: area,
        });
    }
    for (id, g) in geoms {
        if let Some(r) = dataset.records.get_mut(&id) {
            r.coverage = g;
        }
    }
    Ok(rejected)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    const HEADER: &str =
        "map_id,image_path,mask_path,year,year_lo,year_hi,scale_denominator,lat,lon,city,country,creators,domestic\n";

    fn write_tmp(dir: &tempfile::TempDir, name: &str, body: &str) -> PathBuf {
        let p = dir.path().join(name);
        std::fs::File::create(&p).unwrap().write_all(body.as_bytes()).unwrap();
        p
    }

    #[test]
    fn three_valid_rows() {
        let dir = tempfile::tempdir().unwrap();
        let body = format!(
            "{HEADER}a,a.png,,1850,,,10000,48.85,2.35,Paris,FRA,X;Y,true\n\
             b,b.png,b_mask.png,,1700,1710,,,,,,,\n\
             c,c.png,,1900,,,25000,40.7,-74.0,New York,USA,Z,false\n"
        );
        let p = write_tmp(&dir, "meta.csv", &body);
        let rep = load_metadata(&p).unwrap();
        assert!(rep.rejected.is_empty(), "{:?}", rep.rejected);
        assert_eq!(rep.dataset.records.len(), 3);
        let b = &rep.dataset.records["b"];
        assert_eq!(b.year, 1705);
        assert_eq!(b.year_range, Some((1700, 1710)));
        assert_eq!(b.mask_path.as_deref(), Some(dir.path().join("b_mask.png").as_path()));
        assert_eq!(rep.dataset.records["a"].creators, vec!["X", "Y"]);
    }

    #[test]
    fn bad_year_and_bad_latlon_are_reported_with_row() {
        let dir = tempfile::tempdir().unwrap();
        let body = format!(
            "{HEADER}a,a.png,,185?,,,,,,,,,\n\
             b,b.png,,1850,,,,91,0,,,,\n\
             c,c.png,,1850,,,,,,,,,\n"
        );
        let p = write_tmp(&dir, "meta.csv", &body);
        let rep = load_metadata(&p).unwrap();
        assert_eq!(rep.dataset.records.len(), 1);
        assert!(matches!(rep.rejected[0], IngestError::BadYear { row: 1, .. }));
        assert!(matches!(rep.rejected[1], IngestError::BadLatLon { row: 2, .. }));
    }

    #[test]
    fn missing_column_is_fatal() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_tmp(&dir, "meta.csv", "map_id,image_path,year\na,a.png,1800\n");
        assert!(matches!(
            load_metadata(&p),
            Err(IngestError::MissingColumn(c)) if c == "mask_path"
        ));
    }

    #[test]
    fn row_order_does_not_matter() {
        let dir = tempfile::tempdir().unwrap();
        let r1 = "a,a.png,,1850,,,,,,,,,\n";
        let r2 = "b,b.png,,1860,,,,,,,,,\n";
        let p1 = write_tmp(&dir, "m1.csv", &format!("{HEADER}{r1}{r2}"));
        let p2 = write_tmp(&dir, "m2.csv", &format!("{HEADER}{r2}{r1}"));
        assert_eq!(
            load_metadata(&p1).unwrap().dataset,
            load_metadata(&p2).unwrap().dataset
        );
    }

    #[test]
    fn jsonl_metadata() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_tmp(
            &dir,
            "meta.jsonl",
            "{\"map_id\":\"a\",\"image_path\":\"a.png\",\"year\":1800,\"creators\":[\"X\",\"Y\"]}\n",
        );
        let rep = load_metadata(&p).unwrap();
        assert_eq!(rep.dataset.records["a"].creators.len(), 2);
    }

    #[test]
    fn coverage_rows_attach_and_unknown_maps_report() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_tmp(&dir, "meta.csv", &format!("{HEADER}a,a.png,,1850,,,,,,,,,\n"));
        let mut ds = load_metadata(&p).unwrap().dataset;
        let c = write_tmp(
            &dir,
            "cov.csv",
            "map_id,lat,lon,area_deg2\na,46.5,6.6,0\na,47,7,2.5\nzz,0,0,1\n",
        );
        let rej = load_coverage(&c, &mut ds).unwrap();
        assert_eq!(ds.records["a"].coverage.len(), 2);
        assert!(matches!(rej[0], IngestError::UnknownMap { .. }));
    }
}
