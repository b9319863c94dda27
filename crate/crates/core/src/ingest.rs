//! CSV ingestion, column elimination and missing-value imputation.

use std::collections::HashMap;
use std::fs::File;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Label written into missing categorical text fields.
pub const UNKNOWN_REGION_LABEL: &str = "unknown regions";
/// Reserved code for missing integer categorical fields; displayed as [`UNKNOWN_REGION_LABEL`].
pub const UNKNOWN_REGION_CODE: i64 = -1;

/// Maximum fraction of data rows that may be skipped as malformed.
pub const MAX_SKIP_FRACTION: f64 = 0.01;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("schema error: {0}")]
    Schema(String),
    #[error("{skipped} of {total} rows are malformed (limit {limit:.0}%); first bad rows at lines {lines:?}", limit = MAX_SKIP_FRACTION * 100.0)]
    TooManyMalformed {
        skipped: usize,
        total: usize,
        lines: Vec<u64>,
    },
    #[error("cannot impute {column}: no record carries a value")]
    Imputation { column: &'static str },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawCrimeRecord {
    pub id: Option<String>,
    pub case_number: Option<String>,
    pub date_text: String,
    pub block: Option<String>,
    pub iucr: Option<String>,
    pub primary_type: String,
    pub description: Option<String>,
    pub location_description: Option<String>,
    pub arrest: bool,
    pub domestic: bool,
    pub beat: Option<i64>,
    pub district: Option<i64>,
    pub ward: Option<i64>,
    pub community_area: Option<i64>,
    pub fbi_code: Option<String>,
    pub x_coordinate: Option<f64>,
    pub y_coordinate: Option<f64>,
    pub year: Option<i64>,
    pub updated_on: Option<String>,
    pub latitude: Option<f64>,
    pub longitude: Option<f64>,
    pub location_text: Option<String>,
}

/// A record with the identifier, free-text and projected-coordinate columns removed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrunedRecord {
    pub date_text: String,
    pub primary_type: String,
    pub location_description: Option<String>,
    pub arrest: bool,
    pub domestic: bool,
    pub beat: Option<i64>,
    pub district: Option<i64>,
    pub ward: Option<i64>,
    pub community_area: Option<i64>,
    pub fbi_code: Option<String>,
    pub year: Option<i64>,
    pub latitude: Option<f64>,
    pub longitude: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedCsv {
    pub records: Vec<RawCrimeRecord>,
    /// 1-based line numbers of rows skipped as malformed.
    pub skipped_lines: Vec<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Column {
    Id,
    CaseNumber,
    Date,
    Block,
    Iucr,
    PrimaryType,
    Description,
    LocationDescription,
    Arrest,
    Domestic,
    Beat,
    District,
    Ward,
    CommunityArea,
    FbiCode,
    XCoordinate,
    YCoordinate,
    Year,
    UpdatedOn,
    Latitude,
    Longitude,
    Location,
}

const COLUMN_NAMES: [(&str, Column); 22] = [
    ("id", Column::Id),
    ("case number", Column::CaseNumber),
    ("date", Column::Date),
    ("block", Column::Block),
    ("iucr", Column::Iucr),
    ("primary type", Column::PrimaryType),
    ("description", Column::Description),
    ("location description", Column::LocationDescription),
    ("arrest", Column::Arrest),
    ("domestic", Column::Domestic),
    ("beat", Column::Beat),
    ("district", Column::District),
    ("ward", Column::Ward),
    ("community area", Column::CommunityArea),
    ("fbi code", Column::FbiCode),
    ("x coordinate", Column::XCoordinate),
    ("y coordinate", Column::YCoordinate),
    ("year", Column::Year),
    ("updated on", Column::UpdatedOn),
    ("latitude", Column::Latitude),
    ("longitude", Column::Longitude),
    ("location", Column::Location),
];

const REQUIRED: [(Column, &str); 4] = [
    (Column::Date, "Date"),
    (Column::PrimaryType, "Primary Type"),
    (Column::Latitude, "Latitude"),
    (Column::Longitude, "Longitude"),
];

pub fn parse_csv(path: impl AsRef<Path>) -> Result<ParsedCsv, IngestError> {
    let path = path.as_ref();
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|source| IngestError::Io {
            path: path.display().to_string(),
            source,
        })?;
    parse_csv_bytes(&bytes)
}

/// Parses CSV content already in memory. See [`parse_csv`].
pub fn parse_csv_bytes(bytes: &[u8]) -> Result<ParsedCsv, IngestError> {
    if bytes.iter().all(|b| b.is_ascii_whitespace()) {
        return Err(IngestError::Schema("file is empty".into()));
    }
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .has_headers(true)
        .from_reader(bytes);
    let header = reader
        .headers()
        .map_err(|e| IngestError::Schema(format!("unreadable header: {e}")))?
        .clone();

    let mut index: HashMap<Column, usize> = HashMap::new();
    for (i, name) in header.iter().enumerate() {
        let key = name.trim().to_lowercase();
        if let Some((_, col)) = COLUMN_NAMES.iter().find(|(n, _)| *n == key) {
            index.entry(*col).or_insert(i);
        }
    }
    for (col, name) in REQUIRED {
        if !index.contains_key(&col) {
            return Err(IngestError::Schema(format!("missing required column {name:?}")));
        }
    }

    let width = header.len();
    let mut records = Vec::new();
    let mut skipped_lines = Vec::new();
    let mut total = 0usize;
    for (row, result) in reader.records().enumerate() {
        total += 1;
        // header is line 1
        let fallback_line = row as u64 + 2;
        let record = match result {
            Ok(r) if r.len() == width => r,
            Ok(r) => {
                skipped_lines.push(r.position().map_or(fallback_line, |p| p.line()));
                continue;
            }
            Err(_) => {
                skipped_lines.push(fallback_line);
                continue;
            }
        };
        let field = |col: Column| -> Option<&str> {
            index
                .get(&col)
                .map(|&i| record.get(i).unwrap_or("").trim())
                .filter(|s| !s.is_empty())
        };
        let Some(primary_type) = field(Column::PrimaryType) else {
            skipped_lines.push(record.position().map_or(fallback_line, |p| p.line()));
            continue;
        };
        let text = |col| field(col).map(str::to_string);
        let int = |col| field(col).and_then(|s| s.parse::<i64>().ok());
        let float = |col| field(col).and_then(|s| s.parse::<f64>().ok()).filter(|v| v.is_finite());
        records.push(RawCrimeRecord {
            id: text(Column::Id),
            case_number: text(Column::CaseNumber),
            date_text: field(Column::Date).unwrap_or("").to_string(),
            block: text(Column::Block),
            iucr: text(Column::Iucr),
            primary_type: primary_type.to_string(),
            description: text(Column::Description),
            location_description: text(Column::LocationDescription),
            arrest: field(Column::Arrest).is_some_and(parse_bool),
            domestic: field(Column::Domestic).is_some_and(parse_bool),
            beat: int(Column::Beat),
            district: int(Column::District),
            ward: int(Column::Ward),
            community_area: int(Column::CommunityArea),
            fbi_code: text(Column::FbiCode),
            x_coordinate: float(Column::XCoordinate),
            y_coordinate: float(Column::YCoordinate),
            year: int(Column::Year),
            updated_on: text(Column::UpdatedOn),
            latitude: float(Column::Latitude).filter(|v| (-90.0..=90.0).contains(v)),
            longitude: float(Column::Longitude).filter(|v| (-180.0..=180.0).contains(v)),
            location_text: text(Column::Location),
        });
    }

    if total > 0 && skipped_lines.len() as f64 > MAX_SKIP_FRACTION * total as f64 {
        return Err(IngestError::TooManyMalformed {
            skipped: skipped_lines.len(),
            total,
            lines: skipped_lines.into_iter().take(10).collect(),
        });
    }
    if !skipped_lines.is_empty() {
        log::warn!("skipped {} malformed row(s) at lines {:?}", skipped_lines.len(), skipped_lines);
    }
    Ok(ParsedCsv {
        records,
        skipped_lines,
    })
}

fn parse_bool(s: &str) -> bool {
    matches!(s.to_ascii_lowercase().as_str(), "true" | "t" | "yes" | "y" | "1")
}

pub fn drop_columns(records: Vec<RawCrimeRecord>) -> Vec<PrunedRecord> {
    records
        .into_iter()
        .map(|r| PrunedRecord {
            date_text: r.date_text,
            primary_type: r.primary_type,
            location_description: r.location_description,
            arrest: r.arrest,
            domestic: r.domestic,
            beat: r.beat,
            district: r.district,
            ward: r.ward,
            community_area: r.community_area,
            fbi_code: r.fbi_code,
            year: r.year,
            latitude: r.latitude,
            longitude: r.longitude,
        })
        .collect()
}

/// Fills missing location description, ward and community area with the
/// unknown-region label (text) or code (integers).
pub fn impute_categorical(mut records: Vec<PrunedRecord>) -> Vec<PrunedRecord> {
    for r in &mut records {
        r.location_description
            .get_or_insert_with(|| UNKNOWN_REGION_LABEL.to_string());
        r.ward.get_or_insert(UNKNOWN_REGION_CODE);
        r.community_area.get_or_insert(UNKNOWN_REGION_CODE);
    }
    records
}

/// Column means used by [`impute_coordinates`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoordinateMeans {
    pub latitude: f64,
    pub longitude: f64,
}

pub fn coordinate_means(records: &[PrunedRecord]) -> Result<CoordinateMeans, IngestError> {
    let mean = |values: &mut dyn Iterator<Item = f64>, column| {
        let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
        if n == 0 {
            Err(IngestError::Imputation { column })
        } else {
            Ok(sum / n as f64)
        }
    };
    Ok(CoordinateMeans {
        latitude: mean(&mut records.iter().filter_map(|r| r.latitude), "latitude")?,
        longitude: mean(&mut records.iter().filter_map(|r| r.longitude), "longitude")?,
    })
}

/// Replaces missing coordinates with the batch mean of each column.
///
/// The means are computed over the whole input before any substitution.
pub fn impute_coordinates(mut records: Vec<PrunedRecord>) -> Result<Vec<PrunedRecord>, IngestError> {
    let means = coordinate_means(&records)?;
    for r in &mut records {
        r.latitude.get_or_insert(means.latitude);
        r.longitude.get_or_insert(means.longitude);
    }
    Ok(records)
}

/// Parse, prune and impute in one call.
pub fn load_and_clean(path: impl AsRef<Path>) -> Result<Vec<PrunedRecord>, IngestError> {
    let parsed = parse_csv(path)?;
    let pruned = impute_categorical(drop_columns(parsed.records));
    impute_coordinates(pruned)
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "ID,Case Number,Date,Block,IUCR,Primary Type,Description,Location Description,Arrest,Domestic,Beat,District,Ward,Community Area,FBI Code,X Coordinate,Y Coordinate,Year,Updated On,Latitude,Longitude,Location";

    fn row(id: &str, ward: &str, lat: &str, lon: &str) -> String {
        format!(
            "{id},JA1,03/18/2015 07:44:00 PM,001XX W MAIN ST,0486,BATTERY,DOMESTIC BATTERY SIMPLE,RESIDENCE,false,true,1234,12,{ward},25,08B,1170000,1900000,2015,02/10/2018 03:50:01 PM,{lat},{lon},\"(41.8, -87.6)\""
        )
    }

    fn parse(text: &str) -> Result<ParsedCsv, IngestError> {
        parse_csv_bytes(text.as_bytes())
    }

    #[test]
    fn minimal_parse() {
        let text = format!("{HEADER}\n{}\n", row("12345", "3", "41.8", "-87.6"));
        let parsed = parse(&text).unwrap();
        assert_eq!(parsed.records.len(), 1);
        let r = &parsed.records[0];
        assert_eq!(r.id.as_deref(), Some("12345"));
        assert_eq!(r.primary_type, "BATTERY");
        assert!(r.domestic && !r.arrest);
        assert_eq!(r.ward, Some(3));
        assert_eq!(r.latitude, Some(41.8));
        assert_eq!(r.location_text.as_deref(), Some("(41.8, -87.6)"));
    }

    #[test]
    fn blank_latitude_is_absent() {
        let text = format!("{HEADER}\n{}\n", row("1", "3", "", "-87.6"));
        let r = &parse(&text).unwrap().records[0];
        assert_eq!(r.latitude, None);
        assert_eq!(r.longitude, Some(-87.6));
    }

    #[test]
    fn out_of_range_and_garbage_become_absent() {
        let text = format!("{HEADER}\n{}\n", row("1", "abc", "91.5", "nan"));
        let r = &parse(&text).unwrap().records[0];
        assert_eq!(r.ward, None);
        assert_eq!(r.latitude, None);
        assert_eq!(r.longitude, None);
    }

    #[test]
    fn header_matching_is_case_and_space_insensitive() {
        let text = " date ,PRIMARY TYPE,latitude , Longitude\n01/01/2001 12:00:00 AM,THEFT,41.9,-87.7\n";
        let parsed = parse(text).unwrap();
        assert_eq!(parsed.records[0].primary_type, "THEFT");
        assert_eq!(parsed.records[0].ward, None);
    }

    #[test]
    fn schema_errors() {
        assert!(matches!(parse(""), Err(IngestError::Schema(_))));
        let err = parse("Date,Primary Type,Latitude\nx,y,1\n").unwrap_err();
        assert!(err.to_string().contains("Longitude"), "{err}");
        let missing = parse_csv("/definitely/not/here.csv").unwrap_err();
        assert!(matches!(missing, IngestError::Io { .. }));
    }

    #[test]
    fn malformed_rows_skip_up_to_limit() {
        let mut text = format!("{HEADER}\n");
        for i in 0..199 {
            text.push_str(&row(&i.to_string(), "3", "41.8", "-87.6"));
            text.push('\n');
        }
        text.push_str("short,row\n");
        let parsed = parse(&text).unwrap();
        assert_eq!(parsed.records.len(), 199);
        assert_eq!(parsed.skipped_lines, vec![201]);

        text.push_str("another,short,row\n");
        text.push_str("third,bad\n");
        assert!(matches!(parse(&text), Err(IngestError::TooManyMalformed { skipped: 3, .. })));
    }

    #[test]
    fn pruning_keeps_retained_fields() {
        let text = format!("{HEADER}\n{}\n", row("12345", "3", "41.8", "-87.6"));
        let raw = parse(&text).unwrap().records;
        let pruned = drop_columns(raw.clone());
        assert_eq!(pruned.len(), 1);
        assert_eq!(pruned[0].primary_type, raw[0].primary_type);
        assert_eq!(pruned[0].fbi_code.as_deref(), Some("08B"));
        let json = serde_json::to_value(&pruned[0]).unwrap();
        for gone in ["id", "case_number", "block", "iucr", "description", "updated_on", "x_coordinate", "y_coordinate", "location_text"] {
            assert!(json.get(gone).is_none(), "{gone} survived pruning");
        }
        assert!(drop_columns(vec![]).is_empty());
    }

    fn pruned(lat: Option<f64>, lon: Option<f64>) -> PrunedRecord {
        PrunedRecord {
            date_text: "01/01/2001 12:00:00 AM".into(),
            primary_type: "THEFT".into(),
            location_description: None,
            arrest: false,
            domestic: false,
            beat: Some(1),
            district: Some(1),
            ward: None,
            community_area: Some(8),
            fbi_code: Some("06".into()),
            year: Some(2001),
            latitude: lat,
            longitude: lon,
        }
    }

    #[test]
    fn categorical_imputation() {
        let out = impute_categorical(vec![pruned(None, None)]);
        assert_eq!(out[0].location_description.as_deref(), Some(UNKNOWN_REGION_LABEL));
        assert_eq!(out[0].ward, Some(UNKNOWN_REGION_CODE));
        assert_eq!(out[0].community_area, Some(8));
        let full = impute_categorical(out.clone());
        assert_eq!(full, out);
    }

    #[test]
    fn coordinate_imputation_uses_batch_mean() {
        let recs = vec![
            pruned(Some(41.0), Some(-87.0)),
            pruned(Some(43.0), Some(-88.0)),
            pruned(None, None),
        ];
        let out = impute_coordinates(recs).unwrap();
        assert_eq!(out[2].latitude, Some(42.0));
        assert_eq!(out[2].longitude, Some(-87.5));

        let complete = vec![pruned(Some(1.0), Some(2.0))];
        assert_eq!(impute_coordinates(complete.clone()).unwrap(), complete);

        let err = impute_coordinates(vec![pruned(None, None)]).unwrap_err();
        assert!(matches!(err, IngestError::Imputation { column: "latitude" }));
    }
}
