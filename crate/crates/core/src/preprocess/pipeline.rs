use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dbscan::{cluster_count, dbscan, NOISE};
use super::knn::knn_relation;
use super::node::synthesize_node;
use super::scale::ScaleRange;
use super::temporal::{decompose_datetime, TemporalFeatures};
use super::PreprocessError;
use crate::fsutil::write_atomic;
use crate::ingest::{PrunedRecord, UNKNOWN_REGION_CODE};

/// Stored in `fbi_code` when the source row had none.
pub const UNKNOWN_CODE: &str = "unknown";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub k_neighbors: usize,
    /// Neighborhood radius in normalized-coordinate units.
    pub dbscan_eps: f64,
    pub dbscan_min_pts: usize,
    /// Decimal places used for node identifiers.
    pub node_precision: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            k_neighbors: 10,
            dbscan_eps: 0.01,
            dbscan_min_pts: 5,
            node_precision: 4,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), PreprocessError> {
        let fail = |m: String| Err(PreprocessError::Config(m));
        if self.k_neighbors < 1 {
            return fail("k_neighbors must be at least 1".into());
        }
        if !(self.dbscan_eps > 0.0 && self.dbscan_eps.is_finite()) {
            return fail(format!("dbscan_eps must be positive, got {}", self.dbscan_eps));
        }
        if self.dbscan_min_pts < 1 {
            return fail("dbscan_min_pts must be at least 1".into());
        }
        if !(1..=9).contains(&self.node_precision) {
            return fail(format!("node_precision must be in [1, 9], got {}", self.node_precision));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpatialFeatures {
    pub lat_norm: f64,
    pub lon_norm: f64,
    /// `-1` marks noise.
    pub cluster_id: i64,
    pub node: String,
    /// Mean distance to the k nearest other incidents, normalized units.
    pub relation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CleanRecord {
    pub primary_type: String,
    pub location_description: String,
    pub arrest: bool,
    pub domestic: bool,
    pub beat: i64,
    pub district: i64,
    pub ward: i64,
    pub community_area: i64,
    pub fbi_code: String,
    pub temporal: TemporalFeatures,
    pub spatial: SpatialFeatures,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineSummary {
    pub record_count: usize,
    pub cluster_count: usize,
    pub noise_fraction: f64,
    pub latitude_range: ScaleRange,
    pub longitude_range: ScaleRange,
    pub config: PipelineConfig,
}

fn at(index: usize) -> impl Fn(PreprocessError) -> PreprocessError {
    move |e| PreprocessError::AtRecord {
        index,
        source: Box::new(e),
    }
}

fn stage(name: &'static str) -> impl Fn(PreprocessError) -> PreprocessError {
    move |e| PreprocessError::Stage {
        stage: name,
        source: Box::new(e),
    }
}

/// Runs datetime decomposition, coordinate scaling, clustering, node
/// synthesis and the relation feature, in that order.
///
/// Records must already be imputed; a missing coordinate is an error.
pub fn run_pipeline(
    pruned: &[PrunedRecord],
    config: &PipelineConfig,
) -> Result<(Vec<CleanRecord>, PipelineSummary), PreprocessError> {
    config.validate()?;

    let temporal: Vec<TemporalFeatures> = pruned
        .par_iter()
        .enumerate()
        .map(|(i, r)| decompose_datetime(&r.date_text).map_err(at(i)))
        .collect::<Result<_, _>>()?;

    let mut lats = Vec::with_capacity(pruned.len());
    let mut lons = Vec::with_capacity(pruned.len());
    for (i, r) in pruned.iter().enumerate() {
        match (r.latitude, r.longitude) {
            (Some(lat), Some(lon)) => {
                lats.push(lat);
                lons.push(lon);
            }
            _ => {
                return Err(at(i)(PreprocessError::Domain(
                    "missing coordinate; impute before preprocessing".into(),
                )))
            }
        }
    }
    let lat_range = ScaleRange::of(&lats).map_err(stage("latitude scaling"))?;
    let lon_range = ScaleRange::of(&lons).map_err(stage("longitude scaling"))?;
    let points: Vec<(f64, f64)> = lats
        .iter()
        .zip(&lons)
        .map(|(&lat, &lon)| (lat_range.apply(lat), lon_range.apply(lon)))
        .collect();

    let labels = dbscan(&points, config.dbscan_eps, config.dbscan_min_pts);
    let nodes: Vec<String> = points
        .par_iter()
        .map(|&(lat, lon)| synthesize_node(lat, lon, config.node_precision))
        .collect();
    let relation = knn_relation(&points, config.k_neighbors).map_err(stage("relation feature"))?;

    let records: Vec<CleanRecord> = pruned
        .iter()
        .zip(temporal)
        .zip(points.iter().zip(labels.iter()).zip(nodes).zip(relation))
        .map(|((r, temporal), (((&(lat_norm, lon_norm), &cluster_id), node), relation))| CleanRecord {
            primary_type: r.primary_type.clone(),
            location_description: r
                .location_description
                .clone()
                .unwrap_or_else(|| crate::ingest::UNKNOWN_REGION_LABEL.to_string()),
            arrest: r.arrest,
            domestic: r.domestic,
            beat: r.beat.unwrap_or(UNKNOWN_REGION_CODE),
            district: r.district.unwrap_or(UNKNOWN_REGION_CODE),
            ward: r.ward.unwrap_or(UNKNOWN_REGION_CODE),
            community_area: r.community_area.unwrap_or(UNKNOWN_REGION_CODE),
            fbi_code: r.fbi_code.clone().unwrap_or_else(|| UNKNOWN_CODE.to_string()),
            temporal,
            spatial: SpatialFeatures {
                lat_norm,
                lon_norm,
                cluster_id,
                node,
                relation,
            },
        })
        .collect();

    let noise = labels.iter().filter(|&&l| l == NOISE).count();
    let summary = PipelineSummary {
        record_count: records.len(),
        cluster_count: cluster_count(&labels),
        noise_fraction: noise as f64 / records.len() as f64,
        latitude_range: lat_range,
        longitude_range: lon_range,
        config: config.clone(),
    };
    Ok((records, summary))
}

pub const CLEAN_CSV_COLUMNS: [&str; 19] = [
    "primary_type",
    "location_description",
    "arrest",
    "domestic",
    "beat",
    "district",
    "ward",
    "community_area",
    "fbi_code",
    "year",
    "month",
    "day",
    "hour",
    "weekday",
    "lat_norm",
    "lon_norm",
    "cluster_id",
    "node",
    "relation",
];

/// Clean records as CSV bytes in the fixed column order.
pub fn clean_csv_bytes(records: &[CleanRecord]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CLEAN_CSV_COLUMNS).expect("in-memory write");
    for r in records {
        let t = &r.temporal;
        let s = &r.spatial;
        w.write_record([
            r.primary_type.clone(),
            r.location_description.clone(),
            r.arrest.to_string(),
            r.domestic.to_string(),
            r.beat.to_string(),
            r.district.to_string(),
            r.ward.to_string(),
            r.community_area.to_string(),
            r.fbi_code.clone(),
            t.year.to_string(),
            t.month.to_string(),
            t.day.to_string(),
            t.hour.to_string(),
            t.weekday.to_string(),
            s.lat_norm.to_string(),
            s.lon_norm.to_string(),
            s.cluster_id.to_string(),
            s.node.clone(),
            s.relation.to_string(),
        ])
        .expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

pub fn write_clean_csv(path: &Path, records: &[CleanRecord]) -> Result<(), PreprocessError> {
    write_atomic(path, &clean_csv_bytes(records)).map_err(|e| PreprocessError::Output {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

pub fn write_clean_jsonl(path: &Path, records: &[CleanRecord]) -> Result<(), PreprocessError> {
    let mut out = Vec::new();
    for r in records {
        serde_json::to_writer(&mut out, r).expect("records serialize");
        out.push(b'\n');
    }
    write_atomic(path, &out).map_err(|e| PreprocessError::Output {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}
