//! Fixed-size text digest of the preprocessed data, fed to the Analysis agent.

use std::collections::BTreeMap;
use std::fmt::Write;

use crate::preprocess::{CleanRecord, PipelineSummary, NOISE};

pub const TOP_N: usize = 10;

/// Largest counts first, ties by key ascending.
fn top<K: Ord + Clone>(counts: &BTreeMap<K, usize>, n: usize) -> Vec<(K, usize)> {
    let mut v: Vec<(K, usize)> = counts.iter().map(|(k, c)| (k.clone(), *c)).collect();
    v.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    v.truncate(n);
    v
}

/// Record count, arrest rate, top crime types, hourly histogram, top
/// clusters and noise share. Deterministic for a given input.
pub fn data_digest(records: &[CleanRecord], summary: &PipelineSummary) -> String {
    let mut types: BTreeMap<String, usize> = BTreeMap::new();
    let mut clusters: BTreeMap<i64, usize> = BTreeMap::new();
    let mut hours = [0usize; 24];
    let mut arrests = 0usize;
    for r in records {
        *types.entry(r.primary_type.clone()).or_default() += 1;
        if r.spatial.cluster_id != NOISE {
            *clusters.entry(r.spatial.cluster_id).or_default() += 1;
        }
        hours[r.temporal.hour as usize % 24] += 1;
        arrests += r.arrest as usize;
    }
    let n = records.len();
    let mut out = String::new();
    let _ = writeln!(out, "Records: {n}");
    let rate = if n == 0 { 0.0 } else { arrests as f64 / n as f64 };
    let _ = writeln!(out, "Arrest rate: {rate:.4}");
    let _ = writeln!(out, "Top crime types:");
    for (name, count) in top(&types, TOP_N) {
        let _ = writeln!(out, "  {name}: {count}");
    }
    let hist: Vec<String> = hours.iter().map(|h| h.to_string()).collect();
    let _ = writeln!(out, "Incidents by hour 0-23: {}", hist.join(" "));
    let _ = writeln!(
        out,
        "Spatial clusters: {} (noise share {:.4})",
        summary.cluster_count, summary.noise_fraction
    );
    let _ = writeln!(out, "Largest clusters:");
    for (id, count) in top(&clusters, TOP_N) {
        let _ = writeln!(out, "  cluster {id}: {count}");
    }
    out.trim_end().to_string()
}
