//! Mean distance from each point to its `k` nearest other points.

use std::collections::HashMap;

use rayon::prelude::*;

use super::dbscan::{distance, Point};
use super::PreprocessError;

/// Inputs at or below this size use exhaustive search.
const BRUTE_FORCE_LIMIT: usize = 2048;

/// Relation feature: for every point, the mean Euclidean distance to its `k`
/// nearest other points (all other points when fewer than `k` exist).
pub fn knn_relation(points: &[Point], k: usize) -> Result<Vec<f64>, PreprocessError> {
    check(points, k)?;
    if points.len() <= BRUTE_FORCE_LIMIT {
        return Ok(brute(points, k));
    }
    Ok(GridIndex::new(points, k).relations(k))
}

/// Exhaustive O(n^2) variant of [`knn_relation`].
pub fn knn_relation_brute(points: &[Point], k: usize) -> Result<Vec<f64>, PreprocessError> {
    check(points, k)?;
    Ok(brute(points, k))
}

fn check(points: &[Point], k: usize) -> Result<(), PreprocessError> {
    if k == 0 {
        return Err(PreprocessError::Domain("k must be at least 1".into()));
    }
    if points.len() < 2 {
        return Err(PreprocessError::Domain(format!(
            "relation feature needs at least 2 points, got {}",
            points.len()
        )));
    }
    Ok(())
}

fn brute(points: &[Point], k: usize) -> Vec<f64> {
    points
        .par_iter()
        .enumerate()
        .map(|(i, &p)| {
            let candidates: Vec<(f64, usize)> = points
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(j, &q)| (distance(p, q), j))
                .collect();
            mean_of_nearest(candidates, k)
        })
        .collect()
}

/// Mean of the `k` smallest distances, ties broken by index. Summation runs in
/// sorted order so the result does not depend on candidate order.
fn mean_of_nearest(mut candidates: Vec<(f64, usize)>, k: usize) -> f64 {
    let by_distance = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    let take = k.min(candidates.len());
    if take < candidates.len() {
        candidates.select_nth_unstable_by(take - 1, by_distance);
        candidates.truncate(take);
    }
    candidates.sort_unstable_by(by_distance);
    candidates.iter().map(|c| c.0).sum::<f64>() / take as f64
}

/// Uniform grid sized for roughly `k` points per cell; queries expand square
/// rings of cells until the k-th best distance is provably final.
struct GridIndex<'a> {
    points: &'a [Point],
    origin: Point,
    cell: f64,
    extent: i64,
    cells: HashMap<(i64, i64), Vec<usize>>,
}

impl<'a> GridIndex<'a> {
    fn new(points: &'a [Point], k: usize) -> Self {
        let (mut min_x, mut min_y) = (f64::INFINITY, f64::INFINITY);
        let (mut max_x, mut max_y) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        for &(x, y) in points {
            min_x = min_x.min(x);
            min_y = min_y.min(y);
            max_x = max_x.max(x);
            max_y = max_y.max(y);
        }
        let span = (max_x - min_x).max(max_y - min_y);
        let cell = if span > 0.0 {
            span * ((k as f64) / points.len() as f64).sqrt()
        } else {
            1.0
        };
        let cell = cell.max(f64::MIN_POSITIVE);
        let extent = (span / cell).ceil() as i64 + 1;
        let mut index = Self {
            points,
            origin: (min_x, min_y),
            cell,
            extent,
            cells: HashMap::new(),
        };
        for (i, &p) in points.iter().enumerate() {
            let key = index.key(p);
            index.cells.entry(key).or_default().push(i);
        }
        index
    }

    fn key(&self, p: Point) -> (i64, i64) {
        (
            ((p.0 - self.origin.0) / self.cell).floor() as i64,
            ((p.1 - self.origin.1) / self.cell).floor() as i64,
        )
    }

    fn relations(&self, k: usize) -> Vec<f64> {
        (0..self.points.len())
            .into_par_iter()
            .map(|i| self.query(i, k))
            .collect()
    }

    fn query(&self, i: usize, k: usize) -> f64 {
        let p = self.points[i];
        let (cx, cy) = self.key(p);
        let mut candidates: Vec<(f64, usize)> = Vec::new();
        let mut ring = 0i64;
        loop {
            self.visit_ring(cx, cy, ring, |j| {
                if j != i {
                    candidates.push((distance(p, self.points[j]), j));
                }
            });
            // anything outside rings 0..=ring is at least `ring * cell` away
            let covered = ring > self.extent;
            if candidates.len() >= k || covered {
                let mut sorted: Vec<f64> = candidates.iter().map(|c| c.0).collect();
                let kth = if candidates.len() >= k {
                    sorted.select_nth_unstable_by(k - 1, f64::total_cmp);
                    sorted[k - 1]
                } else {
                    f64::INFINITY
                };
                if covered || kth <= ring as f64 * self.cell {
                    return mean_of_nearest(candidates, k);
                }
            }
            ring += 1;
        }
    }

    fn visit_ring(&self, cx: i64, cy: i64, ring: i64, mut f: impl FnMut(usize)) {
        let mut cell = |x: i64, y: i64| {
            if let Some(members) = self.cells.get(&(x, y)) {
                members.iter().for_each(|&j| f(j));
            }
        };
        if ring == 0 {
            cell(cx, cy);
            return;
        }
        for x in (cx - ring)..=(cx + ring) {
            cell(x, cy - ring);
            cell(x, cy + ring);
        }
        for y in (cy - ring + 1)..=(cy + ring - 1) {
            cell(cx - ring, y);
            cell(cx + ring, y);
        }
    }
}
