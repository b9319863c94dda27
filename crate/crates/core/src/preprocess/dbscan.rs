//! Density-based clustering on normalized 2-D coordinates.
//!
//! A point is a core point when at least `min_pts` points, itself included,
//! lie within Euclidean distance `eps`. Clusters are the connected components
//! of the core-point neighborhood graph, numbered in scan order of their first
//! core point. A non-core point within `eps` of some core point joins the
//! cluster of its nearest such core point (lower index on exact ties); every
//! other point is noise (`-1`). Assigning borders by nearest core rather than
//! by visit order makes the partition independent of input order.

use std::collections::{HashMap, VecDeque};

pub const NOISE: i64 = -1;

pub type Point = (f64, f64);

#[inline]
pub fn distance(a: Point, b: Point) -> f64 {
    let dx = a.0 - b.0;
    let dy = a.1 - b.1;
    (dx * dx + dy * dy).sqrt()
}

/// Neighborhood lookup: indices of all points within `eps` of point `i`, `i` included.
trait RegionQuery {
    fn region(&self, i: usize, out: &mut Vec<usize>);
}

struct BruteRegion<'a> {
    points: &'a [Point],
    eps: f64,
}

impl RegionQuery for BruteRegion<'_> {
    fn region(&self, i: usize, out: &mut Vec<usize>) {
        out.clear();
        let p = self.points[i];
        out.extend(
            self.points
                .iter()
                .enumerate()
                .filter(|(_, &q)| distance(p, q) <= self.eps)
                .map(|(j, _)| j),
        );
    }
}

/// Uniform grid with cell side `eps`; a query scans the 3x3 block around the point.
struct GridRegion<'a> {
    points: &'a [Point],
    eps: f64,
    cells: HashMap<(i64, i64), Vec<usize>>,
}

impl<'a> GridRegion<'a> {
    fn new(points: &'a [Point], eps: f64) -> Self {
        let mut cells: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        for (i, &p) in points.iter().enumerate() {
            cells.entry(Self::cell(p, eps)).or_default().push(i);
        }
        Self { points, eps, cells }
    }

    fn cell(p: Point, eps: f64) -> (i64, i64) {
        ((p.0 / eps).floor() as i64, (p.1 / eps).floor() as i64)
    }
}

impl RegionQuery for GridRegion<'_> {
    fn region(&self, i: usize, out: &mut Vec<usize>) {
        out.clear();
        let p = self.points[i];
        let (cx, cy) = Self::cell(p, self.eps);
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(members) = self.cells.get(&(cx + dx, cy + dy)) {
                    out.extend(
                        members
                            .iter()
                            .copied()
                            .filter(|&j| distance(p, self.points[j]) <= self.eps),
                    );
                }
            }
        }
        // keep output order independent of hash iteration
        out.sort_unstable();
    }
}

/// Cluster labels for `points`, using a grid index for neighborhood queries.
/// Empty input yields empty output.
pub fn dbscan(points: &[Point], eps: f64, min_pts: usize) -> Vec<i64> {
    assert!(eps > 0.0 && eps.is_finite(), "eps must be positive and finite");
    label(points, min_pts, &GridRegion::new(points, eps))
}

/// Same labels as [`dbscan`] with exhaustive O(n^2) neighborhood queries.
pub fn dbscan_brute(points: &[Point], eps: f64, min_pts: usize) -> Vec<i64> {
    assert!(eps > 0.0 && eps.is_finite(), "eps must be positive and finite");
    label(points, min_pts, &BruteRegion { points, eps })
}

fn label(points: &[Point], min_pts: usize, index: &impl RegionQuery) -> Vec<i64> {
    let n = points.len();
    let mut scratch = Vec::new();
    let core: Vec<bool> = (0..n)
        .map(|i| {
            index.region(i, &mut scratch);
            scratch.len() >= min_pts
        })
        .collect();

    let mut labels = vec![NOISE; n];
    let mut next = 0i64;
    let mut queue = VecDeque::new();
    for start in 0..n {
        if !core[start] || labels[start] != NOISE {
            continue;
        }
        labels[start] = next;
        queue.push_back(start);
        while let Some(p) = queue.pop_front() {
            index.region(p, &mut scratch);
            for &q in &scratch {
                if core[q] && labels[q] == NOISE {
                    labels[q] = next;
                    queue.push_back(q);
                }
            }
        }
        next += 1;
    }

    for i in 0..n {
        if core[i] {
            continue;
        }
        index.region(i, &mut scratch);
        let nearest = scratch
            .iter()
            .copied()
            .filter(|&j| core[j])
            .map(|j| (distance(points[i], points[j]), j))
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        if let Some((_, j)) = nearest {
            labels[i] = labels[j];
        }
    }
    labels
}

/// Number of distinct non-noise labels.
pub fn cluster_count(labels: &[i64]) -> usize {
    labels.iter().copied().filter(|&l| l != NOISE).max().map_or(0, |m| m as usize + 1)
}
