//! Weighted k-means over 2-D points, seeded from caller-supplied centroids.
//!
//! Lloyd iterations: assign every point to its nearest centroid (lowest
//! centroid index wins ties), then move each centroid to the weighted mean
//! of its members. Empty clusters keep their previous centroid.

use crate::error::{Error, Result};
use crate::exec::{self, Parallelism};
use crate::model::Point2D;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PointKind {
    Garment,
    Customer,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedPoint {
    pub id: String,
    pub pos: Point2D,
    pub weight: f64,
    pub kind: PointKind,
}

impl WeightedPoint {
    pub fn new(id: impl Into<String>, pos: Point2D, weight: f64, kind: PointKind) -> Self {
        Self {
            id: id.into(),
            pos,
            weight,
            kind,
        }
    }
}

/// A centroid and the indices (ascending) of the input points assigned to it.
#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    pub centroid: Point2D,
    pub members: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WkmParams {
    pub max_iters: usize,
    /// Iteration stops once no centroid moves this far.
    pub tol: f64,
    pub parallelism: Parallelism,
}

impl Default for WkmParams {
    fn default() -> Self {
        Self {
            max_iters: 100,
            tol: 1e-6,
            parallelism: Parallelism::Auto,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WkmOutcome {
    pub clusters: Vec<Cluster>,
    /// Cluster index per input point.
    pub assignment: Vec<usize>,
    pub iterations: usize,
}

/// Index of the nearest centroid; the lowest index wins ties.
pub fn nearest_centroid(p: &Point2D, centroids: &[Point2D]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (j, c) in centroids.iter().enumerate() {
        let d = p.distance_sq(c);
        if d < best_d {
            best = j;
            best_d = d;
        }
    }
    best
}

pub fn weighted_kmeans(
    points: &[WeightedPoint],
    initial_centroids: &[Point2D],
    params: &WkmParams,
) -> Result<WkmOutcome> {
    if initial_centroids.is_empty() {
        return Err(Error::NoCentroids);
    }
    if points.is_empty() {
        return Err(Error::NoPoints);
    }
    for p in points {
        if !(p.weight > 0.0 && p.weight.is_finite()) {
            return Err(Error::Validation(format!(
                "point {:?} has non-positive weight {}",
                p.id, p.weight
            )));
        }
        if !p.pos.is_finite() {
            return Err(Error::Validation(format!("point {:?} is not finite", p.id)));
        }
    }
    if let Some(c) = initial_centroids.iter().find(|c| !c.is_finite()) {
        return Err(Error::Validation(format!("centroid {c:?} is not finite")));
    }

    let k = initial_centroids.len();
    let mut centroids = initial_centroids.to_vec();
    let mut assignment = Vec::new();
    let mut iterations = 0;

    for _ in 0..params.max_iters.max(1) {
        iterations += 1;
        assignment = exec::map_slice(points, params.parallelism, |p| {
            nearest_centroid(&p.pos, &centroids)
        });

        // Sums run in point order on one thread so both execution paths
        // agree to the bit.
        let mut sums = vec![(0.0f64, 0.0f64, 0.0f64); k];
        for (p, &j) in points.iter().zip(&assignment) {
            let s = &mut sums[j];
            s.0 += p.weight * p.pos.x;
            s.1 += p.weight * p.pos.y;
            s.2 += p.weight;
        }
        let mut shift: f64 = 0.0;
        for (c, (sx, sy, sw)) in centroids.iter_mut().zip(sums) {
            if sw > 0.0 {
                let next = Point2D::new(sx / sw, sy / sw);
                shift = shift.max(c.distance(&next));
                *c = next;
            }
        }
        if shift < params.tol || shift == 0.0 {
            break;
        }
    }

    let mut clusters: Vec<Cluster> = centroids
        .into_iter()
        .map(|centroid| Cluster {
            centroid,
            members: Vec::new(),
        })
        .collect();
    for (i, &j) in assignment.iter().enumerate() {
        clusters[j].members.push(i);
    }
    Ok(WkmOutcome {
        clusters,
        assignment,
        iterations,
    })
}

/// Largest distance from any point to the centroid of the cluster it belongs
/// to, taken over all clusters.
pub fn compute_max_dist(clusters: &[Cluster], points: &[WeightedPoint]) -> Result<f64> {
    let mut max: Option<f64> = None;
    for c in clusters {
        for &m in &c.members {
            let p = points.get(m).ok_or_else(|| {
                Error::Invariant(format!("cluster member {m} out of range"))
            })?;
            let d = p.pos.distance(&c.centroid);
            max = Some(max.map_or(d, |cur: f64| cur.max(d)));
        }
    }
    max.ok_or(Error::AllClustersEmpty)
}
