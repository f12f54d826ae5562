//! Overlapping extension on top of weighted k-means.
//!
//! After WKM, every cluster is tied to exactly one garment and keyed by that
//! garment's tracking id. The largest point-to-own-centroid distance
//! (`max_dist`) then acts as an inclusive radius: a customer belongs to
//! every cluster whose centroid lies within it.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::exec::{self, Parallelism};
use crate::model::{EngineConfig, FrameAnnotations};
use crate::wkm::{self, Cluster, PointKind, WeightedPoint, WkmParams};

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledClustering {
    /// Every point that took part in the clustering; cluster members index
    /// into this list.
    pub points: Vec<WeightedPoint>,
    /// Keyed by the tracking id of the one garment each cluster contains.
    pub clusters: BTreeMap<String, Cluster>,
    pub max_dist: f64,
}

impl LabeledClustering {
    pub fn empty(points: Vec<WeightedPoint>) -> Self {
        Self {
            points,
            clusters: BTreeMap::new(),
            max_dist: 0.0,
        }
    }

    pub fn garments_in<'a>(&'a self, key: &str) -> impl Iterator<Item = &'a WeightedPoint> + 'a {
        self.members_of(key, PointKind::Garment)
    }

    pub fn customers_in<'a>(&'a self, key: &str) -> impl Iterator<Item = &'a WeightedPoint> + 'a {
        self.members_of(key, PointKind::Customer)
    }

    fn members_of<'a>(
        &'a self,
        key: &str,
        kind: PointKind,
    ) -> impl Iterator<Item = &'a WeightedPoint> + 'a {
        self.clusters
            .get(key)
            .into_iter()
            .flat_map(|c| c.members.iter())
            .map(|&i| &self.points[i])
            .filter(move |p| p.kind == kind)
    }
}

/// Binary customer x cluster matrix. Rows may hold several ones (overlap) or
/// none (customer not associated with any garment).
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MembershipTable {
    pub customers: Vec<String>,
    pub clusters: Vec<String>,
    pub cells: Vec<Vec<bool>>,
}

impl MembershipTable {
    pub fn get(&self, customer: &str, cluster: &str) -> Option<bool> {
        let r = self.customers.iter().position(|c| c == customer)?;
        let c = self.clusters.iter().position(|g| g == cluster)?;
        Some(self.cells[r][c])
    }

    /// All (customer, cluster) pairs with membership 1, row-major.
    pub fn ones(&self) -> impl Iterator<Item = (&str, &str)> + '_ {
        self.customers.iter().zip(&self.cells).flat_map(move |(c, row)| {
            row.iter()
                .zip(&self.clusters)
                .filter(|(on, _)| **on)
                .map(move |(_, g)| (c.as_str(), g.as_str()))
        })
    }

    pub fn row(&self, customer: &str) -> Option<&[bool]> {
        let r = self.customers.iter().position(|c| c == customer)?;
        Some(&self.cells[r])
    }
}

/// Matches garments to clusters one-to-one and relabels clusters by garment
/// id.
///
/// Matching is greedy over (garment, cluster) pairs in increasing
/// garment-to-centroid distance, ties by garment id then cluster index. A
/// garment that WKM left in some other cluster is moved into its matched
/// one. Centroids are left as WKM produced them.
pub fn enforce_garment_identity(
    clusters: Vec<Cluster>,
    points: Vec<WeightedPoint>,
    max_dist: f64,
) -> Result<LabeledClustering> {
    let garments: Vec<usize> = points
        .iter()
        .enumerate()
        .filter(|(_, p)| p.kind == PointKind::Garment)
        .map(|(i, _)| i)
        .collect();
    if garments.len() != clusters.len() {
        return Err(Error::Invariant(format!(
            "{} garments for {} clusters",
            garments.len(),
            clusters.len()
        )));
    }

    let mut pairs = Vec::with_capacity(garments.len() * clusters.len());
    for &g in &garments {
        for (j, c) in clusters.iter().enumerate() {
            pairs.push((points[g].pos.distance(&c.centroid), g, j));
        }
    }
    pairs.sort_by(|a, b| {
        a.0.total_cmp(&b.0)
            .then_with(|| points[a.1].id.cmp(&points[b.1].id))
            .then(a.2.cmp(&b.2))
    });

    let mut garment_of_cluster: Vec<Option<usize>> = vec![None; clusters.len()];
    let mut matched = vec![false; points.len()];
    for (_, g, j) in pairs {
        if matched[g] || garment_of_cluster[j].is_some() {
            continue;
        }
        matched[g] = true;
        garment_of_cluster[j] = Some(g);
    }

    let mut labeled = BTreeMap::new();
    for (mut cluster, g) in clusters.into_iter().zip(garment_of_cluster) {
        let g = g.ok_or_else(|| Error::Invariant("unmatched cluster".into()))?;
        cluster
            .members
            .retain(|&m| points[m].kind != PointKind::Garment);
        let at = cluster.members.binary_search(&g).unwrap_or_else(|e| e);
        cluster.members.insert(at, g);
        let key = points[g].id.clone();
        if labeled.insert(key.clone(), cluster).is_some() {
            return Err(Error::Invariant(format!("duplicate garment id {key:?}")));
        }
    }
    Ok(LabeledClustering {
        points,
        clusters: labeled,
        max_dist,
    })
}

/// Membership is 1 exactly when the customer lies within `max_dist` of the
/// cluster centroid (inclusive).
pub fn build_membership(
    labeled: &LabeledClustering,
    customers: &[WeightedPoint],
    parallelism: Parallelism,
) -> MembershipTable {
    let centroids: Vec<_> = labeled.clusters.values().map(|c| c.centroid).collect();
    let max_dist = labeled.max_dist;
    let cells = exec::map_slice(customers, parallelism, |p| {
        centroids
            .iter()
            .map(|c| p.pos.distance(c) <= max_dist)
            .collect()
    });
    MembershipTable {
        customers: customers.iter().map(|p| p.id.clone()).collect(),
        clusters: labeled.clusters.keys().cloned().collect(),
        cells,
    }
}

/// Runs the full extended clustering on one frame.
///
/// Garments and customers are ordered by tracking id before clustering, so
/// the result does not depend on annotation order.
pub fn cluster_frame(
    frame: &FrameAnnotations,
    config: &EngineConfig,
    parallelism: Parallelism,
) -> Result<(LabeledClustering, MembershipTable)> {
    frame.validate()?;
    let by_id = |a: &WeightedPoint, b: &WeightedPoint| -> Ordering { a.id.cmp(&b.id) };

    let mut garments: Vec<WeightedPoint> = frame
        .garments
        .iter()
        .map(|g| {
            WeightedPoint::new(
                g.tracking_id.clone(),
                g.bbox.center(),
                config.garment_weight,
                PointKind::Garment,
            )
        })
        .collect();
    garments.sort_by(by_id);
    let mut customers: Vec<WeightedPoint> = frame
        .customers
        .iter()
        .map(|c| {
            WeightedPoint::new(
                c.tracking_id.clone(),
                c.bbox.center(),
                config.customer_weight,
                PointKind::Customer,
            )
        })
        .collect();
    customers.sort_by(by_id);

    let mut points = garments.clone();
    points.extend(customers.iter().cloned());

    if garments.is_empty() {
        let labeled = LabeledClustering::empty(points);
        let table = build_membership(&labeled, &customers, parallelism);
        return Ok((labeled, table));
    }

    let seeds: Vec<_> = garments.iter().map(|g| g.pos).collect();
    let params = WkmParams {
        max_iters: config.wkm_max_iters,
        tol: config.wkm_tol,
        parallelism,
    };
    let out = wkm::weighted_kmeans(&points, &seeds, &params)?;
    let max_dist = wkm::compute_max_dist(&out.clusters, &points)?;
    let labeled = enforce_garment_identity(out.clusters, points, max_dist)?;
    let table = build_membership(&labeled, &customers, parallelism);
    Ok((labeled, table))
}
