//! Independent reference implementations and random-input helpers shared by
//! the integration and acceptance tests. Nothing here calls into the code
//! path it is used to check.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use mcoke::model::{BBox, CustomerObservation, FrameAnnotations, Gender, GarmentObservation, Point2D};
use mcoke::tracker::AssociationInterval;
use mcoke::{cluster_frame, EngineConfig, Parallelism};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Textbook Lloyd k-means: nearest centroid by squared distance (first
/// index wins ties), centroid = arithmetic mean, stop when the largest
/// centroid shift is below `tol` (or exactly zero).
pub fn plain_lloyd(
    points: &[(f64, f64)],
    init: &[(f64, f64)],
    max_iters: usize,
    tol: f64,
) -> (Vec<usize>, Vec<(f64, f64)>) {
    let mut cents = init.to_vec();
    let mut labels = vec![0; points.len()];
    for _ in 0..max_iters.max(1) {
        for (i, &(x, y)) in points.iter().enumerate() {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (j, &(cx, cy)) in cents.iter().enumerate() {
                let d = (x - cx) * (x - cx) + (y - cy) * (y - cy);
                if d < best_d {
                    best_d = d;
                    best = j;
                }
            }
            labels[i] = best;
        }
        let mut sx = vec![0.0; cents.len()];
        let mut sy = vec![0.0; cents.len()];
        let mut n = vec![0usize; cents.len()];
        for (&(x, y), &l) in points.iter().zip(&labels) {
            sx[l] += x;
            sy[l] += y;
            n[l] += 1;
        }
        let mut shift: f64 = 0.0;
        for j in 0..cents.len() {
            if n[j] > 0 {
                let next = (sx[j] / n[j] as f64, sy[j] / n[j] as f64);
                let (dx, dy) = (next.0 - cents[j].0, next.1 - cents[j].1);
                shift = shift.max((dx * dx + dy * dy).sqrt());
                cents[j] = next;
            }
        }
        if shift < tol || shift == 0.0 {
            break;
        }
    }
    (labels, cents)
}

/// Exhaustive distance scan: the set of (customer, cluster) pairs within
/// `max_dist` of the cluster centroid.
pub fn scan_membership(
    customers: &[(String, Point2D)],
    centroids: &BTreeMap<String, Point2D>,
    max_dist: f64,
) -> BTreeSet<(String, String)> {
    let mut out = BTreeSet::new();
    for (c, p) in customers {
        for (g, q) in centroids {
            let d = ((p.x - q.x).powi(2) + (p.y - q.y).powi(2)).sqrt();
            if d <= max_dist {
                out.insert((c.clone(), g.clone()));
            }
        }
    }
    out
}

/// Re-clusters every frame and derives intervals by diffing consecutive
/// membership sets, with no change detection at all.
pub fn per_frame_intervals(frames: &[FrameAnnotations], cfg: &EngineConfig) -> Vec<AssociationInterval> {
    let mut open: BTreeMap<(String, String), u64> = BTreeMap::new();
    let mut out = Vec::new();
    let mut prev: Option<u64> = None;
    for f in frames {
        let (_, table) = cluster_frame(f, cfg, Parallelism::Sequential).unwrap();
        let now: BTreeSet<(String, String)> = table
            .ones()
            .map(|(c, g)| (c.to_string(), g.to_string()))
            .collect();
        let gone: Vec<_> = open.keys().filter(|k| !now.contains(*k)).cloned().collect();
        for k in gone {
            let start = open.remove(&k).unwrap();
            out.push(AssociationInterval {
                customer_id: k.0,
                garment_id: k.1,
                start_frame: start,
                end_frame: prev.unwrap(),
            });
        }
        for k in now {
            open.entry(k).or_insert(f.frame);
        }
        prev = Some(f.frame);
    }
    for ((c, g), s) in open {
        out.push(AssociationInterval {
            customer_id: c,
            garment_id: g,
            start_frame: s,
            end_frame: prev.unwrap(),
        });
    }
    out.sort_by(|a, b| {
        (a.start_frame, &a.customer_id, &a.garment_id).cmp(&(b.start_frame, &b.customer_id, &b.garment_id))
    });
    out
}

pub fn customer(id: &str, frame: u64, c: Point2D, age: u32, gender: Gender, expr: &str) -> CustomerObservation {
    CustomerObservation {
        tracking_id: id.into(),
        frame,
        bbox: BBox::around(c, 40.0, 120.0),
        age_years: age,
        gender,
        expression: expr.into(),
    }
}

pub fn garment(id: &str, frame: u64, c: Point2D, color: &str) -> GarmentObservation {
    GarmentObservation {
        tracking_id: id.into(),
        frame,
        bbox: BBox::around(c, 60.0, 80.0),
        color: color.into(),
    }
}

/// Random frame inside a 944x576 view. With `grid`, coordinates snap to a
/// coarse integer lattice so that exact ties and coincident points occur.
pub fn random_frame(rng: &mut ChaCha8Rng, frame: u64, garments: usize, customers: usize, grid: bool) -> FrameAnnotations {
    let pos = |rng: &mut ChaCha8Rng| {
        if grid {
            Point2D::new(rng.gen_range(0..12) as f64 * 80.0, rng.gen_range(0..8) as f64 * 72.0)
        } else {
            Point2D::new(rng.gen_range(0.0..944.0), rng.gen_range(0.0..576.0))
        }
    };
    let mut f = FrameAnnotations::new(frame);
    for j in 0..garments {
        let p = pos(rng);
        f.garments.push(garment(&format!("g{j}"), frame, p, "Blue"));
    }
    for i in 0..customers {
        let p = pos(rng);
        f.customers.push(customer(&format!("c{i}"), frame, p, 30, Gender::Female, "neutral"));
    }
    f
}

/// Three customers random-walking along three racks; customer c2 leaves
/// the view for frames 40-44. With `still_every > 0`, every such frame
/// repeats the previous positions exactly.
pub fn walk_stream(seed: u64, n_frames: u64, still_every: u64) -> Vec<FrameAnnotations> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let racks = [Point2D::new(100.0, 300.0), Point2D::new(400.0, 300.0), Point2D::new(700.0, 300.0)];
    let mut pos: Vec<Point2D> = (0..3).map(|i| Point2D::new(100.0 + 300.0 * i as f64, 330.0)).collect();
    let mut out = Vec::new();
    for f in 0..n_frames {
        let mut fr = FrameAnnotations::new(f);
        for (j, r) in racks.iter().enumerate() {
            fr.garments.push(garment(&format!("g{j}"), f, *r, "Red"));
        }
        let moving = still_every == 0 || f % still_every != 0;
        for (i, p) in pos.iter_mut().enumerate() {
            if moving {
                p.x = (p.x + rng.gen_range(-25.0..25.0)).clamp(0.0, 800.0);
                p.y = (p.y + rng.gen_range(-10.0..10.0)).clamp(200.0, 400.0);
            }
            if !(i == 2 && (40..45).contains(&f)) {
                fr.customers.push(customer(&format!("c{i}"), f, *p, 30, Gender::Male, "happy"));
            }
        }
        out.push(fr);
    }
    out
}

