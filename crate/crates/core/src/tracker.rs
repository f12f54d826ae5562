//! Streaming association tracker.
//!
//! The first frame is always clustered. After that a frame is re-clustered
//! only on a significant change: an entity appears or disappears, or some
//! entity is more than `mindist` away from where it stood at the last
//! clustering. Memberships hold constant between clusterings; the diff
//! between consecutive membership tables opens and closes association
//! intervals.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{self, Parallelism};
use crate::mcoke::{self, LabeledClustering, MembershipTable};
use crate::model::{EngineConfig, EntityKey, FrameAnnotations, Point2D};

#[derive(Debug, Clone, PartialEq)]
pub struct ClusteringSnapshot {
    pub frame_of_clustering: u64,
    pub labeled: LabeledClustering,
    pub membership: MembershipTable,
    /// Entity centres at the time of clustering.
    pub original_coords: BTreeMap<EntityKey, Point2D>,
}

/// Inclusive span of frames during which a customer belonged to a garment's
/// cluster.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AssociationInterval {
    pub customer_id: String,
    pub garment_id: String,
    pub start_frame: u64,
    pub end_frame: u64,
}

impl AssociationInterval {
    pub fn frames(&self) -> u64 {
        self.end_frame - self.start_frame + 1
    }

    pub fn duration_seconds(&self, frame_duration: f64) -> f64 {
        self.frames() as f64 * frame_duration
    }
}

pub fn sort_intervals(intervals: &mut [AssociationInterval]) {
    intervals.sort_by(|a, b| {
        (a.start_frame, &a.customer_id, &a.garment_id, a.end_frame).cmp(&(
            b.start_frame,
            &b.customer_id,
            &b.garment_id,
            b.end_frame,
        ))
    });
}

fn centers(frame: &FrameAnnotations) -> BTreeMap<EntityKey, Point2D> {
    let mut out = BTreeMap::new();
    for c in &frame.customers {
        out.insert(EntityKey::customer(c.tracking_id.clone()), c.bbox.center());
    }
    for g in &frame.garments {
        out.insert(EntityKey::garment(g.tracking_id.clone()), g.bbox.center());
    }
    out
}

/// True when the entity set changed since the snapshot or some entity moved
/// strictly more than `mindist` from its original coordinates.
pub fn significant_change(
    frame: &FrameAnnotations,
    snapshot: &ClusteringSnapshot,
    mindist: f64,
) -> bool {
    let n = frame.customers.len() + frame.garments.len();
    if n != snapshot.original_coords.len() {
        return true;
    }
    let moved = |key: EntityKey, pos: Point2D| match snapshot.original_coords.get(&key) {
        None => true,
        Some(orig) => orig.distance(&pos) > mindist,
    };
    frame
        .customers
        .iter()
        .any(|c| moved(EntityKey::customer(c.tracking_id.as_str()), c.bbox.center()))
        || frame
            .garments
            .iter()
            .any(|g| moved(EntityKey::garment(g.tracking_id.as_str()), g.bbox.center()))
}

/// Single-stream tracker state. One instance processes one stream in frame
/// order; independent streams can run on separate instances in parallel.
#[derive(Debug, Clone)]
pub struct Tracker {
    config: EngineConfig,
    parallelism: Parallelism,
    snapshot: Option<ClusteringSnapshot>,
    open: BTreeMap<(String, String), u64>,
    closed: Vec<AssociationInterval>,
    last_frame: Option<u64>,
    clusterings: usize,
}

impl Tracker {
    pub fn new(config: EngineConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            parallelism: Parallelism::Auto,
            snapshot: None,
            open: BTreeMap::new(),
            closed: Vec::new(),
            last_frame: None,
            clusterings: 0,
        })
    }

    pub fn with_parallelism(mut self, parallelism: Parallelism) -> Self {
        self.parallelism = parallelism;
        self
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn snapshot(&self) -> Option<&ClusteringSnapshot> {
        self.snapshot.as_ref()
    }

    /// Number of times the clustering has been (re)computed.
    pub fn clusterings(&self) -> usize {
        self.clusterings
    }

    pub fn last_frame(&self) -> Option<u64> {
        self.last_frame
    }

    pub fn open_intervals(&self) -> &BTreeMap<(String, String), u64> {
        &self.open
    }

    /// Feeds one frame; returns the intervals closed by it.
    pub fn process_frame(&mut self, frame: &FrameAnnotations) -> Result<Vec<AssociationInterval>> {
        if let Some(last) = self.last_frame {
            if frame.frame <= last {
                return Err(Error::StreamOrder {
                    frame: frame.frame,
                    last,
                });
            }
        }
        frame.validate()?;

        let recluster = match &self.snapshot {
            None => true,
            Some(s) => significant_change(frame, s, self.config.mindist),
        };
        let mut closed_now = Vec::new();
        if recluster {
            let (labeled, membership) =
                mcoke::cluster_frame(frame, &self.config, self.parallelism)?;
            self.clusterings += 1;

            let next: BTreeSet<(String, String)> = membership
                .ones()
                .map(|(c, g)| (c.to_string(), g.to_string()))
                .collect();
            // close pairs that dropped out; they last held at the previous frame
            let dropped: Vec<_> = self
                .open
                .keys()
                .filter(|k| !next.contains(*k))
                .cloned()
                .collect();
            for key in dropped {
                let start = self.open.remove(&key).expect("key taken from open map");
                let end = self.last_frame.unwrap_or(frame.frame);
                let interval = AssociationInterval {
                    customer_id: key.0,
                    garment_id: key.1,
                    start_frame: start,
                    end_frame: end,
                };
                closed_now.push(interval);
            }
            for key in next {
                self.open.entry(key).or_insert(frame.frame);
            }

            self.snapshot = Some(ClusteringSnapshot {
                frame_of_clustering: frame.frame,
                labeled,
                membership,
                original_coords: centers(frame),
            });
        }
        self.last_frame = Some(frame.frame);
        self.closed.extend(closed_now.iter().cloned());
        Ok(closed_now)
    }

    /// Closes every open interval at the last processed frame and returns
    /// the full log sorted by (start frame, customer, garment).
    pub fn finalize(mut self) -> Vec<AssociationInterval> {
        if let Some(last) = self.last_frame {
            for ((customer_id, garment_id), start) in std::mem::take(&mut self.open) {
                self.closed.push(AssociationInterval {
                    customer_id,
                    garment_id,
                    start_frame: start,
                    end_frame: last,
                });
            }
        }
        sort_intervals(&mut self.closed);
        self.closed
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackOutcome {
    pub intervals: Vec<AssociationInterval>,
    pub clusterings: usize,
    pub frames: usize,
}

/// Runs a tracker over an in-memory stream.
pub fn track_frames<'a, I>(frames: I, config: &EngineConfig, parallelism: Parallelism) -> Result<TrackOutcome>
where
    I: IntoIterator<Item = &'a FrameAnnotations>,
{
    let mut t = Tracker::new(*config)?.with_parallelism(parallelism);
    let mut n = 0;
    for f in frames {
        t.process_frame(f)?;
        n += 1;
    }
    let clusterings = t.clusterings();
    Ok(TrackOutcome {
        intervals: t.finalize(),
        clusterings,
        frames: n,
    })
}

/// Tracks independent streams, one task per stream under
/// [`Parallelism::Auto`]. Each stream itself is processed sequentially.
pub fn track_batch(
    streams: &[Vec<FrameAnnotations>],
    config: &EngineConfig,
    parallelism: Parallelism,
) -> Vec<Result<TrackOutcome>> {
    exec::map_jobs(streams, parallelism, |frames| {
        track_frames(frames, config, Parallelism::Sequential)
    })
}

pub const INTERVAL_HEADER: [&str; 5] = [
    "customer_id",
    "garment_id",
    "start_frame",
    "end_frame",
    "duration_seconds",
];

#[derive(Serialize, Deserialize)]
struct IntervalRow {
    customer_id: String,
    garment_id: String,
    start_frame: u64,
    end_frame: u64,
    duration_seconds: f64,
}

fn csv_err(e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io("interval log", io),
            _ => unreachable!(),
        }
    } else {
        Error::Schema {
            line,
            message: e.to_string(),
        }
    }
}

/// Writes the interval log as CSV (LF line endings).
pub fn write_intervals<W: Write>(
    w: W,
    intervals: &[AssociationInterval],
    frame_duration: f64,
) -> Result<()> {
    let mut wr = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    wr.write_record(INTERVAL_HEADER).map_err(csv_err)?;
    for iv in intervals {
        wr.serialize(IntervalRow {
            customer_id: iv.customer_id.clone(),
            garment_id: iv.garment_id.clone(),
            start_frame: iv.start_frame,
            end_frame: iv.end_frame,
            duration_seconds: iv.duration_seconds(frame_duration),
        })
        .map_err(csv_err)?;
    }
    wr.flush().map_err(|e| Error::io("interval log", e))
}

pub fn read_intervals<R: Read>(r: R) -> Result<Vec<AssociationInterval>> {
    let mut rd = csv::Reader::from_reader(r);
    let headers = rd.headers().map_err(csv_err)?.clone();
    if headers.iter().collect::<Vec<_>>() != INTERVAL_HEADER {
        return Err(Error::Schema {
            line: 1,
            message: format!("expected header {}", INTERVAL_HEADER.join(",")),
        });
    }
    let mut out = Vec::new();
    for row in rd.deserialize::<IntervalRow>() {
        let row = row.map_err(csv_err)?;
        if row.start_frame > row.end_frame {
            return Err(Error::Schema {
                line: out.len() + 2,
                message: format!("start_frame {} > end_frame {}", row.start_frame, row.end_frame),
            });
        }
        out.push(AssociationInterval {
            customer_id: row.customer_id,
            garment_id: row.garment_id,
            start_frame: row.start_frame,
            end_frame: row.end_frame,
        });
    }
    Ok(out)
}
