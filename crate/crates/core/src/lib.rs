//! Customer-garment association for retail annotation streams.
//!
//! Each frame's garments seed a weighted k-means over garment and customer
//! centres ([`wkm`]). The [`mcoke`] layer ties every cluster to one garment
//! and grants overlapping memberships within `max_dist`. The [`tracker`]
//! re-clusters only on significant change and turns membership changes into
//! association intervals, which [`analytics`] aggregates into demographic,
//! dwell-time and colour reports. [`synth`] produces seeded scenarios with
//! planted ground truth.

pub mod analytics;
pub mod cli;
pub mod error;
pub mod exec;
pub mod mcoke;
pub mod model;
pub mod stream;
pub mod synth;
pub mod tracker;
pub mod wkm;

pub use error::{Error, Result};
pub use exec::Parallelism;
pub use mcoke::{cluster_frame, LabeledClustering, MembershipTable};
pub use model::{age_group, bbox_center, AgeGroup, BBox, EngineConfig, FrameAnnotations, Gender, Point2D};
pub use tracker::{AssociationInterval, Tracker};
pub use wkm::{weighted_kmeans, WeightedPoint};
