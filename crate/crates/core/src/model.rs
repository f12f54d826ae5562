//! Domain types shared across the pipeline: geometry, per-frame
//! observations, demographic vocabularies and engine configuration.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Recommended expression vocabulary. Any non-empty label is accepted.
pub const EXPRESSIONS: [&str; 7] = [
    "angry", "disgust", "fear", "happy", "sad", "surprise", "neutral",
];

pub const MAX_AGE: i64 = 120;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2D {
    pub x: f64,
    pub y: f64,
}

impl Point2D {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn distance(&self, other: &Point2D) -> f64 {
        self.distance_sq(other).sqrt()
    }

    pub fn distance_sq(&self, other: &Point2D) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }
}

/// Axis-aligned box in pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BBox {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl BBox {
    pub fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Result<Self> {
        let b = Self {
            x_min,
            y_min,
            x_max,
            y_max,
        };
        b.check()?;
        Ok(b)
    }

    /// Box of the given size centred on `c`.
    pub fn around(c: Point2D, width: f64, height: f64) -> Self {
        Self {
            x_min: c.x - width / 2.0,
            y_min: c.y - height / 2.0,
            x_max: c.x + width / 2.0,
            y_max: c.y + height / 2.0,
        }
    }

    pub fn check(&self) -> Result<()> {
        let coords = [self.x_min, self.y_min, self.x_max, self.y_max];
        if coords.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation(format!(
                "bbox has non-finite coordinate: {coords:?}"
            )));
        }
        if self.x_min > self.x_max || self.y_min > self.y_max {
            return Err(Error::Validation(format!(
                "bbox corners out of order: {coords:?}"
            )));
        }
        Ok(())
    }

    pub fn center(&self) -> Point2D {
        bbox_center(self)
    }

    pub fn to_array(&self) -> [f64; 4] {
        [self.x_min, self.y_min, self.x_max, self.y_max]
    }
}

/// Arithmetic midpoint of the box corners.
pub fn bbox_center(b: &BBox) -> Point2D {
    Point2D::new((b.x_min + b.x_max) / 2.0, (b.y_min + b.y_max) / 2.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gender {
    Female,
    Male,
}

impl Gender {
    pub const ALL: [Gender; 2] = [Gender::Female, Gender::Male];

    pub fn as_str(&self) -> &'static str {
        match self {
            Gender::Female => "female",
            Gender::Male => "male",
        }
    }
}

impl fmt::Display for Gender {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgeGroup {
    Child,
    Youth,
    MiddleAged,
    Elderly,
}

impl AgeGroup {
    pub const ALL: [AgeGroup; 4] = [
        AgeGroup::Child,
        AgeGroup::Youth,
        AgeGroup::MiddleAged,
        AgeGroup::Elderly,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            AgeGroup::Child => "child",
            AgeGroup::Youth => "youth",
            AgeGroup::MiddleAged => "middle_aged",
            AgeGroup::Elderly => "elderly",
        }
    }
}

impl fmt::Display for AgeGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Maps an age in years onto its age group.
///
/// Child is 1-17, youth 18-29, middle aged 30-49, elderly 50-90. Age 0 is
/// clamped into child and 91-120 into elderly; anything outside 0-120 is
/// rejected.
pub fn age_group(age_years: i64) -> Result<AgeGroup> {
    match age_years {
        0..=17 => Ok(AgeGroup::Child),
        18..=29 => Ok(AgeGroup::Youth),
        30..=49 => Ok(AgeGroup::MiddleAged),
        50..=MAX_AGE => Ok(AgeGroup::Elderly),
        _ => Err(Error::Validation(format!(
            "age {age_years} outside [0, {MAX_AGE}]"
        ))),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CustomerObservation {
    pub tracking_id: String,
    pub frame: u64,
    pub bbox: BBox,
    pub age_years: u32,
    pub gender: Gender,
    pub expression: String,
}

impl CustomerObservation {
    pub fn age_group(&self) -> AgeGroup {
        // age_years is range-checked at construction
        age_group(self.age_years as i64).unwrap_or(AgeGroup::Elderly)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GarmentObservation {
    pub tracking_id: String,
    pub frame: u64,
    pub bbox: BBox,
    pub color: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EntityKind {
    Garment,
    Customer,
}

/// Tracking id qualified by its namespace, so a customer and a garment may
/// share a raw id without colliding.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EntityKey {
    pub kind: EntityKind,
    pub id: String,
}

impl EntityKey {
    pub fn customer(id: impl Into<String>) -> Self {
        Self {
            kind: EntityKind::Customer,
            id: id.into(),
        }
    }

    pub fn garment(id: impl Into<String>) -> Self {
        Self {
            kind: EntityKind::Garment,
            id: id.into(),
        }
    }
}

impl fmt::Display for EntityKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            EntityKind::Garment => write!(f, "g:{}", self.id),
            EntityKind::Customer => write!(f, "c:{}", self.id),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FrameAnnotations {
    pub frame: u64,
    pub customers: Vec<CustomerObservation>,
    pub garments: Vec<GarmentObservation>,
}

impl FrameAnnotations {
    pub fn new(frame: u64) -> Self {
        Self {
            frame,
            ..Default::default()
        }
    }

    /// Checks frame-index consistency, id uniqueness and per-entity fields.
    /// Returns every violation found, in document order.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut seen = BTreeSet::new();
        for (i, c) in self.customers.iter().enumerate() {
            let at = format!("customers[{i}]");
            if c.tracking_id.is_empty() {
                out.push(format!("{at}.id: empty tracking id"));
            } else if !seen.insert(EntityKey::customer(c.tracking_id.clone())) {
                out.push(format!("{at}.id: duplicate customer id {:?}", c.tracking_id));
            }
            if c.frame != self.frame {
                out.push(format!("{at}: frame {} != {}", c.frame, self.frame));
            }
            if let Err(e) = c.bbox.check() {
                out.push(format!("{at}.bbox: {e}"));
            }
            if c.age_years as i64 > MAX_AGE {
                out.push(format!("{at}.age: {} outside [0, {MAX_AGE}]", c.age_years));
            }
        }
        for (i, g) in self.garments.iter().enumerate() {
            let at = format!("garments[{i}]");
            if g.tracking_id.is_empty() {
                out.push(format!("{at}.id: empty tracking id"));
            } else if !seen.insert(EntityKey::garment(g.tracking_id.clone())) {
                out.push(format!("{at}.id: duplicate garment id {:?}", g.tracking_id));
            }
            if g.frame != self.frame {
                out.push(format!("{at}: frame {} != {}", g.frame, self.frame));
            }
            if let Err(e) = g.bbox.check() {
                out.push(format!("{at}.bbox: {e}"));
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        match self.violations().into_iter().next() {
            None => Ok(()),
            Some(v) => Err(Error::Validation(format!("frame {}: {v}", self.frame))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    pub garment_weight: f64,
    pub customer_weight: f64,
    /// Displacement (pixels) beyond which re-clustering triggers. Zero means
    /// any movement at all triggers.
    pub mindist: f64,
    /// Seconds per frame.
    pub frame_duration: f64,
    pub wkm_max_iters: usize,
    pub wkm_tol: f64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            garment_weight: 10.0,
            customer_weight: 1.0,
            mindist: 20.0,
            frame_duration: 1.0 / 25.0,
            wkm_max_iters: 100,
            wkm_tol: 1e-6,
        }
    }
}

impl EngineConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !(self.customer_weight > 0.0 && self.customer_weight.is_finite()) {
            return bad(format!("customer_weight must be > 0, got {}", self.customer_weight));
        }
        if !(self.garment_weight > self.customer_weight && self.garment_weight.is_finite()) {
            return bad(format!(
                "garment_weight ({}) must exceed customer_weight ({})",
                self.garment_weight, self.customer_weight
            ));
        }
        if !(self.mindist >= 0.0 && self.mindist.is_finite()) {
            return bad(format!("mindist must be >= 0, got {}", self.mindist));
        }
        if !(self.frame_duration > 0.0 && self.frame_duration.is_finite()) {
            return bad(format!("frame_duration must be > 0, got {}", self.frame_duration));
        }
        if self.wkm_max_iters == 0 {
            return bad("wkm_max_iters must be positive".into());
        }
        if !(self.wkm_tol >= 0.0 && self.wkm_tol.is_finite()) {
            return bad(format!("wkm_tol must be >= 0, got {}", self.wkm_tol));
        }
        Ok(())
    }
}
