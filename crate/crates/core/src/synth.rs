//! Seeded synthetic scenarios with planted customer-garment associations.
//!
//! Garments sit on a horizontal line `garment_spacing` apart. Customer `i`
//! starts near garment `i % n_garments`, at most `customer_radius` from its
//! centre including per-frame jitter. A scripted move takes a customer off
//! camera for one frame and brings it back near another garment on the
//! next, so the planted association breaks at the move frame.
//!
//! All randomness comes from one ChaCha8 generator seeded with
//! `seed`; sampling uses only rejection and basic arithmetic, so output is
//! identical across platforms.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    BBox, CustomerObservation, FrameAnnotations, Gender, GarmentObservation, Point2D, EXPRESSIONS,
    MAX_AGE,
};
use crate::stream::{Stream, StreamHeader};
use crate::tracker::{sort_intervals, AssociationInterval};

pub const PRNG_ID: &str = "chacha8/rand_chacha-0.3";
pub const PALETTE: [&str; 8] = [
    "Red", "Green", "Blue", "Orange", "Pink", "White", "Gray", "Yellow",
];

const LINE_ORIGIN: Point2D = Point2D::new(100.0, 300.0);
const GARMENT_SIZE: (f64, f64) = (60.0, 80.0);
const CUSTOMER_SIZE: (f64, f64) = (40.0, 120.0);
const EXPRESSION_PERIOD: u64 = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptedMove {
    pub customer_id: String,
    /// The customer is off camera on this frame and reappears on the next.
    pub frame: u64,
    pub garment: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpressionChange {
    pub from_frame: u64,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Demographic {
    pub age: u32,
    pub gender: Gender,
    /// Label in effect from each `from_frame` on; the first entry should
    /// start at frame 0.
    pub expressions: Vec<ExpressionChange>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub n_garments: usize,
    pub garment_spacing: f64,
    pub n_customers: usize,
    pub customer_radius: f64,
    pub jitter: f64,
    pub n_frames: u64,
    #[serde(default)]
    pub moves: Vec<ScriptedMove>,
    /// Per customer, by index. Customers beyond the list are sampled.
    #[serde(default)]
    pub demographics: Vec<Demographic>,
    /// Per garment, by index. Garments beyond the list cycle the palette.
    #[serde(default)]
    pub colors: Vec<String>,
    /// When set, jitter must stay below half of this re-cluster threshold.
    #[serde(default)]
    pub guard_mindist: Option<f64>,
    #[serde(default = "default_frame_duration")]
    pub frame_duration: f64,
}

fn default_frame_duration() -> f64 {
    1.0 / 25.0
}

pub fn customer_id(i: usize) -> String {
    format!("c{i}")
}

pub fn garment_id(j: usize) -> String {
    format!("g{j}")
}

impl ScenarioConfig {
    /// The reference recovery scenario: 4 garments 400 px apart, 10
    /// customers within 50 px, 2 px jitter, 500 frames, 3 moves.
    pub fn reference(seed: u64) -> Self {
        Self {
            seed,
            n_garments: 4,
            garment_spacing: 400.0,
            n_customers: 10,
            customer_radius: 50.0,
            jitter: 2.0,
            n_frames: 500,
            moves: vec![
                ScriptedMove { customer_id: "c1".into(), frame: 120, garment: 3 },
                ScriptedMove { customer_id: "c4".into(), frame: 260, garment: 2 },
                ScriptedMove { customer_id: "c1".into(), frame: 400, garment: 0 },
            ],
            demographics: Vec::new(),
            colors: Vec::new(),
            guard_mindist: Some(20.0),
            frame_duration: default_frame_duration(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.n_garments == 0 {
            return bad("n_garments must be at least 1".into());
        }
        if self.n_frames == 0 {
            return bad("n_frames must be at least 1".into());
        }
        if !(self.garment_spacing > 0.0 && self.garment_spacing.is_finite()) {
            return bad(format!("garment_spacing must be > 0, got {}", self.garment_spacing));
        }
        if !(self.customer_radius > 0.0 && self.customer_radius < self.garment_spacing / 2.0) {
            return bad(format!(
                "customer_radius ({}) must be in (0, garment_spacing / 2 = {})",
                self.customer_radius,
                self.garment_spacing / 2.0
            ));
        }
        if !(self.jitter >= 0.0 && self.jitter < self.customer_radius) {
            return bad(format!(
                "jitter ({}) must be in [0, customer_radius)",
                self.jitter
            ));
        }
        if let Some(m) = self.guard_mindist {
            if self.jitter.partial_cmp(&(m / 2.0)) != Some(std::cmp::Ordering::Less) {
                return bad(format!("jitter ({}) must be below mindist / 2 = {}", self.jitter, m / 2.0));
            }
        }
        if !(self.frame_duration > 0.0 && self.frame_duration.is_finite()) {
            return bad(format!("frame_duration must be > 0, got {}", self.frame_duration));
        }
        for d in &self.demographics {
            if d.age as i64 > MAX_AGE {
                return bad(format!("demographic age {} outside [0, {MAX_AGE}]", d.age));
            }
            if d.expressions.iter().any(|e| e.label.is_empty()) {
                return bad("empty expression label".into());
            }
        }
        if self.colors.iter().any(|c| c.is_empty()) {
            return bad("empty colour label".into());
        }
        let mut last_move: Vec<Option<u64>> = vec![None; self.n_customers];
        let mut moves = self.moves.clone();
        moves.sort_by_key(|m| m.frame);
        for m in &moves {
            let idx = (0..self.n_customers)
                .find(|&i| customer_id(i) == m.customer_id)
                .ok_or_else(|| Error::Config(format!("move names unknown customer {:?}", m.customer_id)))?;
            if m.garment >= self.n_garments {
                return bad(format!("move targets garment {} of {}", m.garment, self.n_garments));
            }
            if m.frame == 0 || m.frame + 1 >= self.n_frames {
                return bad(format!(
                    "move at frame {} must leave room before and after (1..{})",
                    m.frame,
                    self.n_frames.saturating_sub(1)
                ));
            }
            if let Some(prev) = last_move[idx] {
                if m.frame < prev + 2 {
                    return bad(format!(
                        "moves of {:?} at frames {prev} and {} are too close",
                        m.customer_id, m.frame
                    ));
                }
            }
            last_move[idx] = Some(m.frame);
        }
        Ok(())
    }

    fn garment_center(&self, j: usize) -> Point2D {
        Point2D::new(LINE_ORIGIN.x + j as f64 * self.garment_spacing, LINE_ORIGIN.y)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct GroundTruth {
    pub intervals: Vec<AssociationInterval>,
}

/// Uniform point in the disc of radius `r` around `c`, by rejection.
fn in_disc(rng: &mut ChaCha8Rng, c: Point2D, r: f64) -> Point2D {
    loop {
        let x: f64 = rng.gen_range(-1.0..1.0);
        let y: f64 = rng.gen_range(-1.0..1.0);
        if x * x + y * y <= 1.0 {
            return Point2D::new(c.x + r * x, c.y + r * y);
        }
    }
}

fn sample_demographic(rng: &mut ChaCha8Rng, n_frames: u64) -> Demographic {
    let age = rng.gen_range(5..=85);
    let gender = if rng.gen_bool(0.5) { Gender::Female } else { Gender::Male };
    let mut expressions = vec![ExpressionChange {
        from_frame: 0,
        label: EXPRESSIONS[rng.gen_range(0..EXPRESSIONS.len())].to_string(),
    }];
    let mut f = EXPRESSION_PERIOD;
    while f < n_frames {
        if rng.gen_bool(0.3) {
            expressions.push(ExpressionChange {
                from_frame: f,
                label: EXPRESSIONS[rng.gen_range(0..EXPRESSIONS.len())].to_string(),
            });
        }
        f += EXPRESSION_PERIOD;
    }
    Demographic { age, gender, expressions }
}

fn expression_at(d: &Demographic, frame: u64) -> &str {
    d.expressions
        .iter()
        .rfind(|e| e.from_frame <= frame)
        .or(d.expressions.first())
        .map(|e| e.label.as_str())
        .unwrap_or("neutral")
}

pub fn generate(config: &ScenarioConfig) -> Result<(Stream, GroundTruth)> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let n_frames = config.n_frames;
    let placement_radius = config.customer_radius - config.jitter;

    let colors: Vec<String> = (0..config.n_garments)
        .map(|j| {
            config
                .colors
                .get(j)
                .cloned()
                .unwrap_or_else(|| PALETTE[j % PALETTE.len()].to_string())
        })
        .collect();
    let demographics: Vec<Demographic> = (0..config.n_customers)
        .map(|i| {
            config
                .demographics
                .get(i)
                .cloned()
                .unwrap_or_else(|| sample_demographic(&mut rng, n_frames))
        })
        .collect();

    let mut garment_of: Vec<usize> = (0..config.n_customers).map(|i| i % config.n_garments).collect();
    let mut base: Vec<Point2D> = garment_of
        .iter()
        .map(|&j| in_disc(&mut rng, config.garment_center(j), placement_radius))
        .collect();
    let mut segment_start: Vec<u64> = vec![0; config.n_customers];

    let mut moves = config.moves.clone();
    moves.sort_by(|a, b| (a.frame, &a.customer_id).cmp(&(b.frame, &b.customer_id)));
    let move_of = |i: usize, f: u64| {
        let id = customer_id(i);
        moves.iter().find(move |m| m.frame == f && m.customer_id == id)
    };

    let mut truth = Vec::new();
    let mut frames = Vec::with_capacity(n_frames as usize);
    for f in 0..n_frames {
        let mut frame = FrameAnnotations::new(f);
        for (j, color) in colors.iter().enumerate().take(config.n_garments) {
            frame.garments.push(GarmentObservation {
                tracking_id: garment_id(j),
                frame: f,
                bbox: BBox::around(config.garment_center(j), GARMENT_SIZE.0, GARMENT_SIZE.1),
                color: color.clone(),
            });
        }
        for i in 0..config.n_customers {
            if let Some(m) = move_of(i, f) {
                truth.push(AssociationInterval {
                    customer_id: customer_id(i),
                    garment_id: garment_id(garment_of[i]),
                    start_frame: segment_start[i],
                    end_frame: f - 1,
                });
                garment_of[i] = m.garment;
                base[i] = in_disc(&mut rng, config.garment_center(m.garment), placement_radius);
                segment_start[i] = f + 1;
                continue;
            }
            let pos = if config.jitter > 0.0 {
                in_disc(&mut rng, base[i], config.jitter)
            } else {
                base[i]
            };
            let d = &demographics[i];
            frame.customers.push(CustomerObservation {
                tracking_id: customer_id(i),
                frame: f,
                bbox: BBox::around(pos, CUSTOMER_SIZE.0, CUSTOMER_SIZE.1),
                age_years: d.age,
                gender: d.gender,
                expression: expression_at(d, f).to_string(),
            });
        }
        frames.push(frame);
    }
    for i in 0..config.n_customers {
        truth.push(AssociationInterval {
            customer_id: customer_id(i),
            garment_id: garment_id(garment_of[i]),
            start_frame: segment_start[i],
            end_frame: n_frames - 1,
        });
    }
    sort_intervals(&mut truth);

    let header = StreamHeader {
        generator: "mcoke-synth".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        prng: PRNG_ID.into(),
        seed: config.seed,
    };
    Ok((
        Stream {
            header: Some(header),
            frames,
        },
        GroundTruth { intervals: truth },
    ))
}
