//! JSON Lines annotation stream: one object per frame, frames in strictly
//! increasing order.
//!
//! ```text
//! {"frame": 0, "customers": [{"id": "c1", "bbox": [x0,y0,x1,y1], "age": 34,
//!   "gender": "female", "expression": "happy"}],
//!  "garments": [{"id": "g1", "bbox": [x0,y0,x1,y1], "color": "Blue"}]}
//! ```
//!
//! The first line may instead be a header object `{"header": {...}}`
//! describing how the stream was produced; readers skip it.

use std::collections::BTreeSet;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    BBox, CustomerObservation, EntityKey, FrameAnnotations, Gender, GarmentObservation, MAX_AGE,
};

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct StreamHeader {
    #[serde(default)]
    pub generator: String,
    #[serde(default)]
    pub version: String,
    #[serde(default)]
    pub prng: String,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Stream {
    pub header: Option<StreamHeader>,
    pub frames: Vec<FrameAnnotations>,
}

#[derive(Serialize, Deserialize)]
struct HeaderLine {
    header: StreamHeader,
}

#[derive(Serialize, Deserialize)]
struct RawFrame {
    frame: i64,
    #[serde(default)]
    customers: Vec<RawCustomer>,
    #[serde(default)]
    garments: Vec<RawGarment>,
}

#[derive(Serialize, Deserialize)]
struct RawCustomer {
    id: String,
    bbox: [f64; 4],
    age: i64,
    gender: Gender,
    expression: String,
}

#[derive(Serialize, Deserialize)]
struct RawGarment {
    id: String,
    bbox: [f64; 4],
    color: String,
}

enum Line {
    Blank,
    Header(StreamHeader),
    Frame(FrameAnnotations),
}

/// Parses one line. `first` allows a header object.
fn parse_line(text: &str, first: bool) -> std::result::Result<Line, Vec<String>> {
    let trimmed = text.trim();
    if trimmed.is_empty() {
        return Ok(Line::Blank);
    }
    if first && trimmed.contains("\"header\"") {
        if let Ok(h) = serde_json::from_str::<HeaderLine>(trimmed) {
            return Ok(Line::Header(h.header));
        }
    }
    let raw: RawFrame = serde_json::from_str(trimmed).map_err(|e| vec![format!("json: {e}")])?;
    let mut errs = Vec::new();
    if raw.frame < 0 {
        errs.push(format!("frame: negative index {}", raw.frame));
    }
    let frame = raw.frame.max(0) as u64;
    let mut out = FrameAnnotations::new(frame);
    for (i, c) in raw.customers.into_iter().enumerate() {
        if !(0..=MAX_AGE).contains(&c.age) {
            errs.push(format!("customers[{i}].age: {} outside [0, {MAX_AGE}]", c.age));
        }
        if c.expression.is_empty() {
            errs.push(format!("customers[{i}].expression: empty label"));
        }
        let [a, b, x, y] = c.bbox;
        out.customers.push(CustomerObservation {
            tracking_id: c.id,
            frame,
            bbox: BBox {
                x_min: a,
                y_min: b,
                x_max: x,
                y_max: y,
            },
            age_years: c.age.clamp(0, MAX_AGE) as u32,
            gender: c.gender,
            expression: c.expression,
        });
    }
    for (i, g) in raw.garments.into_iter().enumerate() {
        if g.color.is_empty() {
            errs.push(format!("garments[{i}].color: empty label"));
        }
        let [a, b, x, y] = g.bbox;
        out.garments.push(GarmentObservation {
            tracking_id: g.id,
            frame,
            bbox: BBox {
                x_min: a,
                y_min: b,
                x_max: x,
                y_max: y,
            },
            color: g.color,
        });
    }
    errs.extend(out.violations());
    if errs.is_empty() {
        Ok(Line::Frame(out))
    } else {
        Err(errs)
    }
}

/// Streaming reader yielding validated frames in order. Errors carry the
/// 1-based line number of the offending line.
pub struct FrameReader<R> {
    lines: std::io::Lines<R>,
    line_no: usize,
    last_frame: Option<u64>,
    header: Option<StreamHeader>,
    done: bool,
}

impl<R: BufRead> FrameReader<R> {
    pub fn new(reader: R) -> Self {
        Self {
            lines: reader.lines(),
            line_no: 0,
            last_frame: None,
            header: None,
            done: false,
        }
    }

    pub fn header(&self) -> Option<&StreamHeader> {
        self.header.as_ref()
    }
}

impl<R: BufRead> Iterator for FrameReader<R> {
    type Item = Result<FrameAnnotations>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        loop {
            let text = match self.lines.next()? {
                Ok(t) => t,
                Err(e) => {
                    self.done = true;
                    return Some(Err(Error::io("reading stream", e)));
                }
            };
            self.line_no += 1;
            let fail = |message: String| Error::Schema {
                line: self.line_no,
                message,
            };
            match parse_line(&text, self.line_no == 1) {
                Ok(Line::Blank) => continue,
                Ok(Line::Header(h)) => {
                    self.header = Some(h);
                    continue;
                }
                Ok(Line::Frame(f)) => {
                    if let Some(last) = self.last_frame {
                        if f.frame <= last {
                            self.done = true;
                            return Some(Err(fail(format!(
                                "frame {} out of order (previous frame {last})",
                                f.frame
                            ))));
                        }
                    }
                    self.last_frame = Some(f.frame);
                    return Some(Ok(f));
                }
                Err(errs) => {
                    self.done = true;
                    return Some(Err(fail(errs.join("; "))));
                }
            }
        }
    }
}

/// Reads a whole stream, failing on the first violation or if it holds no
/// frames.
pub fn read_stream<R: BufRead>(reader: R) -> Result<Stream> {
    let mut rd = FrameReader::new(reader);
    let mut frames = Vec::new();
    for f in rd.by_ref() {
        frames.push(f?);
    }
    if frames.is_empty() {
        return Err(Error::NoFrames);
    }
    Ok(Stream {
        header: rd.header,
        frames,
    })
}

pub fn read_stream_str(text: &str) -> Result<Stream> {
    read_stream(text.as_bytes())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, Default)]
pub struct ValidationReport {
    pub frames: usize,
    pub customers: usize,
    pub garments: usize,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks every line and collects all violations instead of stopping at the
/// first one. Distinct customer and garment ids are counted over valid frames.
pub fn validate_stream<R: BufRead>(reader: R) -> Result<ValidationReport> {
    let mut report = ValidationReport::default();
    let mut customers = BTreeSet::new();
    let mut garments = BTreeSet::new();
    let mut last: Option<u64> = None;
    for (idx, text) in reader.lines().enumerate() {
        let text = text.map_err(|e| Error::io("reading stream", e))?;
        let line = idx + 1;
        match parse_line(&text, line == 1) {
            Ok(Line::Blank) | Ok(Line::Header(_)) => {}
            Ok(Line::Frame(f)) => {
                if let Some(prev) = last {
                    if f.frame <= prev {
                        report.violations.push(Violation {
                            line,
                            message: format!(
                                "frame {} out of order (previous frame {prev})",
                                f.frame
                            ),
                        });
                        continue;
                    }
                }
                last = Some(f.frame);
                report.frames += 1;
                customers.extend(f.customers.iter().map(|c| EntityKey::customer(&*c.tracking_id)));
                garments.extend(f.garments.iter().map(|g| EntityKey::garment(&*g.tracking_id)));
            }
            Err(errs) => report
                .violations
                .extend(errs.into_iter().map(|message| Violation { line, message })),
        }
    }
    if report.frames == 0 && report.violations.is_empty() {
        report.violations.push(Violation {
            line: 0,
            message: "no frames".into(),
        });
    }
    report.customers = customers.len();
    report.garments = garments.len();
    Ok(report)
}

pub fn write_frame<W: Write>(w: &mut W, frame: &FrameAnnotations) -> Result<()> {
    let raw = RawFrame {
        frame: frame.frame as i64,
        customers: frame
            .customers
            .iter()
            .map(|c| RawCustomer {
                id: c.tracking_id.clone(),
                bbox: c.bbox.to_array(),
                age: c.age_years as i64,
                gender: c.gender,
                expression: c.expression.clone(),
            })
            .collect(),
        garments: frame
            .garments
            .iter()
            .map(|g| RawGarment {
                id: g.tracking_id.clone(),
                bbox: g.bbox.to_array(),
                color: g.color.clone(),
            })
            .collect(),
    };
    let line = serde_json::to_string(&raw).map_err(|e| Error::Invariant(e.to_string()))?;
    writeln!(w, "{line}").map_err(|e| Error::io("writing stream", e))
}

pub fn write_stream<W: Write>(w: &mut W, stream: &Stream) -> Result<()> {
    if let Some(h) = &stream.header {
        let line = serde_json::to_string(&HeaderLine { header: h.clone() })
            .map_err(|e| Error::Invariant(e.to_string()))?;
        writeln!(w, "{line}").map_err(|e| Error::io("writing stream", e))?;
    }
    for f in &stream.frames {
        write_frame(w, f)?;
    }
    Ok(())
}
