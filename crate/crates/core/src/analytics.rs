//! Report builders over the interval log and the annotation stream:
//! population shares by gender and age group, in-store dwell statistics per
//! demographic, expression counts per garment colour and time spent per
//! garment colour.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::Serialize;
use serde_json::json;

use crate::error::{Error, Result};
use crate::model::{age_group, AgeGroup, FrameAnnotations, Gender};
use crate::tracker::AssociationInterval;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct DemographicKey {
    pub gender: Gender,
    pub age_group: AgeGroup,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CustomerProfile {
    pub customer_id: String,
    pub gender: Gender,
    /// Modal age over all observations, lowest age on ties.
    pub age_years: u32,
    pub age_group: AgeGroup,
    /// Expression label per observed frame.
    pub expressions: BTreeMap<u64, String>,
    pub first_frame: u64,
    pub last_frame: u64,
}

impl CustomerProfile {
    pub fn key(&self) -> DemographicKey {
        DemographicKey {
            gender: self.gender,
            age_group: self.age_group,
        }
    }

    /// Frames from first to last sighting, inclusive.
    pub fn presence_frames(&self) -> u64 {
        self.last_frame - self.first_frame + 1
    }
}

/// Most frequent value; on equal counts the smallest value wins.
fn mode<T: Ord + Clone>(counts: &BTreeMap<T, usize>) -> Option<T> {
    let mut best: Option<(&T, usize)> = None;
    for (v, &n) in counts {
        if best.is_none_or(|(_, b)| n > b) {
            best = Some((v, n));
        }
    }
    best.map(|(v, _)| v.clone())
}

pub fn build_profiles(frames: &[FrameAnnotations]) -> BTreeMap<String, CustomerProfile> {
    #[derive(Default)]
    struct Acc {
        ages: BTreeMap<u32, usize>,
        genders: BTreeMap<Gender, usize>,
        expressions: BTreeMap<u64, String>,
    }
    let mut acc: BTreeMap<&str, Acc> = BTreeMap::new();
    for f in frames {
        for c in &f.customers {
            let a = acc.entry(&c.tracking_id).or_default();
            *a.ages.entry(c.age_years).or_default() += 1;
            // Female sorts first, so it wins gender ties
            *a.genders.entry(c.gender).or_default() += 1;
            a.expressions.insert(f.frame, c.expression.clone());
        }
    }
    acc.into_iter()
        .map(|(id, a)| {
            let age = mode(&a.ages).unwrap_or(0);
            let first_frame = *a.expressions.keys().next().unwrap_or(&0);
            let last_frame = *a.expressions.keys().next_back().unwrap_or(&0);
            let profile = CustomerProfile {
                customer_id: id.to_string(),
                gender: mode(&a.genders).unwrap_or(Gender::Female),
                age_years: age,
                age_group: age_group(age as i64).unwrap_or(AgeGroup::Elderly),
                expressions: a.expressions,
                first_frame,
                last_frame,
            };
            (id.to_string(), profile)
        })
        .collect()
}

/// Modal colour per garment id; lexicographically smallest label on ties.
pub fn garment_colors(frames: &[FrameAnnotations]) -> BTreeMap<String, String> {
    let mut acc: BTreeMap<&str, BTreeMap<&str, usize>> = BTreeMap::new();
    for f in frames {
        for g in &f.garments {
            *acc.entry(&g.tracking_id)
                .or_default()
                .entry(&g.color)
                .or_default() += 1;
        }
    }
    acc.into_iter()
        .filter_map(|(id, counts)| mode(&counts).map(|c| (id.to_string(), c.to_string())))
        .collect()
}

fn percentages<K: Ord + Clone>(counts: &BTreeMap<K, usize>) -> BTreeMap<K, f64> {
    let total: usize = counts.values().sum();
    counts
        .iter()
        .map(|(k, &n)| (k.clone(), n as f64 * 100.0 / total as f64))
        .collect()
}

/// Share of customers per gender, both genders always present.
pub fn gender_share(profiles: &BTreeMap<String, CustomerProfile>) -> Result<BTreeMap<Gender, f64>> {
    if profiles.is_empty() {
        return Err(Error::EmptyPopulation);
    }
    let mut counts: BTreeMap<Gender, usize> = Gender::ALL.iter().map(|g| (*g, 0)).collect();
    for p in profiles.values() {
        *counts.entry(p.gender).or_default() += 1;
    }
    Ok(percentages(&counts))
}

/// Age-group shares within each gender. Genders without customers and age
/// groups without customers are omitted.
pub fn age_share_by_gender(
    profiles: &BTreeMap<String, CustomerProfile>,
) -> Result<BTreeMap<Gender, BTreeMap<AgeGroup, f64>>> {
    if profiles.is_empty() {
        return Err(Error::EmptyPopulation);
    }
    let mut counts: BTreeMap<Gender, BTreeMap<AgeGroup, usize>> = BTreeMap::new();
    for p in profiles.values() {
        *counts
            .entry(p.gender)
            .or_default()
            .entry(p.age_group)
            .or_default() += 1;
    }
    Ok(counts
        .into_iter()
        .map(|(g, c)| (g, percentages(&c)))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DwellStats {
    pub customers: usize,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub median: f64,
}

impl DwellStats {
    fn from_samples(mut xs: Vec<f64>) -> Option<Self> {
        if xs.is_empty() {
            return None;
        }
        let n = xs.len();
        let mean = xs.iter().sum::<f64>() / n as f64;
        xs.sort_by(f64::total_cmp);
        let median = if n % 2 == 1 {
            xs[n / 2]
        } else {
            (xs[n / 2 - 1] + xs[n / 2]) / 2.0
        };
        Some(Self {
            customers: n,
            min: xs[0],
            max: xs[n - 1],
            mean,
            median,
        })
    }
}

/// In-store time per customer is the presence span (first to last sighting),
/// summarised per demographic.
pub fn dwell_by_demographic(
    profiles: &BTreeMap<String, CustomerProfile>,
    frame_duration: f64,
) -> BTreeMap<DemographicKey, DwellStats> {
    let mut samples: BTreeMap<DemographicKey, Vec<f64>> = BTreeMap::new();
    for p in profiles.values() {
        samples
            .entry(p.key())
            .or_default()
            .push(p.presence_frames() as f64 * frame_duration);
    }
    samples
        .into_iter()
        .filter_map(|(k, xs)| DwellStats::from_samples(xs).map(|s| (k, s)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct ExpressionRecord {
    pub gender: Gender,
    pub age_years: u32,
    pub color: String,
    pub expression: String,
    pub count: u64,
}

fn lookup<'a>(
    iv: &AssociationInterval,
    profiles: &'a BTreeMap<String, CustomerProfile>,
    colors: &'a BTreeMap<String, String>,
) -> Result<(&'a CustomerProfile, &'a str)> {
    let p = profiles.get(&iv.customer_id).ok_or_else(|| {
        Error::Validation(format!("interval names unknown customer {:?}", iv.customer_id))
    })?;
    let c = colors.get(&iv.garment_id).ok_or_else(|| {
        Error::Validation(format!("interval names unknown garment {:?}", iv.garment_id))
    })?;
    Ok((p, c))
}

/// Counts (gender, age, colour, expression) over every frame of every
/// interval in which the customer was observed. Overlapping associations
/// contribute once per garment.
pub fn expression_by_color(
    profiles: &BTreeMap<String, CustomerProfile>,
    intervals: &[AssociationInterval],
    colors: &BTreeMap<String, String>,
) -> Result<Vec<ExpressionRecord>> {
    let mut counts: BTreeMap<(Gender, u32, &str, &str), u64> = BTreeMap::new();
    for iv in intervals {
        let (p, color) = lookup(iv, profiles, colors)?;
        for (_, expr) in p.expressions.range(iv.start_frame..=iv.end_frame) {
            *counts
                .entry((p.gender, p.age_years, color, expr.as_str()))
                .or_default() += 1;
        }
    }
    Ok(counts
        .into_iter()
        .map(|((gender, age_years, color, expression), count)| ExpressionRecord {
            gender,
            age_years,
            color: color.to_string(),
            expression: expression.to_string(),
            count,
        })
        .collect())
}

/// Associated time per (demographic, garment colour) in seconds.
pub fn time_by_color(
    profiles: &BTreeMap<String, CustomerProfile>,
    intervals: &[AssociationInterval],
    colors: &BTreeMap<String, String>,
    frame_duration: f64,
) -> Result<BTreeMap<(DemographicKey, String), f64>> {
    // integer frame totals keep the sum independent of interval order
    let mut frames: BTreeMap<(DemographicKey, String), u64> = BTreeMap::new();
    for iv in intervals {
        let (p, color) = lookup(iv, profiles, colors)?;
        *frames.entry((p.key(), color.to_string())).or_default() += iv.frames();
    }
    Ok(frames
        .into_iter()
        .map(|(k, n)| (k, n as f64 * frame_duration))
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportBundle {
    pub gender_share: BTreeMap<Gender, f64>,
    pub age_share_by_gender: BTreeMap<Gender, BTreeMap<AgeGroup, f64>>,
    pub dwell_by_demographic: BTreeMap<DemographicKey, DwellStats>,
    pub expression_by_color: Vec<ExpressionRecord>,
    pub time_by_color: BTreeMap<(DemographicKey, String), f64>,
}

pub fn build_reports(
    frames: &[FrameAnnotations],
    intervals: &[AssociationInterval],
    frame_duration: f64,
) -> Result<ReportBundle> {
    let profiles = build_profiles(frames);
    let colors = garment_colors(frames);
    Ok(ReportBundle {
        gender_share: gender_share(&profiles)?,
        age_share_by_gender: age_share_by_gender(&profiles)?,
        dwell_by_demographic: dwell_by_demographic(&profiles, frame_duration),
        expression_by_color: expression_by_color(&profiles, intervals, &colors)?,
        time_by_color: time_by_color(&profiles, intervals, &colors, frame_duration)?,
    })
}

impl ReportBundle {
    pub fn to_json(&self) -> serde_json::Value {
        let dwell: Vec<_> = self
            .dwell_by_demographic
            .iter()
            .map(|(k, s)| {
                json!({
                    "gender": k.gender, "age_group": k.age_group, "customers": s.customers,
                    "min": s.min, "max": s.max, "mean": s.mean, "median": s.median,
                })
            })
            .collect();
        let time: Vec<_> = self
            .time_by_color
            .iter()
            .map(|((k, color), secs)| {
                json!({"gender": k.gender, "age_group": k.age_group, "color": color, "seconds": secs})
            })
            .collect();
        json!({
            "gender_share": self.gender_share.iter().map(|(g, p)| (g.as_str(), *p)).collect::<BTreeMap<_, _>>(),
            "age_share_by_gender": self.age_share_by_gender.iter().map(|(g, m)| {
                (g.as_str(), m.iter().map(|(a, p)| (a.as_str(), *p)).collect::<BTreeMap<_, _>>())
            }).collect::<BTreeMap<_, _>>(),
            "dwell_by_demographic": dwell,
            "expression_by_color": self.expression_by_color,
            "time_by_color": time,
        })
    }

    /// Writes `report.json`, one CSV per report and one CSV per figure
    /// analog (fig2a..fig5_male).
    pub fn write_files(&self, dir: &Path) -> Result<Vec<String>> {
        let mut written = Vec::new();
        let mut put = |name: &str, bytes: Vec<u8>| -> Result<()> {
            let path = dir.join(name);
            fs::write(&path, bytes).map_err(|e| Error::io(path.display().to_string(), e))?;
            written.push(name.to_string());
            Ok(())
        };

        let mut json = serde_json::to_vec_pretty(&self.to_json())
            .map_err(|e| Error::Invariant(e.to_string()))?;
        json.push(b'\n');
        put("report.json", json)?;

        let gender_rows: Vec<Vec<String>> = self
            .gender_share
            .iter()
            .map(|(g, p)| vec![g.to_string(), p.to_string()])
            .collect();
        put("gender_share.csv", csv_bytes(&["gender", "percentage"], &gender_rows)?)?;
        put("fig2a.csv", csv_bytes(&["gender", "percentage"], &gender_rows)?)?;

        let rows: Vec<Vec<String>> = self
            .age_share_by_gender
            .iter()
            .flat_map(|(g, m)| m.iter().map(move |(a, p)| vec![g.to_string(), a.to_string(), p.to_string()]))
            .collect();
        put("age_share_by_gender.csv", csv_bytes(&["gender", "age_group", "percentage"], &rows)?)?;
        for (gender, name) in [(Gender::Female, "fig2b.csv"), (Gender::Male, "fig2c.csv")] {
            let rows: Vec<Vec<String>> = match self.age_share_by_gender.get(&gender) {
                None => Vec::new(),
                Some(m) => AgeGroup::ALL
                    .iter()
                    .map(|a| vec![a.to_string(), m.get(a).copied().unwrap_or(0.0).to_string()])
                    .collect(),
            };
            put(name, csv_bytes(&["age_group", "percentage"], &rows)?)?;
        }

        let header = [
            "gender",
            "age_group",
            "customers",
            "min_seconds",
            "max_seconds",
            "mean_seconds",
            "median_seconds",
        ];
        let rows: Vec<Vec<String>> = self
            .dwell_by_demographic
            .iter()
            .map(|(k, s)| {
                vec![
                    k.gender.to_string(),
                    k.age_group.to_string(),
                    s.customers.to_string(),
                    s.min.to_string(),
                    s.max.to_string(),
                    s.mean.to_string(),
                    s.median.to_string(),
                ]
            })
            .collect();
        put("dwell_by_demographic.csv", csv_bytes(&header, &rows)?)?;
        put("fig3.csv", csv_bytes(&header, &rows)?)?;

        let rows: Vec<Vec<String>> = self
            .expression_by_color
            .iter()
            .map(|r| {
                vec![
                    r.gender.to_string(),
                    r.age_years.to_string(),
                    r.color.clone(),
                    r.expression.clone(),
                    r.count.to_string(),
                ]
            })
            .collect();
        put(
            "expression_by_color.csv",
            csv_bytes(&["gender", "age_years", "color", "expression", "count"], &rows)?,
        )?;
        for (gender, name) in [(Gender::Female, "fig4_female.csv"), (Gender::Male, "fig4_male.csv")] {
            let rows = per_gender(&rows, gender);
            put(name, csv_bytes(&["age_years", "color", "expression", "count"], &rows)?)?;
        }

        let rows: Vec<Vec<String>> = self
            .time_by_color
            .iter()
            .map(|((k, color), secs)| {
                vec![
                    k.gender.to_string(),
                    k.age_group.to_string(),
                    color.clone(),
                    secs.to_string(),
                ]
            })
            .collect();
        put("time_by_color.csv", csv_bytes(&["gender", "age_group", "color", "seconds"], &rows)?)?;
        for (gender, name) in [(Gender::Female, "fig5_female.csv"), (Gender::Male, "fig5_male.csv")] {
            let rows = per_gender(&rows, gender);
            put(name, csv_bytes(&["age_group", "color", "seconds"], &rows)?)?;
        }
        Ok(written)
    }
}

/// Rows whose first column is `gender`, with that column dropped.
fn per_gender(rows: &[Vec<String>], gender: Gender) -> Vec<Vec<String>> {
    rows.iter()
        .filter(|r| r[0] == gender.as_str())
        .map(|r| r[1..].to_vec())
        .collect()
}

fn csv_bytes(header: &[&str], rows: &[Vec<String>]) -> Result<Vec<u8>> {
    let mut wr = csv::Writer::from_writer(Vec::new());
    let fail = |e: csv::Error| Error::Invariant(e.to_string());
    wr.write_record(header).map_err(fail)?;
    for r in rows {
        wr.write_record(r).map_err(fail)?;
    }
    wr.into_inner().map_err(|e| Error::Invariant(e.to_string()))
}
