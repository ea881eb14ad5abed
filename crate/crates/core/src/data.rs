//! Mixed-censored time-to-event observations and their CSV encoding.
//!
//! The CSV layout uses a single `status` column taking one of `exact`,
//! `interval`, `left` or `right`. Exact rows carry the event time in `time`;
//! censored rows carry the endpoints of the half-open interval `(l, u]` in
//! `l` and `u`, where an empty upper field or `inf` means an unbounded
//! interval.

use std::collections::HashSet;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{PsrError, Result};

/// What was seen for one subject.
///
/// Censored variants are all intervals `(l, u]`; a left-censored outcome is
/// `(0, u]` and a right-censored one is `(l, ∞)`. The variant records how the
/// outcome was reported, [`Outcome::bounds`] gives the interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Outcome {
    Exact { time: f64 },
    Interval { lower: f64, upper: f64 },
    LeftCensored { upper: f64 },
    RightCensored { lower: f64 },
}

/// Reporting class of an outcome, used for residual dispatch and plot legends.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeClass {
    Exact,
    Interval,
    Left,
    Right,
}

impl OutcomeClass {
    pub fn as_str(self) -> &'static str {
        match self {
            OutcomeClass::Exact => "exact",
            OutcomeClass::Interval => "interval",
            OutcomeClass::Left => "left",
            OutcomeClass::Right => "right",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "exact" => Some(OutcomeClass::Exact),
            "interval" => Some(OutcomeClass::Interval),
            "left" => Some(OutcomeClass::Left),
            "right" => Some(OutcomeClass::Right),
            _ => None,
        }
    }
}

impl std::fmt::Display for OutcomeClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Outcome {
    pub fn exact(time: f64) -> Result<Self> {
        if !(time.is_finite() && time > 0.0) {
            return Err(PsrError::InvalidOutcome(format!(
                "exact time must be positive and finite, got {time}"
            )));
        }
        Ok(Outcome::Exact { time })
    }

    pub fn interval(lower: f64, upper: f64) -> Result<Self> {
        if !(lower.is_finite() && lower >= 0.0 && upper.is_finite() && lower < upper) {
            return Err(PsrError::InvalidInterval { lower, upper });
        }
        Ok(Outcome::Interval { lower, upper })
    }

    pub fn left_censored(upper: f64) -> Result<Self> {
        if !(upper.is_finite() && upper > 0.0) {
            return Err(PsrError::InvalidInterval { lower: 0.0, upper });
        }
        Ok(Outcome::LeftCensored { upper })
    }

    pub fn right_censored(lower: f64) -> Result<Self> {
        if !(lower.is_finite() && lower >= 0.0) {
            return Err(PsrError::InvalidInterval {
                lower,
                upper: f64::INFINITY,
            });
        }
        Ok(Outcome::RightCensored { lower })
    }

    /// Canonical outcome for an observed interval `(lower, upper]`:
    /// `(0, u]` is left-censored, `(l, ∞)` right-censored, anything else an
    /// interval. `(0, ∞)` is right-censored at zero.
    pub fn from_bounds(lower: f64, upper: f64) -> Result<Self> {
        if upper == f64::INFINITY {
            Outcome::right_censored(lower)
        } else if lower == 0.0 {
            Outcome::left_censored(upper)
        } else {
            Outcome::interval(lower, upper)
        }
    }

    pub fn classify(&self) -> OutcomeClass {
        match *self {
            Outcome::Exact { .. } => OutcomeClass::Exact,
            Outcome::Interval { lower, .. } if lower == 0.0 => OutcomeClass::Left,
            Outcome::Interval { .. } => OutcomeClass::Interval,
            Outcome::LeftCensored { .. } => OutcomeClass::Left,
            Outcome::RightCensored { .. } => OutcomeClass::Right,
        }
    }

    /// Interval endpoints `(l, u)`; an exact time `t` yields `(t, t)`.
    pub fn bounds(&self) -> (f64, f64) {
        match *self {
            Outcome::Exact { time } => (time, time),
            Outcome::Interval { lower, upper } => (lower, upper),
            Outcome::LeftCensored { upper } => (0.0, upper),
            Outcome::RightCensored { lower } => (lower, f64::INFINITY),
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Outcome::Exact { .. })
    }

    /// True for the uninformative interval `(0, ∞)`.
    pub fn is_uninformative(&self) -> bool {
        matches!(self, Outcome::RightCensored { lower } if *lower == 0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub id: String,
    pub outcome: Outcome,
    pub covariates: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stratum: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    observations: Vec<Observation>,
    covariate_names: Vec<String>,
}

impl Dataset {
    pub fn new(observations: Vec<Observation>, covariate_names: Vec<String>) -> Result<Self> {
        if observations.is_empty() {
            return Err(PsrError::InvalidDataset("dataset is empty".into()));
        }
        let p = covariate_names.len();
        let mut ids = HashSet::with_capacity(observations.len());
        for obs in &observations {
            if obs.covariates.len() != p {
                return Err(PsrError::InvalidDataset(format!(
                    "observation `{}` has {} covariates, expected {p}",
                    obs.id,
                    obs.covariates.len()
                )));
            }
            if let Some(v) = obs.covariates.iter().find(|v| !v.is_finite()) {
                return Err(PsrError::InvalidDataset(format!(
                    "observation `{}` has non-finite covariate {v}",
                    obs.id
                )));
            }
            if !ids.insert(obs.id.as_str()) {
                return Err(PsrError::InvalidDataset(format!("duplicate id `{}`", obs.id)));
            }
        }
        Ok(Dataset {
            observations,
            covariate_names,
        })
    }

    pub fn observations(&self) -> &[Observation] {
        &self.observations
    }

    pub fn covariate_names(&self) -> &[String] {
        &self.covariate_names
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn covariate_index(&self, name: &str) -> Option<usize> {
        self.covariate_names.iter().position(|n| n == name)
    }

    pub fn covariate_column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.covariate_index(name)?;
        Some(self.observations.iter().map(|o| o.covariates[j]).collect())
    }

    pub fn has_strata(&self) -> bool {
        self.observations.iter().any(|o| o.stratum.is_some())
    }

    /// Distinct stratum labels, sorted.
    pub fn strata(&self) -> Vec<String> {
        let mut labels: Vec<String> = self
            .observations
            .iter()
            .filter_map(|o| o.stratum.clone())
            .collect();
        labels.sort();
        labels.dedup();
        labels
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Writes the dataset in the CSV layout accepted by [`parse_dataset`].
    /// Strata, when present, go into a trailing `stratum` column.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let with_strata = self.has_strata();
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["id", "status", "time", "l", "u"];
        header.extend(self.covariate_names.iter().map(String::as_str));
        if with_strata {
            header.push("stratum");
        }
        w.write_record(&header)?;
        for obs in &self.observations {
            let (status, time, l, u) = match obs.outcome {
                Outcome::Exact { time } => ("exact", time.to_string(), String::new(), String::new()),
                Outcome::Interval { lower, upper } => {
                    ("interval", String::new(), lower.to_string(), upper.to_string())
                }
                Outcome::LeftCensored { upper } => ("left", String::new(), "0".into(), upper.to_string()),
                Outcome::RightCensored { lower } => ("right", String::new(), lower.to_string(), "inf".into()),
            };
            let mut record = vec![obs.id.clone(), status.to_string(), time, l, u];
            record.extend(obs.covariates.iter().map(|v| v.to_string()));
            if with_strata {
                record.push(obs.stratum.clone().unwrap_or_default());
            }
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Column mapping for CSV ingestion.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnSchema {
    pub id: String,
    pub status: String,
    pub time: String,
    pub lower: String,
    pub upper: String,
    /// Covariate columns in order. `None` takes every column that is not
    /// otherwise mapped, in header order.
    pub covariates: Option<Vec<String>>,
    pub stratum: Option<String>,
}

impl Default for ColumnSchema {
    fn default() -> Self {
        ColumnSchema {
            id: "id".into(),
            status: "status".into(),
            time: "time".into(),
            lower: "l".into(),
            upper: "u".into(),
            covariates: None,
            stratum: None,
        }
    }
}

impl ColumnSchema {
    pub fn with_covariates<I, S>(mut self, names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.covariates = Some(names.into_iter().map(Into::into).collect());
        self
    }

    pub fn with_stratum(mut self, name: impl Into<String>) -> Self {
        self.stratum = Some(name.into());
        self
    }

    fn reserved(&self) -> Vec<&str> {
        let mut r = vec![
            self.id.as_str(),
            self.status.as_str(),
            self.time.as_str(),
            self.lower.as_str(),
            self.upper.as_str(),
        ];
        if let Some(s) = &self.stratum {
            r.push(s);
        }
        r
    }
}

pub fn parse_dataset(path: impl AsRef<Path>, schema: &ColumnSchema) -> Result<Dataset> {
    let file = std::fs::File::open(path)?;
    read_dataset(file, schema)
}

pub fn read_dataset<R: Read>(reader: R, schema: &ColumnSchema) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let find = |name: &str| header.iter().position(|h| h == name);
    let require = |name: &str| {
        find(name).ok_or_else(|| PsrError::MalformedRow {
            row: 0,
            column: name.to_string(),
            message: "column missing from header".into(),
        })
    };

    let id_col = require(&schema.id)?;
    let status_col = require(&schema.status)?;
    let time_col = find(&schema.time);
    let lower_col = find(&schema.lower);
    let upper_col = find(&schema.upper);
    let stratum_col = schema.stratum.as_deref().map(require).transpose()?;

    let covariate_names: Vec<String> = match &schema.covariates {
        Some(names) => names.clone(),
        None => {
            let reserved = schema.reserved();
            header
                .iter()
                .filter(|h| !reserved.contains(&h.as_str()))
                .cloned()
                .collect()
        }
    };
    let covariate_cols = covariate_names
        .iter()
        .map(|n| require(n))
        .collect::<Result<Vec<_>>>()?;

    let mut observations = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let row = i + 1;
        let record = record?;
        let field = |col: Option<usize>| col.and_then(|c| record.get(c)).unwrap_or("").trim();
        let malformed = |column: &str, message: String| PsrError::MalformedRow {
            row,
            column: column.to_string(),
            message,
        };

        let id = field(Some(id_col)).to_string();
        if id.is_empty() {
            return Err(malformed(&schema.id, "empty id".into()));
        }
        let status_text = field(Some(status_col));
        let status = OutcomeClass::parse(status_text).ok_or_else(|| {
            malformed(&schema.status, format!("unknown status `{status_text}`"))
        })?;

        let time = parse_endpoint(field(time_col)).map_err(|m| malformed(&schema.time, m))?;
        let lower = parse_endpoint(field(lower_col)).map_err(|m| malformed(&schema.lower, m))?;
        let upper = parse_endpoint(field(upper_col)).map_err(|m| malformed(&schema.upper, m))?;
        for (name, v) in [(&schema.time, time), (&schema.lower, lower), (&schema.upper, upper)] {
            if matches!(v, Some(x) if x < 0.0) {
                return Err(malformed(name, "negative time".into()));
            }
        }

        let outcome = match status {
            OutcomeClass::Exact => {
                let t = time.ok_or_else(|| malformed(&schema.time, "exact row needs a time".into()))?;
                if lower.is_some() || upper.is_some() {
                    if lower != Some(t) || upper != Some(t) {
                        return Err(malformed(
                            &schema.status,
                            "exact row has interval endpoints inconsistent with its time".into(),
                        ));
                    }
                }
                Outcome::exact(t).map_err(|e| malformed(&schema.time, e.to_string()))?
            }
            censored => {
                if time.is_some() {
                    return Err(malformed(
                        &schema.time,
                        format!("{censored} row must not carry an exact time"),
                    ));
                }
                let l = lower.unwrap_or(0.0);
                let u = upper.unwrap_or(f64::INFINITY);
                if l.is_infinite() {
                    return Err(malformed(&schema.lower, "lower endpoint must be finite".into()));
                }
                if l >= u {
                    return Err(PsrError::DegenerateInterval { row, lower: l, upper: u });
                }
                match censored {
                    OutcomeClass::Interval => {
                        if lower.is_none() || upper.is_none() || u.is_infinite() {
                            return Err(malformed(
                                &schema.upper,
                                "interval row needs finite l and u (use status right for u = inf)".into(),
                            ));
                        }
                        Outcome::interval(l, u)?
                    }
                    OutcomeClass::Left => {
                        if l != 0.0 || u.is_infinite() {
                            return Err(malformed(
                                &schema.lower,
                                "left-censored row needs l = 0 (or empty) and finite u".into(),
                            ));
                        }
                        Outcome::left_censored(u)?
                    }
                    OutcomeClass::Right => {
                        if u.is_finite() {
                            return Err(malformed(
                                &schema.upper,
                                "right-censored row needs u = inf (or empty)".into(),
                            ));
                        }
                        Outcome::right_censored(l)?
                    }
                    OutcomeClass::Exact => unreachable!(),
                }
            }
        };

        let covariates = covariate_cols
            .iter()
            .zip(&covariate_names)
            .map(|(&c, name)| {
                let text = field(Some(c));
                text.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| malformed(name, format!("`{text}` is not a finite number")))
            })
            .collect::<Result<Vec<_>>>()?;

        let stratum = match stratum_col {
            Some(c) => {
                let s = field(Some(c));
                if s.is_empty() {
                    return Err(malformed(schema.stratum.as_deref().unwrap_or(""), "empty stratum".into()));
                }
                Some(s.to_string())
            }
            None => None,
        };

        observations.push(Observation {
            id,
            outcome,
            covariates,
            stratum,
        });
    }

    Dataset::new(observations, covariate_names)
}

fn parse_endpoint(text: &str) -> std::result::Result<Option<f64>, String> {
    if text.is_empty() {
        return Ok(None);
    }
    match text.to_ascii_lowercase().as_str() {
        "inf" | "+inf" | "infinity" => return Ok(Some(f64::INFINITY)),
        _ => {}
    }
    let v: f64 = text.parse().map_err(|_| format!("`{text}` is not a number"))?;
    if v.is_nan() {
        return Err("NaN endpoint".into());
    }
    Ok(Some(v))
}
