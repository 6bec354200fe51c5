//! Censored samples, the Kaplan-Meier estimate of the censoring survival
//! function, and the inverse-probability-of-censoring ("synthetic") responses.
//!
//! Synthetic responses are evaluated with the *left limit* `G_n(y_i-)` of the
//! product-limit estimate. The estimate is zero at and beyond the largest
//! observation, so evaluating it at `y_i` itself would divide by zero for the
//! largest uncensored response. The left limit coincides with `G_n(y_i)` at
//! every point that is not a censoring time.

use std::cmp::Ordering;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};

/// One observed triple `(Y, delta, X)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    /// `min(T, C)`.
    pub y: f64,
    /// `true` when the lifetime was observed (`T <= C`).
    pub delta: bool,
    /// Covariate.
    pub x: f64,
}

impl Observation {
    pub fn new(y: f64, delta: bool, x: f64) -> Self {
        Observation { y, delta, x }
    }
}

/// A non-empty right-censored sample with finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct CensoredSample {
    records: Vec<Observation>,
}

impl CensoredSample {
    pub fn new(records: Vec<Observation>) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::data("sample must contain at least one observation"));
        }
        for (i, r) in records.iter().enumerate() {
            if !r.y.is_finite() {
                return Err(Error::data(format!("response y at index {i} is not finite")));
            }
            if !r.x.is_finite() {
                return Err(Error::data(format!("covariate x at index {i} is not finite")));
            }
        }
        Ok(CensoredSample { records })
    }

    pub fn from_columns(y: &[f64], delta: &[bool], x: &[f64]) -> Result<Self> {
        if y.len() != delta.len() || y.len() != x.len() {
            return Err(Error::data(format!(
                "column lengths differ: y={}, delta={}, x={}",
                y.len(),
                delta.len(),
                x.len()
            )));
        }
        Self::new(
            y.iter()
                .zip(delta)
                .zip(x)
                .map(|((&y, &d), &x)| Observation::new(y, d, x))
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    /// Always `false`; kept for API symmetry with `len`.
    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[Observation] {
        &self.records
    }

    pub fn ys(&self) -> impl Iterator<Item = f64> + '_ {
        self.records.iter().map(|r| r.y)
    }

    pub fn xs(&self) -> impl Iterator<Item = f64> + '_ {
        self.records.iter().map(|r| r.x)
    }

    /// Fraction of censored records (`delta = 0`).
    pub fn censoring_proportion(&self) -> f64 {
        let censored = self.records.iter().filter(|r| !r.delta).count();
        censored as f64 / self.len() as f64
    }

    /// Number of uncensored records with `y <= 0`. The relative-error
    /// framework assumes positive lifetimes; such records are kept but flagged.
    pub fn nonpositive_uncensored(&self) -> usize {
        self.records.iter().filter(|r| r.delta && r.y <= 0.0).count()
    }

    /// The sample with record `index` removed, or `None` if that would leave
    /// it empty.
    pub fn without(&self, index: usize) -> Option<CensoredSample> {
        if self.len() <= 1 || index >= self.len() {
            return None;
        }
        let mut records = Vec::with_capacity(self.len() - 1);
        records.extend_from_slice(&self.records[..index]);
        records.extend_from_slice(&self.records[index + 1..]);
        Some(CensoredSample { records })
    }

    /// Same covariates and indicators, responses replaced by `f(y)`.
    pub fn map_y(&self, f: impl Fn(f64) -> f64) -> Result<CensoredSample> {
        Self::new(
            self.records
                .iter()
                .map(|r| Observation::new(f(r.y), r.delta, r.x))
                .collect(),
        )
    }

    /// Same responses and indicators, covariates replaced by `f(x)`.
    pub fn map_x(&self, f: impl Fn(f64) -> f64) -> Result<CensoredSample> {
        Self::new(
            self.records
                .iter()
                .map(|r| Observation::new(r.y, r.delta, f(r.x)))
                .collect(),
        )
    }

    /// Reads `y,delta,x` CSV with a header row.
    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv_reader(file)
    }

    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        #[derive(Deserialize)]
        struct Row {
            y: f64,
            delta: i64,
            x: f64,
        }

        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr
            .headers()
            .map_err(|e| Error::Parse { row: 1, message: e.to_string() })?
            .clone();
        let names: Vec<&str> = headers.iter().collect();
        if names != ["y", "delta", "x"] {
            return Err(Error::Parse {
                row: 1,
                message: format!("expected header `y,delta,x`, found `{}`", names.join(",")),
            });
        }

        let mut records = Vec::new();
        for (i, row) in rdr.deserialize::<Row>().enumerate() {
            // header is line 1
            let line = i + 2;
            let row = row.map_err(|e| Error::Parse { row: line, message: e.to_string() })?;
            let delta = match row.delta {
                0 => false,
                1 => true,
                d => {
                    return Err(Error::Parse {
                        row: line,
                        message: format!("delta must be 0 or 1, got {d}"),
                    })
                }
            };
            if !row.y.is_finite() || !row.x.is_finite() {
                return Err(Error::Parse { row: line, message: "non-finite value".into() });
            }
            records.push(Observation::new(row.y, delta, row.x));
        }
        if records.is_empty() {
            return Err(Error::Parse { row: 2, message: "no data rows".into() });
        }
        Self::new(records)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let io = |e: csv::Error| Error::data(e.to_string());
        w.write_record(["y", "delta", "x"]).map_err(io)?;
        for r in &self.records {
            w.write_record([r.y.to_string(), u8::from(r.delta).to_string(), r.x.to_string()])
                .map_err(io)?;
        }
        w.flush().map_err(|e| Error::data(e.to_string()))
    }
}

/// Which evaluation of a right-continuous step function to take.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// `G(t)`.
    Right,
    /// `G(t-)`.
    LeftLimit,
}

/// Right-continuous, non-increasing step function starting at 1.
///
/// `levels[k]` holds on `[times[k], times[k+1])`; the last level is 0 and
/// starts at the largest observation.
#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalStep {
    times: Vec<f64>,
    levels: Vec<f64>,
}

impl SurvivalStep {
    /// Product-limit estimate of the censoring survival function `P(C > t)`.
    ///
    /// Order statistics are formed with a stable sort; at tied `y`, uncensored
    /// records come before censored ones.
    pub fn kaplan_meier(sample: &CensoredSample) -> Self {
        let order = sorted_order(sample.records());
        let n = order.len();
        let mut times = Vec::new();
        let mut levels = Vec::new();
        let mut level = 1.0;
        let mut i = 0;
        while i < n {
            let t = sample.records()[order[i]].y;
            let before = level;
            while i < n && sample.records()[order[i]].y == t {
                if !sample.records()[order[i]].delta {
                    // 1 - (1 - delta_(i)) / (n - i + 1) with 1-based i
                    let at_risk = (n - i) as f64;
                    level *= (at_risk - 1.0) / at_risk;
                }
                i += 1;
            }
            if i == n {
                level = 0.0;
            }
            if level < before {
                times.push(t);
                levels.push(level);
            }
        }
        SurvivalStep { times, levels }
    }

    pub fn jump_times(&self) -> &[f64] {
        &self.times
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn eval(&self, t: f64, side: Side) -> f64 {
        let k = match side {
            Side::Right => self.times.partition_point(|&s| s <= t),
            Side::LeftLimit => self.times.partition_point(|&s| s < t),
        };
        if k == 0 {
            1.0
        } else {
            self.levels[k - 1]
        }
    }
}

/// Free-function form of [`SurvivalStep::kaplan_meier`].
pub fn km_censoring_survival(sample: &CensoredSample) -> SurvivalStep {
    SurvivalStep::kaplan_meier(sample)
}

/// Free-function form of [`SurvivalStep::eval`].
pub fn survival_eval(step: &SurvivalStep, t: f64, side: Side) -> f64 {
    step.eval(t, side)
}

fn sorted_order(records: &[Observation]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..records.len()).collect();
    order.sort_by(|&a, &b| {
        let (ra, rb) = (&records[a], &records[b]);
        ra.y.partial_cmp(&rb.y)
            .unwrap_or(Ordering::Equal)
            .then_with(|| rb.delta.cmp(&ra.delta))
    });
    order
}

/// The power applied to the response inside a synthetic transform:
/// `delta * y^(-l) / G_n(y-)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SyntheticOrder {
    /// `l = -1`: the synthetic response `delta * y / G_n`.
    Response,
    /// `l = 1`: first inverse moment.
    Inverse,
    /// `l = 2`: second inverse moment.
    InverseSquare,
}

impl SyntheticOrder {
    pub fn ell(self) -> i32 {
        match self {
            SyntheticOrder::Response => -1,
            SyntheticOrder::Inverse => 1,
            SyntheticOrder::InverseSquare => 2,
        }
    }

    #[inline]
    fn power(self, y: f64) -> f64 {
        match self {
            SyntheticOrder::Response => y,
            SyntheticOrder::Inverse => 1.0 / y,
            SyntheticOrder::InverseSquare => 1.0 / (y * y),
        }
    }
}

impl TryFrom<i32> for SyntheticOrder {
    type Error = Error;

    fn try_from(ell: i32) -> Result<Self> {
        match ell {
            -1 => Ok(SyntheticOrder::Response),
            1 => Ok(SyntheticOrder::Inverse),
            2 => Ok(SyntheticOrder::InverseSquare),
            other => Err(Error::config(format!("synthetic order must be -1, 1 or 2, got {other}"))),
        }
    }
}

/// Per-record transformed responses `delta_i * y_i^(-l) / G(y_i-)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticResponses {
    order: SyntheticOrder,
    values: Vec<f64>,
    nonpositive_uncensored: usize,
}

impl SyntheticResponses {
    /// Transforms with the Kaplan-Meier step, evaluated as a left limit.
    pub fn from_step(
        sample: &CensoredSample,
        step: &SurvivalStep,
        order: SyntheticOrder,
    ) -> Result<Self> {
        Self::from_survival_fn(sample, order, |y| step.eval(y, Side::LeftLimit))
    }

    /// Transforms with an arbitrary survival function, e.g. the true one in
    /// simulation studies.
    pub fn from_survival_fn(
        sample: &CensoredSample,
        order: SyntheticOrder,
        survival: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        let mut values = Vec::with_capacity(sample.len());
        for (i, r) in sample.records().iter().enumerate() {
            if !r.delta {
                values.push(0.0);
                continue;
            }
            if order != SyntheticOrder::Response && r.y == 0.0 {
                return Err(Error::data(format!(
                    "uncensored response at index {i} is zero; y^-{} is undefined",
                    order.ell()
                )));
            }
            let g = survival(r.y);
            if !(g > 0.0) {
                return Err(Error::data(format!(
                    "censoring survival is {g} at uncensored response index {i}"
                )));
            }
            values.push(order.power(r.y) / g);
        }
        let nonpositive_uncensored = if order == SyntheticOrder::Response {
            0
        } else {
            sample.nonpositive_uncensored()
        };
        Ok(SyntheticResponses { order, values, nonpositive_uncensored })
    }

    pub fn order(&self) -> SyntheticOrder {
        self.order
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Uncensored records with `y <= 0` that entered an inverse moment.
    pub fn nonpositive_uncensored(&self) -> usize {
        self.nonpositive_uncensored
    }
}

/// Free-function form of [`SyntheticResponses::from_step`], taking the
/// integer order `l` in `{-1, 1, 2}`.
pub fn synthetic_transform(
    sample: &CensoredSample,
    step: &SurvivalStep,
    ell: i32,
) -> Result<SyntheticResponses> {
    SyntheticResponses::from_step(sample, step, SyntheticOrder::try_from(ell)?)
}
