//! Leave-one-out cross-validation over a fixed bandwidth grid.
//!
//! The score for bandwidth `h` is `sum_i (T*_i - mu_{-i}(X_i))^2`, where
//! `T*_i = delta_i y_i / G_n(y_i-)` uses the full-sample Kaplan-Meier step
//! and `mu_{-i}` is refitted without record `i`, including a fresh
//! Kaplan-Meier estimate on the remaining `n - 1` records. The per-fold
//! preparation does not depend on `h` and is done once per sample.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernel::{check_bandwidth, KernelKind};
use crate::loclin::{Estimator, EstimatorConfig, SmootherInput, DEFAULT_DENOMINATOR_EPSILON};
use crate::survival::{CensoredSample, SurvivalStep, SyntheticOrder, SyntheticResponses};

/// `lo, lo + step, ..., <= hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandwidthGrid {
    lo: f64,
    hi: f64,
    step: f64,
}

impl Default for BandwidthGrid {
    /// 0.01 to 2 in steps of 0.01.
    fn default() -> Self {
        BandwidthGrid { lo: 0.01, hi: 2.0, step: 0.01 }
    }
}

impl BandwidthGrid {
    pub fn new(lo: f64, hi: f64, step: f64) -> Result<Self> {
        let finite = lo.is_finite() && hi.is_finite() && step.is_finite();
        if !finite || lo <= 0.0 || hi < lo || step <= 0.0 {
            return Err(Error::config(format!(
                "bandwidth grid needs 0 < lo <= hi and step > 0, got lo={lo} hi={hi} step={step}"
            )));
        }
        Ok(BandwidthGrid { lo, hi, step })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// `floor((hi - lo) / step) + 1`, tolerant to representation error in
    /// the decimal inputs.
    pub fn len(&self) -> usize {
        ((self.hi - self.lo) / self.step + 1e-9).floor() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Grid values, snapped to 12 decimals so that e.g. the last default
    /// value is exactly 2.0.
    pub fn values(&self) -> Vec<f64> {
        (0..self.len())
            .map(|k| ((self.lo + k as f64 * self.step) * 1e12).round() / 1e12)
            .collect()
    }
}

/// What a degenerate leave-one-out fit contributes to the score.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum DegeneratePenalty {
    /// Treat the prediction as 0, contributing `T*_i^2`.
    #[default]
    ZeroPrediction,
    /// Add a fixed amount.
    Constant(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CvOptions {
    pub denominator_epsilon: f64,
    pub penalty: DegeneratePenalty,
}

impl Default for CvOptions {
    fn default() -> Self {
        CvOptions {
            denominator_epsilon: DEFAULT_DENOMINATOR_EPSILON,
            penalty: DegeneratePenalty::ZeroPrediction,
        }
    }
}

/// Score at one bandwidth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CvScore {
    pub h: f64,
    pub score: f64,
    pub degenerate_folds: usize,
}

/// Precomputed leave-one-out folds for one estimator on one sample.
#[derive(Debug, Clone)]
pub struct LeaveOneOut {
    estimator: Estimator,
    kernel: KernelKind,
    options: CvOptions,
    targets: Vec<f64>,
    xs: Vec<f64>,
    folds: Vec<SmootherInput>,
}

impl LeaveOneOut {
    pub fn new(
        estimator: Estimator,
        sample: &CensoredSample,
        kernel: KernelKind,
        options: CvOptions,
    ) -> Result<Self> {
        if sample.len() < 2 {
            return Err(Error::config(format!(
                "cross-validation needs n >= 2, got n = {}",
                sample.len()
            )));
        }
        let step = SurvivalStep::kaplan_meier(sample);
        let targets =
            SyntheticResponses::from_step(sample, &step, SyntheticOrder::Response)?.values().to_vec();
        let folds = (0..sample.len())
            .map(|i| {
                let sub = sample.without(i).expect("n >= 2");
                let sub_step = SurvivalStep::kaplan_meier(&sub);
                SmootherInput::new(&sub, &sub_step, &[estimator])
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(LeaveOneOut {
            estimator,
            kernel,
            options,
            targets,
            xs: sample.xs().collect(),
            folds,
        })
    }

    /// Synthetic responses `T*_i` the folds are scored against.
    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn score(&self, h: f64) -> Result<CvScore> {
        check_bandwidth(h)?;
        let config = EstimatorConfig {
            kernel: self.kernel,
            bandwidth: h,
            denominator_epsilon: self.options.denominator_epsilon,
        };
        let mut score = 0.0;
        let mut degenerate_folds = 0;
        for (i, fold) in self.folds.iter().enumerate() {
            let est = fold.estimate_unchecked(self.estimator, &config, self.xs[i], None);
            if est.degenerate {
                degenerate_folds += 1;
                score += match self.options.penalty {
                    DegeneratePenalty::ZeroPrediction => self.targets[i] * self.targets[i],
                    DegeneratePenalty::Constant(p) => p,
                };
            } else {
                let r = self.targets[i] - est.value;
                score += r * r;
            }
        }
        Ok(CvScore { h, score, degenerate_folds })
    }

    /// Scores every grid value (in parallel) and picks the minimiser,
    /// breaking ties toward the smaller bandwidth.
    pub fn select(&self, grid: &BandwidthGrid) -> Result<BandwidthSelection> {
        let trace = grid
            .values()
            .par_iter()
            .map(|&h| self.score(h))
            .collect::<Result<Vec<_>>>()?;
        BandwidthSelection::from_trace(trace)
    }
}

/// Minimiser and the full score trace in grid order.
#[derive(Debug, Clone, PartialEq)]
pub struct BandwidthSelection {
    pub h_opt: f64,
    pub trace: Vec<CvScore>,
}

impl BandwidthSelection {
    /// Picks the first minimal score in trace order. NaN scores never win.
    pub fn from_trace(trace: Vec<CvScore>) -> Result<Self> {
        let mut best: Option<&CvScore> = None;
        for s in &trace {
            if s.score.is_nan() {
                continue;
            }
            if best.is_none_or(|b| s.score < b.score) {
                best = Some(s);
            }
        }
        let h_opt = best
            .ok_or_else(|| Error::data("no bandwidth produced a finite cross-validation score"))?
            .h;
        Ok(BandwidthSelection { h_opt, trace })
    }

    pub fn best(&self) -> &CvScore {
        self.trace.iter().find(|s| s.h == self.h_opt).expect("h_opt comes from the trace")
    }

    /// Writes `h,score,degenerate_folds`.
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let err = |e: csv::Error| Error::data(e.to_string());
        w.write_record(["h", "score", "degenerate_folds"]).map_err(err)?;
        for s in &self.trace {
            w.write_record([s.h.to_string(), s.score.to_string(), s.degenerate_folds.to_string()])
                .map_err(err)?;
        }
        w.flush().map_err(|e| Error::data(e.to_string()))
    }
}

pub fn cv_score(
    estimator: Estimator,
    sample: &CensoredSample,
    kernel: KernelKind,
    h: f64,
) -> Result<CvScore> {
    check_bandwidth(h)?;
    LeaveOneOut::new(estimator, sample, kernel, CvOptions::default())?.score(h)
}

pub fn select_bandwidth(
    estimator: Estimator,
    sample: &CensoredSample,
    kernel: KernelKind,
    grid: &BandwidthGrid,
) -> Result<BandwidthSelection> {
    LeaveOneOut::new(estimator, sample, kernel, CvOptions::default())?.select(grid)
}
