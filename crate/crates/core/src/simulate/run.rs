use std::io::Write;

use rayon::prelude::*;

use super::config::{BandwidthPolicy, CensoringLevel, SimulationConfig};
use super::{
    calibrate_censoring_with, error_metrics, generate_sample_with, inject_outliers_with,
    rng_from_seed, theoretical_curve, Calibration, CalibrationOptions, ErrorMetrics,
};
use crate::bandwidth::{CvOptions, LeaveOneOut};
use crate::error::{Error, Result};
use crate::loclin::{Estimator, EstimatorConfig, FittedCurve, SmootherInput};
use crate::survival::SurvivalStep;

const STREAM_SAMPLE: u64 = 0;
const STREAM_OUTLIERS: u64 = 1;
const STREAMS: u64 = 2;
const CALIBRATION_TAG: u64 = 0xC0FF_EE00_CA1B_0000;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for random stream `stream` of replication `replication`:
/// `splitmix64(master + 0x9E3779B97F4A7C15 * (replication * 2 + stream + 1))`.
///
/// Stream 0 draws the sample, stream 1 picks outliers. Any replication can
/// be re-run alone from `(master, replication)`.
pub fn derive_seed(master: u64, replication: u64, stream: u64) -> u64 {
    let k = replication.wrapping_mul(STREAMS).wrapping_add(stream).wrapping_add(1);
    splitmix64(master.wrapping_add(k.wrapping_mul(0x9E37_79B9_7F4A_7C15)))
}

/// One estimator fitted in one replication.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorFit {
    pub estimator: Estimator,
    pub bandwidth: f64,
    /// Degenerate leave-one-out folds at the selected bandwidth, when
    /// cross-validation was used.
    pub cv_degenerate_folds: Option<usize>,
    pub curve: FittedCurve,
    pub metrics: ErrorMetrics,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Replication {
    pub realized_cp: f64,
    /// Uncensored responses `<= 0` in the sample (before contamination).
    pub nonpositive_uncensored: usize,
    pub outlier_indices: Vec<usize>,
    pub fits: Vec<EstimatorFit>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationOutcome {
    pub index: usize,
    pub seed: u64,
    /// A failed replication keeps its error message.
    pub result: std::result::Result<Replication, String>,
}

/// Median and quartiles of one metric across successful replications.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricSummary {
    pub estimator: Estimator,
    pub metric: &'static str,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationReport {
    pub config: SimulationConfig,
    /// Shift `c` used for every replication.
    pub shift: f64,
    pub calibration: Option<Calibration>,
    pub replications: Vec<ReplicationOutcome>,
}

pub fn monte_carlo_run(config: &SimulationConfig) -> Result<SimulationReport> {
    config.validate()?;
    let (shift, calibration) = match config.censoring {
        CensoringLevel::Shift(c) => (c, None),
        CensoringLevel::TargetProportion(p) => {
            let opts = CalibrationOptions {
                draws: config.calibration_draws,
                positive_only: config.positive_only,
                ..CalibrationOptions::default()
            };
            let cal = calibrate_censoring_with(
                p,
                config.calibration_tolerance,
                splitmix64(config.seed ^ CALIBRATION_TAG),
                &opts,
            )?;
            (cal.c, Some(cal))
        }
    };
    let grid = config.grid.values()?;

    let replications = (0..config.replications)
        .into_par_iter()
        .map(|index| {
            let seed = derive_seed(config.seed, index as u64, STREAM_SAMPLE);
            let result = run_replication(config, shift, &grid, index as u64).map_err(|e| e.to_string());
            ReplicationOutcome { index, seed, result }
        })
        .collect();

    Ok(SimulationReport { config: config.clone(), shift, calibration, replications })
}

fn run_replication(
    config: &SimulationConfig,
    shift: f64,
    grid: &[f64],
    index: u64,
) -> Result<Replication> {
    let mut rng = rng_from_seed(derive_seed(config.seed, index, STREAM_SAMPLE));
    let generated = generate_sample_with(config.n, shift, config.positive_only, &mut rng)?;
    let realized_cp = generated.sample.censoring_proportion();
    let nonpositive_uncensored = generated.sample.nonpositive_uncensored();

    let (sample, outlier_indices) = if config.outlier_count > 0 {
        let mut rng = rng_from_seed(derive_seed(config.seed, index, STREAM_OUTLIERS));
        inject_outliers_with(&generated.sample, config.outlier_count, config.outlier_multiplier, &mut rng)?
    } else {
        (generated.sample, Vec::new())
    };

    let step = SurvivalStep::kaplan_meier(&sample);
    let mut fits = Vec::with_capacity(config.estimators.len());
    for &estimator in &config.estimators {
        let (bandwidth, cv_degenerate_folds) = match config.bandwidth {
            BandwidthPolicy::Fixed(h) => (h, None),
            BandwidthPolicy::CrossValidation(hgrid) => {
                let loo = LeaveOneOut::new(estimator, &sample, config.kernel, CvOptions::default())?;
                let sel = loo.select(&hgrid)?;
                (sel.h_opt, Some(sel.best().degenerate_folds))
            }
        };
        let est_config = EstimatorConfig::new(config.kernel, bandwidth)?;
        let input = SmootherInput::new(&sample, &step, &[estimator])?;
        let curve = input.fit_curve(estimator, &est_config, grid)?;
        let metrics = error_metrics(&curve, |x| theoretical_curve(x).unwrap_or(f64::NAN));
        fits.push(EstimatorFit { estimator, bandwidth, cv_degenerate_folds, curve, metrics });
    }
    Ok(Replication { realized_cp, nonpositive_uncensored, outlier_indices, fits })
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

impl SimulationReport {
    pub fn successes(&self) -> impl Iterator<Item = (usize, &Replication)> + '_ {
        self.replications
            .iter()
            .filter_map(|r| r.result.as_ref().ok().map(|rep| (r.index, rep)))
    }

    pub fn failed_count(&self) -> usize {
        self.replications.iter().filter(|r| r.result.is_err()).count()
    }

    /// Per-replication values of `metric` for `estimator`, in replication
    /// order, skipping failed replications and all-degenerate curves.
    pub fn metric_values(&self, estimator: Estimator, metric: &str) -> Vec<f64> {
        self.successes()
            .filter_map(|(_, rep)| rep.fits.iter().find(|f| f.estimator == estimator))
            .filter_map(|f| match metric {
                "sup_error" => f.metrics.sup_error,
                "mise" => f.metrics.mise,
                "h" => Some(f.bandwidth),
                _ => None,
            })
            .collect()
    }

    /// Median and quartiles of `sup_error`, `mise` and `h` per estimator.
    pub fn summary(&self) -> Vec<MetricSummary> {
        let mut out = Vec::new();
        for &estimator in &self.config.estimators {
            for metric in ["sup_error", "mise", "h"] {
                let mut v = self.metric_values(estimator, metric);
                if v.is_empty() {
                    continue;
                }
                v.sort_by(f64::total_cmp);
                out.push(MetricSummary {
                    estimator,
                    metric,
                    median: quantile(&v, 0.5),
                    q1: quantile(&v, 0.25),
                    q3: quantile(&v, 0.75),
                    count: v.len(),
                });
            }
        }
        out
    }

    /// Writes `rep,estimator,x,estimate,degenerate`.
    pub fn write_curves_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let err = |e: csv::Error| Error::data(e.to_string());
        w.write_record(["rep", "estimator", "x", "estimate", "degenerate"]).map_err(err)?;
        for (index, rep) in self.successes() {
            for fit in &rep.fits {
                for (x, e) in fit.curve.iter() {
                    w.write_record([
                        index.to_string(),
                        fit.estimator.name().to_string(),
                        x.to_string(),
                        e.value.to_string(),
                        u8::from(e.degenerate).to_string(),
                    ])
                    .map_err(err)?;
                }
            }
        }
        w.flush().map_err(|e| Error::data(e.to_string()))
    }

    /// Writes `estimator,metric,median,q1,q3`.
    pub fn write_summary_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let err = |e: csv::Error| Error::data(e.to_string());
        w.write_record(["estimator", "metric", "median", "q1", "q3"]).map_err(err)?;
        for s in self.summary() {
            w.write_record([
                s.estimator.name().to_string(),
                s.metric.to_string(),
                s.median.to_string(),
                s.q1.to_string(),
                s.q3.to_string(),
            ])
            .map_err(err)?;
        }
        w.flush().map_err(|e| Error::data(e.to_string()))
    }
}
