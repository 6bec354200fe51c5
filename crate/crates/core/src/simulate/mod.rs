//! Monte Carlo study of the censored relative-error estimators.
//!
//! Data follow `X ~ N(0,1)`, `T = 2X + 1 + 0.2 eps` with `eps ~ N(0,1)`,
//! and censoring `C ~ N(3 + c, 1)` independent of `(T, X)`; the shift `c`
//! controls the censoring proportion. The target curve is
//! `m(x) = 2x + 1 + 0.04 / (2x + 1)`.
//!
//! Note that `T <= 0` with probability close to 0.31 under this design. Samples
//! are generated as written unless `positive_only` is set, in which case
//! `(X, eps)` pairs are redrawn until `T > 0`.

mod config;
mod run;

pub use config::{BandwidthPolicy, CensoringLevel, GridSpec, SimulationConfig};
pub use run::{
    derive_seed, monte_carlo_run, EstimatorFit, MetricSummary, Replication, ReplicationOutcome,
    SimulationReport,
};

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::loclin::FittedCurve;
use crate::survival::{CensoredSample, Observation};

/// Mean of the censoring time before the shift `c` is added.
pub const CENSORING_BASE_MEAN: f64 = 3.0;
/// Slope and intercept of the lifetime model.
pub const SLOPE: f64 = 2.0;
pub const INTERCEPT: f64 = 1.0;
/// Standard deviation of the lifetime noise.
pub const NOISE_SD: f64 = 0.2;

/// A generated sample together with the latent lifetimes and censoring times.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedSample {
    pub sample: CensoredSample,
    pub lifetimes: Vec<f64>,
    pub censoring_times: Vec<f64>,
}

pub(crate) fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Draws `(x, t)`; with `positive_only`, redraws until `t > 0`.
fn draw_lifetime<R: Rng + ?Sized>(rng: &mut R, positive_only: bool) -> (f64, f64) {
    loop {
        let x: f64 = rng.sample(StandardNormal);
        let e: f64 = rng.sample(StandardNormal);
        let t = SLOPE * x + INTERCEPT + NOISE_SD * e;
        if !positive_only || t > 0.0 {
            return (x, t);
        }
    }
}

pub fn generate_sample(n: usize, c: f64, seed: u64) -> Result<GeneratedSample> {
    generate_sample_with(n, c, false, &mut rng_from_seed(seed))
}

pub fn generate_sample_with<R: Rng + ?Sized>(
    n: usize,
    c: f64,
    positive_only: bool,
    rng: &mut R,
) -> Result<GeneratedSample> {
    if n == 0 {
        return Err(Error::config("sample size must be at least 1"));
    }
    if !c.is_finite() {
        return Err(Error::config(format!("censoring shift must be finite, got {c}")));
    }
    let mut records = Vec::with_capacity(n);
    let mut lifetimes = Vec::with_capacity(n);
    let mut censoring_times = Vec::with_capacity(n);
    for _ in 0..n {
        let (x, t) = draw_lifetime(rng, positive_only);
        let z: f64 = rng.sample(StandardNormal);
        let cens = CENSORING_BASE_MEAN + c + z;
        records.push(Observation::new(t.min(cens), t <= cens, x));
        lifetimes.push(t);
        censoring_times.push(cens);
    }
    Ok(GeneratedSample { sample: CensoredSample::new(records)?, lifetimes, censoring_times })
}

/// Closed-form `P(T > C)` for the unrestricted design: `T - C` is normal
/// with mean `1 - (3 + c)` and variance `4 + 0.04 + 1`.
pub fn censoring_probability(c: f64) -> f64 {
    let mean = INTERCEPT - (CENSORING_BASE_MEAN + c);
    let sd = (SLOPE * SLOPE + NOISE_SD * NOISE_SD + 1.0).sqrt();
    let std_normal = Normal::standard();
    1.0 - std_normal.cdf(-mean / sd)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationOptions {
    /// Monte Carlo draws used to estimate the censoring proportion.
    pub draws: usize,
    pub max_iterations: usize,
    pub positive_only: bool,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        CalibrationOptions { draws: 1_000_000, max_iterations: 200, positive_only: false }
    }
}

/// Outcome of [`calibrate_censoring`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    pub c: f64,
    /// Monte Carlo censoring proportion at `c`.
    pub estimated_cp: f64,
    pub iterations: usize,
}

pub fn calibrate_censoring(target_cp: f64, tolerance: f64, seed: u64) -> Result<Calibration> {
    calibrate_censoring_with(target_cp, tolerance, seed, &CalibrationOptions::default())
}

/// Bisection on the shift `c`.
///
/// One set of draws is reused for every trial `c` (common random numbers),
/// which makes the estimated proportion exactly monotone in `c`.
pub fn calibrate_censoring_with(
    target_cp: f64,
    tolerance: f64,
    seed: u64,
    options: &CalibrationOptions,
) -> Result<Calibration> {
    if !(target_cp > 0.0 && target_cp < 1.0) {
        return Err(Error::config(format!("target censoring proportion must lie in (0, 1), got {target_cp}")));
    }
    if !(tolerance > 0.0 && tolerance.is_finite()) {
        return Err(Error::config(format!("tolerance must be positive, got {tolerance}")));
    }
    if options.draws == 0 {
        return Err(Error::config("calibration needs at least one draw"));
    }

    // T > C  <=>  T - 3 - Z > c
    let mut rng = rng_from_seed(seed);
    let mut gaps: Vec<f64> = (0..options.draws)
        .map(|_| {
            let (_, t) = draw_lifetime(&mut rng, options.positive_only);
            let z: f64 = rng.sample(StandardNormal);
            t - CENSORING_BASE_MEAN - z
        })
        .collect();
    gaps.sort_by(f64::total_cmp);
    let total = gaps.len() as f64;
    let cp = |c: f64| (gaps.len() - gaps.partition_point(|&g| g <= c)) as f64 / total;

    let (mut lo, mut hi) = (gaps[0] - 1.0, gaps[gaps.len() - 1] + 1.0);
    for iteration in 1..=options.max_iterations {
        let mid = 0.5 * (lo + hi);
        let est = cp(mid);
        if (est - target_cp).abs() <= tolerance {
            return Ok(Calibration { c: mid, estimated_cp: est, iterations: iteration });
        }
        if est > target_cp {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::Calibration(format!(
        "no shift reached censoring proportion {target_cp} +/- {tolerance} within {} iterations",
        options.max_iterations
    )))
}

/// Multiplies the responses of `count` distinct, uniformly chosen records by
/// `multiplier`. Returns the contaminated sample and the chosen indices in
/// ascending order.
pub fn inject_outliers(
    sample: &CensoredSample,
    count: usize,
    multiplier: f64,
    seed: u64,
) -> Result<(CensoredSample, Vec<usize>)> {
    inject_outliers_with(sample, count, multiplier, &mut rng_from_seed(seed))
}

pub fn inject_outliers_with<R: Rng + ?Sized>(
    sample: &CensoredSample,
    count: usize,
    multiplier: f64,
    rng: &mut R,
) -> Result<(CensoredSample, Vec<usize>)> {
    if count > sample.len() {
        return Err(Error::config(format!(
            "outlier count {count} exceeds sample size {}",
            sample.len()
        )));
    }
    if !(multiplier.is_finite() && multiplier > 0.0) {
        return Err(Error::config(format!("outlier multiplier must be positive, got {multiplier}")));
    }
    let mut chosen = index::sample(rng, sample.len(), count).into_vec();
    chosen.sort_unstable();
    let mut records = sample.records().to_vec();
    for &i in &chosen {
        records[i].y *= multiplier;
    }
    Ok((CensoredSample::new(records)?, chosen))
}

/// `m(x) = 2x + 1 + 0.04 / (2x + 1)`.
pub fn theoretical_curve(x: f64) -> Result<f64> {
    let m = SLOPE * x + INTERCEPT;
    if m == 0.0 {
        return Err(Error::config("theoretical curve is undefined at x = -0.5"));
    }
    Ok(m + NOISE_SD * NOISE_SD / m)
}

/// Second-order approximation of `E[mean(q1) / mean(q2)]` over `n` draws:
/// `mu1/mu2 + (mu1 v2 / mu2^3 - v12 / mu2^2) / n`. `v1` does not enter.
pub fn ratio_second_order(mu1: f64, mu2: f64, v1: f64, v2: f64, v12: f64, n: usize) -> Result<f64> {
    let _ = v1;
    if mu2 == 0.0 {
        return Err(Error::config("ratio approximation needs mu2 != 0"));
    }
    if n == 0 {
        return Err(Error::config("ratio approximation needs n >= 1"));
    }
    let correction = mu1 * v2 / mu2.powi(3) - v12 / (mu2 * mu2);
    Ok(mu1 / mu2 + correction / n as f64)
}

/// Curve accuracy against a reference function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorMetrics {
    /// Largest absolute error over non-degenerate points.
    pub sup_error: Option<f64>,
    /// Trapezoidal integral of squared error over segments whose endpoints
    /// are both non-degenerate.
    pub mise: Option<f64>,
    pub degenerate_count: usize,
}

impl ErrorMetrics {
    /// `true` when every grid point was degenerate.
    pub fn is_empty(&self) -> bool {
        self.sup_error.is_none()
    }
}

pub fn error_metrics(curve: &FittedCurve, reference: impl Fn(f64) -> f64) -> ErrorMetrics {
    let sq: Vec<Option<f64>> = curve
        .iter()
        .map(|(x, e)| e.get().map(|v| (v - reference(x)).powi(2)))
        .collect();
    let degenerate_count = curve.degenerate_count();
    let sup_error = sq.iter().flatten().map(|s| s.sqrt()).fold(None, |acc: Option<f64>, e| {
        Some(acc.map_or(e, |a| a.max(e)))
    });
    if sup_error.is_none() {
        return ErrorMetrics { sup_error: None, mise: None, degenerate_count };
    }
    let grid = curve.grid();
    let mise = (1..grid.len())
        .filter_map(|k| match (sq[k - 1], sq[k]) {
            (Some(a), Some(b)) => Some(0.5 * (a + b) * (grid[k] - grid[k - 1])),
            _ => None,
        })
        .sum();
    ErrorMetrics { sup_error, mise: Some(mise), degenerate_count }
}
