//! Local linear relative-error (LLRER), local linear classical (LLCR) and
//! Nadaraya-Watson classical (CR) estimators on synthetic responses.
//!
//! The relative-error fit minimises
//! `sum_i tau2_i (T*_i - b1 - b2 (X_i - x))^2 K_h(X_i - x)` where
//! `tau2_i = delta_i y_i^-2 / G_n(y_i-)`. Its closed form is a ratio of double
//! sums over `(i, j)`, which factorises into one-pass kernel moments
//!
//! ```text
//! s[l][g] = sum_i tau_{l,i} (X_i - x)^g K((X_i - x) / h)
//! mu(x)   = (s[2][2] s[1][0] - s[2][1] s[1][1]) / (s[2][2] s[2][0] - s[2][1]^2)
//! ```
//!
//! Point estimates use an O(n) pass that accumulates the same fit around the
//! running weighted mean of `X_i - x`, which avoids the cancellation in the
//! moment denominator when the kernel weight sits on few points. The literal
//! O(n^2) double sum is kept as a reference. No `1/(nh)` factor is
//! applied to the moments since it cancels in every ratio.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::Deserialize;

use crate::compensated::TwoFloat;
use crate::error::{Error, Result};
use crate::kernel::{check_bandwidth, KernelKind};
use crate::survival::{CensoredSample, SurvivalStep, SyntheticOrder, SyntheticResponses};

/// Default relative threshold below which a ratio's denominator counts as zero.
pub const DEFAULT_DENOMINATOR_EPSILON: f64 = 1e-12;

/// The three point estimators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Estimator {
    /// Local linear relative-error regression.
    Llrer,
    /// Local linear least squares on the synthetic response.
    Llcr,
    /// Nadaraya-Watson on the synthetic response.
    Cr,
}

impl Estimator {
    pub const ALL: [Estimator; 3] = [Estimator::Llrer, Estimator::Llcr, Estimator::Cr];

    pub fn name(self) -> &'static str {
        match self {
            Estimator::Llrer => "llrer",
            Estimator::Llcr => "llcr",
            Estimator::Cr => "cr",
        }
    }

    fn orders(self) -> &'static [SyntheticOrder] {
        match self {
            Estimator::Llrer => &[SyntheticOrder::Inverse, SyntheticOrder::InverseSquare],
            Estimator::Llcr | Estimator::Cr => &[SyntheticOrder::Response],
        }
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "llrer" => Ok(Estimator::Llrer),
            "llcr" => Ok(Estimator::Llcr),
            "cr" => Ok(Estimator::Cr),
            other => Err(Error::config(format!(
                "unknown estimator `{other}` (expected llrer, llcr or cr)"
            ))),
        }
    }
}

/// Kernel, bandwidth and degeneracy threshold shared by all estimators.
///
/// `denominator_epsilon` is relative: a local linear denominator
/// `a c - b^2` is degenerate when `|a c - b^2| <= eps * |a c|`, and the
/// Nadaraya-Watson denominator `sum K` is degenerate when it is at most
/// `eps * n * K(0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorConfig {
    pub kernel: KernelKind,
    pub bandwidth: f64,
    pub denominator_epsilon: f64,
}

impl EstimatorConfig {
    pub fn new(kernel: KernelKind, bandwidth: f64) -> Result<Self> {
        let cfg = EstimatorConfig {
            kernel,
            bandwidth,
            denominator_epsilon: DEFAULT_DENOMINATOR_EPSILON,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_epsilon(mut self, eps: f64) -> Result<Self> {
        self.denominator_epsilon = eps;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        check_bandwidth(self.bandwidth)?;
        if !(self.denominator_epsilon >= 0.0 && self.denominator_epsilon.is_finite()) {
            return Err(Error::config(format!(
                "denominator_epsilon must be finite and >= 0, got {}",
                self.denominator_epsilon
            )));
        }
        Ok(())
    }

    #[inline]
    fn weight(&self, d: f64) -> f64 {
        self.kernel.eval_scaled(self.bandwidth, d)
    }
}

/// A point estimate. Degenerate points carry value 0 (the `0/0 = 0` rule)
/// and the flag set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub degenerate: bool,
}

impl Estimate {
    pub const DEGENERATE: Estimate = Estimate { value: 0.0, degenerate: true };

    pub fn value(value: f64) -> Self {
        Estimate { value, degenerate: false }
    }

    /// The value, or `None` when degenerate.
    pub fn get(&self) -> Option<f64> {
        (!self.degenerate).then_some(self.value)
    }
}

fn local_linear_ratio(num: f64, den: f64, lead: f64, eps: f64) -> Estimate {
    if !(den.abs() > eps * lead.abs()) {
        return Estimate::DEGENERATE;
    }
    let v = num / den;
    if v.is_finite() {
        Estimate::value(v)
    } else {
        Estimate::DEGENERATE
    }
}

/// Weighted least-squares line through `(d_i, y_i)`, accumulated in one pass
/// around the running weighted mean of `d`.
///
/// With weights `w = tau2 K` and `y = tau1 / tau2` this is the relative-error
/// fit, with `w = K` and `y = T*` the classical one. In moment notation the
/// centred sums are `sdd = s22 - s21^2 / s20` and `sdy = s11 - s21 s10 / s20`,
/// so the anchor value `mean_y - mean_d sdy / sdd` equals the moment ratio
/// without its cancellation.
#[derive(Debug, Default)]
struct LineFit {
    weight: f64,
    mean_d: f64,
    mean_y: f64,
    sdd: f64,
    sdy: f64,
    second: f64,
}

impl LineFit {
    fn push(&mut self, w: f64, d: f64, y: f64) {
        if w == 0.0 {
            return;
        }
        let before = self.weight;
        self.weight += w;
        let r = w / self.weight;
        let dd = d - self.mean_d;
        let dy = y - self.mean_y;
        self.mean_d += r * dd;
        self.mean_y += r * dy;
        let shrink = before * r;
        self.sdd += shrink * dd * dd;
        self.sdy += shrink * dd * dy;
        self.second += w * d * d;
    }

    /// Fitted value at `d = 0`. The degenerate rule is the moment form's
    /// `|den| <= eps |lead|`, i.e. `sdd <= eps s22`.
    fn value_at_anchor(&self, eps: f64) -> Estimate {
        if !(self.sdd > eps * self.second) {
            return Estimate::DEGENERATE;
        }
        let v = self.mean_y - self.mean_d * (self.sdy / self.sdd);
        if v.is_finite() {
            Estimate::value(v)
        } else {
            Estimate::DEGENERATE
        }
    }
}

/// Kernel moments at one anchor point.
///
/// `kernel[g] = sum (X_i - x)^g K`, and `response`, `inverse`,
/// `inverse_square` weight the same sum by the synthetic responses of order
/// `l = -1, 1, 2`. Orders that were not prepared are left at zero.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MomentStatistics {
    pub kernel: [f64; 3],
    pub response: [f64; 3],
    pub inverse: [f64; 3],
    pub inverse_square: [f64; 3],
}

impl MomentStatistics {
    /// `s[l][gamma]` for `l` in `{-1, 1, 2}`.
    pub fn s(&self, order: SyntheticOrder, gamma: usize) -> f64 {
        match order {
            SyntheticOrder::Response => self.response[gamma],
            SyntheticOrder::Inverse => self.inverse[gamma],
            SyntheticOrder::InverseSquare => self.inverse_square[gamma],
        }
    }
}

/// Covariates and synthetic responses prepared once per sample, so that
/// many evaluation points or bandwidths can reuse them.
#[derive(Debug, Clone)]
pub struct SmootherInput {
    xs: Vec<f64>,
    response: Option<Vec<f64>>,
    inverse: Option<Vec<f64>>,
    inverse_square: Option<Vec<f64>>,
    nonpositive_uncensored: usize,
}

impl SmootherInput {
    /// Prepares whatever `estimators` need.
    pub fn new(
        sample: &CensoredSample,
        step: &SurvivalStep,
        estimators: &[Estimator],
    ) -> Result<Self> {
        let mut input = SmootherInput {
            xs: sample.xs().collect(),
            response: None,
            inverse: None,
            inverse_square: None,
            nonpositive_uncensored: 0,
        };
        for order in estimators.iter().flat_map(|e| e.orders()) {
            let slot = match order {
                SyntheticOrder::Response => &mut input.response,
                SyntheticOrder::Inverse => &mut input.inverse,
                SyntheticOrder::InverseSquare => &mut input.inverse_square,
            };
            if slot.is_none() {
                let syn = SyntheticResponses::from_step(sample, step, *order)?;
                input.nonpositive_uncensored =
                    input.nonpositive_uncensored.max(syn.nonpositive_uncensored());
                *slot = Some(syn.values().to_vec());
            }
        }
        Ok(input)
    }

    /// Computes the Kaplan-Meier step itself and prepares all three estimators.
    pub fn from_sample(sample: &CensoredSample) -> Result<Self> {
        let step = SurvivalStep::kaplan_meier(sample);
        Self::new(sample, &step, &Estimator::ALL)
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    /// Uncensored records with `y <= 0` that entered an inverse moment.
    pub fn nonpositive_uncensored(&self) -> usize {
        self.nonpositive_uncensored
    }

    fn require(&self, estimator: Estimator) -> Result<()> {
        let ok = match estimator {
            Estimator::Llrer => self.inverse.is_some() && self.inverse_square.is_some(),
            Estimator::Llcr | Estimator::Cr => self.response.is_some(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::config(format!(
                "synthetic responses needed by {estimator} were not prepared"
            )))
        }
    }

    pub fn moments(&self, config: &EstimatorConfig, x: f64) -> Result<MomentStatistics> {
        config.validate()?;
        let mut m = MomentStatistics::default();
        for (i, &xi) in self.xs.iter().enumerate() {
            let d = xi - x;
            let k = config.weight(d);
            let pw = [k, d * k, d * d * k];
            for g in 0..3 {
                m.kernel[g] += pw[g];
                if let Some(v) = &self.response {
                    m.response[g] += v[i] * pw[g];
                }
                if let Some(v) = &self.inverse {
                    m.inverse[g] += v[i] * pw[g];
                }
                if let Some(v) = &self.inverse_square {
                    m.inverse_square[g] += v[i] * pw[g];
                }
            }
        }
        Ok(m)
    }

    /// Evaluates `estimator` at `x` through the one-pass moments.
    pub fn estimate(&self, estimator: Estimator, config: &EstimatorConfig, x: f64) -> Result<Estimate> {
        config.validate()?;
        self.require(estimator)?;
        Ok(self.estimate_unchecked(estimator, config, x, None))
    }

    /// Moment-path evaluation, optionally skipping record `skip`.
    pub(crate) fn estimate_unchecked(
        &self,
        estimator: Estimator,
        config: &EstimatorConfig,
        x: f64,
        skip: Option<usize>,
    ) -> Estimate {
        let eps = config.denominator_epsilon;
        let skip = skip.unwrap_or(usize::MAX);
        match estimator {
            Estimator::Llrer => {
                let inv = self.inverse.as_deref().unwrap_or_default();
                let inv2 = self.inverse_square.as_deref().unwrap_or_default();
                let mut fit = LineFit::default();
                for (i, &xi) in self.xs.iter().enumerate() {
                    if i == skip || inv2[i] == 0.0 {
                        continue;
                    }
                    let d = xi - x;
                    fit.push(inv2[i] * config.weight(d), d, inv[i] / inv2[i]);
                }
                fit.value_at_anchor(eps)
            }
            Estimator::Llcr => {
                let resp = self.response.as_deref().unwrap_or_default();
                let mut fit = LineFit::default();
                for (i, &xi) in self.xs.iter().enumerate() {
                    if i == skip {
                        continue;
                    }
                    let d = xi - x;
                    fit.push(config.weight(d), d, resp[i]);
                }
                fit.value_at_anchor(eps)
            }
            Estimator::Cr => {
                let resp = self.response.as_deref().unwrap_or_default();
                let (mut num, mut den) = (0.0, 0.0);
                let mut count = 0usize;
                for (i, &xi) in self.xs.iter().enumerate() {
                    if i == skip {
                        continue;
                    }
                    let k = config.weight(xi - x);
                    num += resp[i] * k;
                    den += k;
                    count += 1;
                }
                let floor = eps * count as f64 * config.kernel.peak();
                if !(den > floor) {
                    return Estimate::DEGENERATE;
                }
                let v = num / den;
                if v.is_finite() {
                    Estimate::value(v)
                } else {
                    Estimate::DEGENERATE
                }
            }
        }
    }

    /// Literal double-sum evaluation of the local linear estimators, O(n^2),
    /// accumulated in double-double precision.
    ///
    /// `w_ij = (X_i - x)((X_i - x) - (X_j - x)) K_i K_j a_i` with
    /// `a_i = tau2_i` for LLRER and `a_i = 1` for LLCR. The denominator sums
    /// `w_ij b_j` and the numerator `w_ij c_j`, where `(b_j, c_j)` is
    /// `(tau2_j, tau1_j)` for LLRER and `(1, T*_j)` for LLCR. CR has no
    /// double-sum form and is evaluated directly.
    pub fn estimate_naive(
        &self,
        estimator: Estimator,
        config: &EstimatorConfig,
        x: f64,
    ) -> Result<Estimate> {
        config.validate()?;
        self.require(estimator)?;
        let n = self.xs.len();
        let d: Vec<f64> = self.xs.iter().map(|&xi| xi - x).collect();
        let k: Vec<f64> = d.iter().map(|&di| config.weight(di)).collect();
        let ones = vec![1.0; n];
        let (a, b, c): (&[f64], &[f64], &[f64]) = match estimator {
            Estimator::Llrer => {
                let inv2 = self.inverse_square.as_deref().unwrap_or_default();
                (inv2, inv2, self.inverse.as_deref().unwrap_or_default())
            }
            Estimator::Llcr => (&ones, &ones, self.response.as_deref().unwrap_or_default()),
            Estimator::Cr => {
                let resp = self.response.as_deref().unwrap_or_default();
                let num: f64 = (0..n).map(|i| resp[i] * k[i]).sum();
                let den: f64 = k.iter().sum();
                let floor = config.denominator_epsilon * n as f64 * config.kernel.peak();
                return Ok(if den > floor && (num / den).is_finite() {
                    Estimate::value(num / den)
                } else {
                    Estimate::DEGENERATE
                });
            }
        };
        let exact: Vec<TwoFloat> = self.xs.iter().map(|&xi| TwoFloat::diff(xi, x)).collect();
        let (mut num, mut den, mut lead) = (TwoFloat::default(), TwoFloat::default(), 0.0);
        for i in 0..n {
            for j in 0..n {
                let w = exact[i] * (exact[i] - exact[j]) * (k[i] * k[j]) * a[i];
                num = num + w * c[j];
                den = den + w * b[j];
                lead += d[i] * d[i] * k[i] * k[j] * a[i] * b[j];
            }
        }
        Ok(local_linear_ratio(num.value(), den.value(), lead, config.denominator_epsilon))
    }

    /// Evaluates `estimator` at every grid point.
    pub fn fit_curve(
        &self,
        estimator: Estimator,
        config: &EstimatorConfig,
        grid: &[f64],
    ) -> Result<FittedCurve> {
        config.validate()?;
        self.require(estimator)?;
        check_grid(grid)?;
        let estimates = grid
            .iter()
            .map(|&x| self.estimate_unchecked(estimator, config, x, None))
            .collect();
        Ok(FittedCurve { grid: grid.to_vec(), estimates })
    }
}

pub(crate) fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::config("evaluation grid is empty"));
    }
    if grid.iter().any(|x| !x.is_finite()) {
        return Err(Error::config("evaluation grid contains non-finite points"));
    }
    if grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::config("evaluation grid must be ascending"));
    }
    Ok(())
}

/// `n` equally spaced points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if !(lo.is_finite() && hi.is_finite()) || hi < lo {
        return Err(Error::config(format!("grid bounds must satisfy lo <= hi, got {lo}:{hi}")));
    }
    match n {
        0 => Err(Error::config("grid needs at least one point")),
        1 => Ok(vec![lo]),
        _ => {
            let step = (hi - lo) / (n - 1) as f64;
            let mut v: Vec<f64> = (0..n).map(|i| lo + step * i as f64).collect();
            v[n - 1] = hi;
            Ok(v)
        }
    }
}

/// Parses `lo:hi:n`.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').map(str::trim).collect();
    let bad = || Error::config(format!("grid must be `lo:hi:n`, got `{spec}`"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = parts[0].parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].parse().map_err(|_| bad())?;
    let n: usize = parts[2].parse().map_err(|_| bad())?;
    linspace(lo, hi, n)
}

fn smoother(
    sample: &CensoredSample,
    step: &SurvivalStep,
    estimator: Estimator,
) -> Result<SmootherInput> {
    SmootherInput::new(sample, step, &[estimator])
}

/// Kernel moments of all three synthetic orders at `x`.
pub fn moment_statistics(
    sample: &CensoredSample,
    step: &SurvivalStep,
    config: &EstimatorConfig,
    x: f64,
) -> Result<MomentStatistics> {
    SmootherInput::new(sample, step, &Estimator::ALL)?.moments(config, x)
}

pub fn llrer_point(
    sample: &CensoredSample,
    step: &SurvivalStep,
    config: &EstimatorConfig,
    x: f64,
) -> Result<Estimate> {
    smoother(sample, step, Estimator::Llrer)?.estimate(Estimator::Llrer, config, x)
}

pub fn llrer_point_naive(
    sample: &CensoredSample,
    step: &SurvivalStep,
    config: &EstimatorConfig,
    x: f64,
) -> Result<Estimate> {
    smoother(sample, step, Estimator::Llrer)?.estimate_naive(Estimator::Llrer, config, x)
}

pub fn llcr_point(
    sample: &CensoredSample,
    step: &SurvivalStep,
    config: &EstimatorConfig,
    x: f64,
) -> Result<Estimate> {
    smoother(sample, step, Estimator::Llcr)?.estimate(Estimator::Llcr, config, x)
}

pub fn llcr_point_naive(
    sample: &CensoredSample,
    step: &SurvivalStep,
    config: &EstimatorConfig,
    x: f64,
) -> Result<Estimate> {
    smoother(sample, step, Estimator::Llcr)?.estimate_naive(Estimator::Llcr, config, x)
}

pub fn cr_point(
    sample: &CensoredSample,
    step: &SurvivalStep,
    config: &EstimatorConfig,
    x: f64,
) -> Result<Estimate> {
    smoother(sample, step, Estimator::Cr)?.estimate(Estimator::Cr, config, x)
}

/// Fits `estimator` over `grid`, computing Kaplan-Meier and the synthetic
/// responses once.
pub fn fit_curve(
    estimator: Estimator,
    sample: &CensoredSample,
    config: &EstimatorConfig,
    grid: &[f64],
) -> Result<FittedCurve> {
    config.validate()?;
    let step = SurvivalStep::kaplan_meier(sample);
    smoother(sample, &step, estimator)?.fit_curve(estimator, config, grid)
}

/// Estimates over an ascending grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedCurve {
    grid: Vec<f64>,
    estimates: Vec<Estimate>,
}

impl FittedCurve {
    pub fn new(grid: Vec<f64>, estimates: Vec<Estimate>) -> Result<Self> {
        if grid.len() != estimates.len() {
            return Err(Error::data("grid and estimates differ in length"));
        }
        check_grid(&grid)?;
        Ok(FittedCurve { grid, estimates })
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn estimates(&self) -> &[Estimate] {
        &self.estimates
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn degenerate_count(&self) -> usize {
        self.estimates.iter().filter(|e| e.degenerate).count()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, Estimate)> + '_ {
        self.grid.iter().copied().zip(self.estimates.iter().copied())
    }

    /// Writes `x,estimate,degenerate`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let err = |e: csv::Error| Error::data(e.to_string());
        w.write_record(["x", "estimate", "degenerate"]).map_err(err)?;
        for (x, e) in self.iter() {
            w.write_record([x.to_string(), e.value.to_string(), u8::from(e.degenerate).to_string()])
                .map_err(err)?;
        }
        w.flush().map_err(|e| Error::data(e.to_string()))
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        #[derive(Deserialize)]
        struct Row {
            x: f64,
            estimate: f64,
            degenerate: u8,
        }
        let mut rdr = csv::Reader::from_reader(reader);
        let mut grid = Vec::new();
        let mut estimates = Vec::new();
        for (i, row) in rdr.deserialize::<Row>().enumerate() {
            let row = row.map_err(|e| Error::Parse { row: i + 2, message: e.to_string() })?;
            grid.push(row.x);
            estimates.push(Estimate { value: row.estimate, degenerate: row.degenerate != 0 });
        }
        Self::new(grid, estimates)
    }
}
