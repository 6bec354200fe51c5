use std::fmt::{self, Write as _};
use std::str::FromStr;

use crate::bandwidth::BandwidthGrid;
use crate::error::{Error, Result};
use crate::kernel::KernelKind;
use crate::loclin::{linspace, Estimator};

/// How the censoring level is set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CensoringLevel {
    /// Calibrate the shift `c` to this censoring proportion.
    TargetProportion(f64),
    /// Use this shift `c` directly.
    Shift(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BandwidthPolicy {
    Fixed(f64),
    CrossValidation(BandwidthGrid),
}

/// `points` equally spaced values on `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl GridSpec {
    pub fn values(&self) -> Result<Vec<f64>> {
        linspace(self.lo, self.hi, self.points)
    }
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { lo: 1.0, hi: 4.0, points: 61 }
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.lo, self.hi, self.points)
    }
}

/// Everything a Monte Carlo campaign needs.
///
/// Serialised as plain `key = value` lines; `#` starts a comment. Unknown
/// keys are rejected. See [`SimulationConfig::to_text`] for the full key set.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub n: usize,
    pub censoring: CensoringLevel,
    pub outlier_count: usize,
    pub outlier_multiplier: f64,
    pub grid: GridSpec,
    pub replications: usize,
    pub seed: u64,
    pub estimators: Vec<Estimator>,
    pub bandwidth: BandwidthPolicy,
    pub kernel: KernelKind,
    pub positive_only: bool,
    pub calibration_tolerance: f64,
    pub calibration_draws: usize,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            n: 100,
            censoring: CensoringLevel::TargetProportion(0.5),
            outlier_count: 0,
            outlier_multiplier: 1.0,
            grid: GridSpec::default(),
            replications: 1,
            seed: 0,
            estimators: vec![Estimator::Llrer],
            bandwidth: BandwidthPolicy::CrossValidation(BandwidthGrid::default()),
            kernel: KernelKind::Gaussian,
            positive_only: false,
            calibration_tolerance: 0.005,
            calibration_draws: 1_000_000,
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::config("n must be at least 1"));
        }
        if self.replications == 0 {
            return Err(Error::config("replications must be at least 1"));
        }
        if self.outlier_count > self.n {
            return Err(Error::config(format!(
                "outlier_count {} exceeds n {}",
                self.outlier_count, self.n
            )));
        }
        if !(self.outlier_multiplier.is_finite() && self.outlier_multiplier > 0.0) {
            return Err(Error::config("outlier_mc must be positive"));
        }
        match self.censoring {
            CensoringLevel::TargetProportion(p) if !(p > 0.0 && p < 1.0) => {
                return Err(Error::config(format!("target_cp must lie in (0, 1), got {p}")))
            }
            CensoringLevel::Shift(c) if !c.is_finite() => {
                return Err(Error::config("c must be finite"))
            }
            _ => {}
        }
        if self.estimators.is_empty() {
            return Err(Error::config("at least one estimator is required"));
        }
        if let BandwidthPolicy::Fixed(h) = self.bandwidth {
            crate::kernel::check_bandwidth(h)?;
        }
        if matches!(self.bandwidth, BandwidthPolicy::CrossValidation(_)) && self.n < 2 {
            return Err(Error::config("cross-validation needs n >= 2"));
        }
        let grid = self.grid.values()?;
        if grid.iter().any(|&x| 2.0 * x + 1.0 == 0.0) {
            return Err(Error::config("grid must not contain x = -0.5"));
        }
        if !(self.calibration_tolerance > 0.0) || self.calibration_draws == 0 {
            return Err(Error::config("calibration tolerance and draws must be positive"));
        }
        Ok(())
    }

    /// Parses and validates `key = value` text.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = SimulationConfig::default();
        let mut target_cp = None;
        let mut shift = None;
        let mut use_cv = true;
        let mut fixed_h = None;
        let (mut h_lo, mut h_hi, mut h_step) = {
            let d = BandwidthGrid::default();
            (d.lo(), d.hi(), d.step())
        };

        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::config(format!("line {}: expected `key = value`", lineno + 1))
            })?;
            let (key, value) = (key.trim(), value.trim());
            let ctx = |e: Error| Error::config(format!("line {} ({key}): {e}", lineno + 1));
            match key {
                "n" => cfg.n = num(value).map_err(ctx)?,
                "target_cp" => target_cp = Some(num(value).map_err(ctx)?),
                "c" => shift = Some(num(value).map_err(ctx)?),
                "outlier_count" => cfg.outlier_count = num(value).map_err(ctx)?,
                "outlier_mc" => cfg.outlier_multiplier = num(value).map_err(ctx)?,
                "grid" => {
                    let parts: Vec<&str> = value.split(':').map(str::trim).collect();
                    if parts.len() != 3 {
                        return Err(ctx(Error::config("expected lo:hi:points")));
                    }
                    cfg.grid = GridSpec {
                        lo: num(parts[0]).map_err(ctx)?,
                        hi: num(parts[1]).map_err(ctx)?,
                        points: num(parts[2]).map_err(ctx)?,
                    };
                }
                "replications" => cfg.replications = num(value).map_err(ctx)?,
                "seed" => cfg.seed = num(value).map_err(ctx)?,
                "estimators" => {
                    cfg.estimators = value
                        .split(',')
                        .map(|s| s.parse::<Estimator>())
                        .collect::<Result<Vec<_>>>()
                        .map_err(ctx)?;
                }
                "bandwidth" => {
                    if value.eq_ignore_ascii_case("cv") {
                        use_cv = true;
                    } else {
                        use_cv = false;
                        fixed_h = Some(num(value).map_err(ctx)?);
                    }
                }
                "h_lo" => h_lo = num(value).map_err(ctx)?,
                "h_hi" => h_hi = num(value).map_err(ctx)?,
                "h_step" => h_step = num(value).map_err(ctx)?,
                "kernel" => cfg.kernel = value.parse().map_err(ctx)?,
                "positive_only" => cfg.positive_only = num(value).map_err(ctx)?,
                "calibration_tolerance" => cfg.calibration_tolerance = num(value).map_err(ctx)?,
                "calibration_draws" => cfg.calibration_draws = num(value).map_err(ctx)?,
                other => return Err(Error::config(format!("line {}: unknown key `{other}`", lineno + 1))),
            }
        }

        cfg.censoring = match (target_cp, shift) {
            (Some(_), Some(_)) => return Err(Error::config("set only one of target_cp and c")),
            (Some(p), None) => CensoringLevel::TargetProportion(p),
            (None, Some(c)) => CensoringLevel::Shift(c),
            (None, None) => return Err(Error::config("one of target_cp or c is required")),
        };
        cfg.bandwidth = if use_cv {
            BandwidthPolicy::CrossValidation(BandwidthGrid::new(h_lo, h_hi, h_step)?)
        } else {
            BandwidthPolicy::Fixed(fixed_h.expect("set with use_cv = false"))
        };
        cfg.estimators.dedup();
        cfg.validate()?;
        Ok(cfg)
    }

    /// Canonical text form; `parse(to_text())` reproduces the config.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "n = {}", self.n);
        match self.censoring {
            CensoringLevel::TargetProportion(p) => {
                let _ = writeln!(s, "target_cp = {p}");
            }
            CensoringLevel::Shift(c) => {
                let _ = writeln!(s, "c = {c}");
            }
        }
        let _ = writeln!(s, "outlier_count = {}", self.outlier_count);
        let _ = writeln!(s, "outlier_mc = {}", self.outlier_multiplier);
        let _ = writeln!(s, "grid = {}", self.grid);
        let _ = writeln!(s, "replications = {}", self.replications);
        let _ = writeln!(s, "seed = {}", self.seed);
        let names: Vec<&str> = self.estimators.iter().map(|e| e.name()).collect();
        let _ = writeln!(s, "estimators = {}", names.join(","));
        match self.bandwidth {
            BandwidthPolicy::Fixed(h) => {
                let _ = writeln!(s, "bandwidth = {h}");
            }
            BandwidthPolicy::CrossValidation(g) => {
                let _ = writeln!(s, "bandwidth = cv");
                let _ = writeln!(s, "h_lo = {}", g.lo());
                let _ = writeln!(s, "h_hi = {}", g.hi());
                let _ = writeln!(s, "h_step = {}", g.step());
            }
        }
        let _ = writeln!(s, "kernel = {}", self.kernel);
        let _ = writeln!(s, "positive_only = {}", self.positive_only);
        let _ = writeln!(s, "calibration_tolerance = {}", self.calibration_tolerance);
        let _ = writeln!(s, "calibration_draws = {}", self.calibration_draws);
        s
    }
}

fn num<T: FromStr>(v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::config(format!("cannot parse `{v}`")))
}
