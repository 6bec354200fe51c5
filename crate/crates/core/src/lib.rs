//! Local linear relative-error regression for right-censored responses.
//!
//! Given observations `(Y, delta, X)` with `Y = min(T, C)` and
//! `delta = 1{T <= C}`, the crate estimates the relative-error regression
//! function `E[T^-1 | X = x] / E[T^-2 | X = x]` with a local linear fit on
//! Kaplan-Meier-weighted synthetic responses, alongside two classical
//! competitors on the same synthetic data:
//!
//! - [`Estimator::Llrer`], the local linear relative-error fit,
//! - [`Estimator::Llcr`], local linear least squares,
//! - [`Estimator::Cr`], Nadaraya-Watson.
//!
//! Modules:
//!
//! - [`kernel`]: Gaussian and Epanechnikov weights,
//! - [`survival`]: samples, the censoring Kaplan-Meier step, synthetic responses,
//! - [`loclin`]: point and curve estimates (fast moment path and O(n^2) reference),
//! - [`bandwidth`]: leave-one-out cross-validation on a bandwidth grid,
//! - [`simulate`]: the Monte Carlo design, censoring calibration, outliers, metrics,
//! - [`cli`]: the `llrer` command-line tool.
//!
//! ```
//! use llrer::{fit_curve, CensoredSample, Estimator, EstimatorConfig, KernelKind};
//!
//! let sample = CensoredSample::from_columns(
//!     &[1.2, 2.9, 2.1, 4.8, 3.3],
//!     &[true, false, true, true, true],
//!     &[0.1, 0.9, 0.5, 1.8, 1.2],
//! )
//! .unwrap();
//! let config = EstimatorConfig::new(KernelKind::Gaussian, 0.8).unwrap();
//! let curve = fit_curve(Estimator::Llrer, &sample, &config, &[0.5, 1.0]).unwrap();
//! assert_eq!(curve.len(), 2);
//! ```

pub mod bandwidth;
pub mod cli;
mod compensated;
pub mod error;
pub mod kernel;
pub mod loclin;
pub mod simulate;
pub mod survival;

pub use bandwidth::{cv_score, select_bandwidth, BandwidthGrid, BandwidthSelection, CvScore};
pub use error::{Error, Result};
pub use kernel::{kernel_eval, scaled_kernel, KernelKind};
pub use loclin::{
    cr_point, fit_curve, llcr_point, llcr_point_naive, llrer_point, llrer_point_naive,
    moment_statistics, Estimate, Estimator, EstimatorConfig, FittedCurve, MomentStatistics,
    SmootherInput,
};
pub use simulate::{monte_carlo_run, SimulationConfig, SimulationReport};
pub use survival::{
    km_censoring_survival, survival_eval, synthetic_transform, CensoredSample, Observation, Side,
    SurvivalStep, SyntheticOrder, SyntheticResponses,
};
