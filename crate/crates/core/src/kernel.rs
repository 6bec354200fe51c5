//! Kernel weight functions.
//!
//! `K_h(u)` is defined as `K(u / h)` with no `1/h` prefactor. Every estimator
//! in this crate is a ratio of kernel-weighted sums, so the normalising
//! constant cancels; do not compare these weights against density-estimation
//! code that uses `K(u/h)/h`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Second-order symmetric kernels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum KernelKind {
    /// Standard normal density, untruncated.
    #[default]
    Gaussian,
    /// `0.75 (1 - u^2)` on `[-1, 1]`, zero elsewhere.
    Epanechnikov,
}

impl KernelKind {
    /// Evaluates `K(u)`.
    #[inline]
    pub fn eval(self, u: f64) -> f64 {
        match self {
            KernelKind::Gaussian => INV_SQRT_2PI * (-0.5 * u * u).exp(),
            KernelKind::Epanechnikov => {
                let a = u.abs();
                if a > 1.0 {
                    0.0
                } else {
                    0.75 * (1.0 - a * a)
                }
            }
        }
    }

    /// Evaluates `K(u / h)` after validating `h`.
    pub fn scaled(self, h: f64, u: f64) -> Result<f64> {
        check_bandwidth(h)?;
        Ok(self.eval_scaled(h, u))
    }

    /// `K(u / h)` without validation; callers have already checked `h`.
    #[inline]
    pub(crate) fn eval_scaled(self, h: f64, u: f64) -> f64 {
        self.eval(u / h)
    }

    /// Lowercase name used in configs and on the command line.
    pub fn name(self) -> &'static str {
        match self {
            KernelKind::Gaussian => "gaussian",
            KernelKind::Epanechnikov => "epanechnikov",
        }
    }

    /// `K(0)`, the kernel's peak value.
    pub fn peak(self) -> f64 {
        match self {
            KernelKind::Gaussian => 1.0 / (2.0 * PI).sqrt(),
            KernelKind::Epanechnikov => 0.75,
        }
    }
}

/// Free-function form of [`KernelKind::eval`].
pub fn kernel_eval(kind: KernelKind, u: f64) -> f64 {
    kind.eval(u)
}

/// Free-function form of [`KernelKind::scaled`].
pub fn scaled_kernel(kind: KernelKind, h: f64, u: f64) -> Result<f64> {
    kind.scaled(h, u)
}

pub(crate) fn check_bandwidth(h: f64) -> Result<()> {
    if h.is_finite() && h > 0.0 {
        Ok(())
    } else {
        Err(Error::config(format!("bandwidth must satisfy h > 0, got {h}")))
    }
}

impl fmt::Display for KernelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for KernelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gaussian" => Ok(KernelKind::Gaussian),
            "epanechnikov" => Ok(KernelKind::Epanechnikov),
            other => Err(Error::config(format!(
                "unknown kernel `{other}` (expected gaussian or epanechnikov)"
            ))),
        }
    }
}
