//! Exponential-family node distributions with a single sufficient statistic.
//!
//! Every node in a harmonium carries one natural parameter `eta`. A family
//! supplies the sufficient statistic `f(x)`, the log-partition `A(eta)`, its
//! derivative the mean map `A'(eta)`, and a sampler for the conditional.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const HALF_LN_TWO_PI: f64 = 0.918_938_533_204_672_8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// Support {0, 1}, `A(eta) = log(1 + e^eta)`.
    Bernoulli,
    /// Support R, unit variance, `A(eta) = eta^2 / 2`.
    GaussianUnitVariance,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Bernoulli => "bernoulli",
            Family::GaussianUnitVariance => "gaussian_unit_variance",
        }
    }

    pub fn in_support(self, x: f64) -> bool {
        match self {
            Family::Bernoulli => x == 0.0 || x == 1.0,
            Family::GaussianUnitVariance => x.is_finite(),
        }
    }

    pub fn suff_stat(self, x: f64) -> Result<f64> {
        if !self.in_support(x) {
            return Err(Error::Domain {
                family: self.name(),
                value: x,
            });
        }
        Ok(x)
    }

    pub fn log_partition(self, eta: f64) -> Result<f64> {
        if !eta.is_finite() {
            return Err(Error::NonFinite("natural parameter".into()));
        }
        Ok(self.log_partition_unchecked(eta))
    }

    pub(crate) fn log_partition_unchecked(self, eta: f64) -> f64 {
        match self {
            Family::Bernoulli => softplus(eta),
            Family::GaussianUnitVariance => 0.5 * eta * eta,
        }
    }

    /// `A'(eta)`, the expected sufficient statistic.
    pub fn mean(self, eta: f64) -> f64 {
        match self {
            Family::Bernoulli => sigmoid(eta),
            Family::GaussianUnitVariance => eta,
        }
    }

    /// Log of the base measure, so that `exp(eta*x + log_base(x) - A(eta))` is
    /// a normalized density. Zero for Bernoulli.
    pub fn log_base_measure(self, x: f64) -> f64 {
        match self {
            Family::Bernoulli => 0.0,
            Family::GaussianUnitVariance => -0.5 * x * x - HALF_LN_TWO_PI,
        }
    }

    pub fn sample<R: Rng + ?Sized>(self, eta: f64, rng: &mut R) -> f64 {
        match self {
            Family::Bernoulli => {
                let u: f64 = rng.random();
                if u < sigmoid(eta) {
                    1.0
                } else {
                    0.0
                }
            }
            Family::GaussianUnitVariance => {
                let z: f64 = rng.sample(StandardNormal);
                eta + z
            }
        }
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^x)` without overflow.
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

pub(crate) fn log_sum_exp(values: impl IntoIterator<Item = f64>) -> f64 {
    let values: Vec<f64> = values.into_iter().collect();
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}
