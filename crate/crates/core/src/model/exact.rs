//! Exact quantities for tiny all-Bernoulli models, by enumerating every
//! visible configuration. Sums over hidden states are done in closed form:
//! with no hidden-hidden edges, `log sum_h exp(E(v, h))` factorizes into a
//! sum of per-unit log-partitions.

use ndarray::Array1;

use super::{Gated, HarmoniumParams, MultiViewSample};
use crate::error::{Error, Result};
use crate::expfam::{log_sum_exp, Family};

pub const MAX_ENUM_VISIBLE: usize = 16;
pub const MAX_ENUM_HIDDEN: usize = 12;

pub fn check_enumerable(params: &HarmoniumParams) -> Result<()> {
    if params.hidden_family != Family::Bernoulli
        || params.views.iter().any(|v| v.family != Family::Bernoulli)
    {
        return Err(Error::UnsupportedFamily(
            "exact enumeration requires Bernoulli visible and hidden nodes".into(),
        ));
    }
    let total: usize = params.views.iter().map(|v| v.dim).sum();
    if total > MAX_ENUM_VISIBLE {
        return Err(Error::EnumerationBound(format!(
            "{total} visible nodes (limit {MAX_ENUM_VISIBLE})"
        )));
    }
    if params.hidden_dim > MAX_ENUM_HIDDEN {
        return Err(Error::EnumerationBound(format!(
            "{} hidden nodes (limit {MAX_ENUM_HIDDEN})",
            params.hidden_dim
        )));
    }
    Ok(())
}

pub fn is_enumerable(params: &HarmoniumParams) -> bool {
    check_enumerable(params).is_ok()
}

/// All `2^D` binary visible configurations, ordered by the bits of their
/// index with view 0, node 0 as the least significant bit.
pub fn visible_states(params: &HarmoniumParams) -> Vec<MultiViewSample> {
    let dims: Vec<usize> = params.views.iter().map(|v| v.dim).collect();
    let total: usize = dims.iter().sum();
    (0..1usize << total)
        .map(|bits| {
            let mut offset = 0;
            let values = dims
                .iter()
                .map(|&d| {
                    let v = Array1::from_shape_fn(d, |i| ((bits >> (offset + i)) & 1) as f64);
                    offset += d;
                    v
                })
                .collect();
            MultiViewSample::new(values)
        })
        .collect()
}

/// `log sum_h exp(E(v, h))`.
pub(crate) fn free_energy(gated: &Gated<'_>, values: &[Array1<f64>]) -> f64 {
    let params = gated.params;
    let hidden = gated
        .hidden_eta(values)
        .iter()
        .map(|&e| params.hidden_family.log_partition_unchecked(e))
        .sum::<f64>();
    let visible = values
        .iter()
        .zip(&params.visible_bias)
        .map(|(v, b)| v.dot(b))
        .sum::<f64>();
    hidden + visible
}

/// Log of the partition function over all visible and hidden states.
pub fn log_partition(params: &HarmoniumParams) -> Result<f64> {
    check_enumerable(params)?;
    let gated = params.gated();
    Ok(log_sum_exp(
        visible_states(params)
            .iter()
            .map(|s| free_energy(&gated, &s.values)),
    ))
}

/// Every visible configuration with its exact marginal probability.
pub fn visible_distribution(params: &HarmoniumParams) -> Result<(Vec<MultiViewSample>, Vec<f64>)> {
    check_enumerable(params)?;
    let gated = params.gated();
    let states = visible_states(params);
    let log_unnorm: Vec<f64> = states
        .iter()
        .map(|s| free_energy(&gated, &s.values))
        .collect();
    let log_z = log_sum_exp(log_unnorm.iter().copied());
    let probs = log_unnorm.iter().map(|l| (l - log_z).exp()).collect();
    Ok((states, probs))
}

/// Mean over `data` of `log p(v)`.
pub fn exact_log_likelihood(params: &HarmoniumParams, data: &[MultiViewSample]) -> Result<f64> {
    check_enumerable(params)?;
    if data.is_empty() {
        return Err(Error::Empty("dataset"));
    }
    for s in data {
        params.check_sample(s)?;
        for (v, cfg) in s.values.iter().zip(&params.views) {
            if let Some(&bad) = v.iter().find(|&&x| !cfg.family.in_support(x)) {
                return Err(Error::Domain {
                    family: cfg.family.name(),
                    value: bad,
                });
            }
        }
    }
    let log_z = log_partition(params)?;
    let gated = params.gated();
    let total: f64 = data.iter().map(|s| free_energy(&gated, &s.values)).sum();
    Ok(total / data.len() as f64 - log_z)
}
