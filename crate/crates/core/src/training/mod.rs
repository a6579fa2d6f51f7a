//! Likelihood gradients for the gated harmonium.
//!
//! For every parameter the gradient of the mean log-likelihood is the
//! difference between a data expectation and a model expectation of the
//! same statistic:
//!
//! | parameter | statistic |
//! |-----------|-----------|
//! | `W[k]_ij` | `gate(k,j) f(v_i) B'(lambda_hat_j)` |
//! | `xi[k]_i` | `f(v_i)` |
//! | `lambda_j` | `B'(lambda_hat_j)` |
//! | `s_kj` | `gate'(k,j) sum_i W[k]_ij f(v_i) B'(lambda_hat_j)` |
//!
//! The switch statistic sums over the visible index because one logit gates
//! a whole weight column. All four are linear in the per-view outer product
//! `f(v) B'(lambda_hat)^T`, so both phases are accumulated as weighted outer
//! products and the gates are applied once at the end.

pub mod gradcheck;
mod trainer;

pub use trainer::{
    train, EpochRecord, GradientMethod, TrainConfig, TrainLog, Trainer, TrainerState,
};

use ndarray::{Array1, Array2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::exact::{check_enumerable, exact_log_likelihood, visible_distribution};
use crate::model::{HarmoniumParams, MultiViewSample, ParamRef};

/// One array per parameter group, shaped like [`HarmoniumParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct GradientSet {
    pub weights: Vec<Array2<f64>>,
    pub visible_bias: Vec<Array1<f64>>,
    pub hidden_bias: Array1<f64>,
    pub switches: Array2<f64>,
}

impl GradientSet {
    pub fn zeros_like(params: &HarmoniumParams) -> Self {
        GradientSet {
            weights: params
                .weights
                .iter()
                .map(|w| Array2::zeros(w.raw_dim()))
                .collect(),
            visible_bias: params
                .visible_bias
                .iter()
                .map(|b| Array1::zeros(b.len()))
                .collect(),
            hidden_bias: Array1::zeros(params.hidden_dim),
            switches: Array2::zeros(params.switches.raw_dim()),
        }
    }

    pub fn get(&self, r: ParamRef) -> f64 {
        match r {
            ParamRef::Weight { view, i, j } => self.weights[view][[i, j]],
            ParamRef::VisibleBias { view, i } => self.visible_bias[view][i],
            ParamRef::HiddenBias { j } => self.hidden_bias[j],
            ParamRef::Switch { view, j } => self.switches[[view, j]],
        }
    }

    pub fn get_mut(&mut self, r: ParamRef) -> &mut f64 {
        match r {
            ParamRef::Weight { view, i, j } => &mut self.weights[view][[i, j]],
            ParamRef::VisibleBias { view, i } => &mut self.visible_bias[view][i],
            ParamRef::HiddenBias { j } => &mut self.hidden_bias[j],
            ParamRef::Switch { view, j } => &mut self.switches[[view, j]],
        }
    }

    fn values(&self) -> impl Iterator<Item = &f64> {
        self.weights
            .iter()
            .flat_map(|w| w.iter())
            .chain(self.visible_bias.iter().flat_map(|b| b.iter()))
            .chain(self.hidden_bias.iter())
            .chain(self.switches.iter())
    }

    /// Inner product over every component.
    pub fn dot(&self, other: &GradientSet) -> f64 {
        self.values().zip(other.values()).map(|(a, b)| a * b).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.values().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn scaled_add(&mut self, alpha: f64, other: &GradientSet) {
        for (a, b) in self.weights.iter_mut().zip(&other.weights) {
            a.scaled_add(alpha, b);
        }
        for (a, b) in self.visible_bias.iter_mut().zip(&other.visible_bias) {
            a.scaled_add(alpha, b);
        }
        self.hidden_bias.scaled_add(alpha, &other.hidden_bias);
        self.switches.scaled_add(alpha, &other.switches);
    }
}

/// Weighted sums of the linear statistics behind every gradient component.
struct PhaseStats {
    outer: Vec<Array2<f64>>,
    visible: Vec<Array1<f64>>,
    hidden: Array1<f64>,
}

impl PhaseStats {
    /// `rows[n]` is a visible configuration, `hmeans` its hidden means (one
    /// row each), `weights[n]` its weight in the expectation.
    fn collect(
        params: &HarmoniumParams,
        rows: &[&[Array1<f64>]],
        hmeans: &Array2<f64>,
        weights: &Array1<f64>,
    ) -> Self {
        let weighted_h = hmeans * &weights.view().insert_axis(Axis(1));
        let mut outer = Vec::with_capacity(params.num_views());
        let mut visible = Vec::with_capacity(params.num_views());
        for (k, cfg) in params.views.iter().enumerate() {
            let v = Array2::from_shape_fn((rows.len(), cfg.dim), |(n, i)| rows[n][k][i]);
            outer.push(v.t().dot(&weighted_h));
            visible.push(v.t().dot(weights));
        }
        PhaseStats {
            outer,
            visible,
            hidden: hmeans.t().dot(weights),
        }
    }

    fn subtract(mut self, other: &PhaseStats) -> Self {
        for (a, b) in self.outer.iter_mut().zip(&other.outer) {
            *a -= b;
        }
        for (a, b) in self.visible.iter_mut().zip(&other.visible) {
            *a -= b;
        }
        self.hidden -= &other.hidden;
        self
    }

    fn into_gradient(self, params: &HarmoniumParams) -> GradientSet {
        let gates = params.gates();
        let dgates = params.gate_derivatives();
        let mut switches = Array2::zeros(params.switches.raw_dim());
        if params.structure.learns_switches() {
            for (k, outer) in self.outer.iter().enumerate() {
                let col_sums = (&params.weights[k] * outer).sum_axis(Axis(0));
                switches.row_mut(k).assign(&(&col_sums * &dgates.row(k)));
            }
        }
        let weights = self
            .outer
            .into_iter()
            .enumerate()
            .map(|(k, o)| o * &gates.row(k))
            .collect();
        GradientSet {
            weights,
            visible_bias: self.visible,
            hidden_bias: self.hidden,
            switches,
        }
    }
}

/// Per-sample positive-phase statistics, with `hmean` the posterior hidden
/// means at `sample`.
pub fn sufficient_stats_outer(
    params: &HarmoniumParams,
    sample: &MultiViewSample,
    hmean: &Array1<f64>,
) -> Result<GradientSet> {
    params.check_sample(sample)?;
    if hmean.len() != params.hidden_dim {
        return Err(Error::Shape("hidden mean has wrong length".into()));
    }
    let h = hmean.view().insert_axis(Axis(0)).to_owned();
    let rows = [sample.values.as_slice()];
    Ok(PhaseStats::collect(params, &rows, &h, &Array1::ones(1)).into_gradient(params))
}

fn stack_rows(rows: impl ExactSizeIterator<Item = Array1<f64>>, width: usize) -> Array2<f64> {
    let n = rows.len();
    let mut out = Array2::zeros((n, width));
    for (mut dst, src) in out.outer_iter_mut().zip(rows) {
        dst.assign(&src);
    }
    out
}

/// Contrastive-divergence estimate of the likelihood gradient on `batch`.
///
/// Each sample starts a chain of `cd_steps` block Gibbs sweeps; the negative
/// phase uses the posterior hidden means at the chain endpoint. Chains draw
/// from independent ChaCha streams keyed off one seed taken from `rng`, and
/// the reduction runs in sample order, so the result does not depend on the
/// rayon pool size.
pub fn cd_gradient<R: Rng + ?Sized>(
    params: &HarmoniumParams,
    batch: &[MultiViewSample],
    cd_steps: usize,
    rng: &mut R,
) -> Result<GradientSet> {
    if batch.is_empty() {
        return Err(Error::Empty("batch"));
    }
    if cd_steps == 0 {
        return Err(Error::Config("cd_steps must be positive".into()));
    }
    for s in batch {
        params.check_sample(s)?;
    }
    let batch_seed: u64 = rng.random();
    let gated = params.gated();
    let chains: Vec<(Array1<f64>, Vec<Array1<f64>>, Array1<f64>)> = batch
        .par_iter()
        .enumerate()
        .map(|(n, sample)| {
            let mut chain_rng = ChaCha8Rng::seed_from_u64(batch_seed);
            chain_rng.set_stream(n as u64);
            let h_pos = gated.hidden_mean(&sample.values);
            let mut v = sample.values.clone();
            for _ in 0..cd_steps {
                let h = gated.sample_hidden(&v, &mut chain_rng);
                v = gated.sample_visible(&h, &mut chain_rng);
            }
            let h_neg = gated.hidden_mean(&v);
            (h_pos, v, h_neg)
        })
        .collect();

    let j = params.hidden_dim;
    let weights = Array1::from_elem(batch.len(), 1.0 / batch.len() as f64);
    let h_pos = stack_rows(chains.iter().map(|c| c.0.clone()), j);
    let h_neg = stack_rows(chains.iter().map(|c| c.2.clone()), j);
    let pos_rows: Vec<&[Array1<f64>]> = batch.iter().map(|s| s.values.as_slice()).collect();
    let neg_rows: Vec<&[Array1<f64>]> = chains.iter().map(|c| c.1.as_slice()).collect();
    let pos = PhaseStats::collect(params, &pos_rows, &h_pos, &weights);
    let neg = PhaseStats::collect(params, &neg_rows, &h_neg, &weights);
    Ok(pos.subtract(&neg).into_gradient(params))
}

/// Gradient of [`exact_log_likelihood`] with the model expectation computed
/// by enumerating every visible configuration.
pub fn exact_gradient(params: &HarmoniumParams, data: &[MultiViewSample]) -> Result<GradientSet> {
    check_enumerable(params)?;
    if data.is_empty() {
        return Err(Error::Empty("dataset"));
    }
    for s in data {
        params.check_sample(s)?;
    }
    let gated = params.gated();
    let j = params.hidden_dim;

    let data_rows: Vec<&[Array1<f64>]> = data.iter().map(|s| s.values.as_slice()).collect();
    let data_h = stack_rows(data.iter().map(|s| gated.hidden_mean(&s.values)), j);
    let data_w = Array1::from_elem(data.len(), 1.0 / data.len() as f64);
    let pos = PhaseStats::collect(params, &data_rows, &data_h, &data_w);

    let (states, probs) = visible_distribution(params)?;
    let model_rows: Vec<&[Array1<f64>]> = states.iter().map(|s| s.values.as_slice()).collect();
    let model_h = stack_rows(states.iter().map(|s| gated.hidden_mean(&s.values)), j);
    let neg = PhaseStats::collect(params, &model_rows, &model_h, &Array1::from(probs));

    Ok(pos.subtract(&neg).into_gradient(params))
}

/// Central differences of [`exact_log_likelihood`] over every scalar
/// parameter, switch logits included.
pub fn finite_diff_gradient(
    params: &HarmoniumParams,
    data: &[MultiViewSample],
    step: f64,
) -> Result<GradientSet> {
    if !(1e-7..=1e-3).contains(&step) {
        return Err(Error::Config(format!(
            "finite-difference step {step} outside [1e-7, 1e-3]"
        )));
    }
    check_enumerable(params)?;
    let mut grad = GradientSet::zeros_like(params);
    let mut probe = params.clone();
    for r in params.param_refs() {
        let base = params.get(r);
        *probe.get_mut(r) = base + step;
        let up = exact_log_likelihood(&probe, data)?;
        *probe.get_mut(r) = base - step;
        let down = exact_log_likelihood(&probe, data)?;
        *probe.get_mut(r) = base;
        *grad.get_mut(r) = (up - down) / (2.0 * step);
    }
    Ok(grad)
}

/// Mean squared error per view between `f(v)` and its mean-field
/// reconstruction through the posterior hidden means.
pub fn reconstruction_error(
    params: &HarmoniumParams,
    batch: &[MultiViewSample],
) -> Result<Vec<f64>> {
    if batch.is_empty() {
        return Err(Error::Empty("batch"));
    }
    for s in batch {
        params.check_sample(s)?;
    }
    let gated = params.gated();
    let per_sample: Vec<Vec<f64>> = batch
        .par_iter()
        .map(|s| {
            let h = gated.hidden_mean(&s.values);
            (0..params.num_views())
                .map(|k| {
                    let recon = gated.visible_mean(k, h.view());
                    let diff = &s.values[k] - &recon;
                    diff.dot(&diff)
                })
                .collect()
        })
        .collect();
    Ok(params
        .views
        .iter()
        .enumerate()
        .map(|(k, cfg)| {
            per_sample.iter().map(|e| e[k]).sum::<f64>() / (batch.len() * cfg.dim) as f64
        })
        .collect())
}
