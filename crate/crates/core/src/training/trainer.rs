use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{cd_gradient, exact_gradient, reconstruction_error, GradientSet};
use crate::data::MultiViewDataset;
use crate::error::{Error, Result};
use crate::model::exact::{exact_log_likelihood, is_enumerable};
use crate::model::{HarmoniumParams, MultiViewSample};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradientMethod {
    #[default]
    ContrastiveDivergence,
    /// Enumeration-exact gradients; tiny Bernoulli models only.
    Exact,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    pub cd_steps: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    /// Multiplier on `learning_rate` for the switch logits.
    pub switch_lr_scale: f64,
    /// L2 penalty on the weights only.
    pub weight_decay: f64,
    pub method: GradientMethod,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.1,
            momentum: 0.9,
            cd_steps: 1,
            epochs: 100,
            batch_size: 20,
            seed: 0,
            switch_lr_scale: 1.0,
            weight_decay: 1e-4,
            method: GradientMethod::ContrastiveDivergence,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(msg.into()));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return bad("momentum must be in [0, 1)");
        }
        if self.cd_steps == 0 {
            return bad("cd_steps must be positive");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be positive");
        }
        if !(self.switch_lr_scale > 0.0 && self.switch_lr_scale.is_finite()) {
            return bad("switch_lr_scale must be positive");
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return bad("weight_decay must be nonnegative");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub recon_error: Vec<f64>,
    pub mean_gate: Vec<f64>,
    pub exact_ll: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainLog {
    pub records: Vec<EpochRecord>,
}

impl TrainLog {
    /// `epoch,recon_err_view0,...,mean_gate_view0,...,exact_ll`
    pub fn to_csv(&self, num_views: usize) -> String {
        let mut out = String::from("epoch");
        for k in 0..num_views {
            let _ = write!(out, ",recon_err_view{k}");
        }
        for k in 0..num_views {
            let _ = write!(out, ",mean_gate_view{k}");
        }
        out.push_str(",exact_ll\n");
        for r in &self.records {
            let _ = write!(out, "{}", r.epoch);
            for e in r.recon_error.iter().chain(&r.mean_gate) {
                let _ = write!(out, ",{e:.17e}");
            }
            match r.exact_ll {
                Some(ll) => {
                    let _ = writeln!(out, ",{ll:.17e}");
                }
                None => out.push_str(",\n"),
            }
        }
        out
    }
}

/// Optimizer state carried across checkpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainerState {
    pub velocity: GradientSet,
    pub epochs_done: usize,
}

/// Minibatch gradient ascent with momentum.
///
/// Epoch `e` draws its shuffle and chain seeds from ChaCha stream `e` of
/// `config.seed`, so a run split across checkpoints replays the same
/// random stream as an uninterrupted one.
pub struct Trainer {
    pub params: HarmoniumParams,
    pub config: TrainConfig,
    state: TrainerState,
}

impl Trainer {
    pub fn new(params: HarmoniumParams, config: TrainConfig) -> Result<Self> {
        let state = TrainerState {
            velocity: GradientSet::zeros_like(&params),
            epochs_done: 0,
        };
        Self::resume(params, state, config)
    }

    pub fn resume(
        params: HarmoniumParams,
        state: TrainerState,
        config: TrainConfig,
    ) -> Result<Self> {
        config.validate()?;
        params.validate()?;
        if state.velocity.weights.len() != params.num_views()
            || state
                .velocity
                .weights
                .iter()
                .zip(&params.weights)
                .any(|(v, w)| v.dim() != w.dim())
            || state.velocity.switches.dim() != params.switches.dim()
        {
            return Err(Error::Shape(
                "optimizer state does not match parameters".into(),
            ));
        }
        Ok(Trainer {
            params,
            config,
            state,
        })
    }

    pub fn state(&self) -> &TrainerState {
        &self.state
    }

    pub fn epochs_done(&self) -> usize {
        self.state.epochs_done
    }

    pub fn into_parts(self) -> (HarmoniumParams, TrainerState) {
        (self.params, self.state)
    }

    pub fn run(&mut self, data: &[MultiViewSample], epochs: usize) -> Result<TrainLog> {
        let mut log = TrainLog::default();
        for _ in 0..epochs {
            log.records.push(self.run_epoch(data)?);
        }
        Ok(log)
    }

    pub fn run_epoch(&mut self, data: &[MultiViewSample]) -> Result<EpochRecord> {
        if data.is_empty() {
            return Err(Error::Empty("dataset"));
        }
        let epoch = self.state.epochs_done;
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
        rng.set_stream(epoch as u64);
        let mut order: Vec<usize> = (0..data.len()).collect();
        order.shuffle(&mut rng);
        let mut batch = Vec::with_capacity(self.config.batch_size);
        for chunk in order.chunks(self.config.batch_size) {
            batch.clear();
            batch.extend(chunk.iter().map(|&n| data[n].clone()));
            let grad = match self.config.method {
                GradientMethod::ContrastiveDivergence => {
                    cd_gradient(&self.params, &batch, self.config.cd_steps, &mut rng)?
                }
                GradientMethod::Exact => exact_gradient(&self.params, &batch)?,
            };
            self.apply(&grad);
            if let Some(group) = self.params.first_non_finite_group() {
                return Err(Error::Divergence {
                    epoch,
                    group: group.into(),
                });
            }
        }
        self.state.epochs_done += 1;
        self.record(epoch, data)
    }

    pub(crate) fn apply(&mut self, grad: &GradientSet) {
        let cfg = &self.config;
        let lr = cfg.learning_rate;
        let mu = cfg.momentum;
        let vel = &mut self.state.velocity;
        let p = &mut self.params;
        for ((v, g), w) in vel
            .weights
            .iter_mut()
            .zip(&grad.weights)
            .zip(&mut p.weights)
        {
            ndarray::Zip::from(v)
                .and(g)
                .and(&mut *w)
                .for_each(|v, &g, w| {
                    *v = mu * *v + lr * (g - cfg.weight_decay * *w);
                    *w += *v;
                });
        }
        for ((v, g), b) in vel
            .visible_bias
            .iter_mut()
            .zip(&grad.visible_bias)
            .zip(&mut p.visible_bias)
        {
            ndarray::Zip::from(v).and(g).and(b).for_each(|v, &g, b| {
                *v = mu * *v + lr * g;
                *b += *v;
            });
        }
        ndarray::Zip::from(&mut vel.hidden_bias)
            .and(&grad.hidden_bias)
            .and(&mut p.hidden_bias)
            .for_each(|v, &g, b| {
                *v = mu * *v + lr * g;
                *b += *v;
            });
        if p.structure.learns_switches() {
            let slr = lr * cfg.switch_lr_scale;
            ndarray::Zip::from(&mut vel.switches)
                .and(&grad.switches)
                .and(&mut p.switches)
                .for_each(|v, &g, s| {
                    *v = mu * *v + slr * g;
                    *s += *v;
                });
        }
    }

    fn record(&self, epoch: usize, data: &[MultiViewSample]) -> Result<EpochRecord> {
        let gates = self.params.gates();
        let exact_ll = if is_enumerable(&self.params) {
            Some(exact_log_likelihood(&self.params, data)?)
        } else {
            None
        };
        Ok(EpochRecord {
            epoch,
            recon_error: reconstruction_error(&self.params, data)?,
            mean_gate: gates
                .rows()
                .into_iter()
                .map(|r| r.mean().unwrap_or(0.0))
                .collect(),
            exact_ll,
        })
    }
}

/// Runs `config.epochs` epochs from a fresh optimizer state.
pub fn train(
    params: HarmoniumParams,
    data: &MultiViewDataset,
    config: &TrainConfig,
) -> Result<(HarmoniumParams, TrainLog)> {
    data.check_against(&params.views)?;
    let mut trainer = Trainer::new(params, config.clone())?;
    let log = trainer.run(&data.samples, config.epochs)?;
    Ok((trainer.params, log))
}
