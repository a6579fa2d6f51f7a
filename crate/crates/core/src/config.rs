//! Run configuration for the command-line pipeline, read from TOML.
//!
//! Every field has a default except the seed, which the data-generating and
//! training commands require. Unknown keys are rejected.

use std::path::Path;

use ndarray::Array2;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::SynthConfig;
use crate::error::{Error, Result};
use crate::eval::Selection;
use crate::expfam::Family;
use crate::model::{StructureKind, StructureMode};
use crate::training::gradcheck::GradCheckConfig;
use crate::training::{GradientMethod, TrainConfig};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub data: DataSection,
    pub model: ModelSection,
    pub train: TrainSection,
    pub eval: EvalSection,
    pub grad_check: GradCheckConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSection {
    pub num_classes: usize,
    pub image_side: usize,
    pub samples_per_class: usize,
    pub noise_lines_per_image: usize,
    pub jitter: usize,
}

impl Default for DataSection {
    fn default() -> Self {
        let s = SynthConfig::default();
        DataSection {
            num_classes: s.num_classes,
            image_side: s.image_side,
            samples_per_class: s.samples_per_class,
            noise_lines_per_image: s.noise_lines_per_image,
            jitter: s.jitter,
        }
    }
}

/// Per-view settings for CSV inputs without a manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ViewSection {
    pub name: Option<String>,
    pub family: Family,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub hidden_dim: usize,
    pub hidden_family: Family,
    pub structure: StructureKind,
    /// MVH: units `0..mvh_shared` connect to all views, the rest are split
    /// evenly into view-specific blocks.
    pub mvh_shared: Option<usize>,
    /// MVH: explicit `K x J` mask; overrides `mvh_shared`.
    pub mvh_mask: Option<Vec<Vec<bool>>>,
    pub init_scale: f64,
    pub views: Option<Vec<ViewSection>>,
}

impl Default for ModelSection {
    fn default() -> Self {
        ModelSection {
            hidden_dim: 60,
            hidden_family: Family::Bernoulli,
            structure: StructureKind::Sa,
            mvh_shared: None,
            mvh_mask: None,
            init_scale: 0.01,
            views: None,
        }
    }
}

impl ModelSection {
    pub fn structure_mode(&self, num_views: usize) -> Result<StructureMode> {
        match self.structure {
            StructureKind::Dwh => Ok(StructureMode::Dwh),
            StructureKind::Sa => Ok(StructureMode::Sa),
            StructureKind::Mvh => {
                if let Some(rows) = &self.mvh_mask {
                    let ok =
                        rows.len() == num_views && rows.iter().all(|r| r.len() == self.hidden_dim);
                    if !ok {
                        return Err(Error::Config(format!(
                            "model.mvh_mask must be {num_views} x {}",
                            self.hidden_dim
                        )));
                    }
                    let mask =
                        Array2::from_shape_fn((num_views, self.hidden_dim), |(k, j)| rows[k][j]);
                    Ok(StructureMode::Mvh { mask })
                } else {
                    let shared = self.mvh_shared.unwrap_or(self.hidden_dim / 2);
                    StructureMode::mvh_blocks(num_views, self.hidden_dim, shared)
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub learning_rate: f64,
    pub momentum: f64,
    pub cd_steps: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub switch_lr_scale: f64,
    pub weight_decay: f64,
    pub method: GradientMethod,
}

impl Default for TrainSection {
    fn default() -> Self {
        let t = TrainConfig::default();
        TrainSection {
            learning_rate: t.learning_rate,
            momentum: t.momentum,
            cd_steps: t.cd_steps,
            epochs: t.epochs,
            batch_size: t.batch_size,
            switch_lr_scale: t.switch_lr_scale,
            weight_decay: t.weight_decay,
            method: t.method,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    pub ks: Vec<usize>,
    pub test_fraction: f64,
    /// `all`, `shared` or `specific:<view>`.
    pub selection: String,
    pub grid_cols: usize,
}

impl Default for EvalSection {
    fn default() -> Self {
        EvalSection {
            ks: vec![10, 30, 50, 70, 100],
            test_fraction: 0.5,
            selection: "all".into(),
            grid_cols: 10,
        }
    }
}

impl EvalSection {
    pub fn selection(&self) -> Result<Selection> {
        self.selection.parse()
    }
}

/// Named random substreams derived from the run seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Data = 1,
    Init = 2,
    Cd = 3,
    Split = 4,
    GradCheck = 5,
}

/// First word of ChaCha stream `stream` keyed by `seed`.
pub fn substream_seed(seed: u64, stream: Stream) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng.next_u64()
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn require_seed(&self) -> Result<u64> {
        self.seed
            .ok_or_else(|| Error::Config("a seed is required (set `seed` or pass --seed)".into()))
    }

    pub fn synth_config(&self) -> Result<SynthConfig> {
        let d = &self.data;
        let cfg = SynthConfig {
            num_classes: d.num_classes,
            image_side: d.image_side,
            samples_per_class: d.samples_per_class,
            noise_lines_per_image: d.noise_lines_per_image,
            jitter: d.jitter,
            seed: substream_seed(self.require_seed()?, Stream::Data),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn train_config(&self) -> Result<TrainConfig> {
        let t = &self.train;
        let cfg = TrainConfig {
            learning_rate: t.learning_rate,
            momentum: t.momentum,
            cd_steps: t.cd_steps,
            epochs: t.epochs,
            batch_size: t.batch_size,
            seed: substream_seed(self.require_seed()?, Stream::Cd),
            switch_lr_scale: t.switch_lr_scale,
            weight_decay: t.weight_decay,
            method: t.method,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_defaults() {
        let cfg = RunConfig::from_toml("").unwrap();
        assert_eq!(cfg, RunConfig::default());
        assert!(cfg.require_seed().is_err());
    }

    #[test]
    fn unknown_keys_are_named() {
        let err = RunConfig::from_toml("[train]\nlearning_rat = 0.1\n").unwrap_err();
        assert!(err.to_string().contains("learning_rat"), "{err}");
        let err = RunConfig::from_toml("bogus = 1\n").unwrap_err();
        assert!(err.to_string().contains("bogus"), "{err}");
    }

    #[test]
    fn sections_parse() {
        let cfg = RunConfig::from_toml(
            r#"
            seed = 9
            [model]
            structure = "mvh"
            hidden_dim = 6
            mvh_shared = 2
            [eval]
            ks = [1, 3]
            selection = "specific:1"
            [grad_check]
            structure = "dwh"
            "#,
        )
        .unwrap();
        assert_eq!(cfg.seed, Some(9));
        assert_eq!(cfg.eval.selection().unwrap(), Selection::Specific(1));
        let StructureMode::Mvh { mask } = cfg.model.structure_mode(2).unwrap() else {
            panic!("expected mvh");
        };
        assert_eq!(mask.column(0).to_vec(), vec![true, true]);
        assert_eq!(mask.column(5).iter().filter(|&&b| b).count(), 1);
        assert_eq!(cfg.grad_check.structure, StructureKind::Dwh);
    }

    #[test]
    fn substreams_differ() {
        let a = substream_seed(1, Stream::Data);
        let b = substream_seed(1, Stream::Cd);
        assert_ne!(a, b);
        assert_eq!(a, substream_seed(1, Stream::Data));
    }
}
