//! Model checkpoints as JSON documents.
//!
//! Every array is stored as `{ "shape": [..], "data": [..] }` in row-major
//! order. Floats are written in shortest round-trip form and parsed with
//! correct rounding, so save followed by load is bit-exact.

use std::fs;
use std::io::Write;
use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expfam::Family;
use crate::model::{HarmoniumParams, StructureMode, ViewConfig};
use crate::training::{GradientSet, TrainerState};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub params: HarmoniumParams,
    pub trainer: Option<TrainerState>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Tensor<T> {
    shape: Vec<usize>,
    data: Vec<T>,
}

impl<T: Clone> Tensor<T> {
    fn matrix(a: &Array2<T>) -> Self {
        Tensor {
            shape: vec![a.nrows(), a.ncols()],
            data: a.iter().cloned().collect(),
        }
    }

    fn vector(a: &Array1<T>) -> Self {
        Tensor {
            shape: vec![a.len()],
            data: a.to_vec(),
        }
    }

    fn into_matrix(self, what: &str, rows: usize, cols: usize) -> Result<Array2<T>> {
        if self.shape != [rows, cols] {
            return Err(Error::Checkpoint(format!(
                "{what} has shape {:?}, expected [{rows}, {cols}]",
                self.shape
            )));
        }
        Array2::from_shape_vec((rows, cols), self.data)
            .map_err(|e| Error::Checkpoint(format!("{what}: {e}")))
    }

    fn into_vector(self, what: &str, len: usize) -> Result<Array1<T>> {
        if self.shape != [len] || self.data.len() != len {
            return Err(Error::Checkpoint(format!(
                "{what} has shape {:?}, expected [{len}]",
                self.shape
            )));
        }
        Ok(Array1::from(self.data))
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StructureDoc {
    mode: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    mask: Option<Tensor<bool>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct HiddenDoc {
    dim: usize,
    family: Family,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ArraysDoc {
    weights: Vec<Tensor<f64>>,
    visible_bias: Vec<Tensor<f64>>,
    hidden_bias: Tensor<f64>,
    switches: Tensor<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TrainerDoc {
    epochs_done: usize,
    velocity: ArraysDoc,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CheckpointDoc {
    format_version: u32,
    structure: StructureDoc,
    views: Vec<ViewConfig>,
    hidden: HiddenDoc,
    parameters: ArraysDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    trainer: Option<TrainerDoc>,
}

fn arrays_doc(
    weights: &[Array2<f64>],
    visible_bias: &[Array1<f64>],
    hidden_bias: &Array1<f64>,
    switches: &Array2<f64>,
) -> ArraysDoc {
    ArraysDoc {
        weights: weights.iter().map(Tensor::matrix).collect(),
        visible_bias: visible_bias.iter().map(Tensor::vector).collect(),
        hidden_bias: Tensor::vector(hidden_bias),
        switches: Tensor::matrix(switches),
    }
}

fn grad_from_doc(doc: ArraysDoc, views: &[ViewConfig], j: usize) -> Result<GradientSet> {
    let k = views.len();
    if doc.weights.len() != k || doc.visible_bias.len() != k {
        return Err(Error::Checkpoint(format!("expected arrays for {k} views")));
    }
    let weights = doc
        .weights
        .into_iter()
        .zip(views)
        .enumerate()
        .map(|(n, (t, v))| t.into_matrix(&format!("weights[{n}]"), v.dim, j))
        .collect::<Result<_>>()?;
    let visible_bias = doc
        .visible_bias
        .into_iter()
        .zip(views)
        .enumerate()
        .map(|(n, (t, v))| t.into_vector(&format!("visible_bias[{n}]"), v.dim))
        .collect::<Result<_>>()?;
    Ok(GradientSet {
        weights,
        visible_bias,
        hidden_bias: doc.hidden_bias.into_vector("hidden_bias", j)?,
        switches: doc.switches.into_matrix("switches", k, j)?,
    })
}

impl Checkpoint {
    pub fn new(params: HarmoniumParams) -> Self {
        Checkpoint {
            params,
            trainer: None,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        self.params.validate()?;
        let p = &self.params;
        let doc = CheckpointDoc {
            format_version: FORMAT_VERSION,
            structure: StructureDoc {
                mode: p.structure.name().to_string(),
                mask: match &p.structure {
                    StructureMode::Mvh { mask } => Some(Tensor::matrix(mask)),
                    _ => None,
                },
            },
            views: p.views.clone(),
            hidden: HiddenDoc {
                dim: p.hidden_dim,
                family: p.hidden_family,
            },
            parameters: arrays_doc(&p.weights, &p.visible_bias, &p.hidden_bias, &p.switches),
            trainer: self.trainer.as_ref().map(|t| TrainerDoc {
                epochs_done: t.epochs_done,
                velocity: arrays_doc(
                    &t.velocity.weights,
                    &t.velocity.visible_bias,
                    &t.velocity.hidden_bias,
                    &t.velocity.switches,
                ),
            }),
        };
        let mut text =
            serde_json::to_string_pretty(&doc).map_err(|e| Error::Checkpoint(e.to_string()))?;
        text.push('\n');
        Ok(text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: CheckpointDoc =
            serde_json::from_str(text).map_err(|e| Error::Checkpoint(e.to_string()))?;
        if doc.format_version != FORMAT_VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported format_version {}",
                doc.format_version
            )));
        }
        let k = doc.views.len();
        let j = doc.hidden.dim;
        let structure = match (doc.structure.mode.as_str(), doc.structure.mask) {
            ("dwh", None) => StructureMode::Dwh,
            ("sa", None) => StructureMode::Sa,
            ("mvh", Some(mask)) => StructureMode::Mvh {
                mask: mask.into_matrix("mask", k, j)?,
            },
            (mode, _) => {
                return Err(Error::Checkpoint(format!(
                    "bad structure mode {mode:?} or mask"
                )));
            }
        };
        let arrays = grad_from_doc(doc.parameters, &doc.views, j)?;
        let params = HarmoniumParams {
            views: doc.views,
            hidden_dim: j,
            hidden_family: doc.hidden.family,
            weights: arrays.weights,
            visible_bias: arrays.visible_bias,
            hidden_bias: arrays.hidden_bias,
            switches: arrays.switches,
            structure,
        };
        params.validate()?;
        let trainer = doc
            .trainer
            .map(|t| -> Result<TrainerState> {
                Ok(TrainerState {
                    epochs_done: t.epochs_done,
                    velocity: grad_from_doc(t.velocity, &params.views, j)?,
                })
            })
            .transpose()?;
        Ok(Checkpoint { params, trainer })
    }

    /// Writes through a temporary file in the same directory and renames it
    /// into place.
    pub fn save(&self, path: &Path) -> Result<()> {
        let text = self.to_json()?;
        let dir = path
            .parent()
            .filter(|d| !d.as_os_str().is_empty())
            .unwrap_or(Path::new("."));
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
        tmp.write_all(text.as_bytes())
            .and_then(|_| tmp.as_file().sync_all())
            .map_err(|e| Error::io(tmp.path(), e))?;
        tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}
