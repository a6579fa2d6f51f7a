//! Structure-adapting multi-view harmoniums.
//!
//! A harmonium couples several views of visible nodes to one layer of
//! hidden nodes. In structure-adapting mode every (view, hidden unit) pair
//! carries a learnable switch whose sigmoid gates the weight column, so
//! training decides which units are shared across views, which are specific
//! to one view, and which are unused. The fixed-structure dual-wing (all
//! shared) and multi-view (fixed mask) harmoniums are available as
//! [`model::StructureMode`] variants.
//!
//! - [`expfam`]: node distributions.
//! - [`model`]: parameters, conditionals, Gibbs sampling, structure reports,
//!   and exact enumeration for tiny models.
//! - [`training`]: contrastive-divergence, exact, and finite-difference
//!   gradients and the momentum training loop.
//! - [`data`]: the synthetic paired-glyph generator and CSV interchange.
//! - [`eval`]: feature extraction, k-NN evaluation and filter images.
//! - [`checkpoint`], [`config`], [`cli`]: persistence and the command-line
//!   pipeline.
//!
//! Runnable walkthroughs live in the crate's `examples/` directory.

pub mod checkpoint;
pub mod cli;
pub mod config;
pub mod data;
pub mod error;
pub mod eval;
pub mod expfam;
pub mod model;
pub mod training;

#[cfg(test)]
mod oracle;

pub use checkpoint::Checkpoint;
pub use data::MultiViewDataset;
pub use error::{Error, Result};
pub use expfam::Family;
pub use model::{HarmoniumParams, MultiViewSample, StructureMode, SwitchReport, ViewConfig};
pub use training::{GradientSet, TrainConfig, TrainLog};
