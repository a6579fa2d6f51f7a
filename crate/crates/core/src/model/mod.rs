//! Switch-gated multi-view harmonium.
//!
//! `K` views of visible nodes connect to a single layer of `J` hidden nodes.
//! The weight column joining view `k` to hidden unit `j` is scaled by a gate
//! `sigma(s_kj)`. The unnormalized log joint is
//!
//! ```text
//! sum_{k,i,j} sigma(s_kj) W[k]_ij f(v[k]_i) g(h_j) + sum_{k,i} xi[k]_i f(v[k]_i) + sum_j lambda_j g(h_j)
//! ```
//!
//! plus the log base measure of every node. Both bias terms enter with a
//! positive sign. This is the only sign choice under which the conditionals
//! have natural parameters `lambda_hat = lambda + sum sigma W f(v)` and
//! `xi_hat = xi + sum sigma W g(h)`, and under which the likelihood gradient
//! with respect to each bias is `<f>_data - <f>_model`. The finite-difference
//! checks in `training` pin this down.

pub mod exact;

use ndarray::{Array1, Array2, ArrayView1};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expfam::{sigmoid, Family};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ViewConfig {
    pub name: String,
    pub dim: usize,
    pub family: Family,
}

impl ViewConfig {
    pub fn new(name: impl Into<String>, dim: usize, family: Family) -> Self {
        ViewConfig {
            name: name.into(),
            dim,
            family,
        }
    }
}

pub(crate) fn validate_views(views: &[ViewConfig]) -> Result<()> {
    if views.is_empty() {
        return Err(Error::Empty("view list"));
    }
    for (k, v) in views.iter().enumerate() {
        if v.dim == 0 {
            return Err(Error::Config(format!(
                "view {k} ({}) has zero dimension",
                v.name
            )));
        }
        if views[..k].iter().any(|o| o.name == v.name) {
            return Err(Error::Config(format!("duplicate view name {:?}", v.name)));
        }
    }
    Ok(())
}

/// Structure mode without its mask, as named in configuration files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StructureKind {
    Dwh,
    Mvh,
    #[default]
    Sa,
}

/// Connectivity regime between hidden units and views.
#[derive(Debug, Clone, PartialEq)]
pub enum StructureMode {
    /// Dual-wing harmonium: every unit is connected to every view.
    Dwh,
    /// Multi-view harmonium with a fixed `K x J` connectivity mask.
    Mvh { mask: Array2<bool> },
    /// Structure-adapting: gates are learned through the switch logits.
    Sa,
}

impl StructureMode {
    pub fn name(&self) -> &'static str {
        match self {
            StructureMode::Dwh => "dwh",
            StructureMode::Mvh { .. } => "mvh",
            StructureMode::Sa => "sa",
        }
    }

    pub fn kind(&self) -> StructureKind {
        match self {
            StructureMode::Dwh => StructureKind::Dwh,
            StructureMode::Mvh { .. } => StructureKind::Mvh,
            StructureMode::Sa => StructureKind::Sa,
        }
    }

    pub fn learns_switches(&self) -> bool {
        matches!(self, StructureMode::Sa)
    }

    /// MVH mask with the first `shared` units connected to all views and the
    /// rest split as evenly as possible into blocks specific to each view.
    pub fn mvh_blocks(num_views: usize, hidden_dim: usize, shared: usize) -> Result<Self> {
        if shared > hidden_dim {
            return Err(Error::Config(format!(
                "mvh shared count {shared} exceeds hidden_dim {hidden_dim}"
            )));
        }
        let mut mask = Array2::from_elem((num_views, hidden_dim), false);
        for j in 0..shared {
            mask.column_mut(j).fill(true);
        }
        let rest = hidden_dim - shared;
        for offset in 0..rest {
            let k = offset * num_views / rest.max(1);
            mask[[k, shared + offset]] = true;
        }
        Ok(StructureMode::Mvh { mask })
    }
}

/// All learnable parameters of a harmonium plus its fixed configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct HarmoniumParams {
    pub views: Vec<ViewConfig>,
    pub hidden_dim: usize,
    pub hidden_family: Family,
    /// One `D_k x J` matrix per view.
    pub weights: Vec<Array2<f64>>,
    pub visible_bias: Vec<Array1<f64>>,
    pub hidden_bias: Array1<f64>,
    /// Switch logits, `K x J`.
    pub switches: Array2<f64>,
    pub structure: StructureMode,
}

/// Addresses one scalar parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamRef {
    Weight { view: usize, i: usize, j: usize },
    VisibleBias { view: usize, i: usize },
    HiddenBias { j: usize },
    Switch { view: usize, j: usize },
}

impl ParamRef {
    pub fn group(&self) -> &'static str {
        match self {
            ParamRef::Weight { .. } => "W",
            ParamRef::VisibleBias { .. } => "xi",
            ParamRef::HiddenBias { .. } => "lambda",
            ParamRef::Switch { .. } => "s",
        }
    }
}

impl std::fmt::Display for ParamRef {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match *self {
            ParamRef::Weight { view, i, j } => write!(f, "W[{view}][{i},{j}]"),
            ParamRef::VisibleBias { view, i } => write!(f, "xi[{view}][{i}]"),
            ParamRef::HiddenBias { j } => write!(f, "lambda[{j}]"),
            ParamRef::Switch { view, j } => write!(f, "s[{view},{j}]"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiViewSample {
    pub values: Vec<Array1<f64>>,
    pub label: Option<i64>,
}

impl MultiViewSample {
    pub fn new(values: Vec<Array1<f64>>) -> Self {
        MultiViewSample {
            values,
            label: None,
        }
    }

    pub fn with_label(mut self, label: i64) -> Self {
        self.label = Some(label);
        self
    }
}

impl HarmoniumParams {
    /// All weights, biases and switch logits at zero.
    pub fn zeros(
        views: Vec<ViewConfig>,
        hidden_dim: usize,
        hidden_family: Family,
        structure: StructureMode,
    ) -> Result<Self> {
        validate_views(&views)?;
        if hidden_dim == 0 {
            return Err(Error::Config("hidden_dim must be positive".into()));
        }
        let k = views.len();
        let params = HarmoniumParams {
            weights: views
                .iter()
                .map(|v| Array2::zeros((v.dim, hidden_dim)))
                .collect(),
            visible_bias: views.iter().map(|v| Array1::zeros(v.dim)).collect(),
            hidden_bias: Array1::zeros(hidden_dim),
            switches: Array2::zeros((k, hidden_dim)),
            views,
            hidden_dim,
            hidden_family,
            structure,
        };
        params.validate()?;
        Ok(params)
    }

    /// Zero biases and switch logits, weights drawn from `N(0, scale^2)`.
    pub fn init_random<R: Rng + ?Sized>(
        views: Vec<ViewConfig>,
        hidden_dim: usize,
        hidden_family: Family,
        structure: StructureMode,
        scale: f64,
        rng: &mut R,
    ) -> Result<Self> {
        let mut params = Self::zeros(views, hidden_dim, hidden_family, structure)?;
        let normal = Normal::new(0.0, scale)
            .map_err(|e| Error::Config(format!("weight init scale {scale}: {e}")))?;
        for w in &mut params.weights {
            w.mapv_inplace(|_| normal.sample(rng));
        }
        Ok(params)
    }

    pub fn num_views(&self) -> usize {
        self.views.len()
    }

    pub fn validate(&self) -> Result<()> {
        validate_views(&self.views)?;
        let k = self.views.len();
        let j = self.hidden_dim;
        if self.weights.len() != k || self.visible_bias.len() != k {
            return Err(Error::Shape(format!("expected parameters for {k} views")));
        }
        for (idx, view) in self.views.iter().enumerate() {
            if self.weights[idx].dim() != (view.dim, j) {
                return Err(Error::Shape(format!(
                    "W[{idx}] is {:?}, expected ({}, {j})",
                    self.weights[idx].dim(),
                    view.dim
                )));
            }
            if self.visible_bias[idx].len() != view.dim {
                return Err(Error::Shape(format!("xi[{idx}] has wrong length")));
            }
        }
        if self.hidden_bias.len() != j {
            return Err(Error::Shape("lambda has wrong length".into()));
        }
        if self.switches.dim() != (k, j) {
            return Err(Error::Shape("switch logits must be K x J".into()));
        }
        if let StructureMode::Mvh { mask } = &self.structure {
            if mask.dim() != (k, j) {
                return Err(Error::Shape("MVH mask must be K x J".into()));
            }
        }
        if let Some(group) = self.first_non_finite_group() {
            return Err(Error::NonFinite(group.into()));
        }
        Ok(())
    }

    pub(crate) fn first_non_finite_group(&self) -> Option<&'static str> {
        let finite = |mut it: Box<dyn Iterator<Item = &f64> + '_>| it.all(|x| x.is_finite());
        if !self.weights.iter().all(|w| finite(Box::new(w.iter()))) {
            return Some("W");
        }
        if !self.visible_bias.iter().all(|b| finite(Box::new(b.iter()))) {
            return Some("xi");
        }
        if !finite(Box::new(self.hidden_bias.iter())) {
            return Some("lambda");
        }
        if !finite(Box::new(self.switches.iter())) {
            return Some("s");
        }
        None
    }

    pub fn gate(&self, k: usize, j: usize) -> Result<f64> {
        if k >= self.num_views() || j >= self.hidden_dim {
            return Err(Error::Index(format!(
                "gate ({k}, {j}) with K={}, J={}",
                self.num_views(),
                self.hidden_dim
            )));
        }
        Ok(self.gate_unchecked(k, j))
    }

    fn gate_unchecked(&self, k: usize, j: usize) -> f64 {
        match &self.structure {
            StructureMode::Dwh => 1.0,
            StructureMode::Mvh { mask } => {
                if mask[[k, j]] {
                    1.0
                } else {
                    0.0
                }
            }
            StructureMode::Sa => sigmoid(self.switches[[k, j]]),
        }
    }

    /// All gates as a `K x J` matrix.
    pub fn gates(&self) -> Array2<f64> {
        Array2::from_shape_fn((self.num_views(), self.hidden_dim), |(k, j)| {
            self.gate_unchecked(k, j)
        })
    }

    /// d gate / d s. Zero for frozen structures.
    pub fn gate_derivatives(&self) -> Array2<f64> {
        match self.structure {
            StructureMode::Sa => self.gates().mapv(|g| g * (1.0 - g)),
            _ => Array2::zeros((self.num_views(), self.hidden_dim)),
        }
    }

    /// `W[k]` with column `j` scaled by `gate(k, j)`.
    pub fn effective_weights(&self, k: usize) -> Array2<f64> {
        let gates = self.gates();
        &self.weights[k] * &gates.row(k)
    }

    pub(crate) fn gated(&self) -> Gated<'_> {
        Gated {
            params: self,
            effective: (0..self.num_views())
                .map(|k| self.effective_weights(k))
                .collect(),
        }
    }

    pub fn check_sample(&self, sample: &MultiViewSample) -> Result<()> {
        if sample.values.len() != self.num_views() {
            return Err(Error::Shape(format!(
                "sample has {} views, model has {}",
                sample.values.len(),
                self.num_views()
            )));
        }
        for (k, (v, cfg)) in sample.values.iter().zip(&self.views).enumerate() {
            if v.len() != cfg.dim {
                return Err(Error::Shape(format!(
                    "view {k} has length {}, expected {}",
                    v.len(),
                    cfg.dim
                )));
            }
        }
        Ok(())
    }

    fn check_hidden(&self, h: &Array1<f64>) -> Result<()> {
        if h.len() != self.hidden_dim {
            return Err(Error::Shape(format!(
                "hidden vector has length {}, expected {}",
                h.len(),
                self.hidden_dim
            )));
        }
        Ok(())
    }

    /// `lambda_hat_j = lambda_j + sum_{k,i} gate(k,j) W[k]_ij f(v[k]_i)`.
    pub fn hidden_shifted_params(&self, sample: &MultiViewSample) -> Result<Array1<f64>> {
        self.check_sample(sample)?;
        Ok(self.gated().hidden_eta(&sample.values))
    }

    /// `xi_hat[k]_i = xi[k]_i + sum_j gate(k,j) W[k]_ij g(h_j)`.
    pub fn visible_shifted_params(&self, h: &Array1<f64>, k: usize) -> Result<Array1<f64>> {
        self.check_hidden(h)?;
        if k >= self.num_views() {
            return Err(Error::Index(format!("view {k}")));
        }
        Ok(&self.visible_bias[k] + &self.effective_weights(k).dot(h))
    }

    /// Conditional mean of each hidden statistic given the visibles; this is
    /// the feature vector used downstream.
    pub fn posterior_hidden_mean(&self, sample: &MultiViewSample) -> Result<Array1<f64>> {
        self.check_sample(sample)?;
        Ok(self.gated().hidden_mean(&sample.values))
    }

    pub fn unnormalized_log_joint(&self, sample: &MultiViewSample, h: &Array1<f64>) -> Result<f64> {
        self.check_sample(sample)?;
        self.check_hidden(h)?;
        let gated = self.gated();
        let mut total = self.hidden_bias.dot(h)
            + h.iter()
                .map(|&x| self.hidden_family.log_base_measure(x))
                .sum::<f64>();
        for (k, v) in sample.values.iter().enumerate() {
            total += v.dot(&gated.effective[k].dot(h));
            total += self.visible_bias[k].dot(v);
            let fam = self.views[k].family;
            total += v.iter().map(|&x| fam.log_base_measure(x)).sum::<f64>();
        }
        Ok(total)
    }

    /// One block Gibbs sweep: `h ~ p(h | v)` then `v' ~ p(v | h)`.
    pub fn gibbs_step<R: Rng + ?Sized>(
        &self,
        sample: &MultiViewSample,
        rng: &mut R,
    ) -> Result<(Array1<f64>, MultiViewSample)> {
        self.check_sample(sample)?;
        let gated = self.gated();
        let h = gated.sample_hidden(&sample.values, rng);
        let v = gated.sample_visible(&h, rng);
        Ok((h, MultiViewSample::new(v)))
    }

    /// Every scalar parameter, switch logits included.
    pub fn param_refs(&self) -> Vec<ParamRef> {
        let mut refs = Vec::new();
        for (view, cfg) in self.views.iter().enumerate() {
            for i in 0..cfg.dim {
                for j in 0..self.hidden_dim {
                    refs.push(ParamRef::Weight { view, i, j });
                }
            }
        }
        for (view, cfg) in self.views.iter().enumerate() {
            for i in 0..cfg.dim {
                refs.push(ParamRef::VisibleBias { view, i });
            }
        }
        for j in 0..self.hidden_dim {
            refs.push(ParamRef::HiddenBias { j });
        }
        for view in 0..self.num_views() {
            for j in 0..self.hidden_dim {
                refs.push(ParamRef::Switch { view, j });
            }
        }
        refs
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

    /// Classifies hidden units by which views their gates exceed `threshold`.
    pub fn structure_report(&self, threshold: f64) -> SwitchReport {
        let gates = self.gates();
        let connected = gates.mapv(|g| g > threshold);
        let k = self.num_views();
        let mut categories = Vec::with_capacity(self.hidden_dim);
        let mut shared = 0;
        let mut dead = 0;
        let mut specific = vec![0; k];
        for j in 0..self.hidden_dim {
            let links: Vec<usize> = (0..k).filter(|&v| connected[[v, j]]).collect();
            let cat = match links.as_slice() {
                [] => {
                    dead += 1;
                    UnitCategory::Dead
                }
                [only] => {
                    specific[*only] += 1;
                    UnitCategory::Specific(*only)
                }
                _ => {
                    shared += 1;
                    UnitCategory::Shared
                }
            };
            categories.push(cat);
        }
        let connected_per_view = (0..k)
            .map(|v| connected.row(v).iter().filter(|&&c| c).count())
            .collect();
        SwitchReport {
            threshold,
            connected,
            categories,
            shared,
            specific,
            dead,
            connected_per_view,
        }
    }
}

/// Parameters with the gates folded into the weights, for repeated
/// conditional evaluations against a fixed parameter set.
pub(crate) struct Gated<'a> {
    pub params: &'a HarmoniumParams,
    pub effective: Vec<Array2<f64>>,
}

impl Gated<'_> {
    pub fn hidden_eta(&self, values: &[Array1<f64>]) -> Array1<f64> {
        let mut eta = self.params.hidden_bias.clone();
        for (w, v) in self.effective.iter().zip(values) {
            eta += &w.t().dot(v);
        }
        eta
    }

    pub fn hidden_mean(&self, values: &[Array1<f64>]) -> Array1<f64> {
        let fam = self.params.hidden_family;
        self.hidden_eta(values).mapv_into(|e| fam.mean(e))
    }

    pub fn visible_eta(&self, k: usize, h: ArrayView1<f64>) -> Array1<f64> {
        &self.params.visible_bias[k] + &self.effective[k].dot(&h)
    }

    pub fn visible_mean(&self, k: usize, h: ArrayView1<f64>) -> Array1<f64> {
        let fam = self.params.views[k].family;
        self.visible_eta(k, h).mapv_into(|e| fam.mean(e))
    }

    pub fn sample_hidden<R: Rng + ?Sized>(
        &self,
        values: &[Array1<f64>],
        rng: &mut R,
    ) -> Array1<f64> {
        let fam = self.params.hidden_family;
        self.hidden_eta(values).mapv_into(|e| fam.sample(e, rng))
    }

    pub fn sample_visible<R: Rng + ?Sized>(
        &self,
        h: &Array1<f64>,
        rng: &mut R,
    ) -> Vec<Array1<f64>> {
        (0..self.effective.len())
            .map(|k| {
                let fam = self.params.views[k].family;
                self.visible_eta(k, h.view())
                    .mapv_into(|e| fam.sample(e, rng))
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnitCategory {
    Shared,
    Specific(usize),
    Dead,
}

/// Per-unit connectivity over views at a given gate threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct SwitchReport {
    pub threshold: f64,
    /// `K x J`; `gate(k, j) > threshold`.
    pub connected: Array2<bool>,
    pub categories: Vec<UnitCategory>,
    pub shared: usize,
    /// Count of units specific to each view.
    pub specific: Vec<usize>,
    pub dead: usize,
    /// Number of units connected to each view, shared ones included.
    pub connected_per_view: Vec<usize>,
}

impl SwitchReport {
    pub fn units(&self, category: UnitCategory) -> Vec<usize> {
        self.categories
            .iter()
            .enumerate()
            .filter(|(_, c)| **c == category)
            .map(|(j, _)| j)
            .collect()
    }

    /// `shared=.. specific_view0=.. ... dead=..`
    pub fn summary_line(&self) -> String {
        let mut line = format!("shared={}", self.shared);
        for (k, n) in self.specific.iter().enumerate() {
            line.push_str(&format!(" specific_view{k}={n}"));
        }
        line.push_str(&format!(" dead={}", self.dead));
        line
    }
}

#[cfg(test)]
mod tests;
