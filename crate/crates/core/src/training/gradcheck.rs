//! Exact-versus-finite-difference gradient verification on random tiny
//! models.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{exact_gradient, finite_diff_gradient, GradientSet};
use crate::error::Result;
use crate::expfam::Family;
use crate::model::{
    HarmoniumParams, MultiViewSample, ParamRef, StructureKind, StructureMode, ViewConfig,
};

/// All-Bernoulli model with `N(0, 1)` weights, `N(0, 0.5^2)` biases and
/// `N(0, 2^2)` switch logits. MVH masks are drawn uniformly.
pub fn random_tiny_model<R: Rng + ?Sized>(
    dims: &[usize],
    hidden_dim: usize,
    kind: StructureKind,
    rng: &mut R,
) -> Result<HarmoniumParams> {
    let views = dims
        .iter()
        .enumerate()
        .map(|(k, &d)| ViewConfig::new(format!("view{k}"), d, Family::Bernoulli))
        .collect();
    let structure = match kind {
        StructureKind::Dwh => StructureMode::Dwh,
        StructureKind::Sa => StructureMode::Sa,
        StructureKind::Mvh => StructureMode::Mvh {
            mask: ndarray::Array2::from_shape_fn((dims.len(), hidden_dim), |_| {
                rng.random_bool(0.5)
            }),
        },
    };
    let mut p = HarmoniumParams::zeros(views, hidden_dim, Family::Bernoulli, structure)?;
    let unit = Normal::new(0.0, 1.0).expect("valid normal");
    let half = Normal::new(0.0, 0.5).expect("valid normal");
    let wide = Normal::new(0.0, 2.0).expect("valid normal");
    for w in &mut p.weights {
        w.mapv_inplace(|_| unit.sample(rng));
    }
    for b in &mut p.visible_bias {
        b.mapv_inplace(|_| half.sample(rng));
    }
    p.hidden_bias.mapv_inplace(|_| half.sample(rng));
    p.switches.mapv_inplace(|_| wide.sample(rng));
    Ok(p)
}

/// Independent fair-coin visible vectors.
pub fn random_binary_data<R: Rng + ?Sized>(
    params: &HarmoniumParams,
    n: usize,
    rng: &mut R,
) -> Vec<MultiViewSample> {
    (0..n)
        .map(|_| {
            MultiViewSample::new(
                params
                    .views
                    .iter()
                    .map(|v| {
                        ndarray::Array1::from_shape_fn(v.dim, |_| {
                            f64::from(u8::from(rng.random_bool(0.5)))
                        })
                    })
                    .collect(),
            )
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mismatch {
    pub model: usize,
    pub param: ParamRef,
    pub exact: f64,
    pub finite_diff: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupSummary {
    pub group: &'static str,
    /// Largest `|a - b| / max(|a|, |b|)` among entries outside the absolute
    /// tolerance; zero if there are none.
    pub max_rel_err: f64,
    pub max_abs_err: f64,
    pub skipped: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub groups: Vec<GroupSummary>,
    pub failures: Vec<Mismatch>,
    pub worst: Option<Mismatch>,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

pub fn entries_agree(a: f64, b: f64, rel_tol: f64, abs_tol: f64) -> bool {
    let diff = (a - b).abs();
    diff <= abs_tol || diff <= rel_tol * a.abs().max(b.abs())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GradCheckConfig {
    pub models: usize,
    pub dims: Vec<usize>,
    pub hidden: usize,
    pub samples: usize,
    pub step: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub structure: StructureKind,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        GradCheckConfig {
            models: 20,
            dims: vec![3, 3],
            hidden: 4,
            samples: 10,
            step: 1e-5,
            rel_tol: 1e-5,
            abs_tol: 1e-8,
            structure: StructureKind::Sa,
        }
    }
}

/// Compares exact and finite-difference gradients over `config.models`
/// random models. `corrupt` negates the exact visible-bias gradient, which
/// must make the check fail.
pub fn run_grad_check(
    config: &GradCheckConfig,
    seed: u64,
    corrupt: bool,
) -> Result<GradCheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let groups = ["W", "xi", "lambda", "s"];
    let skip_s = config.structure != StructureKind::Sa;
    let mut summaries: Vec<GroupSummary> = groups
        .iter()
        .map(|&g| GroupSummary {
            group: g,
            max_rel_err: 0.0,
            max_abs_err: 0.0,
            skipped: g == "s" && skip_s,
        })
        .collect();
    let mut failures = Vec::new();
    let mut worst: Option<(f64, Mismatch)> = None;
    for model in 0..config.models {
        let params = random_tiny_model(&config.dims, config.hidden, config.structure, &mut rng)?;
        let data = random_binary_data(&params, config.samples, &mut rng);
        let mut exact = exact_gradient(&params, &data)?;
        if corrupt {
            for b in &mut exact.visible_bias {
                b.mapv_inplace(|x| -x);
            }
        }
        let fd = finite_diff_gradient(&params, &data, config.step)?;
        for r in params.param_refs() {
            let slot = groups
                .iter()
                .position(|g| *g == r.group())
                .expect("known group");
            if summaries[slot].skipped {
                continue;
            }
            let (a, b) = (exact.get(r), fd.get(r));
            let diff = (a - b).abs();
            let rel = if diff <= config.abs_tol {
                0.0
            } else {
                diff / a.abs().max(b.abs())
            };
            let s = &mut summaries[slot];
            s.max_abs_err = s.max_abs_err.max(diff);
            s.max_rel_err = s.max_rel_err.max(rel);
            let m = Mismatch {
                model,
                param: r,
                exact: a,
                finite_diff: b,
            };
            if !entries_agree(a, b, config.rel_tol, config.abs_tol) {
                failures.push(m.clone());
            }
            if worst.as_ref().is_none_or(|(w, _)| rel > *w) {
                worst = Some((rel, m));
            }
        }
    }
    Ok(GradCheckReport {
        groups: summaries,
        failures,
        worst: worst.map(|(_, m)| m),
    })
}

/// Largest per-entry disagreement between two gradient sets, as
/// `(max_abs_diff, max_rel_diff)`.
pub fn max_disagreement(params: &HarmoniumParams, a: &GradientSet, b: &GradientSet) -> (f64, f64) {
    params
        .param_refs()
        .into_iter()
        .fold((0.0, 0.0), |(ma, mr), r| {
            let (x, y) = (a.get(r), b.get(r));
            let d = (x - y).abs();
            let scale = x.abs().max(y.abs());
            (ma.max(d), if scale > 0.0 { mr.max(d / scale) } else { mr })
        })
}
