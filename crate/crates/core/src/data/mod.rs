//! Multi-view datasets: the synthetic paired-glyph generator, CSV
//! interchange and stratified splitting.

pub mod glyphs;
mod io;
mod synth;

pub use io::{
    load_multiview_csv, load_multiview_csv_with, read_dataset_dir, save_multiview_csv,
    write_dataset_dir, LoadOptions, Manifest, ManifestView, MANIFEST_FILE,
};
pub use synth::{
    generate_synthetic_paired, generate_synthetic_paired_with_noise, glyph_support, NoiseRecord,
    SynthConfig,
};

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{validate_views, MultiViewSample, ViewConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct MultiViewDataset {
    pub views: Vec<ViewConfig>,
    pub samples: Vec<MultiViewSample>,
    pub labels_present: bool,
}

impl MultiViewDataset {
    /// Validates shapes and supports. Labels must be on every sample or on
    /// none.
    pub fn new(views: Vec<ViewConfig>, samples: Vec<MultiViewSample>) -> Result<Self> {
        validate_views(&views)?;
        let labeled = samples.iter().filter(|s| s.label.is_some()).count();
        if labeled != 0 && labeled != samples.len() {
            return Err(Error::Config(format!(
                "{labeled} of {} samples carry labels",
                samples.len()
            )));
        }
        let data = MultiViewDataset {
            labels_present: !samples.is_empty() && labeled == samples.len(),
            views,
            samples,
        };
        data.check_against(&data.views)?;
        Ok(data)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn labels(&self) -> Option<Vec<i64>> {
        if !self.labels_present {
            return None;
        }
        self.samples.iter().map(|s| s.label).collect()
    }

    pub fn subset(&self, indices: &[usize]) -> MultiViewDataset {
        MultiViewDataset {
            views: self.views.clone(),
            samples: indices.iter().map(|&i| self.samples[i].clone()).collect(),
            labels_present: self.labels_present && !indices.is_empty(),
        }
    }

    /// Checks every sample against `views` (lengths and family supports).
    pub fn check_against(&self, views: &[ViewConfig]) -> Result<()> {
        if views.len() != self.views.len()
            || views
                .iter()
                .zip(&self.views)
                .any(|(a, b)| a.dim != b.dim || a.family != b.family)
        {
            return Err(Error::Shape(
                "dataset views do not match model views".into(),
            ));
        }
        for (n, s) in self.samples.iter().enumerate() {
            if s.values.len() != views.len() {
                return Err(Error::Shape(format!(
                    "sample {n} has {} views",
                    s.values.len()
                )));
            }
            for (k, (v, cfg)) in s.values.iter().zip(views).enumerate() {
                if v.len() != cfg.dim {
                    return Err(Error::Shape(format!(
                        "sample {n}, view {k}: length {} != {}",
                        v.len(),
                        cfg.dim
                    )));
                }
                if let Some(&bad) = v.iter().find(|&&x| !cfg.family.in_support(x)) {
                    return Err(Error::Domain {
                        family: cfg.family.name(),
                        value: bad,
                    });
                }
            }
        }
        Ok(())
    }
}

/// Splits into `(train, test)`, stratified by label when labels are
/// present. Each stratum contributes `round(n * test_fraction)` samples to
/// the test side. Both sides keep the original sample order.
pub fn train_test_split(
    data: &MultiViewDataset,
    test_fraction: f64,
    seed: u64,
) -> Result<(MultiViewDataset, MultiViewDataset)> {
    if data.len() < 2 {
        return Err(Error::Config("splitting needs at least two samples".into()));
    }
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::Config(format!(
            "test fraction {test_fraction} not in (0, 1)"
        )));
    }
    let mut strata: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
    for (n, s) in data.samples.iter().enumerate() {
        let key = if data.labels_present {
            s.label.unwrap_or(0)
        } else {
            0
        };
        strata.entry(key).or_default().push(n);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut test = Vec::new();
    let mut train = Vec::new();
    for members in strata.values_mut() {
        members.shuffle(&mut rng);
        let n_test = (members.len() as f64 * test_fraction).round() as usize;
        test.extend_from_slice(&members[..n_test]);
        train.extend_from_slice(&members[n_test..]);
    }
    if test.is_empty() || train.is_empty() {
        return Err(Error::Config(format!(
            "test fraction {test_fraction} leaves an empty side ({} train, {} test)",
            train.len(),
            test.len()
        )));
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((data.subset(&train), data.subset(&test)))
}
