//! Feature extraction, the k-nearest-neighbor protocol, and filter images.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use ndarray::{Array2, ArrayView1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::MultiViewDataset;
use crate::error::{Error, Result};
use crate::model::{HarmoniumParams, UnitCategory};

/// Gate threshold used to classify units for selection and rendering.
pub const CONNECT_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Selection {
    All,
    Shared,
    Specific(usize),
}

impl std::str::FromStr for Selection {
    type Err = Error;

    /// `all`, `shared`, or `specific:<view>`.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(Selection::All),
            "shared" => Ok(Selection::Shared),
            _ => s
                .strip_prefix("specific:")
                .and_then(|k| k.parse().ok())
                .map(Selection::Specific)
                .ok_or_else(|| Error::Config(format!("unknown selection {s:?}"))),
        }
    }
}

impl std::fmt::Display for Selection {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Selection::All => f.write_str("all"),
            Selection::Shared => f.write_str("shared"),
            Selection::Specific(k) => write!(f, "specific:{k}"),
        }
    }
}

/// Rows are samples; `columns[c]` is the hidden unit behind column `c`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub values: Array2<f64>,
    pub columns: Vec<usize>,
}

impl FeatureMatrix {
    pub fn new(values: Array2<f64>) -> Self {
        let columns = (0..values.ncols()).collect();
        FeatureMatrix { values, columns }
    }

    pub fn rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for row in self.values.rows() {
            let cells: Vec<String> = row.iter().map(|x| format!("{x:.16e}")).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

pub fn selected_units(params: &HarmoniumParams, selection: Selection) -> Result<Vec<usize>> {
    let report = params.structure_report(CONNECT_THRESHOLD);
    let units = match selection {
        Selection::All => (0..params.hidden_dim).collect(),
        Selection::Shared => report.units(UnitCategory::Shared),
        Selection::Specific(k) => {
            if k >= params.num_views() {
                return Err(Error::Index(format!("view {k}")));
            }
            report.units(UnitCategory::Specific(k))
        }
    };
    if units.is_empty() {
        return Err(Error::EmptySelection(selection.to_string()));
    }
    Ok(units)
}

/// Posterior hidden means of every sample, restricted to `selection`.
pub fn extract_features(
    params: &HarmoniumParams,
    data: &MultiViewDataset,
    selection: Selection,
) -> Result<FeatureMatrix> {
    data.check_against(&params.views)?;
    let columns = selected_units(params, selection)?;
    let gated = params.gated();
    let rows: Vec<_> = data
        .samples
        .par_iter()
        .map(|s| gated.hidden_mean(&s.values))
        .collect();
    let values = Array2::from_shape_fn((rows.len(), columns.len()), |(n, c)| rows[n][columns[c]]);
    Ok(FeatureMatrix { values, columns })
}

fn check_knn_inputs(
    train: &FeatureMatrix,
    train_labels: &[i64],
    test: &FeatureMatrix,
    test_labels: &[i64],
    k: usize,
) -> Result<()> {
    if train.rows() == 0 {
        return Err(Error::Empty("training set"));
    }
    if test.rows() == 0 {
        return Err(Error::Empty("test set"));
    }
    if train.values.ncols() != test.values.ncols() {
        return Err(Error::Shape(format!(
            "train has {} feature columns, test has {}",
            train.values.ncols(),
            test.values.ncols()
        )));
    }
    if train_labels.len() != train.rows() || test_labels.len() != test.rows() {
        return Err(Error::Shape("label count does not match row count".into()));
    }
    if k == 0 || k > train.rows() {
        return Err(Error::Config(format!(
            "k = {k} must be in 1..={}",
            train.rows()
        )));
    }
    Ok(())
}

fn squared_distance(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Training indices of the `k` nearest rows to `query`, nearest first, ties
/// broken by lower index.
fn nearest(train: &FeatureMatrix, query: ArrayView1<f64>, k: usize) -> Vec<usize> {
    let mut dist: Vec<(f64, usize)> = train
        .values
        .rows()
        .into_iter()
        .enumerate()
        .map(|(i, r)| (squared_distance(r, query), i))
        .collect();
    let by_key = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if k < dist.len() {
        dist.select_nth_unstable_by(k - 1, by_key);
        dist.truncate(k);
    }
    dist.sort_unstable_by(by_key);
    dist.into_iter().map(|(_, i)| i).collect()
}

/// Majority label; vote ties go to the smallest label.
fn vote(neighbors: &[usize], labels: &[i64]) -> i64 {
    let mut counts: BTreeMap<i64, usize> = BTreeMap::new();
    for &n in neighbors {
        *counts.entry(labels[n]).or_default() += 1;
    }
    let best = counts.values().copied().max().unwrap_or(0);
    counts
        .into_iter()
        .find(|&(_, c)| c == best)
        .map_or(0, |(l, _)| l)
}

/// Fraction of test rows whose Euclidean k-NN majority vote matches.
pub fn knn_classify(
    train: &FeatureMatrix,
    train_labels: &[i64],
    test: &FeatureMatrix,
    test_labels: &[i64],
    k: usize,
) -> Result<f64> {
    Ok(knn_sweep(train, train_labels, test, test_labels, &[k])?.rows[0].1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct KnnTable {
    /// `(k, accuracy)` in the order first requested.
    pub rows: Vec<(usize, f64)>,
}

impl KnnTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,accuracy\n");
        for (k, acc) in &self.rows {
            let _ = writeln!(out, "{k},{acc:.6}");
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{:>6}  {:>8}\n", "k", "accuracy");
        for (k, acc) in &self.rows {
            let _ = writeln!(out, "{:>6}  {:>8.4}", format!("{k}-NN"), acc);
        }
        out
    }

    /// One header line of `k`-NN columns and one line for `method`.
    pub fn to_wide_text(&self, method: &str) -> String {
        let width = method.len().max(6);
        let mut head = format!("{:<width$}", "Method");
        let mut line = format!("{method:<width$}");
        for (k, acc) in &self.rows {
            let _ = write!(head, " | {:>7}", format!("{k}-NN"));
            let _ = write!(line, " | {acc:>7.3}");
        }
        format!("{head}\n{line}\n")
    }
}

/// Accuracy for every `k` in `ks`; repeated values are dropped with a
/// warning.
pub fn knn_sweep(
    train: &FeatureMatrix,
    train_labels: &[i64],
    test: &FeatureMatrix,
    test_labels: &[i64],
    ks: &[usize],
) -> Result<KnnTable> {
    let mut unique: Vec<usize> = Vec::with_capacity(ks.len());
    for &k in ks {
        if unique.contains(&k) {
            log::warn!("duplicate k = {k} ignored");
        } else {
            unique.push(k);
        }
    }
    if unique.is_empty() {
        return Err(Error::Empty("list of k values"));
    }
    for &k in &unique {
        check_knn_inputs(train, train_labels, test, test_labels, k)?;
    }
    let k_max = unique.iter().copied().max().unwrap_or(1);
    let neighbor_lists: Vec<Vec<usize>> = (0..test.rows())
        .into_par_iter()
        .map(|t| nearest(train, test.values.row(t), k_max))
        .collect();
    let rows = unique
        .iter()
        .map(|&k| {
            let correct = neighbor_lists
                .iter()
                .zip(test_labels)
                .filter(|(nb, &truth)| vote(&nb[..k], train_labels) == truth)
                .count();
            (k, correct as f64 / test.rows() as f64)
        })
        .collect();
    Ok(KnnTable { rows })
}

/// Where the filter images for one view went.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FilterExport {
    pub written: Vec<PathBuf>,
    /// Categories with no units, for which nothing was written.
    pub skipped: Vec<String>,
}

/// Grayscale image, row-major, 8 bits per pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

impl GrayImage {
    /// Binary PGM (`P5`, maxval 255).
    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.pixels);
        out
    }
}

/// Linear map of `values` onto 0..=255; constant input maps to 128.
pub fn rescale_filter(values: &[f64]) -> Vec<u8> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return vec![128; values.len()];
    }
    values
        .iter()
        .map(|&v| ((v - lo) / (hi - lo) * 255.0).round() as u8)
        .collect()
}

/// Tiles square filters of side `side` into rows of `grid_cols` with
/// 1-pixel black separators; unused cells stay black.
pub fn tile_filters(filters: &[Vec<u8>], side: usize, grid_cols: usize) -> GrayImage {
    let cols = grid_cols.min(filters.len()).max(1);
    let rows = filters.len().div_ceil(cols).max(1);
    let width = cols * side + (cols - 1);
    let height = rows * side + (rows - 1);
    let mut pixels = vec![0u8; width * height];
    for (n, f) in filters.iter().enumerate() {
        let top = (n / cols) * (side + 1);
        let left = (n % cols) * (side + 1);
        for r in 0..side {
            let start = (top + r) * width + left;
            pixels[start..start + side].copy_from_slice(&f[r * side..(r + 1) * side]);
        }
    }
    GrayImage {
        width,
        height,
        pixels,
    }
}

pub fn square_side(dim: usize) -> Result<usize> {
    let side = (dim as f64).sqrt().round() as usize;
    if side * side == dim {
        Ok(side)
    } else {
        Err(Error::NonSquare(dim))
    }
}

/// Writes `view{v}_shared.pgm`, `view{v}_specific.pgm` and
/// `view{v}_dead.pgm` into `out_dir`. Each tile is the gated incoming
/// weight column of one unit, reshaped to the image square and rescaled on
/// its own. "Specific" means specific to this view.
pub fn export_filter_images(
    params: &HarmoniumParams,
    view: usize,
    out_dir: &Path,
    grid_cols: usize,
) -> Result<FilterExport> {
    if view >= params.num_views() {
        return Err(Error::Index(format!("view {view}")));
    }
    if grid_cols == 0 {
        return Err(Error::Config("grid_cols must be positive".into()));
    }
    let side = square_side(params.views[view].dim)?;
    let report = params.structure_report(CONNECT_THRESHOLD);
    let effective = params.effective_weights(view);
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut export = FilterExport::default();
    let categories = [
        ("shared", UnitCategory::Shared),
        ("specific", UnitCategory::Specific(view)),
        ("dead", UnitCategory::Dead),
    ];
    for (name, category) in categories {
        let units = report.units(category);
        if units.is_empty() {
            log::info!("view {view}: no {name} units, image skipped");
            export.skipped.push(name.to_string());
            continue;
        }
        let filters: Vec<Vec<u8>> = units
            .iter()
            .map(|&j| rescale_filter(&effective.column(j).to_vec()))
            .collect();
        let image = tile_filters(&filters, side, grid_cols);
        let path = out_dir.join(format!("view{view}_{name}.pgm"));
        fs::write(&path, image.to_pgm()).map_err(|e| Error::io(&path, e))?;
        export.written.push(path);
    }
    Ok(export)
}
