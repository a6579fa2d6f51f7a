use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use ndarray::Array1;
use serde::{Deserialize, Serialize};

use super::MultiViewDataset;
use crate::error::{Error, Result};
use crate::expfam::Family;
use crate::model::{MultiViewSample, ViewConfig};

pub const MANIFEST_FILE: &str = "manifest.toml";
const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct LoadOptions {
    /// Family per view; all `GaussianUnitVariance` when unset.
    pub families: Option<Vec<Family>>,
    pub names: Option<Vec<String>>,
    /// Standardize the columns of Gaussian views.
    pub standardize: bool,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions {
            families: None,
            names: None,
            standardize: true,
        }
    }
}

fn parse_err(file: &Path, line: u64, column: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        file: file.to_path_buf(),
        line,
        column,
        message: message.into(),
    }
}

fn read_matrix(path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => parse_err(path, 0, 0, format!("{other:?}")),
        })?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width = None;
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(path, line, 0, e.to_string())
        })?;
        let line = record
            .position()
            .map_or(rows.len() as u64 + 1, |p| p.line());
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        let expected = *width.get_or_insert(record.len());
        if record.len() != expected {
            return Err(parse_err(
                path,
                line,
                record.len().min(expected) + 1,
                format!("ragged row: {} fields, expected {expected}", record.len()),
            ));
        }
        let row = record
            .iter()
            .enumerate()
            .map(|(c, cell)| match cell.parse::<f64>() {
                Ok(x) if x.is_finite() => Ok(x),
                _ => Err(parse_err(
                    path,
                    line,
                    c + 1,
                    format!("not a finite number: {cell:?}"),
                )),
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

fn read_labels(path: &Path) -> Result<Vec<i64>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, l)| {
            l.trim().parse::<i64>().map_err(|_| {
                parse_err(
                    path,
                    n as u64 + 1,
                    1,
                    format!("not an integer label: {l:?}"),
                )
            })
        })
        .collect()
}

/// Zero mean, unit (population) variance per column; constant columns
/// become all zeros.
fn standardize(rows: &mut [Vec<f64>]) {
    let n = rows.len() as f64;
    let width = rows.first().map_or(0, Vec::len);
    for c in 0..width {
        let mean = rows.iter().map(|r| r[c]).sum::<f64>() / n;
        let var = rows.iter().map(|r| (r[c] - mean).powi(2)).sum::<f64>() / n;
        let sd = var.sqrt();
        for r in rows.iter_mut() {
            r[c] = if sd > 0.0 { (r[c] - mean) / sd } else { 0.0 };
        }
    }
}

/// Loads one numeric CSV matrix per view (no header, one row per sample)
/// as standardized Gaussian views.
pub fn load_multiview_csv<P: AsRef<Path>>(
    paths: &[P],
    label_path: Option<&Path>,
) -> Result<MultiViewDataset> {
    load_multiview_csv_with(paths, label_path, &LoadOptions::default())
}

pub fn load_multiview_csv_with<P: AsRef<Path>>(
    paths: &[P],
    label_path: Option<&Path>,
    options: &LoadOptions,
) -> Result<MultiViewDataset> {
    if paths.is_empty() {
        return Err(Error::Empty("view file list"));
    }
    if let Some(f) = &options.families {
        if f.len() != paths.len() {
            return Err(Error::Config(format!(
                "{} families for {} views",
                f.len(),
                paths.len()
            )));
        }
    }
    let mut matrices = Vec::with_capacity(paths.len());
    for p in paths {
        matrices.push(read_matrix(p.as_ref())?);
    }
    let n = matrices[0].len();
    if n == 0 {
        return Err(Error::Empty("view file"));
    }
    for (p, m) in paths.iter().zip(&matrices).skip(1) {
        if m.len() != n {
            return Err(parse_err(
                p.as_ref(),
                m.len().min(n) as u64 + 1,
                1,
                format!(
                    "{} rows, but {} has {n}",
                    m.len(),
                    paths[0].as_ref().display()
                ),
            ));
        }
    }
    let mut views = Vec::with_capacity(paths.len());
    for (k, (p, m)) in paths.iter().zip(matrices.iter_mut()).enumerate() {
        let family = options
            .families
            .as_ref()
            .map_or(Family::GaussianUnitVariance, |f| f[k]);
        if family == Family::GaussianUnitVariance && options.standardize {
            standardize(m);
        }
        let name = options
            .names
            .as_ref()
            .and_then(|names| names.get(k).cloned())
            .unwrap_or_else(|| {
                p.as_ref()
                    .file_stem()
                    .map_or_else(|| format!("view{k}"), |s| s.to_string_lossy().into_owned())
            });
        views.push(ViewConfig::new(name, m[0].len(), family));
    }
    let labels = match label_path {
        Some(lp) => {
            let labels = read_labels(lp)?;
            if labels.len() != n {
                return Err(parse_err(
                    lp,
                    labels.len().min(n) as u64 + 1,
                    1,
                    format!("{} labels for {n} samples", labels.len()),
                ));
            }
            Some(labels)
        }
        None => None,
    };
    let samples = (0..n)
        .map(|row| {
            let values = matrices
                .iter()
                .map(|m| Array1::from(m[row].clone()))
                .collect();
            MultiViewSample {
                values,
                label: labels.as_ref().map(|l| l[row]),
            }
        })
        .collect();
    MultiViewDataset::new(views, samples)
}

fn format_value(x: f64) -> String {
    if x.fract() == 0.0 && x.abs() < 1e15 {
        format!("{}", x as i64)
    } else {
        format!("{x:.16e}")
    }
}

fn write_file(
    path: &Path,
    body: impl FnOnce(&mut BufWriter<fs::File>) -> std::io::Result<()>,
) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    body(&mut w)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

/// Writes view `k` to `paths[k]` at full precision (17 significant digits;
/// integral values are written as integers) and labels one per line.
pub fn save_multiview_csv<P: AsRef<Path>>(
    data: &MultiViewDataset,
    paths: &[P],
    label_path: Option<&Path>,
) -> Result<()> {
    if paths.len() != data.views.len() {
        return Err(Error::Config(format!(
            "{} paths for {} views",
            paths.len(),
            data.views.len()
        )));
    }
    for (k, p) in paths.iter().enumerate() {
        write_file(p.as_ref(), |w| {
            for s in &data.samples {
                let line: Vec<String> = s.values[k].iter().map(|&x| format_value(x)).collect();
                writeln!(w, "{}", line.join(","))?;
            }
            Ok(())
        })?;
    }
    if let Some(lp) = label_path {
        write_file(lp, |w| {
            for s in &data.samples {
                if let Some(l) = s.label {
                    writeln!(w, "{l}")?;
                }
            }
            Ok(())
        })?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestView {
    pub name: String,
    pub dim: usize,
    pub family: Family,
    pub file: String,
}

/// Describes a dataset directory written by [`write_dataset_dir`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub format_version: u32,
    pub num_samples: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub labels: Option<String>,
    pub views: Vec<ManifestView>,
}

/// Writes `view{k}.csv`, `labels.csv` (when labeled) and the manifest into
/// `dir`. Returns the paths written.
pub fn write_dataset_dir(
    data: &MultiViewDataset,
    dir: &Path,
    seed: Option<u64>,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let files: Vec<String> = (0..data.views.len())
        .map(|k| format!("view{k}.csv"))
        .collect();
    let paths: Vec<PathBuf> = files.iter().map(|f| dir.join(f)).collect();
    let labels = data.labels_present.then(|| "labels.csv".to_string());
    let label_path = labels.as_ref().map(|l| dir.join(l));
    save_multiview_csv(data, &paths, label_path.as_deref())?;
    let manifest = Manifest {
        format_version: MANIFEST_VERSION,
        num_samples: data.len(),
        seed,
        labels,
        views: data
            .views
            .iter()
            .zip(files)
            .map(|(v, file)| ManifestView {
                name: v.name.clone(),
                dim: v.dim,
                family: v.family,
                file,
            })
            .collect(),
    };
    let text = toml::to_string(&manifest).map_err(|e| Error::Config(e.to_string()))?;
    let manifest_path = dir.join(MANIFEST_FILE);
    fs::write(&manifest_path, text).map_err(|e| Error::io(&manifest_path, e))?;
    let mut written = paths;
    written.extend(label_path);
    written.push(manifest_path);
    Ok(written)
}

/// Loads a directory described by a manifest, values taken as stored.
pub fn read_dataset_dir(dir: &Path) -> Result<MultiViewDataset> {
    let manifest_path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
    let manifest: Manifest = toml::from_str(&text).map_err(|e| Error::Parse {
        file: manifest_path.clone(),
        line: 0,
        column: 0,
        message: e.to_string(),
    })?;
    if manifest.format_version != MANIFEST_VERSION {
        return Err(Error::Config(format!(
            "unsupported manifest version {}",
            manifest.format_version
        )));
    }
    let paths: Vec<PathBuf> = manifest.views.iter().map(|v| dir.join(&v.file)).collect();
    let options = LoadOptions {
        families: Some(manifest.views.iter().map(|v| v.family).collect()),
        names: Some(manifest.views.iter().map(|v| v.name.clone()).collect()),
        standardize: false,
    };
    let label_path = manifest.labels.as_ref().map(|l| dir.join(l));
    let data = load_multiview_csv_with(&paths, label_path.as_deref(), &options)?;
    for (v, m) in data.views.iter().zip(&manifest.views) {
        if v.dim != m.dim {
            return Err(Error::Shape(format!(
                "{} has {} columns, manifest says {}",
                m.file, v.dim, m.dim
            )));
        }
    }
    if data.len() != manifest.num_samples {
        return Err(Error::Shape(format!(
            "{} samples on disk, manifest says {}",
            data.len(),
            manifest.num_samples
        )));
    }
    Ok(data)
}
