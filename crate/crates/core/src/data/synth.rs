use ndarray::Array1;
use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::glyphs::{self, Glyph, NUM_GLYPHS};
use super::MultiViewDataset;
use crate::error::{Error, Result};
use crate::expfam::Family;
use crate::model::{MultiViewSample, ViewConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub num_classes: usize,
    pub image_side: usize,
    pub samples_per_class: usize,
    pub noise_lines_per_image: usize,
    /// Maximum translation in pixels, applied independently per view and axis.
    pub jitter: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            num_classes: 10,
            image_side: 12,
            samples_per_class: 200,
            noise_lines_per_image: 2,
            jitter: 1,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if !(2..=NUM_GLYPHS).contains(&self.num_classes) {
            return Err(Error::Config(format!(
                "num_classes must be in 2..={NUM_GLYPHS}, got {}",
                self.num_classes
            )));
        }
        if self.samples_per_class == 0 {
            return Err(Error::Config("samples_per_class must be positive".into()));
        }
        if self.noise_lines_per_image > self.image_side {
            return Err(Error::Config(format!(
                "{} noise lines do not fit in {} columns",
                self.noise_lines_per_image, self.image_side
            )));
        }
        for class in 0..self.num_classes {
            for g in [glyphs::arabic(class), glyphs::roman(class)] {
                if origin(self.image_side, g.rows) < self.jitter as isize
                    || origin(self.image_side, g.cols) < self.jitter as isize
                    || tail(self.image_side, g.rows) < self.jitter as isize
                    || tail(self.image_side, g.cols) < self.jitter as isize
                {
                    return Err(Error::Config(format!(
                        "a {}x{} glyph with jitter {} does not fit in a {}-pixel image",
                        g.rows, g.cols, self.jitter, self.image_side
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn num_samples(&self) -> usize {
        self.num_classes * self.samples_per_class
    }
}

fn origin(side: usize, extent: usize) -> isize {
    (side as isize - extent as isize) / 2
}

fn tail(side: usize, extent: usize) -> isize {
    side as isize - extent as isize - origin(side, extent)
}

/// Noise line positions drawn for one sample.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NoiseRecord {
    /// Vertical lines on view A.
    pub columns: Vec<usize>,
    /// Horizontal lines on view B.
    pub rows: Vec<usize>,
}

fn render<R: Rng>(glyph: &Glyph, side: usize, jitter: usize, rng: &mut R) -> Vec<f64> {
    let j = jitter as i64;
    let dy = rng.random_range(-j..=j) as isize;
    let dx = rng.random_range(-j..=j) as isize;
    let top = origin(side, glyph.rows) + dy;
    let left = origin(side, glyph.cols) + dx;
    let mut img = vec![0.0; side * side];
    for r in 0..glyph.rows {
        for c in 0..glyph.cols {
            if glyph.at(r, c) {
                let y = (top + r as isize) as usize;
                let x = (left + c as isize) as usize;
                img[y * side + x] = 1.0;
            }
        }
    }
    img
}

/// Paired binary images: view A shows the class glyph from the digit set
/// overlaid with full-height vertical noise lines, view B the matching
/// numeral glyph overlaid with full-width horizontal noise lines. Classes
/// are balanced exactly and presented in shuffled order.
pub fn generate_synthetic_paired(config: &SynthConfig) -> Result<MultiViewDataset> {
    generate_synthetic_paired_with_noise(config).map(|(d, _)| d)
}

/// As [`generate_synthetic_paired`], also returning where the noise went.
pub fn generate_synthetic_paired_with_noise(
    config: &SynthConfig,
) -> Result<(MultiViewDataset, Vec<NoiseRecord>)> {
    config.validate()?;
    let side = config.image_side;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut classes: Vec<usize> = (0..config.num_classes)
        .flat_map(|c| std::iter::repeat_n(c, config.samples_per_class))
        .collect();
    classes.shuffle(&mut rng);

    let arabic: Vec<Glyph> = (0..config.num_classes).map(glyphs::arabic).collect();
    let roman: Vec<Glyph> = (0..config.num_classes).map(glyphs::roman).collect();
    let mut samples = Vec::with_capacity(classes.len());
    let mut noise = Vec::with_capacity(classes.len());
    for &class in &classes {
        let mut a = render(&arabic[class], side, config.jitter, &mut rng);
        let mut b = render(&roman[class], side, config.jitter, &mut rng);
        let mut columns = index::sample(&mut rng, side, config.noise_lines_per_image).into_vec();
        let mut rows = index::sample(&mut rng, side, config.noise_lines_per_image).into_vec();
        columns.sort_unstable();
        rows.sort_unstable();
        for &c in &columns {
            for r in 0..side {
                a[r * side + c] = 1.0;
            }
        }
        for &r in &rows {
            for c in 0..side {
                b[r * side + c] = 1.0;
            }
        }
        samples.push(
            MultiViewSample::new(vec![Array1::from(a), Array1::from(b)]).with_label(class as i64),
        );
        noise.push(NoiseRecord { columns, rows });
    }
    let dim = side * side;
    let views = vec![
        ViewConfig::new("arabic", dim, Family::Bernoulli),
        ViewConfig::new("roman", dim, Family::Bernoulli),
    ];
    Ok((MultiViewDataset::new(views, samples)?, noise))
}

/// Columns of view A and rows of view B that some glyph can touch under
/// the configured jitter. Everything else only ever carries noise.
pub fn glyph_support(config: &SynthConfig) -> Result<(Vec<bool>, Vec<bool>)> {
    config.validate()?;
    let side = config.image_side;
    let j = config.jitter as isize;
    let mut columns = vec![false; side];
    let mut rows = vec![false; side];
    for class in 0..config.num_classes {
        let a = glyphs::arabic(class);
        for c in 0..a.cols {
            if (0..a.rows).any(|r| a.at(r, c)) {
                for d in -j..=j {
                    columns[(origin(side, a.cols) + c as isize + d) as usize] = true;
                }
            }
        }
        let b = glyphs::roman(class);
        for r in 0..b.rows {
            if (0..b.cols).any(|c| b.at(r, c)) {
                for d in -j..=j {
                    rows[(origin(side, b.rows) + r as isize + d) as usize] = true;
                }
            }
        }
    }
    Ok((columns, rows))
}
