//! Round-trip real-valued views through CSV and fit a Gaussian-visible model.

use ndarray::Array1;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use samvh::data::{load_multiview_csv, save_multiview_csv};
use samvh::training::train;
use samvh::{
    Family, HarmoniumParams, MultiViewDataset, MultiViewSample, StructureMode, TrainConfig,
    ViewConfig,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    // both views see a common latent z plus view-local noise
    let samples: Vec<MultiViewSample> = (0..300)
        .map(|_| {
            let z: f64 = rng.sample(StandardNormal);
            let mut view = |d: usize, scale: f64| {
                Array1::from_shape_fn(d, |_| {
                    3.0 + scale * z + 0.5 * rng.sample::<f64, _>(StandardNormal)
                })
            };
            let (a, b) = (view(4, 2.0), view(3, -1.0));
            MultiViewSample::new(vec![a, b]).with_label(i64::from(z > 0.0))
        })
        .collect();
    let views = vec![
        ViewConfig::new("view0", 4, Family::GaussianUnitVariance),
        ViewConfig::new("view1", 3, Family::GaussianUnitVariance),
    ];
    let data = MultiViewDataset::new(views, samples)?;

    let dir = tempfile::tempdir()?;
    let paths = [dir.path().join("a.csv"), dir.path().join("b.csv")];
    let labels = dir.path().join("labels.csv");
    save_multiview_csv(&data, &paths, Some(&labels))?;
    let loaded = load_multiview_csv(&paths, Some(&labels))?;
    let first = &loaded.samples[0];
    println!(
        "loaded {} samples; first row standardized: {:.3} | {:.3}",
        loaded.len(),
        first.values[0],
        first.values[1]
    );

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let params = HarmoniumParams::init_random(
        loaded.views.clone(),
        4,
        Family::Bernoulli,
        StructureMode::Sa,
        0.01,
        &mut rng,
    )?;
    let (params, log) = train(
        params,
        &loaded,
        &TrainConfig {
            learning_rate: 0.01,
            epochs: 40,
            seed: 1,
            ..TrainConfig::default()
        },
    )?;
    let last = log.records.last().unwrap();
    println!("final recon error per view {:.4?}", last.recon_error);
    println!("gates:\n{:.2}", params.gates());
    println!("{}", params.structure_report(0.5).summary_line());
    Ok(())
}
