//! Write shared, specific and dead filter grids as PGM images.
//!
//! cargo run --release --example render_filters -- [out_dir]

use std::path::PathBuf;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use samvh::data::{generate_synthetic_paired, SynthConfig};
use samvh::eval::export_filter_images;
use samvh::training::train;
use samvh::{Family, HarmoniumParams, StructureMode, TrainConfig};

fn main() -> samvh::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map_or_else(|| PathBuf::from("filters"), PathBuf::from);
    let data = generate_synthetic_paired(&SynthConfig {
        seed: 4,
        samples_per_class: 100,
        ..SynthConfig::default()
    })?;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let params = HarmoniumParams::init_random(
        data.views.clone(),
        40,
        Family::Bernoulli,
        StructureMode::Sa,
        0.01,
        &mut rng,
    )?;
    let (params, _) = train(
        params,
        &data,
        &TrainConfig {
            epochs: 60,
            seed: 4,
            ..TrainConfig::default()
        },
    )?;
    println!("{}", params.structure_report(0.5).summary_line());
    for view in 0..params.num_views() {
        let export = export_filter_images(&params, view, &out, 10)?;
        for p in export.written {
            println!("wrote {}", p.display());
        }
    }
    Ok(())
}
