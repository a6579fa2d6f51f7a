//! Posterior hidden means as features for k-NN, SA against DWH on one split.
//!
//! cargo run --release --example knn_features

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use samvh::data::{generate_synthetic_paired, train_test_split, SynthConfig};
use samvh::eval::{extract_features, knn_sweep, Selection};
use samvh::training::train;
use samvh::{Family, HarmoniumParams, MultiViewDataset, StructureMode, TrainConfig};

fn evaluate(
    name: &str,
    params: &HarmoniumParams,
    data: &MultiViewDataset,
    selection: Selection,
) -> samvh::Result<()> {
    let (tr, te) = train_test_split(data, 0.5, 7)?;
    let a = extract_features(params, &tr, selection)?;
    let b = extract_features(params, &te, selection)?;
    let table = knn_sweep(
        &a,
        &tr.labels().unwrap(),
        &b,
        &te.labels().unwrap(),
        &[10, 30, 50, 70, 100],
    )?;
    print!("{}", table.to_wide_text(name));
    Ok(())
}

fn main() -> samvh::Result<()> {
    let data = generate_synthetic_paired(&SynthConfig {
        seed: 2,
        ..SynthConfig::default()
    })?;
    let config = TrainConfig {
        epochs: 60,
        seed: 2,
        ..TrainConfig::default()
    };
    for (name, mode) in [("DWH", StructureMode::Dwh), ("SA", StructureMode::Sa)] {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let params = HarmoniumParams::init_random(
            data.views.clone(),
            60,
            Family::Bernoulli,
            mode,
            0.01,
            &mut rng,
        )?;
        let (params, _) = train(params, &data, &config)?;
        evaluate(name, &params, &data, Selection::All)?;
        if name == "SA" {
            evaluate("SA shared", &params, &data, Selection::Shared)?;
        }
    }
    Ok(())
}
