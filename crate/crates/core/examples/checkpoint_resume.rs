//! Two five-epoch runs joined by a checkpoint match one ten-epoch run.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use samvh::data::{generate_synthetic_paired, SynthConfig};
use samvh::training::Trainer;
use samvh::{Checkpoint, Family, HarmoniumParams, StructureMode, TrainConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = generate_synthetic_paired(&SynthConfig {
        seed: 3,
        samples_per_class: 20,
        ..SynthConfig::default()
    })?;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let init = HarmoniumParams::init_random(
        data.views.clone(),
        16,
        Family::Bernoulli,
        StructureMode::Sa,
        0.01,
        &mut rng,
    )?;
    let config = TrainConfig {
        seed: 3,
        ..TrainConfig::default()
    };

    let mut straight = Trainer::new(init.clone(), config.clone())?;
    straight.run(&data.samples, 10)?;

    let dir = tempfile::tempdir()?;
    let path = dir.path().join("checkpoint.json");
    let mut first = Trainer::new(init, config.clone())?;
    first.run(&data.samples, 5)?;
    let (params, state) = first.into_parts();
    Checkpoint {
        params,
        trainer: Some(state),
    }
    .save(&path)?;
    println!(
        "saved {} bytes to {}",
        std::fs::metadata(&path)?.len(),
        path.display()
    );

    let ckpt = Checkpoint::load(&path)?;
    let mut second = Trainer::resume(ckpt.params, ckpt.trainer.expect("trainer state"), config)?;
    second.run(&data.samples, 5)?;

    println!(
        "epochs done: {} and {}",
        straight.epochs_done(),
        second.epochs_done()
    );
    println!("identical parameters: {}", straight.params == second.params);
    Ok(())
}
