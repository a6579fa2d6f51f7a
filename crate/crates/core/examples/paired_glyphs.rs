//! Train a structure-adapting model on paired glyphs and report which hidden
//! units became shared, view-specific or dead.
//!
//! cargo run --release --example paired_glyphs -- [seed] [epochs]

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use samvh::data::{generate_synthetic_paired, glyph_support, SynthConfig};
use samvh::eval::CONNECT_THRESHOLD;
use samvh::model::UnitCategory;
use samvh::training::{TrainConfig, Trainer};
use samvh::{Family, HarmoniumParams, StructureMode};

fn main() -> samvh::Result<()> {
    let mut args = std::env::args()
        .skip(1)
        .map(|a| a.parse::<u64>().expect("integer argument"));
    let seed = args.next().unwrap_or(1);
    let epochs = args.next().unwrap_or(100) as usize;

    let synth = SynthConfig {
        seed,
        ..SynthConfig::default()
    };
    let data = generate_synthetic_paired(&synth)?;
    println!(
        "{} samples, views {:?}",
        data.len(),
        data.views.iter().map(|v| v.dim).collect::<Vec<_>>()
    );

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let params = HarmoniumParams::init_random(
        data.views.clone(),
        60,
        Family::Bernoulli,
        StructureMode::Sa,
        0.01,
        &mut rng,
    )?;
    let config = TrainConfig {
        epochs,
        seed,
        ..TrainConfig::default()
    };
    let mut trainer = Trainer::new(params, config)?;
    for epoch in 0..epochs {
        let rec = trainer.run_epoch(&data.samples)?;
        if (epoch + 1) % 10 == 0 {
            let report = trainer.params.structure_report(CONNECT_THRESHOLD);
            println!(
                "epoch {:>3}  recon {:.4?}  gate {:.3?}  {}",
                epoch + 1,
                rec.recon_error,
                rec.mean_gate,
                report.summary_line()
            );
        }
    }

    // share of each filter's L1 mass on pixels no glyph reaches
    let params = &trainer.params;
    let (cols, rows) = glyph_support(&synth)?;
    let side = synth.image_side;
    let noise = |k: usize, j: usize| {
        let w = params.weights[k].column(j);
        let total: f64 = w.iter().map(|x| x.abs()).sum();
        let off: f64 = w
            .iter()
            .enumerate()
            .filter(|(i, _)| {
                if k == 0 {
                    !cols[i % side]
                } else {
                    !rows[i / side]
                }
            })
            .map(|(_, x)| x.abs())
            .sum();
        off / total
    };
    let report = params.structure_report(CONNECT_THRESHOLD);
    let mut shared = Vec::new();
    let mut specific = Vec::new();
    for (j, c) in report.categories.iter().enumerate() {
        match c {
            UnitCategory::Shared => shared.push((noise(0, j) + noise(1, j)) / 2.0),
            UnitCategory::Specific(k) => specific.push(noise(*k, j)),
            UnitCategory::Dead => {}
        }
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len().max(1) as f64;
    println!(
        "noise mass: shared {:.3}, specific {:.3}",
        mean(&shared),
        mean(&specific)
    );
    Ok(())
}
