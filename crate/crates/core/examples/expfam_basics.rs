//! Node families and the gated conditionals of a two-view model.

use ndarray::array;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use samvh::{Family, HarmoniumParams, MultiViewSample, StructureMode, ViewConfig};

fn main() -> samvh::Result<()> {
    for family in [Family::Bernoulli, Family::GaussianUnitVariance] {
        println!("{}:", family.name());
        for eta in [-2.0, 0.0, 1.5] {
            println!(
                "  eta {eta:>5}: A = {:.4}, mean = {:.4}",
                family.log_partition(eta)?,
                family.mean(eta)
            );
        }
    }

    let views = vec![
        ViewConfig::new("a", 2, Family::Bernoulli),
        ViewConfig::new("b", 3, Family::GaussianUnitVariance),
    ];
    let mut params = HarmoniumParams::zeros(views, 2, Family::Bernoulli, StructureMode::Sa)?;
    params.weights[0] = array![[1.0, -0.5], [0.5, 0.0]];
    params.weights[1] = array![[0.2, 0.3], [-0.4, 0.1], [0.0, 0.6]];
    // unit 0 listens to view a only, unit 1 to both
    params.switches = array![[4.0, 4.0], [-4.0, 4.0]];

    println!("gates:\n{:.3}", params.gates());
    let sample = MultiViewSample::new(vec![array![1.0, 0.0], array![0.5, -1.0, 2.0]]);
    println!(
        "hidden shifted params: {:.4}",
        params.hidden_shifted_params(&sample)?
    );
    println!(
        "posterior hidden mean: {:.4}",
        params.posterior_hidden_mean(&sample)?
    );
    let h = array![1.0, 0.0];
    println!(
        "view b shifted params given h: {:.4}",
        params.visible_shifted_params(&h, 1)?
    );
    println!(
        "log joint: {:.4}",
        params.unnormalized_log_joint(&sample, &h)?
    );

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (h, v) = params.gibbs_step(&sample, &mut rng)?;
    println!(
        "one Gibbs sweep: h = {h}, view a = {}, view b = {:.3}",
        v.values[0], v.values[1]
    );
    Ok(())
}
