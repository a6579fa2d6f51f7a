//! Exact log-likelihood gradients against central finite differences.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use samvh::model::exact::exact_log_likelihood;
use samvh::model::StructureKind;
use samvh::training::gradcheck::{
    max_disagreement, random_binary_data, random_tiny_model, run_grad_check, GradCheckConfig,
};
use samvh::training::{exact_gradient, finite_diff_gradient};

fn main() -> samvh::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let params = random_tiny_model(&[3, 3], 4, StructureKind::Sa, &mut rng)?;
    let data = random_binary_data(&params, 10, &mut rng);
    println!(
        "log-likelihood {:.6}",
        exact_log_likelihood(&params, &data)?
    );
    let exact = exact_gradient(&params, &data)?;
    let fd = finite_diff_gradient(&params, &data, 1e-5)?;
    for r in params.param_refs().into_iter().step_by(7) {
        println!("{r:?}: exact {:+.8} fd {:+.8}", exact.get(r), fd.get(r));
    }
    let (abs, rel) = max_disagreement(&params, &exact, &fd);
    println!("max abs diff {abs:.2e}, max rel diff {rel:.2e}\n");

    for structure in [StructureKind::Sa, StructureKind::Dwh, StructureKind::Mvh] {
        let config = GradCheckConfig {
            structure,
            ..GradCheckConfig::default()
        };
        let report = run_grad_check(&config, 7, false)?;
        print!("{structure:?}:");
        for g in &report.groups {
            if g.skipped {
                print!("  {} skipped", g.group);
            } else {
                print!("  {} {:.1e}", g.group, g.max_abs_err);
            }
        }
        println!("  -> {}", if report.passed() { "ok" } else { "FAILED" });
    }
    Ok(())
}
