//! Block Gibbs chain marginals against the enumerated visible distribution.

use ndarray::Array1;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use samvh::model::exact::visible_distribution;
use samvh::model::StructureKind;
use samvh::training::gradcheck::{random_binary_data, random_tiny_model};

fn main() -> samvh::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let params = random_tiny_model(&[2, 3], 3, StructureKind::Sa, &mut rng)?;

    let (states, probs) = visible_distribution(&params)?;
    let mut exact = vec![Array1::<f64>::zeros(2), Array1::zeros(3)];
    for (s, p) in states.iter().zip(&probs) {
        for (m, v) in exact.iter_mut().zip(&s.values) {
            m.scaled_add(*p, v);
        }
    }

    let mut x = random_binary_data(&params, 1, &mut rng).remove(0);
    let steps = 200_000;
    let mut sampled = vec![Array1::<f64>::zeros(2), Array1::zeros(3)];
    for _ in 0..1000 {
        x = params.gibbs_step(&x, &mut rng)?.1;
    }
    for _ in 0..steps {
        x = params.gibbs_step(&x, &mut rng)?.1;
        for (m, v) in sampled.iter_mut().zip(&x.values) {
            *m += v;
        }
    }
    for (k, (e, s)) in exact.iter().zip(&sampled).enumerate() {
        println!("view {k} exact   {:.4}", e);
        println!("view {k} sampled {:.4}", s / steps as f64);
    }
    Ok(())
}
