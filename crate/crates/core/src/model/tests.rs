use approx::assert_abs_diff_eq;
use ndarray::{array, Array1, Array2};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::exact::{exact_log_likelihood, log_partition, visible_states};
use super::*;
use crate::oracle;
use crate::training::gradcheck::{random_binary_data, random_tiny_model};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn one_by_one(w: f64, s: f64, xi: f64, lambda: f64) -> HarmoniumParams {
    let mut p = HarmoniumParams::zeros(
        vec![ViewConfig::new("a", 1, Family::Bernoulli)],
        1,
        Family::Bernoulli,
        StructureMode::Sa,
    )
    .unwrap();
    p.weights[0][[0, 0]] = w;
    p.switches[[0, 0]] = s;
    p.visible_bias[0][0] = xi;
    p.hidden_bias[0] = lambda;
    p
}

fn tiny(seed: u64, kind: StructureKind) -> HarmoniumParams {
    random_tiny_model(&[3, 3], 4, kind, &mut rng(seed)).unwrap()
}

fn bernoulli_views(dims: &[usize]) -> Vec<ViewConfig> {
    dims.iter()
        .enumerate()
        .map(|(k, &d)| ViewConfig::new(format!("v{k}"), d, Family::Bernoulli))
        .collect()
}

#[test]
fn gate_values() {
    let mut p = one_by_one(0.0, 0.0, 0.0, 0.0);
    assert_eq!(p.gate(0, 0).unwrap(), 0.5);
    p.switches[[0, 0]] = 2.0;
    assert_abs_diff_eq!(p.gate(0, 0).unwrap(), 0.8807970779778824, epsilon = 1e-15);
    p.structure = StructureMode::Dwh;
    p.switches[[0, 0]] = -40.0;
    assert_eq!(p.gate(0, 0).unwrap(), 1.0);
    p.structure = StructureMode::Mvh {
        mask: array![[false]],
    };
    assert_eq!(p.gate(0, 0).unwrap(), 0.0);
    assert!(matches!(p.gate(1, 0), Err(Error::Index(_))));
    assert!(matches!(p.gate(0, 1), Err(Error::Index(_))));
}

#[test]
fn zero_weights_leave_biases_unshifted() {
    let mut p = HarmoniumParams::zeros(
        bernoulli_views(&[3, 2]),
        4,
        Family::Bernoulli,
        StructureMode::Sa,
    )
    .unwrap();
    p.hidden_bias = array![0.1, -0.2, 0.3, 0.4];
    p.visible_bias[1] = array![0.7, -0.9];
    let v = MultiViewSample::new(vec![array![1.0, 0.0, 1.0], array![1.0, 1.0]]);
    assert_eq!(p.hidden_shifted_params(&v).unwrap(), p.hidden_bias);
    let h = array![1.0, 1.0, 0.0, 1.0];
    assert_eq!(p.visible_shifted_params(&h, 1).unwrap(), p.visible_bias[1]);
}

#[test]
fn one_term_hand_cases() {
    let p = one_by_one(2.0, 0.0, 0.4, 0.1);
    let v = MultiViewSample::new(vec![array![1.0]]);
    assert_abs_diff_eq!(
        p.hidden_shifted_params(&v).unwrap()[0],
        1.1,
        epsilon = 1e-15
    );
    assert_abs_diff_eq!(
        p.visible_shifted_params(&array![1.0], 0).unwrap()[0],
        0.4 + 0.5 * 2.0,
        epsilon = 1e-15
    );
    assert_abs_diff_eq!(
        p.visible_shifted_params(&array![0.0], 0).unwrap()[0],
        0.4,
        epsilon = 1e-15
    );
}

#[test]
fn shifted_params_match_naive_loops() {
    for seed in 0..20 {
        for kind in [StructureKind::Sa, StructureKind::Dwh, StructureKind::Mvh] {
            let p = random_tiny_model(&[4, 3, 2], 5, kind, &mut rng(seed)).unwrap();
            let data = random_binary_data(&p, 3, &mut rng(seed + 100));
            for v in &data {
                let got = p.hidden_shifted_params(v).unwrap();
                for (a, b) in got.iter().zip(oracle::hidden_shifted(&p, v)) {
                    assert_abs_diff_eq!(*a, b, epsilon = 1e-12);
                }
            }
            let h = array![1.0, 0.0, 1.0, 1.0, 0.0];
            for k in 0..3 {
                let got = p.visible_shifted_params(&h, k).unwrap();
                for (a, b) in got
                    .iter()
                    .zip(oracle::visible_shifted(&p, h.as_slice().unwrap(), k))
                {
                    assert_abs_diff_eq!(*a, b, epsilon = 1e-12);
                }
            }
        }
    }
}

#[test]
fn shape_mismatches_are_rejected() {
    let p = tiny(0, StructureKind::Sa);
    let short = MultiViewSample::new(vec![array![1.0, 0.0, 1.0]]);
    assert!(matches!(
        p.hidden_shifted_params(&short),
        Err(Error::Shape(_))
    ));
    let wrong = MultiViewSample::new(vec![array![1.0, 0.0], array![1.0, 0.0, 1.0]]);
    assert!(matches!(
        p.posterior_hidden_mean(&wrong),
        Err(Error::Shape(_))
    ));
    assert!(matches!(
        p.visible_shifted_params(&array![1.0], 0),
        Err(Error::Shape(_))
    ));
    assert!(matches!(
        p.visible_shifted_params(&Array1::zeros(4), 2),
        Err(Error::Index(_))
    ));
}

#[test]
fn posterior_mean_at_zero_and_for_gaussian_hiddens() {
    let p = HarmoniumParams::zeros(
        bernoulli_views(&[2]),
        3,
        Family::Bernoulli,
        StructureMode::Sa,
    )
    .unwrap();
    let v = MultiViewSample::new(vec![array![1.0, 1.0]]);
    assert_eq!(p.posterior_hidden_mean(&v).unwrap(), array![0.5, 0.5, 0.5]);

    let mut g = tiny(3, StructureKind::Sa);
    g.hidden_family = Family::GaussianUnitVariance;
    let v = random_binary_data(&g, 1, &mut rng(9)).remove(0);
    assert_eq!(
        g.posterior_hidden_mean(&v).unwrap(),
        g.hidden_shifted_params(&v).unwrap()
    );
}

#[test]
fn conditional_matches_enumerated_joint() {
    for seed in 0..50 {
        let p = tiny(seed, StructureKind::Sa);
        let v = random_binary_data(&p, 1, &mut rng(seed + 1000)).remove(0);
        let got = p.posterior_hidden_mean(&v).unwrap();
        for (a, b) in got.iter().zip(oracle::hidden_posterior(&p, &v)) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-10);
        }
    }
}

#[test]
fn log_joint_of_zero_model_is_zero() {
    let p = HarmoniumParams::zeros(
        bernoulli_views(&[2, 1]),
        2,
        Family::Bernoulli,
        StructureMode::Sa,
    )
    .unwrap();
    for s in visible_states(&p) {
        for h in [array![0.0, 0.0], array![1.0, 0.0], array![1.0, 1.0]] {
            assert_eq!(p.unnormalized_log_joint(&s, &h).unwrap(), 0.0);
        }
    }
}

#[test]
fn log_joint_hand_case_uses_positive_biases() {
    let p = one_by_one(1.0, 0.0, 0.2, 0.3);
    let v = MultiViewSample::new(vec![array![1.0]]);
    let got = p.unnormalized_log_joint(&v, &array![1.0]).unwrap();
    assert_abs_diff_eq!(got, 0.5 + 0.2 + 0.3, epsilon = 1e-15);
}

#[test]
fn log_joint_matches_naive_energy() {
    let p = tiny(4, StructureKind::Sa);
    for (n, s) in visible_states(&p).iter().enumerate().step_by(7) {
        let h = oracle::bits(n % 16, 4);
        let v: Vec<Vec<f64>> = s.values.iter().map(|x| x.to_vec()).collect();
        let got = p
            .unnormalized_log_joint(s, &Array1::from(h.clone()))
            .unwrap();
        assert_abs_diff_eq!(got, oracle::energy(&p, &v, &h), epsilon = 1e-12);
    }
}

#[test]
fn joint_normalizes_over_state_space() {
    for seed in 0..5 {
        let p = tiny(seed, StructureKind::Sa);
        let log_z = log_partition(&p).unwrap();
        let mut total = 0.0;
        for s in visible_states(&p) {
            for hb in 0..16 {
                let h = Array1::from(oracle::bits(hb, 4));
                total += (p.unnormalized_log_joint(&s, &h).unwrap() - log_z).exp();
            }
        }
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-10);
    }
}

#[test]
fn zero_model_is_uniform() {
    let p = HarmoniumParams::zeros(
        bernoulli_views(&[2]),
        1,
        Family::Bernoulli,
        StructureMode::Sa,
    )
    .unwrap();
    for s in visible_states(&p) {
        let ll = exact_log_likelihood(&p, std::slice::from_ref(&s)).unwrap();
        assert_abs_diff_eq!(ll, -2.0 * std::f64::consts::LN_2, epsilon = 1e-14);
    }
}

#[test]
fn repeated_point_does_not_change_mean_likelihood() {
    let p = tiny(5, StructureKind::Sa);
    let v = random_binary_data(&p, 1, &mut rng(1)).remove(0);
    let once = exact_log_likelihood(&p, std::slice::from_ref(&v)).unwrap();
    let twice = exact_log_likelihood(&p, &[v.clone(), v]).unwrap();
    assert_abs_diff_eq!(once, twice, epsilon = 1e-14);
}

#[test]
fn likelihood_matches_probability_tables() {
    for seed in 0..10 {
        for kind in [StructureKind::Sa, StructureKind::Dwh, StructureKind::Mvh] {
            let p = tiny(seed, kind);
            let data = random_binary_data(&p, 8, &mut rng(seed + 50));
            let got = exact_log_likelihood(&p, &data).unwrap();
            assert_abs_diff_eq!(got, oracle::log_likelihood(&p, &data), epsilon = 1e-10);
        }
    }
}

#[test]
fn enumeration_limits_and_families() {
    let big = HarmoniumParams::zeros(
        bernoulli_views(&[9, 8]),
        2,
        Family::Bernoulli,
        StructureMode::Sa,
    )
    .unwrap();
    let v = MultiViewSample::new(vec![Array1::zeros(9), Array1::zeros(8)]);
    assert!(matches!(
        exact_log_likelihood(&big, &[v]),
        Err(Error::EnumerationBound(_))
    ));
    let wide = HarmoniumParams::zeros(
        bernoulli_views(&[2]),
        13,
        Family::Bernoulli,
        StructureMode::Sa,
    )
    .unwrap();
    let v = MultiViewSample::new(vec![Array1::zeros(2)]);
    assert!(matches!(
        exact_log_likelihood(&wide, std::slice::from_ref(&v)),
        Err(Error::EnumerationBound(_))
    ));
    let gauss = HarmoniumParams::zeros(
        vec![ViewConfig::new("g", 2, Family::GaussianUnitVariance)],
        2,
        Family::Bernoulli,
        StructureMode::Sa,
    )
    .unwrap();
    assert!(matches!(
        exact_log_likelihood(&gauss, &[v]),
        Err(Error::UnsupportedFamily(_))
    ));
    let p = tiny(0, StructureKind::Sa);
    assert!(matches!(
        exact_log_likelihood(&p, &[]),
        Err(Error::Empty(_))
    ));
    let off = MultiViewSample::new(vec![array![0.5, 0.0, 1.0], array![0.0, 0.0, 1.0]]);
    assert!(matches!(
        exact_log_likelihood(&p, &[off]),
        Err(Error::Domain { .. })
    ));
}

fn permute_hidden(p: &HarmoniumParams, perm: &[usize]) -> HarmoniumParams {
    let mut q = p.clone();
    for (new, &old) in perm.iter().enumerate() {
        for k in 0..p.num_views() {
            q.weights[k]
                .column_mut(new)
                .assign(&p.weights[k].column(old));
            q.switches[[k, new]] = p.switches[[k, old]];
        }
        q.hidden_bias[new] = p.hidden_bias[old];
    }
    q
}

#[test]
fn likelihood_invariant_under_hidden_permutation() {
    let p = tiny(6, StructureKind::Sa);
    let data = random_binary_data(&p, 6, &mut rng(2));
    let q = permute_hidden(&p, &[2, 0, 3, 1]);
    assert_abs_diff_eq!(
        exact_log_likelihood(&p, &data).unwrap(),
        exact_log_likelihood(&q, &data).unwrap(),
        epsilon = 1e-12
    );
}

#[test]
fn saturated_switches_reduce_to_dual_wing() {
    for seed in 0..10 {
        let mut sa = tiny(seed, StructureKind::Sa);
        sa.switches.fill(30.0);
        let mut dwh = sa.clone();
        dwh.structure = StructureMode::Dwh;
        let data = random_binary_data(&sa, 4, &mut rng(seed));
        for v in &data {
            let (a, b) = (
                sa.posterior_hidden_mean(v).unwrap(),
                dwh.posterior_hidden_mean(v).unwrap(),
            );
            for (x, y) in a.iter().zip(&b) {
                assert_abs_diff_eq!(*x, *y, epsilon = 1e-9);
            }
            let h = array![1.0, 0.0, 1.0, 1.0];
            assert_abs_diff_eq!(
                sa.unnormalized_log_joint(v, &h).unwrap(),
                dwh.unnormalized_log_joint(v, &h).unwrap(),
                epsilon = 1e-9
            );
        }
        assert_abs_diff_eq!(
            exact_log_likelihood(&sa, &data).unwrap(),
            exact_log_likelihood(&dwh, &data).unwrap(),
            epsilon = 1e-9
        );
    }
}

#[test]
fn all_ones_mask_is_dual_wing() {
    let dwh = tiny(7, StructureKind::Dwh);
    let mut mvh = dwh.clone();
    mvh.structure = StructureMode::Mvh {
        mask: Array2::from_elem((2, 4), true),
    };
    let data = random_binary_data(&dwh, 5, &mut rng(3));
    assert_eq!(
        exact_log_likelihood(&dwh, &data).unwrap(),
        exact_log_likelihood(&mvh, &data).unwrap()
    );
    for v in &data {
        assert_eq!(
            dwh.posterior_hidden_mean(v).unwrap(),
            mvh.posterior_hidden_mean(v).unwrap()
        );
    }
}

#[test]
fn decoupled_gibbs_ignores_input() {
    let mut p = HarmoniumParams::zeros(
        bernoulli_views(&[3, 2]),
        3,
        Family::Bernoulli,
        StructureMode::Sa,
    )
    .unwrap();
    p.hidden_bias = array![2.0, -1.0, 0.0];
    p.visible_bias[0] = array![1.0, 0.0, -3.0];
    let a = MultiViewSample::new(vec![array![0.0, 0.0, 0.0], array![0.0, 0.0]]);
    let b = MultiViewSample::new(vec![array![1.0, 1.0, 1.0], array![1.0, 1.0]]);
    for seed in 0..10 {
        assert_eq!(
            p.gibbs_step(&a, &mut rng(seed)).unwrap(),
            p.gibbs_step(&b, &mut rng(seed)).unwrap()
        );
    }
}

#[test]
fn saturated_gibbs_is_deterministic() {
    let mut p = HarmoniumParams::zeros(
        bernoulli_views(&[2]),
        2,
        Family::Bernoulli,
        StructureMode::Dwh,
    )
    .unwrap();
    p.weights[0] = array![[500.0, -500.0], [500.0, -500.0]];
    let v = MultiViewSample::new(vec![array![1.0, 1.0]]);
    for seed in 0..20 {
        let (h, _) = p.gibbs_step(&v, &mut rng(seed)).unwrap();
        assert_eq!(h, array![1.0, 0.0]);
    }
}

#[test]
fn long_gibbs_chain_matches_exact_marginals() {
    let mut p = random_tiny_model(&[2, 2], 3, StructureKind::Sa, &mut rng(11)).unwrap();
    p.weights
        .iter_mut()
        .for_each(|w| w.mapv_inplace(|x| 0.7 * x));
    let exact = oracle::visible_marginals(&p);
    let mut r = rng(12);
    let mut v = MultiViewSample::new(vec![Array1::zeros(2), Array1::zeros(2)]);
    let mut counts = [0.0; 4];
    let steps = 100_000;
    for _ in 0..steps {
        v = p.gibbs_step(&v, &mut r).unwrap().1;
        for (c, x) in counts.iter_mut().zip(v.values.iter().flatten()) {
            *c += x;
        }
    }
    for (c, e) in counts.iter().zip(&exact) {
        assert!(
            (c / steps as f64 - e).abs() < 0.02,
            "{} vs {e}",
            c / steps as f64
        );
    }
}

#[test]
fn unit_switches_at_threshold_are_dead() {
    let p = HarmoniumParams::zeros(
        bernoulli_views(&[2, 2]),
        5,
        Family::Bernoulli,
        StructureMode::Sa,
    )
    .unwrap();
    let r = p.structure_report(0.5);
    assert_eq!((r.shared, r.specific.clone(), r.dead), (0, vec![0, 0], 5));
    let mut d = p.clone();
    d.structure = StructureMode::Dwh;
    let r = d.structure_report(0.5);
    assert_eq!((r.shared, r.specific, r.dead), (5, vec![0, 0], 0));
}

#[test]
fn report_reproduces_set_counts() {
    let mut p = HarmoniumParams::zeros(
        bernoulli_views(&[4, 4]),
        200,
        Family::Bernoulli,
        StructureMode::Sa,
    )
    .unwrap();
    p.switches.fill(-3.0);
    for j in 0..95 {
        p.switches.column_mut(j).fill(3.0);
    }
    for j in 95..127 {
        p.switches[[0, j]] = 3.0;
    }
    for j in 127..174 {
        p.switches[[1, j]] = 3.0;
    }
    let r = p.structure_report(0.5);
    assert_eq!(r.shared, 95);
    assert_eq!(r.specific, vec![32, 47]);
    assert_eq!(r.dead, 26);
    assert_eq!(r.connected_per_view, vec![127, 142]);
    assert_eq!(
        r.summary_line(),
        "shared=95 specific_view0=32 specific_view1=47 dead=26"
    );
    assert_eq!(
        r.units(UnitCategory::Specific(1)),
        (127..174).collect::<Vec<_>>()
    );
}

#[test]
fn mvh_blocks_layout() {
    let StructureMode::Mvh { mask } = StructureMode::mvh_blocks(2, 6, 2).unwrap() else {
        panic!("expected mask");
    };
    assert_eq!(
        mask,
        array![
            [true, true, true, true, false, false],
            [true, true, false, false, true, true]
        ]
    );
    assert!(StructureMode::mvh_blocks(2, 3, 4).is_err());
}

#[test]
fn random_init_has_zero_biases_and_switches() {
    let p = HarmoniumParams::init_random(
        bernoulli_views(&[50, 40]),
        30,
        Family::Bernoulli,
        StructureMode::Sa,
        0.01,
        &mut rng(0),
    )
    .unwrap();
    assert!(p.switches.iter().all(|&s| s == 0.0));
    assert!(p.hidden_bias.iter().all(|&s| s == 0.0));
    let n = p.weights.iter().map(|w| w.len()).sum::<usize>() as f64;
    let sd = (p.weights.iter().flatten().map(|x| x * x).sum::<f64>() / n).sqrt();
    assert!((sd - 0.01).abs() < 0.001, "{sd}");
}

#[test]
fn invalid_configurations() {
    assert!(HarmoniumParams::zeros(vec![], 2, Family::Bernoulli, StructureMode::Sa).is_err());
    assert!(HarmoniumParams::zeros(
        bernoulli_views(&[2]),
        0,
        Family::Bernoulli,
        StructureMode::Sa
    )
    .is_err());
    let dup = vec![
        ViewConfig::new("a", 1, Family::Bernoulli),
        ViewConfig::new("a", 2, Family::Bernoulli),
    ];
    assert!(HarmoniumParams::zeros(dup, 2, Family::Bernoulli, StructureMode::Sa).is_err());
    let mut p = tiny(0, StructureKind::Sa);
    p.weights[1][[0, 0]] = f64::NAN;
    assert!(p.validate().is_err());
}

proptest! {
    #[test]
    fn gate_is_increasing(a in -20.0f64..20.0, d in 1e-3f64..5.0) {
        let lo = one_by_one(0.0, a, 0.0, 0.0).gate(0, 0).unwrap();
        let hi = one_by_one(0.0, a + d, 0.0, 0.0).gate(0, 0).unwrap();
        prop_assert!(hi > lo);
    }

    #[test]
    fn log_joint_is_affine_in_each_hidden(seed in 0u64..1000, j in 0usize..4) {
        let p = tiny(seed, StructureKind::Sa);
        let v = random_binary_data(&p, 1, &mut rng(seed)).remove(0);
        let mut h = Array1::from(oracle::bits(seed as usize % 16, 4));
        h[j] = 0.0;
        let off = p.unnormalized_log_joint(&v, &h).unwrap();
        h[j] = 1.0;
        let on = p.unnormalized_log_joint(&v, &h).unwrap();
        let eta = p.hidden_shifted_params(&v).unwrap()[j];
        prop_assert!((on - off - eta).abs() < 1e-12);
    }
}
