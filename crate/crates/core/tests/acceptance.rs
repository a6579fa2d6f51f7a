//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.
//!
//! Run with `cargo test -p samvh --test acceptance`.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use samvh::config::{substream_seed, RunConfig, Stream};
use samvh::data::{generate_synthetic_paired, glyph_support, train_test_split, SynthConfig};
use samvh::eval::{extract_features, knn_classify, Selection, CONNECT_THRESHOLD};
use samvh::model::exact::exact_log_likelihood;
use samvh::model::{StructureKind, UnitCategory};
use samvh::training::gradcheck::{
    random_binary_data, random_tiny_model, run_grad_check, GradCheckConfig,
};
use samvh::training::{exact_gradient, GradientMethod, TrainConfig, Trainer};
use samvh::{HarmoniumParams, MultiViewDataset, StructureMode};

const SEEDS: [u64; 5] = [1, 2, 3, 4, 5];

struct Outcome {
    pass: bool,
    detail: String,
}

fn report(
    id: usize,
    name: &str,
    started: Instant,
    budget: Option<Duration>,
    outcome: Outcome,
) -> bool {
    let elapsed = started.elapsed();
    let in_time = budget.is_none_or(|b| elapsed <= b);
    let pass = outcome.pass && in_time;
    let budget_note = budget.map_or(String::new(), |b| format!(", budget {:.0?}", b));
    println!(
        "[{}] {id}. {name}: {} ({:.1?}{budget_note})",
        if pass { "PASS" } else { "FAIL" },
        outcome.detail,
        elapsed
    );
    pass
}

fn gradient_exactness() -> Outcome {
    let config = GradCheckConfig::default();
    let report = run_grad_check(&config, substream_seed(0, Stream::GradCheck), false)
        .expect("grad check runs");
    let groups: Vec<String> = report
        .groups
        .iter()
        .map(|g| {
            format!(
                "{} max abs {:.1e} rel {:.1e}",
                g.group, g.max_abs_err, g.max_rel_err
            )
        })
        .collect();
    Outcome {
        pass: report.passed(),
        detail: format!(
            "{} models, {} failing components; {}",
            config.models,
            report.failures.len(),
            groups.join(", ")
        ),
    }
}

fn likelihood_ascent() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst_drop = 0.0f64;
    let mut gains = Vec::new();
    for _ in 0..5 {
        let params = random_tiny_model(&[3, 3], 4, StructureKind::Sa, &mut rng).unwrap();
        let data = random_binary_data(&params, 20, &mut rng);
        let cfg = TrainConfig {
            learning_rate: 0.05,
            momentum: 0.0,
            weight_decay: 0.0,
            epochs: 200,
            batch_size: data.len(),
            method: GradientMethod::Exact,
            ..TrainConfig::default()
        };
        let start = exact_log_likelihood(&params, &data).unwrap();
        let mut trainer = Trainer::new(params, cfg).unwrap();
        let log = trainer.run(&data, 200).unwrap();
        let mut prev = start;
        for rec in &log.records {
            let ll = rec.exact_ll.expect("tiny model is enumerable");
            worst_drop = worst_drop.max(prev - ll);
            prev = ll;
        }
        gains.push(prev - start);
    }
    Outcome {
        pass: worst_drop <= 1e-9,
        detail: format!(
            "5 models x 200 epochs, largest per-epoch drop {worst_drop:.2e}, total gains {:.3?}",
            gains
        ),
    }
}

struct SeedRun {
    seed: u64,
    synth: SynthConfig,
    data: MultiViewDataset,
    params: HarmoniumParams,
    shared: usize,
    specific: [usize; 2],
    dead: usize,
}

fn run_config(seed: u64) -> RunConfig {
    RunConfig {
        seed: Some(seed),
        ..RunConfig::default()
    }
}

fn train_canonical(
    cfg: &RunConfig,
    data: &MultiViewDataset,
    structure: StructureMode,
) -> HarmoniumParams {
    let mut rng = ChaCha8Rng::seed_from_u64(substream_seed(cfg.seed.unwrap(), Stream::Init));
    let params = HarmoniumParams::init_random(
        data.views.clone(),
        cfg.model.hidden_dim,
        cfg.model.hidden_family,
        structure,
        cfg.model.init_scale,
        &mut rng,
    )
    .unwrap();
    let train_cfg = cfg.train_config().unwrap();
    let mut trainer = Trainer::new(params, train_cfg.clone()).unwrap();
    trainer.run(&data.samples, train_cfg.epochs).unwrap();
    trainer.into_parts().0
}

fn sa_runs() -> Vec<SeedRun> {
    SEEDS
        .iter()
        .map(|&seed| {
            let cfg = run_config(seed);
            let synth = cfg.synth_config().unwrap();
            let data = generate_synthetic_paired(&synth).unwrap();
            let params = train_canonical(&cfg, &data, StructureMode::Sa);
            let rep = params.structure_report(CONNECT_THRESHOLD);
            let count = |c| rep.units(c).len();
            SeedRun {
                seed,
                shared: count(UnitCategory::Shared),
                specific: [
                    count(UnitCategory::Specific(0)),
                    count(UnitCategory::Specific(1)),
                ],
                dead: count(UnitCategory::Dead),
                synth,
                data,
                params,
            }
        })
        .collect()
}

fn structure_separation(runs: &[SeedRun]) -> Outcome {
    let ok: Vec<bool> = runs
        .iter()
        .map(|r| r.shared >= 5 && r.specific[0] >= 3 && r.specific[1] >= 3)
        .collect();
    let detail: Vec<String> = runs
        .iter()
        .map(|r| {
            format!(
                "seed {}: {}/{}/{}/{}",
                r.seed, r.shared, r.specific[0], r.specific[1], r.dead
            )
        })
        .collect();
    let passing = ok.iter().filter(|&&b| b).count();
    Outcome {
        pass: passing >= 4,
        detail: format!(
            "{passing}/5 seeds with >=5 shared and >=3 specific per view (shared/A/B/dead: {})",
            detail.join(", ")
        ),
    }
}

/// Fraction of a filter's L1 mass that falls on pixels no glyph can reach.
fn noise_fraction(params: &HarmoniumParams, synth: &SynthConfig, view: usize, unit: usize) -> f64 {
    let (cols, rows) = glyph_support(synth).unwrap();
    let side = synth.image_side;
    let w = params.weights[view].column(unit);
    let total: f64 = w.iter().map(|x| x.abs()).sum();
    let noise: f64 = w
        .iter()
        .enumerate()
        .filter(|(i, _)| {
            if view == 0 {
                !cols[i % side]
            } else {
                !rows[i / side]
            }
        })
        .map(|(_, x)| x.abs())
        .sum();
    noise / total
}

fn noise_localization(runs: &[SeedRun]) -> Outcome {
    let mut passing = 0;
    let mut detail = Vec::new();
    for r in runs {
        let rep = r.params.structure_report(CONNECT_THRESHOLD);
        let mut shared = Vec::new();
        let mut specific = Vec::new();
        for (j, c) in rep.categories.iter().enumerate() {
            match c {
                UnitCategory::Shared => shared.push(
                    (0..2)
                        .map(|k| noise_fraction(&r.params, &r.synth, k, j))
                        .sum::<f64>()
                        / 2.0,
                ),
                UnitCategory::Specific(k) => {
                    specific.push(noise_fraction(&r.params, &r.synth, *k, j))
                }
                UnitCategory::Dead => {}
            }
        }
        let mean = |v: &[f64]| {
            if v.is_empty() {
                f64::NAN
            } else {
                v.iter().sum::<f64>() / v.len() as f64
            }
        };
        let (ms, mp) = (mean(&shared), mean(&specific));
        if mp > ms {
            passing += 1;
        }
        detail.push(format!("seed {}: {mp:.3} vs {ms:.3}", r.seed));
    }
    Outcome {
        pass: passing >= 4,
        detail: format!(
            "{passing}/5 seeds with specific > shared noise mass ({})",
            detail.join(", ")
        ),
    }
}

fn knn_accuracy(params: &HarmoniumParams, data: &MultiViewDataset, split_seed: u64) -> f64 {
    let (train, test) = train_test_split(data, 0.5, split_seed).unwrap();
    let a = extract_features(params, &train, Selection::All).unwrap();
    let b = extract_features(params, &test, Selection::All).unwrap();
    knn_classify(
        &a,
        &train.labels().unwrap(),
        &b,
        &test.labels().unwrap(),
        10,
    )
    .unwrap()
}

/// Verdict on the first seed; the other seeds are reported alongside.
fn feature_usefulness(runs: &[SeedRun]) -> Outcome {
    let mut verdicts = Vec::new();
    let mut detail = Vec::new();
    for run in runs {
        let cfg = run_config(run.seed);
        let split_seed = substream_seed(run.seed, Stream::Split);
        let sa = knn_accuracy(&run.params, &run.data, split_seed);
        let dwh_params = train_canonical(&cfg, &run.data, StructureMode::Dwh);
        let dwh = knn_accuracy(&dwh_params, &run.data, split_seed);
        let (above_floor, near_dwh) = (sa >= 0.60, sa >= dwh - 0.02);
        verdicts.push(above_floor && near_dwh);
        detail.push(format!(
            "seed {}: SA {sa:.3} DWH {dwh:.3} [{}{}]",
            run.seed,
            if above_floor {
                "floor ok"
            } else {
                "below 0.60"
            },
            if near_dwh { ", gap ok" } else { ", gap > 0.02" }
        ));
    }
    let all_clauses = verdicts.iter().filter(|&&v| v).count();
    Outcome {
        pass: verdicts[0],
        detail: format!(
            "10-NN on all units, judged on seed {} ({all_clauses}/{} seeds meet both clauses): {}",
            runs[0].seed,
            runs.len(),
            detail.join("; ")
        ),
    }
}

fn mode_reductions() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let mut sa_err = 0.0f64;
    let mut mvh_exact = true;
    for _ in 0..50 {
        let dwh = random_tiny_model(&[3, 4], 5, StructureKind::Dwh, &mut rng).unwrap();
        let data = random_binary_data(&dwh, 8, &mut rng);
        let mut sa = dwh.clone();
        sa.structure = StructureMode::Sa;
        sa.switches.fill(30.0);
        let mut mvh = dwh.clone();
        mvh.structure = StructureMode::Mvh {
            mask: ndarray::Array2::from_elem(dwh.switches.dim(), true),
        };

        let g_dwh = exact_gradient(&dwh, &data).unwrap();
        let g_sa = exact_gradient(&sa, &data).unwrap();
        let g_mvh = exact_gradient(&mvh, &data).unwrap();
        for r in dwh.param_refs().into_iter().filter(|r| r.group() != "s") {
            sa_err = sa_err.max((g_sa.get(r) - g_dwh.get(r)).abs());
            mvh_exact &= g_mvh.get(r) == g_dwh.get(r);
        }
        for x in &data {
            let (m_dwh, m_sa, m_mvh) = (
                dwh.posterior_hidden_mean(x).unwrap(),
                sa.posterior_hidden_mean(x).unwrap(),
                mvh.posterior_hidden_mean(x).unwrap(),
            );
            sa_err = (&m_sa - &m_dwh).iter().fold(sa_err, |m, d| m.max(d.abs()));
            mvh_exact &= m_mvh == m_dwh;
            let h = ndarray::Array1::from_shape_fn(dwh.hidden_dim, |_| {
                f64::from(u8::from(rng.random_bool(0.5)))
            });
            let (j_dwh, j_sa, j_mvh) = (
                dwh.unnormalized_log_joint(x, &h).unwrap(),
                sa.unnormalized_log_joint(x, &h).unwrap(),
                mvh.unnormalized_log_joint(x, &h).unwrap(),
            );
            sa_err = sa_err.max((j_sa - j_dwh).abs());
            mvh_exact &= j_mvh == j_dwh;
        }
    }
    Outcome {
        pass: sa_err <= 1e-9 && mvh_exact,
        detail: format!(
            "50 models: saturated SA max deviation {sa_err:.2e}, all-ones MVH {}",
            if mvh_exact {
                "bit-identical"
            } else {
                "differs"
            }
        ),
    }
}

fn samvh(out: &Path, args: &[&str]) {
    let status = Command::new(env!("CARGO_BIN_EXE_samvh"))
        .args(["--seed", "42", "--out"])
        .arg(out)
        .args(args)
        .stdout(std::process::Stdio::null())
        .status()
        .expect("binary runs");
    assert!(status.success(), "samvh {args:?} failed: {status}");
}

fn files_under(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.is_dir() {
            out.extend(files_under(&path));
        } else {
            out.push(path);
        }
    }
    out.sort();
    out
}

fn determinism() -> Outcome {
    let root = tempfile::tempdir().unwrap();
    let runs: Vec<PathBuf> = (0..2)
        .map(|i| root.path().join(format!("run{i}")))
        .collect();
    for out in &runs {
        samvh(out, &["gen-data"]);
        samvh(out, &["train"]);
        samvh(out, &["extract"]);
        samvh(out, &["eval-knn"]);
        samvh(out, &["render-filters"]);
    }
    let a = files_under(&runs[0]);
    let b = files_under(&runs[1]);
    let rel = |p: &PathBuf, base: &Path| p.strip_prefix(base).unwrap().to_path_buf();
    let same_names = a
        .iter()
        .map(|p| rel(p, &runs[0]))
        .eq(b.iter().map(|p| rel(p, &runs[1])));
    let differing: Vec<String> = a
        .iter()
        .zip(&b)
        .filter(|(x, y)| fs::read(x).unwrap() != fs::read(y).unwrap())
        .map(|(x, _)| rel(x, &runs[0]).display().to_string())
        .collect();
    let kinds = ["csv", "json", "pgm"].map(|ext| {
        a.iter()
            .filter(|p| p.extension().is_some_and(|e| e == ext))
            .count()
    });
    Outcome {
        pass: same_names && differing.is_empty() && kinds.iter().all(|&n| n > 0),
        detail: format!(
            "{} files compared ({} CSV, {} checkpoint, {} PGM), {} differ{}",
            a.len(),
            kinds[0],
            kinds[1],
            kinds[2],
            differing.len(),
            if differing.is_empty() {
                String::new()
            } else {
                format!(": {}", differing.join(", "))
            }
        ),
    }
}

fn main() {
    let mut all = true;

    let t = Instant::now();
    all &= report(
        1,
        "gradient exactness",
        t,
        Some(Duration::from_secs(30)),
        gradient_exactness(),
    );

    let t = Instant::now();
    all &= report(
        2,
        "likelihood ascent",
        t,
        Some(Duration::from_secs(60)),
        likelihood_ascent(),
    );

    let t = Instant::now();
    let runs = sa_runs();
    all &= report(
        3,
        "structure separation",
        t,
        Some(Duration::from_secs(600)),
        structure_separation(&runs),
    );

    let t = Instant::now();
    all &= report(4, "noise localization", t, None, noise_localization(&runs));

    let t = Instant::now();
    all &= report(5, "feature usefulness", t, None, feature_usefulness(&runs));

    let t = Instant::now();
    all &= report(6, "mode reductions", t, None, mode_reductions());

    let t = Instant::now();
    all &= report(7, "determinism", t, None, determinism());

    if !all {
        std::process::exit(1);
    }
}
