//! The `samvh` command-line pipeline.
//!
//! Exit codes: 0 success, 2 configuration error, 3 I/O error, 4 training
//! divergence, 5 gradient-check failure.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::checkpoint::Checkpoint;
use crate::config::{substream_seed, RunConfig, Stream};
use crate::data::{
    generate_synthetic_paired, load_multiview_csv_with, read_dataset_dir, train_test_split,
    write_dataset_dir, LoadOptions, MultiViewDataset,
};
use crate::error::{Error, Result};
use crate::eval::{export_filter_images, extract_features, knn_sweep, CONNECT_THRESHOLD};
use crate::model::HarmoniumParams;
use crate::training::gradcheck::run_grad_check;
use crate::training::Trainer;

#[derive(Debug, Parser)]
#[command(
    name = "samvh",
    version,
    about = "Structure-adapting multi-view harmoniums"
)]
pub struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for per-sample work.
    #[arg(long, global = true, default_value_t = 1)]
    pub threads: usize,
    /// Root directory for all outputs.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate the synthetic paired-glyph dataset into `<out>/data`.
    GenData,
    /// Train a model and write `<out>/checkpoint.json` and `<out>/train_log.csv`.
    Train {
        #[command(flatten)]
        data: DataArgs,
        /// Continue from a checkpoint, optimizer state included.
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Compare exact and finite-difference gradients on random tiny models.
    GradCheck {
        /// Negate one gradient group to confirm the check can fail.
        #[arg(long, hide = true)]
        corrupt_gradient: bool,
    },
    /// Write posterior hidden means to `<out>/features.csv`.
    Extract {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// `all`, `shared` or `specific:<view>`; overrides the configuration.
        #[arg(long)]
        selection: Option<String>,
    },
    /// Split the data, extract features and run the k-NN sweep.
    EvalKnn {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        selection: Option<String>,
    },
    /// Write filter images for every square view to `<out>/filters`.
    RenderFilters {
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Only this view.
        #[arg(long)]
        view: Option<usize>,
    },
}

#[derive(Debug, clap::Args)]
pub struct DataArgs {
    /// Dataset directory with a manifest (default `<out>/data`).
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// View CSV files, in order, instead of a dataset directory.
    #[arg(long = "view", conflicts_with = "data")]
    pub views: Vec<PathBuf>,
    /// Label file for `--view` inputs.
    #[arg(long, requires = "views")]
    pub labels: Option<PathBuf>,
}

/// Parses arguments, runs the command, and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    if cli.threads > 0 {
        // Fails only if the pool already exists (e.g. in-process tests).
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global();
    }
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if cli.seed.is_some() {
        cfg.seed = cli.seed;
    }
    Ok(cfg)
}

pub fn execute(cli: &Cli) -> Result<()> {
    let cfg = load_config(cli)?;
    let out = cli.out.as_path();
    match &cli.command {
        Command::GenData => cmd_gen_data(&cfg, out),
        Command::Train { data, resume } => cmd_train(&cfg, data, resume.as_deref(), out),
        Command::GradCheck { corrupt_gradient } => cmd_grad_check(&cfg, *corrupt_gradient),
        Command::Extract {
            data,
            checkpoint,
            selection,
        } => cmd_extract(&cfg, data, checkpoint.as_deref(), selection.as_deref(), out),
        Command::EvalKnn {
            data,
            checkpoint,
            selection,
        } => cmd_eval_knn(&cfg, data, checkpoint.as_deref(), selection.as_deref(), out),
        Command::RenderFilters { checkpoint, view } => {
            cmd_render_filters(&cfg, checkpoint.as_deref(), *view, out)
        }
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn cmd_gen_data(cfg: &RunConfig, out: &Path) -> Result<()> {
    let synth = cfg.synth_config()?;
    let data = generate_synthetic_paired(&synth)?;
    let dir = out.join("data");
    let written = write_dataset_dir(&data, &dir, Some(synth.seed))?;
    println!("wrote {} samples to {}", data.len(), dir.display());
    for p in written {
        log::info!("wrote {}", p.display());
    }
    Ok(())
}

fn load_data(cfg: &RunConfig, args: &DataArgs, out: &Path) -> Result<MultiViewDataset> {
    if args.views.is_empty() {
        let dir = args.data.clone().unwrap_or_else(|| out.join("data"));
        return read_dataset_dir(&dir);
    }
    let mut options = LoadOptions::default();
    if let Some(views) = &cfg.model.views {
        if views.len() != args.views.len() {
            return Err(Error::Config(format!(
                "model.views lists {} views but {} files were given",
                views.len(),
                args.views.len()
            )));
        }
        options.families = Some(views.iter().map(|v| v.family).collect());
        if views.iter().all(|v| v.name.is_some()) {
            options.names = Some(views.iter().filter_map(|v| v.name.clone()).collect());
        }
    }
    load_multiview_csv_with(&args.views, args.labels.as_deref(), &options)
}

fn fresh_params(cfg: &RunConfig, data: &MultiViewDataset) -> Result<HarmoniumParams> {
    let m = &cfg.model;
    let mut rng = ChaCha8Rng::seed_from_u64(substream_seed(cfg.require_seed()?, Stream::Init));
    HarmoniumParams::init_random(
        data.views.clone(),
        m.hidden_dim,
        m.hidden_family,
        m.structure_mode(data.views.len())?,
        m.init_scale,
        &mut rng,
    )
}

pub fn cmd_train(
    cfg: &RunConfig,
    args: &DataArgs,
    resume: Option<&Path>,
    out: &Path,
) -> Result<()> {
    let data = load_data(cfg, args, out)?;
    let train_cfg = cfg.train_config()?;
    let mut trainer = match resume {
        Some(path) => {
            let ckpt = Checkpoint::load(path)?;
            match ckpt.trainer {
                Some(state) => Trainer::resume(ckpt.params, state, train_cfg.clone())?,
                None => Trainer::new(ckpt.params, train_cfg.clone())?,
            }
        }
        None => Trainer::new(fresh_params(cfg, &data)?, train_cfg.clone())?,
    };
    data.check_against(&trainer.params.views)?;
    let log = trainer.run(&data.samples, train_cfg.epochs)?;
    let num_views = trainer.params.num_views();
    let report = trainer.params.structure_report(CONNECT_THRESHOLD);
    let (params, state) = trainer.into_parts();
    create_dir(out)?;
    Checkpoint {
        params,
        trainer: Some(state),
    }
    .save(&out.join("checkpoint.json"))?;
    write_text(&out.join("train_log.csv"), &log.to_csv(num_views))?;
    println!("{}", report.summary_line());
    Ok(())
}

pub fn cmd_grad_check(cfg: &RunConfig, corrupt: bool) -> Result<()> {
    let gc = &cfg.grad_check;
    let seed = substream_seed(cfg.seed.unwrap_or(0), Stream::GradCheck);
    let report = run_grad_check(gc, seed, corrupt)?;
    println!(
        "{} models, views {:?}, {} hidden, structure {:?}",
        gc.models, gc.dims, gc.hidden, gc.structure
    );
    println!("{:<8} {:>14} {:>14}", "group", "max_rel_err", "max_abs_err");
    for g in &report.groups {
        if g.skipped {
            println!("{:<8} {:>14} {:>14}", g.group, "skipped", "skipped");
        } else {
            println!(
                "{:<8} {:>14.3e} {:>14.3e}",
                g.group, g.max_rel_err, g.max_abs_err
            );
        }
    }
    if report.passed() {
        println!(
            "ok: all components within rel {:e} / abs {:e}",
            gc.rel_tol, gc.abs_tol
        );
        return Ok(());
    }
    let worst = report
        .worst
        .as_ref()
        .or(report.failures.first())
        .expect("failures exist");
    Err(Error::CheckFailed(format!(
        "{} components out of tolerance; worst {} in model {}: exact {:e} vs finite difference {:e}",
        report.failures.len(),
        worst.param,
        worst.model,
        worst.exact,
        worst.finite_diff
    )))
}

fn checkpoint_path(path: Option<&Path>, out: &Path) -> PathBuf {
    path.map_or_else(|| out.join("checkpoint.json"), Path::to_path_buf)
}

pub fn cmd_extract(
    cfg: &RunConfig,
    args: &DataArgs,
    checkpoint: Option<&Path>,
    selection: Option<&str>,
    out: &Path,
) -> Result<()> {
    let params = Checkpoint::load(&checkpoint_path(checkpoint, out))?.params;
    let data = load_data(cfg, args, out)?;
    let selection = match selection {
        Some(s) => s.parse()?,
        None => cfg.eval.selection()?,
    };
    let features = extract_features(&params, &data, selection)?;
    create_dir(out)?;
    write_text(&out.join("features.csv"), &features.to_csv())?;
    if let Some(labels) = data.labels() {
        let text: String = labels.iter().map(|l| format!("{l}\n")).collect();
        write_text(&out.join("feature_labels.csv"), &text)?;
    }
    println!(
        "extracted {} x {} features ({selection})",
        features.rows(),
        features.columns.len()
    );
    Ok(())
}

pub fn cmd_eval_knn(
    cfg: &RunConfig,
    args: &DataArgs,
    checkpoint: Option<&Path>,
    selection: Option<&str>,
    out: &Path,
) -> Result<()> {
    let params = Checkpoint::load(&checkpoint_path(checkpoint, out))?.params;
    let data = load_data(cfg, args, out)?;
    if !data.labels_present {
        return Err(Error::Config("k-NN evaluation needs labels".into()));
    }
    let selection = match selection {
        Some(s) => s.parse()?,
        None => cfg.eval.selection()?,
    };
    let split_seed = substream_seed(cfg.require_seed()?, Stream::Split);
    let (train, test) = train_test_split(&data, cfg.eval.test_fraction, split_seed)?;
    let train_x = extract_features(&params, &train, selection)?;
    let test_x = extract_features(&params, &test, selection)?;
    let table = knn_sweep(
        &train_x,
        &train.labels().unwrap_or_default(),
        &test_x,
        &test.labels().unwrap_or_default(),
        &cfg.eval.ks,
    )?;
    create_dir(out)?;
    write_text(&out.join("knn.csv"), &table.to_csv())?;
    print!("{}", table.to_text());
    Ok(())
}

pub fn cmd_render_filters(
    cfg: &RunConfig,
    checkpoint: Option<&Path>,
    view: Option<usize>,
    out: &Path,
) -> Result<()> {
    let params = Checkpoint::load(&checkpoint_path(checkpoint, out))?.params;
    let dir = out.join("filters");
    let views: Vec<usize> = match view {
        Some(v) => vec![v],
        None => (0..params.num_views()).collect(),
    };
    for v in views {
        let export = export_filter_images(&params, v, &dir, cfg.eval.grid_cols)?;
        for p in &export.written {
            println!("wrote {}", p.display());
        }
        for s in &export.skipped {
            println!("view {v}: no {s} units");
        }
    }
    Ok(())
}
