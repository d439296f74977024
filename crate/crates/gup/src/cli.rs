//! Subcommands of the `gup` binary.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use gup_core::augment::{augment_cross_spectral, AugmentSpec};
use gup_core::bench::{
    evaluate_pair, make_synthetic_rgb, make_synthetic_scene, observe, sweep_orders, Method, MetricReport, Scene,
    SceneKind,
};
use gup_core::features::{FeatureProvider, FeatureSource};
use gup_core::grad::{check_gradients, GradCheckConfig};
use gup_core::pipeline::{upsample, UpsampleOptions};
use gup_core::resample::{downsample, ScalePair};
use gup_core::train::{train_from, ModelParams, TrainConfig};
use gup_core::{DistanceOrder, FeatureMap};

use crate::checkpoint::{load_model, save_model};
use crate::dataset::{load_scene_dir, load_training_dir, save_scene, save_training_image, NamedScene};
use crate::feat::load_features;
use crate::pnm::{load_image, load_rgb, save_image, ImageFormat};

#[derive(Debug, Parser)]
#[command(name = "gup", version, about = "Guided upsampling with a graph-regularized least-squares solve")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Reconstruct a high-resolution image from a low-resolution one and a guide.
    Upsample(UpsampleArgs),
    /// Area-average an image by a (possibly fractional) factor.
    Downsample(DownsampleArgs),
    /// Score guided and baseline reconstructions on a scene directory.
    Eval(EvalArgs),
    /// Compare distance orders on a scene set.
    Sweep(SweepArgs),
    /// Render an RGB image into a cross-spectral guide/target pair.
    Augment(AugmentArgs),
    /// Fit lambda, eta and an optional feature transform.
    Train(TrainArgs),
    /// Compare analytic gradients with finite differences.
    Gradcheck(GradcheckArgs),
    /// Write synthetic scenes or training images.
    Synth(SynthArgs),
}

fn parse_order(s: &str) -> Result<DistanceOrder, String> {
    let o: f64 = s.parse().map_err(|_| format!("not a number: {s:?}"))?;
    DistanceOrder::new(o).map_err(|e| e.to_string())
}

fn parse_dims(s: &str) -> Result<(usize, usize), String> {
    let (h, w) = s.split_once('x').ok_or_else(|| format!("expected HxW, got {s:?}"))?;
    let parse = |t: &str| t.parse::<usize>().map_err(|_| format!("bad dimension {t:?}"));
    Ok((parse(h)?, parse(w)?))
}

fn parse_kind(s: &str) -> Result<SceneKind, String> {
    SceneKind::parse(s).ok_or_else(|| format!("unknown scene kind {s:?} (edges, gradient_blobs, checker)"))
}

#[derive(Debug, Args)]
pub struct UpsampleArgs {
    #[arg(long)]
    pub lowres: PathBuf,
    #[arg(long)]
    pub guide: PathBuf,
    /// Checkpoint; the untrained default model when absent.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Output image, `.pgm` for 16-bit PGM, anything else for PFM.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value = "1.5", value_parser = parse_order)]
    pub order: DistanceOrder,
    #[arg(long, default_value_t = gup_core::solve::DEFAULT_TOL)]
    pub tol: f64,
    /// Print `iter k residual r` per solver iteration to stderr.
    #[arg(long)]
    pub verbose: bool,
}

#[derive(Debug, Args)]
pub struct DownsampleArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub scale: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Baseline {
    Bicubic,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub scenes: PathBuf,
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "bicubic")]
    pub baseline: Baseline,
    #[arg(long)]
    pub report: PathBuf,
    /// Downscale factor for scenes without a stored low-resolution image.
    #[arg(long, default_value_t = 8.0)]
    pub scale: f64,
    #[arg(long, default_value = "1.5", value_parser = parse_order)]
    pub order: DistanceOrder,
}

#[derive(Debug, Args)]
pub struct SceneSetArgs {
    /// Scene directory; synthetic scenes are generated when absent.
    #[arg(long)]
    pub scenes: Option<PathBuf>,
    #[arg(long, default_value = "edges", value_parser = parse_kind)]
    pub kind: SceneKind,
    #[arg(long, default_value_t = 10)]
    pub count: usize,
    #[arg(long, default_value_t = 128)]
    pub size: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, value_delimiter = ',', default_value = "1,1.5,2,4,10", value_parser = parse_order)]
    pub orders: Vec<DistanceOrder>,
    #[command(flatten)]
    pub set: SceneSetArgs,
    #[arg(long, default_value_t = 8.0)]
    pub scale: f64,
    /// One checkpoint for every order, or one per order in the same sequence.
    #[arg(long, value_delimiter = ',')]
    pub model: Vec<PathBuf>,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AugmentArgs {
    /// RGB input (PPM; gray formats are replicated).
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 6)]
    pub anchors: usize,
    #[arg(long)]
    pub guide: PathBuf,
    #[arg(long)]
    pub target: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value_t = 200)]
    pub steps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value = "intensity_gradient")]
    pub provider: FeatureProvider,
    /// Output channels of a learnable feature transform.
    #[arg(long)]
    pub transform: Option<usize>,
    #[arg(long, default_value_t = 1e-4)]
    pub lr: f64,
    #[arg(long, default_value_t = 64)]
    pub patch: usize,
    #[arg(long, default_value_t = 8.0)]
    pub scale: f64,
    #[arg(long, default_value = "1.5", value_parser = parse_order)]
    pub order: DistanceOrder,
    /// CSV of the per-step loss.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "1.5", value_parser = parse_order)]
    pub order: DistanceOrder,
    #[arg(long, default_value = "8x8", value_parser = parse_dims)]
    pub hi: (usize, usize),
    #[arg(long, default_value = "4x4", value_parser = parse_dims)]
    pub lo: (usize, usize),
    #[arg(long, default_value_t = 3)]
    pub channels: usize,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value = "edges", value_parser = parse_kind)]
    pub kind: SceneKind,
    #[arg(long, default_value_t = 10)]
    pub count: usize,
    #[arg(long, default_value_t = 128)]
    pub size: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write RGB training images instead of guide/truth pairs.
    #[arg(long)]
    pub rgb: bool,
}

pub fn run(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Upsample(a) => cmd_upsample(a, out, err),
        Command::Downsample(a) => cmd_downsample(a),
        Command::Eval(a) => cmd_eval(a, out),
        Command::Sweep(a) => cmd_sweep(a, out),
        Command::Augment(a) => cmd_augment(a),
        Command::Train(a) => cmd_train(a, out),
        Command::Gradcheck(a) => cmd_gradcheck(a, out),
        Command::Synth(a) => cmd_synth(a),
    }
}

fn model_or_default(path: Option<&Path>) -> Result<ModelParams> {
    match path {
        Some(p) => load_model(p).with_context(|| format!("loading model {}", p.display())),
        None => Ok(ModelParams::default()),
    }
}

fn write_image(img: &gup_core::Image, path: &Path) -> Result<()> {
    save_image(img, path, ImageFormat::from_path(path)).with_context(|| format!("writing {}", path.display()))
}

fn read_image(path: &Path) -> Result<gup_core::Image> {
    load_image(path).with_context(|| format!("reading {}", path.display()))
}

fn cmd_upsample(a: UpsampleArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let lowres = read_image(&a.lowres)?;
    let guide = read_image(&a.guide)?;
    let model = model_or_default(a.model.as_deref())?;
    let external: Option<FeatureMap> = match &model.provider {
        FeatureProvider::External(p) => Some(load_features(p).with_context(|| format!("reading features {p}"))?),
        _ => None,
    };
    let source = match &external {
        Some(map) => FeatureSource::External(map),
        None => FeatureSource::builtin(&model.provider).expect("built-in provider"),
    };
    let opts = UpsampleOptions { order: a.order, tol: a.tol, max_iter: None };
    let mut write_err = Ok(());
    let mut log_iter = |k: usize, r: f64| {
        if write_err.is_ok() {
            write_err = writeln!(err, "iter {k} residual {r:e}");
        }
    };
    let observer: Option<&mut dyn FnMut(usize, f64)> = if a.verbose { Some(&mut log_iter) } else { None };
    let res = upsample(&lowres, &guide, &model, source, &opts, observer)?;
    write_err?;
    if !res.converged {
        log::warn!("solver stopped after {} iterations at residual {:e}", res.iterations, res.relative_residual);
    }
    write_image(&res.image, &a.out)?;
    writeln!(
        out,
        "iterations {} residual {:e} objective {:e} converged {}",
        res.iterations, res.relative_residual, res.objective, res.converged
    )?;
    Ok(())
}

fn cmd_downsample(a: DownsampleArgs) -> Result<()> {
    let img = read_image(&a.input)?;
    let scale = ScalePair::from_factor(img.height(), img.width(), a.scale)?;
    write_image(&downsample(&img, scale.lo_height, scale.lo_width)?, &a.out)
}

fn builtin_source(model: &ModelParams) -> Result<FeatureSource<'static>> {
    match FeatureSource::builtin(&model.provider) {
        Some(s) => Ok(s),
        None => bail!("scene sets need a built-in feature provider, the model uses {}", model.provider),
    }
}

fn lowres_for(scene: &NamedScene, factor: f64) -> Result<gup_core::Image> {
    match &scene.lowres {
        Some(lo) => Ok(lo.clone()),
        None => Ok(observe(&scene.scene.truth, factor)?),
    }
}

fn cmd_eval(a: EvalArgs, out: &mut dyn Write) -> Result<()> {
    let scenes = load_scene_dir(&a.scenes).with_context(|| format!("reading scenes from {}", a.scenes.display()))?;
    let model = model_or_default(a.model.as_deref())?;
    let guided = Method::Guided {
        model: &model,
        source: builtin_source(&model)?,
        options: UpsampleOptions { order: a.order, ..Default::default() },
    };
    let baseline = match a.baseline {
        Baseline::Bicubic => Method::Bicubic,
    };
    let mut csv = String::from("scene,method,psnr_db,ssim\n");
    let mut sums = [Vec::new(), Vec::new()];
    for s in &scenes {
        let lo = lowres_for(s, a.scale)?;
        for (k, method) in [&baseline, &guided].into_iter().enumerate() {
            let r = evaluate_pair(&lo, &s.scene.guide, &s.scene.truth, method)
                .with_context(|| format!("evaluating scene {}", s.name))?;
            csv.push_str(&format!("{},{},{:.6},{:.6}\n", s.name, method.name(), r.psnr_db, r.ssim));
            sums[k].push(r);
        }
    }
    fs::write(&a.report, csv).with_context(|| format!("writing {}", a.report.display()))?;
    for (method, reports) in [&baseline, &guided].iter().zip(&sums) {
        let m = MetricReport::mean(reports);
        writeln!(out, "{} mean psnr_db {:.4} ssim {:.4}", method.name(), m.psnr_db, m.ssim)?;
    }
    Ok(())
}

fn scene_set(set: &SceneSetArgs) -> Result<Vec<Scene>> {
    match &set.scenes {
        Some(dir) => Ok(load_scene_dir(dir)?.into_iter().map(|s| s.scene).collect()),
        None => (0..set.count as u64)
            .map(|k| Ok(make_synthetic_scene(set.kind, set.size, set.seed + k)?))
            .collect(),
    }
}

fn cmd_sweep(a: SweepArgs, out: &mut dyn Write) -> Result<()> {
    ensure!(!a.orders.is_empty(), "at least one order is required");
    let scenes = scene_set(&a.set)?;
    let models: Vec<ModelParams> = match a.model.len() {
        0 => vec![ModelParams::default(); a.orders.len()],
        1 => vec![model_or_default(Some(&a.model[0]))?; a.orders.len()],
        n if n == a.orders.len() => a.model.iter().map(|p| model_or_default(Some(p))).collect::<Result<_>>()?,
        n => bail!("got {n} models for {} orders", a.orders.len()),
    };
    let rows = sweep_orders(&scenes, a.scale, &a.orders, &models)?;
    let mut csv = String::from("order,psnr_db,ssim\n");
    for r in &rows {
        csv.push_str(&format!("{},{:.6},{:.6}\n", r.order.get(), r.psnr_db, r.ssim));
    }
    out.write_all(csv.as_bytes())?;
    if let Some(path) = &a.report {
        fs::write(path, csv).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn cmd_augment(a: AugmentArgs) -> Result<()> {
    let rgb = load_rgb(&a.input).with_context(|| format!("reading {}", a.input.display()))?;
    let (guide, target) = augment_cross_spectral(&rgb, &AugmentSpec { anchor_count: a.anchors, seed: a.seed })?;
    write_image(&guide, &a.guide)?;
    write_image(&target, &a.target)
}

fn cmd_train(a: TrainArgs, out: &mut dyn Write) -> Result<()> {
    let data = load_training_dir(&a.data).with_context(|| format!("reading training images from {}", a.data.display()))?;
    let config = TrainConfig {
        learning_rate: a.lr,
        steps: a.steps,
        patch_size: a.patch,
        scale_factor: a.scale,
        seed: a.seed,
        order: a.order,
        ..TrainConfig::default()
    };
    let mut init = ModelParams::new(gup_core::train::DEFAULT_LAMBDA, gup_core::train::DEFAULT_ETA, a.provider);
    if let Some(k) = a.transform {
        init = init.with_transform(k)?;
    }
    let outcome = train_from(&data, &config, init)?;
    save_model(&outcome.best, &a.out).with_context(|| format!("writing {}", a.out.display()))?;
    if let Some(path) = &a.trace {
        let mut csv = String::from("step,loss\n");
        for (k, l) in outcome.trace.iter().enumerate() {
            csv.push_str(&format!("{k},{l:e}\n"));
        }
        fs::write(path, csv).with_context(|| format!("writing {}", path.display()))?;
    }
    writeln!(
        out,
        "steps {} failed {} initial_smoothed {:e} final_smoothed {:e} best_step {} lambda {} eta {}",
        outcome.trace.len(),
        outcome.failed_steps,
        outcome.initial_smoothed(),
        outcome.final_smoothed(),
        outcome.best_step,
        outcome.best.lambda(),
        outcome.best.eta()
    )?;
    Ok(())
}

fn cmd_gradcheck(a: GradcheckArgs, out: &mut dyn Write) -> Result<()> {
    let cfg = GradCheckConfig {
        seed: a.seed,
        hi_height: a.hi.0,
        hi_width: a.hi.1,
        lo_height: a.lo.0,
        lo_width: a.lo.1,
        channels: a.channels,
        order: a.order,
        ..GradCheckConfig::default()
    };
    let report = check_gradients(&cfg)?;
    for g in &report.groups {
        writeln!(out, "{}", g.line())?;
    }
    ensure!(report.passed(), "gradient check failed");
    Ok(())
}

fn cmd_synth(a: SynthArgs) -> Result<()> {
    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    for k in 0..a.count {
        let name = format!("{}_{k:03}", a.kind.name());
        let seed = a.seed + k as u64;
        if a.rgb {
            save_training_image(&a.out, &name, &make_synthetic_rgb(a.kind, a.size, seed)?)?;
        } else {
            save_scene(&a.out, &name, &make_synthetic_scene(a.kind, a.size, seed)?)?;
        }
    }
    Ok(())
}
