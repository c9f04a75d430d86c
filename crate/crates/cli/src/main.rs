mod signal;

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{ArgAction, Args, Parser, Subcommand};
use tinct::descent1d::{steep_desc, Descent1DConfig};
use tinct::descent2d::Descent2DConfig;
use tinct::gabor::{spectrogram, stft_real, GaborFrame};
use tinct::image::{ColorImage, ObservedScene};
use tinct::io::{load_color, load_mask, load_scene_dir, numbered_path, save_image, save_scene_dir};
use tinct::pipeline::{
    disk_mask, distort, initial_guess, quality, run_combined_observed, synthetic_truth,
    PipelineConfig, QualityReport, StageEvent,
};
use tinct::projection::{estimate, parse_projection_table, Curve, NonlinearProjection, DEFAULT_BINS};
use tinct::voronoi::{estimation_pairs, restore_observed, RestoreParams};

/// Color restoration from gray levels and sparse color fragments.
#[derive(Parser)]
#[command(name = "tinct", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic truth image and a disk fragment mask.
    Synth(SynthArgs),
    /// Build a scene directory from a truth image and a mask.
    Distort(DistortArgs),
    /// Fit the gray-level projection on the scene's fragments.
    Estim(EstimArgs),
    /// Voronoi interpolation with gray-consistency thresholding.
    RestoreInterp(InterpArgs),
    /// Descent on the variational functional alone.
    RestorePde(PdeArgs),
    /// A few interpolation passes followed by the descent.
    RestoreCombined(CombinedArgs),
    /// One-dimensional recovery of a distorted gap.
    #[command(name = "restore-1d")]
    Restore1d(Restore1dArgs),
    /// Spectrogram of a signal under a tight Hann frame.
    Gabor(GaborArgs),
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 64)]
    width: usize,
    #[arg(long, default_value_t = 64)]
    height: usize,
    /// Flat luminance patches in the truth.
    #[arg(long, default_value_t = 12)]
    patches: usize,
    #[arg(long, default_value_t = 8)]
    disks: usize,
    #[arg(long, default_value_t = 3)]
    radius: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    truth: PathBuf,
    #[arg(long)]
    mask: PathBuf,
}

#[derive(Args)]
struct DistortArgs {
    #[arg(long)]
    truth: PathBuf,
    #[arg(long)]
    mask: PathBuf,
    /// `mean`, `fig8` (mean weights, quartic curve) or `table:<file>`.
    #[arg(long, default_value = "mean")]
    proj: String,
    #[arg(long)]
    out_scene: PathBuf,
}

#[derive(Args)]
struct EstimArgs {
    #[arg(long)]
    scene: PathBuf,
    #[arg(long, default_value_t = DEFAULT_BINS)]
    bins: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ThresholdArgs {
    /// Threshold scale `c` in `c · σ`.
    #[arg(long = "c", default_value_t = 2.0)]
    c: f64,
    /// Floor on the threshold; one 8-bit step by default.
    #[arg(long, default_value_t = 1.0 / 255.0)]
    min_threshold: f64,
    #[arg(long, default_value_t = DEFAULT_BINS)]
    bins: usize,
}

impl ThresholdArgs {
    fn params(&self, max_outer_iters: usize) -> RestoreParams {
        RestoreParams {
            threshold_scale: self.c,
            min_threshold: self.min_threshold,
            estim_bins: self.bins,
            max_outer_iters,
            ..Default::default()
        }
    }
}

#[derive(Args)]
struct InterpArgs {
    #[arg(long)]
    scene: PathBuf,
    #[command(flatten)]
    threshold: ThresholdArgs,
    #[arg(long, default_value_t = 10_000)]
    max_iters: usize,
    #[arg(long)]
    out: PathBuf,
    /// Write the mask after every pass.
    #[arg(long)]
    dump_dir: Option<PathBuf>,
    #[arg(long)]
    truth: Option<PathBuf>,
}

#[derive(Args)]
struct DescentArgs {
    #[arg(long)]
    scene: PathBuf,
    #[arg(long, default_value_t = 0.1)]
    dt: f64,
    #[arg(long, default_value_t = 10.0)]
    lambda: f64,
    #[arg(long, default_value_t = 10.0)]
    mu: f64,
    #[arg(long, default_value_t = 300)]
    sweeps: usize,
    /// Scale the curvature by the gradient magnitude.
    #[arg(long, action = ArgAction::Set, default_value_t = true)]
    modified: bool,
    #[arg(long)]
    out: PathBuf,
    /// Reference image; defaults to the scene's `truth.p6`.
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Write the iterate every n sweeps (0 disables).
    #[arg(long, default_value_t = 0)]
    dump_every: usize,
    /// Directory for dumps; defaults to the output's directory.
    #[arg(long)]
    dump_dir: Option<PathBuf>,
    /// Use this projection instead of the fitted one.
    #[arg(long)]
    proj: Option<String>,
    /// Write `sweep max_residual psnr` columns.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct PdeArgs {
    #[command(flatten)]
    descent: DescentArgs,
    #[arg(long, default_value_t = DEFAULT_BINS)]
    bins: usize,
}

#[derive(Args)]
struct CombinedArgs {
    #[command(flatten)]
    descent: DescentArgs,
    #[arg(long, default_value_t = 3)]
    interp_iters: usize,
    #[command(flatten)]
    threshold: ThresholdArgs,
}

#[derive(Args)]
struct Restore1dArgs {
    #[arg(long)]
    signal: PathBuf,
    /// `fig8` (quartic) or `identity`.
    #[arg(long, default_value = "fig8")]
    curve: String,
    #[arg(long, default_value_t = 0.1)]
    dt: f64,
    #[arg(long, default_value_t = 10.0)]
    lambda: f64,
    #[arg(long, default_value_t = 10.0)]
    mu: f64,
    #[arg(long, default_value_t = 10_000)]
    sweeps: usize,
    #[arg(long, default_value_t = 1e-6)]
    eps_stop: f64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct GaborArgs {
    #[arg(long)]
    signal: PathBuf,
    #[arg(long, default_value_t = 8)]
    hop: usize,
    #[arg(long, default_value_t = 16)]
    bins: usize,
    #[arg(long)]
    spectrogram: PathBuf,
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Synth(a) => synth(a),
        Command::Distort(a) => run_distort(a),
        Command::Estim(a) => estim(a),
        Command::RestoreInterp(a) => restore_interp(a),
        Command::RestorePde(a) => {
            let restore = RestoreParams {
                estim_bins: a.bins,
                ..Default::default()
            };
            restore_descent(&a.descent, 0, restore)
        }
        Command::RestoreCombined(a) => {
            let restore = a.threshold.params(a.interp_iters.max(1));
            restore_descent(&a.descent, a.interp_iters, restore)
        }
        Command::Restore1d(a) => restore_1d(a),
        Command::Gabor(a) => gabor(a),
    }
}

fn parse_proj(name: &str) -> Result<NonlinearProjection> {
    match name {
        "mean" => Ok(NonlinearProjection::mean()),
        "fig8" => Ok(NonlinearProjection::new([1.0 / 3.0; 3], Curve::Quartic)?),
        _ => match name.strip_prefix("table:") {
            Some(path) => {
                let text = fs::read_to_string(path).with_context(|| format!("reading {path}"))?;
                Ok(parse_projection_table(&text).with_context(|| format!("parsing {path}"))?)
            }
            None => bail!("unknown projection {name:?}; expected mean, fig8 or table:<file>"),
        },
    }
}

fn parse_curve(name: &str) -> Result<Curve> {
    match name {
        "fig8" => Ok(Curve::Quartic),
        "identity" => Ok(Curve::Identity),
        _ => bail!("unknown curve {name:?}; expected fig8 or identity"),
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn load_scene(dir: &Path, truth: Option<&Path>) -> Result<(ObservedScene, Option<ColorImage>)> {
    let (scene, dir_truth) =
        load_scene_dir(dir).with_context(|| format!("loading scene {}", dir.display()))?;
    let truth = match truth {
        Some(p) => Some(load_color(p)?),
        None => dir_truth,
    };
    Ok((scene, truth))
}

fn report(label: &str, q: &QualityReport) {
    if q.is_exact() {
        println!("{label}: exact (rmse 0)");
    } else {
        println!("{label}: psnr {:.3} dB, rmse {:.6}", q.psnr_db(), q.rmse);
    }
}

fn synth(a: SynthArgs) -> Result<()> {
    let truth = synthetic_truth(a.width, a.height, a.patches, a.seed)?;
    let mask = disk_mask(a.width, a.height, a.disks, a.radius, a.seed.wrapping_add(100))?;
    save_image(&truth, &a.truth)?;
    save_image(&mask, &a.mask)?;
    Ok(())
}

fn run_distort(a: DistortArgs) -> Result<()> {
    let truth = load_color(&a.truth)?;
    let mask = load_mask(&a.mask)?;
    let scene = distort(&truth, &mask, &parse_proj(&a.proj)?)?;
    save_scene_dir(&scene, Some(&truth), &a.out_scene)?;
    Ok(())
}

fn estim(a: EstimArgs) -> Result<()> {
    let (scene, _) = load_scene(&a.scene, None)?;
    let fit = estimate(&estimation_pairs(&scene), a.bins)?;
    let w = fit.projection.weights();
    println!(
        "weights {:.4} {:.4} {:.4}, variance {:.3e}, {} samples",
        w[0], w[1], w[2], fit.variance, fit.sample_count
    );
    write_text(&a.out, &fit.to_text())
}

fn restore_interp(a: InterpArgs) -> Result<()> {
    let (scene, truth) = load_scene(&a.scene, a.truth.as_deref())?;
    if let Some(dir) = &a.dump_dir {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let params = a.threshold.params(a.max_iters);
    let out = restore_observed(&scene, &params, |iteration, mask| {
        if let Some(dir) = &a.dump_dir {
            save_image(mask, numbered_path(dir, "mask", iteration, "p5"))?;
        }
        Ok(())
    })?;
    let image = initial_guess(&out.colors, &out.mask, scene.gray(), &out.fit.projection)?;
    save_image(&image, &a.out)?;
    println!(
        "{} passes{}, known pixels {:?}",
        out.iterations,
        if out.cap_reached { " (cap reached)" } else { "" },
        out.accepted_history
    );
    if let Some(t) = truth {
        report("interpolation", &quality(&image, &t, scene.mask())?);
    }
    Ok(())
}

fn restore_descent(a: &DescentArgs, interp_iters: usize, restore: RestoreParams) -> Result<()> {
    let (scene, truth) = load_scene(&a.scene, a.truth.as_deref())?;
    let cfg = PipelineConfig {
        interp_iters,
        restore,
        descent: Descent2DConfig {
            mu: a.mu,
            lambda: a.lambda,
            dt: a.dt,
            max_iters: a.sweeps,
            modified: a.modified,
            ..Default::default()
        },
        dump_every: a.dump_every,
        projection_override: a.proj.as_deref().map(parse_proj).transpose()?,
        ..Default::default()
    };
    let dump_dir = match &a.dump_dir {
        Some(d) => d.clone(),
        None => a.out.parent().map(Path::to_path_buf).unwrap_or_default(),
    };
    if a.dump_every > 0 && !dump_dir.as_os_str().is_empty() {
        fs::create_dir_all(&dump_dir).with_context(|| format!("creating {}", dump_dir.display()))?;
    }
    let out = run_combined_observed(&scene, &cfg, truth.as_ref(), |event| match event {
        StageEvent::Interpolation { iteration, mask } => {
            if a.dump_every > 0 {
                save_image(mask, numbered_path(&dump_dir, "mask", iteration, "p5"))?;
            }
            Ok(())
        }
        StageEvent::Descent { sweep, image } => {
            save_image(image, numbered_path(&dump_dir, "sweep", sweep, "p6"))
        }
    })?;
    save_image(&out.image, &a.out)?;

    let w = out.fit.projection.weights();
    println!(
        "{} interpolation passes, fitted weights {:.4} {:.4} {:.4}",
        out.interp_iterations, w[0], w[1], w[2]
    );
    println!(
        "{} sweeps, {}converged, {} clamped updates",
        out.descent.iterations,
        if out.descent.converged { "" } else { "not " },
        out.descent.clamp_count
    );
    if let Some(t) = &truth {
        report("initial guess", &quality(&out.initial_guess, t, scene.mask())?);
    }
    if let Some(q) = &out.quality {
        report("result", q);
    }
    if let Some(path) = &a.trace {
        let mut text = String::from("# sweep max_residual psnr\n");
        for (i, r) in out.descent.trace.iter().enumerate() {
            let psnr = i
                .checked_sub(1)
                .and_then(|k| out.psnr_trace.get(k))
                .map_or_else(|| "-".to_string(), |p| p.to_string());
            text.push_str(&format!("{i} {r} {psnr}\n"));
        }
        write_text(path, &text)?;
    }
    Ok(())
}

fn restore_1d(a: Restore1dArgs) -> Result<()> {
    let text = fs::read_to_string(&a.signal)
        .with_context(|| format!("reading {}", a.signal.display()))?;
    let signal = signal::parse(&text)?.into_signal()?;
    let curve = parse_curve(&a.curve)?;
    let cfg = Descent1DConfig {
        mu: a.mu,
        lambda: a.lambda,
        dt: a.dt,
        eps_stop: a.eps_stop,
        max_iters: a.sweeps,
        ..Default::default()
    };
    let v0 = signal.linear_gap_fill();
    let out = steep_desc(&curve, &signal, &v0, &cfg)
        .with_context(|| format!("descent with --dt {} failed; a smaller step may help", a.dt))?;
    write_text(&a.out, &signal::format_restored(&signal, &v0, &out.values))?;
    if let Some(path) = &a.trace {
        write_text(path, &signal::format_trace(&out.trace))?;
    }
    println!(
        "{} sweeps, {}converged, final max residual {:.3e}",
        out.iterations,
        if out.converged { "" } else { "not " },
        out.trace.last().copied().unwrap_or(0.0)
    );
    Ok(())
}

fn gabor(a: GaborArgs) -> Result<()> {
    let text = fs::read_to_string(&a.signal)
        .with_context(|| format!("reading {}", a.signal.display()))?;
    let samples = signal::parse(&text)?.values;
    let frame = GaborFrame::hann(samples.len(), a.hop, a.bins)?;
    let img = spectrogram(&stft_real(&frame, &samples));
    save_image(&img, &a.spectrogram)?;
    println!("{} shifts x {} bins", img.width(), img.height());
    Ok(())
}
