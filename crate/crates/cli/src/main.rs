//! `gsc`: render, relight, fit, solve lights, and benchmark Gaussian
//! shadow-casting scenes from the command line.
//!
//! Exit codes: 0 success, 1 usage error, 2 runtime failure. All outputs are
//! deterministic for a fixed seed; the thread count (`GSC_THREADS`, 0 =
//! auto) never changes results.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use gsc_core::bench::bench_shadows;
use gsc_core::body::pose_gaussians;
use gsc_core::envmap::EnvironmentMap;
use gsc_core::field::TargetDensityField;
use gsc_core::fit::{fit, init_body_along_bones, FitConfig, Schedule};
use gsc_core::gaussian::PreparedGaussian;
use gsc_core::img::{read_png, read_png_raw, ImageRgb};
use gsc_core::light::{solve, LightParams, Reference, SolveConfig};
use gsc_core::math::{angle_between_degrees, Vec3};
use gsc_core::metrics::psnr;
use gsc_core::pfm::{read_pfm_gray, read_pfm_rgb};
use gsc_core::render::{gbuffer_for_frame, render, RenderMode, RenderedImage};
use gsc_core::scene::{load_scene, save_scene};

#[derive(Parser)]
#[command(name = "gsc", version, about = "Analytic Gaussian shadow casting")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render one frame to PFM (float) or PNG (sRGB).
    Render(RenderArgs),
    /// Relight the foreground with an HDRi environment map.
    Relight(RelightArgs),
    /// Fit the body Gaussians to a voxel density field.
    Fit(FitArgs),
    /// Recover light direction and ambient intensity from references.
    SolveLight(SolveLightArgs),
    /// Time analytic transmittance against sampled shadow casting.
    Bench(BenchArgs),
    /// Peak signal-to-noise ratio between two images.
    Psnr(PsnrArgs),
}

#[derive(Args)]
struct RenderArgs {
    #[arg(long)]
    scene: PathBuf,
    #[arg(long, default_value_t = 0)]
    frame: usize,
    #[arg(long, default_value_t = 0)]
    camera: usize,
    /// lit | albedo | shadow | normal | depth
    #[arg(long, default_value = "lit")]
    mode: String,
    #[arg(long)]
    out: PathBuf,
    /// Unused by the deterministic render modes; accepted for uniformity.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct RelightArgs {
    #[arg(long)]
    scene: PathBuf,
    #[arg(long, default_value_t = 0)]
    frame: usize,
    #[arg(long, default_value_t = 0)]
    camera: usize,
    /// Environment map PFM; defaults to the scene's env_map.
    #[arg(long)]
    env: Option<PathBuf>,
    /// Secondary rays per pixel (the first is importance-sampled toward the
    /// brightest texel).
    #[arg(long, default_value_t = 64)]
    rays: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct FitArgs {
    #[arg(long)]
    scene: PathBuf,
    /// Voxel grid file with the target density.
    #[arg(long)]
    field: PathBuf,
    /// Reference pose frame the fit runs in.
    #[arg(long, default_value_t = 0)]
    frame: usize,
    /// Start from Gaussians spread along the bones instead of the scene's.
    #[arg(long, default_value_t = false)]
    init_bones: bool,
    #[arg(long, default_value_t = 2000)]
    iters: usize,
    #[arg(long, default_value_t = 0.5)]
    step: f64,
    #[arg(long, default_value_t = 1024)]
    batch: usize,
    #[arg(long, default_value_t = 1e-3)]
    w_sigma: f64,
    #[arg(long, default_value_t = 1e-3)]
    w_mean: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Updated scene written here.
    #[arg(long)]
    out: PathBuf,
    /// Optional CSV loss trace (iteration,loss).
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct SolveLightArgs {
    #[arg(long)]
    scene: PathBuf,
    /// Directory with ref_XXXX.png|pfm and mask_XXXX.pfm per pose frame.
    #[arg(long)]
    refs: PathBuf,
    #[arg(long, default_value_t = 400)]
    iters: usize,
    #[arg(long, default_value_t = 0.25)]
    step: f64,
    /// Iteration where the grey-to-RGB blend starts.
    #[arg(long, default_value_t = 40)]
    grey_start: usize,
    /// Iteration where the blend reaches pure RGB.
    #[arg(long, default_value_t = 160)]
    grey_end: usize,
    #[arg(long, default_value_t = 0.05)]
    w_amb: f64,
    #[arg(long, default_value_t = 2)]
    frames_per_iter: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Initial guess "azimuth,elevation" in radians (default: light
    /// pointing straight down, the blind initialization).
    #[arg(long)]
    init: Option<String>,
    /// Scene with the solved light written here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Lit PFM of frame 0 under the solved light, for reproducibility
    /// checks.
    #[arg(long)]
    render_out: Option<PathBuf>,
    /// Optional CSV loss trace.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    scene: PathBuf,
    #[arg(long, default_value_t = 0)]
    frame: usize,
    #[arg(long, default_value_t = 1_000_000)]
    rays: usize,
    /// Comma-separated sample counts for the sampled baseline.
    #[arg(long, default_value = "16,64")]
    samples: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// CSV report path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PsnrArgs {
    #[arg(long)]
    a: PathBuf,
    #[arg(long)]
    b: PathBuf,
    /// Single-channel PFM restricting the comparison.
    #[arg(long)]
    mask: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::init();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            // Help and version are successful outputs, not usage errors.
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{e}");
                    ExitCode::SUCCESS
                }
                _ => {
                    eprint!("{e}");
                    ExitCode::from(1)
                }
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn configure_threads() -> Result<()> {
    if let Ok(value) = std::env::var("GSC_THREADS") {
        let n: usize = value
            .parse()
            .map_err(|_| anyhow!("GSC_THREADS must be a non-negative integer, got `{value}`"))?;
        if n > 0 {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .context("installing thread pool")?;
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Render(args) => cmd_render(args),
        Command::Relight(args) => cmd_relight(args),
        Command::Fit(args) => cmd_fit(args),
        Command::SolveLight(args) => cmd_solve_light(args),
        Command::Bench(args) => cmd_bench(args),
        Command::Psnr(args) => cmd_psnr(args),
    }
}

fn cmd_render(args: RenderArgs) -> Result<()> {
    let scene = load_scene(&args.scene)?;
    let mode: RenderMode = args.mode.parse()?;
    let out = render(&scene, args.frame, args.camera, mode)?;
    if out.diagnostics.invalid_pixels > 0 {
        eprintln!(
            "warning: {} foreground pixel(s) had invalid depth; shadow set to 1",
            out.diagnostics.invalid_pixels
        );
    }
    out.image.save(&args.out)?;
    println!("wrote {}", args.out.display());
    Ok(())
}

fn cmd_relight(args: RelightArgs) -> Result<()> {
    let scene = load_scene(&args.scene)?;
    let env = match &args.env {
        Some(path) => EnvironmentMap::from_pfm(path)?,
        None => scene
            .env_map
            .clone()
            .ok_or_else(|| anyhow!("scene has no env_map; pass --env"))?,
    };
    let camera = scene
        .cameras
        .get(args.camera)
        .ok_or_else(|| anyhow!("camera index {} out of range", args.camera))?;
    let pose = scene
        .poses
        .get(args.frame)
        .ok_or_else(|| anyhow!("frame {} out of range", args.frame))?;
    let gbuffer = gbuffer_for_frame(&scene, args.frame, args.camera)?;
    let world = pose_gaussians(&scene.body, &scene.skeleton, pose)?;
    let prepared = PreparedGaussian::prepare_all(&world);
    let image = gsc_core::shading::relight_hdri(
        &gbuffer,
        camera,
        &prepared,
        &env,
        args.rays,
        scene.shadow_bias,
        args.seed,
    )?;
    RenderedImage::Rgb(image).save(&args.out)?;
    println!("wrote {}", args.out.display());
    Ok(())
}

fn cmd_fit(args: FitArgs) -> Result<()> {
    let mut scene = load_scene(&args.scene)?;
    let field = TargetDensityField::load(&args.field)?;
    let pose = scene
        .poses
        .get(args.frame)
        .ok_or_else(|| anyhow!("frame {} out of range", args.frame))?
        .clone();
    let body0 = if args.init_bones {
        init_body_along_bones(&scene.skeleton, &pose, scene.body.k())?
    } else {
        scene.body.clone()
    };
    let cfg = FitConfig {
        iterations: args.iters,
        step_size: args.step,
        batch_size: args.batch,
        w_density: Schedule::constant(1.0),
        w_sigma: Schedule::constant(args.w_sigma),
        w_mean: Schedule::constant(args.w_mean),
        seed: args.seed,
    };
    let result = fit(&body0, &scene.skeleton, &pose, &field, &cfg)?;
    println!(
        "fit: {} iterations, loss {:.6e} -> {:.6e}",
        result.trace.len(),
        result.trace.first().copied().unwrap_or(f64::NAN),
        result.trace.last().copied().unwrap_or(f64::NAN),
    );
    if let Some(trace_path) = &args.trace {
        write_trace(trace_path, &result.trace)?;
    }
    scene.body = result.body;
    save_scene(&scene, &args.out)?;
    println!("wrote {}", args.out.display());
    Ok(())
}

fn load_reference_image(path: &Path) -> Result<ImageRgb> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("pfm") => Ok(read_pfm_rgb(path)?),
        Some("png") => Ok(read_png(path)?),
        _ => bail!("unsupported reference extension on {}", path.display()),
    }
}

fn cmd_solve_light(args: SolveLightArgs) -> Result<()> {
    let scene = load_scene(&args.scene)?;
    let mut references = Vec::new();
    for frame in 0..scene.poses.len() {
        let base = args.refs.join(format!("ref_{frame:04}"));
        let image_path = ["pfm", "png"]
            .iter()
            .map(|ext| base.with_extension(ext))
            .find(|p| p.exists());
        let Some(image_path) = image_path else {
            continue;
        };
        let mask_path = args.refs.join(format!("mask_{frame:04}.pfm"));
        if !mask_path.exists() {
            bail!("missing {}", mask_path.display());
        }
        references.push(Reference {
            image: load_reference_image(&image_path)?,
            mask: read_pfm_gray(&mask_path)?,
            pose: scene.poses[frame].clone(),
        });
    }
    if references.is_empty() {
        bail!(
            "no references named ref_XXXX.pfm|png found in {}",
            args.refs.display()
        );
    }
    println!("loaded {} reference frame(s)", references.len());

    let init = match &args.init {
        Some(text) => {
            let parts: Vec<&str> = text.split(',').collect();
            if parts.len() != 2 {
                bail!("--init expects `azimuth,elevation`");
            }
            LightParams::new(
                parts[0].trim().parse()?,
                parts[1].trim().parse()?,
                Vec3::new(0.1, 0.1, 0.1),
            )?
        }
        None => LightParams::new(
            0.0,
            -std::f64::consts::FRAC_PI_2 + 1e-3,
            Vec3::new(0.1, 0.1, 0.1),
        )?,
    };
    let cfg = SolveConfig {
        iterations: args.iters,
        step_size: args.step,
        grey_start: args.grey_start,
        grey_end: args.grey_end,
        w_amb: args.w_amb,
        frames_per_iter: args.frames_per_iter,
        fd_step: 1e-3,
        seed: args.seed,
    };
    let result = solve(&scene, &references, &init, &cfg)?;
    println!(
        "solved light: azimuth {:.6} rad, elevation {:.6} rad, ambient ({:.4}, {:.4}, {:.4})",
        result.params.azimuth,
        result.params.elevation,
        result.params.ambient.x,
        result.params.ambient.y,
        result.params.ambient.z
    );
    let err = angle_between_degrees(&result.params.direction(), &scene.light.direction());
    println!("angular error vs scene light: {err:.3} degrees");

    if let Some(trace_path) = &args.trace {
        write_trace(trace_path, &result.trace)?;
    }
    let apply = |mut s: gsc_core::scene::Scene| {
        s.light.azimuth = result.params.azimuth;
        s.light.elevation = result.params.elevation;
        s.light.ambient = [
            result.params.ambient.x,
            result.params.ambient.y,
            result.params.ambient.z,
        ];
        s
    };
    if let Some(out) = &args.out {
        save_scene(&apply(scene.clone()), out)?;
        println!("wrote {}", out.display());
    }
    if let Some(render_out) = &args.render_out {
        let updated = apply(scene);
        let out = render(&updated, 0, 0, RenderMode::Lit)?;
        out.image.save(render_out)?;
        println!("wrote {}", render_out.display());
    }
    Ok(())
}

fn cmd_bench(args: BenchArgs) -> Result<()> {
    let scene = load_scene(&args.scene)?;
    let pose = scene
        .poses
        .get(args.frame)
        .ok_or_else(|| anyhow!("frame {} out of range", args.frame))?;
    let world = pose_gaussians(&scene.body, &scene.skeleton, pose)?;
    let samples: Vec<usize> = args
        .samples
        .split(',')
        .map(|s| s.trim().parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| anyhow!("--samples expects comma-separated integers"))?;
    let report = bench_shadows(&world, args.rays, &samples, args.seed)?;
    print!("{}", report.to_table());
    for s in &samples {
        if let Some(speedup) = report.speedup(&format!("sampled-{s}")) {
            println!("analytic speedup vs sampled-{s}: {speedup:.1}x");
        }
    }
    if let Some(out) = &args.out {
        std::fs::write(out, report.to_csv())?;
        println!("wrote {}", out.display());
    }
    Ok(())
}

fn cmd_psnr(args: PsnrArgs) -> Result<()> {
    let load = |path: &Path| -> Result<ImageRgb> {
        match path.extension().and_then(|e| e.to_str()) {
            Some("pfm") => Ok(read_pfm_rgb(path)?),
            Some("png") => Ok(read_png_raw(path)?),
            _ => bail!("unsupported image extension on {}", path.display()),
        }
    };
    let a = load(&args.a)?;
    let b = load(&args.b)?;
    let mask = match &args.mask {
        Some(p) => Some(read_pfm_gray(p)?),
        None => None,
    };
    let value = psnr(&a, &b, mask.as_ref())?;
    if value.is_infinite() {
        println!("psnr: inf dB (identical images)");
    } else {
        println!("psnr: {value:.4} dB");
    }
    Ok(())
}

fn write_trace(path: &Path, trace: &[f64]) -> Result<()> {
    let mut out = String::from("iteration,loss\n");
    for (i, l) in trace.iter().enumerate() {
        out.push_str(&format!("{i},{l:.12e}\n"));
    }
    std::fs::write(path, out)?;
    println!("wrote {}", path.display());
    Ok(())
}
