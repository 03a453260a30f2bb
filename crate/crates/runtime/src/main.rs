use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use fizi_core::imaging::pnm;
use fizi_core::{BackgroundModel, Segmenter, Workers};
use fizi_runtime::learn::{learn_background, LearnError};
use fizi_runtime::run::{self, RunConfig, EXIT_CONFIG, EXIT_OK, EXIT_SOURCE};
use fizi_runtime::synth::{self, Scene};
use fizi_runtime::{Settings, SinkSpec, SourceSpec};

#[derive(Parser)]
#[command(name = "fizi", version, about = "Contactless gesture steering from camera frames")]
struct Cli {
    /// More log output on stderr (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the frame loop and emit one command record per frame.
    Run(RunArgs),
    /// Learn a background model from hand-free frames.
    LearnBg(LearnArgs),
    /// Segment a single frame and write the hand mask.
    Mask(MaskArgs),
    /// Write the synthetic demo scene: frames, learning frames and layout.
    Synth(SynthArgs),
}

#[derive(clap::Args)]
struct RunArgs {
    /// dir:PATH (a directory of .ppm files) or raw:PATH (`raw:-` for stdin).
    #[arg(long)]
    source: SourceSpec,
    /// Interface layout XML.
    #[arg(long)]
    layout: PathBuf,
    /// Background model; learned from the first frames when omitted.
    #[arg(long)]
    bg: Option<PathBuf>,
    /// stdout or tcp:HOST:PORT.
    #[arg(long, default_value = "stdout")]
    sink: SinkSpec,
    /// Serve the UI and the /ws endpoint on HOST:PORT.
    #[arg(long)]
    serve: Option<SocketAddr>,
    /// Static UI assets served over HTTP.
    #[arg(long, requires = "serve")]
    ui_dir: Option<PathBuf>,
    /// Source frame rate; also sets the command timestamps.
    #[arg(long)]
    fps: Option<u32>,
    /// Write every stage mask of every frame as PGM.
    #[arg(long)]
    debug_dump: bool,
    /// Destination of --debug-dump.
    #[arg(long, default_value = "debug")]
    dump_dir: PathBuf,
    /// Runtime settings XML.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Worker threads for segmentation.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(clap::Args)]
struct LearnArgs {
    #[arg(long)]
    source: SourceSpec,
    #[arg(long, default_value_t = fizi_core::background::DEFAULT_LEARN_FRAMES)]
    frames: usize,
    #[arg(long, default_value_t = fizi_core::background::DEFAULT_MARGIN)]
    margin: u8,
    #[arg(long)]
    out: PathBuf,
    /// Runtime settings XML (luminosity normalization parameters).
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(clap::Args)]
struct MaskArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    bg: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(clap::Args)]
struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 30)]
    learning_frames: usize,
}

fn load_settings(path: Option<&Path>) -> anyhow::Result<Settings> {
    match path {
        Some(p) => Ok(Settings::load(p)?),
        None => Ok(Settings::default()),
    }
}

fn cmd_run(args: RunArgs) -> i32 {
    let mut settings = match load_settings(args.config.as_deref()) {
        Ok(s) => s,
        Err(e) => {
            log::error!("{e:#}");
            eprintln!("error: {e:#}");
            return EXIT_CONFIG;
        }
    };
    if let Some(w) = args.workers {
        settings.workers = w;
    }
    if let Some(fps) = args.fps {
        settings.fps = fps;
    }
    if let Err(e) = settings.validate() {
        eprintln!("error: {e}");
        return EXIT_CONFIG;
    }
    if let Some(bg) = &args.bg {
        if !bg.is_file() {
            eprintln!("error: background model {} does not exist", bg.display());
            return EXIT_CONFIG;
        }
    }
    let mut source = args.source;
    source.fps = settings.fps;
    let config = RunConfig {
        source,
        layout_path: args.layout,
        background_path: args.bg,
        settings,
        sink: args.sink,
        serve: args.serve,
        ui_dir: args.ui_dir,
        debug_dump: args.debug_dump.then_some(args.dump_dir),
        pace: true,
    };
    match run::run(&config) {
        Ok(summary) => {
            log::info!(
                "{} frames, {} commands{}",
                summary.frames,
                summary.commands,
                if summary.quit { ", stopped by quit" } else { "" }
            );
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn cmd_learn(args: LearnArgs) -> i32 {
    let result = (|| -> Result<BackgroundModel, (i32, anyhow::Error)> {
        let settings = load_settings(args.config.as_deref()).map_err(|e| (EXIT_CONFIG, e))?;
        let mut source = args.source.open().map_err(|e| (EXIT_CONFIG, e.into()))?;
        let model = learn_background(&mut source, args.frames, args.margin, &settings.segmentation)
            .map_err(|e| {
                let code = match e {
                    LearnError::Params(_) => EXIT_CONFIG,
                    _ => EXIT_SOURCE,
                };
                (code, e.into())
            })?;
        model
            .save(&args.out)
            .with_context(|| format!("cannot write {}", args.out.display()))
            .map_err(|e| (EXIT_CONFIG, e))?;
        Ok(model)
    })();
    match result {
        Ok(model) => {
            let [r, g, b] = model.mean_envelope_width();
            println!(
                "learned {} frames of {}x{}, margin {}",
                model.frames_learned(),
                model.width(),
                model.height(),
                model.margin()
            );
            println!("mean envelope width: R {r:.4} G {g:.4} B {b:.4}");
            println!("checksum {}", model.checksum());
            EXIT_OK
        }
        Err((code, e)) => {
            eprintln!("error: {e:#}");
            code
        }
    }
}

fn cmd_mask(args: MaskArgs) -> anyhow::Result<()> {
    let settings = load_settings(args.config.as_deref())?;
    let frame = pnm::read_ppm_file(&args.input)
        .with_context(|| format!("cannot read {}", args.input.display()))?;
    let bg = BackgroundModel::load(&args.bg)
        .with_context(|| format!("cannot load {}", args.bg.display()))?;
    let segmenter = Segmenter::new(settings.segmentation, Workers::new(settings.workers))?;
    let mask = segmenter.segment(&frame, &bg)?;
    std::fs::write(&args.out, pnm::encode_pgm_mask(&mask))
        .with_context(|| format!("cannot write {}", args.out.display()))?;
    println!(
        "{} foreground pixels ({:.4}% of {}x{})",
        mask.count_ones(),
        mask.coverage() * 100.0,
        mask.width(),
        mask.height()
    );
    Ok(())
}

fn write_frames(dir: &Path, frames: &[fizi_core::FrameRgb]) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    for (i, f) in frames.iter().enumerate() {
        let path = dir.join(format!("{i:05}.ppm"));
        std::fs::write(&path, pnm::encode_ppm(f))
            .with_context(|| format!("cannot write {}", path.display()))?;
    }
    Ok(())
}

fn cmd_synth(args: SynthArgs) -> anyhow::Result<()> {
    let scene = Scene::bundled();
    write_frames(&args.out.join("frames"), &synth::bundled_frames())?;
    write_frames(&args.out.join("learn"), &scene.learning_frames(args.learning_frames))?;
    std::fs::write(args.out.join("layout.xml"), synth::BUNDLED_LAYOUT)?;
    println!("wrote synthetic scene to {}", args.out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .parse_default_env()
        .target(env_logger::Target::Stderr)
        .init();

    let code = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::LearnBg(args) => cmd_learn(args),
        Command::Mask(args) => match cmd_mask(args) {
            Ok(()) => EXIT_OK,
            Err(e) => {
                eprintln!("error: {e:#}");
                EXIT_CONFIG
            }
        },
        Command::Synth(args) => match cmd_synth(args) {
            Ok(()) => EXIT_OK,
            Err(e) => {
                eprintln!("error: {e:#}");
                EXIT_CONFIG
            }
        },
    };
    ExitCode::from(code as u8)
}
