use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{anyhow, Context};
use arlens_cli::bench::{self, BenchOptions};
use arlens_cli::config::ServeConfig;
use arlens_cli::{resolve_bundle, CliError, EXIT_OK};
use arlens_core::command::parse_command;
use arlens_core::command::Vocabulary;
use arlens_core::scenario::{parse_scenario, run_scenario, write_artifacts, RunOptions};
use arlens_core::session::RenderMode;
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "arlens",
    version,
    about = "Interactive overlays for static charts"
)]
struct Cli {
    /// Where chart ids given to --chart are looked up.
    #[arg(
        long,
        global = true,
        env = "ARLENS_BUNDLE_DIR",
        default_value = "bundles"
    )]
    bundles: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render a bundle's chart to PNG.
    Render {
        #[arg(long)]
        chart: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Replay a scenario script and write its artifacts.
    Simulate(SimulateArgs),
    /// Track a synthetic warp sequence and report corner-error percentiles.
    TrackBench(TrackBenchArgs),
    /// Parse a command against a chart's vocabulary and print the AST.
    Parse {
        #[arg(long)]
        chart: String,
        utterance: String,
    },
    /// Run the session service.
    Serve {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    chart: String,
    #[arg(long)]
    script: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Write composited PNG frames (default).
    #[arg(long, conflicts_with = "vector")]
    raster: bool,
    /// Write overlay primitives as JSON instead of composited frames.
    #[arg(long)]
    vector: bool,
}

#[derive(Args)]
struct TrackBenchArgs {
    #[arg(long)]
    chart: String,
    #[arg(long, default_value_t = 30)]
    frames: usize,
    /// Fraction of each frame covered by clutter.
    #[arg(long, default_value_t = 0.0)]
    outliers: f64,
    /// Gaussian pixel noise sigma, in 8-bit levels.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Percentile summary CSV.
    #[arg(long)]
    report: PathBuf,
    /// Per-frame CSV.
    #[arg(long)]
    frames_csv: Option<PathBuf>,
    /// Directory for the synthetic frames and their truth sidecars.
    #[arg(long)]
    save_frames: Option<PathBuf>,
}

fn render(bundles: &Path, chart: &str, out: &Path) -> Result<(), CliError> {
    let bundle = resolve_bundle(chart, bundles)?;
    bundle
        .baseline
        .save(out)
        .with_context(|| format!("writing {}", out.display()))
        .map_err(CliError::runtime)?;
    println!(
        "{}: {}x{} -> {}",
        bundle.id(),
        bundle.spec.width(),
        bundle.spec.height(),
        out.display()
    );
    Ok(())
}

fn simulate(bundles: &Path, args: &SimulateArgs) -> Result<(), CliError> {
    let bundle = resolve_bundle(&args.chart, bundles)?;
    let text = std::fs::read_to_string(&args.script)
        .with_context(|| format!("reading {}", args.script.display()))
        .map_err(CliError::input)?;
    let script = parse_scenario(&text)
        .with_context(|| args.script.display().to_string())
        .map_err(CliError::input)?;
    if let Some(declared) = script.chart.as_deref().filter(|c| *c != bundle.id()) {
        return Err(CliError::input(anyhow!(
            "script is for chart '{declared}', not '{}'",
            bundle.id()
        )));
    }
    let mode = if args.vector {
        RenderMode::Vector
    } else {
        RenderMode::Raster
    };
    let base = args.script.parent().unwrap_or(Path::new("."));
    let run = run_scenario(
        Arc::new(bundle),
        &script,
        base,
        &RunOptions {
            mode,
            ..RunOptions::default()
        },
    );
    write_artifacts(&run, mode, &args.out).map_err(CliError::runtime)?;
    for f in &run.failures {
        eprintln!(
            "{}:{}: t={}: {}",
            args.script.display(),
            f.line,
            f.t,
            f.message
        );
    }
    println!(
        "{} steps, {} frames, revision {}, {} failed -> {}",
        script.steps.len(),
        run.frames.len(),
        run.snapshot.state.revision,
        run.failures.len(),
        args.out.display()
    );
    if run.succeeded() {
        Ok(())
    } else {
        Err(CliError::runtime(anyhow!(
            "{} step(s) failed",
            run.failures.len()
        )))
    }
}

fn track_bench(bundles: &Path, args: &TrackBenchArgs) -> Result<(), CliError> {
    if !(0.0..1.0).contains(&args.outliers) || args.noise < 0.0 || args.frames == 0 {
        return Err(CliError::input(anyhow!(
            "need --frames >= 1, 0 <= --outliers < 1 and --noise >= 0"
        )));
    }
    let bundle = resolve_bundle(&args.chart, bundles)?;
    if let Some(dir) = &args.save_frames {
        std::fs::create_dir_all(dir).map_err(CliError::runtime)?;
    }
    let opts = BenchOptions {
        frames: args.frames,
        outliers: args.outliers,
        noise: args.noise,
        seed: args.seed,
    };
    let mut save_err = None;
    let results = bench::run(&bundle, &opts, |i, frame, truth| {
        if let (Some(dir), None) = (&args.save_frames, &save_err) {
            save_err = bench::save_frame(dir, i, frame, truth).err();
        }
    });
    if let Some(e) = save_err {
        return Err(CliError::runtime(e));
    }
    let summary = bench::summary_csv(&results);
    std::fs::write(&args.report, &summary)
        .with_context(|| format!("writing {}", args.report.display()))
        .map_err(CliError::runtime)?;
    if let Some(path) = &args.frames_csv {
        std::fs::write(path, bench::frames_csv(&results))
            .with_context(|| format!("writing {}", path.display()))
            .map_err(CliError::runtime)?;
    }
    let lost = results.iter().filter(|r| r.corner_error.is_none()).count();
    print!("{summary}");
    println!("{} frames, {lost} without a pose", results.len());
    Ok(())
}

fn parse(bundles: &Path, chart: &str, utterance: &str) -> Result<(), CliError> {
    let bundle = resolve_bundle(chart, bundles)?;
    let vocab = Vocabulary::from_chart(&bundle.spec, &bundle.dataset);
    let ast = parse_command(utterance, &vocab).map_err(CliError::input)?;
    let json = serde_json::to_string_pretty(&ast).map_err(CliError::runtime)?;
    println!("{json}");
    println!("canonical: {ast}");
    Ok(())
}

fn serve(config: &Path) -> Result<(), CliError> {
    let cfg = ServeConfig::load(config, |k| std::env::var(k).ok()).map_err(CliError::input)?;
    let rt = tokio::runtime::Runtime::new().map_err(CliError::runtime)?;
    rt.block_on(arlens_cli::serve::serve(cfg))
        .map_err(CliError::runtime)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Render { chart, out } => render(&cli.bundles, chart, out),
        Command::Simulate(args) => simulate(&cli.bundles, args),
        Command::TrackBench(args) => track_bench(&cli.bundles, args),
        Command::Parse { chart, utterance } => parse(&cli.bundles, chart, utterance),
        Command::Serve { config } => serve(config),
    };
    match result {
        Ok(()) => ExitCode::from(EXIT_OK as u8),
        Err(e) => {
            eprintln!("error: {:#}", e.error);
            ExitCode::from(e.code as u8)
        }
    }
}
