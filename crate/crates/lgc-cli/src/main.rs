use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use lgc_cli::experiment::{render_cell, run_experiment, RenderRequest};
use lgc_cli::manifest::Manifest;
use lgc_cli::report::summarize;
use lgc_cli::{CliError, CliResult};

/// Samples neural-network loss landscapes with progressive gradient walks
/// and assembles loss-gradient clouds with curvature and saturation
/// overlays.
#[derive(Parser)]
#[command(name = "lgc", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment grid described by a manifest.
    Run {
        manifest: PathBuf,
        /// Override the manifest's master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker thread count (0 = all cores).
        #[arg(long)]
        workers: Option<usize>,
        /// Shrink the protocol: `desk` (fast) or `full` (manifest as-is).
        #[arg(long)]
        preset: Option<String>,
        /// Override the manifest's output directory.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Print a report for one finished cell directory.
    Summarize {
        cell_dir: PathBuf,
        /// Machine-readable JSON instead of text.
        #[arg(long)]
        json: bool,
    },
    /// Re-render the plots of a finished cell directory.
    Render {
        cell_dir: PathBuf,
        /// curvature | egen | saturation
        #[arg(long)]
        color_by: Option<String>,
        /// One image per curvature class.
        #[arg(long)]
        panes: bool,
        /// linear | sqrt
        #[arg(long)]
        x_scale: Option<String>,
        /// Keep only records with e_train below this value.
        #[arg(long)]
        filter_e: Option<f64>,
        /// Output base path (default: <cell_dir>/lgc).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Parse and validate a manifest without running it.
    Validate { manifest: PathBuf },
}

fn load_manifest(
    path: &std::path::Path,
    seed: Option<u64>,
    workers: Option<usize>,
    preset: Option<&str>,
    output: Option<PathBuf>,
) -> CliResult<Manifest> {
    let mut manifest = Manifest::from_toml_file(path)?;
    if let Some(seed) = seed {
        manifest.master_seed = seed;
    }
    if let Some(workers) = workers {
        manifest.workers = workers;
    }
    if let Some(preset) = preset {
        manifest.apply_preset(preset)?;
    }
    if let Some(output) = output {
        manifest.output_dir = output;
    }
    manifest.validate()?;
    Ok(manifest)
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Run {
            manifest,
            seed,
            workers,
            preset,
            output,
        } => {
            let manifest = load_manifest(&manifest, seed, workers, preset.as_deref(), output)?;
            let summary = run_experiment(&manifest)?;
            eprintln!(
                "done: {} cell(s) under {}",
                summary.cells.len(),
                manifest.output_dir.display()
            );
            Ok(())
        }
        Command::Summarize { cell_dir, json } => {
            let report = summarize(&cell_dir)?;
            if json {
                let text = serde_json::to_string_pretty(&report)
                    .map_err(|e| CliError::Data(e.to_string()))?;
                println!("{text}");
            } else {
                print!("{}", report.to_text());
            }
            Ok(())
        }
        Command::Render {
            cell_dir,
            color_by,
            panes,
            x_scale,
            filter_e,
            out,
        } => {
            let files = render_cell(
                &cell_dir,
                &RenderRequest {
                    color_by,
                    panes,
                    x_scale,
                    e_train_filter: filter_e,
                    out,
                },
            )?;
            for f in files {
                println!("{}", f.display());
            }
            Ok(())
        }
        Command::Validate { manifest } => {
            let m = Manifest::from_toml_file(&manifest)?;
            m.validate()?;
            println!("ok: {}", manifest.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap's default exit code for usage errors is 2; this tool
            // reserves 2 for data errors, so remap help/version to 0 and
            // everything else to 1.
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
