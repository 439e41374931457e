use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use meander_cli::config::{emit_config, parse_config, ExperimentConfig, Mode};
use meander_cli::{presets, run_config, CliError};

#[derive(Parser)]
#[command(
    name = "meander",
    version,
    about = "Spiral meander simulation and center-bundle analysis"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Start from a named preset.
    #[arg(long)]
    preset: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// 200x200 grid and long horizons for PDE runs.
    #[arg(long)]
    full_scale: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run the pipeline named by a configuration file.
    Run {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        full_scale: bool,
    },
    /// Run a preset.
    RunPreset {
        name: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        full_scale: bool,
    },
    /// List preset names and descriptions.
    ListPresets,
    /// Print the full configuration of a preset, or the defaults of a mode.
    EmitConfig {
        #[arg(long, conflicts_with = "mode")]
        preset: Option<String>,
        #[arg(long, value_enum)]
        mode: Option<Mode>,
    },
    SimulatePde(Common),
    AnalyzePath {
        /// Tip-path CSV.
        #[arg(long)]
        input: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    CbIntegrate(Common),
    CbAverage(Common),
    LockScan(Common),
    HopfScan(Common),
    MtwCheck(Common),
    DiophCheck(Common),
}

fn read_config(path: &PathBuf) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_config(&text)
}

fn preset_config(name: &str) -> Result<ExperimentConfig, CliError> {
    presets::find(name).map(|p| p.config).ok_or_else(|| {
        CliError::Config(format!(
            "unknown preset `{name}`; known: {}",
            presets::names().join(", ")
        ))
    })
}

fn finish(mut cfg: ExperimentConfig, out: Option<PathBuf>, full_scale: bool) -> Result<(), CliError> {
    if full_scale {
        presets::full_scale(&mut cfg);
    }
    if let Some(d) = out {
        cfg.output.dir = d;
    }
    let a = run_config(&cfg)?;
    for f in &a.files {
        println!("{}", f.display());
    }
    Ok(())
}

fn mode_command(mode: Mode, c: Common, input: Option<PathBuf>) -> Result<(), CliError> {
    let mut cfg = match (&c.config, &c.preset) {
        (Some(_), Some(_)) => return Err(CliError::Config("give either --config or --preset".into())),
        (Some(p), None) => read_config(p)?,
        (None, Some(n)) => preset_config(n)?,
        (None, None) => ExperimentConfig::new(mode),
    };
    if cfg.mode != mode {
        return Err(CliError::Config(format!(
            "configuration is for mode `{}`, not `{}`",
            cfg.mode.as_str(),
            mode.as_str()
        )));
    }
    if input.is_some() {
        cfg.input.path = input;
    }
    finish(cfg, c.out, c.full_scale)
}

fn dispatch(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::Run {
            config,
            out,
            full_scale,
        } => finish(read_config(&config)?, out, full_scale),
        Command::RunPreset { name, out, full_scale } => finish(preset_config(&name)?, out, full_scale),
        Command::ListPresets => {
            for p in presets::all() {
                println!("{:<14} {:<13} {}", p.name, p.config.mode.as_str(), p.description);
            }
            Ok(())
        }
        Command::EmitConfig { preset, mode } => {
            let cfg = match (preset, mode) {
                (Some(n), _) => preset_config(&n)?,
                (None, Some(m)) => ExperimentConfig::new(m),
                (None, None) => return Err(CliError::Config("give --preset or --mode".into())),
            };
            print!("{}", emit_config(&cfg)?);
            Ok(())
        }
        Command::SimulatePde(c) => mode_command(Mode::SimulatePde, c, None),
        Command::AnalyzePath { input, common } => mode_command(Mode::AnalyzePath, common, input),
        Command::CbIntegrate(c) => mode_command(Mode::CbIntegrate, c, None),
        Command::CbAverage(c) => mode_command(Mode::CbAverage, c, None),
        Command::LockScan(c) => mode_command(Mode::LockScan, c, None),
        Command::HopfScan(c) => mode_command(Mode::HopfScan, c, None),
        Command::MtwCheck(c) => mode_command(Mode::MtwCheck, c, None),
        Command::DiophCheck(c) => mode_command(Mode::DiophCheck, c, None),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
