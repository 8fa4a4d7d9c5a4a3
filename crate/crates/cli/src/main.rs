use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use semiloc_cli::config::{load_config, ExperimentConfig, Scale};
use semiloc_cli::error::CliError;
use semiloc_cli::experiments::{run, schema};
use semiloc_cli::output::{write_all, SCHEMA_VERSION};
use semiloc_cli::presets::{preset, PRESET_NAMES};

#[derive(Parser)]
#[command(name = "semiloc", version, about = "Disordered emitters in a cavity: localization, spectra and transport")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a preset or a config file.
    Run(RunArgs),
    /// List the presets.
    Presets,
    /// Print the resolved config of a preset without running it.
    Show {
        name: String,
        #[arg(long, value_enum, default_value = "desk")]
        scale: Scale,
    },
    /// Print the CSV column schema of every preset.
    Schema,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, conflicts_with = "config", required_unless_present = "config")]
    preset: Option<String>,
    /// JSON config, or the metadata file of an earlier run.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    scale: Option<Scale>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Output directory (default: $SEMILOC_OUT, then ./out).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Replace the coupling sweep by this single g_c/J.
    #[arg(long)]
    gc: Option<f64>,
    #[arg(long)]
    realizations: Option<u64>,
    /// Also write per-realization records.
    #[arg(long)]
    raw: bool,
}

fn resolve(args: &RunArgs) -> Result<(ExperimentConfig, PathBuf), CliError> {
    let mut cfg = match (&args.preset, &args.config) {
        (Some(name), _) => preset(name, args.scale.unwrap_or(Scale::Desk))?,
        (None, Some(path)) => {
            let c = load_config(path)?;
            if args.scale.is_some_and(|s| s != c.scale) {
                return Err(CliError::Config("scale: --scale only applies to presets".into()));
            }
            c
        }
        (None, None) => return Err(CliError::Config("run: needs --preset or --config".into())),
    };
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(t) = args.threads {
        cfg.threads = Some(t);
    }
    if let Some(r) = args.realizations {
        cfg.realizations = r;
    }
    if args.raw {
        cfg.raw = true;
    }
    if let Some(gc) = args.gc {
        cfg.override_coupling(gc)?;
    }
    let dir = args
        .out
        .clone()
        .or_else(|| cfg.output_dir.as_ref().map(PathBuf::from))
        .or_else(|| std::env::var_os("SEMILOC_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    cfg.validate()?;
    Ok((cfg, dir))
}

fn run_command(args: &RunArgs) -> Result<(), CliError> {
    let (cfg, dir) = resolve(args)?;
    let start = Instant::now();
    let out = run(&cfg)?;
    let wall = start.elapsed().as_secs_f64();
    let paths = write_all(&dir, &cfg, &out.tables, &out.failures, out.summary, wall)?;
    for p in &paths {
        say(&p.display().to_string());
    }
    match out.failures.first() {
        None => Ok(()),
        Some(f) => Err(CliError::Computation(format!(
            "{} of {} realizations failed; first: seed {} index {}: {}",
            out.failures.len(),
            cfg.realizations,
            f.seed,
            f.index,
            f.message
        ))),
    }
}

/// Prints a line; a closed pipe is not an error.
fn say(line: &str) {
    let _ = writeln!(std::io::stdout(), "{line}");
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run_command(&args),
        Command::Presets => {
            for name in PRESET_NAMES {
                say(name);
            }
            Ok(())
        }
        Command::Show { name, scale } => preset(&name, scale).and_then(|c| {
            say(&serde_json::to_string_pretty(&c)?);
            Ok(())
        }),
        Command::Schema => {
            let mut doc = serde_json::Map::new();
            for name in PRESET_NAMES {
                let cfg = preset(name, Scale::Desk).expect("preset names resolve");
                let tables: serde_json::Map<_, _> = schema(&cfg.experiment)
                    .into_iter()
                    .map(|(suffix, cols)| (format!("{name}{suffix}.csv"), serde_json::json!(cols)))
                    .collect();
                doc.insert(name.to_string(), tables.into());
            }
            let doc = serde_json::json!({ "schema_version": SCHEMA_VERSION, "presets": doc });
            say(&serde_json::to_string_pretty(&doc).expect("json"));
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("semiloc: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
