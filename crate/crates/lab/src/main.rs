use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;
use vortexlab::config::{validate, Overrides, RawConfig};
use vortexlab::{run, Experiment, ExperimentConfig};

#[derive(Parser)]
#[command(name = "vortexlab", version, about = "Ginzburg-Landau vortex experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Only warnings and errors on stderr.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write its artifacts.
    Run(Target),
    /// Check a config without computing anything.
    Validate(Target),
    /// List the experiments, or print their default configs.
    List {
        /// Print the default config of every experiment as JSON.
        #[arg(long)]
        defaults: bool,
    },
}

#[derive(Args)]
struct Target {
    /// Experiment to run with default parameters when no config is given.
    experiment: Option<String>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
}

impl Target {
    fn load(&self) -> Result<(RawConfig, Overrides), String> {
        let raw = match (&self.config, &self.experiment) {
            (Some(path), None) => RawConfig::load(path).map_err(|e| e.to_string())?,
            (Some(path), Some(name)) => {
                let raw = RawConfig::load(path).map_err(|e| e.to_string())?;
                if &raw.experiment != name {
                    return Err(format!(
                        "config names experiment {:?}, command line {name:?}",
                        raw.experiment
                    ));
                }
                raw
            }
            (None, Some(name)) => RawConfig {
                experiment: name.clone(),
                ..Default::default()
            },
            (None, None) => return Err("give an experiment name or --config".into()),
        };
        Ok((
            raw,
            Overrides {
                seed: self.seed,
                out: self.out.clone(),
                threads: self.threads,
            },
        ))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.quiet { "warn" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match cli.command {
        Command::List { defaults } => {
            for e in Experiment::ALL {
                if defaults {
                    let cfg = ExperimentConfig::resolve(RawConfig::for_experiment(e), &Overrides::default())
                        .expect("defaults are valid");
                    println!("{}", serde_json::to_string_pretty(&cfg).expect("config serializes"));
                } else {
                    println!("{:<12} {}", e.name(), e.description());
                }
            }
            ExitCode::SUCCESS
        }
        Command::Validate(t) => {
            let (raw, o) = match t.load() {
                Ok(x) => x,
                Err(m) => {
                    eprintln!("config error: {m}");
                    return ExitCode::from(2);
                }
            };
            let errors = validate(raw, &o);
            let report = serde_json::json!({ "valid": errors.is_empty(), "errors": errors });
            println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
            if errors.is_empty() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            }
        }
        Command::Run(t) => {
            let config = match t
                .load()
                .and_then(|(raw, o)| ExperimentConfig::resolve(raw, &o).map_err(|e| e.to_string()))
            {
                Ok(c) => c,
                Err(m) => {
                    eprintln!("{m}");
                    return ExitCode::from(2);
                }
            };
            match run(&config) {
                Ok(s) => {
                    log::info!(
                        "wrote {} file(s) and manifest.json to {} in {:.1} s",
                        s.manifest.files.len(),
                        s.out.display(),
                        s.manifest.wall_seconds
                    );
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("{e}");
                    ExitCode::from(e.exit_code() as u8)
                }
            }
        }
    }
}
