use clap::{Parser, Subcommand};
use spinmi_cli::config::{ConfigError, Engine, RunConfig};
use spinmi_cli::run::{run, Format, RunError, RunOptions};
use spinmi_cli::verify::{run_suite, Suite};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "spinmi", version, about = "Mutual information in classical and collective spin models")]
struct Cli {
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the seed in the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for sweep points.
    #[arg(long, global = true, default_value_t = default_jobs())]
    jobs: usize,
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

fn default_jobs() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

#[derive(Subcommand)]
enum Command {
    /// Semi-infinite strips by boundary-state contraction.
    Lattice,
    /// Finite open lattices by Pfaffian or Gaussian circuit.
    LatticeExact,
    /// Swendsen-Wang cluster statistics on cylinders.
    Clusters,
    /// Collective models: thermodynamics, mean field, mutual information.
    Collective,
    /// Field-free classical limit of the collective model.
    Classical,
    /// Runs a verification suite and reports each criterion.
    Verify {
        #[arg(value_enum)]
        suite: Suite,
    },
}

impl Command {
    fn engines(&self) -> &'static [Engine] {
        match self {
            Command::Lattice => &[Engine::Tensornet],
            Command::LatticeExact => &[Engine::Fkt, Engine::Matchgate],
            Command::Clusters => &[Engine::Clusters],
            Command::Collective => &[Engine::Collective, Engine::Cgmi],
            Command::Classical => &[Engine::Classical],
            Command::Verify { .. } => &[],
        }
    }
}

fn load(cli: &Cli) -> Result<RunConfig, RunError> {
    let path = cli.config.as_ref().ok_or_else(|| ConfigError::Invalid("--config is required".into()))?;
    let mut config = RunConfig::load(path)?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    let allowed = cli.command.engines();
    if !allowed.contains(&config.engine) {
        let names: Vec<&str> = allowed.iter().map(|e| e.name()).collect();
        return Err(ConfigError::Invalid(format!(
            "engine {} does not belong to this subcommand (expected {})",
            config.engine.name(),
            names.join(" or ")
        ))
        .into());
    }
    Ok(config)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Command::Verify { suite } = cli.command {
        let reports = run_suite(suite, |r| println!("{r}"));
        let failed = reports.iter().filter(|r| !r.passed).count();
        println!("{} of {} criteria passed", reports.len() - failed, reports.len());
        return if failed == 0 { ExitCode::SUCCESS } else { ExitCode::from(1) };
    }
    let options = RunOptions { out_dir: cli.out_dir.clone(), format: cli.format, jobs: cli.jobs };
    match load(&cli).and_then(|config| run(&config, &options)) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
