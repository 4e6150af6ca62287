use clap::{Parser, ValueEnum};
use moire_cli::{parse_config_in, run_experiment, CliError, Kind};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Command {
    Geometry,
    Dirichlet,
    Diophantine,
    Converge,
    Misfit,
    Energy,
    Relax,
    Profile,
}

impl Command {
    fn kind(self) -> Kind {
        match self {
            Command::Geometry => Kind::Geometry,
            Command::Dirichlet => Kind::Dirichlet,
            Command::Diophantine => Kind::Diophantine,
            Command::Converge => Kind::Converge,
            Command::Misfit => Kind::Misfit,
            Command::Energy => Kind::Energy,
            Command::Relax => Kind::Relax,
            Command::Profile => Kind::Profile,
        }
    }
}

/// Runs one moiré bilayer experiment described by a JSON config.
#[derive(Debug, Parser)]
#[command(name = "moire", version)]
struct Args {
    /// Experiment to run; must match the config's `kind`.
    #[arg(value_enum)]
    command: Command,
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Output directory, overriding `output_dir` from the config.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads for the parallel reductions (results do not depend on it).
    #[arg(long, value_name = "K")]
    threads: Option<usize>,
    /// Seed for randomized observables, overriding `seed` from the config.
    #[arg(long)]
    seed: Option<u64>,
}

fn execute(args: &Args) -> Result<PathBuf, CliError> {
    let text = std::fs::read_to_string(&args.config).map_err(|e| CliError::Validation {
        field: "--config".into(),
        line: None,
        message: format!("cannot read {}: {e}", args.config.display()),
    })?;
    let base = args.config.parent().unwrap_or(Path::new("."));
    let mut cfg = parse_config_in(&text, base)?;
    if cfg.kind != args.command.kind() {
        return Err(CliError::Validation {
            field: "kind".into(),
            line: None,
            message: format!(
                "config describes a `{}` experiment, not `{}`",
                cfg.kind,
                args.command.kind()
            ),
        });
    }
    if let Some(out) = &args.out {
        cfg.output_dir = out.clone();
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(k) = args.threads {
        if k == 0 {
            return Err(CliError::Validation {
                field: "--threads".into(),
                line: None,
                message: "need at least one thread".into(),
            });
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| CliError::Output(e.to_string()))?;
    }
    run_experiment(&cfg)?;
    Ok(cfg.output_dir.join(moire_cli::run::SUMMARY_FILE))
}

fn main() -> ExitCode {
    let args = Args::parse();
    match execute(&args) {
        Ok(summary) => {
            println!("{}", summary.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
