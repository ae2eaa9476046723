use std::path::PathBuf;
use std::process::ExitCode;

use clap::{CommandFactory, FromArgMatches, Parser, Subcommand};
use ionsim_cli::commands;
use ionsim_cli::config::keys_help;
use ionsim_cli::figures::FIGURES;
use ionsim_cli::CliError;

/// Erbium-in-nanocavity experiment simulator.
///
/// Exit codes: 0 success, 1 I/O error, 2 parse or usage error, 3 invalid
/// configuration, 4 resource limit, 5 fit or analysis failure.
#[derive(Parser)]
#[command(name = "ionsim", version)]
struct Cli {
    /// Worker threads; defaults to IONSIM_THREADS, then to all cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run {
        config: PathBuf,
        output: PathBuf,
        /// `section.key=value` overrides applied in order.
        overrides: Vec<String>,
    },
    /// Fit a model to columns 0 (x) and 1 (y) of a dataset.
    Fit {
        dataset: PathBuf,
        model: String,
        output: PathBuf,
    },
    /// Regenerate the datasets of a figure.
    Reproduce {
        figure: String,
        #[arg(default_value = ".")]
        out_dir: PathBuf,
    },
    /// Regenerate a dataset from its metadata and check it is byte-identical.
    Replay {
        dataset: PathBuf,
        /// Write the regenerated file here instead of comparing.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// List configuration keys, units and defaults.
    Keys,
}

fn init_threads(flag: Option<usize>) -> Result<(), CliError> {
    let env = std::env::var("IONSIM_THREADS").ok();
    let threads = match (flag, env) {
        (Some(n), _) => n,
        (None, Some(v)) => v
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("IONSIM_THREADS must be a count, got `{v}`")))?,
        (None, None) => return Ok(()),
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Usage(e.to_string()))
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    init_threads(cli.threads)?;
    match cli.command {
        Command::Run {
            config,
            output,
            overrides,
        } => commands::run(&config, &output, &overrides),
        Command::Fit { dataset, model, output } => commands::fit_file(&dataset, &model, &output),
        Command::Reproduce { figure, out_dir } => {
            let targets: Vec<&str> = if figure == "all" { FIGURES.to_vec() } else { vec![figure.as_str()] };
            for f in targets {
                for path in commands::reproduce_to(f, &out_dir)? {
                    println!("{}", path.display());
                }
            }
            Ok(())
        }
        Command::Replay { dataset, output } => {
            let same = commands::replay(&dataset, output.as_deref())?;
            println!("{}", if same { "identical" } else { "differs" });
            Ok(())
        }
        Command::Keys => {
            print!("{}", keys_help());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let command = Cli::command().mut_subcommand("run", |c| c.after_long_help(keys_help()));
    let cli = match Cli::from_arg_matches(&command.get_matches()) {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ionsim: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
