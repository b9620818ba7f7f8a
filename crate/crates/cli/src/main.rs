use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use fracpx_cli::commands::{cmd_degiorgi, cmd_norm, cmd_solve, CliError, Context, Outcome};
use fracpx_cli::config::{self, Config};
use fracpx_cli::suite::cmd_suite;
use fracpx_cli::DEFAULT_CONFIG;

/// Variable-exponent fractional Sobolev experiments.
///
/// Exit codes: 0 ok, 1 config or input error, 2 assertion violations,
/// 3 solver did not converge.
#[derive(Debug, Parser)]
#[command(name = "fracpx", version)]
struct Cli {
    /// Experiment config (TOML). Defaults to the bundled config.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `[run] out_dir`.
    #[arg(long, global = true, env = "FRACPX_OUT_DIR")]
    out: Option<PathBuf>,
    /// Overrides `[run] seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, short, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Lebesgue and fractional Sobolev norms of the `[function]` section.
    Norm,
    /// Energy descent from a bump start.
    Solve,
    /// Level-set traces of a solution CSV on the config grid.
    Degiorgi {
        #[arg(long)]
        solution: PathBuf,
    },
    /// Every check in sequence, with a single JSON summary.
    Suite,
    /// Print the bundled default config.
    DefaultConfig,
}

fn load(cli: &Cli) -> Result<Config, CliError> {
    Ok(match &cli.config {
        Some(p) => config::load(p)?,
        None => config::parse(DEFAULT_CONFIG, "<default config>")?,
    })
}

fn run(cli: Cli) -> Result<Outcome, CliError> {
    if let Command::DefaultConfig = cli.command {
        print!("{DEFAULT_CONFIG}");
        return Ok(Outcome::Ok);
    }
    if let Some(n) = cli.threads {
        // fails only if a pool already exists, which cannot happen this early
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let cfg = load(&cli)?;
    let ctx = Context::new(cfg, cli.seed, cli.out.clone(), cli.verbose)?;
    match &cli.command {
        Command::Norm => cmd_norm(&ctx),
        Command::Solve => cmd_solve(&ctx),
        Command::Degiorgi { solution } => cmd_degiorgi(&ctx, solution),
        Command::Suite => {
            let (summary, outcome) = cmd_suite(&ctx)?;
            if !summary.failed.is_empty() {
                eprintln!("fracpx: failed stages: {}", summary.failed.join(", "));
            }
            Ok(outcome)
        }
        Command::DefaultConfig => unreachable!(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(o) => o.exit_code(),
        Err(e) => {
            eprintln!("fracpx: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
