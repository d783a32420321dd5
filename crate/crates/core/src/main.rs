use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use oruc::experiments::{
    cmd_learn_oruc, cmd_learn_pauli, cmd_learn_unitary, cmd_make_channel, cmd_sparse_analysis,
    resolve_config, Overrides,
};

/// Simulate and learn orthogonal random unitary channels.
#[derive(Debug, Parser)]
#[command(name = "oruc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML experiment config; every key has a default except target.channel.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Run this single seed instead of the config's seed list.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Shots per target expectation.
    #[arg(long, global = true, conflicts_with = "exact")]
    shots: Option<usize>,

    /// Exact expectations, overriding any shots setting.
    #[arg(long, global = true)]
    exact: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Learn a Pauli channel on the simplex.
    LearnPauli,
    /// Learn the unitaries of a unitary or ORUC target with its Pauli part fixed.
    LearnUnitary,
    /// Alternate Pauli and unitary learning of an ORUC approximation.
    LearnOruc,
    /// Commuting-balance table and additive feasibility grid for sparse layouts.
    SparseAnalysis,
    /// Resolve a channel file and write it with its PTM.
    MakeChannel,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let overrides = Overrides {
        seed: cli.seed,
        out: cli.out,
        shots: cli.shots,
        exact: cli.exact,
    };
    let result =
        resolve_config(cli.config.as_deref(), &overrides).and_then(|cfg| match cli.command {
            Command::LearnPauli => cmd_learn_pauli(cfg),
            Command::LearnUnitary => cmd_learn_unitary(cfg),
            Command::LearnOruc => cmd_learn_oruc(cfg),
            Command::SparseAnalysis => cmd_sparse_analysis(cfg),
            Command::MakeChannel => cmd_make_channel(cfg),
        });
    match result {
        Ok(out) => {
            for f in out.files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
