// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use mosaic_qme::run::{execute, exit_code, RunRequest, Verb};

/// Open-system dynamics of quasiperiodic mosaic lattices.
#[derive(Debug, Parser)]
#[command(name = "mosaic-qme", version)]
struct Cli {
    #[command(subcommand)]
    verb: VerbArg,

    /// Config file, or the name of a bundled config (e.g. table1_k2).
    #[arg(long, global = true, default_value = "table1_k2")]
    config: String,

    /// Dotted override, repeatable: --set model.n=610
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,

    /// Output directory.
    #[arg(long, global = true, env = "MOSAIC_QME_OUT")]
    out: Option<PathBuf>,

    /// Worker threads for the parallel stages.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Run the independent cross-checks; exit 4 if any fails.
    #[arg(long, global = true)]
    oracle_check: bool,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum VerbArg {
    /// Eigenvalues, IPR per level and mobility edges.
    Spectrum,
    /// Poles, level/pole overlaps and residues.
    Poles,
    /// Time evolution by residue reconstruction, auxiliary ODE and Volterra.
    Evolve,
    /// Poles across a Δ or N axis.
    Sweep,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let verb = match cli.verb {
        VerbArg::Spectrum => Verb::Spectrum,
        VerbArg::Poles => Verb::Poles,
        VerbArg::Evolve => Verb::Evolve,
        VerbArg::Sweep => Verb::Sweep,
    };
    let req = RunRequest {
        verb,
        config: cli.config,
        overrides: cli.overrides,
        out: cli.out,
        oracle_check: cli.oracle_check,
        threads: cli.threads,
    };
    let outcome = execute(&req);
    match &outcome {
        Ok(r) => {
            println!("{}", r.manifest.display());
            if r.oracle_passed == Some(false) {
                eprintln!("error: oracle check failed, see {}", r.manifest.display());
            }
        }
        Err(e) => eprintln!("error: {e}"),
    }
    ExitCode::from(exit_code(&outcome) as u8)
}
