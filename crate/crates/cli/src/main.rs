// SPDX-License-Identifier: Apache-2.0

mod args;
mod commands;
mod config;
mod io;

use std::ffi::OsString;
use std::process::ExitCode;

use clap::{Command as ClapCommand, CommandFactory, FromArgMatches};

use args::{BiasCommand, Cli, Command, PatternCommand};
use io::{Provenance, Sink};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Domain(String),
}

impl From<recpass::Error> for CliError {
    fn from(e: recpass::Error) -> Self {
        CliError::Domain(e.to_string())
    }
}

/// Repeated flags keep the last value, so config defaults can be overridden.
fn override_all(cmd: ClapCommand) -> ClapCommand {
    cmd.args_override_self(true).mut_subcommands(override_all)
}

fn run(argv: Vec<OsString>) -> Result<(), CliError> {
    let mut cmd = override_all(Cli::command());
    let argv = match config::find_config(&argv) {
        Some(path) => config::layer(&cmd, argv, path.as_ref()).map_err(CliError::Usage)?,
        None => argv,
    };
    let matches = match cmd.try_get_matches_from_mut(argv) {
        Ok(m) => m,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let cli = Cli::from_arg_matches(&matches).map_err(|e| CliError::Usage(e.to_string()))?;

    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Domain(e.to_string()))?;
    }

    let sink = Sink {
        out: cli.out.clone(),
        provenance: Provenance {
            tool: format!("recpass {}", env!("CARGO_PKG_VERSION")),
            subcommand: cli.command.name().to_string(),
            config: serde_json::from_str(&cli.command.config_json()).expect("valid json"),
            seed: cli.seed,
        },
    };
    let seed = cli.seed;
    match &cli.command {
        Command::GenSynth(a) => commands::gen_synth(a, seed, &sink),
        Command::Encode(a) => commands::encode(a, &sink),
        Command::Score(a) => commands::score(a, &sink),
        Command::SweepParams(a) => commands::sweep(a, seed, &sink),
        Command::Train(a) => commands::train(a, &sink),
        Command::Attack(a) => commands::attack_cmd(a, seed, &sink),
        Command::Pgm(a) => commands::pgm(a, &sink),
        Command::Bounds(a) => commands::bounds(a, seed, &sink),
        Command::Pattern(PatternCommand::Pgm(a)) => commands::pattern_pgm(a, &sink),
        Command::Pattern(PatternCommand::Enumerate(_)) => commands::pattern_enumerate(&sink),
        Command::Pattern(PatternCommand::Synth(a)) => commands::pattern_synth(a, seed, &sink),
        Command::Bias(BiasCommand::Heatmap(a)) => commands::heatmap(a, &sink),
        Command::Bias(BiasCommand::Ngrams(a)) => commands::ngrams(a, &sink),
    }
}

fn main() -> ExitCode {
    match run(std::env::args_os().collect()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}\n\nFor more information, try '--help'.");
            ExitCode::from(2)
        }
        Err(CliError::Domain(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
