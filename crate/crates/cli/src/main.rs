mod args;
mod commands;
mod output;

use std::io::Write;
use std::process::ExitCode;

use anyhow::Context;
use clap::error::ErrorKind;
use clap::Parser;
use rand::Rng;

use args::{Cli, Command, SeedArg};
use commands::RunError;

fn resolve_seed(command: &mut Command) {
    if let Some(seed) = command.seed_mut() {
        if *seed == SeedArg::Random {
            let chosen: u64 = rand::rng().random();
            eprintln!("seed: {chosen}");
            *seed = SeedArg::Fixed(chosen);
        }
    }
}

fn emit(bytes: &[u8], path: Option<&std::path::Path>) -> Result<(), RunError> {
    match path {
        Some(p) => std::fs::write(p, bytes).with_context(|| format!("cannot write {}", p.display()))?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes).and_then(|_| out.flush()).context("cannot write to stdout")?;
        }
    }
    Ok(())
}

fn execute(cli: Cli) -> Result<(), RunError> {
    let mut command = cli.command;
    let check = match &command {
        Command::RerunFromMeta(r) => {
            let text = std::fs::read_to_string(&r.input)
                .with_context(|| format!("cannot read {}", r.input.display()))?;
            let spec = output::parse_meta(&text).map_err(|e| RunError::Usage(format!("{}: {e:#}", r.input.display())))?;
            if matches!(spec, Command::RerunFromMeta(_)) {
                return Err(RunError::Usage("meta header names rerun-from-meta".into()));
            }
            let check = r.check.then_some(text);
            command = spec;
            check
        }
        _ => None,
    };
    resolve_seed(&mut command);
    let table = commands::run(&command, cli.workers)?;
    let bytes = output::render(&command, &table)?;
    match check {
        Some(original) if original.as_bytes() == bytes.as_slice() => {
            eprintln!("reproduced byte-for-byte");
            Ok(())
        }
        Some(_) => Err(RunError::Runtime(anyhow::anyhow!("regenerated output differs from the input"))),
        None => emit(&bytes, cli.output.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(RunError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(RunError::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
