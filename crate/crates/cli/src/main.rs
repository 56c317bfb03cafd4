use std::process::ExitCode;

use clap::Parser;

mod args;
mod commands;

use args::{Cli, Command};
use commands::UsageError;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let rendered = e.render().to_string();
            let line = rendered
                .lines()
                .take_while(|l| !l.starts_with("Usage:"))
                .map(str::trim)
                .filter(|l| !l.is_empty())
                .collect::<Vec<_>>()
                .join(" ");
            eprintln!("error: usage: {}", line.trim_start_matches("error: "));
            return ExitCode::from(2);
        }
    };

    let result = match cli.command {
        Command::Render(a) => commands::render(&a),
        Command::Dataset(a) => commands::dataset(&a),
        Command::Eval(a) => commands::eval(&a),
        Command::CompareDecoders(a) => commands::compare_decoders(&a),
        Command::HrirSynth(a) => commands::hrir_synth(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let (kind, code) = classify(&err);
            let msg = format!("{err:#}").replace('\n', " ");
            eprintln!("error: {kind}: {msg}");
            ExitCode::from(code)
        }
    }
}

fn classify(err: &anyhow::Error) -> (&'static str, u8) {
    if err.downcast_ref::<UsageError>().is_some() {
        ("usage", 2)
    } else if let Some(e) = err.downcast_ref::<spatialize_core::Error>() {
        (e.kind(), 1)
    } else if err.downcast_ref::<std::io::Error>().is_some() {
        ("io", 1)
    } else if err.downcast_ref::<serde_json::Error>().is_some() {
        ("json", 1)
    } else {
        ("failed", 1)
    }
}
