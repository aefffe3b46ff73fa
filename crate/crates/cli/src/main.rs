use std::process::ExitCode;

use clap::Parser;
use morcela_cli::args::{Cli, Command, UnigramCommand};
use morcela_cli::report::{emit, manifest_path};
use morcela_cli::{self as app, RunConfig};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", app::render_error(&e));
            ExitCode::from(app::classify(&e).1 as u8)
        }
    }
}

/// Writes a CSV body to `out` (or stdout) and, for files, its manifest.
fn emit_with_manifest<T: serde::Serialize>(
    out: Option<&std::path::Path>,
    body: &str,
    env: &app::Envelope<T>,
) -> anyhow::Result<()> {
    emit(out, body)?;
    if let Some(p) = out {
        emit(Some(&manifest_path(p)), &env.to_json())?;
    }
    Ok(())
}

fn run(cli: &Cli) -> anyhow::Result<()> {
    let mut cfg = cli.command.flags();
    if cli.sequential {
        cfg.sequential = Some(true);
    }
    if let Some(path) = &cli.config {
        cfg = cfg.with_fallback(&RunConfig::load(path)?);
    }
    let out = cfg.out.clone();
    let out = out.as_deref();

    match &cli.command {
        Command::Judgments { .. } => {
            let (judgments, env) = app::cmd_judgments(&cfg)?;
            let s = &env.result;
            eprintln!(
                "{} participants, {} sentences, {} ratings",
                s.participants, s.sentences, s.ratings
            );
            let mut body = Vec::new();
            judgments.write_csv_to(&mut body, out.unwrap_or("<stdout>".as_ref()))?;
            emit_with_manifest(out, &String::from_utf8(body)?, &env)
        }
        Command::Agreement { .. } => emit(out, &app::cmd_agreement(&cfg)?.to_json()),
        Command::Unigram(sub) => {
            let (table, env) = match sub {
                UnigramCommand::Count { .. } => app::cmd_unigram_count(&cfg)?,
                UnigramCommand::FromAggregate { .. } => app::cmd_unigram_from_aggregate(&cfg)?,
            };
            let p = RunConfig::require(&cfg.out, "out")?;
            table.write(p)?;
            emit(Some(&manifest_path(p)), &env.to_json())
        }
        Command::Fit { .. } => emit(out, &app::cmd_fit(&cfg)?.to_json()),
        Command::Compare { .. } => {
            let (cmp, env) = app::cmd_compare(&cfg)?;
            eprint!("{}", cmp.render_table());
            emit_with_manifest(out, &app::comparison_csv(&cmp)?, &env)
        }
        Command::Slope { .. } => emit(out, &app::cmd_slope(&cfg)?.to_json()),
        Command::Report { .. } => {
            let env = app::cmd_report(&cfg)?;
            emit_with_manifest(out, &app::report_csv(&env.result)?, &env)
        }
        Command::Score { .. } => {
            let (rows, env) = app::cmd_score(&cfg)?;
            emit_with_manifest(out, &app::scores_csv(&rows), &env)
        }
    }
}
