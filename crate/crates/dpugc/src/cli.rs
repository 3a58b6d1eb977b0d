//! Argument parsing and dispatch.

use std::io::Write;

use clap::{Parser, Subcommand};

use crate::commands::{self, EvalArgs, QueryArgs, RegressArgs, SynthArgs, VocabArgs};
use crate::config::TrainArgs;
use crate::error::AppResult;

/// Environment variable capping worker threads.
pub const THREADS_ENV: &str = "DPUGC_THREADS";

#[derive(Debug, Parser)]
#[command(name = "dpugc", version, about = "Differentially private skip-gram embeddings with per-user budgets")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Count tokens and write a vocabulary file.
    BuildVocab(VocabArgs),
    /// Train in plain, dp or personalized mode, writing checkpoints.
    Train(Box<TrainArgs>),
    /// Score checkpoints against a gold model (MAP-Word, MAP-Char).
    Eval(EvalArgs),
    /// Downstream ridge-regression utility on labeled users.
    Regress(RegressArgs),
    /// Print the nearest neighbours of a word.
    Query(QueryArgs),
    /// Generate synthetic corpora.
    Synth(SynthArgs),
}

/// Applies `DPUGC_THREADS` to the global worker pool.
pub fn configure_threads() -> AppResult<()> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize =
            v.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
                crate::AppError::usage(format!("{THREADS_ENV} must be a positive integer, got {v:?}"))
            })?;
        // Fails only if a pool already exists, in which case it is kept.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

/// Runs one command, writing results to `out` and notes to `err`.
pub fn run(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> AppResult<()> {
    configure_threads()?;
    let note = |err: &mut dyn Write, msg: &str| {
        let _ = writeln!(err, "dpugc: {msg}");
    };
    match cli.command {
        Command::BuildVocab(a) => {
            let v = commands::build_vocab(&a)?;
            note(
                err,
                &format!(
                    "vocabulary: {} words, total_tokens {}, min_count {} -> {}",
                    v.len(),
                    v.total_tokens(),
                    v.min_count(),
                    a.out.display()
                ),
            );
        }
        Command::Train(a) => {
            let s = commands::train(*a)?;
            for w in &s.warnings {
                note(err, &format!("warning: {w}"));
            }
            let eps = s.metadata.privacy.epsilon.map_or("inf".to_string(), crate::formats::fmt_f64);
            note(
                err,
                &format!(
                    "{} training: {} steps, {} checkpoints in {}, ε = {eps} at δ = {}",
                    s.metadata.mode.as_str(),
                    s.metadata.step,
                    s.checkpoints.len(),
                    s.out_dir.display(),
                    s.metadata.privacy.target_delta
                ),
            );
        }
        Command::Eval(a) => {
            let o = commands::eval(&a)?;
            for w in &o.warnings {
                note(err, &format!("warning: {w}"));
            }
            if a.out.is_none() {
                let _ = out.write_all(o.csv.as_bytes());
            }
        }
        Command::Regress(a) => {
            let o = commands::regress(&a)?;
            for w in &o.warnings {
                note(err, &format!("warning: {w}"));
            }
            if a.out.is_none() {
                let _ = out.write_all(o.csv.as_bytes());
            }
        }
        Command::Query(a) => {
            let _ = out.write_all(commands::query(&a)?.as_bytes());
        }
        Command::Synth(a) => {
            for p in commands::synth(&a)? {
                note(err, &format!("wrote {}", p.display()));
            }
        }
    }
    Ok(())
}
