use std::path::PathBuf;

use clap::{Args, Subcommand};

use dpugc_core::synth::{labeled_users, topic_corpus, LabeledUsersConfig, TopicCorpusConfig};

use super::create_dir;
use crate::error::{write_file, AppResult};

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    #[command(subcommand)]
    pub kind: SynthKind,
}

#[derive(Debug, Clone, Subcommand)]
pub enum SynthKind {
    /// Topic-clustered running text, one document per line.
    Corpus {
        #[arg(long, default_value_t = 1_000_000)]
        tokens: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Labeled users with a planted linear signal, plus a public corpus.
    Users {
        #[arg(long, default_value_t = 200)]
        users: usize,
        #[arg(long, default_value_t = 11)]
        seed: u64,
        /// Writes labeled.tsv, users.tsv and public.txt.
        #[arg(long)]
        out_dir: PathBuf,
    },
}

pub fn synth(args: &SynthArgs) -> AppResult<Vec<PathBuf>> {
    match &args.kind {
        SynthKind::Corpus { tokens, seed, out } => {
            let text = topic_corpus(&TopicCorpusConfig { tokens: *tokens, seed: *seed, ..Default::default() })?;
            write_file(out, text.as_bytes())?;
            Ok(vec![out.clone()])
        }
        SynthKind::Users { users, seed, out_dir } => {
            let s = labeled_users(&LabeledUsersConfig { users: *users, seed: *seed, ..Default::default() })?;
            create_dir(out_dir)?;
            let files = [
                ("labeled.tsv", s.labeled_tsv()),
                ("users.tsv", s.user_corpus()),
                ("public.txt", s.public_corpus.clone()),
            ];
            let mut written = Vec::new();
            for (name, body) in files {
                let p = out_dir.join(name);
                write_file(&p, body.as_bytes())?;
                written.push(p);
            }
            Ok(written)
        }
    }
}
