use std::path::{Path, PathBuf};

use dpugc_core::corpus::{corpus_pairs, Vocabulary};
use dpugc_core::dp::{DpTrainer, TrainingLog};
use dpugc_core::model::{EmbeddingModel, WordEmbedding};
use dpugc_core::personalized::{Budget, BudgetLedger, PersonalizedTrainer, StepStatus, UserPairs};

use super::{corpus_tokens, create_dir, plain_documents, user_documents};
use crate::config::{out_dir, Mode, TrainArgs, TrainSettings};
use crate::error::{read_to_string, write_file, AppError, AppResult};
use crate::formats::{read_budgets, read_vocab, spend_csv, training_log_csv, write_vocab, write_word2vec, LogFlavor};
use crate::metadata::{now_unix, Fingerprint, PrivacyStatement, RunMetadata, SCHEMA_VERSION};

pub const VOCAB_FILE: &str = "vocab.txt";
pub const LOG_FILE: &str = "training_log.csv";
pub const SPEND_FILE: &str = "spend.csv";
pub const RUN_METADATA_FILE: &str = "run.json";

pub fn checkpoint_file(step: u64) -> String {
    format!("checkpoint-{step:06}.txt")
}

/// Files written by a training run.
#[derive(Debug, Clone)]
pub struct TrainSummary {
    pub out_dir: PathBuf,
    pub checkpoints: Vec<PathBuf>,
    pub metadata: RunMetadata,
    pub warnings: Vec<String>,
}

enum Trainer<'a> {
    Global(DpTrainer<'a>),
    Personal(PersonalizedTrainer<'a>),
}

impl Trainer<'_> {
    /// `false` once every user's budget is gone.
    fn step(&mut self) -> dpugc_core::Result<bool> {
        match self {
            Trainer::Global(t) => t.step().map(|_| true),
            Trainer::Personal(t) => t.step().map(|s| s == StepStatus::Trained),
        }
    }

    fn steps_done(&self) -> u64 {
        match self {
            Trainer::Global(t) => t.steps_done(),
            Trainer::Personal(t) => t.steps_done(),
        }
    }

    fn model(&self) -> &EmbeddingModel {
        match self {
            Trainer::Global(t) => t.model(),
            Trainer::Personal(t) => t.model(),
        }
    }

    fn log(&self) -> &TrainingLog {
        match self {
            Trainer::Global(t) => t.log(),
            Trainer::Personal(t) => t.log(),
        }
    }

    fn spend(&self) -> (f64, f64) {
        self.log().last().map_or((0.0, 0.0), |r| (r.epsilon, r.delta))
    }
}

struct Writer<'a> {
    dir: &'a Path,
    vocab: &'a Vocabulary,
    template: RunMetadata,
    written: Vec<PathBuf>,
}

impl Writer<'_> {
    fn metadata(&self, step: u64, spend: (f64, f64)) -> RunMetadata {
        let mut m = self.template.clone();
        m.step = step;
        m.privacy.epsilon = spend.0.is_finite().then_some(spend.0);
        m.privacy.delta = spend.1;
        m
    }

    fn checkpoint(&mut self, step: u64, model: &EmbeddingModel, spend: (f64, f64)) -> AppResult<()> {
        let path = self.dir.join(checkpoint_file(step));
        let emb = WordEmbedding::new(self.vocab.clone(), model.clone())?;
        write_file(&path, write_word2vec(&emb).as_bytes())?;
        let meta = self.metadata(step, spend);
        write_file(&crate::metadata::metadata_path(&path), meta.to_json().as_bytes())?;
        self.written.push(path);
        Ok(())
    }
}

fn privacy_unit(settings: &TrainSettings) -> &'static str {
    match (settings.mode, settings.sigma > 0.0) {
        (_, false) => "none",
        (Mode::Personalized, true) => "user-personalized",
        (_, true) => "example",
    }
}

pub fn train(args: TrainArgs) -> AppResult<TrainSummary> {
    let args = args.with_config_file()?;
    let settings = args.resolve()?;
    let dir = out_dir(&args)?.to_path_buf();
    let (corpus_path, is_user) = match (&args.corpus, &args.user_corpus) {
        (Some(p), _) => (p.clone(), false),
        (_, Some(p)) => (p.clone(), true),
        _ => unreachable!("resolve checks the corpus flags"),
    };
    let text = read_to_string(&corpus_path)?;
    let mut warnings = Vec::new();

    let vocab = match &args.vocab {
        Some(p) => read_vocab(&read_to_string(p)?).map_err(|source| AppError::Format { path: p.clone(), source })?,
        None => {
            let tokens = corpus_tokens(&text, is_user, settings.lowercase, &corpus_path)?;
            dpugc_core::corpus::build_vocab(tokens, settings.min_count, settings.max_vocab)
                .map_err(|source| AppError::Format { path: corpus_path.clone(), source })?
        }
    };

    let budget_text = match &args.budget_file {
        Some(p) => Some(read_to_string(p)?),
        None => None,
    };
    create_dir(&dir)?;
    write_file(&dir.join(VOCAB_FILE), write_vocab(&vocab).as_bytes())?;

    let config = settings.dp_config();
    let model = EmbeddingModel::init(vocab.len(), settings.dim, settings.seed)?;
    let pair_config = settings.pair_config();

    // Both branches keep their data alive for the trainer's borrow.
    let pairs;
    let user_pairs;
    let (mut trainer, examples) = if settings.mode == Mode::Personalized {
        let corpus = user_documents(&text, &vocab, settings.lowercase, &corpus_path)?;
        user_pairs = UserPairs::generate(&corpus, &vocab, &pair_config, settings.seed);
        let budgets = match (&budget_text, &args.budget_file) {
            (Some(t), Some(p)) => read_budgets(t, p)?,
            _ => Vec::new(),
        };
        let [e, d] = settings.default_budget.expect("personalized settings carry a default budget");
        let (ledger, ignored) = BudgetLedger::new(&corpus, budgets, Budget::new(e, d)?)?;
        for id in ignored {
            warnings.push(format!("budget file names unknown user {id:?}; ignored"));
        }
        let divisor = settings.charge_divisor.unwrap_or_default().into();
        let n = user_pairs.pairs.len();
        (Trainer::Personal(PersonalizedTrainer::new(model, &user_pairs, vocab.counts(), config, ledger, divisor)?), n)
    } else {
        pairs = if is_user {
            let corpus = user_documents(&text, &vocab, settings.lowercase, &corpus_path)?;
            corpus_pairs(corpus.documents(), &vocab, &pair_config, settings.seed)
        } else {
            let docs = plain_documents(&text, &vocab, settings.lowercase);
            corpus_pairs(docs.iter(), &vocab, &pair_config, settings.seed)
        };
        (Trainer::Global(DpTrainer::new(model, &pairs, vocab.counts(), config)?), pairs.len())
    };

    let template = RunMetadata {
        schema_version: SCHEMA_VERSION,
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        mode: settings.mode,
        step: 0,
        seed: settings.seed,
        config: settings.clone(),
        corpus: Fingerprint::of(&corpus_path, text.as_bytes()),
        budget_file: args.budget_file.as_ref().zip(budget_text.as_ref()).map(|(p, t)| Fingerprint::of(p, t.as_bytes())),
        vocab_size: vocab.len(),
        dim: settings.dim,
        examples,
        checkpoints: settings.checkpoints.clone(),
        privacy: PrivacyStatement {
            unit: privacy_unit(&settings).into(),
            epsilon: None,
            delta: 1.0,
            target_delta: settings.target_delta,
            target_epsilon: settings.target_epsilon,
            accountant: "rdp-poisson-subsampled-gaussian".into(),
            sparse_noise_no_guarantee: settings.sparse_noise && settings.sigma > 0.0,
        },
        spend_file: (settings.mode == Mode::Personalized).then(|| SPEND_FILE.into()),
        stopped_early_at_step: None,
        created_unix: now_unix(),
    };
    if template.privacy.sparse_noise_no_guarantee {
        warnings.push("--sparse-noise: the reported (ε, δ) is NOT a valid guarantee for this model".into());
    }
    let mut writer = Writer { dir: &dir, vocab: &vocab, template, written: Vec::new() };
    let flavor = if settings.mode == Mode::Personalized { LogFlavor::Personalized } else { LogFlavor::Global };

    let mut stopped_early = None;
    let mut pending = settings.checkpoints.iter().copied().peekable();
    while trainer.steps_done() < settings.steps {
        match trainer.step() {
            Ok(true) => {}
            Ok(false) => {
                stopped_early = Some(trainer.steps_done() + 1);
                break;
            }
            Err(e) => {
                write_file(&dir.join(LOG_FILE), training_log_csv(trainer.log(), flavor).as_bytes())?;
                return Err(e.into());
            }
        }
        let t = trainer.steps_done();
        while pending.peek() == Some(&t) {
            pending.next();
            writer.checkpoint(t, trainer.model(), trainer.spend())?;
        }
    }
    if let Some(at) = stopped_early {
        warnings.push(format!("every user exhausted their budget; training stopped before step {at}"));
        writer.template.stopped_early_at_step = Some(at);
        for step in pending {
            writer.checkpoint(step, trainer.model(), trainer.spend())?;
        }
    }

    write_file(&dir.join(LOG_FILE), training_log_csv(trainer.log(), flavor).as_bytes())?;
    if let Trainer::Personal(t) = &trainer {
        write_file(&dir.join(SPEND_FILE), spend_csv(t.ledger()).as_bytes())?;
    }
    let metadata = writer.metadata(trainer.steps_done(), trainer.spend());
    write_file(&dir.join(RUN_METADATA_FILE), metadata.to_json().as_bytes())?;
    let checkpoints = writer.written;
    Ok(TrainSummary { out_dir: dir, checkpoints, metadata, warnings })
}
