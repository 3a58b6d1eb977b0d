//! User-level DP-SGD with personalized privacy budgets.
//!
//! Every user carries a budget `(ε, δ)_u`. Each step samples only from
//! examples of users still within budget, runs the usual clipped and noised
//! update, asks the global accountant for the step's marginal spend, and
//! charges `spend / L` to each user who contributed to the lot. A user whose
//! spend exceeds the budget is excluded for the rest of training.

use alloc::string::String;
use alloc::vec::Vec;

use hashbrown::HashMap;

use crate::accountant::PrivacyAccountant;
use crate::corpus::{pairs_for_documents, PairConfig, TrainingPair, UserCorpus, Vocabulary};
use crate::dp::{current_spend, train_step};
use crate::dp::{poisson_sample, DpConfig, LogRecord, TrainingLog};
use crate::model::{EmbeddingModel, NegativeSampler, StepWorkspace};
use crate::rng::{stream, Stream, StreamRng};
use crate::{Error, Result};

/// An `(ε, δ)` budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Budget {
    pub epsilon: f64,
    pub delta: f64,
}

impl Budget {
    pub fn new(epsilon: f64, delta: f64) -> Result<Self> {
        if !(epsilon >= 0.0) || !(delta >= 0.0) {
            return Err(Error::InvalidConfig(alloc::format!("negative or NaN budget ({epsilon}, {delta})")));
        }
        Ok(Self { epsilon, delta })
    }

    pub const UNLIMITED: Budget = Budget { epsilon: f64::INFINITY, delta: f64::INFINITY };
}

/// Ledger state of one user.
#[derive(Debug, Clone, PartialEq)]
pub struct UserAccount {
    pub user_id: String,
    pub budget: Budget,
    pub spent_epsilon: f64,
    pub spent_delta: f64,
    pub active: bool,
    pub excluded_at_step: Option<u64>,
}

impl UserAccount {
    fn within_budget(&self) -> bool {
        self.spent_epsilon <= self.budget.epsilon && self.spent_delta <= self.budget.delta
    }
}

/// Per-user budgets and spend, indexed like the users of a [`UserCorpus`].
#[derive(Debug, Clone, PartialEq)]
pub struct BudgetLedger {
    accounts: Vec<UserAccount>,
    index: HashMap<String, usize>,
    default_budget: Budget,
}

impl BudgetLedger {
    /// One account per corpus user, in corpus order. Explicit budgets for
    /// users absent from the corpus are returned as ignored ids.
    pub fn new<I>(corpus: &UserCorpus, budgets: I, default_budget: Budget) -> Result<(Self, Vec<String>)>
    where
        I: IntoIterator<Item = (String, Budget)>,
    {
        Budget::new(default_budget.epsilon, default_budget.delta)?;
        let mut accounts: Vec<UserAccount> = corpus
            .users()
            .iter()
            .map(|u| UserAccount {
                user_id: u.user_id.clone(),
                budget: default_budget,
                spent_epsilon: 0.0,
                spent_delta: 0.0,
                active: true,
                excluded_at_step: None,
            })
            .collect();
        let index: HashMap<String, usize> = accounts.iter().enumerate().map(|(i, a)| (a.user_id.clone(), i)).collect();
        let mut ignored = Vec::new();
        for (user, budget) in budgets {
            Budget::new(budget.epsilon, budget.delta)?;
            match index.get(&user) {
                Some(&i) => accounts[i].budget = budget,
                None => ignored.push(user),
            }
        }
        for a in &mut accounts {
            a.active = a.within_budget();
        }
        Ok((Self { accounts, index, default_budget }, ignored))
    }

    pub fn accounts(&self) -> &[UserAccount] {
        &self.accounts
    }

    pub fn account(&self, user_id: &str) -> Option<&UserAccount> {
        self.index.get(user_id).map(|&i| &self.accounts[i])
    }

    pub fn default_budget(&self) -> Budget {
        self.default_budget
    }

    pub fn is_active(&self, user: usize) -> bool {
        self.accounts[user].active
    }

    pub fn num_active(&self) -> usize {
        self.accounts.iter().filter(|a| a.active).count()
    }
}

/// How a step's spend is split across the users in its lot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ChargeDivisor {
    /// Divide by the configured lot size `L`.
    #[default]
    LotSize,
    /// Divide by the number of distinct users in the lot. Not the
    /// published rule; offered for comparison.
    UsersInLot,
}

/// Charges `step_spend / divisor` to every user in `users_in_lot` (each id
/// once) and returns the users that crossed their budget, now inactive.
pub fn charge_users(
    ledger: &mut BudgetLedger,
    users_in_lot: &[u32],
    step_spend: (f64, f64),
    divisor: f64,
    step: u64,
) -> Vec<u32> {
    let (de, dd) = (step_spend.0 / divisor, step_spend.1 / divisor);
    let mut excluded = Vec::new();
    for &u in users_in_lot {
        let acc = &mut ledger.accounts[u as usize];
        acc.spent_epsilon += de;
        acc.spent_delta += dd;
        if acc.active && !acc.within_budget() {
            acc.active = false;
            acc.excluded_at_step = Some(step);
            excluded.push(u);
        }
    }
    excluded
}

/// Pairs of a user corpus with the index of the user that owns each pair.
#[derive(Debug, Clone, PartialEq)]
pub struct UserPairs {
    pub pairs: Vec<TrainingPair>,
    pub owners: Vec<u32>,
    pub num_users: usize,
}

impl UserPairs {
    /// Pair generation consumes randomness exactly as
    /// [`crate::corpus::corpus_pairs`] over the flattened corpus, so
    /// `pairs` equals the flattened pair list.
    pub fn generate(corpus: &UserCorpus, vocab: &Vocabulary, config: &PairConfig, seed: u64) -> Self {
        let doc_owner: Vec<u32> = corpus
            .users()
            .iter()
            .enumerate()
            .flat_map(|(u, docs)| core::iter::repeat_n(u as u32, docs.documents.len()))
            .collect();
        let mut pairs = Vec::new();
        let mut owners = Vec::new();
        pairs_for_documents(corpus.documents(), vocab, config, seed, |d, p| {
            pairs.extend_from_slice(p);
            owners.extend(core::iter::repeat_n(doc_owner[d], p.len()));
        });
        Self { pairs, owners, num_users: corpus.num_users() }
    }
}

/// Indices of pairs whose owner is still active.
pub fn valid_examples(ledger: &BudgetLedger, owners: &[u32]) -> Vec<u32> {
    owners.iter().enumerate().filter(|(_, &u)| ledger.is_active(u as usize)).map(|(i, _)| i as u32).collect()
}

/// What happened at one personalized step, for auditing.
#[derive(Debug, Clone, PartialEq)]
pub struct ChargeRecord {
    pub step: u64,
    pub epsilon_spend: f64,
    pub delta_spend: f64,
    /// Distinct users in the lot, in first-appearance order.
    pub users: Vec<u32>,
    pub excluded: Vec<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepStatus {
    Trained,
    /// No active user is left; training stops.
    AllBudgetsExhausted,
}

/// Step-by-step driver for personalized training.
#[derive(Debug)]
pub struct PersonalizedTrainer<'a> {
    config: DpConfig,
    data: &'a UserPairs,
    ledger: BudgetLedger,
    divisor: ChargeDivisor,
    sampler: NegativeSampler,
    model: EmbeddingModel,
    accountant: PrivacyAccountant,
    lot_rng: StreamRng,
    ws: StepWorkspace,
    step: u64,
    valid: Vec<u32>,
    log: TrainingLog,
    charges: Vec<ChargeRecord>,
    lot_indices: Vec<u32>,
    exhausted: bool,
}

impl<'a> PersonalizedTrainer<'a> {
    pub fn new(
        model: EmbeddingModel,
        data: &'a UserPairs,
        counts: &[u64],
        config: DpConfig,
        ledger: BudgetLedger,
        divisor: ChargeDivisor,
    ) -> Result<Self> {
        config.validate()?;
        if counts.len() != model.vocab_size() {
            return Err(Error::DimensionMismatch { expected: model.vocab_size(), actual: counts.len() });
        }
        if ledger.accounts.len() != data.num_users {
            return Err(Error::DimensionMismatch { expected: data.num_users, actual: ledger.accounts.len() });
        }
        let sampler = NegativeSampler::new(counts, config.distortion)?;
        let valid = valid_examples(&ledger, &data.owners);
        Ok(Self {
            lot_rng: stream(config.seed, Stream::Lots, 0),
            ws: StepWorkspace::new(&model),
            config,
            data,
            ledger,
            divisor,
            sampler,
            model,
            accountant: PrivacyAccountant::new(),
            step: 0,
            valid,
            log: TrainingLog::default(),
            charges: Vec::new(),
            lot_indices: Vec::new(),
            exhausted: false,
        })
    }

    pub fn step(&mut self) -> Result<StepStatus> {
        if self.valid.is_empty() {
            self.exhausted = true;
            return Ok(StepStatus::AllBudgetsExhausted);
        }
        let t = self.step + 1;
        let k = self.valid.len();
        let q = (self.config.lot_size as f64 / k as f64).min(1.0);
        let positions = poisson_sample(k, q, &mut self.lot_rng)?;
        self.lot_indices.clear();
        self.lot_indices.extend(positions.iter().map(|&p| self.valid[p]));
        let lot: Vec<TrainingPair> = self.lot_indices.iter().map(|&i| self.data.pairs[i as usize]).collect();

        let mut seen = alloc::vec![false; self.data.num_users];
        let mut users = Vec::new();
        for &i in &self.lot_indices {
            let u = self.data.owners[i as usize];
            if !seen[u as usize] {
                seen[u as usize] = true;
                users.push(u);
            }
        }

        let outcome = train_step(&mut self.model, &lot, &self.sampler, &self.config, t, &mut self.ws)?;

        let (eps_t, delta_t) = if self.config.is_private() {
            let before = current_spend(&self.config, &self.accountant)?;
            self.accountant.accumulate(q, self.config.noise_multiplier)?;
            let after = current_spend(&self.config, &self.accountant)?;
            (after.0 - before.0, after.1 - before.1)
        } else {
            (f64::INFINITY, 1.0)
        };
        let divisor = match self.divisor {
            ChargeDivisor::LotSize => self.config.lot_size as f64,
            ChargeDivisor::UsersInLot => users.len().max(1) as f64,
        };
        let excluded = charge_users(&mut self.ledger, &users, (eps_t, delta_t), divisor, t);
        if !excluded.is_empty() {
            self.valid = valid_examples(&self.ledger, &self.data.owners);
        }

        let (epsilon, delta) = current_spend(&self.config, &self.accountant)?;
        self.step = t;
        self.log.records.push(LogRecord {
            step: t,
            loss: outcome.mean_loss,
            epsilon,
            delta,
            lot_size: outcome.examples,
            sampling_ratio: q,
            valid_examples: k,
        });
        self.charges.push(ChargeRecord { step: t, epsilon_spend: eps_t, delta_spend: delta_t, users, excluded });
        Ok(StepStatus::Trained)
    }

    pub fn steps_done(&self) -> u64 {
        self.step
    }

    pub fn is_finished(&self) -> bool {
        self.exhausted || self.step >= self.config.steps
    }

    pub fn is_exhausted(&self) -> bool {
        self.exhausted
    }

    pub fn model(&self) -> &EmbeddingModel {
        &self.model
    }

    pub fn ledger(&self) -> &BudgetLedger {
        &self.ledger
    }

    pub fn accountant(&self) -> &PrivacyAccountant {
        &self.accountant
    }

    pub fn log(&self) -> &TrainingLog {
        &self.log
    }

    pub fn charges(&self) -> &[ChargeRecord] {
        &self.charges
    }

    /// Pair indices of the last lot.
    pub fn last_lot(&self) -> &[u32] {
        &self.lot_indices
    }

    pub fn valid_count(&self) -> usize {
        self.valid.len()
    }

    pub fn checkpoint(&self) -> crate::dp::Checkpoint {
        let (epsilon, delta) = self.log.last().map_or((0.0, 0.0), |r| (r.epsilon, r.delta));
        crate::dp::Checkpoint { step: self.step, model: self.model.clone(), epsilon, delta }
    }

    pub fn into_parts(self) -> (EmbeddingModel, TrainingLog, BudgetLedger) {
        (self.model, self.log, self.ledger)
    }
}

/// Result of a full personalized run.
#[derive(Debug, Clone, PartialEq)]
pub struct PersonalizedRun {
    pub model: EmbeddingModel,
    pub log: TrainingLog,
    pub ledger: BudgetLedger,
    pub checkpoints: Vec<crate::dp::Checkpoint>,
    pub charges: Vec<ChargeRecord>,
    /// Set when training stopped because every user ran out of budget.
    pub exhausted_at_step: Option<u64>,
}

pub fn train_personalized(
    model: EmbeddingModel,
    data: &UserPairs,
    counts: &[u64],
    config: &DpConfig,
    ledger: BudgetLedger,
    divisor: ChargeDivisor,
    checkpoints: &[u64],
) -> Result<PersonalizedRun> {
    let mut trainer = PersonalizedTrainer::new(model, data, counts, config.clone(), ledger, divisor)?;
    let mut snaps = Vec::new();
    while !trainer.is_finished() {
        if trainer.step()? == StepStatus::AllBudgetsExhausted {
            break;
        }
        if checkpoints.contains(&trainer.steps_done()) {
            snaps.push(trainer.checkpoint());
        }
    }
    let exhausted_at_step = trainer.is_exhausted().then_some(trainer.steps_done() + 1);
    let charges = trainer.charges.clone();
    let (model, log, ledger) = trainer.into_parts();
    Ok(PersonalizedRun { model, log, ledger, checkpoints: snaps, charges, exhausted_at_step })
}

impl core::fmt::Display for StepStatus {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(match self {
            StepStatus::Trained => "trained",
            StepStatus::AllBudgetsExhausted => "all budgets exhausted",
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{build_vocab, parse_user_corpus, tokenize};
    use alloc::string::ToString;

    fn corpus() -> (Vocabulary, UserCorpus) {
        let text = "u1\ta b c d\nu2\te f g h\n";
        let v = build_vocab(tokenize("a b c d e f g h", true), 1, None).unwrap();
        let c = parse_user_corpus(text, &v, true).unwrap();
        (v, c)
    }

    #[test]
    fn budgets_fall_back_to_default() {
        let (_, c) = corpus();
        let budgets = [
            ("u1".to_string(), Budget::new(0.5, 0.01).unwrap()),
            ("ghost".to_string(), Budget::new(1.0, 0.1).unwrap()),
        ];
        let (ledger, ignored) = BudgetLedger::new(&c, budgets, Budget::new(1.0, 0.05).unwrap()).unwrap();
        assert_eq!(ledger.account("u1").unwrap().budget, Budget { epsilon: 0.5, delta: 0.01 });
        assert_eq!(ledger.account("u2").unwrap().budget, Budget { epsilon: 1.0, delta: 0.05 });
        assert_eq!(ignored, alloc::vec!["ghost".to_string()]);
        let (all_default, _) = BudgetLedger::new(&c, [], Budget::new(1.0, 0.05).unwrap()).unwrap();
        assert!(all_default.accounts().iter().all(|a| a.budget.epsilon == 1.0 && a.active));
        assert!(Budget::new(-1.0, 0.1).is_err());
    }

    #[test]
    fn charging_follows_the_direct_formula() {
        let (_, c) = corpus();
        let (mut ledger, _) = BudgetLedger::new(&c, [], Budget::new(1.0, 1.0).unwrap()).unwrap();
        let out = charge_users(&mut ledger, &[0], (0.1, 0.001), 10.0, 1);
        assert!(out.is_empty());
        let u1 = ledger.account("u1").unwrap();
        assert_eq!((u1.spent_epsilon, u1.spent_delta), (0.1 / 10.0, 0.001 / 10.0));
        assert_eq!(ledger.account("u2").unwrap().spent_epsilon, 0.0);
    }

    #[test]
    fn crossing_the_budget_excludes() {
        let (_, c) = corpus();
        let budgets = [("u1".to_string(), Budget::new(0.005, 1.0).unwrap())];
        let (mut ledger, _) = BudgetLedger::new(&c, budgets, Budget::UNLIMITED).unwrap();
        let out = charge_users(&mut ledger, &[0, 1], (0.1, 0.0), 10.0, 4);
        assert_eq!(out, alloc::vec![0]);
        assert_eq!(ledger.account("u1").unwrap().excluded_at_step, Some(4));
        assert!(ledger.account("u2").unwrap().active);
    }

    #[test]
    fn valid_examples_track_active_users() {
        let (v, c) = corpus();
        let data = UserPairs::generate(&c, &v, &PairConfig::default(), 3);
        let (mut ledger, _) = BudgetLedger::new(&c, [], Budget::new(1.0, 1.0).unwrap()).unwrap();
        assert_eq!(valid_examples(&ledger, &data.owners).len(), data.pairs.len());
        charge_users(&mut ledger, &[1], (100.0, 0.0), 1.0, 1);
        let half = valid_examples(&ledger, &data.owners);
        assert!(half.iter().all(|&i| data.owners[i as usize] == 0));
        charge_users(&mut ledger, &[0], (100.0, 0.0), 1.0, 2);
        assert!(valid_examples(&ledger, &data.owners).is_empty());
    }

    #[test]
    fn user_pairs_match_flattened_pairs() {
        let (v, c) = corpus();
        let cfg = PairConfig::default();
        let data = UserPairs::generate(&c, &v, &cfg, 11);
        assert_eq!(data.pairs, crate::corpus::corpus_pairs(c.documents(), &v, &cfg, 11));
        assert_eq!(data.owners.len(), data.pairs.len());
    }
}
