//! Text ingestion: tokenization, vocabulary, encoding and skip-gram pairs.

use alloc::borrow::ToOwned;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use hashbrown::HashMap;
use rand::Rng;

use crate::math::sqrt;
use crate::{Error, Result};

/// Surface form of the reserved out-of-vocabulary token.
pub const UNK_TOKEN: &str = "<unk>";
/// Id of the reserved out-of-vocabulary token.
pub const UNK_ID: u32 = 0;

pub const DEFAULT_MIN_COUNT: u64 = 5;
pub const DEFAULT_WINDOW: usize = 5;

/// Splits on whitespace runs, optionally lowercasing.
pub fn tokenize(text: &str, lowercase: bool) -> Vec<String> {
    text.split_whitespace().map(|t| if lowercase { t.to_lowercase() } else { t.to_owned() }).collect()
}

/// Token ↔ id mapping with occurrence counts.
///
/// Id 0 is always [`UNK_TOKEN`]; the remaining ids are ordered by descending
/// count. Rare tokens are folded into UNK's count rather than dropped, so
/// `counts` sums to `total_tokens`.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    words: Vec<String>,
    index: HashMap<String, u32>,
    counts: Vec<u64>,
    total_tokens: u64,
    min_count: u64,
}

impl Vocabulary {
    /// Rebuilds a vocabulary from an id-ordered word list, e.g. when loading
    /// a vocab or model file. `words[0]` must be [`UNK_TOKEN`].
    pub fn from_parts(words: Vec<String>, counts: Vec<u64>, min_count: u64) -> Result<Self> {
        if words.len() != counts.len() {
            return Err(Error::DimensionMismatch { expected: words.len(), actual: counts.len() });
        }
        if words.first().map(String::as_str) != Some(UNK_TOKEN) {
            return Err(Error::Malformed { line: 1, reason: "first vocabulary entry must be <unk>".to_string() });
        }
        let mut index = HashMap::with_capacity(words.len());
        for (i, w) in words.iter().enumerate() {
            if index.insert(w.clone(), i as u32).is_some() {
                return Err(Error::Malformed { line: i + 1, reason: alloc::format!("duplicate word {w:?}") });
            }
        }
        let total_tokens = counts.iter().sum();
        Ok(Self { words, index, counts, total_tokens, min_count })
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn id(&self, word: &str) -> Option<u32> {
        self.index.get(word).copied()
    }

    /// Id of `word`, or [`UNK_ID`] when absent.
    pub fn id_or_unk(&self, word: &str) -> u32 {
        self.id(word).unwrap_or(UNK_ID)
    }

    pub fn word(&self, id: u32) -> &str {
        &self.words[id as usize]
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn count(&self, id: u32) -> u64 {
        self.counts[id as usize]
    }

    pub fn total_tokens(&self) -> u64 {
        self.total_tokens
    }

    pub fn min_count(&self) -> u64 {
        self.min_count
    }

    pub fn unk_id(&self) -> u32 {
        UNK_ID
    }
}

/// Incremental counter behind [`build_vocab`]; feed it token by token when
/// the corpus does not fit in one allocation.
#[derive(Debug, Default)]
pub struct VocabBuilder {
    // token -> (count, first position)
    seen: HashMap<String, (u64, u64)>,
    position: u64,
}

impl VocabBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, token: &str) {
        let pos = self.position;
        self.position += 1;
        if let Some(entry) = self.seen.get_mut(token) {
            entry.0 += 1;
        } else {
            self.seen.insert(token.to_owned(), (1, pos));
        }
    }

    pub fn tokens_seen(&self) -> u64 {
        self.position
    }

    /// Keeps tokens with `count >= min_count`, at most `max_size` of them
    /// (UNK's slot is extra), highest count first, ties by first occurrence.
    pub fn finish(self, min_count: u64, max_size: Option<usize>) -> Result<Vocabulary> {
        if min_count == 0 {
            return Err(Error::InvalidConfig("min_count must be at least 1".to_string()));
        }
        if self.position == 0 {
            return Err(Error::EmptyCorpus);
        }
        let total = self.position;
        let mut entries: Vec<(String, u64, u64)> =
            self.seen.into_iter().filter(|(w, _)| w != UNK_TOKEN).map(|(w, (c, first))| (w, c, first)).collect();
        entries.sort_unstable_by(|a, b| b.1.cmp(&a.1).then(a.2.cmp(&b.2)));

        let cap = max_size.unwrap_or(usize::MAX);
        let mut words = Vec::new();
        let mut counts = Vec::new();
        words.push(UNK_TOKEN.to_string());
        counts.push(0);
        let mut kept_total = 0u64;
        for (w, c, _) in entries.into_iter() {
            if c < min_count || words.len() > cap {
                break;
            }
            kept_total += c;
            words.push(w);
            counts.push(c);
        }
        counts[0] = total - kept_total;
        let mut vocab = Vocabulary::from_parts(words, counts, min_count)?;
        vocab.total_tokens = total;
        Ok(vocab)
    }
}

/// Builds a vocabulary from a token stream.
pub fn build_vocab<I, S>(tokens: I, min_count: u64, max_size: Option<usize>) -> Result<Vocabulary>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut builder = VocabBuilder::new();
    for t in tokens {
        builder.add(t.as_ref());
    }
    builder.finish(min_count, max_size)
}

/// A tokenized document as vocabulary ids.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Document {
    pub token_ids: Vec<u32>,
}

impl Document {
    pub fn len(&self) -> usize {
        self.token_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.token_ids.is_empty()
    }
}

/// Maps tokens to ids; out-of-vocabulary tokens become UNK.
pub fn encode<S: AsRef<str>>(tokens: &[S], vocab: &Vocabulary) -> Document {
    Document { token_ids: tokens.iter().map(|t| vocab.id_or_unk(t.as_ref())).collect() }
}

pub fn decode<'v>(doc: &Document, vocab: &'v Vocabulary) -> Vec<&'v str> {
    doc.token_ids.iter().map(|&id| vocab.word(id)).collect()
}

/// Documents of one user, in input order.
#[derive(Debug, Clone, PartialEq)]
pub struct UserDocuments {
    pub user_id: String,
    pub documents: Vec<Document>,
}

/// Documents grouped by user. Users keep their first-appearance order so
/// that flattening is deterministic.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct UserCorpus {
    users: Vec<UserDocuments>,
    index: HashMap<String, usize>,
}

impl UserCorpus {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, user_id: &str, doc: Document) -> Result<()> {
        if user_id.is_empty() {
            return Err(Error::InvalidConfig("empty user id".to_string()));
        }
        let slot = match self.index.get(user_id) {
            Some(&i) => i,
            None => {
                self.users.push(UserDocuments { user_id: user_id.to_string(), documents: Vec::new() });
                self.index.insert(user_id.to_string(), self.users.len() - 1);
                self.users.len() - 1
            }
        };
        self.users[slot].documents.push(doc);
        Ok(())
    }

    pub fn users(&self) -> &[UserDocuments] {
        &self.users
    }

    pub fn user(&self, user_id: &str) -> Option<&UserDocuments> {
        self.index.get(user_id).map(|&i| &self.users[i])
    }

    pub fn num_users(&self) -> usize {
        self.users.len()
    }

    pub fn num_documents(&self) -> usize {
        self.users.iter().map(|u| u.documents.len()).sum()
    }

    /// Every document, users in order, each user's documents in order.
    pub fn documents(&self) -> impl Iterator<Item = &Document> {
        self.users.iter().flat_map(|u| u.documents.iter())
    }
}

/// Splits `user_id<TAB>text` records. Blank lines are skipped; line numbers
/// in errors are 1-based.
pub fn parse_user_records(text: &str) -> Result<Vec<(usize, &str, &str)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.trim().is_empty() {
            continue;
        }
        let (user, body) = line
            .split_once('\t')
            .ok_or_else(|| Error::Malformed { line: i + 1, reason: "missing tab separator".to_string() })?;
        if user.is_empty() {
            return Err(Error::Malformed { line: i + 1, reason: "empty user id".to_string() });
        }
        out.push((i + 1, user, body));
    }
    Ok(out)
}

/// Parses a user corpus (`user_id<TAB>document text` per line) against a
/// vocabulary.
pub fn parse_user_corpus(text: &str, vocab: &Vocabulary, lowercase: bool) -> Result<UserCorpus> {
    let mut corpus = UserCorpus::new();
    for (_, user, body) in parse_user_records(text)? {
        let doc = encode(&tokenize(body, lowercase), vocab);
        corpus.push(user, doc)?;
    }
    Ok(corpus)
}

/// A (center, context) skip-gram example.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TrainingPair {
    pub center: u32,
    pub context: u32,
}

/// How far each center word reaches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WindowMode {
    /// Reach drawn uniformly from `1..=window` per center (word2vec).
    #[default]
    Dynamic,
    /// Always `window`.
    Fixed,
}

/// Appends the skip-gram pairs of `doc` to `out`.
pub fn generate_pairs_into<R: Rng + ?Sized>(
    doc: &Document,
    window: usize,
    mode: WindowMode,
    rng: &mut R,
    out: &mut Vec<TrainingPair>,
) {
    let ids = &doc.token_ids;
    let n = ids.len();
    if n < 2 || window == 0 {
        return;
    }
    for t in 0..n {
        let reach = match mode {
            WindowMode::Dynamic => rng.random_range(1..=window),
            WindowMode::Fixed => window,
        };
        let lo = t.saturating_sub(reach);
        let hi = (t + reach).min(n - 1);
        for j in lo..=hi {
            if j != t {
                out.push(TrainingPair { center: ids[t], context: ids[j] });
            }
        }
    }
}

pub fn generate_pairs<R: Rng + ?Sized>(
    doc: &Document,
    window: usize,
    mode: WindowMode,
    rng: &mut R,
) -> Vec<TrainingPair> {
    let mut out = Vec::new();
    generate_pairs_into(doc, window, mode, rng, &mut out);
    out
}

/// How documents are turned into training pairs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairConfig {
    pub window: usize,
    pub mode: WindowMode,
    /// Frequent-word subsampling threshold; `None` disables it.
    pub subsample: Option<f64>,
}

impl Default for PairConfig {
    fn default() -> Self {
        Self { window: DEFAULT_WINDOW, mode: WindowMode::Dynamic, subsample: None }
    }
}

/// Generates pairs for a sequence of documents with one deterministic
/// stream, calling `sink(doc_index, pairs_of_that_doc)` per document.
pub fn pairs_for_documents<'d, I, F>(docs: I, vocab: &Vocabulary, config: &PairConfig, seed: u64, mut sink: F)
where
    I: IntoIterator<Item = &'d Document>,
    F: FnMut(usize, &[TrainingPair]),
{
    let mut rng = crate::rng::stream(seed, crate::rng::Stream::Pairs, 0);
    let mut sub_rng = crate::rng::stream(seed, crate::rng::Stream::Subsample, 0);
    let subsampler = config.subsample.map(|t| Subsampler::new(vocab, t));
    let mut buf = Vec::new();
    for (i, doc) in docs.into_iter().enumerate() {
        buf.clear();
        match &subsampler {
            Some(s) => {
                let kept = s.apply(doc, &mut sub_rng);
                generate_pairs_into(&kept, config.window, config.mode, &mut rng, &mut buf);
            }
            None => generate_pairs_into(doc, config.window, config.mode, &mut rng, &mut buf),
        }
        sink(i, &buf);
    }
}

/// All pairs of `docs`, in document order.
pub fn corpus_pairs<'d, I>(docs: I, vocab: &Vocabulary, config: &PairConfig, seed: u64) -> Vec<TrainingPair>
where
    I: IntoIterator<Item = &'d Document>,
{
    let mut out = Vec::new();
    pairs_for_documents(docs, vocab, config, seed, |_, p| out.extend_from_slice(p));
    out
}

/// Frequent-word subsampling with word2vec's threshold rule. Off unless the
/// caller opts in.
#[derive(Debug, Clone)]
pub struct Subsampler {
    keep: Vec<f64>,
}

impl Subsampler {
    pub fn new(vocab: &Vocabulary, threshold: f64) -> Self {
        let total = vocab.total_tokens() as f64;
        let keep = vocab
            .counts()
            .iter()
            .map(|&c| {
                if c == 0 || threshold <= 0.0 {
                    return 1.0;
                }
                let ratio = c as f64 / (threshold * total);
                ((sqrt(ratio) + 1.0) / ratio).min(1.0)
            })
            .collect();
        Self { keep }
    }

    pub fn keep_probability(&self, id: u32) -> f64 {
        self.keep[id as usize]
    }

    pub fn apply<R: Rng + ?Sized>(&self, doc: &Document, rng: &mut R) -> Document {
        let token_ids = doc
            .token_ids
            .iter()
            .copied()
            .filter(|&id| {
                let p = self.keep[id as usize];
                p >= 1.0 || rng.random::<f64>() < p
            })
            .collect();
        Document { token_ids }
    }
}
