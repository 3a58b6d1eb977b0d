//! Synthetic corpora with planted structure.
//!
//! [`topic_corpus`] produces running text in which a handful of named word
//! clusters (numbers, pronouns, places, ...) co-occur with each other, so
//! that nearest-neighbour evaluation has something to find. It stands in for
//! a real corpus when none is available.
//!
//! [`labeled_users`] produces users whose documents mix public and private
//! topics and whose score is a linear function of their private-topic
//! proportions. The public corpus shares no private-topic vocabulary, so
//! only an embedding trained on the users' own text can see the signal.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, Gamma, Normal, Zipf};

use crate::rng::{stream, Stream, StreamRng};
use crate::utility::{LabeledUser, LabeledUserSet};
use crate::{Error, Result};

const FUNCTION_WORDS: [&str; 12] = ["the", "of", "and", "in", "a", "to", "is", "was", "as", "for", "by", "with"];

const NAMED_CLUSTERS: [&[&str]; 8] = [
    &["zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine"],
    &["he", "she", "they", "we", "it", "you", "i"],
    &["year", "years", "month", "day", "century", "decade", "week", "season"],
    &["war", "army", "battle", "forces", "military", "troops", "soldiers", "siege"],
    &["city", "town", "village", "capital", "region", "country", "world", "province"],
    &["first", "second", "third", "last", "new", "old", "early", "late"],
    &["king", "queen", "prince", "emperor", "duke", "throne", "crown", "royal"],
    &["church", "bishop", "priest", "temple", "religion", "faith", "saint", "pope"],
];

#[derive(Debug, Clone, PartialEq)]
pub struct TopicCorpusConfig {
    pub tokens: usize,
    /// Generated clusters on top of the named ones.
    pub extra_topics: usize,
    pub words_per_extra_topic: usize,
    /// Share of tokens drawn from the function-word pool.
    pub function_share: f64,
    pub sentence_len: usize,
    pub sentences_per_doc: usize,
    pub seed: u64,
}

impl Default for TopicCorpusConfig {
    fn default() -> Self {
        Self {
            tokens: 1_000_000,
            extra_topics: 40,
            words_per_extra_topic: 25,
            function_share: 0.3,
            sentence_len: 12,
            sentences_per_doc: 8,
            seed: 7,
        }
    }
}

/// Word clusters of a topic corpus; `clusters[t]` lists topic `t`'s words in
/// Zipf rank order.
pub fn topic_clusters(config: &TopicCorpusConfig) -> Vec<Vec<String>> {
    let mut clusters: Vec<Vec<String>> =
        NAMED_CLUSTERS.iter().map(|c| c.iter().map(|w| w.to_string()).collect()).collect();
    for t in 0..config.extra_topics {
        clusters.push((0..config.words_per_extra_topic).map(|i| pseudo_word(t, i)).collect());
    }
    clusters
}

fn pseudo_word(topic: usize, index: usize) -> String {
    const SYLLABLES: [&str; 16] =
        ["ka", "lo", "mi", "ra", "te", "su", "no", "vi", "de", "pa", "gu", "ze", "bo", "fi", "ha", "ju"];
    let mut w = String::new();
    for digit in [topic / 16, topic % 16, index % 16, index / 16] {
        w.push_str(SYLLABLES[digit % 16]);
    }
    w
}

/// One line per document, whitespace separated, lowercase.
pub fn topic_corpus(config: &TopicCorpusConfig) -> Result<String> {
    if config.sentence_len == 0 || config.sentences_per_doc == 0 || !(0.0..1.0).contains(&config.function_share) {
        return Err(Error::InvalidConfig("degenerate topic corpus configuration".into()));
    }
    let clusters = topic_clusters(config);
    let mut rng = stream(config.seed, Stream::Synth, 0);
    let fzipf = zipf(FUNCTION_WORDS.len())?;
    let zipfs: Vec<Zipf<f64>> = clusters.iter().map(|c| zipf(c.len())).collect::<Result<_>>()?;
    let mut out = String::with_capacity(config.tokens * 7);
    let mut produced = 0usize;
    while produced < config.tokens {
        let main = rng.random_range(0..clusters.len());
        let side = rng.random_range(0..clusters.len());
        for _ in 0..config.sentences_per_doc {
            let topic = if rng.random_bool(0.75) { main } else { side };
            for _ in 0..config.sentence_len {
                if produced == config.tokens {
                    break;
                }
                let word = if rng.random_bool(config.function_share) {
                    FUNCTION_WORDS[rank(&fzipf, &mut rng)]
                } else {
                    clusters[topic][rank(&zipfs[topic], &mut rng)].as_str()
                };
                if !out.is_empty() && !out.ends_with('\n') {
                    out.push(' ');
                }
                out.push_str(word);
                produced += 1;
            }
        }
        out.push('\n');
    }
    Ok(out)
}

fn zipf(n: usize) -> Result<Zipf<f64>> {
    Zipf::new(n as f64, 1.0).map_err(|_| Error::InvalidConfig("empty word cluster".into()))
}

fn rank(z: &Zipf<f64>, rng: &mut StreamRng) -> usize {
    z.sample(rng) as usize - 1
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledUsersConfig {
    pub users: usize,
    pub docs_per_user: usize,
    pub doc_len: usize,
    pub public_topics: usize,
    pub private_topics: usize,
    pub words_per_topic: usize,
    /// Dirichlet concentration of each user's topic mixtures.
    pub concentration: f64,
    /// Share of a user's tokens drawn from private topics.
    pub private_share: f64,
    pub noise_std: f64,
    /// Tokens of the public corpus.
    pub public_tokens: usize,
    pub seed: u64,
}

impl Default for LabeledUsersConfig {
    fn default() -> Self {
        Self {
            users: 200,
            docs_per_user: 6,
            doc_len: 40,
            public_topics: 6,
            private_topics: 4,
            words_per_topic: 15,
            concentration: 0.5,
            private_share: 0.5,
            noise_std: 0.1,
            public_tokens: 200_000,
            seed: 11,
        }
    }
}

/// Output of [`labeled_users`].
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticUsers {
    pub users: LabeledUserSet,
    /// Per-user private-topic proportions the scores were computed from.
    pub private_mixtures: Vec<Vec<f64>>,
    pub coefficients: Vec<f64>,
    /// Public text, one document per line, disjoint from private topics.
    pub public_corpus: String,
}

impl SyntheticUsers {
    /// The users' documents as `user_id<TAB>text` lines.
    pub fn user_corpus(&self) -> String {
        let mut s = String::new();
        for u in &self.users.users {
            for d in &u.documents {
                s.push_str(&u.user_id);
                s.push('\t');
                s.push_str(d);
                s.push('\n');
            }
        }
        s
    }

    /// `user_id<TAB>score<TAB>text` lines.
    pub fn labeled_tsv(&self) -> String {
        let mut s = String::new();
        for u in &self.users.users {
            for d in &u.documents {
                s.push_str(&format!("{}\t{}\t{}\n", u.user_id, u.score, d));
            }
        }
        s
    }
}

fn topic_word(kind: &str, topic: usize, index: usize) -> String {
    format!("{kind}{topic}x{index}")
}

fn dirichlet(k: usize, alpha: f64, rng: &mut StreamRng) -> Result<Vec<f64>> {
    let g = Gamma::new(alpha, 1.0).map_err(|_| Error::InvalidConfig("concentration must be positive".into()))?;
    let mut v: Vec<f64> = (0..k).map(|_| g.sample(rng)).collect();
    let total: f64 = v.iter().sum();
    if total > 0.0 {
        v.iter_mut().for_each(|x| *x /= total);
    } else {
        v.iter_mut().for_each(|x| *x = 1.0 / k as f64);
    }
    Ok(v)
}

fn pick(weights: &[f64], rng: &mut StreamRng) -> usize {
    let mut u: f64 = rng.random();
    for (i, w) in weights.iter().enumerate() {
        if u < *w {
            return i;
        }
        u -= w;
    }
    weights.len() - 1
}

/// Users with a known linear signal in their private-topic mixture.
///
/// Topic words are named `pub{t}x{i}` and `priv{t}x{i}`; coefficients are
/// evenly spaced in `[-2, 2]`.
pub fn labeled_users(config: &LabeledUsersConfig) -> Result<SyntheticUsers> {
    if config.users == 0 || config.docs_per_user == 0 || config.doc_len == 0 {
        return Err(Error::InvalidConfig("synthetic users need at least one token each".into()));
    }
    if config.public_topics == 0 || config.private_topics == 0 || config.words_per_topic == 0 {
        return Err(Error::InvalidConfig("synthetic users need public and private topics".into()));
    }
    if !(0.0..=1.0).contains(&config.private_share) || !(config.noise_std >= 0.0) {
        return Err(Error::InvalidConfig("invalid private share or noise".into()));
    }
    let mut rng = stream(config.seed, Stream::Synth, 1);
    let z = zipf(config.words_per_topic)?;
    let fz = zipf(FUNCTION_WORDS.len())?;
    let noise = Normal::new(0.0, config.noise_std).map_err(|_| Error::InvalidConfig("invalid noise".into()))?;
    let r = config.private_topics;
    let coefficients: Vec<f64> =
        (0..r).map(|i| if r == 1 { 2.0 } else { -2.0 + 4.0 * i as f64 / (r - 1) as f64 }).collect();

    let mut users = Vec::with_capacity(config.users);
    let mut private_mixtures = Vec::with_capacity(config.users);
    for u in 0..config.users {
        let public_mix = dirichlet(config.public_topics, config.concentration, &mut rng)?;
        let private_mix = dirichlet(r, config.concentration, &mut rng)?;
        let mut documents = Vec::with_capacity(config.docs_per_user);
        for _ in 0..config.docs_per_user {
            let mut doc = String::new();
            for i in 0..config.doc_len {
                if i > 0 {
                    doc.push(' ');
                }
                let w = if rng.random_bool(0.2) {
                    FUNCTION_WORDS[rank(&fz, &mut rng)].to_string()
                } else if rng.random_bool(config.private_share) {
                    topic_word("priv", pick(&private_mix, &mut rng), rank(&z, &mut rng))
                } else {
                    topic_word("pub", pick(&public_mix, &mut rng), rank(&z, &mut rng))
                };
                doc.push_str(&w);
            }
            documents.push(doc);
        }
        let signal: f64 = coefficients.iter().zip(&private_mix).map(|(c, p)| c * p).sum();
        let score = signal + noise.sample(&mut rng);
        users.push(LabeledUser { user_id: format!("user{u:04}"), score, documents });
        private_mixtures.push(private_mix);
    }

    let mut public_corpus = String::new();
    let mut produced = 0usize;
    while produced < config.public_tokens {
        let topic = rng.random_range(0..config.public_topics);
        let n = config.doc_len.min(config.public_tokens - produced);
        for i in 0..n {
            if i > 0 {
                public_corpus.push(' ');
            }
            if rng.random_bool(0.2) {
                public_corpus.push_str(FUNCTION_WORDS[rank(&fz, &mut rng)]);
            } else {
                public_corpus.push_str(&topic_word("pub", topic, rank(&z, &mut rng)));
            }
        }
        public_corpus.push('\n');
        produced += n;
    }

    Ok(SyntheticUsers { users: LabeledUserSet { users }, private_mixtures, coefficients, public_corpus })
}
