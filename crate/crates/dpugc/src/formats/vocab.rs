use std::fmt::Write as _;

use dpugc_core::corpus::Vocabulary;
use dpugc_core::{Error, Result};

pub const VOCAB_MAGIC: &str = "dpugc-vocab 1";

/// Text vocabulary: a version line, `min_count <n>`, then `word<TAB>count`
/// in id order.
pub fn write_vocab(vocab: &Vocabulary) -> String {
    let mut out = String::new();
    writeln!(out, "{VOCAB_MAGIC}").unwrap();
    writeln!(out, "min_count {}", vocab.min_count()).unwrap();
    for (w, c) in vocab.words().iter().zip(vocab.counts()) {
        writeln!(out, "{w}\t{c}").unwrap();
    }
    out
}

pub fn read_vocab(text: &str) -> Result<Vocabulary> {
    let malformed = |line: usize, reason: &str| Error::Malformed { line, reason: reason.to_string() };
    let mut lines = text.lines();
    if lines.next() != Some(VOCAB_MAGIC) {
        return Err(malformed(1, "not a dpugc vocabulary file (bad version line)"));
    }
    let min_count = lines
        .next()
        .and_then(|l| l.strip_prefix("min_count "))
        .and_then(|n| n.trim().parse().ok())
        .ok_or_else(|| malformed(2, "expected `min_count <n>`"))?;
    let mut words = Vec::new();
    let mut counts = Vec::new();
    for (i, line) in lines.enumerate() {
        let (w, c) = line.split_once('\t').ok_or_else(|| malformed(i + 3, "expected `word<TAB>count`"))?;
        words.push(w.to_string());
        counts.push(c.trim().parse().map_err(|_| malformed(i + 3, "count is not an integer"))?);
    }
    Vocabulary::from_parts(words, counts, min_count)
}

#[cfg(test)]
mod tests {
    use super::*;
    use dpugc_core::corpus::build_vocab;

    #[test]
    fn round_trip() {
        let v = build_vocab("a b a c a b z".split(' '), 2, None).unwrap();
        let text = write_vocab(&v);
        assert_eq!(text, "dpugc-vocab 1\nmin_count 2\n<unk>\t2\na\t3\nb\t2\n");
        assert_eq!(read_vocab(&text).unwrap(), v);
    }

    #[test]
    fn rejects_foreign_files() {
        assert!(read_vocab("a 1\n").is_err());
        assert!(read_vocab("dpugc-vocab 1\nmin_count 1\n<unk>\tx\n").is_err());
    }
}
