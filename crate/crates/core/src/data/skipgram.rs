use std::collections::HashMap;
use std::path::Path;

use super::{DataError, Sample, XcDataset};
use crate::scalar::Scalar;
use crate::vector::SparseVector;

/// Token ids by descending corpus count, ties by first occurrence.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    counts: Vec<u64>,
    index: HashMap<String, u32>,
}

impl Vocabulary {
    /// Keeps the `max_vocab` most frequent tokens.
    pub fn from_tokens<'a>(tokens: impl IntoIterator<Item = &'a str>, max_vocab: usize) -> Self {
        let mut first: HashMap<&str, (usize, u64)> = HashMap::new();
        for (pos, t) in tokens.into_iter().enumerate() {
            first.entry(t).or_insert((pos, 0)).1 += 1;
        }
        let mut ranked: Vec<(&str, usize, u64)> = first.into_iter().map(|(t, (p, c))| (t, p, c)).collect();
        ranked.sort_unstable_by(|a, b| b.2.cmp(&a.2).then(a.1.cmp(&b.1)));
        ranked.truncate(max_vocab);
        let tokens: Vec<String> = ranked.iter().map(|r| r.0.to_owned()).collect();
        let index = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i as u32)).collect();
        Self {
            tokens,
            counts: ranked.iter().map(|r| r.2).collect(),
            index,
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }

    pub fn token(&self, id: u32) -> &str {
        &self.tokens[id as usize]
    }

    pub fn count(&self, id: u32) -> u64 {
        self.counts[id as usize]
    }
}

/// A center word and the distinct in-vocabulary words around it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkipGramSample {
    pub position: usize,
    pub center: u32,
    pub labels: Vec<u32>,
}

/// Corpus as vocabulary ids, one entry per token; out-of-vocabulary
/// tokens keep their position but produce no sample.
#[derive(Debug, Clone)]
pub struct SkipGramStream {
    pub vocab: Vocabulary,
    pub window: usize,
    ids: Vec<Option<u32>>,
}

impl SkipGramStream {
    pub fn from_text(text: &str, window: usize, max_vocab: usize) -> Result<Self, DataError> {
        Self::from_tokens(&text.split_whitespace().collect::<Vec<_>>(), window, max_vocab)
    }

    pub fn from_tokens(tokens: &[&str], window: usize, max_vocab: usize) -> Result<Self, DataError> {
        if tokens.is_empty() {
            return Err(DataError::EmptyCorpus);
        }
        let vocab = Vocabulary::from_tokens(tokens.iter().copied(), max_vocab);
        let ids = tokens.iter().map(|t| vocab.id(t)).collect();
        Ok(Self { vocab, window, ids })
    }

    pub fn num_tokens(&self) -> usize {
        self.ids.len()
    }

    /// One sample per in-vocabulary position.
    pub fn samples(&self) -> impl Iterator<Item = SkipGramSample> + '_ {
        let m = self.window;
        self.ids.iter().enumerate().filter_map(move |(pos, id)| {
            let center = (*id)?;
            let lo = pos.saturating_sub(m);
            let hi = (pos + m + 1).min(self.ids.len());
            let mut labels: Vec<u32> = (lo..hi).filter(|&p| p != pos).filter_map(|p| self.ids[p]).collect();
            labels.sort_unstable();
            labels.dedup();
            Some(SkipGramSample { position: pos, center, labels })
        })
    }

    /// Samples as a one-hot classification dataset, split by corpus
    /// position: the last `test_fraction` of the corpus becomes the test
    /// set. Samples with no in-vocabulary context are dropped.
    pub fn into_datasets<T: Scalar>(&self, test_fraction: f64) -> (XcDataset<T>, XcDataset<T>) {
        let v = self.vocab.len();
        let cut = ((1.0 - test_fraction.clamp(0.0, 1.0)) * self.ids.len() as f64).round() as usize;
        let mut train = XcDataset::new(v, v);
        let mut test = XcDataset::new(v, v);
        for s in self.samples() {
            let x = SparseVector::one_hot(v, s.center).expect("center id is in vocabulary");
            let ds = if s.position < cut { &mut train } else { &mut test };
            ds.push(Sample::new(x, s.labels)).expect("ids are in vocabulary");
        }
        (train, test)
    }
}

/// Reads a whitespace-tokenized corpus, keeping at most `max_tokens`
/// tokens when given.
pub fn build_skipgram(
    path: impl AsRef<Path>,
    window: usize,
    max_vocab: usize,
    max_tokens: Option<usize>,
) -> Result<SkipGramStream, DataError> {
    let text = std::fs::read_to_string(path)?;
    let mut tokens: Vec<&str> = text.split_whitespace().collect();
    if let Some(n) = max_tokens {
        tokens.truncate(n);
    }
    SkipGramStream::from_tokens(&tokens, window, max_vocab)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_token_window() {
        let s = SkipGramStream::from_text("a b c", 2, 10).unwrap();
        let b = s.vocab.id("b").unwrap();
        let sample = s.samples().find(|x| x.center == b).unwrap();
        let mut want = vec![s.vocab.id("a").unwrap(), s.vocab.id("c").unwrap()];
        want.sort_unstable();
        assert_eq!(sample.labels, want);
    }

    #[test]
    fn repeated_token_is_its_own_context() {
        let s = SkipGramStream::from_text("a a a", 1, 10).unwrap();
        let mid = s.samples().nth(1).unwrap();
        assert_eq!(mid.position, 1);
        assert_eq!(mid.labels, vec![0]);
    }

    #[test]
    fn empty_corpus_is_an_error() {
        assert!(matches!(SkipGramStream::from_text(" \n ", 2, 10), Err(DataError::EmptyCorpus)));
    }

    #[test]
    fn vocabulary_rank_and_ties() {
        let v = Vocabulary::from_tokens("x y z y z w".split(' '), 3);
        assert_eq!(v.len(), 3);
        assert_eq!((v.token(0), v.token(1), v.token(2)), ("y", "z", "x"));
        assert_eq!(v.id("w"), None);
    }

    #[test]
    fn out_of_vocab_positions_still_take_space() {
        let s = SkipGramStream::from_text("a a b c a", 1, 1).unwrap();
        let samples: Vec<_> = s.samples().collect();
        assert_eq!(samples.len(), 3);
        // Position 4 sees only "c" within the window, which is dropped.
        assert!(samples[2].labels.is_empty());
        let (train, test) = s.into_datasets::<f32>(0.0);
        assert_eq!((train.len(), train.dropped, test.len()), (2, 1, 0));
    }

    #[test]
    fn context_size_bounded() {
        let text = "the cat sat on the mat and the dog sat on the log";
        let s = SkipGramStream::from_text(text, 2, 100).unwrap();
        assert_eq!(s.samples().count(), s.num_tokens());
        assert!(s.samples().all(|x| x.labels.len() <= 4));
    }
}
