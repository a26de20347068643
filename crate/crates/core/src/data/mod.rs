//! Dataset ingestion: sparse extreme-classification files, skip-gram
//! samples from raw text, class frequencies, batching and synthetic tasks.

mod batch;
mod skipgram;
mod synthetic;
mod xc;

pub use batch::{batch_order, batches, Batch};
pub use skipgram::{build_skipgram, SkipGramSample, SkipGramStream, Vocabulary};
pub use synthetic::{random_sparse, PlantedClusterSpec, PlantedClusters};
pub use xc::{parse_xc, parse_xc_str, read_xc, write_xc};

use crate::config::{DataConfig, DatasetKind};
use crate::sampler::FrequencyTable;
use crate::seed::derive_seed;
use crate::scalar::Scalar;
use crate::vector::SparseVector;

#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("corpus has no tokens")]
    EmptyCorpus,
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One training or test example.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample<T> {
    pub features: SparseVector<T>,
    /// Distinct, ascending.
    pub labels: Vec<u32>,
}

impl<T: Scalar> Sample<T> {
    /// Sorts and deduplicates `labels`.
    pub fn new(features: SparseVector<T>, mut labels: Vec<u32>) -> Self {
        labels.sort_unstable();
        labels.dedup();
        Self { features, labels }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct XcDataset<T> {
    pub num_features: usize,
    pub num_labels: usize,
    pub samples: Vec<Sample<T>>,
    /// Samples discarded because they carried no label.
    pub dropped: usize,
}

impl<T: Scalar> XcDataset<T> {
    pub fn new(num_features: usize, num_labels: usize) -> Self {
        Self {
            num_features,
            num_labels,
            samples: Vec::new(),
            dropped: 0,
        }
    }

    /// Adds `sample`, or counts it as dropped when it has no label.
    pub fn push(&mut self, sample: Sample<T>) -> Result<(), DataError> {
        use crate::vector::HashInput;
        if sample.features.dim() != self.num_features {
            return Err(DataError::Invalid(format!(
                "sample has {} features, dataset has {}",
                sample.features.dim(),
                self.num_features
            )));
        }
        if let Some(&bad) = sample.labels.iter().find(|&&l| l as usize >= self.num_labels) {
            return Err(DataError::Invalid(format!(
                "label {bad} out of range for {} labels",
                self.num_labels
            )));
        }
        if sample.labels.is_empty() {
            self.dropped += 1;
        } else {
            self.samples.push(sample);
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Scales every feature vector to unit length.
    pub fn normalize_features(&mut self) {
        for s in &mut self.samples {
            s.features.normalize();
        }
    }

    /// Keeps the first `n` samples.
    pub fn truncate(&mut self, n: usize) {
        self.samples.truncate(n);
    }
}

/// Number of samples carrying each class.
pub fn class_frequencies<T>(ds: &XcDataset<T>) -> FrequencyTable {
    let mut counts = vec![0u64; ds.num_labels];
    for s in &ds.samples {
        for &l in &s.labels {
            counts[l as usize] += 1;
        }
    }
    FrequencyTable::from_counts(counts)
}

/// Train and test splits described by `cfg`. `seed` is the run's master
/// seed; only the planted task consumes it.
pub fn load_datasets<T: Scalar>(cfg: &DataConfig, seed: u64) -> Result<(XcDataset<T>, XcDataset<T>), DataError> {
    let missing = |key: &str| DataError::Invalid(format!("data.{key} is not set"));
    let (mut train, mut test) = match cfg.kind {
        DatasetKind::Xc => {
            let train: XcDataset<T> = parse_xc(cfg.train_path.as_ref().ok_or_else(|| missing("train_path"))?)?;
            let test: XcDataset<T> = parse_xc(cfg.test_path.as_ref().ok_or_else(|| missing("test_path"))?)?;
            if (train.num_features, train.num_labels) != (test.num_features, test.num_labels) {
                return Err(DataError::Invalid(format!(
                    "train is {}x{} but test is {}x{} (features x labels)",
                    train.num_features, train.num_labels, test.num_features, test.num_labels
                )));
            }
            (train, test)
        }
        DatasetKind::Skipgram => {
            let path = cfg.corpus_path.as_ref().ok_or_else(|| missing("corpus_path"))?;
            let max_tokens = (cfg.max_tokens > 0).then_some(cfg.max_tokens);
            build_skipgram(path, cfg.window, cfg.max_vocab, max_tokens)?.into_datasets(cfg.test_fraction)
        }
        DatasetKind::Planted => {
            cfg.planted.validate().map_err(DataError::Invalid)?;
            let p = cfg.planted.generate(derive_seed(seed, "data"));
            (p.train, p.test)
        }
    };
    if train.is_empty() {
        return Err(DataError::Invalid("training split is empty".into()));
    }
    if cfg.normalize {
        train.normalize_features();
        test.normalize_features();
    }
    Ok((train, test))
}
