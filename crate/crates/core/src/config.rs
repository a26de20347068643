//! Run configuration: one TOML file, every key optional, unknown keys
//! rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::PlantedClusterSpec;
use crate::hash::{FamilyKind, MAX_BUCKETS_PER_TABLE};
use crate::network::AdamConfig;
use crate::sampler::SamplerKind;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config:\n  {}", .0.join("\n  "))]
    Invalid(Vec<String>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetKind {
    /// Sparse extreme-classification files.
    Xc,
    /// Skip-gram samples from a raw text corpus.
    Skipgram,
    /// Generated planted-cluster task.
    Planted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataConfig {
    pub kind: DatasetKind,
    pub train_path: Option<PathBuf>,
    pub test_path: Option<PathBuf>,
    pub corpus_path: Option<PathBuf>,
    /// Skip-gram context words on each side.
    pub window: usize,
    pub max_vocab: usize,
    /// Corpus prefix to read; 0 reads everything.
    pub max_tokens: usize,
    /// Tail of the corpus held out for evaluation.
    pub test_fraction: f64,
    /// Scale feature vectors to unit length.
    pub normalize: bool,
    pub planted: PlantedClusterSpec,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            kind: DatasetKind::Planted,
            train_path: None,
            test_path: None,
            corpus_path: None,
            window: 2,
            max_vocab: 5000,
            max_tokens: 0,
            test_fraction: 0.1,
            normalize: false,
            planted: PlantedClusterSpec::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub hidden: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self { hidden: 128 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplerConfig {
    pub kind: SamplerKind,
    /// Negatives per input.
    pub negatives: usize,
    /// Highest-logit classes kept by `top_k`.
    pub top_k: usize,
    /// Subtract `ln(negatives * q(i))` from sampled logits; only for
    /// samplers with a closed-form proposal `q`.
    pub logit_correction: bool,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            kind: SamplerKind::LnsLabel,
            negatives: 100,
            top_k: 100,
            logit_correction: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HashConfig {
    pub family: FamilyKind,
    pub k: usize,
    pub l: usize,
    /// DWTA bin size.
    pub bin_size: usize,
    /// Reservoir size per bucket; 0 means unbounded.
    pub bucket_capacity: usize,
}

impl Default for HashConfig {
    fn default() -> Self {
        Self {
            family: FamilyKind::SimHash,
            k: 6,
            l: 50,
            bin_size: 8,
            bucket_capacity: 128,
        }
    }
}

impl HashConfig {
    pub fn capacity(&self) -> Option<usize> {
        (self.bucket_capacity > 0).then_some(self.bucket_capacity)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScheduleConfig {
    pub initial_period: u64,
    pub growth: f64,
    /// Rebuild every table instead of per-class updates when more than
    /// this fraction of classes changed.
    pub rebuild_fraction: f64,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        Self {
            initial_period: 50,
            growth: 1.05,
            rebuild_fraction: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub epochs: usize,
    /// Stop after this many iterations; 0 means no limit.
    pub max_iterations: u64,
    pub workers: usize,
    pub eval_every: u64,
    /// Test samples scored per evaluation; 0 means all.
    pub eval_samples: usize,
    pub eval_k: usize,
    /// Write 0 in the wall-clock column so repeated runs give identical
    /// files.
    pub record_wall_clock: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 256,
            epochs: 1,
            max_iterations: 0,
            workers: 1,
            eval_every: 100,
            eval_samples: 0,
            eval_k: 5,
            record_wall_clock: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProbeConfig {
    /// Test inputs the probe averages over.
    pub inputs: usize,
    pub draws_per_input: usize,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            inputs: 20,
            draws_per_input: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BenchConfig {
    pub dim: usize,
    pub class_counts: Vec<usize>,
    pub queries: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            dim: 128,
            class_counts: vec![1_000, 10_000, 100_000],
            queries: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub metrics_file: String,
    pub checkpoint_file: String,
    pub adaptivity_file: String,
    pub resolved_config_file: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("runs/default"),
            metrics_file: "metrics.csv".into(),
            checkpoint_file: "checkpoint.bin".into(),
            adaptivity_file: "adaptivity.csv".into(),
            resolved_config_file: "config.resolved.toml".into(),
        }
    }
}

impl OutputConfig {
    pub fn metrics_path(&self) -> PathBuf {
        self.dir.join(&self.metrics_file)
    }

    pub fn checkpoint_path(&self) -> PathBuf {
        self.dir.join(&self.checkpoint_file)
    }

    pub fn adaptivity_path(&self) -> PathBuf {
        self.dir.join(&self.adaptivity_file)
    }

    pub fn resolved_config_path(&self) -> PathBuf {
        self.dir.join(&self.resolved_config_file)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Every random stream is derived from this.
    pub seed: u64,
    pub data: DataConfig,
    pub model: ModelConfig,
    pub sampler: SamplerConfig,
    pub hash: HashConfig,
    pub schedule: ScheduleConfig,
    pub optimizer: AdamConfig,
    pub train: TrainConfig,
    pub probe: ProbeConfig,
    pub bench: BenchConfig,
    pub output: OutputConfig,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_owned(),
            source,
        })?;
        Self::from_toml(&text)
    }

    /// The full config with every default filled in.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always serializable")
    }

    /// Checks every field and reports all problems at once.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut bad = Vec::new();
        let mut check = |ok: bool, msg: String| {
            if !ok {
                bad.push(msg);
            }
        };
        check(self.seed <= i64::MAX as u64, "seed must be below 2^63".into());
        let d = &self.data;
        match d.kind {
            DatasetKind::Xc => {
                check(d.train_path.is_some(), "data.train_path is required for kind = \"xc\"".into());
                check(d.test_path.is_some(), "data.test_path is required for kind = \"xc\"".into());
            }
            DatasetKind::Skipgram => {
                check(d.corpus_path.is_some(), "data.corpus_path is required for kind = \"skipgram\"".into());
                check(d.window >= 1, "data.window must be >= 1".into());
                check(d.max_vocab >= 2, "data.max_vocab must be >= 2".into());
                check(
                    (0.0..1.0).contains(&d.test_fraction),
                    format!("data.test_fraction must be in [0, 1), got {}", d.test_fraction),
                );
            }
            DatasetKind::Planted => {
                if let Err(e) = d.planted.validate() {
                    check(false, format!("data.planted: {e}"));
                }
            }
        }

        check(self.model.hidden >= 1, "model.hidden must be >= 1".into());

        let s = &self.sampler;
        let sampled = !matches!(s.kind, SamplerKind::Full | SamplerKind::TopK);
        check(!sampled || s.negatives >= 1, "sampler.negatives must be >= 1".into());
        check(s.kind != SamplerKind::TopK || s.top_k >= 1, "sampler.top_k must be >= 1".into());
        check(
            !s.logit_correction || s.kind.has_proposal(),
            format!("sampler.logit_correction is not available for `{}`", s.kind),
        );

        let h = &self.hash;
        check(h.k >= 1, "hash.k must be >= 1".into());
        check(h.l >= 1, "hash.l must be >= 1".into());
        let radix = match h.family {
            FamilyKind::SimHash => 2.0,
            FamilyKind::Dwta => {
                check(h.bin_size >= 2, "hash.bin_size must be >= 2 for dwta".into());
                check(
                    h.bin_size <= self.model.hidden,
                    "hash.bin_size must not exceed model.hidden".into(),
                );
                h.bin_size as f64
            }
        };
        check(
            radix.powf(h.k as f64) <= MAX_BUCKETS_PER_TABLE as f64,
            format!("hash.k = {} gives more than {MAX_BUCKETS_PER_TABLE} buckets per table", h.k),
        );

        let sc = &self.schedule;
        check(sc.initial_period >= 1, "schedule.initial_period must be >= 1".into());
        check(sc.growth >= 1.0 && sc.growth.is_finite(), "schedule.growth must be >= 1".into());
        check(
            (0.0..=1.0).contains(&sc.rebuild_fraction),
            "schedule.rebuild_fraction must be in [0, 1]".into(),
        );

        let o = &self.optimizer;
        check(o.lr > 0.0 && o.lr.is_finite(), "optimizer.lr must be positive".into());
        check((0.0..1.0).contains(&o.beta1), "optimizer.beta1 must be in [0, 1)".into());
        check((0.0..1.0).contains(&o.beta2), "optimizer.beta2 must be in [0, 1)".into());
        check(o.eps > 0.0, "optimizer.eps must be positive".into());

        let t = &self.train;
        check(t.batch_size >= 1, "train.batch_size must be >= 1".into());
        check(t.workers >= 1, "train.workers must be >= 1".into());
        check(t.eval_every >= 1, "train.eval_every must be >= 1".into());
        check(t.eval_k >= 1, "train.eval_k must be >= 1".into());

        check(self.probe.inputs >= 1, "probe.inputs must be >= 1".into());
        check(self.probe.draws_per_input >= 1, "probe.draws_per_input must be >= 1".into());
        check(self.bench.dim >= 1, "bench.dim must be >= 1".into());
        check(!self.bench.class_counts.is_empty(), "bench.class_counts must not be empty".into());
        check(self.bench.queries >= 1, "bench.queries must be >= 1".into());

        if bad.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid(bad))
        }
    }

    /// Checks that depend on the loaded data.
    pub fn validate_for(&self, num_classes: usize) -> Result<(), ConfigError> {
        let mut bad = Vec::new();
        if self.sampler.kind == SamplerKind::TopK && self.sampler.top_k > num_classes {
            bad.push(format!("sampler.top_k = {} exceeds {num_classes} classes", self.sampler.top_k));
        }
        if self.train.eval_k > num_classes {
            bad.push(format!("train.eval_k = {} exceeds {num_classes} classes", self.train.eval_k));
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid(bad))
        }
    }
}
