use std::time::Instant;

use rand::SeedableRng;
use rayon::prelude::*;

use super::{
    accumulate_sample, hidden_gradient, maybe_update_tables, softmax_ce_active, AdamState, Checkpoint,
    Gradients, NetworkError, NetworkParams, TableRefresh, UpdateSchedule,
};
use crate::config::{HashConfig, RunConfig};
use crate::data::{batches, Sample, XcDataset};
use crate::eval::{evaluate_full, EvalSummary, MetricsRecord};
use crate::hash::HashFamily;
use crate::sampler::{ActiveSet, FrequencyTable, NegativeSampler, SamplerKind};
use crate::scalar::Scalar;
use crate::seed::{derive_indexed, derive_seed, stream, StreamRng};
use crate::tables::{LshTables, TableError};
use crate::Error;

/// Hash tables over the nonzero class vectors of `params`.
pub fn build_class_tables<T: Scalar>(
    params: &NetworkParams<T>,
    hash: &HashConfig,
    seed: u64,
) -> Result<LshTables<T>, TableError> {
    let family = HashFamily::new(
        hash.family,
        params.hidden_dim(),
        hash.k,
        hash.l,
        hash.bin_size,
        derive_seed(seed, "hash-family"),
    )?;
    let zero = T::zero();
    LshTables::build(
        family,
        hash.capacity(),
        derive_seed(seed, "hash-tables"),
        params
            .w_out
            .iter_rows()
            .enumerate()
            .filter(|(_, r)| r.iter().any(|&v| v != zero))
            .map(|(i, r)| (i as u32, r)),
    )
}

/// Outcome of one iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    pub step: u64,
    /// Mean loss over the batch.
    pub loss: f64,
    /// Mean active-set size over the batch.
    pub mean_active: f64,
    /// Union of the batch's active sets, ascending.
    pub active_classes: Vec<u32>,
    pub refresh: TableRefresh,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainSummary {
    pub iterations: u64,
    pub train_seconds: f64,
    pub records: Vec<MetricsRecord>,
}

struct SampleWork<T> {
    active: ActiveSet,
    dlogits: Vec<T>,
    post: Vec<T>,
    dz: Vec<T>,
    loss: T,
}

/// Owns the network, optimizer state, sampler and hash tables of one run.
pub struct Trainer<T: Scalar> {
    config: RunConfig,
    params: NetworkParams<T>,
    adam: AdamState<T>,
    sampler: NegativeSampler,
    tables: Option<LshTables<T>>,
    schedule: UpdateSchedule,
    grads: Gradients<T>,
    step: u64,
    train_seconds: f64,
    pool: Option<rayon::ThreadPool>,
}

impl<T: Scalar> Trainer<T> {
    /// Fresh network for `input_dim` features and `num_classes` classes.
    /// `freq` feeds the frequency and log-uniform samplers.
    pub fn new(
        config: RunConfig,
        input_dim: usize,
        num_classes: usize,
        freq: Option<FrequencyTable>,
    ) -> Result<Self, Error> {
        config.validate()?;
        config.validate_for(num_classes)?;
        let params = NetworkParams::init(
            input_dim,
            config.model.hidden,
            num_classes,
            &mut stream(config.seed, "init"),
        );
        let adam = AdamState::new(config.optimizer, &params);
        let sc = &config.schedule;
        let schedule = UpdateSchedule::new(sc.initial_period, sc.growth, sc.rebuild_fraction, num_classes);
        Self::assemble(config, params, adam, schedule, 0, freq)
    }

    /// Resumes from a checkpoint; hash tables are rebuilt from the saved
    /// class vectors.
    pub fn from_checkpoint(
        mut config: RunConfig,
        ckpt: Checkpoint<T>,
        freq: Option<FrequencyTable>,
    ) -> Result<Self, Error> {
        config.seed = ckpt.seed;
        config.optimizer = ckpt.adam.config;
        if ckpt.params.hidden_dim() != config.model.hidden {
            return Err(NetworkError::Shape(format!(
                "checkpoint hidden size {} differs from model.hidden = {}",
                ckpt.params.hidden_dim(),
                config.model.hidden
            ))
            .into());
        }
        config.validate()?;
        let n = ckpt.params.num_classes();
        config.validate_for(n)?;
        let schedule = UpdateSchedule::from_state(ckpt.schedule, n);
        Self::assemble(config, ckpt.params, ckpt.adam, schedule, ckpt.step, freq)
    }

    fn assemble(
        config: RunConfig,
        params: NetworkParams<T>,
        adam: AdamState<T>,
        schedule: UpdateSchedule,
        step: u64,
        freq: Option<FrequencyTable>,
    ) -> Result<Self, Error> {
        let s = &config.sampler;
        let sampler = NegativeSampler::new(s.kind, s.negatives, s.top_k, params.num_classes(), freq)?;
        let tables = if s.kind.uses_tables() {
            Some(build_class_tables(&params, &config.hash, config.seed)?)
        } else {
            None
        };
        let pool = if config.train.workers > 1 {
            Some(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(config.train.workers)
                    .build()
                    .map_err(|e| Error::Runtime(format!("cannot start worker pool: {e}")))?,
            )
        } else {
            None
        };
        Ok(Self {
            grads: Gradients::for_params(&params),
            config,
            params,
            adam,
            sampler,
            tables,
            schedule,
            step,
            train_seconds: 0.0,
            pool,
        })
    }

    pub fn config(&self) -> &RunConfig {
        &self.config
    }

    pub fn params(&self) -> &NetworkParams<T> {
        &self.params
    }

    pub fn adam(&self) -> &AdamState<T> {
        &self.adam
    }

    pub fn sampler(&self) -> &NegativeSampler {
        &self.sampler
    }

    pub fn tables(&self) -> Option<&LshTables<T>> {
        self.tables.as_ref()
    }

    pub fn schedule(&self) -> &UpdateSchedule {
        &self.schedule
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    /// Seconds spent in training steps, evaluation excluded.
    pub fn train_seconds(&self) -> f64 {
        self.train_seconds
    }

    pub fn checkpoint(&self) -> Checkpoint<T> {
        Checkpoint {
            seed: self.config.seed,
            step: self.step,
            params: self.params.clone(),
            adam: self.adam.clone(),
            schedule: self.schedule.state(),
        }
    }

    fn run<R: Send>(&self, op: impl FnOnce() -> R + Send) -> R {
        match &self.pool {
            Some(p) => p.install(op),
            None => op(),
        }
    }

    fn sample_work(&self, sample: &Sample<T>, rng: &mut StreamRng) -> Result<SampleWork<T>, Error> {
        let p = &self.params;
        let hidden = p.forward_hidden(&sample.features)?;
        let kind = self.sampler.kind();
        let full = (kind == SamplerKind::TopK).then(|| p.full_logits(&hidden.post));
        let active = self.sampler.active_set(
            &sample.labels,
            &hidden.post,
            &p.w_out,
            self.tables.as_ref(),
            full.as_deref(),
            rng,
        )?;
        let mut logits = match &full {
            Some(f) => active.ids().iter().map(|&i| f[i as usize]).collect(),
            None => p.forward_output_active(&hidden.post, &active),
        };
        if self.config.sampler.logit_correction {
            let n = active.negatives().len() as f64;
            for ((z, &id), &is_true) in logits.iter_mut().zip(active.ids()).zip(active.true_mask()) {
                if let (false, Some(q)) = (is_true, self.sampler.proposal_prob(id)) {
                    *z -= T::of((n * q).ln());
                }
            }
        }
        let (loss, dlogits) = softmax_ce_active(&logits, &active);
        let dz = hidden_gradient(p, &hidden, &active, &dlogits);
        Ok(SampleWork {
            active,
            dlogits,
            post: hidden.post,
            dz,
            loss,
        })
    }

    /// One iteration: forward, sample, loss, backward and optimizer step
    /// on `batch`, then a scheduled table refresh if one is due.
    pub fn train_step(&mut self, batch: &[&Sample<T>]) -> Result<StepReport, Error> {
        if batch.is_empty() {
            return Err(Error::Runtime("empty batch".into()));
        }
        let step = self.step + 1;
        let base = derive_indexed(derive_seed(self.config.seed, "sampler"), step);
        let work_one = |(i, s): (usize, &&Sample<T>)| {
            let mut rng = StreamRng::seed_from_u64(derive_indexed(base, i as u64));
            self.sample_work(s, &mut rng)
        };
        let work: Vec<SampleWork<T>> = if self.pool.is_some() {
            self.run(|| batch.par_iter().enumerate().map(work_one).collect::<Result<_, _>>())?
        } else {
            batch.iter().enumerate().map(work_one).collect::<Result<_, _>>()?
        };

        let scale = T::one() / T::of(batch.len() as f64);
        self.grads.clear();
        let mut loss = 0.0;
        let mut active = 0usize;
        let mut active_classes = Vec::new();
        let full = self.sampler.kind() == SamplerKind::Full;
        for (w, s) in work.iter().zip(batch) {
            accumulate_sample(&mut self.grads, &s.features, &w.post, &w.dz, &w.active, &w.dlogits, scale);
            loss += w.loss.as_f64();
            active += w.active.len();
            if !full {
                active_classes.extend_from_slice(w.active.ids());
            }
        }
        if full {
            active_classes = (0..self.params.num_classes() as u32).collect();
        } else {
            active_classes.sort_unstable();
            active_classes.dedup();
        }
        let changed = self.adam.apply(&mut self.params, &self.grads)?;
        for id in changed {
            self.schedule.touch(id);
        }
        self.step = step;
        let refresh = maybe_update_tables(step, &mut self.schedule, self.tables.as_mut(), &self.params.w_out)?;
        let n = batch.len() as f64;
        Ok(StepReport {
            step,
            loss: loss / n,
            mean_active: active as f64 / n,
            active_classes,
            refresh,
        })
    }

    /// Scores `test` with the full output layer.
    pub fn evaluate(&self, test: &XcDataset<T>) -> Result<EvalSummary, Error> {
        let limit = match self.config.train.eval_samples {
            0 => test.len(),
            n => n.min(test.len()),
        };
        let samples = &test.samples[..limit];
        let k = self.config.train.eval_k;
        let parallel = self.pool.is_some();
        Ok(self.run(|| evaluate_full(&self.params, samples, k, parallel))?)
    }

    fn record(&self, test: &XcDataset<T>, loss: f64) -> Result<MetricsRecord, Error> {
        let eval = self.evaluate(test)?;
        Ok(MetricsRecord {
            iteration: self.step,
            wall_clock_s: if self.config.train.record_wall_clock { self.train_seconds } else { 0.0 },
            train_loss: loss,
            p_at_1: eval.p_at_1,
            p_at_k: Some(eval.p_at_k),
        })
    }

    /// Trains for the configured epochs (or until `max_iterations`),
    /// evaluating every `eval_every` iterations and after the last one.
    /// Each record is handed to `on_record` as soon as it exists.
    pub fn train(
        &mut self,
        train: &XcDataset<T>,
        test: &XcDataset<T>,
        mut on_record: impl FnMut(&MetricsRecord) -> Result<(), Error>,
    ) -> Result<TrainSummary, Error> {
        let cfg = self.config.train.clone();
        let shuffle = derive_seed(self.config.seed, "shuffle");
        let limit = (cfg.max_iterations > 0).then_some(cfg.max_iterations);
        let mut records = Vec::new();
        let mut loss_sum = 0.0;
        let mut pending = 0u64;
        let start_step = self.step;
        'epochs: for epoch in 0..cfg.epochs {
            for batch in batches(train, cfg.batch_size, derive_indexed(shuffle, epoch as u64)) {
                if limit.is_some_and(|m| self.step >= m) {
                    break 'epochs;
                }
                let t0 = Instant::now();
                let report = self.train_step(&batch.samples)?;
                self.train_seconds += t0.elapsed().as_secs_f64();
                if !report.loss.is_finite() {
                    return Err(NetworkError::NonFinite("training loss").into());
                }
                loss_sum += report.loss;
                pending += 1;
                if self.step % cfg.eval_every == 0 {
                    let r = self.record(test, loss_sum / pending as f64)?;
                    log::info!(
                        "iter {} loss {:.4} P@1 {:.4} ({:.1}s)",
                        r.iteration,
                        r.train_loss,
                        r.p_at_1,
                        self.train_seconds
                    );
                    on_record(&r)?;
                    records.push(r);
                    loss_sum = 0.0;
                    pending = 0;
                }
            }
        }
        if pending > 0 {
            let r = self.record(test, loss_sum / pending as f64)?;
            on_record(&r)?;
            records.push(r);
        }
        Ok(TrainSummary {
            iterations: self.step - start_step,
            train_seconds: self.train_seconds,
            records,
        })
    }
}
