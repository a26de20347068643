//! `lns`: train, benchmark and probe locality-sensitive negative sampling.
//!
//! Every subcommand reads an optional TOML config; flags override it.
//! Exit status is 0 on success, 1 when the run itself fails and 2 for
//! usage or configuration problems.

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lns::data::{class_frequencies, load_datasets, XcDataset};
use lns::eval::{adaptivity_probe, evaluate_full, query_cost_scaling, MetricsWriter, ScalingParams};
use lns::hash::FamilyKind;
use lns::network::{Checkpoint, Trainer};
use lns::sampler::{NegativeSampler, SamplerKind};
use lns::RunConfig;

#[derive(Parser)]
#[command(name = "lns", version, about = "Locality-sensitive negative sampling trainer")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a network and write metrics, checkpoint and resolved config.
    Train {
        #[command(flatten)]
        run: RunArgs,
        /// Continue from this checkpoint instead of a fresh network.
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Time hash-table queries across class counts.
    BenchQuery {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Compare sampled negatives with uniform and softmax targets.
    Probe {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        checkpoint: PathBuf,
    },
    /// Score a checkpoint on the test split with the full output layer.
    Eval {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        checkpoint: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    /// TOML config; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    sampler: Option<SamplerKind>,
    /// Negatives per input.
    #[arg(long)]
    negatives: Option<usize>,
    #[arg(long)]
    top_k: Option<usize>,
    #[arg(long)]
    hash: Option<FamilyKind>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    l: Option<usize>,
    #[arg(long)]
    bin_size: Option<usize>,
    #[arg(long)]
    hidden: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    max_iterations: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    eval_every: Option<u64>,
    /// Write 0 in the wall-clock column.
    #[arg(long)]
    no_wall_clock: bool,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl RunArgs {
    fn resolve(&self) -> Result<RunConfig, Failure> {
        let mut c = match &self.config {
            Some(p) => RunConfig::load(p).map_err(Failure::usage)?,
            None => RunConfig::default(),
        };
        macro_rules! set {
            ($flag:ident => $($field:ident).+) => {
                if let Some(v) = self.$flag.clone() {
                    c.$($field).+ = v;
                }
            };
        }
        set!(seed => seed);
        set!(sampler => sampler.kind);
        set!(negatives => sampler.negatives);
        set!(top_k => sampler.top_k);
        set!(hash => hash.family);
        set!(k => hash.k);
        set!(l => hash.l);
        set!(bin_size => hash.bin_size);
        set!(hidden => model.hidden);
        set!(lr => optimizer.lr);
        set!(batch_size => train.batch_size);
        set!(epochs => train.epochs);
        set!(max_iterations => train.max_iterations);
        set!(workers => train.workers);
        set!(eval_every => train.eval_every);
        set!(out => output.dir);
        if self.no_wall_clock {
            c.train.record_wall_clock = false;
        }
        c.validate().map_err(Failure::usage)?;
        Ok(c)
    }
}

/// An error and the exit status it maps to.
struct Failure {
    code: u8,
    msg: String,
}

impl Failure {
    fn usage(e: impl std::fmt::Display) -> Self {
        Self { code: 2, msg: e.to_string() }
    }

    fn runtime(e: impl std::fmt::Display) -> Self {
        Self { code: 1, msg: e.to_string() }
    }
}

impl From<lns::Error> for Failure {
    fn from(e: lns::Error) -> Self {
        match e {
            lns::Error::Config(_) => Self::usage(e),
            _ => Self::runtime(e),
        }
    }
}

fn load_data(cfg: &RunConfig) -> Result<(XcDataset<f32>, XcDataset<f32>), Failure> {
    let (train, test) = load_datasets(&cfg.data, cfg.seed).map_err(|e| Failure::runtime(format!("loading data: {e}")))?;
    log::info!(
        "data: {} train / {} test samples, {} features, {} classes ({} unlabeled dropped)",
        train.len(),
        test.len(),
        train.num_features,
        train.num_labels,
        train.dropped + test.dropped
    );
    Ok((train, test))
}

fn load_checkpoint(path: &Path) -> Result<Checkpoint<f32>, Failure> {
    if !path.is_file() {
        return Err(Failure::usage(format!("checkpoint {} does not exist", path.display())));
    }
    Checkpoint::load(path).map_err(|e| Failure::usage(format!("checkpoint {}: {e}", path.display())))
}

fn create_dir(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::runtime(format!("cannot create {}: {e}", dir.display())))
}

fn train(cfg: RunConfig, resume: Option<&Path>) -> Result<(), Failure> {
    let (train, test) = load_data(&cfg)?;
    let freq = class_frequencies(&train);
    let mut trainer = match resume {
        Some(p) => Trainer::from_checkpoint(cfg, load_checkpoint(p)?, Some(freq))?,
        None => Trainer::new(cfg, train.num_features, train.num_labels, Some(freq))?,
    };
    let cfg = trainer.config().clone();
    let out = &cfg.output;
    create_dir(&out.dir)?;
    let resolved = out.resolved_config_path();
    fs::write(&resolved, cfg.to_toml()).map_err(|e| Failure::runtime(format!("{}: {e}", resolved.display())))?;
    let mut metrics = MetricsWriter::create(out.metrics_path()).map_err(Failure::runtime)?;
    let summary = trainer.train(&train, &test, |r| Ok(metrics.write(r)?))?;
    trainer
        .checkpoint()
        .save(out.checkpoint_path())
        .map_err(|e| Failure::runtime(format!("writing checkpoint: {e}")))?;

    let stats = trainer.sampler().stats();
    println!("sampler        {}", cfg.sampler.kind);
    println!("iterations     {}", summary.iterations);
    println!("train seconds  {:.3}", summary.train_seconds);
    if let Some(last) = summary.records.last() {
        println!("final loss     {:.6}", last.train_loss);
        println!("final P@1      {:.4}", last.p_at_1);
        if let Some(pk) = last.p_at_k {
            println!("final P@{}      {:.4}", cfg.train.eval_k, pk);
        }
    }
    if stats.padded > 0 || stats.empty_retrievals > 0 {
        println!("padded negs    {} ({} empty retrievals)", stats.padded, stats.empty_retrievals);
    }
    println!("output         {}", out.dir.display());
    Ok(())
}

fn bench_query(cfg: RunConfig) -> Result<(), Failure> {
    let params = ScalingParams {
        dim: cfg.bench.dim,
        family: cfg.hash.family,
        k: cfg.hash.k,
        l: cfg.hash.l,
        bin_size: cfg.hash.bin_size,
        capacity: cfg.hash.capacity(),
        queries: cfg.bench.queries,
        seed: cfg.seed,
    };
    if cfg.hash.family == FamilyKind::Dwta && cfg.hash.bin_size > cfg.bench.dim {
        return Err(Failure::usage("hash.bin_size must not exceed bench.dim"));
    }
    let rows = query_cost_scaling::<f32>(&cfg.bench.class_counts, &params).map_err(Failure::runtime)?;
    let base = rows.first().map_or(1.0, |r| r.mean_query_s);
    println!("{:>10} {:>14} {:>12} {:>14} {:>8}", "classes", "query_us", "hash_evals", "candidates", "ratio");
    for r in &rows {
        println!(
            "{:>10} {:>14.3} {:>12} {:>14.1} {:>8.2}",
            r.num_classes,
            r.mean_query_s * 1e6,
            r.hash_evals_per_query,
            r.mean_candidates,
            r.mean_query_s / base
        );
    }
    Ok(())
}

fn probe(cfg: RunConfig, checkpoint: &Path) -> Result<(), Failure> {
    let ckpt = load_checkpoint(checkpoint)?;
    let (train, test) = load_data(&cfg)?;
    let n = ckpt.params.num_classes();
    if train.num_labels != n || train.num_features != ckpt.params.input_dim() {
        return Err(Failure::usage(format!(
            "checkpoint is {}x{} but the data is {}x{} (features x classes)",
            ckpt.params.input_dim(),
            n,
            train.num_features,
            train.num_labels
        )));
    }
    cfg.validate_for(n).map_err(Failure::usage)?;
    let s = &cfg.sampler;
    let sampler = NegativeSampler::new(s.kind, s.negatives, s.top_k, n, Some(class_frequencies(&train)))
        .map_err(Failure::usage)?;
    let pool = if test.is_empty() { &train } else { &test };
    let inputs = &pool.samples[..cfg.probe.inputs.min(pool.len())];
    let report = adaptivity_probe(
        &ckpt.params,
        &sampler,
        &cfg.hash,
        inputs,
        cfg.probe.draws_per_input,
        cfg.seed,
        ckpt.step,
    )?;
    create_dir(&cfg.output.dir)?;
    let path = cfg.output.adaptivity_path();
    let file = fs::File::create(&path).map_err(|e| Failure::runtime(format!("{}: {e}", path.display())))?;
    report.write_csv(BufWriter::new(file), true).map_err(Failure::runtime)?;
    println!("sampler                 {}", s.kind);
    println!("iteration               {}", report.iteration);
    println!("inputs x draws          {} x {}", report.inputs, report.draws_per_input);
    println!("TV(sampled, uniform)    {:.4}", report.tv_empirical_uniform);
    println!("TV(sampled, target)     {:.4}", report.tv_empirical_target);
    println!("TV(uniform, target)     {:.4}", report.tv_uniform_target);
    println!("report                  {}", path.display());
    Ok(())
}

fn eval(cfg: RunConfig, checkpoint: &Path) -> Result<(), Failure> {
    let ckpt = load_checkpoint(checkpoint)?;
    let (_, test) = load_data(&cfg)?;
    if test.num_features != ckpt.params.input_dim() {
        return Err(Failure::usage(format!(
            "checkpoint expects {} features, data has {}",
            ckpt.params.input_dim(),
            test.num_features
        )));
    }
    let summary = evaluate_full(&ckpt.params, &test.samples, cfg.train.eval_k, false).map_err(Failure::usage)?;
    println!("iteration  {}", ckpt.step);
    println!("samples    {}", summary.counted);
    println!("P@1        {:.4}", summary.p_at_1);
    println!("P@{}        {:.4}", summary.k, summary.p_at_k);
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Train { run, resume } => train(run.resolve()?, resume.as_deref()),
        Command::BenchQuery { run } => bench_query(run.resolve()?),
        Command::Probe { run, checkpoint } => probe(run.resolve()?, &checkpoint),
        Command::Eval { run, checkpoint } => eval(run.resolve()?, &checkpoint),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}
