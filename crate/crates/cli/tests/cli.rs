use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

const SMALL: &str = r#"
seed = 3

[data.planted]
num_classes = 40
clusters = 4
train_samples = 400
test_samples = 80

[model]
hidden = 16

[sampler]
negatives = 8

[hash]
k = 4
l = 8

[train]
batch_size = 32
eval_every = 5
record_wall_clock = false

[probe]
inputs = 5
draws_per_input = 10

[bench]
dim = 16
class_counts = [100, 1000]
queries = 50
"#;

fn lns(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lns"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn setup() -> (TempDir, String) {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("small.toml");
    std::fs::write(&cfg, SMALL).unwrap();
    (dir, cfg.to_str().unwrap().to_owned())
}

fn out_dir(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_str().unwrap().to_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn train_writes_metrics_checkpoint_and_config() {
    let (dir, cfg) = setup();
    let out = out_dir(&dir, "run");
    let o = lns(&["train", "--config", &cfg, "--sampler", "lns_label", "--out", &out]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("final P@1"));
    let metrics = std::fs::read_to_string(Path::new(&out).join("metrics.csv")).unwrap();
    let lines: Vec<&str> = metrics.lines().collect();
    assert_eq!(lines[0], "iteration,wall_clock_s,train_loss,p_at_1,p_at_k");
    // 400 samples in batches of 32 is 13 steps: records at 5, 10 and 13.
    let iters: Vec<&str> = lines[1..].iter().map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(iters, ["5", "10", "13"]);
    assert!(Path::new(&out).join("checkpoint.bin").is_file());

    // The echoed config reproduces the run.
    let resolved = Path::new(&out).join("config.resolved.toml");
    let text = std::fs::read_to_string(&resolved).unwrap();
    assert!(text.contains("kind = \"lns_label\""));
    let again = out_dir(&dir, "again");
    let o = lns(&["train", "--config", resolved.to_str().unwrap(), "--out", &again]);
    assert!(o.status.success());
    assert_eq!(std::fs::read(Path::new(&again).join("metrics.csv")).unwrap(), metrics.as_bytes());
}

#[test]
fn identical_seeds_give_identical_metrics() {
    let (dir, cfg) = setup();
    let run = |name: &str| {
        let out = out_dir(&dir, name);
        let o = lns(&["train", "--config", &cfg, "--sampler", "full", "--out", &out]);
        assert!(o.status.success());
        std::fs::read(Path::new(&out).join("metrics.csv")).unwrap()
    };
    assert_eq!(run("a"), run("b"));
}

#[test]
fn validation_and_usage_errors_exit_2() {
    let (dir, cfg) = setup();
    let out = out_dir(&dir, "bad");
    let o = lns(&["train", "--config", &cfg, "--k", "0", "--out", &out]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("hash.k"));
    assert_eq!(lns(&["train", "--sampler", "bogus"]).status.code(), Some(2));
    assert_eq!(lns(&["train", "--config", "/nonexistent.toml"]).status.code(), Some(2));
    let unknown = dir.path().join("unknown.toml");
    std::fs::write(&unknown, "[model]\nwidth = 3\n").unwrap();
    assert_eq!(lns(&["train", "--config", unknown.to_str().unwrap()]).status.code(), Some(2));
    let o = lns(&["probe", "--config", &cfg, "--checkpoint", "/nonexistent/ckpt.bin"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("does not exist"));
}

#[test]
fn dwta_with_many_tables_is_accepted() {
    let (dir, cfg) = setup();
    let out = out_dir(&dir, "dwta");
    let o = lns(&[
        "train", "--config", &cfg, "--hash", "dwta", "--k", "2", "--l", "400", "--max-iterations", "3", "--out", &out,
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn missing_data_is_a_runtime_failure() {
    let (dir, _) = setup();
    let cfg = dir.path().join("xc.toml");
    std::fs::write(&cfg, "[data]\nkind = \"xc\"\ntrain_path = \"/nope/train.txt\"\ntest_path = \"/nope/test.txt\"\n").unwrap();
    let o = lns(&["train", "--config", cfg.to_str().unwrap(), "--out", &out_dir(&dir, "x")]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn probe_and_eval_read_a_checkpoint() {
    let (dir, cfg) = setup();
    let out = out_dir(&dir, "p");
    assert!(lns(&["train", "--config", &cfg, "--out", &out]).status.success());
    let ckpt = Path::new(&out).join("checkpoint.bin");
    let ckpt = ckpt.to_str().unwrap();
    let o = lns(&["probe", "--config", &cfg, "--checkpoint", ckpt, "--out", &out]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("TV(sampled, uniform)"));
    let report = std::fs::read_to_string(Path::new(&out).join("adaptivity.csv")).unwrap();
    assert_eq!(report.lines().next(), Some("iteration,class_id,target_mass,empirical_mass"));
    assert_eq!(report.lines().count(), 41);
    let mass: f64 = report.lines().skip(1).map(|l| l.split(',').nth(3).unwrap().parse::<f64>().unwrap()).sum();
    assert!((mass - 1.0).abs() < 1e-9);

    let o = lns(&["eval", "--config", &cfg, "--checkpoint", ckpt]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("P@1"));

    let mut damaged = std::fs::read(ckpt).unwrap();
    damaged.truncate(damaged.len() / 2);
    let bad = dir.path().join("bad.bin");
    std::fs::write(&bad, damaged).unwrap();
    assert_eq!(lns(&["eval", "--config", &cfg, "--checkpoint", bad.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn resume_continues_from_the_checkpoint() {
    let (dir, cfg) = setup();
    let out = out_dir(&dir, "r");
    assert!(lns(&["train", "--config", &cfg, "--out", &out]).status.success());
    let ckpt = Path::new(&out).join("checkpoint.bin");
    let more = out_dir(&dir, "r2");
    let o = lns(&["train", "--config", &cfg, "--resume", ckpt.to_str().unwrap(), "--epochs", "2", "--out", &more]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let metrics = std::fs::read_to_string(Path::new(&more).join("metrics.csv")).unwrap();
    let first: u64 = metrics.lines().nth(1).unwrap().split(',').next().unwrap().parse().unwrap();
    assert_eq!(first, 15);
}

#[test]
fn bench_query_prints_one_row_per_size() {
    let (_dir, cfg) = setup();
    let o = lns(&["bench-query", "--config", &cfg]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let rows: Vec<Vec<&str>> = text.lines().skip(1).map(|l| l.split_whitespace().collect()).collect();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0][0], "100");
    // Hash evaluations per query are K * L at every size.
    assert!(rows.iter().all(|r| r[2] == "32"));
}

#[test]
fn skipgram_trains_on_a_text_corpus() {
    let dir = TempDir::new().unwrap();
    let corpus = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures/corpus10.txt");
    let cfg = dir.path().join("words.toml");
    std::fs::write(
        &cfg,
        format!(
            r#"
[data]
kind = "skipgram"
corpus_path = "{}"
window = 2
max_vocab = 20
test_fraction = 0.2

[model]
hidden = 8

[sampler]
kind = "lns_embedding"
negatives = 5

[hash]
family = "dwta"
k = 2
l = 4
bin_size = 4

[train]
batch_size = 16
eval_every = 4
record_wall_clock = false
"#,
            corpus.display()
        ),
    )
    .unwrap();
    let out = out_dir(&dir, "words");
    let o = lns(&["train", "--config", cfg.to_str().unwrap(), "--out", &out]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let metrics = std::fs::read_to_string(Path::new(&out).join("metrics.csv")).unwrap();
    assert!(metrics.lines().count() >= 2);
    for line in metrics.lines().skip(1) {
        let p1: f64 = line.split(',').nth(3).unwrap().parse().unwrap();
        assert!((0.0..=1.0).contains(&p1));
    }
}
