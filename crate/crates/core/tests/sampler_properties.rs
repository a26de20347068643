use lns::config::HashConfig;
use lns::data::{class_frequencies, Sample, SkipGramStream, XcDataset};
use lns::eval::spearman;
use lns::hash::{retrieval_prob, simhash_collision_prob, FamilyKind, HashFamily};
use lns::network::{build_class_tables, NetworkParams};
use lns::sampler::{finalize_active_set, sample_lns_embedding, sample_lns_label, sample_log_uniform};
use lns::seed::derive_indexed;
use lns::tables::LshTables;
use lns::vector::{Matrix, SparseVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn gaussian(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.sample(StandardNormal)).collect()
}

fn unit(v: &[f64]) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter().map(|x| x / n).collect()
}

/// A unit vector at cosine `cos` from unit `base`.
fn at_cosine(base: &[f64], cos: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let r = gaussian(rng, base.len());
    let along: f64 = r.iter().zip(base).map(|(a, b)| a * b).sum();
    let perp = unit(&r.iter().zip(base).map(|(a, b)| a - along * b).collect::<Vec<_>>());
    let sin = (1.0 - cos * cos).sqrt();
    base.iter().zip(&perp).map(|(b, p)| cos * b + sin * p).collect()
}

fn unbounded_tables(rows: &Matrix<f64>, k: usize, l: usize, seed: u64) -> LshTables<f64> {
    let family = HashFamily::new(FamilyKind::SimHash, rows.cols(), k, l, 2, seed).unwrap();
    LshTables::build(family, None, seed ^ 1, rows.iter_rows().enumerate().map(|(i, r)| (i as u32, r))).unwrap()
}

/// Per-class retrieval frequency of querying with `query` over `builds`
/// independently seeded table builds.
fn retrieval_frequencies(rows: &Matrix<f64>, query: &[f64], k: usize, l: usize, builds: u64, seed: u64) -> Vec<f64> {
    let mut hits = vec![0.0; rows.rows()];
    for b in 0..builds {
        let tables = unbounded_tables(rows, k, l, derive_indexed(seed, b));
        for &id in sample_lns_embedding(query, &[], &tables).unwrap().ids() {
            hits[id as usize] += 1.0;
        }
    }
    hits.iter().map(|h| h / builds as f64).collect()
}

#[test]
fn label_queries_at_random_init_are_uniform() {
    // Every draw uses fresh weights and fresh tables, so the negatives are
    // an exchangeable subset of the 999 non-true classes. Without
    // replacement each class count has variance D p (1 - p), so the Pearson
    // statistic is rescaled by 1 / (1 - p) before the chi-square test.
    let (n_classes, dim, negatives, draws) = (1000usize, 64, 100usize, 10_000u64);
    let hash = HashConfig { k: 6, l: 50, ..HashConfig::default() };
    let mut counts = vec![0u64; n_classes];
    for draw in 0..draws {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_indexed(41, draw));
        let params = NetworkParams::<f32>::init(1, dim, n_classes, &mut rng);
        let tables = build_class_tables(&params, &hash, derive_indexed(42, draw)).unwrap();
        let cand = sample_lns_label(&[0], &params.w_out, &tables, &mut rng).unwrap();
        let active = finalize_active_set(&cand, &[0], negatives, n_classes, &mut rng).unwrap();
        for &c in active.negatives() {
            counts[c as usize] += 1;
        }
    }
    assert_eq!(counts[0], 0);
    let cells = (n_classes - 1) as f64;
    let expected = draws as f64 * negatives as f64 / cells;
    let pearson: f64 = counts[1..].iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    let stat = pearson / (1.0 - negatives as f64 / cells);
    let p = 1.0 - ChiSquared::new(cells - 1.0).unwrap().cdf(stat);
    assert!(p > 0.01, "chi-square {stat:.1}, p = {p:.4}");
}

#[test]
fn planted_clusters_retrieve_their_own_cluster() {
    let (clusters, per_cluster, dim, k, l, builds) = (10usize, 20usize, 64usize, 6, 10, 200u64);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let centers: Vec<Vec<f64>> = (0..clusters).map(|_| unit(&gaussian(&mut rng, dim))).collect();
    let mut data = Vec::new();
    for i in 0..clusters * per_cluster {
        data.extend(at_cosine(&centers[i % clusters], 0.85, &mut rng));
    }
    let rows = Matrix::from_vec(clusters * per_cluster, dim, data);
    let query_class = 0usize;
    let query = rows.row(query_class).to_vec();
    let freq = retrieval_frequencies(&rows, &query, k, l, builds, 77);

    // Oracle: the retrieval formula on the exact planted angles.
    let predicted: Vec<f64> = rows
        .iter_rows()
        .map(|r| retrieval_prob(simhash_collision_prob(&query, r).unwrap(), k, l).unwrap())
        .collect();
    let split = |v: &[f64]| {
        let (mut same, mut cross) = (Vec::new(), Vec::new());
        for (i, &x) in v.iter().enumerate().filter(|(i, _)| *i != query_class) {
            if i % clusters == query_class % clusters { same.push(x) } else { cross.push(x) }
        }
        let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
        (mean(&same), mean(&cross))
    };
    let (same, cross) = split(&freq);
    let (p_same, p_cross) = split(&predicted);
    assert!(p_same >= 3.0 * p_cross, "oracle ratio {p_same} / {p_cross}");
    assert!(same >= 3.0 * cross, "same-cluster {same} vs cross-cluster {cross}");
    assert!((same - p_same).abs() < 0.05 && (cross - p_cross).abs() < 0.02, "{same} {p_same} {cross} {p_cross}");
}

#[test]
fn embedding_retrieval_tracks_cosine_rank() {
    let (n, dim, k, l) = (40usize, 32usize, 4, 8);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let e = unit(&gaussian(&mut rng, dim));
    let cosines: Vec<f64> = (0..n).map(|i| -0.2 + 1.15 * i as f64 / n as f64).collect();
    let data: Vec<f64> = cosines.iter().flat_map(|&c| at_cosine(&e, c, &mut rng)).collect();
    let rows = Matrix::from_vec(n, dim, data);
    let freq = retrieval_frequencies(&rows, &e, k, l, 200, 13);
    let rho = spearman(&cosines, &freq);
    assert!(rho >= 0.9, "spearman {rho}");
}

#[test]
fn retrieval_order_follows_similarity() {
    // Pairs whose predicted retrieval probabilities differ by more than
    // five standard errors must come out in the same order.
    let (n, dim, k, l, builds) = (30usize, 32usize, 3, 6, 500u64);
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let y = unit(&gaussian(&mut rng, dim));
    let sims: Vec<f64> = (0..n).map(|i| -0.5 + 1.45 * i as f64 / n as f64).collect();
    let data: Vec<f64> = sims.iter().flat_map(|&c| at_cosine(&y, c, &mut rng)).collect();
    let rows = Matrix::from_vec(n, dim, data);
    let freq = retrieval_frequencies(&rows, &y, k, l, builds, 99);
    let prob: Vec<f64> = rows
        .iter_rows()
        .map(|r| retrieval_prob(simhash_collision_prob(&y, r).unwrap(), k, l).unwrap())
        .collect();
    let se = |p: f64| (p * (1.0 - p) / builds as f64).sqrt();
    let mut checked = 0;
    for i in 0..n {
        for j in 0..n {
            if sims[i] > sims[j] && prob[i] - prob[j] > 5.0 * (se(prob[i]) + se(prob[j])) {
                assert!(freq[i] > freq[j], "classes {i} {j}: {} vs {}", freq[i], freq[j]);
                checked += 1;
            }
        }
    }
    assert!(checked > n * n / 4, "only {checked} pairs separated");
}

#[test]
fn log_uniform_deciles_match_closed_form() {
    let (n, draws) = (1000usize, 100_000);
    let ranking: Vec<u32> = (0..n as u32).rev().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut deciles = [0.0f64; 10];
    for _ in 0..draws {
        let c = sample_log_uniform(1, n, &[], &ranking, &mut rng).unwrap().ids()[0];
        let rank = n - 1 - c as usize;
        deciles[rank * 10 / n] += 1.0 / draws as f64;
    }
    let total = ((n + 1) as f64).ln();
    for (d, &got) in deciles.iter().enumerate() {
        let (lo, hi) = (d * n / 10, (d + 1) * n / 10);
        // The masses telescope: sum over [lo, hi) of ln((r+2)/(r+1)).
        let want = ((hi + 1) as f64 / (lo + 1) as f64).ln() / total;
        assert!((got - want).abs() < 0.01, "decile {d}: {got} vs {want}");
    }
}

#[test]
fn vocabulary_counts_match_word_count() {
    // Frozen output of `tr -s ' \t\n' '\n' | sort | uniq -c` on the fixture.
    let expected = [
        ("the", 14), ("field", 5), ("fox", 5), ("a", 4), ("and", 4), ("brown", 4), ("dog", 4),
        ("sky", 3), ("at", 2), ("blue", 2), ("dusk", 2), ("green", 2), ("is", 2), ("lazy", 2),
        ("leaves", 2), ("quick", 2), ("afternoon", 1), ("autumn", 1), ("deep", 1), ("fall", 1),
        ("far", 1), ("for", 1), ("hides", 1), ("horizon", 1), ("in", 1), ("jumps", 1), ("meet", 1),
        ("old", 1), ("on", 1), ("over", 1), ("returns", 1), ("runs", 1), ("same", 1), ("share", 1),
        ("sleeps", 1), ("to", 1), ("turns", 1), ("under", 1), ("while", 1),
    ];
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/corpus10.txt");
    let stream = lns::data::build_skipgram(path, 2, 1000, None).unwrap();
    assert_eq!(stream.num_tokens(), 82);
    assert_eq!(stream.vocab.len(), expected.len());
    for (tok, count) in expected {
        let id = stream.vocab.id(tok).unwrap_or_else(|| panic!("{tok} missing"));
        assert_eq!(stream.vocab.count(id), count, "{tok}");
    }
    // Ranks are by count; `the` leads and every count is non-increasing.
    assert_eq!(stream.vocab.token(0), "the");
    assert!((1..stream.vocab.len() as u32).all(|i| stream.vocab.count(i) <= stream.vocab.count(i - 1)));
    let capped = SkipGramStream::from_text(&std::fs::read_to_string(path).unwrap(), 2, 7).unwrap();
    assert_eq!(capped.vocab.len(), 7);
    // Count ties go to the earlier first occurrence: brown, dog, a, and.
    assert_eq!(capped.vocab.token(3), "brown");
    assert_eq!(capped.vocab.token(6), "and");
}

#[test]
fn class_frequencies_match_tally() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut ds = XcDataset::<f32>::new(10, 25);
    let mut raw = Vec::new();
    for _ in 0..100 {
        let labels: Vec<u32> = (0..rng.random_range(1..5)).map(|_| rng.random_range(0..25)).collect();
        raw.push(labels.clone());
        ds.push(Sample::new(SparseVector::one_hot(10, rng.random_range(0..10)).unwrap(), labels)).unwrap();
    }
    let table = class_frequencies(&ds);
    for c in 0..25u32 {
        let tally = raw.iter().filter(|ls| ls.contains(&c)).count() as u64;
        assert_eq!(table.count(c), tally, "class {c}");
    }
    let distinct: u64 = raw
        .iter()
        .map(|ls| {
            let mut s = ls.clone();
            s.sort_unstable();
            s.dedup();
            s.len() as u64
        })
        .sum();
    assert_eq!(table.total(), distinct);
}
