#![allow(dead_code)]

use lns::data::{Sample, XcDataset};
use lns::network::{accumulate_sample, hidden_gradient, softmax_ce_active, Gradients, NetworkParams};
use lns::sampler::ActiveSet;
use lns::vector::{Matrix, SparseVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Plain dense network and Adam written without any of the crate's
/// sparse machinery.
pub struct DenseReference {
    pub w1: Vec<Vec<f64>>,
    pub b1: Vec<f64>,
    pub w2: Vec<Vec<f64>>,
    pub b2: Vec<f64>,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    t: u64,
    lr: f64,
}

impl DenseReference {
    pub fn from_params(p: &NetworkParams<f64>, lr: f64) -> Self {
        let rows = |m: &Matrix<f64>| m.iter_rows().map(<[f64]>::to_vec).collect::<Vec<_>>();
        let me = Self {
            w1: rows(&p.w1),
            b1: p.b1.clone(),
            w2: rows(&p.w_out),
            b2: p.b_out.clone(),
            m: Vec::new(),
            v: Vec::new(),
            t: 0,
            lr,
        };
        let zeros: Vec<Vec<f64>> = me.flat().iter().map(|b| vec![0.0; b.len()]).collect();
        Self {
            m: zeros.clone(),
            v: zeros,
            ..me
        }
    }

    fn flat(&self) -> Vec<Vec<f64>> {
        let mut out: Vec<Vec<f64>> = self.w1.clone();
        out.push(self.b1.clone());
        out.extend(self.w2.iter().cloned());
        out.push(self.b2.clone());
        out
    }

    fn set_flat(&mut self, blocks: Vec<Vec<f64>>) {
        let d = self.w1.len();
        let n = self.w2.len();
        self.w1 = blocks[..d].to_vec();
        self.b1 = blocks[d].clone();
        self.w2 = blocks[d + 1..d + 1 + n].to_vec();
        self.b2 = blocks[d + 1 + n].clone();
    }

    /// One full-softmax Adam step on the batch mean loss; returns that loss.
    pub fn step(&mut self, batch: &[(Vec<f64>, u32)]) -> f64 {
        let (d, h, n) = (self.w1.len(), self.b1.len(), self.w2.len());
        let mut gw1 = vec![vec![0.0; h]; d];
        let mut gb1 = vec![0.0; h];
        let mut gw2 = vec![vec![0.0; h]; n];
        let mut gb2 = vec![0.0; n];
        let mut loss = 0.0;
        let bsz = batch.len() as f64;
        for (x, y) in batch {
            let z: Vec<f64> = (0..h).map(|k| self.b1[k] + (0..d).map(|j| x[j] * self.w1[j][k]).sum::<f64>()).collect();
            let e: Vec<f64> = z.iter().map(|v| v.max(0.0)).collect();
            let logits: Vec<f64> = (0..n).map(|i| self.b2[i] + (0..h).map(|k| self.w2[i][k] * e[k]).sum::<f64>()).collect();
            let mx = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let s: f64 = logits.iter().map(|l| (l - mx).exp()).sum();
            let p: Vec<f64> = logits.iter().map(|l| (l - mx).exp() / s).collect();
            loss += -(p[*y as usize].ln()) / bsz;
            let mut dl = p.clone();
            dl[*y as usize] -= 1.0;
            let mut de = vec![0.0; h];
            for i in 0..n {
                gb2[i] += dl[i] / bsz;
                for k in 0..h {
                    gw2[i][k] += dl[i] * e[k] / bsz;
                    de[k] += dl[i] * self.w2[i][k];
                }
            }
            for k in 0..h {
                let dz = if z[k] > 0.0 { de[k] } else { 0.0 };
                gb1[k] += dz / bsz;
                for j in 0..d {
                    gw1[j][k] += x[j] * dz / bsz;
                }
            }
        }
        let mut grads = gw1;
        grads.push(gb1);
        grads.extend(gw2);
        grads.push(gb2);
        self.t += 1;
        let (b1, b2, eps) = (0.9f64, 0.999f64, 1e-8);
        let c1 = 1.0 - b1.powi(self.t as i32);
        let c2 = 1.0 - b2.powi(self.t as i32);
        let mut params = self.flat();
        for (bi, g) in grads.iter().enumerate() {
            for (pi, &gv) in g.iter().enumerate() {
                let m = &mut self.m[bi][pi];
                let v = &mut self.v[bi][pi];
                *m = b1 * *m + (1.0 - b1) * gv;
                *v = b2 * *v + (1.0 - b2) * gv * gv;
                params[bi][pi] -= self.lr * (*m / c1) / ((*v / c2).sqrt() + eps);
            }
        }
        self.set_flat(params);
        loss
    }

    pub fn max_diff(&self, p: &NetworkParams<f64>) -> f64 {
        let mut worst = 0.0f64;
        let mut cmp = |a: &[f64], b: &[f64]| {
            for (x, y) in a.iter().zip(b) {
                worst = worst.max((x - y).abs());
            }
        };
        for (j, r) in self.w1.iter().enumerate() {
            cmp(r, p.w1.row(j));
        }
        cmp(&self.b1, &p.b1);
        for (i, r) in self.w2.iter().enumerate() {
            cmp(r, p.w_out.row(i));
        }
        cmp(&self.b2, &p.b_out);
        worst
    }
}

/// Dense Gaussian inputs with uniform labels.
pub fn dense_task(samples: usize, dim: usize, classes: usize, seed: u64) -> (XcDataset<f64>, Vec<(Vec<f64>, u32)>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ds = XcDataset::new(dim, classes);
    let mut raw = Vec::new();
    for _ in 0..samples {
        let x: Vec<f64> = (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let y = rng.random_range(0..classes as u32);
        ds.push(Sample::new(SparseVector::from_dense(&x), vec![y])).unwrap();
        raw.push((x, y));
    }
    (ds, raw)
}

/// Batch-mean loss of fixed active sets, for finite differences.
pub fn batch_loss(params: &NetworkParams<f64>, batch: &[(Sample<f64>, ActiveSet)]) -> f64 {
    batch
        .iter()
        .map(|(s, a)| {
            let h = params.forward_hidden(&s.features).unwrap();
            softmax_ce_active(&params.forward_output_active(&h.post, a), a).0
        })
        .sum::<f64>()
        / batch.len() as f64
}

/// Analytic gradient of [`batch_loss`] through the crate's accumulation.
pub fn batch_gradients(params: &NetworkParams<f64>, batch: &[(Sample<f64>, ActiveSet)]) -> Gradients<f64> {
    let mut g = Gradients::for_params(params);
    let scale = 1.0 / batch.len() as f64;
    for (s, a) in batch {
        let h = params.forward_hidden(&s.features).unwrap();
        let logits = params.forward_output_active(&h.post, a);
        let (_, dl) = softmax_ce_active(&logits, a);
        let dz = hidden_gradient(params, &h, a, &dl);
        accumulate_sample(&mut g, &s.features, &h.post, &dz, a, &dl, scale);
    }
    g
}

/// FNV-1a over the bit patterns of a row set.
pub fn digest_rows(m: &Matrix<f32>, rows: impl Iterator<Item = usize>) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for r in rows {
        for v in m.row(r) {
            for b in v.to_bits().to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        }
    }
    h
}

/// Small network and batch with fixed active sets, every hidden
/// pre-activation kept away from the ReLU kink.
pub fn random_instance(rng: &mut ChaCha8Rng) -> (NetworkParams<f64>, Vec<(Sample<f64>, ActiveSet)>) {
    loop {
        let d = rng.random_range(5..12);
        let h = rng.random_range(3..8);
        let n = rng.random_range(6..15);
        let mut params = NetworkParams::init(d, h, n, rng);
        params.b1.iter_mut().for_each(|b| *b = rng.random_range(-0.3..0.3));
        params.b_out.iter_mut().for_each(|b| *b = rng.random_range(-0.3..0.3));
        let batch: Vec<(Sample<f64>, ActiveSet)> = (0..rng.random_range(1..4))
            .map(|_| {
                let nnz = rng.random_range(1..=d);
                let idx = rand::seq::index::sample(rng, d, nnz);
                let x = SparseVector::from_pairs(d, idx.iter().map(|i| (i as u32, rng.random_range(-2.0..2.0)))).unwrap();
                let labels: Vec<u32> = (0..rng.random_range(1..3)).map(|_| rng.random_range(0..n as u32)).collect();
                let negs: Vec<u32> = (0..rng.random_range(0..5)).map(|_| rng.random_range(0..n as u32)).collect();
                let negs = negs.into_iter().filter(|c| !labels.contains(c)).collect();
                let a = ActiveSet::new(&labels, negs);
                (Sample::new(x, labels), a)
            })
            .collect();
        let clear = batch.iter().all(|(s, _)| {
            params.forward_hidden(&s.features).unwrap().pre.iter().all(|z| z.abs() > 1e-3)
        });
        if clear {
            return (params, batch);
        }
    }
}

