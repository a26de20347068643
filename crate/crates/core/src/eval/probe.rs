//! How far a sampler's negatives are from uniform and from the model's
//! own softmax over the non-true classes.

use std::io::Write;

use rand::SeedableRng;

use crate::config::HashConfig;
use crate::data::Sample;
use crate::network::{build_class_tables, NetworkParams};
use crate::sampler::{NegativeSampler, SamplerKind};
use crate::scalar::Scalar;
use crate::seed::{derive_indexed, derive_seed, StreamRng};
use crate::Error;

pub const ADAPTIVITY_HEADER: &str = "iteration,class_id,target_mass,empirical_mass";

/// Per-class masses averaged over the probe inputs, and total-variation
/// distances averaged over the same inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptivityReport {
    pub iteration: u64,
    pub target_mass: Vec<f64>,
    pub empirical_mass: Vec<f64>,
    pub tv_empirical_uniform: f64,
    pub tv_empirical_target: f64,
    pub tv_uniform_target: f64,
    pub inputs: usize,
    pub draws_per_input: usize,
}

impl AdaptivityReport {
    pub fn write_csv<W: Write>(&self, mut w: W, header: bool) -> std::io::Result<()> {
        if header {
            writeln!(w, "{ADAPTIVITY_HEADER}")?;
        }
        for (c, (t, e)) in self.target_mass.iter().zip(&self.empirical_mass).enumerate() {
            writeln!(w, "{},{c},{t},{e}", self.iteration)?;
        }
        w.flush()
    }
}

pub fn total_variation(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

fn softmax_without(logits: &[f64], labels: &[u32]) -> Vec<f64> {
    let max = logits
        .iter()
        .enumerate()
        .filter(|(i, _)| !labels.contains(&(*i as u32)))
        .map(|(_, &z)| z)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut p: Vec<f64> = logits
        .iter()
        .enumerate()
        .map(|(i, &z)| if labels.contains(&(i as u32)) { 0.0 } else { (z - max).exp() })
        .collect();
    let sum: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= sum);
    p
}

/// Draws `draws_per_input` negative sets for every input and compares their
/// class frequencies with uniform and with the softmax target. Samplers
/// backed by hash tables get freshly seeded tables for every draw, so the
/// frequencies include the hashing randomness.
pub fn adaptivity_probe<T: Scalar>(
    params: &NetworkParams<T>,
    sampler: &NegativeSampler,
    hash: &HashConfig,
    inputs: &[Sample<T>],
    draws_per_input: usize,
    seed: u64,
    iteration: u64,
) -> Result<AdaptivityReport, Error> {
    let n = params.num_classes();
    let mut embeddings = Vec::with_capacity(inputs.len());
    let mut logits = Vec::with_capacity(inputs.len());
    let mut targets = Vec::with_capacity(inputs.len());
    for s in inputs {
        let e = params.forward_embedding(&s.features)?.into_inner();
        let z = params.full_logits(&e);
        targets.push(softmax_without(&z.iter().map(|v| v.as_f64()).collect::<Vec<_>>(), &s.labels));
        logits.push(z);
        embeddings.push(e);
    }

    let mut counts = vec![vec![0u64; n]; inputs.len()];
    let table_seed = derive_seed(seed, "probe-tables");
    let draw_seed = derive_seed(seed, "probe-draws");
    for d in 0..draws_per_input as u64 {
        let tables = if sampler.kind().uses_tables() {
            Some(build_class_tables(params, hash, derive_indexed(table_seed, d))?)
        } else {
            None
        };
        for (i, s) in inputs.iter().enumerate() {
            let mut rng = StreamRng::seed_from_u64(derive_indexed(derive_indexed(draw_seed, d), i as u64));
            let top = (sampler.kind() == SamplerKind::TopK).then_some(logits[i].as_slice());
            let active = sampler.active_set(&s.labels, &embeddings[i], &params.w_out, tables.as_ref(), top, &mut rng)?;
            for &c in active.negatives() {
                counts[i][c as usize] += 1;
            }
        }
    }

    let m = inputs.len().max(1) as f64;
    let mut report = AdaptivityReport {
        iteration,
        target_mass: vec![0.0; n],
        empirical_mass: vec![0.0; n],
        tv_empirical_uniform: 0.0,
        tv_empirical_target: 0.0,
        tv_uniform_target: 0.0,
        inputs: inputs.len(),
        draws_per_input,
    };
    for ((s, c), target) in inputs.iter().zip(&counts).zip(&targets) {
        let total = c.iter().sum::<u64>().max(1) as f64;
        let empirical: Vec<f64> = c.iter().map(|&x| x as f64 / total).collect();
        let free = (n - s.labels.len()) as f64;
        let uniform: Vec<f64> = (0..n as u32)
            .map(|j| if s.labels.contains(&j) { 0.0 } else { 1.0 / free })
            .collect();
        report.tv_empirical_uniform += total_variation(&empirical, &uniform) / m;
        report.tv_empirical_target += total_variation(&empirical, target) / m;
        report.tv_uniform_target += total_variation(&uniform, target) / m;
        for j in 0..n {
            report.target_mass[j] += target[j] / m;
            report.empirical_mass[j] += empirical[j] / m;
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vector::SparseVector;

    fn setup() -> (NetworkParams<f64>, Vec<Sample<f64>>) {
        let params = NetworkParams::init(10, 16, 40, &mut StreamRng::seed_from_u64(1));
        let inputs = (0..4)
            .map(|i| Sample::new(SparseVector::one_hot(10, i).unwrap(), vec![i]))
            .collect();
        (params, inputs)
    }

    #[test]
    fn masses_sum_to_one() {
        let (params, inputs) = setup();
        let sampler = NegativeSampler::new(SamplerKind::LnsEmbedding, 5, 0, 40, None).unwrap();
        let hash = HashConfig { k: 3, l: 4, ..HashConfig::default() };
        let r = adaptivity_probe(&params, &sampler, &hash, &inputs, 30, 2, 0).unwrap();
        assert!((r.target_mass.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!((r.empirical_mass.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        let one = adaptivity_probe(&params, &sampler, &hash, &inputs[2..3], 30, 2, 0).unwrap();
        assert_eq!(one.empirical_mass[2], 0.0);
        assert_eq!(one.target_mass[2], 0.0);
        let mut buf = Vec::new();
        r.write_csv(&mut buf, true).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 41);
        assert!(text.starts_with(ADAPTIVITY_HEADER));
    }

    #[test]
    fn uniform_sampler_is_close_to_uniform() {
        let (params, inputs) = setup();
        let sampler = NegativeSampler::new(SamplerKind::Uniform, 10, 0, 40, None).unwrap();
        let r = adaptivity_probe(&params, &sampler, &HashConfig::default(), &inputs, 2000, 3, 0).unwrap();
        assert!(r.tv_empirical_uniform < 0.05, "{}", r.tv_empirical_uniform);
    }

    #[test]
    fn total_variation_basics() {
        assert_eq!(total_variation(&[0.5, 0.5], &[0.5, 0.5]), 0.0);
        assert_eq!(total_variation(&[1.0, 0.0], &[0.0, 1.0]), 1.0);
    }
}
