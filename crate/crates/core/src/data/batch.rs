use rand::seq::SliceRandom;
use rand::SeedableRng;

use super::{Sample, XcDataset};
use crate::seed::StreamRng;

/// A group of samples processed in one iteration.
#[derive(Debug, Clone)]
pub struct Batch<'a, T> {
    pub indices: Vec<usize>,
    pub samples: Vec<&'a Sample<T>>,
}

impl<T> Batch<'_, T> {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Indices `0..len` shuffled by `seed` and cut into chunks of
/// `batch_size`; the last chunk may be shorter.
pub fn batch_order(len: usize, batch_size: usize, seed: u64) -> Vec<Vec<usize>> {
    assert!(batch_size >= 1, "batch size must be positive");
    let mut order: Vec<usize> = (0..len).collect();
    order.shuffle(&mut StreamRng::seed_from_u64(seed));
    order.chunks(batch_size).map(<[usize]>::to_vec).collect()
}

/// One shuffled pass over `ds`.
pub fn batches<T>(ds: &XcDataset<T>, batch_size: usize, seed: u64) -> impl Iterator<Item = Batch<'_, T>> {
    batch_order(ds.samples.len(), batch_size, seed)
        .into_iter()
        .map(move |indices| Batch {
            samples: indices.iter().map(|&i| &ds.samples[i]).collect(),
            indices,
        })
}
