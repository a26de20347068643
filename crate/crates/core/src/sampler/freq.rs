use rand::Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::Distribution;

/// Per-class occurrence counts with an alias table for O(1) draws.
#[derive(Debug, Clone)]
pub struct FrequencyTable {
    counts: Vec<u64>,
    total: u64,
    alias: Option<WeightedAliasIndex<f64>>,
}

impl FrequencyTable {
    pub fn from_counts(counts: Vec<u64>) -> Self {
        let total = counts.iter().sum();
        let alias = (total > 0)
            .then(|| WeightedAliasIndex::new(counts.iter().map(|&c| c as f64).collect()).ok())
            .flatten();
        Self {
            counts,
            total,
            alias,
        }
    }

    pub fn num_classes(&self) -> usize {
        self.counts.len()
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn count(&self, class: u32) -> u64 {
        self.counts.get(class as usize).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn prob(&self, class: u32) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.count(class) as f64 / self.total as f64
        }
    }

    /// One draw proportional to count; `None` when every count is zero.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<u32> {
        self.alias.as_ref().map(|a| a.sample(rng) as u32)
    }

    /// Classes by descending count, ties by ascending id.
    pub fn ranking(&self) -> Vec<u32> {
        let mut order: Vec<u32> = (0..self.counts.len() as u32).collect();
        order.sort_by(|&a, &b| self.counts[b as usize].cmp(&self.counts[a as usize]).then(a.cmp(&b)));
        order
    }
}
