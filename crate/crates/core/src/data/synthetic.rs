//! Synthetic classification tasks with known structure.

use rand::seq::index::sample as sample_indices;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use super::{Sample, XcDataset};
use crate::scalar::Scalar;
use crate::seed::{derive_seed, StreamRng};
use crate::vector::SparseVector;

/// Classes grouped into clusters. Every input carries a few features
/// shared by its whole cluster plus a few from its own class signature,
/// so classes of the same cluster are the hard negatives of each other.
///
/// Feature layout: `clusters * cluster_features` cluster features, then the
/// signature features, then `noise_features`. Each class draws
/// `class_features` signature features from a pool of `class_pool`. With
/// `pool_per_cluster` every cluster has its own pool, so classes of one
/// cluster share signature features and only negative evidence separates
/// them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlantedClusterSpec {
    pub num_classes: usize,
    pub clusters: usize,
    pub train_samples: usize,
    pub test_samples: usize,
    pub cluster_features: usize,
    /// Zero means one feature per signature slot, so signatures rarely
    /// share features.
    pub class_pool: usize,
    pub pool_per_cluster: bool,
    pub class_features: usize,
    pub noise_features: usize,
    pub active_cluster: usize,
    pub active_class: usize,
    pub active_noise: usize,
}

impl Default for PlantedClusterSpec {
    fn default() -> Self {
        Self {
            num_classes: 1000,
            clusters: 10,
            train_samples: 20_000,
            test_samples: 2_000,
            cluster_features: 40,
            class_pool: 0,
            pool_per_cluster: false,
            class_features: 6,
            noise_features: 200,
            active_cluster: 6,
            active_class: 3,
            active_noise: 3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PlantedClusters<T> {
    pub train: XcDataset<T>,
    pub test: XcDataset<T>,
    /// Cluster of each class.
    pub cluster_of: Vec<u32>,
}

impl PlantedClusterSpec {
    /// Size of one signature pool.
    pub fn class_pool(&self) -> usize {
        match (self.class_pool, self.pool_per_cluster) {
            (0, false) => self.num_classes * self.class_features,
            (0, true) => self.num_classes.div_ceil(self.clusters.max(1)) * self.class_features,
            (p, _) => p,
        }
    }

    fn signature_features(&self) -> usize {
        if self.pool_per_cluster {
            self.clusters * self.class_pool()
        } else {
            self.class_pool()
        }
    }

    pub fn input_dim(&self) -> usize {
        self.clusters * self.cluster_features + self.signature_features() + self.noise_features
    }

    pub fn validate(&self) -> Result<(), String> {
        let checks = [
            (self.num_classes >= 2, "num_classes must be >= 2"),
            (self.clusters >= 1 && self.clusters <= self.num_classes, "clusters must be in 1..=num_classes"),
            (self.active_cluster <= self.cluster_features, "active_cluster exceeds cluster_features"),
            (self.active_class <= self.class_features, "active_class exceeds class_features"),
            (self.class_features <= self.class_pool(), "class_features exceeds class_pool"),
            (self.active_noise <= self.noise_features, "active_noise exceeds noise_features"),
            (self.active_cluster + self.active_class + self.active_noise > 0, "samples would have no features"),
        ];
        match checks.iter().find(|c| !c.0) {
            Some((_, msg)) => Err((*msg).to_owned()),
            None => Ok(()),
        }
    }

    /// Class `c` belongs to cluster `c % clusters`; labels are uniform.
    pub fn generate<T: Scalar>(&self, seed: u64) -> PlantedClusters<T> {
        self.validate().expect("invalid planted-cluster spec");
        let mut rng = StreamRng::seed_from_u64(derive_seed(seed, "planted-signatures"));
        let pool = self.class_pool();
        let cluster_of: Vec<u32> = (0..self.num_classes).map(|c| (c % self.clusters) as u32).collect();
        let signatures: Vec<Vec<usize>> = (0..self.num_classes)
            .map(|c| {
                let offset = if self.pool_per_cluster { cluster_of[c] as usize * pool } else { 0 };
                sample_indices(&mut rng, pool, self.class_features).iter().map(|i| offset + i).collect()
            })
            .collect();
        let class_base = self.clusters * self.cluster_features;
        let noise_base = class_base + self.signature_features();
        let dim = self.input_dim();

        let make = |n: usize, label: &str| {
            let mut rng = StreamRng::seed_from_u64(derive_seed(seed, label));
            let mut ds = XcDataset::new(dim, self.num_classes);
            for _ in 0..n {
                let c = rng.random_range(0..self.num_classes);
                let g = cluster_of[c] as usize;
                let mut idx: Vec<u32> = Vec::new();
                idx.extend(
                    sample_indices(&mut rng, self.cluster_features, self.active_cluster)
                        .iter()
                        .map(|i| (g * self.cluster_features + i) as u32),
                );
                let mut sig: Vec<u32> = sample_indices(&mut rng, self.class_features, self.active_class)
                    .iter()
                    .map(|i| (class_base + signatures[c][i]) as u32)
                    .collect();
                idx.append(&mut sig);
                idx.extend(
                    sample_indices(&mut rng, self.noise_features, self.active_noise)
                        .iter()
                        .map(|i| (noise_base + i) as u32),
                );
                let x = SparseVector::from_pairs(dim, idx.into_iter().map(|i| (i, T::one())))
                    .expect("feature groups are disjoint");
                ds.push(Sample::new(x, vec![c as u32])).expect("valid sample");
            }
            ds
        };
        PlantedClusters {
            train: make(self.train_samples, "planted-train"),
            test: make(self.test_samples, "planted-test"),
            cluster_of,
        }
    }
}

/// Inputs with `nnz` uniformly placed unit features and one uniform label.
pub fn random_sparse<T: Scalar>(samples: usize, dim: usize, nnz: usize, num_classes: usize, seed: u64) -> XcDataset<T> {
    let mut rng = StreamRng::seed_from_u64(seed);
    let mut ds = XcDataset::new(dim, num_classes);
    for _ in 0..samples {
        let idx = sample_indices(&mut rng, dim, nnz.min(dim));
        let x = SparseVector::from_pairs(dim, idx.iter().map(|i| (i as u32, T::one()))).expect("distinct indices");
        let y = rng.random_range(0..num_classes as u32);
        ds.push(Sample::new(x, vec![y])).expect("valid sample");
    }
    ds
}
