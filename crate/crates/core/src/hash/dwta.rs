use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{check_input, fold_codes, HashError, MAX_BUCKETS_PER_TABLE};
use crate::scalar::Scalar;
use crate::vector::HashInput;

const UNUSED: u32 = u32::MAX;
const MERSENNE_61: u64 = (1 << 61) - 1;

/// Universal hash `((a * x + c) mod p)` over `x = (bin << 32) | attempt`,
/// used to pick donor bins during densification.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProbeHash {
    a: u64,
    c: u64,
}

impl ProbeHash {
    pub fn new(a: u64, c: u64) -> Self {
        Self {
            a: (a % (MERSENNE_61 - 1)) + 1,
            c: c % MERSENNE_61,
        }
    }

    pub fn from_seed(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::new(rng.random(), rng.random())
    }

    pub fn hash(&self, bin: usize, attempt: u32) -> u64 {
        let x = ((bin as u64) << 32) | attempt as u64;
        ((self.a as u128 * x as u128 + self.c as u128) % MERSENNE_61 as u128) as u64
    }

    /// Bin probed for empty `bin` on `attempt` (1-based); never `bin` itself.
    pub fn probe(&self, bin: usize, attempt: u32, total: usize) -> usize {
        debug_assert!(total > 1);
        let delta = 1 + (self.hash(bin, attempt) % (total as u64 - 1)) as usize;
        (bin + delta) % total
    }
}

/// Fills every empty bin with the symbol of a nonempty donor.
///
/// Donors are found by probing `probe.probe(bin, attempt, total)` for
/// attempt = 1, 2, ...; after `4 * total` misses the next nonempty bin in
/// cyclic order is taken. Probes only look at originally nonempty bins, so
/// the result depends on nothing but the input and the probe hash.
pub fn densify(symbols: &[Option<u32>], probe: &ProbeHash) -> Result<Vec<u32>, HashError> {
    if symbols.iter().all(Option::is_none) {
        return Err(HashError::Degenerate);
    }
    let total = symbols.len();
    let max_attempts = 4 * total as u32;
    Ok((0..total)
        .map(|b| {
            if let Some(s) = symbols[b] {
                return s;
            }
            for attempt in 1..=max_attempts {
                if let Some(s) = symbols[probe.probe(b, attempt, total)] {
                    return s;
                }
            }
            (1..total)
                .find_map(|off| symbols[(b + off) % total])
                .expect("at least one bin is nonempty")
        })
        .collect())
}

/// Densified winner-take-all hashing.
///
/// Each seeded permutation of `0..d` is cut into `floor(d / m)` bins of `m`
/// consecutive permuted positions; a bin's symbol is the within-bin position
/// of its largest coordinate (ties to the lower position). Only coordinates
/// the input exposes take part, so a bin can be empty and is then densified.
#[derive(Debug, Clone)]
pub struct DwtaFamily {
    dim: usize,
    k: usize,
    l: usize,
    bin_size: usize,
    bins_per_perm: usize,
    num_perms: usize,
    seed: u64,
    /// `num_perms` rows of `dim`: permuted position -> original coordinate.
    perms: Vec<u32>,
    /// `num_perms` rows of `dim`: original coordinate -> global bin or UNUSED.
    bin_of: Vec<u32>,
    pos_of: Vec<u32>,
    probe: ProbeHash,
}

impl DwtaFamily {
    pub fn new(dim: usize, k: usize, l: usize, bin_size: usize, seed: u64) -> Result<Self, HashError> {
        if k == 0 || l == 0 {
            return Err(HashError::InvalidParam("K and L must be >= 1".into()));
        }
        if bin_size < 2 || bin_size > dim {
            return Err(HashError::InvalidParam(format!(
                "bin size m={bin_size} must satisfy 2 <= m <= d={dim}"
            )));
        }
        let buckets = (bin_size as u64)
            .checked_pow(k as u32)
            .filter(|&b| b <= MAX_BUCKETS_PER_TABLE as u64);
        if buckets.is_none() {
            return Err(HashError::InvalidParam(format!(
                "m^K = {bin_size}^{k} exceeds {MAX_BUCKETS_PER_TABLE} buckets per table"
            )));
        }
        let total_bins = k * l;
        let bins_per_perm = dim / bin_size;
        let num_perms = total_bins.div_ceil(bins_per_perm);

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut perms = Vec::with_capacity(num_perms * dim);
        let mut bin_of = vec![UNUSED; num_perms * dim];
        let mut pos_of = vec![0u32; num_perms * dim];
        let mut order: Vec<u32> = (0..dim as u32).collect();
        for p in 0..num_perms {
            order.shuffle(&mut rng);
            for (slot, &coord) in order.iter().enumerate() {
                let bin = p * bins_per_perm + slot / bin_size;
                if slot / bin_size < bins_per_perm && bin < total_bins {
                    bin_of[p * dim + coord as usize] = bin as u32;
                    pos_of[p * dim + coord as usize] = (slot % bin_size) as u32;
                }
            }
            perms.extend_from_slice(&order);
        }
        let probe = ProbeHash::from_seed(rng.random());
        Ok(Self {
            dim,
            k,
            l,
            bin_size,
            bins_per_perm,
            num_perms,
            seed,
            perms,
            bin_of,
            pos_of,
            probe,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn bin_size(&self) -> usize {
        self.bin_size
    }

    pub fn bins_per_perm(&self) -> usize {
        self.bins_per_perm
    }

    pub fn num_perms(&self) -> usize {
        self.num_perms
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn probe_hash(&self) -> &ProbeHash {
        &self.probe
    }

    pub fn buckets_per_table(&self) -> usize {
        self.bin_size.pow(self.k as u32)
    }

    /// Permutation `p` as permuted position -> original coordinate.
    pub fn permutation(&self, p: usize) -> &[u32] {
        &self.perms[p * self.dim..(p + 1) * self.dim]
    }

    /// Per-bin winners before densification; `None` marks an empty bin.
    pub fn raw_symbols<T: Scalar, V: HashInput<T> + ?Sized>(
        &self,
        v: &V,
    ) -> Result<Vec<Option<u32>>, HashError> {
        check_input(v, self.dim)?;
        let total = self.k * self.l;
        let mut best: Vec<Option<(T, u32)>> = vec![None; total];
        v.for_each_entry(|i, x| {
            for p in 0..self.num_perms {
                let bin = self.bin_of[p * self.dim + i];
                if bin == UNUSED {
                    continue;
                }
                let pos = self.pos_of[p * self.dim + i];
                let slot = &mut best[bin as usize];
                match *slot {
                    Some((bx, bp)) if bx > x || (bx == x && bp < pos) => {}
                    _ => *slot = Some((x, pos)),
                }
            }
        });
        Ok(best.into_iter().map(|b| b.map(|(_, pos)| pos)).collect())
    }

    /// The `K * L` densified symbols.
    pub fn symbols<T: Scalar, V: HashInput<T> + ?Sized>(&self, v: &V) -> Result<Vec<u32>, HashError> {
        densify(&self.raw_symbols(v)?, &self.probe)
    }

    pub fn codes<T: Scalar, V: HashInput<T> + ?Sized>(&self, v: &V) -> Result<Vec<u32>, HashError> {
        Ok(fold_codes(&self.symbols(v)?, self.k, self.bin_size as u32))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vector::SparseVector;

    /// d=4, m=2, K=2, L=1 with the identity permutation.
    fn identity_family() -> DwtaFamily {
        let mut fam = DwtaFamily::new(4, 2, 1, 2, 0).unwrap();
        assert_eq!(fam.num_perms, 1);
        fam.perms = vec![0, 1, 2, 3];
        fam.bin_of = vec![0, 0, 1, 1];
        fam.pos_of = vec![0, 1, 0, 1];
        fam
    }

    #[test]
    fn bin_argmax_hand_trace() {
        let fam = identity_family();
        let v = SparseVector::from_dense(&[0.1f64, 0.9, 0.0, 0.5]);
        assert_eq!(fam.raw_symbols(&v).unwrap(), vec![Some(1), Some(1)]);
        assert_eq!(fam.codes(&v).unwrap(), vec![1 + 2]);
    }

    #[test]
    fn lone_max_leaves_other_bin_empty() {
        let fam = identity_family();
        let v = SparseVector::<f64>::from_pairs(4, [(0, 1.0)]).unwrap();
        assert_eq!(fam.raw_symbols(&v).unwrap(), vec![Some(0), None]);
        // The only donor is bin 0.
        assert_eq!(fam.symbols(&v).unwrap(), vec![0, 0]);
    }

    #[test]
    fn ties_go_to_lower_position() {
        let fam = identity_family();
        assert_eq!(
            fam.raw_symbols(&[2.0f64, 2.0, -1.0, -1.0][..]).unwrap(),
            vec![Some(0), Some(0)]
        );
    }

    #[test]
    fn densify_identity_and_single_donor() {
        let probe = ProbeHash::new(12345, 678);
        let full = vec![Some(3), Some(1), Some(0)];
        assert_eq!(densify(&full, &probe).unwrap(), vec![3, 1, 0]);
        let single = vec![None, None, Some(5), None, None];
        assert_eq!(densify(&single, &probe).unwrap(), vec![5; 5]);
        assert_eq!(densify(&[None, None], &probe), Err(HashError::Degenerate));
    }

    #[test]
    fn densify_four_bins_trace() {
        // Independent trace of the probing rule for bins {0, 2} nonempty.
        let probe = ProbeHash::new(0xDEAD_BEEF, 0x1234_5678);
        let raw = vec![Some(7), None, Some(9), None];
        let (a, c) = (0xDEAD_BEEFu128 % ((1u128 << 61) - 2) + 1, 0x1234_5678u128);
        let trace = |b: usize| -> u32 {
            for attempt in 1u128.. {
                let x = ((b as u128) << 32) | attempt;
                let h = (a * x + c) % ((1u128 << 61) - 1);
                let target = (b + 1 + (h % 3) as usize) % 4;
                if let Some(s) = raw[target] {
                    return s;
                }
            }
            unreachable!()
        };
        let out = densify(&raw, &probe).unwrap();
        assert_eq!(out, vec![7, trace(1), 9, trace(3)]);
        assert_eq!(densify(&raw, &probe).unwrap(), out);
    }

    #[test]
    fn permutations_are_bijections_and_cover_bins() {
        let fam = DwtaFamily::new(10, 3, 5, 3, 42).unwrap();
        // floor(10/3) = 3 bins per permutation, ceil(15/3) = 5 permutations.
        assert_eq!(fam.bins_per_perm(), 3);
        assert_eq!(fam.num_perms(), 5);
        for p in 0..fam.num_perms() {
            let mut seen = fam.permutation(p).to_vec();
            seen.sort_unstable();
            assert_eq!(seen, (0..10).collect::<Vec<u32>>());
        }
        let mut used: Vec<u32> = fam.bin_of.iter().copied().filter(|&b| b != UNUSED).collect();
        used.sort_unstable();
        used.dedup();
        assert_eq!(used.len(), 15);
    }

    #[test]
    fn invalid_params() {
        assert!(DwtaFamily::new(10, 2, 2, 1, 0).is_err());
        assert!(DwtaFamily::new(10, 2, 2, 11, 0).is_err());
        assert!(DwtaFamily::new(10, 0, 2, 2, 0).is_err());
        assert!(DwtaFamily::new(1000, 30, 2, 8, 0).is_err());
    }
}
