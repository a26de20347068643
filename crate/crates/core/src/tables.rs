//! `L` direct-addressed hash tables over class ids.
//!
//! Lifecycle: [`LshTables::build`] hashes every class once; [`LshTables::query`]
//! costs `K * L` hash evaluations plus at most `L * B` id reads no matter how
//! many ids are stored; [`LshTables::update`] is a remove followed by an
//! insert. Buckets hold at most `B` ids. Once a bucket is full, an arriving
//! id takes a uniformly random slot with probability `B / arrivals`
//! (reservoir sampling), otherwise it is not retained in that table.
//!
//! Every stored id keeps the `L` codes it was filed under, so removal never
//! needs the (possibly already overwritten) vector it was hashed from.

use std::io::{self, Write};
use std::sync::atomic::{AtomicU64, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::hash::{HashError, HashFamily};
use crate::scalar::Scalar;
use crate::vector::HashInput;

/// Set on a recorded code when the id was not retained in that bucket.
const EVICTED: u32 = 1 << 31;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TableError {
    #[error("class id {0} is already stored")]
    DuplicateId(u32),
    #[error("class id {0} is not stored")]
    NotFound(u32),
    #[error("bucket capacity must be >= 1")]
    ZeroCapacity,
    #[error("{tables} tables x {buckets} buckets is too large to direct-address")]
    TooManyBuckets { tables: usize, buckets: usize },
    #[error(transparent)]
    Hash(#[from] HashError),
}

/// Deduplicated ids retrieved by one query, sorted ascending.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CandidateSet {
    ids: Vec<u32>,
}

impl CandidateSet {
    pub fn from_ids(mut ids: Vec<u32>) -> Self {
        ids.sort_unstable();
        ids.dedup();
        Self { ids }
    }

    pub fn ids(&self) -> &[u32] {
        &self.ids
    }

    pub fn into_ids(self) -> Vec<u32> {
        self.ids
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn contains(&self, id: u32) -> bool {
        self.ids.binary_search(&id).is_ok()
    }

    /// Drops every id in `exclude`.
    pub fn without(mut self, exclude: &[u32]) -> Self {
        self.ids.retain(|id| !exclude.contains(id));
        self
    }
}

#[derive(Debug, Default, Clone)]
struct Bucket {
    ids: Vec<u32>,
    arrivals: u64,
}

#[derive(Debug, Default)]
struct Counters {
    hash_evals: AtomicU64,
    table_ops: AtomicU64,
    ids_scanned: AtomicU64,
    queries: AtomicU64,
    rebuilds: AtomicU64,
    updates: AtomicU64,
}

/// Cumulative cost counters.
///
/// `table_ops` follows the classic accounting: inserting or removing one id
/// costs `K * L`, so an update costs `2 * K * L`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TableStats {
    pub hash_evals: u64,
    pub table_ops: u64,
    pub ids_scanned: u64,
    pub queries: u64,
    pub rebuilds: u64,
    pub updates: u64,
}

#[derive(Debug)]
pub struct LshTables<T> {
    family: HashFamily<T>,
    capacity: Option<usize>,
    buckets_per_table: usize,
    buckets: Vec<Bucket>,
    /// Per class id: the L recorded codes (EVICTED-flagged when not retained).
    occupancy: Vec<Option<Box<[u32]>>>,
    len: usize,
    seed: u64,
    rng: ChaCha8Rng,
    counters: Counters,
}

impl<T: Scalar> LshTables<T> {
    /// Empty tables. `capacity = None` means unbounded buckets.
    pub fn new(family: HashFamily<T>, capacity: Option<usize>, seed: u64) -> Result<Self, TableError> {
        if capacity == Some(0) {
            return Err(TableError::ZeroCapacity);
        }
        let l = family.l();
        let per_table = family.buckets_per_table();
        if per_table.saturating_mul(l) > 1 << 28 {
            return Err(TableError::TooManyBuckets {
                tables: l,
                buckets: per_table,
            });
        }
        Ok(Self {
            family,
            capacity,
            buckets_per_table: per_table,
            buckets: vec![Bucket::default(); per_table * l],
            occupancy: Vec::new(),
            len: 0,
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
            counters: Counters::default(),
        })
    }

    /// Hashes and files every `(id, vector)` pair.
    pub fn build<'a, V, I>(
        family: HashFamily<T>,
        capacity: Option<usize>,
        seed: u64,
        items: I,
    ) -> Result<Self, TableError>
    where
        V: HashInput<T> + ?Sized + 'a,
        I: IntoIterator<Item = (u32, &'a V)>,
    {
        let mut tables = Self::new(family, capacity, seed)?;
        for (id, v) in items {
            tables.insert(id, v)?;
        }
        Ok(tables)
    }

    pub fn family(&self) -> &HashFamily<T> {
        &self.family
    }

    pub fn k(&self) -> usize {
        self.family.k()
    }

    pub fn l(&self) -> usize {
        self.family.l()
    }

    pub fn capacity(&self) -> Option<usize> {
        self.capacity
    }

    pub fn buckets_per_table(&self) -> usize {
        self.buckets_per_table
    }

    /// Number of ids stored.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn contains(&self, id: u32) -> bool {
        matches!(self.occupancy.get(id as usize), Some(Some(_)))
    }

    /// The codes `id` was filed under, `None` per table where it was not retained.
    pub fn recorded_codes(&self, id: u32) -> Option<Vec<Option<u32>>> {
        let codes = self.occupancy.get(id as usize)?.as_ref()?;
        Some(
            codes
                .iter()
                .map(|&c| (c & EVICTED == 0).then_some(c))
                .collect(),
        )
    }

    pub fn stats(&self) -> TableStats {
        let c = &self.counters;
        TableStats {
            hash_evals: c.hash_evals.load(Ordering::Relaxed),
            table_ops: c.table_ops.load(Ordering::Relaxed),
            ids_scanned: c.ids_scanned.load(Ordering::Relaxed),
            queries: c.queries.load(Ordering::Relaxed),
            rebuilds: c.rebuilds.load(Ordering::Relaxed),
            updates: c.updates.load(Ordering::Relaxed),
        }
    }

    pub fn reset_stats(&mut self) {
        self.counters = Counters::default();
    }

    #[inline]
    fn slot(&self, table: usize, code: u32) -> usize {
        table * self.buckets_per_table + code as usize
    }

    fn charge(&self, counter: &AtomicU64, amount: usize) {
        counter.fetch_add(amount as u64, Ordering::Relaxed);
    }

    pub fn insert<V: HashInput<T> + ?Sized>(&mut self, id: u32, v: &V) -> Result<(), TableError> {
        if self.contains(id) {
            return Err(TableError::DuplicateId(id));
        }
        let mut codes = self.family.codes(v)?;
        let kl = self.family.evals_per_vector();
        self.charge(&self.counters.hash_evals, kl);
        self.charge(&self.counters.table_ops, kl);

        for (t, code) in codes.iter_mut().enumerate() {
            let slot = self.slot(t, *code);
            let bucket = &mut self.buckets[slot];
            bucket.arrivals += 1;
            match self.capacity {
                Some(cap) if bucket.ids.len() >= cap => {
                    let j = self.rng.random_range(0..bucket.arrivals);
                    if (j as usize) < cap {
                        let evicted = std::mem::replace(&mut bucket.ids[j as usize], id);
                        if let Some(Some(ev)) = self.occupancy.get_mut(evicted as usize) {
                            ev[t] |= EVICTED;
                        }
                    } else {
                        *code |= EVICTED;
                    }
                }
                _ => bucket.ids.push(id),
            }
        }
        if self.occupancy.len() <= id as usize {
            self.occupancy.resize(id as usize + 1, None);
        }
        self.occupancy[id as usize] = Some(codes.into_boxed_slice());
        self.len += 1;
        Ok(())
    }

    pub fn remove(&mut self, id: u32) -> Result<(), TableError> {
        let codes = self
            .occupancy
            .get_mut(id as usize)
            .and_then(Option::take)
            .ok_or(TableError::NotFound(id))?;
        self.charge(&self.counters.table_ops, self.family.evals_per_vector());
        for (t, &code) in codes.iter().enumerate() {
            let slot = self.slot(t, code & !EVICTED);
            let bucket = &mut self.buckets[slot];
            bucket.arrivals = bucket.arrivals.saturating_sub(1);
            if code & EVICTED == 0 {
                if let Some(pos) = bucket.ids.iter().position(|&x| x == id) {
                    bucket.ids.swap_remove(pos);
                }
            }
        }
        self.len -= 1;
        Ok(())
    }

    /// Re-files `id` under the codes of `v`.
    pub fn update<V: HashInput<T> + ?Sized>(&mut self, id: u32, v: &V) -> Result<(), TableError> {
        // Hash first so a degenerate vector leaves the tables untouched.
        self.family.codes(v)?;
        self.remove(id)?;
        self.insert(id, v)?;
        self.charge(&self.counters.updates, 1);
        Ok(())
    }

    /// Drops everything and re-inserts `items`. Counters are kept.
    pub fn rebuild<'a, V, I>(&mut self, items: I) -> Result<(), TableError>
    where
        V: HashInput<T> + ?Sized + 'a,
        I: IntoIterator<Item = (u32, &'a V)>,
    {
        for b in &mut self.buckets {
            b.ids.clear();
            b.arrivals = 0;
        }
        self.occupancy.clear();
        self.len = 0;
        self.rng = ChaCha8Rng::seed_from_u64(self.seed);
        for (id, v) in items {
            self.insert(id, v)?;
        }
        self.charge(&self.counters.rebuilds, 1);
        Ok(())
    }

    /// Union of the `L` buckets `v` hashes to.
    pub fn query<V: HashInput<T> + ?Sized>(&self, v: &V) -> Result<CandidateSet, HashError> {
        let codes = self.family.codes(v)?;
        self.charge(&self.counters.hash_evals, self.family.evals_per_vector());
        self.charge(&self.counters.queries, 1);
        let mut ids = Vec::new();
        for (t, &code) in codes.iter().enumerate() {
            ids.extend_from_slice(&self.buckets[self.slot(t, code)].ids);
        }
        self.charge(&self.counters.ids_scanned, ids.len());
        Ok(CandidateSet::from_ids(ids))
    }

    /// Ids per nonempty bucket as `(table, code, sorted ids)`.
    pub fn bucket_contents(&self) -> Vec<(usize, u32, Vec<u32>)> {
        let mut out = Vec::new();
        for (slot, b) in self.buckets.iter().enumerate() {
            if !b.ids.is_empty() {
                let mut ids = b.ids.clone();
                ids.sort_unstable();
                out.push((
                    slot / self.buckets_per_table,
                    (slot % self.buckets_per_table) as u32,
                    ids,
                ));
            }
        }
        out
    }

    /// Diagnostic dump, one nonempty bucket per line: `table code id id ...`.
    pub fn write_dump<W: Write>(&self, mut w: W) -> io::Result<()> {
        for (t, code, ids) in self.bucket_contents() {
            write!(w, "{t} {code}")?;
            for id in ids {
                write!(w, " {id}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn dump(&self) -> String {
        let mut buf = Vec::new();
        self.write_dump(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("dump is ASCII")
    }

    /// True when the recorded codes agree exactly with a scan of the buckets.
    pub fn occupancy_consistent(&self) -> bool {
        let l = self.l();
        let mut from_scan: Vec<Vec<Option<u32>>> = vec![vec![None; l]; self.occupancy.len()];
        for (t, code, ids) in self.bucket_contents() {
            for id in ids {
                match from_scan.get_mut(id as usize) {
                    Some(row) if row[t].is_none() => row[t] = Some(code),
                    _ => return false,
                }
            }
        }
        let mut count = 0;
        for (id, scanned) in from_scan.iter().enumerate() {
            match self.recorded_codes(id as u32) {
                Some(recorded) => {
                    count += 1;
                    if &recorded != scanned {
                        return false;
                    }
                }
                None => {
                    if scanned.iter().any(Option::is_some) {
                        return false;
                    }
                }
            }
        }
        count == self.len
    }
}
