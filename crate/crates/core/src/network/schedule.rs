use crate::hash::HashError;
use crate::scalar::Scalar;
use crate::tables::{LshTables, TableError};
use crate::vector::Matrix;

/// When to push changed class vectors back into the hash tables.
///
/// The gap between refreshes starts at `initial_period` and grows by
/// `growth` after every refresh: with 50 and 1.05 refreshes land on
/// iterations 50, 103, 159, ...
#[derive(Debug, Clone, PartialEq)]
pub struct UpdateSchedule {
    period: f64,
    growth: f64,
    next_update: u64,
    rebuild_fraction: f64,
    touched_flag: Vec<bool>,
    touched: Vec<u32>,
}

/// What a call to [`maybe_update_tables`] did.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableRefresh {
    NotDue,
    /// Re-inserted this many classes one by one.
    PerId(usize),
    /// Rebuilt every table from scratch.
    Rebuilt,
}

impl UpdateSchedule {
    pub fn new(initial_period: u64, growth: f64, rebuild_fraction: f64, num_classes: usize) -> Self {
        assert!(initial_period >= 1 && growth >= 1.0);
        Self {
            period: initial_period as f64,
            growth,
            next_update: initial_period,
            rebuild_fraction,
            touched_flag: vec![false; num_classes],
            touched: Vec::new(),
        }
    }

    /// Restores a schedule saved with [`UpdateSchedule::state`].
    pub fn from_state(state: ScheduleState, num_classes: usize) -> Self {
        let mut s = Self {
            period: state.period,
            growth: state.growth,
            next_update: state.next_update,
            rebuild_fraction: state.rebuild_fraction,
            touched_flag: vec![false; num_classes],
            touched: Vec::new(),
        };
        for id in state.touched {
            s.touch(id);
        }
        s
    }

    pub fn state(&self) -> ScheduleState {
        ScheduleState {
            period: self.period,
            growth: self.growth,
            next_update: self.next_update,
            rebuild_fraction: self.rebuild_fraction,
            touched: self.touched.clone(),
        }
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn next_update(&self) -> u64 {
        self.next_update
    }

    pub fn touched(&self) -> &[u32] {
        &self.touched
    }

    pub fn touch(&mut self, id: u32) {
        let flag = &mut self.touched_flag[id as usize];
        if !*flag {
            *flag = true;
            self.touched.push(id);
        }
    }

    pub fn is_due(&self, step: u64) -> bool {
        step == self.next_update
    }

    fn advance(&mut self) {
        for &id in &self.touched {
            self.touched_flag[id as usize] = false;
        }
        self.touched.clear();
        self.period *= self.growth;
        self.next_update += self.period.ceil() as u64;
    }
}

/// Serializable snapshot of an [`UpdateSchedule`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleState {
    pub period: f64,
    pub growth: f64,
    pub next_update: u64,
    pub rebuild_fraction: f64,
    pub touched: Vec<u32>,
}

/// Refreshes the tables if `step` is a scheduled refresh step.
///
/// Touched classes are re-inserted with their current row of
/// `class_vectors`, or every table is rebuilt when more than the rebuild
/// fraction of all classes was touched. A row that is all zero cannot be
/// hashed and is left out of the tables until it changes again.
pub fn maybe_update_tables<T: Scalar>(
    step: u64,
    schedule: &mut UpdateSchedule,
    tables: Option<&mut LshTables<T>>,
    class_vectors: &Matrix<T>,
) -> Result<TableRefresh, TableError> {
    if !schedule.is_due(step) {
        return Ok(TableRefresh::NotDue);
    }
    let n = class_vectors.rows();
    let result = match tables {
        None => TableRefresh::PerId(0),
        Some(t) if schedule.touched.len() as f64 > schedule.rebuild_fraction * n as f64 => {
            let zero = T::zero();
            t.rebuild(
                class_vectors
                    .iter_rows()
                    .enumerate()
                    .filter(|(_, r)| r.iter().any(|&v| v != zero))
                    .map(|(i, r)| (i as u32, r)),
            )?;
            TableRefresh::Rebuilt
        }
        Some(t) => {
            for &id in &schedule.touched {
                match t.update(id, class_vectors.row(id as usize)) {
                    Ok(()) => {}
                    Err(TableError::Hash(HashError::Degenerate)) => {
                        if t.contains(id) {
                            t.remove(id)?;
                        }
                    }
                    Err(TableError::NotFound(_)) => t.insert(id, class_vectors.row(id as usize))?,
                    Err(e) => return Err(e),
                }
            }
            TableRefresh::PerId(schedule.touched.len())
        }
    };
    log::debug!("step {step}: table refresh {result:?}");
    schedule.advance();
    Ok(result)
}
