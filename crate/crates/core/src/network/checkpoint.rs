//! Versioned little-endian binary snapshot of a training run.
//!
//! Layout: magic, format version, scalar width in bytes, then the header
//! integers, optimizer settings, schedule and every tensor in a fixed
//! order. Lengths are implied by the header shapes.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{AdamConfig, AdamState, NetworkParams, ScheduleState};
use crate::scalar::Scalar;
use crate::vector::Matrix;

const MAGIC: &[u8; 8] = b"LNSCKPT\0";
const VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum CheckpointError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("not a checkpoint file")]
    BadMagic,
    #[error("unsupported checkpoint version {0}")]
    Version(u32),
    #[error("checkpoint stores {found}-byte scalars, expected {expected}")]
    ScalarWidth { expected: usize, found: usize },
    #[error("corrupt checkpoint: {0}")]
    Corrupt(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint<T> {
    /// Master seed of the run.
    pub seed: u64,
    pub step: u64,
    pub params: NetworkParams<T>,
    pub adam: AdamState<T>,
    pub schedule: ScheduleState,
}

struct Writer<W> {
    w: W,
    buf: Vec<u8>,
}

impl<W: Write> Writer<W> {
    fn u64(&mut self, v: u64) -> std::io::Result<()> {
        self.w.write_all(&v.to_le_bytes())
    }

    fn f64(&mut self, v: f64) -> std::io::Result<()> {
        self.w.write_all(&v.to_le_bytes())
    }

    fn scalars<T: Scalar>(&mut self, v: &[T]) -> std::io::Result<()> {
        self.buf.clear();
        for &x in v {
            x.write_le(&mut self.buf);
        }
        self.w.write_all(&self.buf)
    }

    fn u64s(&mut self, v: &[u64]) -> std::io::Result<()> {
        v.iter().try_for_each(|&x| self.u64(x))
    }
}

struct Reader<R> {
    r: R,
}

impl<R: Read> Reader<R> {
    fn bytes(&mut self, n: usize) -> Result<Vec<u8>, CheckpointError> {
        let mut b = vec![0u8; n];
        self.r.read_exact(&mut b).map_err(|e| match e.kind() {
            std::io::ErrorKind::UnexpectedEof => CheckpointError::Corrupt("truncated file".into()),
            _ => e.into(),
        })?;
        Ok(b)
    }

    fn u64(&mut self) -> Result<u64, CheckpointError> {
        Ok(u64::from_le_bytes(self.bytes(8)?.try_into().expect("8 bytes")))
    }

    fn f64(&mut self) -> Result<f64, CheckpointError> {
        Ok(f64::from_bits(self.u64()?))
    }

    fn len(&mut self, what: &str) -> Result<usize, CheckpointError> {
        let v = self.u64()?;
        if v > 1 << 40 {
            return Err(CheckpointError::Corrupt(format!("implausible {what} {v}")));
        }
        Ok(v as usize)
    }

    fn scalars<T: Scalar>(&mut self, n: usize) -> Result<Vec<T>, CheckpointError> {
        Ok(self.bytes(n * T::BYTES)?.chunks_exact(T::BYTES).map(T::read_le).collect())
    }

    fn matrix<T: Scalar>(&mut self, rows: usize, cols: usize) -> Result<Matrix<T>, CheckpointError> {
        Ok(Matrix::from_vec(rows, cols, self.scalars(rows * cols)?))
    }

    fn u64s(&mut self, n: usize) -> Result<Vec<u64>, CheckpointError> {
        (0..n).map(|_| self.u64()).collect()
    }
}

impl<T: Scalar> Checkpoint<T> {
    pub fn write_to<W: Write>(&self, w: W) -> Result<(), CheckpointError> {
        let mut w = Writer { w, buf: Vec::new() };
        let p = &self.params;
        let a = &self.adam;
        let s = &self.schedule;
        w.w.write_all(MAGIC)?;
        w.w.write_all(&VERSION.to_le_bytes())?;
        w.w.write_all(&[T::BYTES as u8])?;
        for v in [self.seed, self.step, p.input_dim() as u64, p.hidden_dim() as u64, p.num_classes() as u64] {
            w.u64(v)?;
        }
        for v in [a.config.lr, a.config.beta1, a.config.beta2, a.config.eps] {
            w.f64(v)?;
        }
        w.u64(a.step)?;
        w.f64(s.period)?;
        w.f64(s.growth)?;
        w.u64(s.next_update)?;
        w.f64(s.rebuild_fraction)?;
        w.u64(s.touched.len() as u64)?;
        w.u64s(&s.touched.iter().map(|&t| t as u64).collect::<Vec<_>>())?;

        w.scalars(p.w1.as_slice())?;
        w.scalars(&p.b1)?;
        w.scalars(p.w_out.as_slice())?;
        w.scalars(&p.b_out)?;
        w.scalars(a.w1_m.as_slice())?;
        w.scalars(a.w1_v.as_slice())?;
        w.u64s(&a.w1_t)?;
        w.scalars(&a.b1_m)?;
        w.scalars(&a.b1_v)?;
        w.u64(a.b1_t)?;
        w.scalars(a.out_m.as_slice())?;
        w.scalars(a.out_v.as_slice())?;
        w.u64s(&a.out_t)?;
        w.w.flush()?;
        Ok(())
    }

    pub fn read_from<R: Read>(r: R) -> Result<Self, CheckpointError> {
        let mut r = Reader { r };
        if r.bytes(8)? != MAGIC {
            return Err(CheckpointError::BadMagic);
        }
        let version = u32::from_le_bytes(r.bytes(4)?.try_into().expect("4 bytes"));
        if version != VERSION {
            return Err(CheckpointError::Version(version));
        }
        let width = r.bytes(1)?[0] as usize;
        if width != T::BYTES {
            return Err(CheckpointError::ScalarWidth { expected: T::BYTES, found: width });
        }
        let seed = r.u64()?;
        let step = r.u64()?;
        let d = r.len("input dimension")?;
        let h = r.len("hidden size")?;
        let n = r.len("class count")?;
        let config = AdamConfig {
            lr: r.f64()?,
            beta1: r.f64()?,
            beta2: r.f64()?,
            eps: r.f64()?,
        };
        let adam_step = r.u64()?;
        let period = r.f64()?;
        let growth = r.f64()?;
        let next_update = r.u64()?;
        let rebuild_fraction = r.f64()?;
        let touched_len = r.len("touched count")?;
        let touched = r
            .u64s(touched_len)?
            .into_iter()
            .map(|t| {
                if (t as usize) < n {
                    Ok(t as u32)
                } else {
                    Err(CheckpointError::Corrupt(format!("touched class {t} out of range")))
                }
            })
            .collect::<Result<Vec<_>, _>>()?;

        let params = NetworkParams {
            w1: r.matrix(d, h)?,
            b1: r.scalars(h)?,
            w_out: r.matrix(n, h)?,
            b_out: r.scalars(n)?,
        };
        let adam = AdamState {
            config,
            step: adam_step,
            w1_m: r.matrix(d, h)?,
            w1_v: r.matrix(d, h)?,
            w1_t: r.u64s(d)?,
            b1_m: r.scalars(h)?,
            b1_v: r.scalars(h)?,
            b1_t: r.u64()?,
            out_m: r.matrix(n, h + 1)?,
            out_v: r.matrix(n, h + 1)?,
            out_t: r.u64s(n)?,
        };
        if r.r.read(&mut [0u8; 1])? != 0 {
            return Err(CheckpointError::Corrupt("trailing bytes".into()));
        }
        if !params.is_finite() {
            return Err(CheckpointError::Corrupt("non-finite weights".into()));
        }
        Ok(Self {
            seed,
            step,
            params,
            adam,
            schedule: ScheduleState {
                period,
                growth,
                next_update,
                rebuild_fraction,
                touched,
            },
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), CheckpointError> {
        self.write_to(BufWriter::new(File::create(path)?))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, CheckpointError> {
        Self::read_from(BufReader::new(File::open(path)?))
    }
}
