use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::EvalError;

pub const METRICS_HEADER: &str = "iteration,wall_clock_s,train_loss,p_at_1,p_at_k";

/// One evaluation point of a training run.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRecord {
    pub iteration: u64,
    /// Training time since the start of the run, evaluation excluded.
    pub wall_clock_s: f64,
    /// Mean batch loss since the previous record.
    pub train_loss: f64,
    pub p_at_1: f64,
    pub p_at_k: Option<f64>,
}

impl MetricsRecord {
    fn to_csv(&self) -> String {
        let p_at_k = self.p_at_k.map(|p| p.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{}",
            self.iteration, self.wall_clock_s, self.train_loss, self.p_at_1, p_at_k
        )
    }

    fn from_csv(line: &str, no: usize) -> Result<Self, EvalError> {
        let bad = |msg: &str| EvalError::Csv { line: no, msg: msg.to_owned() };
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 5 {
            return Err(bad("expected 5 fields"));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad(&format!("bad number `{s}`")));
        Ok(Self {
            iteration: f[0].parse().map_err(|_| bad("bad iteration"))?,
            wall_clock_s: num(f[1])?,
            train_loss: num(f[2])?,
            p_at_1: num(f[3])?,
            p_at_k: if f[4].is_empty() { None } else { Some(num(f[4])?) },
        })
    }
}

/// Streams records to a CSV file, flushing after each one.
pub struct MetricsWriter {
    out: BufWriter<File>,
}

impl MetricsWriter {
    /// Truncates `path` and writes the header.
    pub fn create(path: impl AsRef<Path>) -> Result<Self, EvalError> {
        let mut w = Self { out: BufWriter::new(File::create(path)?) };
        writeln!(w.out, "{METRICS_HEADER}")?;
        w.out.flush()?;
        Ok(w)
    }

    /// Appends to `path`, writing the header only if the file is empty.
    pub fn append(path: impl AsRef<Path>) -> Result<Self, EvalError> {
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        let empty = file.metadata()?.len() == 0;
        let mut w = Self { out: BufWriter::new(file) };
        if empty {
            writeln!(w.out, "{METRICS_HEADER}")?;
            w.out.flush()?;
        }
        Ok(w)
    }

    pub fn write(&mut self, record: &MetricsRecord) -> Result<(), EvalError> {
        writeln!(self.out, "{}", record.to_csv())?;
        self.out.flush()?;
        Ok(())
    }
}

pub fn emit_metrics(records: &[MetricsRecord], path: impl AsRef<Path>) -> Result<(), EvalError> {
    let mut w = MetricsWriter::create(path)?;
    records.iter().try_for_each(|r| w.write(r))
}

pub fn read_metrics(path: impl AsRef<Path>) -> Result<Vec<MetricsRecord>, EvalError> {
    let mut lines = BufReader::new(File::open(path)?).lines();
    if lines.next().transpose()?.as_deref() != Some(METRICS_HEADER) {
        return Err(EvalError::Csv { line: 1, msg: "missing metrics header".into() });
    }
    lines
        .enumerate()
        .map(|(i, l)| MetricsRecord::from_csv(&l?, i + 2))
        .collect()
}
