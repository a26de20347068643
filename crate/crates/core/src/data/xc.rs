//! The sparse text format used by extreme-classification repositories:
//!
//! ```text
//! num_points num_features num_labels
//! l1,l2,... f1:v1 f2:v2 ...
//! ```
//!
//! A line that starts with whitespace, or whose first token is a feature,
//! has no labels.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use super::{DataError, Sample, XcDataset};
use crate::scalar::Scalar;
use crate::vector::SparseVector;

fn err(line: usize, msg: impl Into<String>) -> DataError {
    DataError::Parse {
        line,
        msg: msg.into(),
    }
}

fn parse_header(line: &str) -> Result<[usize; 3], DataError> {
    let fields: Vec<&str> = line.split_whitespace().collect();
    if fields.len() != 3 {
        return Err(err(1, "header must be `num_points num_features num_labels`"));
    }
    let mut out = [0usize; 3];
    for (o, f) in out.iter_mut().zip(&fields) {
        *o = f.parse().map_err(|_| err(1, format!("bad header field `{f}`")))?;
    }
    Ok(out)
}

fn parse_sample<T: Scalar>(line: &str, no: usize, num_features: usize, num_labels: usize) -> Result<Sample<T>, DataError> {
    let mut tokens = line.split_whitespace().peekable();
    let mut labels = Vec::new();
    let has_labels = !line.starts_with(char::is_whitespace) && tokens.peek().is_some_and(|t| !t.contains(':'));
    if has_labels {
        for l in tokens.next().unwrap_or_default().split(',').filter(|s| !s.is_empty()) {
            let id: u32 = l.parse().map_err(|_| err(no, format!("bad label `{l}`")))?;
            if id as usize >= num_labels {
                return Err(err(no, format!("label {id} out of range for {num_labels} labels")));
            }
            labels.push(id);
        }
    }
    let mut pairs = Vec::new();
    for tok in tokens {
        let (i, v) = tok
            .split_once(':')
            .ok_or_else(|| err(no, format!("expected `index:value`, got `{tok}`")))?;
        let i: u32 = i.parse().map_err(|_| err(no, format!("bad feature index `{i}`")))?;
        let v: f64 = v.parse().map_err(|_| err(no, format!("bad feature value `{v}`")))?;
        pairs.push((i, T::of(v)));
    }
    let features = SparseVector::from_pairs(num_features, pairs).map_err(|e| err(no, e.to_string()))?;
    Ok(Sample::new(features, labels))
}

/// Parses a whole file from any buffered reader.
pub fn read_xc<T: Scalar, R: BufRead>(reader: R) -> Result<XcDataset<T>, DataError> {
    let mut lines = reader.lines();
    let header = lines.next().ok_or_else(|| err(1, "missing header"))??;
    let [num_points, num_features, num_labels] = parse_header(&header)?;
    let mut ds = XcDataset::new(num_features, num_labels);
    let mut seen = 0usize;
    for (i, line) in lines.enumerate() {
        let line = line?;
        let no = i + 2;
        if seen == num_points {
            if line.trim().is_empty() {
                continue;
            }
            return Err(err(no, format!("more than the {num_points} samples declared in the header")));
        }
        ds.push(parse_sample(&line, no, num_features, num_labels)?)
            .map_err(|e| err(no, e.to_string()))?;
        seen += 1;
    }
    if seen < num_points {
        return Err(err(seen + 2, format!("header declares {num_points} samples, found {seen}")));
    }
    if ds.dropped > 0 {
        log::warn!("dropped {} samples without labels", ds.dropped);
    }
    Ok(ds)
}

pub fn parse_xc_str<T: Scalar>(text: &str) -> Result<XcDataset<T>, DataError> {
    read_xc(text.as_bytes())
}

pub fn parse_xc<T: Scalar>(path: impl AsRef<Path>) -> Result<XcDataset<T>, DataError> {
    read_xc(BufReader::new(File::open(path)?))
}

/// Writes the labeled samples of `ds`; dropped samples are not written.
pub fn write_xc<T: Scalar, W: Write>(ds: &XcDataset<T>, mut w: W) -> std::io::Result<()> {
    writeln!(w, "{} {} {}", ds.samples.len(), ds.num_features, ds.num_labels)?;
    for s in &ds.samples {
        let labels: Vec<String> = s.labels.iter().map(u32::to_string).collect();
        write!(w, "{}", labels.join(","))?;
        for (i, v) in s.features.iter() {
            write!(w, " {i}:{v}")?;
        }
        writeln!(w)?;
    }
    w.flush()
}
