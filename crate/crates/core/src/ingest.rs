//! Loading, validating and splitting the labelled flux table.
//!
//! The on-disk layout is the public Kepler labelled time-series CSV: a header
//! row `LABEL,FLUX.1,...,FLUX.L` followed by one row per star. Raw labels are
//! `2` (exoplanet) and `1` (non-exoplanet); in memory they become `1` and `0`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::ops::Deref;
use std::path::Path;

use crate::error::{Error, Result};
use crate::seed;

pub const LABEL_COLUMN: &str = "LABEL";

/// Relative brightness samples for one star. All values are finite.
#[derive(Debug, Clone, PartialEq)]
pub struct LightCurve(Vec<f64>);

impl LightCurve {
    pub fn new(flux: Vec<f64>) -> Result<Self> {
        if let Some(pos) = flux.iter().position(|v| !v.is_finite()) {
            return Err(Error::Validation(format!(
                "non-finite flux value {} at sample {pos}",
                flux[pos]
            )));
        }
        Ok(LightCurve(flux))
    }

    /// For transforms whose output is finite whenever the input is.
    pub(crate) fn from_vec_unchecked(flux: Vec<f64>) -> Self {
        debug_assert!(flux.iter().all(|v| v.is_finite()));
        LightCurve(flux)
    }

    pub fn flux(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for LightCurve {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl AsRef<[f64]> for LightCurve {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for LightCurve {
    type Error = Error;

    fn try_from(flux: Vec<f64>) -> Result<Self> {
        LightCurve::new(flux)
    }
}

/// Curves of identical length with binary labels (1 = exoplanet).
///
/// Immutable once built; `new` rejects empty input, and [`LabeledDataset::empty`]
/// exists for the degenerate test partition of a `ratio = 1.0` split.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    curves: Vec<LightCurve>,
    labels: Vec<u8>,
    width: usize,
}

impl LabeledDataset {
    pub fn new(curves: Vec<LightCurve>, labels: Vec<u8>) -> Result<Self> {
        if curves.is_empty() {
            return Err(Error::Validation("dataset has no rows".into()));
        }
        let width = curves[0].len();
        Self::with_width(curves, labels, width)
    }

    pub fn empty(width: usize) -> Self {
        LabeledDataset {
            curves: Vec::new(),
            labels: Vec::new(),
            width,
        }
    }

    fn with_width(curves: Vec<LightCurve>, labels: Vec<u8>, width: usize) -> Result<Self> {
        if curves.len() != labels.len() {
            return Err(Error::Validation(format!(
                "{} curves but {} labels",
                curves.len(),
                labels.len()
            )));
        }
        if let Some(bad) = labels.iter().find(|&&l| l > 1) {
            return Err(Error::Label(format!("label {bad} is not 0 or 1")));
        }
        if let Some(row) = curves.iter().position(|c| c.len() != width) {
            return Err(Error::Validation(format!(
                "row {row} has {} samples, expected {width}",
                curves[row].len()
            )));
        }
        Ok(LabeledDataset {
            curves,
            labels,
            width,
        })
    }

    pub fn len(&self) -> usize {
        self.curves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.curves.is_empty()
    }

    /// Samples per curve.
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn curves(&self) -> &[LightCurve] {
        &self.curves
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn into_parts(self) -> (Vec<LightCurve>, Vec<u8>) {
        (self.curves, self.labels)
    }

    /// Rows in the given order (indices may repeat).
    pub fn select(&self, indices: &[usize]) -> LabeledDataset {
        LabeledDataset {
            curves: indices.iter().map(|&i| self.curves[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            width: self.width,
        }
    }

    /// Appends rows, keeping the width invariant.
    pub fn extended(self, curves: Vec<LightCurve>, labels: Vec<u8>) -> Result<Self> {
        let width = self.width;
        let (mut all_curves, mut all_labels) = self.into_parts();
        all_curves.extend(curves);
        all_labels.extend(labels);
        Self::with_width(all_curves, all_labels, width)
    }

    /// Replaces every curve with `f(curve)`; labels are unchanged.
    pub fn map_curves<F>(&self, f: F) -> Result<Self>
    where
        F: Fn(&LightCurve) -> Result<LightCurve> + Sync,
    {
        use rayon::prelude::*;
        let curves = self
            .curves
            .par_iter()
            .map(&f)
            .collect::<Result<Vec<_>>>()?;
        let width = curves.first().map_or(self.width, |c| c.len());
        Self::with_width(curves, self.labels.clone(), width)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct ClassCounts {
    pub negatives: u64,
    pub positives: u64,
}

impl ClassCounts {
    pub fn total(&self) -> u64 {
        self.negatives + self.positives
    }
}

impl std::ops::Add for ClassCounts {
    type Output = ClassCounts;

    fn add(self, rhs: ClassCounts) -> ClassCounts {
        ClassCounts {
            negatives: self.negatives + rhs.negatives,
            positives: self.positives + rhs.positives,
        }
    }
}

pub fn class_counts(ds: &LabeledDataset) -> ClassCounts {
    let positives = ds.labels.iter().filter(|&&l| l == 1).count() as u64;
    ClassCounts {
        negatives: ds.len() as u64 - positives,
        positives,
    }
}

/// Raw file labels to binary: 2 -> 1 (exoplanet), 1 -> 0.
pub fn map_labels(raw: &[i64]) -> Result<Vec<u8>> {
    raw.iter()
        .enumerate()
        .map(|(i, &r)| match r {
            2 => Ok(1),
            1 => Ok(0),
            other => Err(Error::Label(format!(
                "raw label {other} at row {i} is not 1 or 2"
            ))),
        })
        .collect()
}

fn raw_label(label: u8) -> u8 {
    label + 1
}

pub fn load_csv(path: impl AsRef<Path>) -> Result<LabeledDataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(BufReader::new(file))
}

pub fn read_csv<R: Read>(reader: R) -> Result<LabeledDataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);

    let headers = rdr.headers()?.clone();
    if headers.len() < 2 || headers.iter().all(|h| h.trim().is_empty()) {
        return Err(Error::Schema(format!(
            "header must be `{LABEL_COLUMN},<flux columns...>`, found {} column(s)",
            headers.len()
        )));
    }
    let first = headers.get(0).unwrap_or_default().trim().trim_start_matches('\u{feff}');
    if !first.eq_ignore_ascii_case(LABEL_COLUMN) {
        return Err(Error::Schema(format!(
            "first column must be {LABEL_COLUMN}, found {first:?}"
        )));
    }
    let width = headers.len() - 1;

    let mut raw_labels = Vec::new();
    let mut curves = Vec::new();
    let mut record = csv::StringRecord::new();
    while rdr.read_record(&mut record)? {
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != headers.len() {
            return Err(Error::Schema(format!(
                "line {line} has {} columns, header has {}",
                record.len(),
                headers.len()
            )));
        }
        let label_cell = record[0].trim();
        let raw: i64 = label_cell.parse().map_err(|_| Error::Parse {
            line,
            column: 1,
            value: label_cell.to_string(),
        })?;
        raw_labels.push(raw);

        let mut flux = Vec::with_capacity(width);
        for (j, cell) in record.iter().enumerate().skip(1) {
            let cell = cell.trim();
            let v: f64 = cell.parse().map_err(|_| Error::Parse {
                line,
                column: j + 1,
                value: cell.to_string(),
            })?;
            if !v.is_finite() {
                return Err(Error::Validation(format!(
                    "non-finite flux {cell:?} at line {line}, column {}",
                    j + 1
                )));
            }
            flux.push(v);
        }
        curves.push(LightCurve(flux));
    }
    if curves.is_empty() {
        return Err(Error::Schema("file has a header but no data rows".into()));
    }
    let labels = map_labels(&raw_labels)?;
    LabeledDataset::with_width(curves, labels, width)
}

pub fn write_csv(ds: &LabeledDataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_csv_to(ds, &mut w).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes the file layout. `{:?}` on `f64` prints the shortest decimal that
/// round-trips, so reloading reproduces every value bit for bit.
pub fn write_csv_to<W: Write>(ds: &LabeledDataset, w: &mut W) -> std::io::Result<()> {
    write!(w, "{LABEL_COLUMN}")?;
    for j in 1..=ds.width {
        write!(w, ",FLUX.{j}")?;
    }
    writeln!(w)?;
    for (curve, &label) in ds.curves.iter().zip(&ds.labels) {
        write!(w, "{}", raw_label(label))?;
        for v in curve.iter() {
            write!(w, ",{v:?}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

/// Row membership of a train/test split.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SplitIndices {
    pub train_idx: Vec<usize>,
    pub test_idx: Vec<usize>,
    pub seed: u64,
    pub ratio: f64,
}

/// Training-partition size: `floor(ratio * n)`, the test partition takes the
/// remainder. A tiny epsilon keeps exact products such as `0.5 * 10` from
/// rounding down.
pub fn train_size(n: usize, ratio: f64) -> usize {
    let raw = (ratio * n as f64 + 1e-9).floor() as usize;
    raw.min(n)
}

/// Seeded uniform permutation, not stratified. Both partitions keep permuted
/// order.
pub fn split(
    ds: &LabeledDataset,
    ratio: f64,
    seed: u64,
) -> Result<(LabeledDataset, LabeledDataset, SplitIndices)> {
    if !(ratio > 0.0 && ratio <= 1.0) {
        return Err(Error::config(format!("split ratio {ratio} not in (0, 1]")));
    }
    let mut perm: Vec<usize> = (0..ds.len()).collect();
    seed::shuffle(&mut perm, &mut seed::rng_from_seed(seed));
    let n_train = train_size(ds.len(), ratio);
    let test_idx = perm.split_off(n_train);
    let train_idx = perm;
    let train = ds.select(&train_idx);
    let test = ds.select(&test_idx);
    Ok((
        train,
        test,
        SplitIndices {
            train_idx,
            test_idx,
            seed,
            ratio,
        },
    ))
}
