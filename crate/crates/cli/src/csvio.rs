//! CSV reading/writing shared by the subcommands.
//!
//! Values are written with `{:e}` so reruns are byte-identical and files
//! round-trip through `f64` parsing exactly.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use nalgebra::{DMatrix, DVector};

/// A minimal line writer enforcing a fixed column layout.
pub struct CsvWriter {
    out: BufWriter<File>,
    columns: usize,
}

impl CsvWriter {
    pub fn create(path: &Path, header: &[&str]) -> Result<Self> {
        let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        let mut out = BufWriter::new(file);
        writeln!(out, "{}", header.join(","))?;
        Ok(Self {
            out,
            columns: header.len(),
        })
    }

    pub fn row(&mut self, fields: &[String]) -> Result<()> {
        if fields.len() != self.columns {
            bail!(
                "row has {} fields, header has {}",
                fields.len(),
                self.columns
            );
        }
        writeln!(self.out, "{}", fields.join(","))?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.out.flush()?;
        Ok(())
    }
}

pub fn fmt(x: f64) -> String {
    format!("{x:e}")
}

/// One sample per row, comma-separated components.
pub fn write_samples(path: &Path, samples: &[DVector<f64>]) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut out = BufWriter::new(file);
    for s in samples {
        let fields: Vec<String> = s.iter().map(|&x| fmt(x)).collect();
        writeln!(out, "{}", fields.join(","))?;
    }
    out.flush()?;
    Ok(())
}

/// Reads samples written by [`write_samples`]; every row must have the same
/// length.
pub fn read_samples(path: &Path) -> Result<Vec<DVector<f64>>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut samples = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let values: Vec<f64> = line
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .with_context(|| format!("row {i}: bad value {t:?}"))
            })
            .collect::<Result<_>>()?;
        if let Some(first) = samples.first() {
            let first: &DVector<f64> = first;
            if first.len() != values.len() {
                bail!(
                    "row {i} has {} values, expected {}",
                    values.len(),
                    first.len()
                );
            }
        }
        samples.push(DVector::from_vec(values));
    }
    if samples.is_empty() {
        bail!("{} holds no samples", path.display());
    }
    Ok(samples)
}

/// One basis per row: the n×d matrix flattened row-major.
pub fn write_bases(path: &Path, bases: &[DMatrix<f64>]) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut out = BufWriter::new(file);
    for b in bases {
        let mut fields = Vec::with_capacity(b.len());
        for i in 0..b.nrows() {
            for j in 0..b.ncols() {
                fields.push(fmt(b[(i, j)]));
            }
        }
        writeln!(out, "{}", fields.join(","))?;
    }
    out.flush()?;
    Ok(())
}

/// Reads bases written by [`write_bases`].
pub fn read_bases(path: &Path, rows: usize, cols: usize) -> Result<Vec<DMatrix<f64>>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut bases = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let values: Vec<f64> = line
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .with_context(|| format!("row {i}: bad value {t:?}"))
            })
            .collect::<Result<_>>()?;
        if values.len() != rows * cols {
            bail!(
                "row {i} has {} values, expected {}",
                values.len(),
                rows * cols
            );
        }
        bases.push(DMatrix::from_row_slice(rows, cols, &values));
    }
    Ok(bases)
}
