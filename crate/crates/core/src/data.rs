//! Observation matrix, CSV ingestion, validation and the shared distance matrix.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result, Warning};

/// An n x p matrix of observations (rows) and variables (columns).
///
/// Entries are finite, and there are at least two rows and one column.
/// Distinctness of rows is established by [`DataMatrix::validate`].
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    values: DMatrix<f64>,
    row_ids: Option<Vec<String>>,
    col_ids: Option<Vec<String>>,
}

impl DataMatrix {
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        if values.nrows() < 2 {
            return Err(Error::InvalidData(format!(
                "need at least 2 observations, got {}",
                values.nrows()
            )));
        }
        if values.ncols() < 1 {
            return Err(Error::InvalidData("need at least 1 variable".into()));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            let n = values.nrows();
            return Err(Error::InvalidData(format!(
                "non-finite value at row {}, column {}",
                pos % n,
                pos / n
            )));
        }
        Ok(Self {
            values,
            row_ids: None,
            col_ids: None,
        })
    }

    /// Builds a matrix from row vectors of equal length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let p = rows.first().map_or(0, Vec::len);
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != p) {
            return Err(Error::InvalidData(format!(
                "row {i} has {} entries, expected {p}",
                r.len()
            )));
        }
        Self::new(DMatrix::from_fn(rows.len(), p, |i, j| rows[i][j]))
    }

    pub fn with_row_ids(mut self, ids: Vec<String>) -> Result<Self> {
        if ids.len() != self.nrows() {
            return Err(Error::DimensionMismatch {
                expected: self.nrows(),
                found: ids.len(),
            });
        }
        self.row_ids = Some(ids);
        Ok(self)
    }

    pub fn with_col_ids(mut self, ids: Vec<String>) -> Result<Self> {
        if ids.len() != self.ncols() {
            return Err(Error::DimensionMismatch {
                expected: self.ncols(),
                found: ids.len(),
            });
        }
        self.col_ids = Some(ids);
        Ok(self)
    }

    #[inline]
    pub fn nrows(&self) -> usize {
        self.values.nrows()
    }

    #[inline]
    pub fn ncols(&self) -> usize {
        self.values.ncols()
    }

    #[inline]
    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.values.row(i).iter().copied().collect()
    }

    pub fn row_ids(&self) -> Option<&[String]> {
        self.row_ids.as_deref()
    }

    pub fn col_ids(&self) -> Option<&[String]> {
        self.col_ids.as_deref()
    }

    /// Identifier of row `i`; defaults to the 0-based index.
    pub fn row_id(&self, i: usize) -> String {
        self.row_ids
            .as_ref()
            .map_or_else(|| i.to_string(), |ids| ids[i].clone())
    }

    /// Identifier of column `j`; defaults to the 0-based index.
    pub fn col_id(&self, j: usize) -> String {
        self.col_ids
            .as_ref()
            .map_or_else(|| j.to_string(), |ids| ids[j].clone())
    }

    /// Removes columns that are constant over the whole dataset, then applies
    /// the ties policy.
    pub fn validate(&self, policy: &TiesPolicy) -> Result<Validated> {
        policy.check()?;
        let mut warnings = Vec::new();
        let mut matrix = self.clone();

        let constant: Vec<usize> = (0..matrix.ncols())
            .filter(|&j| {
                let col = matrix.values.column(j);
                col.iter().all(|&v| v == col[0])
            })
            .collect();
        if constant.len() == matrix.ncols() {
            return Err(Error::AllColumnsConstant);
        }
        if !constant.is_empty() {
            let columns = constant.iter().map(|&j| matrix.col_id(j)).collect();
            matrix = matrix.select_cols(|j| constant.binary_search(&j).is_err())?;
            warnings.push(Warning::ConstantColumnsRemoved { columns });
        }

        let pairs = duplicate_pairs(&matrix.values);
        if !pairs.is_empty() {
            match policy.mode {
                TiesMode::Error => return Err(Error::DuplicateRows { pairs }),
                TiesMode::DropDuplicates => {
                    let mut drop: Vec<usize> = pairs.iter().map(|&(_, b)| b).collect();
                    drop.sort_unstable();
                    drop.dedup();
                    matrix = matrix.select_rows(|i| drop.binary_search(&i).is_err())?;
                    warnings.push(Warning::DuplicatesDropped { rows: drop });
                }
                TiesMode::Jitter => {
                    let rows = jitter_duplicates(&mut matrix.values, policy);
                    warnings.push(Warning::DuplicatesJittered { rows });
                }
            }
        }

        Ok(Validated { matrix, warnings })
    }

    fn select_rows(&self, keep: impl Fn(usize) -> bool) -> Result<Self> {
        let idx: Vec<usize> = (0..self.nrows()).filter(|&i| keep(i)).collect();
        let values = self.values.select_rows(idx.iter());
        let row_ids = idx.iter().map(|&i| self.row_id(i)).collect();
        let mut out = DataMatrix::new(values)?.with_row_ids(row_ids)?;
        out.col_ids = self.col_ids.clone();
        Ok(out)
    }

    fn select_cols(&self, keep: impl Fn(usize) -> bool) -> Result<Self> {
        let idx: Vec<usize> = (0..self.ncols()).filter(|&j| keep(j)).collect();
        let values = self.values.select_columns(idx.iter());
        let col_ids = idx.iter().map(|&j| self.col_id(j)).collect();
        let mut out = DataMatrix::new(values)?.with_col_ids(col_ids)?;
        out.row_ids = self.row_ids.clone();
        Ok(out)
    }
}

/// Result of [`DataMatrix::validate`].
#[derive(Debug, Clone)]
pub struct Validated {
    pub matrix: DataMatrix,
    pub warnings: Vec<Warning>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TiesMode {
    #[default]
    Error,
    Jitter,
    DropDuplicates,
}

/// How duplicate observations are handled before projection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TiesPolicy {
    pub mode: TiesMode,
    /// Jitter standard deviation relative to each column's spread.
    pub jitter_scale: f64,
    pub jitter_seed: u64,
}

impl Default for TiesPolicy {
    fn default() -> Self {
        Self {
            mode: TiesMode::Error,
            jitter_scale: 1e-9,
            jitter_seed: 0,
        }
    }
}

impl TiesPolicy {
    pub fn new(mode: TiesMode) -> Self {
        Self {
            mode,
            ..Self::default()
        }
    }

    fn check(&self) -> Result<()> {
        if self.mode == TiesMode::Jitter && !(self.jitter_scale > 0.0) {
            return Err(Error::param("jitter_scale", "must be > 0 in jitter mode"));
        }
        Ok(())
    }
}

fn row_key(values: &DMatrix<f64>, i: usize) -> Vec<u64> {
    // +0.0 and -0.0 compare equal
    values.row(i).iter().map(|&v| (v + 0.0).to_bits()).collect()
}

/// Pairs (first occurrence, later duplicate) of identical rows.
fn duplicate_pairs(values: &DMatrix<f64>) -> Vec<(usize, usize)> {
    let mut seen: HashMap<Vec<u64>, usize> = HashMap::new();
    let mut pairs = Vec::new();
    for i in 0..values.nrows() {
        match seen.entry(row_key(values, i)) {
            std::collections::hash_map::Entry::Occupied(e) => pairs.push((*e.get(), i)),
            std::collections::hash_map::Entry::Vacant(e) => {
                e.insert(i);
            }
        }
    }
    pairs
}

fn jitter_duplicates(values: &mut DMatrix<f64>, policy: &TiesPolicy) -> Vec<usize> {
    let scales: Vec<f64> = values
        .column_iter()
        .map(|c| {
            let sd = sample_sd(c.iter().copied());
            if sd > 0.0 {
                sd
            } else {
                c.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(1.0)
            }
        })
        .collect();
    let mut rng = ChaCha20Rng::seed_from_u64(policy.jitter_seed);
    let mut touched = Vec::new();
    loop {
        let pairs = duplicate_pairs(values);
        if pairs.is_empty() {
            break;
        }
        for (_, i) in pairs {
            for (j, s) in scales.iter().enumerate() {
                let z: f64 = StandardNormal.sample(&mut rng);
                values[(i, j)] += z * policy.jitter_scale * s;
            }
            touched.push(i);
        }
    }
    touched.sort_unstable();
    touched.dedup();
    touched
}

pub(crate) fn sample_sd(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let n = values.clone().count();
    if n < 2 {
        return 0.0;
    }
    let mean = values.clone().sum::<f64>() / n as f64;
    let ss: f64 = values.map(|v| (v - mean) * (v - mean)).sum();
    (ss / (n - 1) as f64).sqrt()
}

/// Symmetric matrix of Euclidean distances between all observations.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    d: Vec<f64>,
}

impl DistanceMatrix {
    /// Computes all pairwise distances. Rows are processed in parallel; each
    /// entry is summed in column order, so results do not depend on the
    /// thread count.
    pub fn compute(x: &DataMatrix) -> Self {
        let n = x.nrows();
        // p x n, column-major: each observation is contiguous
        let rows = x.values.transpose();
        let upper: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|i| {
                let a = rows.column(i);
                ((i + 1)..n)
                    .map(|j| {
                        let b = rows.column(j);
                        a.iter()
                            .zip(b.iter())
                            .map(|(u, v)| (u - v) * (u - v))
                            .sum::<f64>()
                            .sqrt()
                    })
                    .collect()
            })
            .collect();
        let mut d = vec![0.0; n * n];
        for (i, row) in upper.iter().enumerate() {
            for (off, &v) in row.iter().enumerate() {
                let j = i + 1 + off;
                d[i * n + j] = v;
                d[j * n + i] = v;
            }
        }
        Self { n, d }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.d[i * self.n + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.d[i * self.n..(i + 1) * self.n]
    }
}

/// Shorthand for [`DistanceMatrix::compute`].
pub fn pairwise_distances(x: &DataMatrix) -> DistanceMatrix {
    DistanceMatrix::compute(x)
}

/// Options for [`load_csv`].
#[derive(Debug, Clone, Default)]
pub struct CsvOptions {
    pub has_header: bool,
    /// Column split out as 0/1 outlier labels. A header name, or a 0-based
    /// index when the file has no header.
    pub label_column: Option<String>,
    /// Further columns to discard (same addressing as `label_column`).
    pub exclude: Vec<String>,
}

/// Reads a numeric CSV file. Rows are observations; the optional label
/// column is returned separately.
pub fn load_csv(
    path: impl AsRef<Path>,
    opts: &CsvOptions,
) -> Result<(DataMatrix, Option<Vec<u8>>)> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_csv(file, path.to_path_buf(), opts)
}

pub(crate) fn read_csv<R: std::io::Read>(
    reader: R,
    path: PathBuf,
    opts: &CsvOptions,
) -> Result<(DataMatrix, Option<Vec<u8>>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(opts.has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let header: Option<Vec<String>> = if opts.has_header {
        let h = rdr.headers()?;
        if h.is_empty() {
            return Err(Error::EmptyInput { path });
        }
        Some(h.iter().map(str::to_owned).collect())
    } else {
        None
    };

    let mut records = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec
            .position()
            .map_or(records.len() + 1, |p| p.line() as usize);
        records.push((line, rec));
    }
    if records.is_empty() {
        return Err(Error::EmptyInput { path });
    }

    let width = header.as_ref().map_or(records[0].1.len(), Vec::len);
    let resolve = |name: &str| -> Result<usize> {
        let found = match &header {
            Some(h) => h.iter().position(|c| c == name),
            None => name.parse::<usize>().ok().filter(|&j| j < width),
        };
        found.ok_or_else(|| Error::MissingColumn {
            path: path.clone(),
            column: name.to_owned(),
        })
    };
    let label_idx = opts.label_column.as_deref().map(resolve).transpose()?;
    let mut skip = opts
        .exclude
        .iter()
        .map(|c| resolve(c))
        .collect::<Result<Vec<_>>>()?;
    skip.extend(label_idx);
    let data_cols: Vec<usize> = (0..width).filter(|j| !skip.contains(j)).collect();

    let mut rows = Vec::with_capacity(records.len());
    let mut labels = label_idx.map(|_| Vec::with_capacity(records.len()));
    for (line, rec) in &records {
        if rec.len() != width {
            return Err(Error::RaggedRow {
                path,
                row: *line,
                found: rec.len(),
                expected: width,
            });
        }
        let parse = |j: usize| -> Result<f64> {
            rec[j].parse::<f64>().map_err(|_| Error::NonNumeric {
                path: path.clone(),
                row: *line,
                column: j + 1,
                value: rec[j].to_owned(),
            })
        };
        rows.push(
            data_cols
                .iter()
                .map(|&j| parse(j))
                .collect::<Result<Vec<_>>>()?,
        );
        if let (Some(j), Some(labels)) = (label_idx, labels.as_mut()) {
            let v = parse(j)?;
            labels.push(match v {
                0.0 => 0,
                1.0 => 1,
                value => return Err(Error::InvalidLabel { value }),
            });
        }
    }

    let mut matrix = DataMatrix::from_rows(&rows)?;
    if let Some(h) = header {
        matrix = matrix.with_col_ids(data_cols.iter().map(|&j| h[j].clone()).collect())?;
    }
    Ok((matrix, labels))
}
