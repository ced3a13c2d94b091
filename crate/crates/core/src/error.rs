use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the LocOut pipeline and its I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("{path}: empty input")]
    EmptyInput { path: PathBuf },

    #[error("{path}: row {row} has {found} fields, expected {expected}")]
    RaggedRow {
        path: PathBuf,
        row: usize,
        found: usize,
        expected: usize,
    },

    #[error("{path}: row {row}, column {column}: cannot parse {value:?} as a number")]
    NonNumeric {
        path: PathBuf,
        row: usize,
        column: usize,
        value: String,
    },

    #[error("{path}: column {column:?} not found")]
    MissingColumn { path: PathBuf, column: String },

    #[error("label column contains {value}; only 0 (inlier) and 1 (outlier) are allowed")]
    InvalidLabel { value: f64 },

    #[error("invalid data matrix: {0}")]
    InvalidData(String),

    #[error("duplicate rows found (pairs, 0-based): {}", format_pairs(.pairs))]
    DuplicateRows { pairs: Vec<(usize, usize)> },

    #[error("every column has zero variance")]
    AllColumnsConstant,

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error(
        "degenerate core{}: column {column} has zero variance within the core",
        .initiator.map(|i| format!(" (initiated by row {i})")).unwrap_or_default()
    )]
    DegenerateCore {
        initiator: Option<usize>,
        column: usize,
    },

    #[error("observation {observation} lies in every core; no projection can score it")]
    NoContributingProjection { observation: usize },

    #[error("labels must contain at least one outlier and one inlier")]
    SingleClass,

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for failures of the numerical pipeline rather than of the input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::DegenerateCore { .. }
                | Error::NoContributingProjection { .. }
                | Error::Numerical(_)
        )
    }
}

fn format_pairs(pairs: &[(usize, usize)]) -> String {
    const SHOWN: usize = 10;
    let mut s = pairs
        .iter()
        .take(SHOWN)
        .map(|(a, b)| format!("({a}, {b})"))
        .collect::<Vec<_>>()
        .join(", ");
    if pairs.len() > SHOWN {
        s.push_str(&format!(" and {} more", pairs.len() - SHOWN));
    }
    s
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Non-fatal conditions surfaced to the caller.
#[derive(Debug, Clone, PartialEq)]
pub enum Warning {
    /// Columns with zero variance over the whole dataset were removed.
    ConstantColumnsRemoved { columns: Vec<String> },
    /// Duplicate rows were dropped (indices refer to the input matrix).
    DuplicatesDropped { rows: Vec<usize> },
    /// Duplicate rows were perturbed to break ties.
    DuplicatesJittered { rows: Vec<usize> },
    /// The core space can hold all of the data: every orthogonal distance is zero.
    LowDimension { p: usize, core_size: usize },
    /// A simulated group is too small to receive any outlier.
    NoOutliersInGroup { group: usize, size: usize },
}

impl std::fmt::Display for Warning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Warning::ConstantColumnsRemoved { columns } => write!(
                f,
                "removed {} zero-variance column(s): {}",
                columns.len(),
                columns.join(", ")
            ),
            Warning::DuplicatesDropped { rows } => {
                write!(f, "dropped {} duplicate row(s): {rows:?}", rows.len())
            }
            Warning::DuplicatesJittered { rows } => {
                write!(f, "jittered {} duplicate row(s): {rows:?}", rows.len())
            }
            Warning::LowDimension { p, core_size } => write!(
                f,
                "p = {p} <= core size {core_size}: all orthogonal distances are structurally \
                 zero, LocOut carries no information and every score is 0; \
                 the method needs more variables than core observations"
            ),
            Warning::NoOutliersInGroup { group, size } => write!(
                f,
                "group {group} has only {size} observations; no outliers injected"
            ),
        }
    }
}
