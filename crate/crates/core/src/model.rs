//! Domain types shared by the centering, search and diagnostic stages.
//!
//! Everything here is immutable once constructed. Constructors validate
//! their invariants and hand back a [`ModelError`] on bad input, so the
//! downstream algorithms can assume well-formed data.

use std::collections::HashSet;
use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative tolerance used for centering and balance checks.
pub const CENTERING_RTOL: f64 = 1e-10;

/// Tolerance scaled by the magnitude of the data: `rtol * max(1, max|x|)`.
pub fn scaled_tolerance(max_abs: f64) -> f64 {
    CENTERING_RTOL * max_abs.max(1.0)
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("negative entry {value} at row {row}, column {col}")]
    NegativeEntry { row: usize, col: usize, value: f64 },
    #[error("non-finite entry at row {row}, column {col}")]
    NonFiniteEntry { row: usize, col: usize },
    #[error("table has no positive entry")]
    AllZero,
    #[error("duplicate label {0:?}")]
    DuplicateLabel(String),
    #[error("table is {rows}x{cols}; at least 2x2 is required")]
    TooSmall { rows: usize, cols: usize },
    #[error("row {row} has {found} values, expected {expected}")]
    Ragged {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("{what}: expected {expected} labels, found {found}")]
    LabelCount {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("matrix is not double-centered: {0}")]
    NotDoubleCentered(String),
    #[error("sign vector entries must be -1 or +1, found {0} at position {1}")]
    InvalidSign(i8, usize),
    #[error("empty sign vector")]
    EmptySignVector,
}

/// A nonnegative I×J table of counts or composition parts with labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TableRepr", into = "TableRepr")]
pub struct ContingencyTable {
    values: DMatrix<f64>,
    row_labels: Vec<String>,
    col_labels: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct TableRepr {
    row_labels: Vec<String>,
    col_labels: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl TryFrom<TableRepr> for ContingencyTable {
    type Error = ModelError;

    fn try_from(repr: TableRepr) -> Result<Self, Self::Error> {
        ContingencyTable::from_rows(&repr.rows, repr.row_labels, repr.col_labels)
    }
}

impl From<ContingencyTable> for TableRepr {
    fn from(table: ContingencyTable) -> Self {
        let rows = table.rows();
        TableRepr {
            row_labels: table.row_labels,
            col_labels: table.col_labels,
            rows,
        }
    }
}

impl ContingencyTable {
    /// Validates a dense matrix and its labels.
    pub fn new(
        values: DMatrix<f64>,
        row_labels: Vec<String>,
        col_labels: Vec<String>,
    ) -> Result<Self, ModelError> {
        let (rows, cols) = values.shape();
        if rows < 2 || cols < 2 {
            return Err(ModelError::TooSmall { rows, cols });
        }
        if row_labels.len() != rows {
            return Err(ModelError::LabelCount {
                what: "row labels",
                expected: rows,
                found: row_labels.len(),
            });
        }
        if col_labels.len() != cols {
            return Err(ModelError::LabelCount {
                what: "column labels",
                expected: cols,
                found: col_labels.len(),
            });
        }
        for i in 0..rows {
            for j in 0..cols {
                let value = values[(i, j)];
                if !value.is_finite() {
                    return Err(ModelError::NonFiniteEntry { row: i, col: j });
                }
                if value < 0.0 {
                    return Err(ModelError::NegativeEntry { row: i, col: j, value });
                }
            }
        }
        if values.iter().all(|&v| v == 0.0) {
            return Err(ModelError::AllZero);
        }
        check_unique(&row_labels)?;
        check_unique(&col_labels)?;
        Ok(ContingencyTable {
            values,
            row_labels,
            col_labels,
        })
    }

    /// Builds a table from row-major nested vectors.
    pub fn from_rows(
        rows: &[Vec<f64>],
        row_labels: Vec<String>,
        col_labels: Vec<String>,
    ) -> Result<Self, ModelError> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n_cols {
                return Err(ModelError::Ragged {
                    row: i,
                    expected: n_cols,
                    found: row.len(),
                });
            }
        }
        let values = DMatrix::from_fn(n_rows, n_cols, |i, j| rows[i][j]);
        Self::new(values, row_labels, col_labels)
    }

    /// Like [`ContingencyTable::new`] with synthetic labels `R1..RI`, `C1..CJ`.
    pub fn with_synthetic_labels(values: DMatrix<f64>) -> Result<Self, ModelError> {
        let (rows, cols) = values.shape();
        Self::new(values, synthetic_labels('R', rows), synthetic_labels('C', cols))
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn row_labels(&self) -> &[String] {
        &self.row_labels
    }

    pub fn col_labels(&self) -> &[String] {
        &self.col_labels
    }

    pub fn nrows(&self) -> usize {
        self.values.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.values.ncols()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[(row, col)]
    }

    /// Row-major copy of the values.
    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.nrows())
            .map(|i| self.values.row(i).iter().copied().collect())
            .collect()
    }

    pub fn total(&self) -> f64 {
        self.values.sum()
    }

    /// Position of the first zero cell, if any.
    pub fn first_zero(&self) -> Option<(usize, usize)> {
        (0..self.nrows())
            .flat_map(|i| (0..self.ncols()).map(move |j| (i, j)))
            .find(|&(i, j)| self.values[(i, j)] == 0.0)
    }

    /// Applies `f` to every cell and revalidates.
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> Result<Self, ModelError> {
        Self::new(
            self.values.map(f),
            self.row_labels.clone(),
            self.col_labels.clone(),
        )
    }
}

pub fn synthetic_labels(prefix: char, n: usize) -> Vec<String> {
    (1..=n).map(|k| format!("{prefix}{k}")).collect()
}

fn check_unique(labels: &[String]) -> Result<(), ModelError> {
    let mut seen = HashSet::with_capacity(labels.len());
    for label in labels {
        if !seen.insert(label.as_str()) {
            return Err(ModelError::DuplicateLabel(label.clone()));
        }
    }
    Ok(())
}

/// The table divided by its grand total, with its marginal masses.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrespondenceMatrix {
    pub p: DMatrix<f64>,
    pub row_masses: Vec<f64>,
    pub col_masses: Vec<f64>,
    pub total: f64,
    pub row_labels: Vec<String>,
    pub col_labels: Vec<String>,
}

impl CorrespondenceMatrix {
    pub fn nrows(&self) -> usize {
        self.p.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.p.ncols()
    }
}

/// `P = N / t` with row and column marginals.
pub fn correspondence(table: &ContingencyTable) -> CorrespondenceMatrix {
    let total = table.total();
    let p = table.values() / total;
    let row_masses = (0..p.nrows()).map(|i| p.row(i).sum()).collect();
    let col_masses = (0..p.ncols()).map(|j| p.column(j).sum()).collect();
    CorrespondenceMatrix {
        p,
        row_masses,
        col_masses,
        total,
        row_labels: table.row_labels().to_vec(),
        col_labels: table.col_labels().to_vec(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResidualOrigin {
    TcaCentered,
    TlraCentered,
    /// Residual after `m` deflation steps, i.e. `X_{m+1}`.
    Deflated(usize),
    /// A double-centered matrix handed in directly.
    Supplied,
}

/// A double-centered residual matrix `X_α`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualMatrix {
    x: DMatrix<f64>,
    origin: ResidualOrigin,
}

impl ResidualMatrix {
    /// Wraps `x` after checking that every row and column sums to zero.
    pub fn new(x: DMatrix<f64>, origin: ResidualOrigin) -> Result<Self, ModelError> {
        if x.nrows() < 2 || x.ncols() < 2 {
            return Err(ModelError::TooSmall {
                rows: x.nrows(),
                cols: x.ncols(),
            });
        }
        if let Some((i, j)) = first_non_finite(&x) {
            return Err(ModelError::NonFiniteEntry { row: i, col: j });
        }
        let tol = scaled_tolerance(x.amax());
        for i in 0..x.nrows() {
            let s = x.row(i).sum();
            if s.abs() > tol {
                return Err(ModelError::NotDoubleCentered(format!(
                    "row {i} sums to {s:e} (tolerance {tol:e})"
                )));
            }
        }
        for j in 0..x.ncols() {
            let s = x.column(j).sum();
            if s.abs() > tol {
                return Err(ModelError::NotDoubleCentered(format!(
                    "column {j} sums to {s:e} (tolerance {tol:e})"
                )));
            }
        }
        Ok(ResidualMatrix { x, origin })
    }

    /// Removes row and column means from an arbitrary matrix.
    pub fn double_center(m: &DMatrix<f64>) -> Result<Self, ModelError> {
        let (rows, cols) = m.shape();
        if rows < 2 || cols < 2 {
            return Err(ModelError::TooSmall { rows, cols });
        }
        let row_means: Vec<f64> = (0..rows).map(|i| m.row(i).mean()).collect();
        let col_means: Vec<f64> = (0..cols).map(|j| m.column(j).mean()).collect();
        let grand = m.mean();
        let x = DMatrix::from_fn(rows, cols, |i, j| {
            m[(i, j)] - row_means[i] - col_means[j] + grand
        });
        Self::new(x, ResidualOrigin::Supplied)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn origin(&self) -> ResidualOrigin {
        self.origin
    }

    pub fn nrows(&self) -> usize {
        self.x.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.x.ncols()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.x[(row, col)]
    }

    /// `Σ |x_ij|`.
    pub fn abs_sum(&self) -> f64 {
        self.x.iter().map(|v| v.abs()).sum()
    }

    /// Largest absolute row or column sum.
    pub fn max_margin_sum(&self) -> f64 {
        let rows = (0..self.nrows()).map(|i| self.x.row(i).sum().abs());
        let cols = (0..self.ncols()).map(|j| self.x.column(j).sum().abs());
        rows.chain(cols).fold(0.0, f64::max)
    }

    /// Upper bound on the number of nontrivial axes, `min(I-1, J-1)`.
    pub fn rank_bound(&self) -> usize {
        self.nrows().min(self.ncols()) - 1
    }
}

fn first_non_finite(x: &DMatrix<f64>) -> Option<(usize, usize)> {
    (0..x.nrows())
        .flat_map(|i| (0..x.ncols()).map(move |j| (i, j)))
        .find(|&(i, j)| !x[(i, j)].is_finite())
}

/// `sign(x) = +1` if `x > 0`, else `-1`.
#[inline]
pub fn sign(x: f64) -> i8 {
    if x > 0.0 {
        1
    } else {
        -1
    }
}

/// A vector with entries in `{-1, +1}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<i8>", into = "Vec<i8>")]
pub struct SignVector(Vec<i8>);

impl SignVector {
    pub fn new(signs: Vec<i8>) -> Result<Self, ModelError> {
        if signs.is_empty() {
            return Err(ModelError::EmptySignVector);
        }
        if let Some((pos, &s)) = signs.iter().enumerate().find(|(_, &s)| s != 1 && s != -1) {
            return Err(ModelError::InvalidSign(s, pos));
        }
        Ok(SignVector(signs))
    }

    /// Coordinatewise sign with `sign(0) = -1`.
    pub fn sign_of(values: &[f64]) -> Self {
        SignVector(values.iter().map(|&v| sign(v)).collect())
    }

    pub fn ones(n: usize) -> Self {
        SignVector(vec![1; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[i8] {
        &self.0
    }

    pub fn get(&self, k: usize) -> i8 {
        self.0[k]
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(|&s| f64::from(s)).collect()
    }

    pub fn negated(&self) -> Self {
        SignVector(self.0.iter().map(|&s| -s).collect())
    }

    pub fn is_positive(&self, k: usize) -> bool {
        self.0[k] > 0
    }
}

impl TryFrom<Vec<i8>> for SignVector {
    type Error = ModelError;

    fn try_from(signs: Vec<i8>) -> Result<Self, Self::Error> {
        SignVector::new(signs)
    }
}

impl From<SignVector> for Vec<i8> {
    fn from(s: SignVector) -> Self {
        s.0
    }
}

impl fmt::Display for SignVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.0 {
            f.write_str(if *s > 0 { "+" } else { "-" })?;
        }
        Ok(())
    }
}

/// One axis of the taxicab decomposition.
///
/// `u` has one entry per column and `v` one per row; `a = X u` and
/// `b = X' v` are the row and column contribution scores and `delta`
/// is the taxicab dispersion `‖a‖₁ = ‖b‖₁`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisResult {
    pub axis_index: usize,
    pub u: SignVector,
    pub v: SignVector,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub delta: f64,
}

impl AxisResult {
    /// Flips the orientation of the axis: `(u, v, a, b) -> (-u, -v, -a, -b)`.
    pub fn flipped(&self) -> Self {
        AxisResult {
            axis_index: self.axis_index,
            u: self.u.negated(),
            v: self.v.negated(),
            a: self.a.iter().map(|x| -x).collect(),
            b: self.b.iter().map(|x| -x).collect(),
            delta: self.delta,
        }
    }

    /// Row indices with `v_i = +1`.
    pub fn row_partition(&self) -> Vec<usize> {
        (0..self.v.len()).filter(|&i| self.v.is_positive(i)).collect()
    }

    /// Column indices with `u_j = +1`.
    pub fn col_partition(&self) -> Vec<usize> {
        (0..self.u.len()).filter(|&j| self.u.is_positive(j)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Tca,
    Tlra,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Tca => "TCA",
            Method::Tlra => "TLRA",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SearchStrategy {
    Exhaustive,
    CrissCross,
    Genetic,
}

impl SearchStrategy {
    pub fn name(self) -> &'static str {
        match self {
            SearchStrategy::Exhaustive => "exhaustive",
            SearchStrategy::CrissCross => "crisscross",
            SearchStrategy::Genetic => "genetic",
        }
    }
}

impl fmt::Display for SearchStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Result of running the taxicab SVD on a centered matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    /// `None` when the input was not produced by one of the two centerings.
    pub method: Option<Method>,
    pub axes: Vec<AxisResult>,
    /// `X_1`, the matrix the decomposition started from.
    pub centered: ResidualMatrix,
    /// `X_α` for each computed axis, `residuals[0] == centered`.
    pub residuals: Vec<ResidualMatrix>,
    pub rank_bound: usize,
    pub search: SearchStrategy,
    pub table_ref: Option<String>,
    /// Axes on which the heuristic search hit its iteration limit.
    pub unconverged_axes: Vec<usize>,
    /// `true` when the residual after the last axis vanished or the rank
    /// bound was reached, i.e. the axes reconstruct `X_1`.
    pub complete: bool,
}

impl Decomposition {
    pub fn deltas(&self) -> Vec<f64> {
        self.axes.iter().map(|a| a.delta).collect()
    }

    /// `Σ_α a_α b_α' / δ_α` over the computed axes.
    pub fn reconstruction(&self) -> DMatrix<f64> {
        let (rows, cols) = (self.centered.nrows(), self.centered.ncols());
        let mut out = DMatrix::zeros(rows, cols);
        for axis in &self.axes {
            for i in 0..rows {
                for j in 0..cols {
                    out[(i, j)] += axis.a[i] * axis.b[j] / axis.delta;
                }
            }
        }
        out
    }
}

/// Quality of the signs of the residuals for one axis.
///
/// Quadrants are formed by `S = {i : v_i = +1}` over rows and
/// `T = {j : u_j = +1}` over columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QsrRecord {
    pub axis_index: usize,
    pub q_st: f64,
    pub q_sbar_tbar: f64,
    pub q_s_tbar: f64,
    pub q_sbar_t: f64,
    pub overall: f64,
    pub delta: f64,
    /// Quadrants that contained no cell; their value is reported as ±1.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub empty_quadrants: Vec<Quadrant>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quadrant {
    ST,
    SbarTbar,
    STbar,
    SbarT,
}

impl QsrRecord {
    /// Quadrant values in the five-column layout
    /// `(S×T, S̄×T̄, S̄×T, S×T̄, all)`.
    pub fn layout(&self) -> [f64; 5] {
        [
            self.q_st,
            self.q_sbar_tbar,
            self.q_sbar_t,
            self.q_s_tbar,
            self.overall,
        ]
    }

    /// `true` when every quadrant value has magnitude one (within `tol`).
    pub fn all_quadrants_unit(&self, tol: f64) -> bool {
        [self.q_st, self.q_sbar_tbar, self.q_s_tbar, self.q_sbar_t]
            .iter()
            .all(|q| (q.abs() - 1.0).abs() <= tol)
    }
}
