//! Double-centering of a table: the multiplicative independence residual
//! used by TCA and the log bi-additive residual used by TLRA.

use nalgebra::DMatrix;
use thiserror::Error;

use crate::model::{
    ContingencyTable, CorrespondenceMatrix, ModelError, ResidualMatrix, ResidualOrigin,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CenteringError {
    #[error(
        "zero cell at row {row} ({row_label:?}), column {col} ({col_label:?}); \
         log-ratio centering needs strictly positive cells (try --add-one)"
    )]
    ZeroCell {
        row: usize,
        col: usize,
        row_label: String,
        col_label: String,
    },
    #[error("pseudocount must be positive and finite, got {0}")]
    NonPositiveConstant(f64),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// `X_1(i, j) = p_ij - p_i* p_*j`.
pub fn center_tca(p: &CorrespondenceMatrix) -> ResidualMatrix {
    let x = DMatrix::from_fn(p.nrows(), p.ncols(), |i, j| {
        p.p[(i, j)] - p.row_masses[i] * p.col_masses[j]
    });
    ResidualMatrix::new(x, ResidualOrigin::TcaCentered)
        .expect("independence residuals of a valid table are double-centered")
}

/// Logs of a strictly positive matrix with their row, column and grand means.
#[derive(Debug, Clone, PartialEq)]
pub struct LogTable {
    pub g: DMatrix<f64>,
    pub row_means: Vec<f64>,
    pub col_means: Vec<f64>,
    pub grand_mean: f64,
}

impl LogTable {
    fn from_positive(
        m: &DMatrix<f64>,
        row_labels: &[String],
        col_labels: &[String],
    ) -> Result<Self, CenteringError> {
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                if m[(i, j)] <= 0.0 {
                    return Err(CenteringError::ZeroCell {
                        row: i,
                        col: j,
                        row_label: row_labels[i].clone(),
                        col_label: col_labels[j].clone(),
                    });
                }
            }
        }
        let g = m.map(f64::ln);
        let row_means = (0..g.nrows()).map(|i| g.row(i).mean()).collect();
        let col_means = (0..g.ncols()).map(|j| g.column(j).mean()).collect();
        let grand_mean = g.mean();
        Ok(LogTable {
            g,
            row_means,
            col_means,
            grand_mean,
        })
    }

    /// `G_ij = log p_ij`.
    pub fn from_proportions(p: &CorrespondenceMatrix) -> Result<Self, CenteringError> {
        Self::from_positive(&p.p, &p.row_labels, &p.col_labels)
    }

    /// `G_ij = log n_ij`; differs from the proportion logs by the constant `log t`.
    pub fn from_counts(table: &ContingencyTable) -> Result<Self, CenteringError> {
        Self::from_positive(table.values(), table.row_labels(), table.col_labels())
    }

    /// `G_ij - G_i* - G_*j + G_**`.
    pub fn interaction(&self) -> ResidualMatrix {
        let x = DMatrix::from_fn(self.g.nrows(), self.g.ncols(), |i, j| {
            self.g[(i, j)] - self.row_means[i] - self.col_means[j] + self.grand_mean
        });
        ResidualMatrix::new(x, ResidualOrigin::TlraCentered)
            .expect("double-centered logs of a positive table")
    }
}

/// Log bi-additive residual computed from `log p_ij`.
pub fn center_tlra(p: &CorrespondenceMatrix) -> Result<ResidualMatrix, CenteringError> {
    Ok(LogTable::from_proportions(p)?.interaction())
}

/// Log bi-additive residual computed from `log n_ij`. The `-log t` shift
/// cancels under double-centering so this equals [`center_tlra`].
pub fn center_tlra_counts(table: &ContingencyTable) -> Result<ResidualMatrix, CenteringError> {
    Ok(LogTable::from_counts(table)?.interaction())
}

/// Adds `c` to every cell (Tukey's "+1" when `c = 1`).
pub fn add_pseudocount(table: &ContingencyTable, c: f64) -> Result<ContingencyTable, CenteringError> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(CenteringError::NonPositiveConstant(c));
    }
    Ok(table.map_values(|v| v + c)?)
}
