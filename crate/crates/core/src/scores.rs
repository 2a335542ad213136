//! Principal scores and symmetric-map coordinates.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{CorrespondenceMatrix, Decomposition, Method};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScoresError {
    #[error("zero {what} mass at index {index}")]
    ZeroMass { what: &'static str, index: usize },
    #[error("decomposition has no centering method attached")]
    UnknownMethod,
    #[error("decomposition is {dec_rows}x{dec_cols} but the table is {rows}x{cols}")]
    DimensionMismatch {
        dec_rows: usize,
        dec_cols: usize,
        rows: usize,
        cols: usize,
    },
    #[error("axis pair ({0}, {1}) is invalid for {2} available axes")]
    AxisOutOfRange(usize, usize, usize),
}

/// Row scores `f` (I×A) and column scores `g` (J×A).
#[derive(Debug, Clone, PartialEq)]
pub struct PrincipalScores {
    pub f: DMatrix<f64>,
    pub g: DMatrix<f64>,
    pub deltas: Vec<f64>,
    pub method: Method,
    pub row_labels: Vec<String>,
    pub col_labels: Vec<String>,
}

impl PrincipalScores {
    pub fn n_axes(&self) -> usize {
        self.deltas.len()
    }
}

/// TCA: `f = a / p_i*`, `g = b / p_*j`. TLRA: `f = I a`, `g = J b`.
pub fn principal_scores(
    dec: &Decomposition,
    p: &CorrespondenceMatrix,
) -> Result<PrincipalScores, ScoresError> {
    let method = dec.method.ok_or(ScoresError::UnknownMethod)?;
    let (rows, cols) = (p.nrows(), p.ncols());
    if dec.centered.nrows() != rows || dec.centered.ncols() != cols {
        return Err(ScoresError::DimensionMismatch {
            dec_rows: dec.centered.nrows(),
            dec_cols: dec.centered.ncols(),
            rows,
            cols,
        });
    }
    let n_axes = dec.axes.len();
    let (f, g) = match method {
        Method::Tca => {
            if let Some(i) = p.row_masses.iter().position(|&m| m <= 0.0) {
                return Err(ScoresError::ZeroMass { what: "row", index: i });
            }
            if let Some(j) = p.col_masses.iter().position(|&m| m <= 0.0) {
                return Err(ScoresError::ZeroMass { what: "column", index: j });
            }
            (
                DMatrix::from_fn(rows, n_axes, |i, k| dec.axes[k].a[i] / p.row_masses[i]),
                DMatrix::from_fn(cols, n_axes, |j, k| dec.axes[k].b[j] / p.col_masses[j]),
            )
        }
        Method::Tlra => (
            DMatrix::from_fn(rows, n_axes, |i, k| rows as f64 * dec.axes[k].a[i]),
            DMatrix::from_fn(cols, n_axes, |j, k| cols as f64 * dec.axes[k].b[j]),
        ),
    };
    Ok(PrincipalScores {
        f,
        g,
        deltas: dec.deltas(),
        method,
        row_labels: p.row_labels.clone(),
        col_labels: p.col_labels.clone(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapPoint {
    pub label: String,
    pub x: f64,
    pub y: f64,
}

/// Rows and columns placed in the same frame for axes `(α, β)`, 1-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapCoordinates {
    pub axes: (usize, usize),
    pub method: Method,
    pub deltas: (f64, f64),
    pub row_points: Vec<MapPoint>,
    pub col_points: Vec<MapPoint>,
}

pub fn map_coordinates(
    scores: &PrincipalScores,
    axis_pair: (usize, usize),
) -> Result<MapCoordinates, ScoresError> {
    let (alpha, beta) = axis_pair;
    let n = scores.n_axes();
    if alpha == beta || alpha == 0 || beta == 0 || alpha > n || beta > n {
        return Err(ScoresError::AxisOutOfRange(alpha, beta, n));
    }
    let points = |m: &DMatrix<f64>, labels: &[String]| -> Vec<MapPoint> {
        labels
            .iter()
            .enumerate()
            .map(|(i, label)| MapPoint {
                label: label.clone(),
                x: m[(i, alpha - 1)],
                y: m[(i, beta - 1)],
            })
            .collect()
    };
    Ok(MapCoordinates {
        axes: axis_pair,
        method: scores.method,
        deltas: (scores.deltas[alpha - 1], scores.deltas[beta - 1]),
        row_points: points(&scores.f, &scores.row_labels),
        col_points: points(&scores.g, &scores.col_labels),
    })
}
