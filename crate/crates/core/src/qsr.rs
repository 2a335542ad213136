//! Quality of the signs of the residuals (QSR).
//!
//! For axis `α` with row partition `S = {i : v_i = +1}` and column
//! partition `T = {j : u_j = +1}`, the overall index is
//! `QSR_α = δ_α / Σ|X_α(i, j)|` and the quadrant index on `E × F` is the
//! ratio of the signed to the absolute residual mass in that block. Because
//! each block sums to `±δ_α / 4`, the quadrant value also equals
//! `±(δ_α / 4) / Σ_{E×F} |X_α(i, j)|`.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{AxisResult, Decomposition, QsrRecord, Quadrant, ResidualMatrix};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QsrError {
    #[error("residual matrix is identically zero")]
    ZeroResidual,
    #[error("axis has {axis_rows}x{axis_cols} scores but the residual is {rows}x{cols}")]
    DimensionMismatch {
        rows: usize,
        cols: usize,
        axis_rows: usize,
        axis_cols: usize,
    },
    #[error("need {needed} axes from each method, got {tca} (TCA) and {tlra} (TLRA)")]
    MismatchedAxes { needed: usize, tca: usize, tlra: usize },
}

fn check_dims(x: &ResidualMatrix, axis: &AxisResult) -> Result<(), QsrError> {
    if axis.v.len() != x.nrows() || axis.u.len() != x.ncols() {
        return Err(QsrError::DimensionMismatch {
            rows: x.nrows(),
            cols: x.ncols(),
            axis_rows: axis.v.len(),
            axis_cols: axis.u.len(),
        });
    }
    Ok(())
}

/// `δ_α / Σ|X_α(i, j)|`.
pub fn qsr_overall(x: &ResidualMatrix, axis: &AxisResult) -> Result<f64, QsrError> {
    check_dims(x, axis)?;
    let mass = x.abs_sum();
    if mass == 0.0 {
        return Err(QsrError::ZeroResidual);
    }
    Ok(axis.delta / mass)
}

/// Signed and absolute residual mass of one quadrant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadrantMass {
    pub signed: f64,
    pub absolute: f64,
    pub cells: usize,
}

/// Mass of the block `{i : v_i = row_sign} × {j : u_j = col_sign}`.
pub fn quadrant_mass(x: &ResidualMatrix, axis: &AxisResult, row_sign: i8, col_sign: i8) -> QuadrantMass {
    let mut mass = QuadrantMass {
        signed: 0.0,
        absolute: 0.0,
        cells: 0,
    };
    for i in (0..x.nrows()).filter(|&i| axis.v.get(i) == row_sign) {
        for j in (0..x.ncols()).filter(|&j| axis.u.get(j) == col_sign) {
            let value = x.get(i, j);
            mass.signed += value;
            mass.absolute += value.abs();
            mass.cells += 1;
        }
    }
    mass
}

/// Quadrant value via `(δ/4) / (v±' |X| u±)`, with the quadrant's sign.
pub fn quadrant_value_from_delta(
    x: &ResidualMatrix,
    axis: &AxisResult,
    quadrant: Quadrant,
) -> Option<f64> {
    let (row_sel, col_sel, sign) = selectors(quadrant);
    // v± = (v ± 1)/2 and u± = (u ± 1)/2 as 0/±1 indicator vectors.
    let v_ind: Vec<f64> = (0..x.nrows())
        .map(|i| indicator(axis.v.get(i), row_sel))
        .collect();
    let u_ind: Vec<f64> = (0..x.ncols())
        .map(|j| indicator(axis.u.get(j), col_sel))
        .collect();
    let mut denom = 0.0;
    for (i, vi) in v_ind.iter().enumerate() {
        for (j, uj) in u_ind.iter().enumerate() {
            denom += vi * x.get(i, j).abs() * uj;
        }
    }
    if denom == 0.0 {
        return None;
    }
    Some(sign * (axis.delta / 4.0) / denom.abs())
}

fn indicator(s: i8, selected: i8) -> f64 {
    (f64::from(s) + f64::from(selected)) / 2.0
}

fn selectors(q: Quadrant) -> (i8, i8, f64) {
    match q {
        Quadrant::ST => (1, 1, 1.0),
        Quadrant::SbarTbar => (-1, -1, 1.0),
        Quadrant::STbar => (1, -1, -1.0),
        Quadrant::SbarT => (-1, 1, -1.0),
    }
}

/// Overall and per-quadrant QSR for one axis of `x`.
///
/// Each quadrant is computed from the `δ/4` identity; an empty quadrant or
/// one with no residual mass is reported as exactly `±1` and listed in
/// `empty_quadrants`.
pub fn qsr_quadrants(x: &ResidualMatrix, axis: &AxisResult) -> Result<QsrRecord, QsrError> {
    let overall = qsr_overall(x, axis)?;
    let mut empty = Vec::new();
    let mut value = |q: Quadrant| {
        quadrant_value_from_delta(x, axis, q).unwrap_or_else(|| {
            empty.push(q);
            selectors(q).2
        })
    };
    let q_st = value(Quadrant::ST);
    let q_sbar_tbar = value(Quadrant::SbarTbar);
    let q_s_tbar = value(Quadrant::STbar);
    let q_sbar_t = value(Quadrant::SbarT);
    Ok(QsrRecord {
        axis_index: axis.axis_index,
        q_st,
        q_sbar_tbar,
        q_s_tbar,
        q_sbar_t,
        overall,
        delta: axis.delta,
        empty_quadrants: empty,
    })
}

/// One record per axis, using the residual snapshot stored for that axis.
pub fn qsr_report(dec: &Decomposition) -> Vec<QsrRecord> {
    dec.axes
        .iter()
        .zip(&dec.residuals)
        .map(|(axis, x)| qsr_quadrants(x, axis).expect("axis computed from this residual"))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    PreferTCA,
    PreferTLRA,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::PreferTCA => "PreferTCA",
            Verdict::PreferTLRA => "PreferTLRA",
            Verdict::Inconclusive => "Inconclusive",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recommendation {
    pub verdict: Verdict,
    /// Mean of `QSR_TLRA - QSR_TCA` over the compared axes, in percentage
    /// points; positive values favor TLRA.
    pub margin_pp: f64,
    pub axes_considered: usize,
}

/// Compares overall QSR on the leading axes. A method is preferred only if
/// it wins on every compared axis. Dispersions are never compared.
pub fn recommend_method(
    qsr_tca: &[QsrRecord],
    qsr_tlra: &[QsrRecord],
    axes_considered: usize,
) -> Result<Recommendation, QsrError> {
    if axes_considered == 0 || qsr_tca.len() < axes_considered || qsr_tlra.len() < axes_considered {
        return Err(QsrError::MismatchedAxes {
            needed: axes_considered,
            tca: qsr_tca.len(),
            tlra: qsr_tlra.len(),
        });
    }
    let diffs: Vec<f64> = qsr_tca
        .iter()
        .zip(qsr_tlra)
        .take(axes_considered)
        .map(|(tca, tlra)| 100.0 * (tlra.overall - tca.overall))
        .collect();
    let verdict = if diffs.iter().all(|&d| d > 0.0) {
        Verdict::PreferTLRA
    } else if diffs.iter().all(|&d| d < 0.0) {
        Verdict::PreferTCA
    } else {
        Verdict::Inconclusive
    };
    Ok(Recommendation {
        verdict,
        margin_pp: diffs.iter().sum::<f64>() / diffs.len() as f64,
        axes_considered,
    })
}
