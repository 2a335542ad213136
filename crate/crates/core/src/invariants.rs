//! Structural checks on a finished decomposition.
//!
//! Every axis of a taxicab SVD satisfies a set of exact identities: the
//! transition formulas are a fixed point, the dispersion has several
//! equal representations, scores are centered and balanced, each residual
//! splits into four quadrants of mass `±δ/4`, and later scores are
//! orthogonal to earlier sign vectors. [`check_decomposition`] evaluates
//! them all and names every violation.

use std::fmt;

use crate::model::{scaled_tolerance, AxisResult, Decomposition, ResidualMatrix};
use crate::qsr::{qsr_quadrants, quadrant_mass};

/// Relative tolerance for dispersion identities.
pub const IDENTITY_RTOL: f64 = 1e-10;
/// Relative tolerance (to `δ_α`) for conjugacy.
pub const CONJUGACY_RTOL: f64 = 1e-8;
/// Absolute tolerance for reconstruction of `X_1`.
pub const RECONSTRUCTION_TOL: f64 = 1e-8;
/// Tolerance on `QSR_k = 1` and on the unit-quadrant biconditional.
pub const QSR_UNIT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub check: &'static str,
    pub axis: Option<usize>,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.axis {
            Some(a) => write!(f, "[{}] axis {}: {}", self.check, a, self.detail),
            None => write!(f, "[{}] {}", self.check, self.detail),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct InvariantReport {
    pub checks_run: usize,
    pub violations: Vec<Violation>,
}

impl InvariantReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    fn check(&mut self, ok: bool, check: &'static str, axis: Option<usize>, detail: impl FnOnce() -> String) {
        self.checks_run += 1;
        if !ok {
            self.violations.push(Violation {
                check,
                axis,
                detail: detail(),
            });
        }
    }
}

fn near(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

/// Identities that involve only one axis and the residual it came from.
pub fn check_axis(x: &ResidualMatrix, axis: &AxisResult, report: &mut InvariantReport) {
    let k = Some(axis.axis_index);
    let delta = axis.delta;
    let tol = IDENTITY_RTOL * delta.max(f64::MIN_POSITIVE);
    let a_l1: f64 = axis.a.iter().map(|v| v.abs()).sum();
    let b_l1: f64 = axis.b.iter().map(|v| v.abs()).sum();
    let av: f64 = axis.a.iter().zip(axis.v.as_slice()).map(|(a, &s)| a * f64::from(s)).sum();
    let bu: f64 = axis.b.iter().zip(axis.u.as_slice()).map(|(b, &s)| b * f64::from(s)).sum();

    let centered_tol = scaled_tolerance(x.matrix().amax());
    report.check(x.max_margin_sum() <= centered_tol, "double-centered", k, || {
        format!("largest margin sum {:e}", x.max_margin_sum())
    });

    report.check(
        near(a_l1, delta, tol) && near(b_l1, delta, tol) && near(av, delta, tol) && near(bu, delta, tol),
        "dispersion-identities",
        k,
        || format!("delta {delta}, |a| {a_l1}, |b| {b_l1}, a'v {av}, b'u {bu}"),
    );

    // Recompute a = X u and b = X' v from the residual.
    let m = x.matrix();
    let mut max_dev = 0.0f64;
    for i in 0..x.nrows() {
        let ai: f64 = (0..x.ncols()).map(|j| m[(i, j)] * f64::from(axis.u.get(j))).sum();
        max_dev = max_dev.max((ai - axis.a[i]).abs());
    }
    for j in 0..x.ncols() {
        let bj: f64 = (0..x.nrows()).map(|i| m[(i, j)] * f64::from(axis.v.get(i))).sum();
        max_dev = max_dev.max((bj - axis.b[j]).abs());
    }
    report.check(max_dev <= tol, "transition-scores", k, || {
        format!("scores deviate from X u / X' v by {max_dev:e}")
    });

    // Signs must agree wherever the score is not numerically zero.
    let sign_ok = |scores: &[f64], signs: &[i8]| {
        scores
            .iter()
            .zip(signs)
            .all(|(&s, &g)| s.abs() <= tol || (s > 0.0) == (g > 0))
    };
    report.check(
        sign_ok(&axis.a, axis.v.as_slice()) && sign_ok(&axis.b, axis.u.as_slice()),
        "transition-signs",
        k,
        || format!("v = {}, u = {} do not match the score signs", axis.v, axis.u),
    );

    let sum_a: f64 = axis.a.iter().sum();
    let sum_b: f64 = axis.b.iter().sum();
    report.check(near(sum_a, 0.0, tol) && near(sum_b, 0.0, tol), "scores-centered", k, || {
        format!("sum a = {sum_a:e}, sum b = {sum_b:e}")
    });

    let half = |scores: &[f64], signs: &[i8], positive: bool| -> f64 {
        scores
            .iter()
            .zip(signs)
            .filter(|(_, &g)| (g > 0) == positive)
            .map(|(s, _)| s)
            .sum()
    };
    let halves = [
        half(&axis.a, axis.v.as_slice(), true),
        -half(&axis.a, axis.v.as_slice(), false),
        half(&axis.b, axis.u.as_slice(), true),
        -half(&axis.b, axis.u.as_slice(), false),
    ];
    report.check(halves.iter().all(|&h| near(h, delta / 2.0, tol)), "balanced-halves", k, || {
        format!("half sums {halves:?} vs delta/2 = {}", delta / 2.0)
    });

    let quadrant_tol = IDENTITY_RTOL * delta.max(x.abs_sum());
    let quarters = [
        quadrant_mass(x, axis, 1, 1).signed,
        quadrant_mass(x, axis, -1, -1).signed,
        -quadrant_mass(x, axis, 1, -1).signed,
        -quadrant_mass(x, axis, -1, 1).signed,
    ];
    report.check(
        quarters.iter().all(|&q| near(q, delta / 4.0, quadrant_tol)),
        "balanced-quadrants",
        k,
        || format!("quadrant sums {quarters:?} vs delta/4 = {}", delta / 4.0),
    );

    if let Ok(rec) = qsr_quadrants(x, axis) {
        let unit_overall = near(rec.overall, 1.0, QSR_UNIT_TOL);
        let unit_quadrants = rec.all_quadrants_unit(QSR_UNIT_TOL);
        report.check(unit_overall == unit_quadrants, "qsr-unit-biconditional", k, || {
            format!("overall {} but quadrants {:?}", rec.overall, rec.layout())
        });
    }
}

/// Runs every per-axis and cross-axis check on `dec`.
pub fn check_decomposition(dec: &Decomposition) -> InvariantReport {
    let mut report = InvariantReport::default();
    report.check(
        dec.axes.len() <= dec.rank_bound && dec.residuals.len() == dec.axes.len(),
        "axis-count",
        None,
        || format!("{} axes, {} residuals, rank bound {}", dec.axes.len(), dec.residuals.len(), dec.rank_bound),
    );
    for (x, axis) in dec.residuals.iter().zip(&dec.axes) {
        check_axis(x, axis, &mut report);
    }

    // Later scores are orthogonal to earlier sign vectors.
    for (alpha, earlier) in dec.axes.iter().enumerate() {
        let tol = CONJUGACY_RTOL * earlier.delta;
        for later in &dec.axes[alpha + 1..] {
            let av: f64 = later.a.iter().zip(earlier.v.as_slice()).map(|(a, &s)| a * f64::from(s)).sum();
            let bu: f64 = later.b.iter().zip(earlier.u.as_slice()).map(|(b, &s)| b * f64::from(s)).sum();
            report.check(
                av.abs() <= tol && bu.abs() <= tol,
                "conjugacy",
                Some(later.axis_index),
                || format!("against axis {}: a'v = {av:e}, b'u = {bu:e}", earlier.axis_index),
            );
        }
    }

    if dec.complete && !dec.axes.is_empty() {
        let err = (dec.reconstruction() - dec.centered.matrix()).amax();
        report.check(err <= RECONSTRUCTION_TOL, "reconstruction", None, || {
            format!("max |X_1 - sum a b'/delta| = {err:e}")
        });
        let last = dec.axes.last().expect("non-empty");
        let x = dec.residuals.last().expect("non-empty");
        if let Ok(rec) = qsr_quadrants(x, last) {
            report.check(near(rec.overall, 1.0, QSR_UNIT_TOL), "qsr-last-axis", Some(last.axis_index), || {
                format!("QSR_k = {}", rec.overall)
            });
        }
    }
    report
}
