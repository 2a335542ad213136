//! Taxicab singular value decomposition.
//!
//! Each axis maximizes the L1 dispersion `‖X u‖₁` over sign vectors
//! `u ∈ {-1, +1}^J`. Three interchangeable searches are provided:
//!
//! * [`search_exhaustive`] enumerates every sign vector of the smaller side,
//! * [`search_crisscross`] iterates the transition formulas
//!   `a = X u, v = sign(a), b = X' v, u = sign(b)` to a fixed point,
//! * [`search_genetic`] evolves a population of sign vectors and polishes
//!   the winner with one criss-cross run.
//!
//! After an axis is found the rank-one term `a b' / δ` is removed by
//! [`deflate`] and the search restarts on the residual. [`decompose`]
//! chains the two.

use std::cmp::Ordering;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    AxisResult, Decomposition, Method, ModelError, ResidualMatrix, ResidualOrigin, SearchStrategy,
    SignVector,
};

/// Dispersion below this fraction of `Σ|X_1|` ends the decomposition.
pub const ZERO_DISPERSION_RTOL: f64 = 1e-12;

/// Default limit on the enumerated dimension for exhaustive search.
pub const DEFAULT_EXHAUSTIVE_CAP: usize = 25;

/// Relative gain below which a criss-cross step is treated as a tie.
const TIE_RTOL: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TsvdError {
    #[error("dimension mismatch: expected length {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("exhaustive search over {dim} signs exceeds the cap of {cap}")]
    DimensionTooLarge { dim: usize, cap: usize },
    #[error("dispersion {delta:e} is numerically zero; the decomposition is complete")]
    ZeroDispersion { delta: f64 },
    #[error("invalid search configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Which canonical directions seed the criss-cross iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CrissCrossStarts {
    /// One start per column `j`: `v⁰ = sign(X e_j)`.
    AllColumns,
    /// One start per row `i`: `u⁰ = sign(X' e_i)`.
    AllRows,
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneticConfig {
    pub population: usize,
    pub generations: usize,
    /// Per-gene flip probability, in `[0, 1)`.
    pub mutation_rate: f64,
    pub elitism: usize,
    pub tournament_size: usize,
    pub rng_seed: u64,
}

impl Default for GeneticConfig {
    fn default() -> Self {
        GeneticConfig {
            population: 50,
            generations: 200,
            mutation_rate: 0.05,
            elitism: 2,
            tournament_size: 3,
            rng_seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub strategy: SearchStrategy,
    pub max_axes: usize,
    pub exhaustive_cap: usize,
    /// `None` seeds from the canonical directions of the smaller side.
    pub crisscross_starts: Option<CrissCrossStarts>,
    pub crisscross_max_iter: usize,
    pub genetic: GeneticConfig,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            strategy: SearchStrategy::Exhaustive,
            max_axes: 2,
            exhaustive_cap: DEFAULT_EXHAUSTIVE_CAP,
            crisscross_starts: None,
            crisscross_max_iter: 100,
            genetic: GeneticConfig::default(),
        }
    }
}

impl SearchConfig {
    pub fn with_strategy(strategy: SearchStrategy) -> Self {
        SearchConfig {
            strategy,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<(), TsvdError> {
        let invalid = |msg: &str| Err(TsvdError::InvalidConfig(msg.to_string()));
        if self.max_axes == 0 {
            return invalid("max_axes must be at least 1");
        }
        if self.exhaustive_cap == 0 || self.exhaustive_cap > 40 {
            return invalid("exhaustive_cap must be in 1..=40");
        }
        if self.crisscross_max_iter == 0 {
            return invalid("crisscross_max_iter must be at least 1");
        }
        let g = &self.genetic;
        if g.population < 4 {
            return invalid("population must be at least 4");
        }
        if !(0.0..1.0).contains(&g.mutation_rate) {
            return invalid("mutation_rate must be in [0, 1)");
        }
        if g.elitism >= g.population {
            return invalid("elitism must be smaller than the population");
        }
        if g.tournament_size == 0 {
            return invalid("tournament_size must be at least 1");
        }
        Ok(())
    }
}

/// An axis together with search diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    pub axis: AxisResult,
    /// `false` only when every criss-cross run hit its iteration cap.
    pub converged: bool,
    /// Number of objective evaluations.
    pub evaluations: u64,
}

/// `‖X u‖₁ = Σ_i |Σ_j x_ij u_j|`.
pub fn dispersion_for(u: &SignVector, x: &ResidualMatrix) -> Result<f64, TsvdError> {
    if u.len() != x.ncols() {
        return Err(TsvdError::DimensionMismatch {
            expected: x.ncols(),
            found: u.len(),
        });
    }
    Ok(l1(&(x.matrix() * signs_to_vector(u))))
}

fn signs_to_vector(s: &SignVector) -> DVector<f64> {
    DVector::from_vec(s.to_f64())
}

fn l1(v: &DVector<f64>) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

/// Side of the matrix whose sign vectors are searched over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Side {
    Columns,
    Rows,
}

impl Side {
    fn smaller(x: &ResidualMatrix) -> Side {
        if x.ncols() <= x.nrows() {
            Side::Columns
        } else {
            Side::Rows
        }
    }
}

/// Row-major copy of the matrix whose columns are indexed by the searched side,
/// so that the objective is always `Σ_i |Σ_k m_ik s_k|`.
struct Objective {
    rows: usize,
    dim: usize,
    data: Vec<f64>,
}

impl Objective {
    fn new(x: &ResidualMatrix, side: Side) -> Self {
        let m = match side {
            Side::Columns => x.matrix().clone(),
            Side::Rows => x.matrix().transpose(),
        };
        let (rows, dim) = m.shape();
        let data = (0..rows)
            .flat_map(|i| (0..dim).map(move |k| (i, k)))
            .map(|(i, k)| m[(i, k)])
            .collect();
        Objective { rows, dim, data }
    }

    fn eval(&self, s: &[i8]) -> f64 {
        self.data
            .chunks_exact(self.dim)
            .map(|row| {
                row.iter()
                    .zip(s)
                    .map(|(m, &sk)| if sk > 0 { *m } else { -*m })
                    .sum::<f64>()
                    .abs()
            })
            .sum()
    }

    /// Objective of the candidate with index `code`: coordinate 0 is `+1`,
    /// coordinate `k ≥ 1` is `-1` iff bit `k - 1` of `code` is set.
    fn eval_code(&self, code: u64) -> f64 {
        let mut total = 0.0;
        for row in self.data.chunks_exact(self.dim) {
            let mut acc = row[0];
            for (k, m) in row.iter().enumerate().skip(1) {
                if code >> (k - 1) & 1 == 1 {
                    acc -= m;
                } else {
                    acc += m;
                }
            }
            total += acc.abs();
        }
        debug_assert_eq!(self.rows * self.dim, self.data.len());
        total
    }
}

fn decode(code: u64, dim: usize) -> Vec<i8> {
    (0..dim)
        .map(|k| if k > 0 && code >> (k - 1) & 1 == 1 { -1 } else { 1 })
        .collect()
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    value: f64,
    code: u64,
}

impl Candidate {
    /// Larger value wins; equal values resolve to the smaller code.
    fn better(self, other: Candidate) -> Candidate {
        match self.value.partial_cmp(&other.value) {
            Some(Ordering::Greater) => self,
            Some(Ordering::Less) => other,
            _ => {
                if self.code <= other.code {
                    self
                } else {
                    other
                }
            }
        }
    }
}

const CHUNK: u64 = 1 << 12;

/// Global maximizer of `‖X u‖₁` by complete enumeration of the smaller side.
///
/// The first coordinate is fixed to `+1` since `s` and `-s` tie. Candidates
/// are evaluated in parallel chunks and reduced with a total order on
/// `(value, code)`, so the answer does not depend on the chunking.
pub fn search_exhaustive(x: &ResidualMatrix, cap: usize) -> Result<SearchOutcome, TsvdError> {
    let side = Side::smaller(x);
    let objective = Objective::new(x, side);
    let dim = objective.dim;
    if dim > cap {
        return Err(TsvdError::DimensionTooLarge { dim, cap });
    }
    let count = 1u64 << (dim - 1);
    let chunks = count.div_ceil(CHUNK);
    let best = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let start = c * CHUNK;
            let end = (start + CHUNK).min(count);
            (start..end)
                .map(|code| Candidate {
                    value: objective.eval_code(code),
                    code,
                })
                .reduce(Candidate::better)
                .expect("non-empty chunk")
        })
        .reduce_with(Candidate::better)
        .expect("at least one candidate");

    let signs = SignVector::new(decode(best.code, dim))?;
    let (axis, converged, polish_evals) = finish_from_side(x, side, &signs, 100);
    Ok(SearchOutcome {
        axis,
        converged,
        evaluations: count + polish_evals,
    })
}

/// Trace of one criss-cross run.
#[derive(Debug, Clone, PartialEq)]
pub struct CrissCrossPath {
    /// Final column sign vector.
    pub u: SignVector,
    /// `‖X u_t‖₁` at every iterate.
    pub deltas: Vec<f64>,
    pub converged: bool,
}

/// Iterates the transition formulas from `u⁰` until `u` repeats or `max_iter`.
///
/// The dispersion is nondecreasing along the path; a step that changes `u`
/// without a relative gain above `1e-13` only reshuffles near-zero scores
/// and ends the run.
pub fn crisscross_path(
    x: &ResidualMatrix,
    start: &SignVector,
    max_iter: usize,
) -> Result<CrissCrossPath, TsvdError> {
    if start.len() != x.ncols() {
        return Err(TsvdError::DimensionMismatch {
            expected: x.ncols(),
            found: start.len(),
        });
    }
    let m = x.matrix();
    let mut u = start.clone();
    let mut deltas: Vec<f64> = Vec::new();
    for _ in 0..max_iter {
        let a = m * signs_to_vector(&u);
        let delta = l1(&a);
        if let Some(&prev) = deltas.last() {
            debug_assert!(
                delta >= prev - 1e-12 * prev.abs().max(1e-300),
                "criss-cross dispersion decreased: {prev} -> {delta}"
            );
            deltas.push(delta);
            if delta <= prev * (1.0 + TIE_RTOL) {
                return Ok(CrissCrossPath {
                    u,
                    deltas,
                    converged: true,
                });
            }
        } else {
            deltas.push(delta);
        }
        let v = SignVector::sign_of(a.as_slice());
        let b = m.tr_mul(&signs_to_vector(&v));
        let next = SignVector::sign_of(b.as_slice());
        if next == u {
            return Ok(CrissCrossPath {
                u,
                deltas,
                converged: true,
            });
        }
        u = next;
    }
    Ok(CrissCrossPath {
        u,
        deltas,
        converged: false,
    })
}

/// Builds the axis from a column sign vector, orienting it so that `v₁ = +1`.
fn axis_from_u(x: &ResidualMatrix, u: SignVector) -> AxisResult {
    let m = x.matrix();
    let a = m * signs_to_vector(&u);
    let v = SignVector::sign_of(a.as_slice());
    let b = m.tr_mul(&signs_to_vector(&v));
    let delta = l1(&a);
    let axis = AxisResult {
        axis_index: 1,
        u,
        v,
        a: a.iter().copied().collect(),
        b: b.iter().copied().collect(),
        delta,
    };
    if axis.v.get(0) < 0 {
        axis.flipped()
    } else {
        axis
    }
}

/// Converts a winning sign vector of `side` to a fixed-point axis.
fn finish_from_side(
    x: &ResidualMatrix,
    side: Side,
    signs: &SignVector,
    max_iter: usize,
) -> (AxisResult, bool, u64) {
    let u0 = match side {
        Side::Columns => signs.clone(),
        Side::Rows => {
            let b = x.matrix().tr_mul(&signs_to_vector(signs));
            SignVector::sign_of(b.as_slice())
        }
    };
    let path = crisscross_path(x, &u0, max_iter).expect("dimension checked");
    let evals = path.deltas.len() as u64;
    (axis_from_u(x, path.u), path.converged, evals)
}

fn crisscross_starts(x: &ResidualMatrix, starts: CrissCrossStarts) -> Vec<SignVector> {
    let m = x.matrix();
    let from_columns = || {
        (0..x.ncols()).map(move |j| {
            let v = SignVector::sign_of(m.column(j).as_slice());
            let b = m.tr_mul(&signs_to_vector(&v));
            SignVector::sign_of(b.as_slice())
        })
    };
    let from_rows = || {
        (0..x.nrows()).map(move |i| {
            let row: Vec<f64> = m.row(i).iter().copied().collect();
            SignVector::sign_of(&row)
        })
    };
    match starts {
        CrissCrossStarts::AllColumns => from_columns().collect(),
        CrissCrossStarts::AllRows => from_rows().collect(),
        CrissCrossStarts::Both => from_columns().chain(from_rows()).collect(),
    }
}

/// Best criss-cross fixed point over the configured starting directions.
pub fn search_crisscross(
    x: &ResidualMatrix,
    cfg: &SearchConfig,
) -> Result<SearchOutcome, TsvdError> {
    let starts = cfg.crisscross_starts.unwrap_or(match Side::smaller(x) {
        Side::Columns => CrissCrossStarts::AllColumns,
        Side::Rows => CrissCrossStarts::AllRows,
    });
    let mut best: Option<(f64, SignVector)> = None;
    let mut any_converged = false;
    let mut evaluations = 0u64;
    for start in crisscross_starts(x, starts) {
        let path = crisscross_path(x, &start, cfg.crisscross_max_iter)?;
        evaluations += path.deltas.len() as u64;
        any_converged |= path.converged;
        let delta = dispersion_for(&path.u, x)?;
        if best.as_ref().is_none_or(|(d, _)| delta > *d) {
            best = Some((delta, path.u));
        }
    }
    let (_, u) = best.expect("at least two starting directions");
    if !any_converged {
        log::warn!(
            "criss-cross hit {} iterations on every start; returning best so far",
            cfg.crisscross_max_iter
        );
    }
    Ok(SearchOutcome {
        axis: axis_from_u(x, u),
        converged: any_converged,
        evaluations,
    })
}

/// Number of genes per individual for `x` (the smaller dimension).
pub fn genome_len(x: &ResidualMatrix) -> usize {
    x.nrows().min(x.ncols())
}

/// Genetic search with a random initial population drawn from `rng_seed`.
pub fn search_genetic(x: &ResidualMatrix, cfg: &SearchConfig) -> Result<SearchOutcome, TsvdError> {
    let g = &cfg.genetic;
    let mut rng = ChaCha8Rng::seed_from_u64(g.rng_seed);
    let dim = genome_len(x);
    let population = (0..g.population)
        .map(|_| {
            (0..dim)
                .map(|_| if rng.gen_bool(0.5) { 1 } else { -1 })
                .collect::<Vec<i8>>()
        })
        .map(SignVector::new)
        .collect::<Result<Vec<_>, _>>()?;
    evolve(x, cfg, population, rng)
}

/// Genetic search from a caller-supplied population over the smaller side
/// (column signs when `J ≤ I`, row signs otherwise).
pub fn search_genetic_from(
    x: &ResidualMatrix,
    cfg: &SearchConfig,
    population: Vec<SignVector>,
) -> Result<SearchOutcome, TsvdError> {
    let rng = ChaCha8Rng::seed_from_u64(cfg.genetic.rng_seed);
    evolve(x, cfg, population, rng)
}

fn evolve(
    x: &ResidualMatrix,
    cfg: &SearchConfig,
    mut population: Vec<SignVector>,
    mut rng: ChaCha8Rng,
) -> Result<SearchOutcome, TsvdError> {
    cfg.validate()?;
    let g = &cfg.genetic;
    let side = Side::smaller(x);
    let objective = Objective::new(x, side);
    if population.is_empty() {
        return Err(TsvdError::InvalidConfig("empty population".into()));
    }
    if let Some(bad) = population.iter().find(|s| s.len() != objective.dim) {
        return Err(TsvdError::DimensionMismatch {
            expected: objective.dim,
            found: bad.len(),
        });
    }
    let size = population.len();
    let elitism = g.elitism.min(size);
    let mut evaluations = 0u64;

    let rank = |pop: &[SignVector]| -> Vec<(f64, SignVector)> {
        let mut scored: Vec<(f64, SignVector)> = pop
            .par_iter()
            .map(|s| (objective.eval(s.as_slice()), s.clone()))
            .collect();
        scored.sort_by(|(fa, sa), (fb, sb)| fb.total_cmp(fa).then_with(|| sa.cmp(sb)));
        scored
    };

    for _ in 0..g.generations {
        let scored = rank(&population);
        evaluations += size as u64;
        let mut next: Vec<SignVector> = scored.iter().take(elitism).map(|(_, s)| s.clone()).collect();
        while next.len() < size {
            let p1 = tournament(&scored, g.tournament_size, &mut rng);
            let p2 = tournament(&scored, g.tournament_size, &mut rng);
            let child: Vec<i8> = p1
                .as_slice()
                .iter()
                .zip(p2.as_slice())
                .map(|(&x1, &x2)| {
                    let gene = if rng.gen_bool(0.5) { x1 } else { x2 };
                    if g.mutation_rate > 0.0 && rng.gen_bool(g.mutation_rate) {
                        -gene
                    } else {
                        gene
                    }
                })
                .collect();
            next.push(SignVector::new(child)?);
        }
        population = next;
    }
    let scored = rank(&population);
    evaluations += size as u64;
    let winner = &scored[0].1;
    let (axis, converged, polish_evals) =
        finish_from_side(x, side, winner, cfg.crisscross_max_iter);
    Ok(SearchOutcome {
        axis,
        converged,
        evaluations: evaluations + polish_evals,
    })
}

fn tournament<'a>(scored: &'a [(f64, SignVector)], k: usize, rng: &mut ChaCha8Rng) -> &'a SignVector {
    // scored is sorted best-first, so the smallest drawn index wins.
    let best = (0..k).map(|_| rng.gen_range(0..scored.len())).min().expect("k >= 1");
    &scored[best].1
}

/// Runs the configured strategy on one residual matrix.
pub fn search(x: &ResidualMatrix, cfg: &SearchConfig) -> Result<SearchOutcome, TsvdError> {
    match cfg.strategy {
        SearchStrategy::Exhaustive => search_exhaustive(x, cfg.exhaustive_cap),
        SearchStrategy::CrissCross => search_crisscross(x, cfg),
        SearchStrategy::Genetic => search_genetic(x, cfg),
    }
}

/// `X_{α+1} = X_α - a b' / δ`.
pub fn deflate(x: &ResidualMatrix, axis: &AxisResult) -> Result<ResidualMatrix, TsvdError> {
    if axis.a.len() != x.nrows() || axis.b.len() != x.ncols() {
        return Err(TsvdError::DimensionMismatch {
            expected: x.nrows(),
            found: axis.a.len(),
        });
    }
    if !(axis.delta > ZERO_DISPERSION_RTOL * x.abs_sum()) {
        return Err(TsvdError::ZeroDispersion { delta: axis.delta });
    }
    let next = DMatrix::from_fn(x.nrows(), x.ncols(), |i, j| {
        x.get(i, j) - axis.a[i] * axis.b[j] / axis.delta
    });
    Ok(ResidualMatrix::new(
        next,
        ResidualOrigin::Deflated(axis.axis_index),
    )?)
}

/// Stepwise decomposition: search, deflate, repeat for
/// `min(max_axes, min(I-1, J-1))` axes or until the residual vanishes.
pub fn decompose(x: &ResidualMatrix, cfg: &SearchConfig) -> Result<Decomposition, TsvdError> {
    cfg.validate()?;
    let method = match x.origin() {
        ResidualOrigin::TcaCentered => Some(Method::Tca),
        ResidualOrigin::TlraCentered => Some(Method::Tlra),
        ResidualOrigin::Deflated(_) | ResidualOrigin::Supplied => None,
    };
    let rank_bound = x.rank_bound();
    let floor = ZERO_DISPERSION_RTOL * x.abs_sum();
    let mut axes = Vec::new();
    let mut residuals = Vec::new();
    let mut unconverged_axes = Vec::new();
    let mut current = x.clone();
    let mut exhausted = false;
    for index in 1..=cfg.max_axes.min(rank_bound) {
        if !(current.abs_sum() > floor) {
            exhausted = true;
            break;
        }
        let outcome = search(&current, cfg)?;
        let mut axis = outcome.axis;
        axis.axis_index = index;
        if !(axis.delta > floor) {
            exhausted = true;
            break;
        }
        if !outcome.converged {
            unconverged_axes.push(index);
        }
        let next = deflate(&current, &axis)?;
        residuals.push(std::mem::replace(&mut current, next));
        axes.push(axis);
    }
    let complete = exhausted || axes.len() == rank_bound;
    Ok(Decomposition {
        method,
        axes,
        centered: x.clone(),
        residuals,
        rank_bound,
        search: cfg.strategy,
        table_ref: None,
        complete,
        unconverged_axes,
    })
}
