//! Sensing-probability allocation.
//!
//! Minimizes f(P_C) = Σ_j λ_C / λ*_j = Σ_j 1/p̃_j, which orders allocations
//! exactly as the sum of average ages does, under one per-sensor constraint
//! h_i(row_i) ≤ 0 from one of three families:
//!
//! | family             | h_i                              |
//! |--------------------|----------------------------------|
//! | `Linear`           | Σ_j p_ij − b_i                   |
//! | `QuadraticConvex`  | Σ_j p_ij² − b_i                  |
//! | `QuadraticConcave` | b_i − Σ_j (1 − p_ij)²            |
//!
//! The objective is strictly decreasing in every entry, so at an optimum
//! each sensor either reports every process (row of ones) or sits on its
//! constraint boundary. The grid search only walks that boundary: M − 1
//! coordinates per row are gridded and the last one is solved for.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::ProcessErrorModel;
use crate::model::SystemConfig;
use crate::Extended;

/// Feasibility tolerance for box and sensing constraints.
pub const FEASIBILITY_TOLERANCE: f64 = 1e-9;

/// Default grid resolution per probability coordinate.
pub const DEFAULT_STEP: f64 = 1e-3;

/// Upper bound on enumerated boundary points.
pub const DEFAULT_MAX_GRID_POINTS: u64 = 1_100_000_000;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OptError {
    #[error("budget b[{sensor}] = {value} must be positive")]
    InvalidBudget { sensor: usize, value: f64 },
    #[error("{what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("sensor {sensor} has an empty feasible set")]
    Infeasible { sensor: usize },
    #[error("grid of {points} boundary points exceeds the limit of {limit}")]
    Intractable { points: u128, limit: u64 },
    #[error("grid step {0} must lie in (0, 1] and divide 1")]
    InvalidStep(f64),
    #[error("no feasible grid point keeps every process tracked")]
    NoFiniteCandidate,
    #[error("no closed form for the {0:?} family")]
    NoClosedForm(ConstraintKind),
    #[error("sensor rate {sensor} = {value} must be positive")]
    InvalidRate { sensor: usize, value: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum ConstraintKind {
    Linear,
    QuadraticConvex,
    QuadraticConcave,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstraintFamily {
    kind: ConstraintKind,
    budgets: Vec<f64>,
}

impl ConstraintFamily {
    pub fn new(kind: ConstraintKind, budgets: Vec<f64>) -> Result<Self, OptError> {
        if let Some((sensor, &value)) = budgets
            .iter()
            .enumerate()
            .find(|(_, &b)| !(b.is_finite() && b > 0.0))
        {
            return Err(OptError::InvalidBudget { sensor, value });
        }
        Ok(ConstraintFamily { kind, budgets })
    }

    pub fn kind(&self) -> ConstraintKind {
        self.kind
    }

    pub fn budgets(&self) -> &[f64] {
        &self.budgets
    }

    /// h_i evaluated on one row.
    pub fn value(&self, i: usize, row: &[f64]) -> f64 {
        let b = self.budgets[i];
        match self.kind {
            ConstraintKind::Linear => row.iter().sum::<f64>() - b,
            ConstraintKind::QuadraticConvex => row.iter().map(|p| p * p).sum::<f64>() - b,
            ConstraintKind::QuadraticConcave => {
                b - row.iter().map(|p| (1.0 - p) * (1.0 - p)).sum::<f64>()
            }
        }
    }

    /// ∂h_i/∂p_ij.
    pub fn gradient(&self, p: f64) -> f64 {
        match self.kind {
            ConstraintKind::Linear => 1.0,
            ConstraintKind::QuadraticConvex => 2.0 * p,
            ConstraintKind::QuadraticConcave => 2.0 * (1.0 - p),
        }
    }

    fn ones_feasible(&self, i: usize, m: usize) -> bool {
        self.value(i, &vec![1.0; m]) <= FEASIBILITY_TOLERANCE
    }

    /// Solves h_i = 0 for the last coordinate given the others.
    fn complete_row(&self, i: usize, free: &[f64]) -> Option<f64> {
        let b = self.budgets[i];
        let tol = 1e-12;
        let last = match self.kind {
            ConstraintKind::Linear => b - free.iter().sum::<f64>(),
            ConstraintKind::QuadraticConvex => {
                let r = b - free.iter().map(|p| p * p).sum::<f64>();
                if r < -tol {
                    return None;
                }
                r.max(0.0).sqrt()
            }
            ConstraintKind::QuadraticConcave => {
                let r = b - free.iter().map(|p| (1.0 - p) * (1.0 - p)).sum::<f64>();
                if !(-tol..=1.0 + tol).contains(&r) {
                    return None;
                }
                1.0 - r.clamp(0.0, 1.0).sqrt()
            }
        };
        (-tol..=1.0 + tol)
            .contains(&last)
            .then(|| last.clamp(0.0, 1.0))
    }

    /// The KKT point that splits each sensor's ability equally.
    pub fn equal_split(&self, m: usize) -> Result<DMatrix<f64>, OptError> {
        let mut out = DMatrix::zeros(self.budgets.len(), m);
        for i in 0..self.budgets.len() {
            let row = equal_split_row(self, i, m).ok_or(OptError::Infeasible { sensor: i })?;
            out.row_mut(i).fill(row[0]);
        }
        Ok(out)
    }
}

/// h_i(P_C); feasible rows have h_i ≤ 0.
pub fn constraint_eval(family: &ConstraintFamily, pc: &DMatrix<f64>, i: usize) -> f64 {
    let row: Vec<f64> = pc.row(i).iter().copied().collect();
    family.value(i, &row)
}

/// f(P_C) = Σ_j λ_C / Σ_i p_ij λ_i.
pub fn objective(pc: &DMatrix<f64>, rates: &[f64]) -> Extended {
    let total: f64 = rates.iter().sum();
    (0..pc.ncols())
        .map(|j| {
            let informative: f64 = rates
                .iter()
                .zip(pc.column(j).iter())
                .map(|(l, p)| l * p)
                .sum();
            if informative > 0.0 {
                Extended::Finite(total / informative)
            } else {
                Extended::Infinite
            }
        })
        .sum()
}

/// Checks the box and every sensing constraint.
pub fn is_feasible(family: &ConstraintFamily, pc: &DMatrix<f64>) -> bool {
    let tol = FEASIBILITY_TOLERANCE;
    pc.iter().all(|&p| (-tol..=1.0 + tol).contains(&p))
        && (0..pc.nrows()).all(|i| constraint_eval(family, pc, i) <= tol)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Method {
    ClosedForm,
    GridSearch,
}

/// Multipliers and residuals for the KKT system
/// `τ_ij − v_ij + ∂f/∂p_ij + ξ_i ∂h_i/∂p_ij = 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KktCertificate {
    /// Multipliers of p_ij ≤ 1.
    pub tau: Vec<Vec<f64>>,
    /// Multipliers of p_ij ≥ 0.
    pub v: Vec<Vec<f64>>,
    /// Multipliers of h_i ≤ 0.
    pub xi: Vec<f64>,
    pub stationarity_residual: f64,
    pub complementarity_residual: f64,
    pub feasible: bool,
}

impl KktCertificate {
    pub fn is_valid(&self, tolerance: f64) -> bool {
        self.feasible
            && self.stationarity_residual <= tolerance
            && self.complementarity_residual <= tolerance
    }
}

/// Best nonnegative multipliers for `pc`, with active sets taken from
/// complementary slackness: τ_ij only where p_ij = 1, v_ij only where
/// p_ij = 0 and ξ_i only where h_i is tight. ξ_i minimizes the squared
/// stationarity residual of row i, found exactly by walking the breakpoints
/// of that piecewise-quadratic function.
pub fn kkt_residuals(
    pc: &DMatrix<f64>,
    rates: &[f64],
    family: &ConstraintFamily,
) -> KktCertificate {
    let (n, m) = pc.shape();
    let tol = FEASIBILITY_TOLERANCE;
    let total: f64 = rates.iter().sum();
    let informative: Vec<f64> = (0..m)
        .map(|j| {
            rates
                .iter()
                .zip(pc.column(j).iter())
                .map(|(l, p)| l * p)
                .sum()
        })
        .collect();

    let mut tau = vec![vec![0.0; m]; n];
    let mut v = vec![vec![0.0; m]; n];
    let mut xi = vec![0.0; n];
    let mut stationarity: f64 = 0.0;
    let mut complementarity: f64 = 0.0;

    for i in 0..n {
        let row: Vec<f64> = pc.row(i).iter().copied().collect();
        let h = family.value(i, &row);
        let tight = h.abs() <= tol;
        let terms: Vec<RowTerm> = (0..m)
            .map(|j| RowTerm {
                grad_f: -total * rates[i] / (informative[j] * informative[j]),
                grad_h: family.gradient(row[j]),
                bound: if row[j] >= 1.0 - tol {
                    Bound::Upper
                } else if row[j] <= tol {
                    Bound::Lower
                } else {
                    Bound::Interior
                },
            })
            .collect();
        let x = if tight { best_xi(&terms) } else { 0.0 };
        xi[i] = x;
        for (j, t) in terms.iter().enumerate() {
            let s = t.grad_f + x * t.grad_h;
            let r = t.residual(s);
            match t.bound {
                Bound::Upper => tau[i][j] = (-s).max(0.0),
                Bound::Lower => v[i][j] = s.max(0.0),
                Bound::Interior => {}
            }
            stationarity = stationarity.max(if r.is_nan() { f64::INFINITY } else { r.abs() });
            complementarity = complementarity
                .max(((row[j] - 1.0) * tau[i][j]).abs())
                .max((row[j] * v[i][j]).abs());
        }
        complementarity = complementarity.max((h * x).abs());
    }

    KktCertificate {
        tau,
        v,
        xi,
        stationarity_residual: stationarity,
        complementarity_residual: complementarity,
        feasible: is_feasible(family, pc),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Bound {
    Lower,
    Interior,
    Upper,
}

#[derive(Debug, Clone, Copy)]
struct RowTerm {
    grad_f: f64,
    grad_h: f64,
    bound: Bound,
}

impl RowTerm {
    /// Stationarity residual left after the bound multiplier absorbs what
    /// its sign allows.
    fn residual(&self, s: f64) -> f64 {
        match self.bound {
            Bound::Interior => s,
            Bound::Upper => s.max(0.0),
            Bound::Lower => s.min(0.0),
        }
    }
}

fn best_xi(terms: &[RowTerm]) -> f64 {
    let phi = |x: f64| -> f64 {
        terms
            .iter()
            .map(|t| t.residual(t.grad_f + x * t.grad_h).powi(2))
            .sum()
    };
    let mut knots: Vec<f64> = terms
        .iter()
        .filter(|t| t.grad_h != 0.0)
        .map(|t| -t.grad_f / t.grad_h)
        .filter(|x| x.is_finite() && *x > 0.0)
        .collect();
    knots.push(0.0);
    knots.sort_by(f64::total_cmp);
    knots.dedup();

    let mut candidates = knots.clone();
    // Inside each segment (and past the last knot) the set of active terms is
    // fixed, so Φ is a quadratic with a closed-form minimizer.
    let mut bounds = knots.clone();
    bounds.push(f64::INFINITY);
    for w in bounds.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let probe = if hi.is_finite() {
            0.5 * (lo + hi)
        } else {
            lo + 1.0
        };
        let (mut num, mut den) = (0.0, 0.0);
        for t in terms {
            if t.residual(t.grad_f + probe * t.grad_h) != 0.0 {
                num += t.grad_f * t.grad_h;
                den += t.grad_h * t.grad_h;
            }
        }
        if den > 0.0 {
            let x = (-num / den).clamp(lo, hi);
            if x.is_finite() {
                candidates.push(x);
            }
        }
    }
    candidates
        .into_iter()
        .min_by(|a, b| phi(*a).total_cmp(&phi(*b)).then(a.total_cmp(b)))
        .unwrap_or(0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AllocationResult {
    #[serde(serialize_with = "serialize_rows")]
    pub allocation: DMatrix<f64>,
    pub objective: Extended,
    /// Present for closed-form solutions only.
    pub kkt: Option<KktCertificate>,
    pub method: Method,
    pub grid_step: Option<f64>,
}

fn serialize_rows<S: serde::Serializer>(m: &DMatrix<f64>, s: S) -> Result<S::Ok, S::Error> {
    let rows: Vec<Vec<f64>> = m.row_iter().map(|r| r.iter().copied().collect()).collect();
    rows.serialize(s)
}

fn check_rates(rates: &[f64], family: &ConstraintFamily) -> Result<(), OptError> {
    if rates.len() != family.budgets.len() {
        return Err(OptError::DimensionMismatch {
            what: "budgets",
            expected: rates.len(),
            found: family.budgets.len(),
        });
    }
    if let Some((sensor, &value)) = rates
        .iter()
        .enumerate()
        .find(|(_, &l)| !(l.is_finite() && l > 0.0))
    {
        return Err(OptError::InvalidRate { sensor, value });
    }
    Ok(())
}

/// Equal-split optimum for the two convex families: p*_ij = min(M, b_i)/M
/// (linear) or √(min(M, b_i)/M) (quadratic convex).
pub fn solve_closed_form(
    family: &ConstraintFamily,
    rates: &[f64],
    num_processes: usize,
) -> Result<AllocationResult, OptError> {
    check_rates(rates, family)?;
    if family.kind == ConstraintKind::QuadraticConcave {
        return Err(OptError::NoClosedForm(family.kind));
    }
    let allocation = family.equal_split(num_processes)?;
    let kkt = kkt_residuals(&allocation, rates, family);
    Ok(AllocationResult {
        objective: objective(&allocation, rates),
        allocation,
        kkt: Some(kkt),
        method: Method::ClosedForm,
        grid_step: None,
    })
}

/// Objective evaluated by [`solve_grid_with`] on a row-major N×M allocation.
pub trait AllocationObjective: Sync {
    fn evaluate(&self, allocation: &[f64], num_processes: usize) -> Extended;

    /// Whether permuting the columns of an allocation leaves the objective
    /// unchanged. Enables column canonicalization of the argmin.
    fn column_symmetric(&self) -> bool {
        false
    }
}

/// Σ_j 1/p̃_j.
#[derive(Debug, Clone)]
pub struct AgeObjective {
    rates: Vec<f64>,
    total: f64,
}

impl AgeObjective {
    pub fn new(rates: &[f64]) -> Self {
        AgeObjective {
            rates: rates.to_vec(),
            total: rates.iter().sum(),
        }
    }
}

impl AllocationObjective for AgeObjective {
    fn evaluate(&self, allocation: &[f64], m: usize) -> Extended {
        let mut f = 0.0;
        for j in 0..m {
            let mut informative = 0.0;
            for (i, l) in self.rates.iter().enumerate() {
                informative += l * allocation[i * m + j];
            }
            if informative <= 0.0 {
                return Extended::Infinite;
            }
            f += self.total / informative;
        }
        Extended::Finite(f)
    }

    fn column_symmetric(&self) -> bool {
        true
    }
}

/// Σ_j ε_j for the processes and service rate of a configuration.
#[derive(Debug, Clone)]
pub struct ErrorSumObjective {
    rates: Vec<f64>,
    total: f64,
    models: Vec<ProcessErrorModel>,
    symmetric: bool,
}

impl ErrorSumObjective {
    pub fn new(config: &SystemConfig) -> Result<Self, crate::error::ErrorRatioError> {
        let models = config
            .processes()
            .iter()
            .map(|p| ProcessErrorModel::new(p, config.service_rate()))
            .collect::<Result<Vec<_>, _>>()?;
        let symmetric = config.processes().windows(2).all(|w| w[0] == w[1]);
        Ok(ErrorSumObjective {
            rates: config.sensor_rates().to_vec(),
            total: config.total_rate(),
            models,
            symmetric,
        })
    }
}

impl AllocationObjective for ErrorSumObjective {
    fn evaluate(&self, allocation: &[f64], m: usize) -> Extended {
        let mut sum = 0.0;
        for (j, model) in self.models.iter().enumerate().take(m) {
            let informative: f64 = self
                .rates
                .iter()
                .enumerate()
                .map(|(i, l)| l * allocation[i * m + j])
                .sum();
            if informative <= 0.0 {
                return Extended::Infinite;
            }
            match model.error_ratio(self.total, informative) {
                Ok(r) => sum += r.epsilon,
                Err(_) => return Extended::Infinite,
            }
        }
        Extended::Finite(sum)
    }

    fn column_symmetric(&self) -> bool {
        self.symmetric
    }
}

fn grid_divisions(step: f64) -> Result<usize, OptError> {
    if !(step > 0.0 && step <= 1.0) {
        return Err(OptError::InvalidStep(step));
    }
    let n = (1.0 / step).round();
    if ((1.0 / step) - n).abs() > 1e-6 * n {
        return Err(OptError::InvalidStep(step));
    }
    Ok(n as usize)
}

/// The equal-split row of sensor `i`, when it is feasible.
fn equal_split_row(family: &ConstraintFamily, i: usize, m: usize) -> Option<Vec<f64>> {
    let b = family.budgets[i];
    let share = b.min(m as f64) / m as f64;
    let p = match family.kind {
        ConstraintKind::Linear => share,
        ConstraintKind::QuadraticConvex => share.sqrt(),
        ConstraintKind::QuadraticConcave => 1.0 - share.sqrt(),
    };
    let row = vec![p; m];
    (family.value(i, &row) <= FEASIBILITY_TOLERANCE).then_some(row)
}

/// Feasible boundary rows for sensor `i`: the gridded boundary plus the
/// equal-split row, so the search never does worse than equal split.
fn boundary_rows(family: &ConstraintFamily, i: usize, m: usize, divisions: usize) -> Vec<Vec<f64>> {
    if family.kind != ConstraintKind::QuadraticConcave && family.ones_feasible(i, m) {
        return vec![vec![1.0; m]];
    }
    let mut rows = gridded_boundary_rows(family, i, m, divisions);
    if let Some(row) = equal_split_row(family, i, m) {
        if !rows.contains(&row) {
            rows.push(row);
        }
    }
    rows
}

fn gridded_boundary_rows(
    family: &ConstraintFamily,
    i: usize,
    m: usize,
    divisions: usize,
) -> Vec<Vec<f64>> {
    let free = m - 1;
    let mut rows = Vec::new();
    let mut digits = vec![0usize; free];
    let mut coords = vec![0.0; free];
    loop {
        for (c, &d) in coords.iter_mut().zip(&digits) {
            *c = d as f64 / divisions as f64;
        }
        if let Some(last) = family.complete_row(i, &coords) {
            let mut row = coords.clone();
            row.push(last);
            rows.push(row);
        }
        // odometer increment
        let mut pos = 0;
        loop {
            if pos == free {
                return rows;
            }
            digits[pos] += 1;
            if digits[pos] <= divisions {
                break;
            }
            digits[pos] = 0;
            pos += 1;
        }
    }
}

#[derive(Debug, Clone)]
struct Best {
    value: Extended,
    allocation: Vec<f64>,
}

/// Lower objective wins; exact ties go to the lexicographically larger
/// row-major allocation.
fn better(a: Option<Best>, b: Option<Best>) -> Option<Best> {
    match (a, b) {
        (None, x) | (x, None) => x,
        (Some(a), Some(b)) => match a.value.total_cmp(&b.value) {
            std::cmp::Ordering::Less => Some(a),
            std::cmp::Ordering::Greater => Some(b),
            std::cmp::Ordering::Equal => {
                if lex_cmp(&a.allocation, &b.allocation) == std::cmp::Ordering::Less {
                    Some(b)
                } else {
                    Some(a)
                }
            }
        },
    }
}

fn lex_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(std::cmp::Ordering::Equal)
}

/// Every permutation of `0..m`, via Heap's algorithm.
fn permutations(m: usize) -> Vec<Vec<usize>> {
    let mut perm: Vec<usize> = (0..m).collect();
    let mut out = vec![perm.clone()];
    let mut c = vec![0usize; m];
    let mut i = 0;
    while i < m {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            out.push(perm.clone());
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    out
}

/// Largest column permutation of a row-major allocation.
fn canonical_columns(allocation: &[f64], n: usize, m: usize) -> Vec<f64> {
    const MAX_CANONICAL_COLUMNS: usize = 8;
    if m > MAX_CANONICAL_COLUMNS {
        return allocation.to_vec();
    }
    permutations(m)
        .into_iter()
        .map(|perm| {
            (0..n * m)
                .map(|idx| allocation[(idx / m) * m + perm[idx % m]])
                .collect::<Vec<f64>>()
        })
        .max_by(|a, b| lex_cmp(a, b))
        .unwrap_or_else(|| allocation.to_vec())
}

/// Grid search of Σ_j 1/p̃_j at the given step.
pub fn solve_grid(
    family: &ConstraintFamily,
    rates: &[f64],
    num_processes: usize,
    step: f64,
) -> Result<AllocationResult, OptError> {
    solve_grid_with(
        family,
        rates,
        num_processes,
        step,
        &AgeObjective::new(rates),
        DEFAULT_MAX_GRID_POINTS,
    )
}

/// Exhaustive search over the constraint-boundary grid for any objective.
///
/// Infinite-objective points are skipped. When the objective is column
/// symmetric the winner is replaced by its lexicographically largest column
/// permutation, so symmetric optima are reported in a fixed orientation.
pub fn solve_grid_with<O: AllocationObjective>(
    family: &ConstraintFamily,
    rates: &[f64],
    num_processes: usize,
    step: f64,
    objective_fn: &O,
    max_points: u64,
) -> Result<AllocationResult, OptError> {
    check_rates(rates, family)?;
    let m = num_processes;
    if m == 0 {
        return Err(OptError::DimensionMismatch {
            what: "processes",
            expected: 1,
            found: 0,
        });
    }
    let divisions = grid_divisions(step)?;
    let n = rates.len();

    // Bound the work before enumerating anything.
    let per_row_bound = (divisions as u128 + 1).saturating_pow((m - 1) as u32);
    let bound = (0..n).fold(1u128, |acc, i| {
        let rows = if family.kind != ConstraintKind::QuadraticConcave && family.ones_feasible(i, m)
        {
            1
        } else {
            per_row_bound
        };
        acc.saturating_mul(rows)
    });
    if bound > max_points as u128 {
        return Err(OptError::Intractable {
            points: bound,
            limit: max_points,
        });
    }

    let candidates: Vec<Vec<Vec<f64>>> = (0..n)
        .map(|i| boundary_rows(family, i, m, divisions))
        .collect();
    if let Some(sensor) = candidates.iter().position(Vec::is_empty) {
        return Err(OptError::Infeasible { sensor });
    }

    let best = candidates[0]
        .par_iter()
        .map(|first| {
            let mut alloc = vec![0.0; n * m];
            alloc[..m].copy_from_slice(first);
            let mut digits = vec![0usize; n];
            for i in 1..n {
                alloc[i * m..(i + 1) * m].copy_from_slice(&candidates[i][0]);
            }
            let mut best: Option<Best> = None;
            loop {
                let value = objective_fn.evaluate(&alloc, m);
                if value.is_finite() {
                    best = better(
                        best,
                        Some(Best {
                            value,
                            allocation: alloc.clone(),
                        }),
                    );
                }
                let mut pos = 1;
                loop {
                    if pos >= n {
                        return best;
                    }
                    digits[pos] += 1;
                    if digits[pos] < candidates[pos].len() {
                        alloc[pos * m..(pos + 1) * m]
                            .copy_from_slice(&candidates[pos][digits[pos]]);
                        break;
                    }
                    digits[pos] = 0;
                    alloc[pos * m..(pos + 1) * m].copy_from_slice(&candidates[pos][0]);
                    pos += 1;
                }
            }
        })
        .reduce(|| None, better)
        .ok_or(OptError::NoFiniteCandidate)?;

    let allocation = if objective_fn.column_symmetric() {
        canonical_columns(&best.allocation, n, m)
    } else {
        best.allocation
    };
    let value = objective_fn.evaluate(&allocation, m);
    Ok(AllocationResult {
        allocation: DMatrix::from_row_slice(n, m, &allocation),
        objective: value,
        kkt: None,
        method: Method::GridSearch,
        grid_step: Some(step),
    })
}
