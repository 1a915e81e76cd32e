//! Small dense helpers shared by the process and embedded-chain solvers.

use nalgebra::{DMatrix, DVector};

/// Chains larger than this go through power iteration instead of LU.
pub(crate) const DIRECT_SOLVE_LIMIT: usize = 200;

const POWER_TOLERANCE: f64 = 1e-14;
const POWER_MAX_ITERS: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SolveError {
    #[error("stationary system is singular")]
    Singular,
    #[error("power iteration did not converge after {0} iterations")]
    NotConverged(usize),
}

/// Stationary row vector of a row-stochastic matrix.
///
/// Solves `(Pᵀ − I) πᵀ = 0` with the last balance equation replaced by
/// `Σ π = 1`.
pub(crate) fn stationary_direct(p: &DMatrix<f64>) -> Result<Vec<f64>, SolveError> {
    let n = p.nrows();
    let mut a = p.transpose() - DMatrix::<f64>::identity(n, n);
    a.row_mut(n - 1).fill(1.0);
    let mut b = DVector::<f64>::zeros(n);
    b[n - 1] = 1.0;
    let x = a.lu().solve(&b).ok_or(SolveError::Singular)?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(SolveError::Singular);
    }
    Ok(x.iter().copied().collect())
}

/// Power iteration on the lazy chain `(P + I)/2`, which shares the
/// stationary vector of `P` and converges for any irreducible `P`.
pub(crate) fn stationary_power(p: &DMatrix<f64>) -> Result<Vec<f64>, SolveError> {
    let n = p.nrows();
    let pt = p.transpose();
    let mut v = DVector::<f64>::from_element(n, 1.0 / n as f64);
    for _ in 0..POWER_MAX_ITERS {
        let next = (&pt * &v + &v) * 0.5;
        let delta = (&next - &v).amax();
        v = next;
        if delta < POWER_TOLERANCE {
            let s = v.sum();
            return Ok(v.iter().map(|x| x / s).collect());
        }
    }
    Err(SolveError::NotConverged(POWER_MAX_ITERS))
}

pub(crate) fn stationary(p: &DMatrix<f64>) -> Result<Vec<f64>, SolveError> {
    if p.nrows() > DIRECT_SOLVE_LIMIT {
        stationary_power(p)
    } else {
        stationary_direct(p)
    }
}
