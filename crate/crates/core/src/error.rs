//! Stationary monitor error ratio for a single process.
//!
//! The monitor keeps the last informative sample it received. For process j
//! the relevant state is the triple (x, y, z): true process state x, monitor
//! state y, and server phase z (idle, serving a packet informative for j, or
//! serving an uninformative one). The jump chain of that triple is observed
//! at arrivals to an idle server, departures and process clock ticks. Its
//! stationary law π, reweighted by the expected holding time of each state,
//! gives the long-run fraction of time spent with x ≠ y.
//!
//! States are enumerated lexicographically in (x, y, z) with z fastest:
//! `index = (x·K + y)·3 + z`, with x, y zero-based.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::linalg::{self, SolveError};
use crate::model::{informative_rate, ProcessModel, SystemConfig};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ErrorRatioError {
    #[error("process {process} is untracked (no informative packets), error ratio undefined")]
    Untracked { process: usize },
    #[error("service-interval transition matrix is singular")]
    SingularServiceMatrix,
    #[error("embedded chain solve failed: {0}")]
    Solver(#[from] SolveError),
}

/// Server phase as seen by one process.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum ServerPhase {
    Idle = 0,
    Informative = 1,
    Uninformative = 2,
}

impl ServerPhase {
    pub const ALL: [ServerPhase; 3] = [
        ServerPhase::Idle,
        ServerPhase::Informative,
        ServerPhase::Uninformative,
    ];

    pub fn index(self) -> usize {
        self as usize
    }
}

/// P_N: law of the process state at the end of one exponential service,
/// given the state at its start.
#[derive(Debug, Clone, PartialEq)]
pub struct ServiceTransitionMatrix(DMatrix<f64>);

impl ServiceTransitionMatrix {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }
}

/// P_N = μ/(μ+ζ) · (I − ζΩ/(μ+ζ))⁻¹.
///
/// The Neumann series of ζΩ/(μ+ζ) sums the Poisson-many clock ticks that
/// fall inside an Exp(μ) service.
pub fn service_transition_matrix(
    omega: &DMatrix<f64>,
    state_change_rate: f64,
    service_rate: f64,
) -> Result<ServiceTransitionMatrix, ErrorRatioError> {
    let k = omega.nrows();
    let (zeta, mu) = (state_change_rate, service_rate);
    let a = DMatrix::<f64>::identity(k, k) - omega * (zeta / (mu + zeta));
    let inv = a
        .try_inverse()
        .ok_or(ErrorRatioError::SingularServiceMatrix)?;
    Ok(ServiceTransitionMatrix(inv * (mu / (mu + zeta))))
}

/// The 3K²-state jump chain of (x, y, z) for one process.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddedChain {
    num_states: usize,
    transition: DMatrix<f64>,
    holding: Vec<f64>,
    stationary: Option<Vec<f64>>,
}

impl EmbeddedChain {
    /// K, the number of process states.
    pub fn process_states(&self) -> usize {
        self.num_states
    }

    /// 3K².
    pub fn len(&self) -> usize {
        3 * self.num_states * self.num_states
    }

    pub fn is_empty(&self) -> bool {
        self.num_states == 0
    }

    pub fn index(&self, x: usize, y: usize, z: ServerPhase) -> usize {
        (x * self.num_states + y) * 3 + z.index()
    }

    /// Inverse of [`EmbeddedChain::index`].
    pub fn state(&self, index: usize) -> (usize, usize, ServerPhase) {
        let z = ServerPhase::ALL[index % 3];
        let xy = index / 3;
        (xy / self.num_states, xy % self.num_states, z)
    }

    /// P_M.
    pub fn transition(&self) -> &DMatrix<f64> {
        &self.transition
    }

    /// E[T] per state: 1/(ζ+λ_C) when idle, 1/(ζ+μ) when busy.
    pub fn holding(&self) -> &[f64] {
        &self.holding
    }

    /// π, once solved.
    pub fn stationary(&self) -> Option<&[f64]> {
        self.stationary.as_deref()
    }

    pub fn dump(&self) -> ChainDump {
        ChainDump {
            states: (0..self.len())
                .map(|s| {
                    let (x, y, z) = self.state(s);
                    [x + 1, y + 1, z.index()]
                })
                .collect(),
            transition: self
                .transition
                .row_iter()
                .map(|r| r.iter().copied().collect())
                .collect(),
            holding: self.holding.clone(),
            stationary: self.stationary.clone(),
        }
    }
}

/// Serializable snapshot of a chain. States are `[x, y, z]` with x, y
/// one-based and z ∈ {0, 1, 2}.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainDump {
    pub states: Vec<[usize; 3]>,
    pub transition: Vec<Vec<f64>>,
    pub holding: Vec<f64>,
    pub stationary: Option<Vec<f64>>,
}

/// Error-ratio model of one process behind a server of rate μ.
///
/// Everything that does not depend on the correlation matrix (ψ, P_N) is
/// computed once, so the chain can be rebuilt cheaply for many (λ_C, λ*).
#[derive(Debug, Clone)]
pub struct ProcessErrorModel {
    process: ProcessModel,
    service_rate: f64,
    service_matrix: ServiceTransitionMatrix,
}

impl ProcessErrorModel {
    pub fn new(process: &ProcessModel, service_rate: f64) -> Result<Self, ErrorRatioError> {
        let service_matrix = service_transition_matrix(
            process.transition(),
            process.state_change_rate(),
            service_rate,
        )?;
        Ok(ProcessErrorModel {
            process: process.clone(),
            service_rate,
            service_matrix,
        })
    }

    pub fn service_matrix(&self) -> &ServiceTransitionMatrix {
        &self.service_matrix
    }

    /// Builds P_M and holding times (π left unsolved).
    pub fn chain(&self, total_rate: f64, informative_rate: f64) -> EmbeddedChain {
        let omega = self.process.transition();
        let psi = self.process.stationary();
        let pn = self.service_matrix.matrix();
        let k = self.process.num_states();
        let zeta = self.process.state_change_rate();
        let (lc, ls, mu) = (total_rate, informative_rate, self.service_rate);

        let idle_change = zeta / (zeta + lc);
        let busy_change = zeta / (zeta + mu);
        let departure = mu / (zeta + mu);

        let n = 3 * k * k;
        let idx = |x: usize, y: usize, z: ServerPhase| (x * k + y) * 3 + z.index();
        let mut p = DMatrix::<f64>::zeros(n, n);
        for x1 in 0..k {
            for y1 in 0..k {
                for x2 in 0..k {
                    let w = omega[(x1, x2)];
                    p[(
                        idx(x1, y1, ServerPhase::Idle),
                        idx(x2, y1, ServerPhase::Idle),
                    )] += w * idle_change;
                    p[(
                        idx(x1, y1, ServerPhase::Informative),
                        idx(x2, y1, ServerPhase::Informative),
                    )] += w * busy_change;
                    p[(
                        idx(x1, y1, ServerPhase::Uninformative),
                        idx(x2, y1, ServerPhase::Uninformative),
                    )] += w * busy_change;
                }
                let idle = idx(x1, y1, ServerPhase::Idle);
                p[(idle, idx(x1, y1, ServerPhase::Informative))] += ls / (zeta + lc);
                p[(idle, idx(x1, y1, ServerPhase::Uninformative))] += (lc - ls) / (zeta + lc);
                p[(idx(x1, y1, ServerPhase::Uninformative), idle)] += departure;
                // The departing packet carries the state at its arrival;
                // invert P_N with Bayes under a ψ prior.
                let serving = idx(x1, y1, ServerPhase::Informative);
                for y2 in 0..k {
                    p[(serving, idx(x1, y2, ServerPhase::Idle))] +=
                        departure * pn[(y2, x1)] * psi[y2] / psi[x1];
                }
            }
        }

        let holding = (0..n)
            .map(|s| match s % 3 {
                0 => 1.0 / (zeta + lc),
                _ => 1.0 / (zeta + mu),
            })
            .collect();
        EmbeddedChain {
            num_states: k,
            transition: p,
            holding,
            stationary: None,
        }
    }

    /// ε for the given aggregate and informative rates.
    pub fn error_ratio(
        &self,
        total_rate: f64,
        informative_rate: f64,
    ) -> Result<ErrorResult, SolveError> {
        let mut chain = self.chain(total_rate, informative_rate);
        if self.process.state_change_rate() == 0.0 {
            // The process never moves, so the monitor is never wrong (and
            // the chain is reducible in x).
            return Ok(ErrorResult {
                epsilon: 0.0,
                chain,
            });
        }
        let pi = embedded_stationary(&chain)?;
        let epsilon = weighted_mismatch(&chain, &pi);
        chain.stationary = Some(pi);
        Ok(ErrorResult { epsilon, chain })
    }
}

/// P_M and holding times for process `j` (zero-based) of `config`.
pub fn build_embedded_chain(
    config: &SystemConfig,
    j: usize,
) -> Result<EmbeddedChain, ErrorRatioError> {
    let model = ProcessErrorModel::new(config.process(j), config.service_rate())?;
    Ok(model.chain(config.total_rate(), informative_rate(config, j)))
}

/// π with π P_M = π, Σ π = 1, by direct solve.
pub fn embedded_stationary(chain: &EmbeddedChain) -> Result<Vec<f64>, SolveError> {
    linalg::stationary_direct(chain.transition())
}

/// Holding-time-weighted share of states with x ≠ y.
pub fn weighted_mismatch(chain: &EmbeddedChain, pi: &[f64]) -> f64 {
    let mut mismatch = 0.0;
    let mut total = 0.0;
    for (s, (&p, &t)) in pi.iter().zip(chain.holding()).enumerate() {
        let w = p * t;
        total += w;
        let (x, y, _) = chain.state(s);
        if x != y {
            mismatch += w;
        }
    }
    (mismatch / total).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorResult {
    /// ε ∈ [0, 1].
    pub epsilon: f64,
    /// The chain the value came from, kept for diagnostics.
    pub chain: EmbeddedChain,
}

/// ε_j for process `j` (zero-based). Fails for untracked processes.
pub fn error_ratio(config: &SystemConfig, j: usize) -> Result<ErrorResult, ErrorRatioError> {
    let ls = informative_rate(config, j);
    if ls <= 0.0 {
        return Err(ErrorRatioError::Untracked { process: j });
    }
    let model = ProcessErrorModel::new(config.process(j), config.service_rate())?;
    Ok(model.error_ratio(config.total_rate(), ls)?)
}
