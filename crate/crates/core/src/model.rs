//! System description: sensors, processes, the shared server and the
//! sensor-to-process correlation matrix.
//!
//! Every constructor validates, so a [`SystemConfig`] in hand is always
//! well formed. Indices in error messages are zero-based and follow the
//! layout of the JSON config file (`sensors[i].rate`, `correlation[i][j]`, ...).

use nalgebra::DMatrix;

use crate::linalg::{self, SolveError};

/// Tolerance on row sums of transition matrices.
pub const ROW_SUM_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("{field}: expected {expected}, found {found}")]
    DimensionMismatch {
        field: String,
        expected: String,
        found: String,
    },
    #[error("{field} = {value} is outside [0, 1]")]
    OutOfRange { field: String, value: f64 },
    #[error("{field}: row {row} sums to {sum}, expected 1")]
    NotRowStochastic { field: String, row: usize, sum: f64 },
    #[error(
        "{field}: chain is reducible (state {unreachable} not mutually reachable from state 0)"
    )]
    Reducible { field: String, unreachable: usize },
    #[error("{field}: chain is periodic")]
    Periodic { field: String },
    #[error("{field} = {value} must be positive")]
    NonPositiveRate { field: String, value: f64 },
    #[error("{field} = {value} must be nonnegative")]
    NegativeRate { field: String, value: f64 },
    #[error("{0}")]
    Empty(&'static str),
    #[error("{field}: {source}")]
    Solver {
        field: String,
        #[source]
        source: SolveError,
    },
}

/// Stationary distribution ψ of an irreducible aperiodic transition matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryDistribution(Vec<f64>);

impl StationaryDistribution {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// ⟨ψ, ψ⟩, the probability two independent ψ-draws coincide.
    pub fn self_overlap(&self) -> f64 {
        self.0.iter().map(|p| p * p).sum()
    }
}

impl std::ops::Index<usize> for StationaryDistribution {
    type Output = f64;

    fn index(&self, k: usize) -> &f64 {
        &self.0[k]
    }
}

/// One monitored process: a K-state Markov chain whose jumps happen at the
/// epochs of a Poisson clock of rate ζ.
///
/// Self-transitions on the diagonal of Ω are allowed; a clock tick may leave
/// the state unchanged.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessModel {
    transition: DMatrix<f64>,
    state_change_rate: f64,
    stationary: StationaryDistribution,
}

impl ProcessModel {
    pub fn new(transition: DMatrix<f64>, state_change_rate: f64) -> Result<Self, ModelError> {
        Self::with_field(transition, state_change_rate, "process")
    }

    fn with_field(
        transition: DMatrix<f64>,
        state_change_rate: f64,
        field: &str,
    ) -> Result<Self, ModelError> {
        let rate_field = format!("{field}.state_change_rate");
        if !state_change_rate.is_finite() || state_change_rate < 0.0 {
            return Err(ModelError::NegativeRate {
                field: rate_field,
                value: state_change_rate,
            });
        }
        let matrix_field = format!("{field}.transition_matrix");
        validate_transition_matrix(&transition, &matrix_field)?;
        let stationary =
            stationary_distribution(&transition).map_err(|source| ModelError::Solver {
                field: matrix_field,
                source,
            })?;
        Ok(ProcessModel {
            transition,
            state_change_rate,
            stationary,
        })
    }

    /// Ω.
    pub fn transition(&self) -> &DMatrix<f64> {
        &self.transition
    }

    /// ζ.
    pub fn state_change_rate(&self) -> f64 {
        self.state_change_rate
    }

    /// K.
    pub fn num_states(&self) -> usize {
        self.transition.nrows()
    }

    /// ψ.
    pub fn stationary(&self) -> &StationaryDistribution {
        &self.stationary
    }

    pub fn with_state_change_rate(&self, rate: f64) -> Result<Self, ModelError> {
        Self::new(self.transition.clone(), rate)
    }
}

/// Full system description. Construct through [`SystemConfig::new`].
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    sensor_rates: Vec<f64>,
    service_rate: f64,
    correlation: DMatrix<f64>,
    processes: Vec<ProcessModel>,
}

impl SystemConfig {
    /// Validates and builds a configuration. `correlation` is N×M with
    /// entry (i, j) the probability a packet from sensor i carries process j.
    pub fn new(
        sensor_rates: Vec<f64>,
        service_rate: f64,
        correlation: DMatrix<f64>,
        processes: Vec<ProcessModel>,
    ) -> Result<Self, ModelError> {
        let config = SystemConfig {
            sensor_rates,
            service_rate,
            correlation,
            processes,
        };
        validate_config(&config)?;
        Ok(config)
    }

    pub fn sensor_rates(&self) -> &[f64] {
        &self.sensor_rates
    }

    pub fn service_rate(&self) -> f64 {
        self.service_rate
    }

    pub fn correlation(&self) -> &DMatrix<f64> {
        &self.correlation
    }

    pub fn processes(&self) -> &[ProcessModel] {
        &self.processes
    }

    pub fn process(&self, j: usize) -> &ProcessModel {
        &self.processes[j]
    }

    /// N.
    pub fn num_sensors(&self) -> usize {
        self.sensor_rates.len()
    }

    /// M.
    pub fn num_processes(&self) -> usize {
        self.processes.len()
    }

    /// λ_C = Σ λ_i.
    pub fn total_rate(&self) -> f64 {
        self.sensor_rates.iter().sum()
    }

    pub fn with_sensor_rates(&self, rates: Vec<f64>) -> Result<Self, ModelError> {
        Self::new(
            rates,
            self.service_rate,
            self.correlation.clone(),
            self.processes.clone(),
        )
    }

    pub fn with_service_rate(&self, mu: f64) -> Result<Self, ModelError> {
        Self::new(
            self.sensor_rates.clone(),
            mu,
            self.correlation.clone(),
            self.processes.clone(),
        )
    }

    pub fn with_correlation(&self, correlation: DMatrix<f64>) -> Result<Self, ModelError> {
        Self::new(
            self.sensor_rates.clone(),
            self.service_rate,
            correlation,
            self.processes.clone(),
        )
    }

    pub fn with_process(&self, j: usize, process: ProcessModel) -> Result<Self, ModelError> {
        let mut processes = self.processes.clone();
        if j >= processes.len() {
            return Err(ModelError::DimensionMismatch {
                field: "processes".into(),
                expected: format!("index < {}", processes.len()),
                found: j.to_string(),
            });
        }
        processes[j] = process;
        Self::new(
            self.sensor_rates.clone(),
            self.service_rate,
            self.correlation.clone(),
            processes,
        )
    }
}

/// Re-checks every structural invariant of a configuration.
///
/// [`SystemConfig::new`] already calls this; it is public so front ends can
/// report on configs they assemble piecemeal.
pub fn validate_config(config: &SystemConfig) -> Result<(), ModelError> {
    if config.sensor_rates.is_empty() {
        return Err(ModelError::Empty("at least one sensor required (N ≥ 1)"));
    }
    if config.processes.is_empty() {
        return Err(ModelError::Empty("at least one process required (M ≥ 1)"));
    }
    for (i, &rate) in config.sensor_rates.iter().enumerate() {
        if !(rate.is_finite() && rate > 0.0) {
            return Err(ModelError::NonPositiveRate {
                field: format!("sensors[{i}].rate"),
                value: rate,
            });
        }
    }
    if !(config.service_rate.is_finite() && config.service_rate > 0.0) {
        return Err(ModelError::NonPositiveRate {
            field: "service_rate".into(),
            value: config.service_rate,
        });
    }
    let (n, m) = (config.sensor_rates.len(), config.processes.len());
    if config.correlation.shape() != (n, m) {
        return Err(ModelError::DimensionMismatch {
            field: "correlation".into(),
            expected: format!("{n}x{m}"),
            found: format!(
                "{}x{}",
                config.correlation.nrows(),
                config.correlation.ncols()
            ),
        });
    }
    for i in 0..n {
        for j in 0..m {
            let v = config.correlation[(i, j)];
            if !(0.0..=1.0).contains(&v) {
                return Err(ModelError::OutOfRange {
                    field: format!("correlation[{i}][{j}]"),
                    value: v,
                });
            }
        }
    }
    for (j, p) in config.processes.iter().enumerate() {
        let field = format!("processes[{j}]");
        if !(p.state_change_rate.is_finite() && p.state_change_rate >= 0.0) {
            return Err(ModelError::NegativeRate {
                field: format!("{field}.state_change_rate"),
                value: p.state_change_rate,
            });
        }
        validate_transition_matrix(&p.transition, &format!("{field}.transition_matrix"))?;
    }
    Ok(())
}

/// Builds a [`ProcessModel`] whose validation errors carry the given field
/// path (for example `processes[2]`).
pub fn process_at(
    transition: DMatrix<f64>,
    state_change_rate: f64,
    field: &str,
) -> Result<ProcessModel, ModelError> {
    ProcessModel::with_field(transition, state_change_rate, field)
}

/// Checks shape, entry range, row sums, irreducibility and aperiodicity.
pub fn validate_transition_matrix(omega: &DMatrix<f64>, field: &str) -> Result<(), ModelError> {
    let k = omega.nrows();
    if k == 0 || omega.ncols() != k {
        return Err(ModelError::DimensionMismatch {
            field: field.into(),
            expected: "non-empty square matrix".into(),
            found: format!("{}x{}", omega.nrows(), omega.ncols()),
        });
    }
    for a in 0..k {
        for b in 0..k {
            let v = omega[(a, b)];
            if !(0.0..=1.0).contains(&v) {
                return Err(ModelError::OutOfRange {
                    field: format!("{field}[{a}][{b}]"),
                    value: v,
                });
            }
        }
        let sum: f64 = omega.row(a).iter().sum();
        if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
            return Err(ModelError::NotRowStochastic {
                field: field.into(),
                row: a,
                sum,
            });
        }
    }
    let support = Support::of(omega);
    if let Some(unreachable) = support.first_not_strongly_connected() {
        return Err(ModelError::Reducible {
            field: field.into(),
            unreachable,
        });
    }
    if !support.is_primitive() {
        return Err(ModelError::Periodic {
            field: field.into(),
        });
    }
    Ok(())
}

/// Directed graph of positive entries, stored as a boolean adjacency matrix.
struct Support {
    k: usize,
    adj: Vec<bool>,
}

impl Support {
    fn of(omega: &DMatrix<f64>) -> Self {
        let k = omega.nrows();
        let adj = (0..k * k)
            .map(|idx| omega[(idx / k, idx % k)] > 0.0)
            .collect();
        Support { k, adj }
    }

    fn edge(&self, a: usize, b: usize) -> bool {
        self.adj[a * self.k + b]
    }

    fn reach(&self, forward: bool) -> Vec<bool> {
        let mut seen = vec![false; self.k];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(a) = stack.pop() {
            for b in 0..self.k {
                let e = if forward {
                    self.edge(a, b)
                } else {
                    self.edge(b, a)
                };
                if e && !seen[b] {
                    seen[b] = true;
                    stack.push(b);
                }
            }
        }
        seen
    }

    fn first_not_strongly_connected(&self) -> Option<usize> {
        let fwd = self.reach(true);
        let bwd = self.reach(false);
        (0..self.k).find(|&s| !(fwd[s] && bwd[s]))
    }

    /// An irreducible nonnegative matrix is primitive iff its power at the
    /// Wielandt exponent (K−1)²+1 is strictly positive.
    fn is_primitive(&self) -> bool {
        let k = self.k;
        let mut exponent = (k - 1) * (k - 1) + 1;
        let mut base = self.adj.clone();
        let mut acc: Option<Vec<bool>> = None;
        while exponent > 0 {
            if exponent & 1 == 1 {
                acc = Some(match acc {
                    None => base.clone(),
                    Some(a) => bool_mul(&a, &base, k),
                });
            }
            exponent >>= 1;
            if exponent > 0 {
                base = bool_mul(&base, &base, k);
            }
        }
        acc.is_some_and(|m| m.iter().all(|&v| v))
    }
}

fn bool_mul(a: &[bool], b: &[bool], k: usize) -> Vec<bool> {
    let mut out = vec![false; k * k];
    for i in 0..k {
        for l in 0..k {
            if a[i * k + l] {
                for j in 0..k {
                    out[i * k + j] |= b[l * k + j];
                }
            }
        }
    }
    out
}

/// ψ with ψΩ = ψ and Σψ = 1.
///
/// Direct linear solve for small chains, power iteration above
/// 200 states. Expects an already validated Ω.
pub fn stationary_distribution(omega: &DMatrix<f64>) -> Result<StationaryDistribution, SolveError> {
    let mut psi = linalg::stationary(omega)?;
    // Clean up roundoff around zero; irreducibility guarantees positivity.
    if psi.iter().any(|&p| p <= 0.0) {
        psi = linalg::stationary_power(omega)?;
    }
    if psi.iter().any(|&p| p <= 0.0 || !p.is_finite()) {
        return Err(SolveError::Singular);
    }
    Ok(StationaryDistribution(psi))
}

/// Rates seen by the per-process equivalent two-source system.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct DerivedRates {
    /// λ_C.
    pub total_rate: f64,
    /// λ*_j = Σ_i p^c_ij λ_i.
    pub informative_rates: Vec<f64>,
    /// p̃_j = λ*_j / λ_C.
    pub informative_probs: Vec<f64>,
    /// λ^e_j = μ λ*_j / (μ + λ_C).
    pub effective_rates: Vec<f64>,
}

pub fn derive_rates(config: &SystemConfig) -> DerivedRates {
    let total_rate = config.total_rate();
    let mu = config.service_rate;
    let informative_rates: Vec<f64> = (0..config.num_processes())
        .map(|j| informative_rate(config, j))
        .collect();
    let informative_probs = informative_rates.iter().map(|&l| l / total_rate).collect();
    let effective_rates = informative_rates
        .iter()
        .map(|&l| mu * l / (mu + total_rate))
        .collect();
    DerivedRates {
        total_rate,
        informative_rates,
        informative_probs,
        effective_rates,
    }
}

/// λ*_j from column j of the correlation matrix alone.
pub fn informative_rate(config: &SystemConfig, j: usize) -> f64 {
    config
        .sensor_rates
        .iter()
        .zip(config.correlation.column(j).iter())
        .map(|(l, p)| l * p)
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn omega_fig() -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[0.4, 0.6, 0.3, 0.7])
    }

    fn two_by_two(pc: [f64; 4]) -> SystemConfig {
        let p = ProcessModel::new(omega_fig(), 4.0).unwrap();
        SystemConfig::new(
            vec![2.0, 8.0],
            4.0,
            DMatrix::from_row_slice(2, 2, &pc),
            vec![p.clone(), p],
        )
        .unwrap()
    }

    #[test]
    fn identity_chain_is_reducible() {
        let err = ProcessModel::new(DMatrix::identity(2, 2), 1.0).unwrap_err();
        assert!(matches!(err, ModelError::Reducible { .. }), "{err}");
    }

    #[test]
    fn swap_chain_is_periodic() {
        let omega = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let err = ProcessModel::new(omega, 1.0).unwrap_err();
        assert!(matches!(err, ModelError::Periodic { .. }), "{err}");
    }

    #[test]
    fn three_cycle_is_periodic_but_lazy_cycle_is_not() {
        let cycle = DMatrix::from_row_slice(3, 3, &[0., 1., 0., 0., 0., 1., 1., 0., 0.]);
        assert!(matches!(
            ProcessModel::new(cycle, 1.0),
            Err(ModelError::Periodic { .. })
        ));
        let lazy = DMatrix::from_row_slice(3, 3, &[0.1, 0.9, 0., 0., 0., 1., 1., 0., 0.]);
        assert!(ProcessModel::new(lazy, 1.0).is_ok());
    }

    #[test]
    fn non_stochastic_rows_rejected() {
        let omega = DMatrix::from_row_slice(2, 2, &[0.4, 0.5, 0.3, 0.7]);
        assert!(matches!(
            ProcessModel::new(omega, 1.0),
            Err(ModelError::NotRowStochastic { row: 0, .. })
        ));
    }

    #[test]
    fn paper_process_accepted_with_expected_psi() {
        let p = ProcessModel::new(omega_fig(), 4.0).unwrap();
        let psi = p.stationary();
        assert!((psi[0] - 1.0 / 3.0).abs() < 1e-12);
        assert!((psi[1] - 2.0 / 3.0).abs() < 1e-12);
        assert!((psi.self_overlap() - 5.0 / 9.0).abs() < 1e-12);
    }

    #[test]
    fn uniform_chains_have_uniform_psi() {
        for k in 2..6 {
            let omega = DMatrix::from_element(k, k, 1.0 / k as f64);
            let psi = stationary_distribution(&omega).unwrap();
            for &v in psi.as_slice() {
                assert!((v - 1.0 / k as f64).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn correlation_entry_out_of_range_names_field() {
        let p = ProcessModel::new(omega_fig(), 4.0).unwrap();
        let err = SystemConfig::new(
            vec![1.0, 1.0],
            1.0,
            DMatrix::from_row_slice(2, 1, &[0.5, 1.2]),
            vec![p],
        )
        .unwrap_err();
        assert_eq!(
            err,
            ModelError::OutOfRange {
                field: "correlation[1][0]".into(),
                value: 1.2
            }
        );
    }

    #[test]
    fn structural_errors() {
        let p = ProcessModel::new(omega_fig(), 4.0).unwrap();
        assert!(matches!(
            SystemConfig::new(vec![1.0], 1.0, DMatrix::zeros(1, 0), vec![]),
            Err(ModelError::Empty(_))
        ));
        assert!(matches!(
            SystemConfig::new(vec![1.0, 0.0], 1.0, DMatrix::zeros(2, 1), vec![p.clone()]),
            Err(ModelError::NonPositiveRate { .. })
        ));
        assert!(matches!(
            SystemConfig::new(vec![1.0], -1.0, DMatrix::zeros(1, 1), vec![p.clone()]),
            Err(ModelError::NonPositiveRate { .. })
        ));
        assert!(matches!(
            SystemConfig::new(vec![1.0], 1.0, DMatrix::zeros(2, 1), vec![p]),
            Err(ModelError::DimensionMismatch { .. })
        ));
        assert!(matches!(
            ProcessModel::new(omega_fig(), -0.5),
            Err(ModelError::NegativeRate { .. })
        ));
    }

    #[test]
    fn derived_rates_hand_example() {
        let c = two_by_two([1.0, 0.5, 0.5, 1.0]);
        let r = derive_rates(&c);
        assert_eq!(r.total_rate, 10.0);
        assert_eq!(r.informative_rates, vec![6.0, 9.0]);
        assert!((r.informative_probs[0] - 0.6).abs() < 1e-15);
        assert!((r.informative_probs[1] - 0.9).abs() < 1e-15);
        assert!((r.effective_rates[0] - 12.0 / 7.0).abs() < 1e-14);
        assert!(r
            .effective_rates
            .iter()
            .zip(&r.informative_rates)
            .all(|(e, l)| e < l));
    }

    #[test]
    fn all_ones_and_all_zeros_correlation() {
        let ones = derive_rates(&two_by_two([1.0; 4]));
        assert_eq!(ones.informative_rates, vec![10.0, 10.0]);
        assert_eq!(ones.informative_probs, vec![1.0, 1.0]);
        let zeros = derive_rates(&two_by_two([0.0; 4]));
        assert_eq!(zeros.informative_rates, vec![0.0, 0.0]);
        assert_eq!(zeros.informative_probs, vec![0.0, 0.0]);
    }
}
