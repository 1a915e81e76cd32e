//! Closed-form stationary Age of Information for the zero-buffer M/M/1/1
//! server with correlated sensors.
//!
//! From process j's point of view the server sees two Poisson sources:
//! informative packets at rate λ*_j and uninformative ones at λ_C − λ*_j.
//! Departures are informative independently with probability p̃_j, so the
//! informative inter-departure time is a geometric sum of ordinary
//! inter-departure times Y. The average age depends on the configuration
//! only through (λ_C, μ, p̃_j).

use serde::Serialize;

use crate::model::{derive_rates, SystemConfig};
use crate::Extended;

/// First two moments of the inter-departure time Y.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InterdepartureMoments {
    /// E[Y].
    pub mean: f64,
    /// E[Y²].
    pub second: f64,
}

impl InterdepartureMoments {
    pub fn variance(&self) -> f64 {
        self.second - self.mean * self.mean
    }
}

/// E[Y] = 1/λ_C + 1/μ and E[Y²] = 2(λ_C² + λ_C μ + μ²)/(λ_C² μ²).
///
/// Y is an idle period (exponential, rate λ_C) followed by a service
/// (exponential, rate μ).
pub fn interdeparture_moments(total_rate: f64, service_rate: f64) -> InterdepartureMoments {
    let (l, mu) = (total_rate, service_rate);
    InterdepartureMoments {
        mean: 1.0 / l + 1.0 / mu,
        second: 2.0 * (l * l + l * mu + mu * mu) / (l * l * mu * mu),
    }
}

/// Average age of a process served with informative probability `p_tilde`.
///
/// Returns [`Extended::Infinite`] when `p_tilde` is zero.
pub fn average_aoi_from_rates(total_rate: f64, service_rate: f64, p_tilde: f64) -> Extended {
    if p_tilde <= 0.0 {
        return Extended::Infinite;
    }
    let (l, mu) = (total_rate, service_rate);
    let y = interdeparture_moments(l, mu);
    let bracket = mu * y.second / 2.0 + mu * y.mean * y.mean * (1.0 - p_tilde) / p_tilde + y.mean;
    Extended::Finite(l / (l + mu) * bracket)
}

/// Δ_j for process `j` (zero-based).
pub fn average_aoi(config: &SystemConfig, j: usize) -> Extended {
    let rates = derive_rates(config);
    average_aoi_from_rates(
        rates.total_rate,
        config.service_rate(),
        rates.informative_probs[j],
    )
}

/// Δ_sum = Σ_j Δ_j; infinite if any process is untracked.
pub fn sum_aoi(config: &SystemConfig) -> Extended {
    analyze(config).sum
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AoiResult {
    pub per_process: Vec<Extended>,
    pub sum: Extended,
    pub moments: InterdepartureMoments,
}

pub fn analyze(config: &SystemConfig) -> AoiResult {
    let rates = derive_rates(config);
    let mu = config.service_rate();
    let per_process: Vec<Extended> = rates
        .informative_probs
        .iter()
        .map(|&p| average_aoi_from_rates(rates.total_rate, mu, p))
        .collect();
    let sum = per_process.iter().copied().sum();
    AoiResult {
        per_process,
        sum,
        moments: interdeparture_moments(rates.total_rate, mu),
    }
}
