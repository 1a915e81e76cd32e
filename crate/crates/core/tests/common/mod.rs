#![allow(dead_code)]

use aoi_corr::{ProcessModel, SystemConfig};
use nalgebra::DMatrix;
use proptest::prelude::*;

pub fn omega_2state() -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[0.4, 0.6, 0.3, 0.7])
}

/// Two sensors, two processes, symmetric tuning of the first column:
/// P_C = [[1, q], [q, 1]] so p^c_21 = q.
pub fn two_by_two(lambda: [f64; 2], mu: f64, zeta: [f64; 2], q: f64) -> SystemConfig {
    let processes = zeta
        .iter()
        .map(|&z| ProcessModel::new(omega_2state(), z).unwrap())
        .collect();
    SystemConfig::new(
        lambda.to_vec(),
        mu,
        DMatrix::from_row_slice(2, 2, &[1.0, q, q, 1.0]),
        processes,
    )
    .unwrap()
}

/// μ = 4, ζ = [4, 4], λ₂ = 8.
pub fn correlation_sweep_config(lambda1: f64, q: f64) -> SystemConfig {
    two_by_two([lambda1, 8.0], 4.0, [4.0, 4.0], q)
}

/// Single sensor reporting a single process with certainty.
pub fn single_source(lambda: f64, mu: f64) -> SystemConfig {
    let p = ProcessModel::new(omega_2state(), 1.0).unwrap();
    SystemConfig::new(vec![lambda], mu, DMatrix::from_element(1, 1, 1.0), vec![p]).unwrap()
}

/// Row-stochastic matrix with strictly positive entries (hence irreducible
/// and aperiodic) built from positive weights.
pub fn stochastic_from_weights(k: usize, weights: &[f64]) -> DMatrix<f64> {
    let mut m = DMatrix::from_row_slice(k, k, &weights[..k * k]);
    for mut row in m.row_iter_mut() {
        let s: f64 = row.sum();
        row /= s;
    }
    m
}

pub fn arb_transition(k: usize) -> impl Strategy<Value = DMatrix<f64>> {
    prop::collection::vec(0.05f64..1.0, k * k).prop_map(move |w| stochastic_from_weights(k, &w))
}

pub fn arb_process(k: usize) -> impl Strategy<Value = ProcessModel> {
    (arb_transition(k), 0.01f64..50.0)
        .prop_map(|(omega, zeta)| ProcessModel::new(omega, zeta).unwrap())
}

/// Random validated configuration with N ∈ 1..=3 sensors, M ∈ 1..=3
/// processes and K ∈ {2, 3, 4} states per process. Every column of P_C has
/// at least one positive entry so every process is tracked.
pub fn arb_config() -> impl Strategy<Value = SystemConfig> {
    (1usize..=3, 1usize..=3)
        .prop_flat_map(|(n, m)| {
            (
                prop::collection::vec(0.05f64..20.0, n),
                0.05f64..20.0,
                prop::collection::vec(0.0f64..=1.0, n * m),
                prop::collection::vec((2usize..=4).prop_flat_map(arb_process), m),
                Just((n, m)),
            )
        })
        .prop_map(|(rates, mu, mut pc, processes, (n, m))| {
            for j in 0..m {
                if (0..n).all(|i| pc[i * m + j] == 0.0) {
                    pc[j] = 0.5;
                }
            }
            SystemConfig::new(rates, mu, DMatrix::from_row_slice(n, m, &pc), processes).unwrap()
        })
}

/// Error ratio from an independent continuous-time chain over
/// (true state x, monitor state y, server phase, carried value w).
///
/// With the server busy on an informative packet the chain also tracks the
/// value w that packet carries; on departure y ← w. The stationary
/// distribution of the generator is solved directly, so no embedded-chain
/// reweighting is involved.
pub fn ctmc_error_ratio(
    omega: &DMatrix<f64>,
    zeta: f64,
    mu: f64,
    total: f64,
    informative: f64,
) -> f64 {
    let k = omega.nrows();
    // idle (x,y), uninformative (x,y), informative (x,y,w)
    let idle = |x: usize, y: usize| x * k + y;
    let unin = |x: usize, y: usize| k * k + x * k + y;
    let info = |x: usize, y: usize, w: usize| 2 * k * k + (x * k + y) * k + w;
    let n = 2 * k * k + k * k * k;
    let mut q = DMatrix::<f64>::zeros(n, n);
    for x in 0..k {
        for y in 0..k {
            for x2 in 0..k {
                if x2 != x {
                    let r = zeta * omega[(x, x2)];
                    q[(idle(x, y), idle(x2, y))] += r;
                    q[(unin(x, y), unin(x2, y))] += r;
                    for w in 0..k {
                        q[(info(x, y, w), info(x2, y, w))] += r;
                    }
                }
            }
            q[(idle(x, y), info(x, y, x))] += informative;
            q[(idle(x, y), unin(x, y))] += total - informative;
            q[(unin(x, y), idle(x, y))] += mu;
            for w in 0..k {
                q[(info(x, y, w), idle(x, w))] += mu;
            }
        }
    }
    for s in 0..n {
        let out: f64 = q.row(s).sum();
        q[(s, s)] = -out;
    }
    let mut a = q.transpose();
    a.row_mut(n - 1).fill(1.0);
    let mut rhs = nalgebra::DVector::zeros(n);
    rhs[n - 1] = 1.0;
    let pi = a.lu().solve(&rhs).expect("generator is irreducible");
    let mut eps = 0.0;
    for x in 0..k {
        for y in 0..k {
            if x != y {
                eps += pi[idle(x, y)] + pi[unin(x, y)];
                for w in 0..k {
                    eps += pi[info(x, y, w)];
                }
            }
        }
    }
    eps
}

/// Kolmogorov–Smirnov statistic of `samples` against Exp(rate).
pub fn ks_exponential(samples: &mut [f64], rate: f64) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    samples
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = 1.0 - (-rate * x).exp();
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Asymptotic KS critical value at significance 0.01.
pub fn ks_critical_001(n: usize) -> f64 {
    1.628 / (n as f64).sqrt()
}
