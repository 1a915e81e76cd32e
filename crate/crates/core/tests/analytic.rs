mod common;

use aoi_corr::aoi::{average_aoi, average_aoi_from_rates, interdeparture_moments, sum_aoi};
use aoi_corr::model::{derive_rates, stationary_distribution};
use aoi_corr::{Extended, SystemConfig};
use approx::assert_relative_eq;
use common::*;
use nalgebra::DMatrix;
use proptest::prelude::*;

fn perturb_other_columns(config: &SystemConfig, keep: usize, values: &[f64]) -> SystemConfig {
    let mut pc = config.correlation().clone();
    let (n, m) = pc.shape();
    for i in 0..n {
        for j in 0..m {
            if j != keep {
                pc[(i, j)] = values[(i * m + j) % values.len()];
            }
        }
    }
    config.with_correlation(pc).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn rates_depend_only_on_own_column(
        config in arb_config(),
        values in prop::collection::vec(0.0f64..=1.0, 9),
    ) {
        let base = derive_rates(&config);
        for j in 0..config.num_processes() {
            let moved = derive_rates(&perturb_other_columns(&config, j, &values));
            prop_assert_eq!(base.informative_rates[j].to_bits(), moved.informative_rates[j].to_bits());
            prop_assert_eq!(base.informative_probs[j].to_bits(), moved.informative_probs[j].to_bits());
            prop_assert_eq!(base.effective_rates[j].to_bits(), moved.effective_rates[j].to_bits());
        }
    }

    #[test]
    fn derived_rate_invariants(config in arb_config()) {
        let r = derive_rates(&config);
        let total: f64 = config.sensor_rates().iter().sum();
        prop_assert!((r.total_rate - total).abs() <= 1e-12 * total);
        for j in 0..config.num_processes() {
            prop_assert!(r.informative_rates[j] <= r.total_rate * (1.0 + 1e-12));
            prop_assert!((0.0..=1.0).contains(&r.informative_probs[j]));
            prop_assert!(r.effective_rates[j] < r.informative_rates[j]);
        }
    }

    #[test]
    fn informative_rate_is_linear_in_each_sensor(config in arb_config(), scale in 0.1f64..10.0) {
        let base = derive_rates(&config);
        for i in 0..config.num_sensors() {
            let mut rates = config.sensor_rates().to_vec();
            let old = rates[i];
            rates[i] = old * scale;
            let moved = derive_rates(&config.with_sensor_rates(rates).unwrap());
            for j in 0..config.num_processes() {
                let expected = base.informative_rates[j] + (scale - 1.0) * old * config.correlation()[(i, j)];
                prop_assert!((moved.informative_rates[j] - expected).abs() <= 1e-10 * (1.0 + expected.abs()));
            }
        }
    }

    #[test]
    fn stationary_is_invariant_under_powers(omega in (2usize..=6).prop_flat_map(arb_transition)) {
        let psi = stationary_distribution(&omega).unwrap();
        let k = omega.nrows();
        let row = DMatrix::from_row_slice(1, k, psi.as_slice());
        prop_assert!((psi.as_slice().iter().sum::<f64>() - 1.0).abs() < 1e-10);
        prop_assert!(psi.as_slice().iter().all(|&p| p > 0.0));
        let mut power = omega.clone();
        for _ in 1..=5 {
            let moved = &row * &power;
            for s in 0..k {
                prop_assert!((moved[(0, s)] - psi[s]).abs() < 1e-9);
            }
            power = &power * &omega;
        }
    }

    #[test]
    fn single_source_reduction(l in 1e-3f64..1e3, mu in 1e-3f64..1e3) {
        let d = average_aoi_from_rates(l, mu, 1.0).finite().unwrap();
        let known = (2.0 * l * l + 2.0 * l * mu + mu * mu) / (l * mu * (l + mu));
        prop_assert!((d - known).abs() <= 1e-12 * known, "{} vs {}", d, known);
        let textbook = 1.0 / l + 2.0 / mu - 1.0 / (l + mu);
        prop_assert!((d - textbook).abs() <= 1e-12 * textbook);
    }

    #[test]
    fn geometric_sum_route_agrees(l in 1e-2f64..1e2, mu in 1e-2f64..1e2, p in 1e-3f64..=1.0) {
        // Δ = λ_e (E[S·Ỹ] + E[Ỹ²]/2) with S ⟂ Ỹ and Ỹ a geometric sum of Y.
        let y = interdeparture_moments(l, mu);
        let yt1 = y.mean / p;
        let yt2 = y.second / p + 2.0 * y.mean * y.mean * (1.0 - p) / (p * p);
        let effective = mu * p * l / (mu + l);
        let via_sum = effective * (yt1 / mu + yt2 / 2.0);
        let closed = average_aoi_from_rates(l, mu, p).finite().unwrap();
        prop_assert!((via_sum - closed).abs() <= 1e-12 * closed, "{} vs {}", via_sum, closed);
    }

    #[test]
    fn age_strictly_decreasing_in_informative_probability(l in 1e-2f64..1e2, mu in 1e-2f64..1e2) {
        let grid: Vec<f64> = (1..=100).map(|k| k as f64 / 100.0).collect();
        for w in grid.windows(2) {
            let a = average_aoi_from_rates(l, mu, w[0]).to_f64();
            let b = average_aoi_from_rates(l, mu, w[1]).to_f64();
            prop_assert!(b < a, "{} !< {} at p={}", b, a, w[1]);
        }
    }

    #[test]
    fn age_column_locality_and_process_independence(
        config in arb_config(),
        values in prop::collection::vec(0.0f64..=1.0, 9),
        zeta in 0.01f64..100.0,
    ) {
        for j in 0..config.num_processes() {
            let base = average_aoi(&config, j);
            prop_assert_eq!(base, average_aoi(&perturb_other_columns(&config, j, &values), j));
            let retimed = config
                .with_process(j, config.process(j).with_state_change_rate(zeta).unwrap())
                .unwrap();
            prop_assert_eq!(base, average_aoi(&retimed, j));
        }
    }

    #[test]
    fn finite_ages_exceed_mean_service(config in arb_config()) {
        for j in 0..config.num_processes() {
            if let Extended::Finite(d) = average_aoi(&config, j) {
                prop_assert!(d >= 1.0 / config.service_rate());
            }
        }
    }
}

#[test]
fn stationary_examples() {
    let psi = stationary_distribution(&omega_2state()).unwrap();
    assert_relative_eq!(psi[0], 1.0 / 3.0, epsilon = 1e-14);
    assert_relative_eq!(psi[1], 2.0 / 3.0, epsilon = 1e-14);
    assert_relative_eq!(psi.self_overlap(), 5.0 / 9.0, epsilon = 1e-14);
}

#[test]
fn two_process_sum() {
    let c = two_by_two([2.0, 8.0], 4.0, [4.0, 4.0], 0.0);
    let identity = c.with_correlation(DMatrix::identity(2, 2)).unwrap();
    let expected = average_aoi_from_rates(10.0, 4.0, 0.2).to_f64()
        + average_aoi_from_rates(10.0, 4.0, 0.8).to_f64();
    assert_relative_eq!(sum_aoi(&identity).to_f64(), expected, max_relative = 1e-14);
}

#[test]
fn derived_rates_example() {
    let c = two_by_two([2.0, 8.0], 4.0, [4.0, 4.0], 0.5);
    let r = derive_rates(&c);
    assert_eq!(r.total_rate, 10.0);
    assert_eq!(r.informative_rates, vec![6.0, 9.0]);
    assert_relative_eq!(r.effective_rates[0], 12.0 / 7.0, max_relative = 1e-15);
}
