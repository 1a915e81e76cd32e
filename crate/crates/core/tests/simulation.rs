mod common;

use aoi_corr::aoi::{average_aoi, interdeparture_moments};
use aoi_corr::error::error_ratio;
use aoi_corr::model::derive_rates;
use aoi_corr::sim::{
    replicate, run_simulation, run_with_observer, ArrivalOutcome, Observer, Packet, SimParams,
    Snapshot,
};
use common::*;
use rayon::prelude::*;

#[test]
fn single_source_age() {
    let config = single_source(1.0, 1.0);
    let m = run_simulation(&config, &SimParams::new(1e7, 11).unwrap());
    let rel = (m.aoi_mean[0] - 2.5).abs() / 2.5;
    assert!(rel < 0.02, "simulated {} vs 2.5", m.aoi_mean[0]);
}

#[test]
fn interdeparture_moments_and_informative_fraction() {
    let config = correlation_sweep_config(2.0, 0.5);
    let m = run_simulation(&config, &SimParams::new(1e6, 5).unwrap());
    let y = interdeparture_moments(10.0, 4.0);
    assert!(
        (m.interdeparture.mean / y.mean - 1.0).abs() < 0.02,
        "{:?} vs {y:?}",
        m.interdeparture
    );
    assert!(
        (m.interdeparture.second / y.second - 1.0).abs() < 0.02,
        "{:?} vs {y:?}",
        m.interdeparture
    );
    let rates = derive_rates(&config);
    for j in 0..2 {
        let expected = rates.informative_probs[j];
        let got = m.informative_departure_fraction(j);
        assert!(
            (got / expected - 1.0).abs() < 0.01,
            "process {j}: {got} vs {expected}"
        );
    }
    assert_eq!(
        m.counts.arrivals,
        m.counts.drops + m.counts.departures + m.counts.in_flight
    );
}

/// Checks that carried values are the generation-time states and that the
/// monitor adopts them on departure.
#[derive(Default)]
struct ContentAudit {
    arrivals: u64,
    departures: u64,
}

impl Observer for ContentAudit {
    fn on_arrival(
        &mut self,
        time: f64,
        packet: &Packet,
        _outcome: ArrivalOutcome,
        state: &Snapshot<'_>,
    ) {
        assert_eq!(packet.generated_at, time);
        for (j, carried) in packet.carries.iter().enumerate() {
            if let Some(v) = carried {
                assert_eq!(*v, state.true_states[j]);
            }
        }
        self.arrivals += 1;
    }

    fn on_departure(&mut self, _time: f64, packet: &Packet, state: &Snapshot<'_>) {
        for (j, carried) in packet.carries.iter().enumerate() {
            if let Some(v) = carried {
                assert_eq!(*v, state.monitor_states[j]);
            }
        }
        self.departures += 1;
    }
}

#[test]
fn packets_carry_generation_time_states() {
    let config = correlation_sweep_config(2.0, 0.5);
    for buffer in [0, 1] {
        let mut audit = ContentAudit::default();
        let params = SimParams::new(2e4, 3).unwrap().with_buffer(buffer).unwrap();
        let m = run_with_observer(&config, &params, &mut audit);
        assert_eq!(audit.arrivals, m.counts.arrivals);
        assert_eq!(audit.departures, m.counts.departures);
    }
}

/// Visit counts of the (x, y, z) jump chain seen by one process.
struct JumpChainCounter {
    process: usize,
    k: usize,
    visits: Vec<u64>,
}

impl JumpChainCounter {
    fn record(&mut self, state: &Snapshot<'_>) {
        let (x, y) = (
            state.true_states[self.process],
            state.monitor_states[self.process],
        );
        let z = state.phase(self.process).index();
        self.visits[(x * self.k + y) * 3 + z] += 1;
    }
}

impl Observer for JumpChainCounter {
    fn on_arrival(
        &mut self,
        _time: f64,
        _packet: &Packet,
        outcome: ArrivalOutcome,
        state: &Snapshot<'_>,
    ) {
        if outcome == ArrivalOutcome::Served {
            self.record(state);
        }
    }

    fn on_departure(&mut self, _time: f64, _packet: &Packet, state: &Snapshot<'_>) {
        self.record(state);
    }

    fn on_state_change(&mut self, _time: f64, process: usize, state: &Snapshot<'_>) {
        if process == self.process {
            self.record(state);
        }
    }
}

#[test]
fn embedded_chain_occupancy_matches_stationary_distribution() {
    let config = correlation_sweep_config(2.0, 0.5);
    let result = error_ratio(&config, 0).unwrap();
    let pi = result.chain.stationary().unwrap();
    let mut counter = JumpChainCounter {
        process: 0,
        k: 2,
        visits: vec![0; 12],
    };
    run_with_observer(&config, &SimParams::new(1e6, 21).unwrap(), &mut counter);
    let total: u64 = counter.visits.iter().sum();
    for (s, &count) in counter.visits.iter().enumerate() {
        let freq = count as f64 / total as f64;
        let (x, y, z) = result.chain.state(s);
        assert!(
            (freq - pi[s]).abs() < 0.005,
            "state ({x},{y},{z:?}): empirical {freq} vs π {}",
            pi[s]
        );
    }
}

#[test]
fn error_ratio_matches_simulation_across_state_change_rates() {
    let zetas = [0.01, 0.1, 1.0, 10.0, 100.0];
    let qs = [0.0, 0.5, 1.0];
    let cases: Vec<(f64, f64)> = zetas
        .iter()
        .flat_map(|&z| qs.iter().map(move |&q| (z, q)))
        .collect();
    let failures: Vec<String> = cases
        .par_iter()
        .enumerate()
        .filter_map(|(idx, &(zeta, q))| {
            let config = two_by_two([2.0, 8.0], 4.0, [zeta, 4.0], q);
            let analytic = error_ratio(&config, 0).unwrap().epsilon;
            let sim = run_simulation(&config, &SimParams::new(1e6, 100 + idx as u64).unwrap());
            let diff = (analytic - sim.error_ratio[0]).abs();
            (diff > 0.01).then(|| {
                format!(
                    "ζ={zeta}, q={q}: analytic {analytic}, simulated {}",
                    sim.error_ratio[0]
                )
            })
        })
        .collect();
    assert!(failures.is_empty(), "{failures:#?}");
}

#[test]
fn age_matches_simulation_for_sparse_column() {
    let config = aoi_corr::SystemConfig::new(
        vec![2.0, 8.0],
        4.0,
        nalgebra::DMatrix::from_row_slice(2, 1, &[1.0, 0.0]),
        vec![aoi_corr::ProcessModel::new(omega_2state(), 4.0).unwrap()],
    )
    .unwrap();
    let analytic = average_aoi(&config, 0).to_f64();
    let sim = run_simulation(&config, &SimParams::new(1e6, 17).unwrap());
    assert!(
        (sim.aoi_mean[0] / analytic - 1.0).abs() < 0.02,
        "{} vs {analytic}",
        sim.aoi_mean[0]
    );
}

#[test]
fn replication_standard_error_is_small() {
    let config = correlation_sweep_config(2.0, 0.5);
    let r = replicate(&config, &SimParams::new(1e5, 9).unwrap(), 16).unwrap();
    assert_eq!(r.replications, 16);
    assert!(r.error_ratio[0].std_err < 0.003, "{:?}", r.error_ratio[0]);
    assert!(r.error_ratio[0].std_err > 0.0);
}

/// Records informative-arrival epochs per process.
struct ArrivalEpochs(Vec<Vec<f64>>);

impl Observer for ArrivalEpochs {
    fn on_arrival(
        &mut self,
        time: f64,
        packet: &Packet,
        _outcome: ArrivalOutcome,
        _state: &Snapshot<'_>,
    ) {
        for (j, c) in packet.carries.iter().enumerate() {
            if c.is_some() {
                self.0[j].push(time);
            }
        }
    }
}

#[test]
fn informative_arrivals_are_poisson() {
    let config = two_by_two([1.5, 6.0], 3.0, [1.0, 2.0], 0.3);
    let mut epochs = ArrivalEpochs(vec![Vec::new(); 2]);
    run_with_observer(&config, &SimParams::new(2e4, 31).unwrap(), &mut epochs);
    let rates = derive_rates(&config);
    for (j, times) in epochs.0.iter().enumerate() {
        let mut gaps: Vec<f64> = times.windows(2).map(|w| w[1] - w[0]).collect();
        let d = ks_exponential(&mut gaps, rates.informative_rates[j]);
        assert!(d < ks_critical_001(gaps.len()), "process {j}: D = {d}");
    }
}
