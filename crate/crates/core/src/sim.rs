//! Continuous-time discrete-event simulator of the full N-sensor,
//! M-process system.
//!
//! Three event families drive the run: per-sensor Poisson arrivals, the
//! exponential service completion of the packet in the server, and the
//! per-process Poisson clocks whose ticks draw a next state from Ω_j. Age
//! and mismatch integrals are accumulated exactly between events.
//!
//! # Random streams
//!
//! Every run draws from independent ChaCha8 streams. For replication `r` of
//! base seed `s`, stream role `k` uses key `s ⊕ r·0x9E37_79B9_7F4A_7C15` and
//! ChaCha stream id `k`. Replication 0 therefore keys on the base seed
//! itself, so a single replication reproduces [`run_simulation`].

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;
use serde::Serialize;

use crate::aoi::InterdepartureMoments;
use crate::error::ServerPhase;
use crate::model::SystemConfig;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("horizon {horizon} must be finite and exceed warmup {warmup} (warmup ≥ 0)")]
    InvalidWindow { horizon: f64, warmup: f64 },
    #[error("buffer capacity {0} not supported (use 0 or 1)")]
    InvalidBuffer(u32),
    #[error("at least one replication required")]
    NoReplications,
}

/// Role ids used as ChaCha stream numbers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum StreamRole {
    Init = 1,
    Arrivals = 2,
    Service = 3,
    StateChanges = 4,
    Content = 5,
}

const REPLICATION_MIX: u64 = 0x9E37_79B9_7F4A_7C15;

/// Deterministic generator for one (seed, replication, role) triple.
pub fn stream_rng(base_seed: u64, replication: u64, role: StreamRole) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(base_seed ^ replication.wrapping_mul(REPLICATION_MIX));
    rng.set_stream(role as u64);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimParams {
    pub horizon: f64,
    pub seed: u64,
    pub buffer_capacity: u32,
    pub warmup: f64,
}

impl SimParams {
    /// Zero-buffer run with the first 1% of the horizon discarded.
    pub fn new(horizon: f64, seed: u64) -> Result<Self, SimError> {
        SimParams {
            horizon,
            seed,
            buffer_capacity: 0,
            warmup: 0.01 * horizon,
        }
        .validated()
    }

    pub fn with_warmup(self, warmup: f64) -> Result<Self, SimError> {
        SimParams { warmup, ..self }.validated()
    }

    pub fn with_buffer(self, buffer_capacity: u32) -> Result<Self, SimError> {
        SimParams {
            buffer_capacity,
            ..self
        }
        .validated()
    }

    pub fn with_seed(self, seed: u64) -> Self {
        SimParams { seed, ..self }
    }

    pub fn validated(self) -> Result<Self, SimError> {
        if !(self.horizon.is_finite() && self.warmup >= 0.0 && self.horizon > self.warmup) {
            return Err(SimError::InvalidWindow {
                horizon: self.horizon,
                warmup: self.warmup,
            });
        }
        if self.buffer_capacity > 1 {
            return Err(SimError::InvalidBuffer(self.buffer_capacity));
        }
        Ok(self)
    }
}

/// A status update. `carries[j]` is the state of process j at generation
/// time, present when the packet is informative for j.
#[derive(Debug, Clone, PartialEq)]
pub struct Packet {
    pub generated_at: f64,
    pub origin_sensor: usize,
    pub carries: Vec<Option<usize>>,
}

impl Packet {
    fn empty(m: usize) -> Self {
        Packet {
            generated_at: 0.0,
            origin_sensor: 0,
            carries: vec![None; m],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ArrivalOutcome {
    Served,
    Buffered,
    Dropped,
}

/// System state right after an event.
#[derive(Debug, Clone, Copy)]
pub struct Snapshot<'a> {
    pub true_states: &'a [usize],
    pub monitor_states: &'a [usize],
    pub in_service: Option<&'a Packet>,
    pub buffered: Option<&'a Packet>,
}

impl Snapshot<'_> {
    /// Server phase from process j's point of view.
    pub fn phase(&self, j: usize) -> ServerPhase {
        match self.in_service {
            None => ServerPhase::Idle,
            Some(p) if p.carries[j].is_some() => ServerPhase::Informative,
            Some(_) => ServerPhase::Uninformative,
        }
    }
}

/// Hooks called after each event has been applied.
pub trait Observer {
    fn on_arrival(
        &mut self,
        _time: f64,
        _packet: &Packet,
        _outcome: ArrivalOutcome,
        _state: &Snapshot<'_>,
    ) {
    }
    fn on_departure(&mut self, _time: f64, _packet: &Packet, _state: &Snapshot<'_>) {}
    fn on_state_change(&mut self, _time: f64, _process: usize, _state: &Snapshot<'_>) {}
}

impl Observer for () {}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SimCounts {
    pub arrivals: u64,
    pub drops: u64,
    pub departures: u64,
    /// Packets still in the server or buffer at the horizon.
    pub in_flight: u64,
    pub informative_arrivals: Vec<u64>,
    pub informative_departures: Vec<u64>,
}

/// Outcome of one run. Time averages cover `[warmup, horizon]`; counts
/// cover the whole run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimMetrics {
    pub aoi_mean: Vec<f64>,
    pub error_ratio: Vec<f64>,
    pub counts: SimCounts,
    /// Empirical moments of inter-departure times after warmup.
    pub interdeparture: InterdepartureMoments,
    pub observed_time: f64,
}

impl SimMetrics {
    /// Fraction of departures informative for process j.
    pub fn informative_departure_fraction(&self, j: usize) -> f64 {
        self.counts.informative_departures[j] as f64 / self.counts.departures as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum EventKind {
    Arrival(usize),
    Departure,
    StateChange(usize),
}

#[derive(Debug, Clone, Copy)]
struct Scheduled {
    time: f64,
    kind: EventKind,
}

impl PartialEq for Scheduled {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Scheduled {}

impl PartialOrd for Scheduled {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Scheduled {
    // Reversed so BinaryHeap pops the earliest event.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .total_cmp(&self.time)
            .then_with(|| kind_rank(&other.kind).cmp(&kind_rank(&self.kind)))
    }
}

fn kind_rank(kind: &EventKind) -> (u8, usize) {
    match *kind {
        EventKind::Departure => (0, 0),
        EventKind::StateChange(j) => (1, j),
        EventKind::Arrival(i) => (2, i),
    }
}

fn sample_categorical<R: Rng>(rng: &mut R, cumulative: &[f64]) -> usize {
    let u: f64 = rng.random();
    cumulative
        .iter()
        .position(|&c| u < c)
        .unwrap_or(cumulative.len() - 1)
}

fn cumulative(weights: impl Iterator<Item = f64>) -> Vec<f64> {
    weights
        .scan(0.0, |acc, w| {
            *acc += w;
            Some(*acc)
        })
        .collect()
}

struct Engine<'c> {
    config: &'c SystemConfig,
    params: SimParams,
    transition_cdf: Vec<Vec<Vec<f64>>>,
    arrival_clock: Vec<Exp<f64>>,
    service_clock: Exp<f64>,
    state_clock: Vec<Option<Exp<f64>>>,
    rng_arrivals: ChaCha8Rng,
    rng_service: ChaCha8Rng,
    rng_state: ChaCha8Rng,
    rng_content: ChaCha8Rng,

    queue: BinaryHeap<Scheduled>,
    true_states: Vec<usize>,
    monitor_states: Vec<usize>,
    freshest_generation: Vec<f64>,
    busy: bool,
    buffered: bool,
    in_service: Packet,
    buffer: Packet,
    incoming: Packet,
    departed: Packet,

    last_event: f64,
    age_integral: Vec<f64>,
    mismatch_time: Vec<f64>,
    last_departure: Option<f64>,
    y_sum: f64,
    y_sq_sum: f64,
    y_count: u64,
    counts: SimCounts,
}

impl<'c> Engine<'c> {
    fn new(config: &'c SystemConfig, params: SimParams, replication: u64) -> Self {
        let m = config.num_processes();
        let mut rng_init = stream_rng(params.seed, replication, StreamRole::Init);
        let transition_cdf: Vec<Vec<Vec<f64>>> = config
            .processes()
            .iter()
            .map(|p| {
                p.transition()
                    .row_iter()
                    .map(|row| cumulative(row.iter().copied()))
                    .collect()
            })
            .collect();
        let true_states: Vec<usize> = config
            .processes()
            .iter()
            .map(|p| {
                sample_categorical(
                    &mut rng_init,
                    &cumulative(p.stationary().as_slice().iter().copied()),
                )
            })
            .collect();
        let state_clock = config
            .processes()
            .iter()
            .map(|p| {
                let z = p.state_change_rate();
                (z > 0.0).then(|| Exp::new(z).expect("positive rate"))
            })
            .collect();
        Engine {
            config,
            params,
            transition_cdf,
            arrival_clock: config
                .sensor_rates()
                .iter()
                .map(|&l| Exp::new(l).expect("validated rate"))
                .collect(),
            service_clock: Exp::new(config.service_rate()).expect("validated rate"),
            state_clock,
            rng_arrivals: stream_rng(params.seed, replication, StreamRole::Arrivals),
            rng_service: stream_rng(params.seed, replication, StreamRole::Service),
            rng_state: stream_rng(params.seed, replication, StreamRole::StateChanges),
            rng_content: stream_rng(params.seed, replication, StreamRole::Content),
            queue: BinaryHeap::with_capacity(config.num_sensors() + m + 1),
            monitor_states: true_states.clone(),
            true_states,
            freshest_generation: vec![0.0; m],
            busy: false,
            buffered: false,
            in_service: Packet::empty(m),
            buffer: Packet::empty(m),
            incoming: Packet::empty(m),
            departed: Packet::empty(m),
            last_event: 0.0,
            age_integral: vec![0.0; m],
            mismatch_time: vec![0.0; m],
            last_departure: None,
            y_sum: 0.0,
            y_sq_sum: 0.0,
            y_count: 0,
            counts: SimCounts {
                arrivals: 0,
                drops: 0,
                departures: 0,
                in_flight: 0,
                informative_arrivals: vec![0; m],
                informative_departures: vec![0; m],
            },
        }
    }

    fn snapshot(&self) -> Snapshot<'_> {
        Snapshot {
            true_states: &self.true_states,
            monitor_states: &self.monitor_states,
            in_service: self.busy.then_some(&self.in_service),
            buffered: self.buffered.then_some(&self.buffer),
        }
    }

    /// Integrates age and mismatch over `[last_event, now] ∩ [warmup, ∞)`.
    fn advance(&mut self, now: f64) {
        let a = self.last_event.max(self.params.warmup);
        if now > a {
            let dt = now - a;
            for j in 0..self.true_states.len() {
                let t0 = self.freshest_generation[j];
                self.age_integral[j] += dt * ((a - t0) + (now - t0)) * 0.5;
                if self.true_states[j] != self.monitor_states[j] {
                    self.mismatch_time[j] += dt;
                }
            }
        }
        self.last_event = now;
    }

    fn start_service(&mut self, now: f64) {
        self.busy = true;
        let s = self.service_clock.sample(&mut self.rng_service);
        self.queue.push(Scheduled {
            time: now + s,
            kind: EventKind::Departure,
        });
    }

    fn on_arrival<O: Observer>(&mut self, now: f64, sensor: usize, observer: &mut O) {
        self.counts.arrivals += 1;
        let dt = self.arrival_clock[sensor].sample(&mut self.rng_arrivals);
        self.queue.push(Scheduled {
            time: now + dt,
            kind: EventKind::Arrival(sensor),
        });

        self.incoming.generated_at = now;
        self.incoming.origin_sensor = sensor;
        for j in 0..self.true_states.len() {
            let p = self.config.correlation()[(sensor, j)];
            let carries = self.rng_content.random::<f64>() < p;
            self.incoming.carries[j] = carries.then_some(self.true_states[j]);
            if carries {
                self.counts.informative_arrivals[j] += 1;
            }
        }

        let outcome = if !self.busy {
            std::mem::swap(&mut self.incoming, &mut self.in_service);
            self.start_service(now);
            ArrivalOutcome::Served
        } else if self.params.buffer_capacity == 1 && !self.buffered {
            std::mem::swap(&mut self.incoming, &mut self.buffer);
            self.buffered = true;
            ArrivalOutcome::Buffered
        } else {
            self.counts.drops += 1;
            ArrivalOutcome::Dropped
        };
        let packet = match outcome {
            ArrivalOutcome::Served => &self.in_service,
            ArrivalOutcome::Buffered => &self.buffer,
            ArrivalOutcome::Dropped => &self.incoming,
        };
        observer.on_arrival(now, packet, outcome, &self.snapshot());
    }

    fn on_departure<O: Observer>(&mut self, now: f64, observer: &mut O) {
        self.counts.departures += 1;
        if let Some(prev) = self.last_departure {
            if prev >= self.params.warmup {
                let y = now - prev;
                self.y_sum += y;
                self.y_sq_sum += y * y;
                self.y_count += 1;
            }
        }
        self.last_departure = Some(now);

        std::mem::swap(&mut self.in_service, &mut self.departed);
        self.busy = false;
        for (j, carried) in self.departed.carries.iter().enumerate() {
            if let Some(v) = *carried {
                self.monitor_states[j] = v;
                self.freshest_generation[j] = self.departed.generated_at;
                self.counts.informative_departures[j] += 1;
            }
        }
        if self.buffered {
            std::mem::swap(&mut self.buffer, &mut self.in_service);
            self.buffered = false;
            self.start_service(now);
        }
        observer.on_departure(now, &self.departed, &self.snapshot());
    }

    fn on_state_change<O: Observer>(&mut self, now: f64, j: usize, observer: &mut O) {
        let x = self.true_states[j];
        self.true_states[j] = sample_categorical(&mut self.rng_state, &self.transition_cdf[j][x]);
        if let Some(clock) = &self.state_clock[j] {
            let dt = clock.sample(&mut self.rng_state);
            self.queue.push(Scheduled {
                time: now + dt,
                kind: EventKind::StateChange(j),
            });
        }
        observer.on_state_change(now, j, &self.snapshot());
    }

    fn run<O: Observer>(mut self, observer: &mut O) -> SimMetrics {
        for i in 0..self.config.num_sensors() {
            let dt = self.arrival_clock[i].sample(&mut self.rng_arrivals);
            self.queue.push(Scheduled {
                time: dt,
                kind: EventKind::Arrival(i),
            });
        }
        for j in 0..self.true_states.len() {
            if let Some(clock) = &self.state_clock[j] {
                let dt = clock.sample(&mut self.rng_state);
                self.queue.push(Scheduled {
                    time: dt,
                    kind: EventKind::StateChange(j),
                });
            }
        }

        let horizon = self.params.horizon;
        while let Some(ev) = self.queue.pop() {
            if ev.time > horizon {
                break;
            }
            self.advance(ev.time);
            match ev.kind {
                EventKind::Arrival(i) => self.on_arrival(ev.time, i, observer),
                EventKind::Departure => self.on_departure(ev.time, observer),
                EventKind::StateChange(j) => self.on_state_change(ev.time, j, observer),
            }
        }
        self.advance(horizon);

        let observed = horizon - self.params.warmup;
        self.counts.in_flight = u64::from(self.busy) + u64::from(self.buffered);
        let n = self.y_count.max(1) as f64;
        SimMetrics {
            aoi_mean: self.age_integral.iter().map(|a| a / observed).collect(),
            error_ratio: self
                .mismatch_time
                .iter()
                .map(|e| (e / observed).clamp(0.0, 1.0))
                .collect(),
            counts: self.counts,
            interdeparture: InterdepartureMoments {
                mean: self.y_sum / n,
                second: self.y_sq_sum / n,
            },
            observed_time: observed,
        }
    }
}

/// Runs one replication (replication index 0).
pub fn run_simulation(config: &SystemConfig, params: &SimParams) -> SimMetrics {
    run_with_observer(config, params, &mut ())
}

pub fn run_with_observer<O: Observer>(
    config: &SystemConfig,
    params: &SimParams,
    observer: &mut O,
) -> SimMetrics {
    run_replication(config, params, 0, observer)
}

pub fn run_replication<O: Observer>(
    config: &SystemConfig,
    params: &SimParams,
    replication: u64,
    observer: &mut O,
) -> SimMetrics {
    Engine::new(config, *params, replication).run(observer)
}

/// Sample mean and standard error of the mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_err: f64,
}

impl Estimate {
    /// Order-independent: values are sorted before summing.
    pub fn from_samples(values: &[f64]) -> Self {
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let std_err = if v.len() > 1 {
            let mut dev: Vec<f64> = v.iter().map(|x| (x - mean) * (x - mean)).collect();
            dev.sort_by(f64::total_cmp);
            (dev.iter().sum::<f64>() / (n - 1.0) / n).sqrt()
        } else {
            0.0
        };
        Estimate { mean, std_err }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicatedMetrics {
    pub replications: usize,
    pub aoi_mean: Vec<Estimate>,
    pub aoi_sum: Estimate,
    pub error_ratio: Vec<Estimate>,
    pub interdeparture_mean: Estimate,
    pub interdeparture_second: Estimate,
    pub informative_departure_fraction: Vec<Estimate>,
}

/// Pure reduction over finished runs.
pub fn aggregate(runs: &[SimMetrics]) -> Result<ReplicatedMetrics, SimError> {
    let first = runs.first().ok_or(SimError::NoReplications)?;
    let m = first.aoi_mean.len();
    let per = |f: &dyn Fn(&SimMetrics) -> f64| {
        Estimate::from_samples(&runs.iter().map(f).collect::<Vec<_>>())
    };
    Ok(ReplicatedMetrics {
        replications: runs.len(),
        aoi_mean: (0..m).map(|j| per(&|r| r.aoi_mean[j])).collect(),
        aoi_sum: per(&|r| {
            let mut v = r.aoi_mean.clone();
            v.sort_by(f64::total_cmp);
            v.iter().sum()
        }),
        error_ratio: (0..m).map(|j| per(&|r| r.error_ratio[j])).collect(),
        interdeparture_mean: per(&|r| r.interdeparture.mean),
        interdeparture_second: per(&|r| r.interdeparture.second),
        informative_departure_fraction: (0..m)
            .map(|j| per(&|r| r.informative_departure_fraction(j)))
            .collect(),
    })
}

/// Runs `n_reps` replications in parallel and aggregates them.
pub fn replicate(
    config: &SystemConfig,
    params: &SimParams,
    n_reps: usize,
) -> Result<ReplicatedMetrics, SimError> {
    if n_reps == 0 {
        return Err(SimError::NoReplications);
    }
    let runs: Vec<SimMetrics> = (0..n_reps as u64)
        .into_par_iter()
        .map(|r| run_replication(config, params, r, &mut ()))
        .collect();
    aggregate(&runs)
}

/// Observer writing one CSV row per (event, affected process):
/// `time,event_type,sensor,process,x,y,z`.
///
/// Arrivals and departures touch every process and emit M rows; clock ticks
/// emit one. `x`, `y` and `process` are one-based, `z` is the server phase
/// for that process, and `sensor` is empty for non-arrival events.
pub struct CsvEventLog<W: std::io::Write> {
    out: W,
    error: Option<std::io::Error>,
}

impl<W: std::io::Write> CsvEventLog<W> {
    pub fn new(mut out: W) -> std::io::Result<Self> {
        writeln!(out, "time,event_type,sensor,process,x,y,z")?;
        Ok(CsvEventLog { out, error: None })
    }

    /// Returns the writer, or the first write error encountered.
    pub fn finish(mut self) -> std::io::Result<W> {
        if let Some(e) = self.error.take() {
            return Err(e);
        }
        self.out.flush()?;
        Ok(self.out)
    }

    fn row(
        &mut self,
        time: f64,
        kind: &str,
        sensor: Option<usize>,
        j: usize,
        state: &Snapshot<'_>,
    ) {
        if self.error.is_some() {
            return;
        }
        let sensor = sensor.map(|s| (s + 1).to_string()).unwrap_or_default();
        if let Err(e) = writeln!(
            self.out,
            "{time},{kind},{sensor},{},{},{},{}",
            j + 1,
            state.true_states[j] + 1,
            state.monitor_states[j] + 1,
            state.phase(j).index()
        ) {
            self.error = Some(e);
        }
    }
}

impl<W: std::io::Write> Observer for CsvEventLog<W> {
    fn on_arrival(
        &mut self,
        time: f64,
        packet: &Packet,
        outcome: ArrivalOutcome,
        state: &Snapshot<'_>,
    ) {
        let kind = match outcome {
            ArrivalOutcome::Served => "arrival",
            ArrivalOutcome::Buffered => "arrival_buffered",
            ArrivalOutcome::Dropped => "arrival_dropped",
        };
        for j in 0..state.true_states.len() {
            self.row(time, kind, Some(packet.origin_sensor), j, state);
        }
    }

    fn on_departure(&mut self, time: f64, _packet: &Packet, state: &Snapshot<'_>) {
        for j in 0..state.true_states.len() {
            self.row(time, "departure", None, j, state);
        }
    }

    fn on_state_change(&mut self, time: f64, process: usize, state: &Snapshot<'_>) {
        self.row(time, "state_change", None, process, state);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ProcessModel;
    use nalgebra::DMatrix;

    fn fig_config(l1: f64, pc21: f64) -> SystemConfig {
        let omega = DMatrix::from_row_slice(2, 2, &[0.4, 0.6, 0.3, 0.7]);
        let p = ProcessModel::new(omega, 4.0).unwrap();
        SystemConfig::new(
            vec![l1, 8.0],
            4.0,
            DMatrix::from_row_slice(2, 2, &[1.0, 1.0 - pc21, pc21, 1.0]),
            vec![p.clone(), p],
        )
        .unwrap()
    }

    #[test]
    fn params_validation() {
        assert!(SimParams::new(0.0, 1).is_err());
        assert!(SimParams::new(10.0, 1).unwrap().with_warmup(10.0).is_err());
        assert!(SimParams::new(10.0, 1).unwrap().with_warmup(-1.0).is_err());
        assert_eq!(
            SimParams::new(10.0, 1).unwrap().with_buffer(2),
            Err(SimError::InvalidBuffer(2))
        );
        let p = SimParams::new(1000.0, 7).unwrap();
        assert_eq!(p.warmup, 10.0);
        assert_eq!(p.buffer_capacity, 0);
    }

    #[test]
    fn same_seed_same_metrics() {
        let c = fig_config(2.0, 0.5);
        let p = SimParams::new(2_000.0, 42).unwrap();
        assert_eq!(run_simulation(&c, &p), run_simulation(&c, &p));
        assert_ne!(run_simulation(&c, &p), run_simulation(&c, &p.with_seed(43)));
    }

    #[test]
    fn counts_balance() {
        let c = fig_config(2.0, 0.5);
        for buffer in [0, 1] {
            let p = SimParams::new(5_000.0, 3)
                .unwrap()
                .with_buffer(buffer)
                .unwrap();
            let m = run_simulation(&c, &p);
            let k = &m.counts;
            assert_eq!(k.arrivals, k.drops + k.departures + k.in_flight);
            assert!(m.error_ratio.iter().all(|e| (0.0..=1.0).contains(e)));
            assert!(k.informative_departures.iter().all(|&d| d <= k.departures));
        }
    }

    #[test]
    fn buffer_reduces_drops() {
        let c = fig_config(2.0, 0.5);
        let p0 = SimParams::new(20_000.0, 9).unwrap();
        let p1 = p0.with_buffer(1).unwrap();
        let a = run_simulation(&c, &p0);
        let b = run_simulation(&c, &p1);
        let drop_rate = |m: &SimMetrics| m.counts.drops as f64 / m.counts.arrivals as f64;
        assert!(drop_rate(&b) < drop_rate(&a));
    }

    #[test]
    fn single_replication_matches_run() {
        let c = fig_config(0.5, 0.25);
        let p = SimParams::new(3_000.0, 11).unwrap();
        let single = run_simulation(&c, &p);
        let rep = replicate(&c, &p, 1).unwrap();
        for j in 0..2 {
            assert_eq!(rep.aoi_mean[j].mean, single.aoi_mean[j]);
            assert_eq!(rep.error_ratio[j].mean, single.error_ratio[j]);
            assert_eq!(rep.aoi_mean[j].std_err, 0.0);
        }
        assert_eq!(rep.interdeparture_mean.mean, single.interdeparture.mean);
    }

    #[test]
    fn aggregation_is_order_independent() {
        let c = fig_config(2.0, 0.5);
        let p = SimParams::new(1_000.0, 5).unwrap();
        let runs: Vec<SimMetrics> = (0..7)
            .map(|r| run_replication(&c, &p, r, &mut ()))
            .collect();
        let mut shuffled = runs.clone();
        shuffled.reverse();
        shuffled.swap(1, 4);
        assert_eq!(aggregate(&runs).unwrap(), aggregate(&shuffled).unwrap());
        assert_eq!(aggregate(&[]), Err(SimError::NoReplications));
    }

    #[test]
    fn replication_streams_differ() {
        let a = stream_rng(1, 0, StreamRole::Arrivals).random::<u64>();
        let b = stream_rng(1, 1, StreamRole::Arrivals).random::<u64>();
        let c = stream_rng(1, 0, StreamRole::Service).random::<u64>();
        assert!(a != b && a != c && b != c);
        assert_eq!(a, stream_rng(1, 0, StreamRole::Arrivals).random::<u64>());
    }

    #[test]
    fn event_log_has_header_and_rows() {
        let c = fig_config(2.0, 0.5);
        let p = SimParams::new(5.0, 1).unwrap();
        let mut log = CsvEventLog::new(Vec::new()).unwrap();
        run_with_observer(&c, &p, &mut log);
        let text = String::from_utf8(log.finish().unwrap()).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("time,event_type,sensor,process,x,y,z"));
        let rows: Vec<&str> = lines.collect();
        assert!(!rows.is_empty());
        for r in rows {
            assert_eq!(r.split(',').count(), 7, "{r}");
        }
    }
}
