//! Subcommand implementations.
//!
//! CSV schemas (indices one-based):
//!
//! - `sweep`: `sweep_var,value,aoi_1..aoi_M,err_1..err_M`; an infinite age
//!   is written `inf` and an undefined error ratio (untracked process) `nan`.
//! - `compare`: `metric,process,analytic,simulated,std_err,abs_diff,rel_diff,tolerance,status`
//!   where `status` is `pass`, `fail` or `skip` (untracked process).
//! - `optimize --sweep`: `sweep_var,value,objective,p_1_1..p_N_M` with the
//!   allocation in row-major order.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use aoi_corr::aoi::{analyze as analyze_aoi, interdeparture_moments};
use aoi_corr::error::{error_ratio, ChainDump, ErrorRatioError};
use aoi_corr::model::derive_rates;
use aoi_corr::opt::{
    solve_closed_form, solve_grid_with, AgeObjective, AllocationResult, ConstraintFamily,
    ConstraintKind, ErrorSumObjective, DEFAULT_MAX_GRID_POINTS,
};
use aoi_corr::sim::{
    aggregate, run_replication, CsvEventLog, ReplicatedMetrics, SimMetrics, SimParams,
};
use aoi_corr::{DerivedRates, Extended, SystemConfig};
use rayon::prelude::*;
use serde::Serialize;

use crate::args::{Cli, Command, MethodChoice, ObjectiveKind, SimOptions};
use crate::config::{load_config, ConfigFile};
use crate::sweep::SweepSpec;
use crate::CliError;

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Analyze { common, dump_chain } => {
            let config = load_config(&common.config)?;
            let report = analyze(&config, dump_chain)?;
            emit(common.out.as_deref(), &to_json(&report))
        }
        Command::Simulate {
            common,
            sim,
            buffer,
            event_log,
        } => {
            let config = load_config(&common.config)?;
            let params = sim_params(&sim)?.with_buffer(buffer)?;
            let report = simulate(&config, params, sim.reps, event_log.as_deref())?;
            emit(common.out.as_deref(), &to_json(&report))
        }
        Command::Compare {
            common,
            sim,
            tolerance,
        } => {
            let config = load_config(&common.config)?;
            if !(tolerance.is_finite() && tolerance >= 0.0) {
                return Err(CliError::Usage(format!(
                    "tolerance {tolerance} must be nonnegative"
                )));
            }
            let rows = compare(&config, sim_params(&sim)?, sim.reps, tolerance)?;
            emit(common.out.as_deref(), &compare_csv(&rows))?;
            let failed = rows.iter().filter(|r| r.status == Status::Fail).count();
            if failed > 0 {
                return Err(CliError::ToleranceExceeded {
                    failed,
                    total: rows.len(),
                });
            }
            Ok(())
        }
        Command::Sweep { common, sweep } => {
            let config = load_config(&common.config)?;
            emit(common.out.as_deref(), &sweep_csv(&config, &sweep)?)
        }
        Command::Optimize {
            common,
            family,
            budgets,
            step,
            objective,
            method,
            sweep,
        } => {
            let config = load_config(&common.config)?;
            let family = ConstraintFamily::new(family.into(), budgets)?;
            let request = OptimizeRequest {
                family,
                step,
                objective,
                method,
            };
            let text = match sweep {
                None => to_json(&OptimizeReport {
                    family: request.family.kind(),
                    budgets: request.family.budgets().to_vec(),
                    objective: objective_name(objective),
                    sensor_rates: config.sensor_rates().to_vec(),
                    result: request.solve(&config)?,
                }),
                Some(spec) => optimize_sweep_csv(&config, &request, &spec)?,
            };
            emit(common.out.as_deref(), &text)
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    let (result, path) = match out {
        Some(path) => (std::fs::write(path, text), path.display().to_string()),
        None => (
            std::io::stdout().write_all(text.as_bytes()),
            "<stdout>".to_string(),
        ),
    };
    result.map_err(|source| CliError::Io { path, source })
}

#[derive(Debug, Serialize)]
pub struct ProcessReport {
    pub process: usize,
    pub aoi: Extended,
    /// `None` for an untracked process.
    pub error_ratio: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct AnalyzeReport {
    pub config: ConfigFile,
    pub derived: DerivedRates,
    pub interdeparture: aoi_corr::aoi::InterdepartureMoments,
    pub processes: Vec<ProcessReport>,
    pub aoi_sum: Extended,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chains: Option<Vec<Option<ChainDump>>>,
}

/// ε_j per process; `None` where the process is untracked.
fn error_ratios(
    config: &SystemConfig,
) -> Result<Vec<Option<aoi_corr::error::ErrorResult>>, CliError> {
    (0..config.num_processes())
        .into_par_iter()
        .map(|j| match error_ratio(config, j) {
            Ok(r) => Ok(Some(r)),
            Err(ErrorRatioError::Untracked { .. }) => Ok(None),
            Err(e) => Err(CliError::from(e)),
        })
        .collect()
}

pub fn analyze(config: &SystemConfig, dump_chain: bool) -> Result<AnalyzeReport, CliError> {
    let ages = analyze_aoi(config);
    let errors = error_ratios(config)?;
    Ok(AnalyzeReport {
        config: ConfigFile::from_system(config),
        derived: derive_rates(config),
        interdeparture: ages.moments,
        processes: ages
            .per_process
            .iter()
            .zip(&errors)
            .enumerate()
            .map(|(j, (&aoi, e))| ProcessReport {
                process: j + 1,
                aoi,
                error_ratio: e.as_ref().map(|r| r.epsilon),
            })
            .collect(),
        aoi_sum: ages.sum,
        chains: dump_chain.then(|| {
            errors
                .iter()
                .map(|e| e.as_ref().map(|r| r.chain.dump()))
                .collect()
        }),
    })
}

fn sim_params(sim: &SimOptions) -> Result<SimParams, CliError> {
    if sim.reps == 0 {
        return Err(CliError::Usage("--reps must be at least 1".into()));
    }
    let params = SimParams::new(sim.horizon, sim.seed)?;
    Ok(match sim.warmup {
        Some(w) => params.with_warmup(w)?,
        None => params,
    })
}

#[derive(Debug, Serialize)]
pub struct SimulateReport {
    pub config: ConfigFile,
    pub params: SimParams,
    pub summary: ReplicatedMetrics,
    pub runs: Vec<SimMetrics>,
}

fn run_all(config: &SystemConfig, params: &SimParams, reps: usize) -> Vec<SimMetrics> {
    (0..reps as u64)
        .into_par_iter()
        .map(|r| run_replication(config, params, r, &mut ()))
        .collect()
}

pub fn simulate(
    config: &SystemConfig,
    params: SimParams,
    reps: usize,
    event_log: Option<&Path>,
) -> Result<SimulateReport, CliError> {
    let runs = match event_log {
        Some(path) => {
            if reps != 1 {
                return Err(CliError::Usage("--event-log requires --reps 1".into()));
            }
            let io_err = |source| CliError::Io {
                path: path.display().to_string(),
                source,
            };
            let file = File::create(path).map_err(io_err)?;
            let mut log = CsvEventLog::new(BufWriter::new(file)).map_err(io_err)?;
            let metrics = run_replication(config, &params, 0, &mut log);
            log.finish().map_err(io_err)?.flush().map_err(io_err)?;
            vec![metrics]
        }
        None => run_all(config, &params, reps),
    };
    Ok(SimulateReport {
        config: ConfigFile::from_system(config),
        params,
        summary: aggregate(&runs)?,
        runs,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    Skip,
}

#[derive(Debug, Clone)]
pub struct CompareRow {
    pub metric: &'static str,
    pub process: Option<usize>,
    pub analytic: f64,
    pub simulated: f64,
    pub std_err: f64,
    pub tolerance: f64,
    /// Whether the tolerance applies to the absolute difference.
    pub absolute: bool,
    pub status: Status,
}

impl CompareRow {
    fn new(
        metric: &'static str,
        process: Option<usize>,
        analytic: Option<f64>,
        estimate: aoi_corr::sim::Estimate,
        tolerance: f64,
        absolute: bool,
    ) -> Self {
        let mut row = CompareRow {
            metric,
            process,
            analytic: analytic.unwrap_or(f64::NAN),
            simulated: estimate.mean,
            std_err: estimate.std_err,
            tolerance,
            absolute,
            status: Status::Skip,
        };
        if analytic.is_some() {
            let diff = if absolute {
                row.abs_diff()
            } else {
                row.rel_diff()
            };
            row.status = if diff <= tolerance {
                Status::Pass
            } else {
                Status::Fail
            };
        }
        row
    }

    pub fn abs_diff(&self) -> f64 {
        (self.simulated - self.analytic).abs()
    }

    pub fn rel_diff(&self) -> f64 {
        self.abs_diff() / self.analytic.abs()
    }
}

pub fn compare(
    config: &SystemConfig,
    params: SimParams,
    reps: usize,
    tolerance: f64,
) -> Result<Vec<CompareRow>, CliError> {
    let ages = analyze_aoi(config);
    let errors = error_ratios(config)?;
    let rates = derive_rates(config);
    let summary = aggregate(&run_all(config, &params, reps))?;
    let moments = interdeparture_moments(rates.total_rate, config.service_rate());

    let mut rows = Vec::new();
    for j in 0..config.num_processes() {
        rows.push(CompareRow::new(
            "aoi",
            Some(j + 1),
            ages.per_process[j].finite(),
            summary.aoi_mean[j],
            tolerance,
            false,
        ));
    }
    for j in 0..config.num_processes() {
        rows.push(CompareRow::new(
            "error_ratio",
            Some(j + 1),
            errors[j].as_ref().map(|r| r.epsilon),
            summary.error_ratio[j],
            tolerance,
            true,
        ));
    }
    for j in 0..config.num_processes() {
        let p = rates.informative_probs[j];
        rows.push(CompareRow::new(
            "informative_fraction",
            Some(j + 1),
            (p > 0.0).then_some(p),
            summary.informative_departure_fraction[j],
            tolerance,
            false,
        ));
    }
    rows.push(CompareRow::new(
        "interdeparture_mean",
        None,
        Some(moments.mean),
        summary.interdeparture_mean,
        tolerance,
        false,
    ));
    rows.push(CompareRow::new(
        "interdeparture_second",
        None,
        Some(moments.second),
        summary.interdeparture_second,
        tolerance,
        false,
    ));
    Ok(rows)
}

/// CSV number literal: `inf`, `-inf` and `nan` for the non-finite values.
fn csv_num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        x.to_string()
    }
}

pub fn compare_csv(rows: &[CompareRow]) -> String {
    let mut out = String::from(
        "metric,process,analytic,simulated,std_err,abs_diff,rel_diff,tolerance,status\n",
    );
    for r in rows {
        let status = match r.status {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Skip => "skip",
        };
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.metric,
            r.process.map(|j| j.to_string()).unwrap_or_default(),
            csv_num(r.analytic),
            csv_num(r.simulated),
            csv_num(r.std_err),
            csv_num(r.abs_diff()),
            csv_num(r.rel_diff()),
            csv_num(r.tolerance),
            status
        ));
    }
    out
}

fn sweep_configs(
    config: &SystemConfig,
    spec: &SweepSpec,
) -> Result<Vec<(f64, SystemConfig)>, CliError> {
    spec.check_target(config).map_err(CliError::Usage)?;
    spec.values()
        .into_iter()
        .map(|v| Ok((v, spec.apply(config, v)?)))
        .collect()
}

pub fn sweep_csv(config: &SystemConfig, spec: &SweepSpec) -> Result<String, CliError> {
    let m = config.num_processes();
    let points = sweep_configs(config, spec)?;
    let rows: Vec<String> = points
        .par_iter()
        .map(|(value, c)| {
            let ages = analyze_aoi(c);
            let errors = error_ratios(c)?;
            let mut fields = vec![spec.var.to_string(), value.to_string()];
            fields.extend(ages.per_process.iter().map(|a| a.to_string()));
            fields.extend(
                errors
                    .iter()
                    .map(|e| e.as_ref().map_or(f64::NAN, |r| r.epsilon))
                    .map(csv_num),
            );
            Ok(fields.join(","))
        })
        .collect::<Result<_, CliError>>()?;
    let mut header = vec!["sweep_var".to_string(), "value".to_string()];
    header.extend((1..=m).map(|j| format!("aoi_{j}")));
    header.extend((1..=m).map(|j| format!("err_{j}")));
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        out.push_str(&row);
        out.push('\n');
    }
    Ok(out)
}

fn objective_name(kind: ObjectiveKind) -> &'static str {
    match kind {
        ObjectiveKind::Aoi => "aoi",
        ObjectiveKind::Error => "error",
    }
}

#[derive(Debug, Serialize)]
pub struct OptimizeReport {
    pub family: ConstraintKind,
    pub budgets: Vec<f64>,
    pub objective: &'static str,
    pub sensor_rates: Vec<f64>,
    pub result: AllocationResult,
}

pub struct OptimizeRequest {
    pub family: ConstraintFamily,
    pub step: f64,
    pub objective: ObjectiveKind,
    pub method: MethodChoice,
}

impl OptimizeRequest {
    pub fn solve(&self, config: &SystemConfig) -> Result<AllocationResult, CliError> {
        let rates = config.sensor_rates();
        let m = config.num_processes();
        let has_closed_form = self.family.kind() != ConstraintKind::QuadraticConcave;
        let closed_form = match (self.method, self.objective) {
            (MethodChoice::ClosedForm, ObjectiveKind::Error) => {
                return Err(CliError::Usage(
                    "no closed form for the error objective; use --method grid".into(),
                ))
            }
            (MethodChoice::ClosedForm, ObjectiveKind::Aoi) => {
                if !has_closed_form {
                    return Err(CliError::Usage(format!(
                        "no closed form for the {:?} family; use --method grid",
                        self.family.kind()
                    )));
                }
                true
            }
            (MethodChoice::Auto, ObjectiveKind::Aoi) => has_closed_form,
            _ => false,
        };
        let result = if closed_form {
            solve_closed_form(&self.family, rates, m)?
        } else {
            match self.objective {
                ObjectiveKind::Aoi => solve_grid_with(
                    &self.family,
                    rates,
                    m,
                    self.step,
                    &AgeObjective::new(rates),
                    DEFAULT_MAX_GRID_POINTS,
                )?,
                ObjectiveKind::Error => solve_grid_with(
                    &self.family,
                    rates,
                    m,
                    self.step,
                    &ErrorSumObjective::new(config)?,
                    DEFAULT_MAX_GRID_POINTS,
                )?,
            }
        };
        Ok(result)
    }
}

pub fn optimize_sweep_csv(
    config: &SystemConfig,
    request: &OptimizeRequest,
    spec: &SweepSpec,
) -> Result<String, CliError> {
    let (n, m) = (config.num_sensors(), config.num_processes());
    let points = sweep_configs(config, spec)?;
    let rows: Vec<String> = points
        .par_iter()
        .map(|(value, c)| {
            let r = request.solve(c)?;
            let mut fields = vec![
                spec.var.to_string(),
                value.to_string(),
                r.objective.to_string(),
            ];
            for i in 0..n {
                for j in 0..m {
                    fields.push(r.allocation[(i, j)].to_string());
                }
            }
            Ok(fields.join(","))
        })
        .collect::<Result<_, CliError>>()?;
    let mut out = String::from("sweep_var,value,objective");
    for i in 1..=n {
        for j in 1..=m {
            out.push_str(&format!(",p_{i}_{j}"));
        }
    }
    out.push('\n');
    for row in rows {
        out.push_str(&row);
        out.push('\n');
    }
    Ok(out)
}
