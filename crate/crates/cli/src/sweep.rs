//! `VAR:LO:HI:N[:log]` sweep specifications.
//!
//! Variable indices are one-based, matching the `aoi_J`/`err_J` CSV
//! columns: `lambda_I` (sensor I's rate), `mu`, `zeta_J` (process J's
//! state-change rate), `pc_I_J` (one correlation entry) and `p`, which sets
//! every diagonal correlation entry to 1 and every off-diagonal one to
//! 1 − p on a square correlation matrix.

use std::fmt;
use std::str::FromStr;

use aoi_corr::{ModelError, SystemConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVar {
    SensorRate(usize),
    ServiceRate,
    StateChangeRate(usize),
    Correlation(usize, usize),
    Symmetric,
}

impl fmt::Display for SweepVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            SweepVar::SensorRate(i) => write!(f, "lambda_{}", i + 1),
            SweepVar::ServiceRate => write!(f, "mu"),
            SweepVar::StateChangeRate(j) => write!(f, "zeta_{}", j + 1),
            SweepVar::Correlation(i, j) => write!(f, "pc_{}_{}", i + 1, j + 1),
            SweepVar::Symmetric => write!(f, "p"),
        }
    }
}

fn one_based(s: &str, what: &str) -> Result<usize, String> {
    let k: usize = s
        .parse()
        .map_err(|_| format!("{what} index `{s}` is not a positive integer"))?;
    k.checked_sub(1)
        .ok_or_else(|| format!("{what} index must be at least 1"))
}

impl FromStr for SweepVar {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split('_').collect();
        match parts.as_slice() {
            ["mu"] => Ok(SweepVar::ServiceRate),
            ["p"] => Ok(SweepVar::Symmetric),
            ["lambda", i] => Ok(SweepVar::SensorRate(one_based(i, "sensor")?)),
            ["zeta", j] => Ok(SweepVar::StateChangeRate(one_based(j, "process")?)),
            ["pc", i, j] => Ok(SweepVar::Correlation(
                one_based(i, "sensor")?,
                one_based(j, "process")?,
            )),
            _ => Err(format!(
                "unknown sweep variable `{s}` (expected lambda_I, mu, zeta_J, pc_I_J or p)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSpec {
    pub var: SweepVar,
    pub lo: f64,
    pub hi: f64,
    pub steps: usize,
    pub log: bool,
}

impl FromStr for SweepSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let (var, lo, hi, steps, log) = match parts.as_slice() {
            [v, lo, hi, n] => (v, lo, hi, n, false),
            [v, lo, hi, n, "log"] => (v, lo, hi, n, true),
            [_, _, _, _, other] => {
                return Err(format!("unknown sweep scale `{other}` (only `log`)"))
            }
            _ => return Err(format!("sweep `{s}` is not VAR:LO:HI:N[:log]")),
        };
        let number = |x: &str| {
            x.parse::<f64>()
                .map_err(|_| format!("`{x}` is not a number"))
        };
        let spec = SweepSpec {
            var: var.parse()?,
            lo: number(lo)?,
            hi: number(hi)?,
            steps: n_steps(steps)?,
            log,
        };
        if !(spec.lo.is_finite() && spec.hi.is_finite()) || spec.lo == spec.hi {
            return Err("sweep range must be finite and nonempty (LO ≠ HI)".into());
        }
        if spec.log && !(spec.lo > 0.0 && spec.hi > 0.0) {
            return Err("log sweeps need positive endpoints".into());
        }
        Ok(spec)
    }
}

fn n_steps(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(n) if n >= 2 => Ok(n),
        _ => Err(format!("step count `{s}` must be an integer ≥ 2")),
    }
}

impl SweepSpec {
    /// Grid values, endpoints included exactly.
    pub fn values(&self) -> Vec<f64> {
        let last = (self.steps - 1) as f64;
        (0..self.steps)
            .map(|k| {
                if k + 1 == self.steps {
                    self.hi
                } else if self.log {
                    let (a, b) = (self.lo.log10(), self.hi.log10());
                    10f64.powf(a + (b - a) * k as f64 / last)
                } else {
                    self.lo + (self.hi - self.lo) * k as f64 / last
                }
            })
            .collect()
    }

    /// Checks that the variable exists in `config`.
    pub fn check_target(&self, config: &SystemConfig) -> Result<(), String> {
        let (n, m) = (config.num_sensors(), config.num_processes());
        match self.var {
            SweepVar::SensorRate(i) if i >= n => {
                Err(format!("{}: config has {n} sensors", self.var))
            }
            SweepVar::StateChangeRate(j) if j >= m => {
                Err(format!("{}: config has {m} processes", self.var))
            }
            SweepVar::Correlation(i, j) if i >= n || j >= m => {
                Err(format!("{}: correlation matrix is {n}x{m}", self.var))
            }
            SweepVar::Symmetric if n != m => {
                Err(format!("p: correlation matrix is {n}x{m}, not square"))
            }
            _ => Ok(()),
        }
    }

    /// `config` with the swept variable set to `value`, revalidated.
    pub fn apply(&self, config: &SystemConfig, value: f64) -> Result<SystemConfig, ModelError> {
        match self.var {
            SweepVar::SensorRate(i) => {
                let mut rates = config.sensor_rates().to_vec();
                rates[i] = value;
                config.with_sensor_rates(rates)
            }
            SweepVar::ServiceRate => config.with_service_rate(value),
            SweepVar::StateChangeRate(j) => {
                config.with_process(j, config.process(j).with_state_change_rate(value)?)
            }
            SweepVar::Correlation(i, j) => {
                let mut pc = config.correlation().clone();
                pc[(i, j)] = value;
                config.with_correlation(pc)
            }
            SweepVar::Symmetric => {
                let pc =
                    config
                        .correlation()
                        .map_with_location(|i, j, _| if i == j { 1.0 } else { 1.0 - value });
                config.with_correlation(pc)
            }
        }
    }
}
