//! Monte Carlo sweeps over beacon power or circuit power.
//!
//! Each `(k, realization)` pair draws one topology and channel set, which is
//! reused for every axis value and every scheme so that scheme comparisons
//! are paired. Work units run in parallel; aggregation walks them in a fixed
//! order, so the output does not depend on the number of workers.

use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{solve_noma_fixed_wet, solve_tdma_fixed_wet};
use crate::error::{Error, Result};
use crate::model::{dbm_to_watts, mix_seed, mw_to_watts, sample_instance, DeviceDefaults, Instance, SystemParams};
use crate::noma::solve_noma;
use crate::report::{Scheme, SolveReport};
use crate::roots::DEFAULT_TOL;
use crate::tdma::solve_tdma;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    PbPowerDbm,
    CircuitPowerMw,
}

impl SweepAxis {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepAxis::PbPowerDbm => "pb_power_dbm",
            SweepAxis::CircuitPowerMw => "circuit_power_mw",
        }
    }

    fn apply(self, inst: &Instance, value: f64) -> Result<Instance> {
        match self {
            SweepAxis::PbPowerDbm => inst.with_pb_power(dbm_to_watts(value)),
            SweepAxis::CircuitPowerMw => inst.with_circuit_power(mw_to_watts(value)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub base: SystemParams,
    pub device_defaults: DeviceDefaults,
    pub axis: SweepAxis,
    pub axis_values: Vec<f64>,
    pub k_values: Vec<usize>,
    pub num_realizations: usize,
    pub base_seed: u64,
    pub schemes: Vec<Scheme>,
    #[serde(default = "default_tol")]
    pub tol: f64,
}

fn default_tol() -> f64 {
    DEFAULT_TOL
}

impl SweepSpec {
    /// Beacon power 28..=40 dBm in 2 dB steps, ten devices.
    pub fn pb_power_sweep(num_realizations: usize, base_seed: u64) -> Self {
        SweepSpec {
            base: SystemParams::default(),
            device_defaults: DeviceDefaults::default(),
            axis: SweepAxis::PbPowerDbm,
            axis_values: (0..=6).map(|i| 28.0 + 2.0 * i as f64).collect(),
            k_values: vec![10],
            num_realizations,
            base_seed,
            schemes: Scheme::ALL.to_vec(),
            tol: DEFAULT_TOL,
        }
    }

    /// Circuit power 0..=0.5 mW in 0.05 mW steps for 10 and 50 devices.
    pub fn circuit_power_sweep(num_realizations: usize, base_seed: u64) -> Self {
        SweepSpec {
            axis: SweepAxis::CircuitPowerMw,
            axis_values: (0..=10).map(|i| 0.05 * i as f64).collect(),
            k_values: vec![10, 50],
            ..SweepSpec::pb_power_sweep(num_realizations, base_seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        if self.axis_values.is_empty() {
            return Err(Error::invalid("axis_values", "must not be empty"));
        }
        if self.axis_values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("axis_values", "must be finite"));
        }
        if !self.axis_values.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::invalid("axis_values", "must be strictly increasing"));
        }
        if self.axis == SweepAxis::CircuitPowerMw && self.axis_values[0] < 0.0 {
            return Err(Error::invalid("axis_values", "circuit power must be >= 0"));
        }
        if self.k_values.is_empty() || self.k_values.contains(&0) {
            return Err(Error::invalid("k_values", "must be non-empty positive integers"));
        }
        if self.num_realizations == 0 {
            return Err(Error::invalid("num_realizations", "must be at least 1"));
        }
        if self.schemes.is_empty() {
            return Err(Error::invalid("schemes", "must not be empty"));
        }
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(Error::invalid("tol", "must lie in (0, 1)"));
        }
        Ok(())
    }

    /// Seed of the channel draw shared by every axis value and scheme.
    pub fn channel_seed(&self, k: usize, realization: usize) -> u64 {
        mix_seed(self.base_seed, &[k as u64, realization as u64])
    }
}

/// Aggregate over the realizations of one `(scheme, k, axis_value)` cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub scheme: Scheme,
    pub k: usize,
    pub axis_value: f64,
    pub mean_throughput_bits_per_hz: f64,
    pub mean_energy_joules: f64,
    pub mean_tau0_seconds: f64,
    pub mean_ul_time_seconds: f64,
    /// Realizations whose solve failed; excluded from the means.
    pub num_infeasible: usize,
    pub mean_solver_iterations: f64,
    pub max_kkt_residual: f64,
}

pub const SWEEP_COLUMNS: [&str; 10] = [
    "scheme",
    "k",
    "axis_value",
    "mean_throughput_bits_per_hz",
    "mean_energy_joules",
    "mean_tau0_seconds",
    "mean_ul_time_seconds",
    "num_infeasible",
    "mean_solver_iterations",
    "max_kkt_residual",
];

/// Runs one scheme on one instance.
pub fn solve_scheme(scheme: Scheme, inst: &Instance, tol: f64) -> Result<SolveReport> {
    let half = inst.horizon() / 2.0;
    Ok(match scheme {
        Scheme::TdmaOpt => solve_tdma(inst, tol)?.1,
        Scheme::NomaOpt => solve_noma(inst, tol)?.1,
        Scheme::TdmaFixed => solve_tdma_fixed_wet(inst, half, tol)?.1,
        Scheme::NomaFixed => solve_noma_fixed_wet(inst, half, tol)?.1,
    })
}

#[derive(Debug, Clone, Copy)]
struct Outcome {
    throughput: f64,
    energy: f64,
    tau0: f64,
    ul_time: f64,
    iterations: f64,
    kkt: f64,
}

/// Results of one `(k, realization)` unit, indexed `[axis][scheme]`.
type UnitResult = Vec<Vec<Option<Outcome>>>;

fn run_unit(spec: &SweepSpec, k: usize, realization: usize) -> UnitResult {
    let seed = spec.channel_seed(k, realization);
    let mut params = spec.base.clone();
    params.num_devices = k;
    let base = match sample_instance(&params, &spec.device_defaults, seed) {
        Ok(inst) => inst,
        Err(e) => {
            log::warn!("k={k} realization={realization} seed={seed}: channel draw failed: {e}");
            return vec![vec![None; spec.schemes.len()]; spec.axis_values.len()];
        }
    };
    spec.axis_values
        .iter()
        .map(|&value| {
            let inst = match spec.axis.apply(&base, value) {
                Ok(inst) => inst,
                Err(e) => {
                    log::warn!("seed={seed} {}={value}: {e}", spec.axis.as_str());
                    return vec![None; spec.schemes.len()];
                }
            };
            spec.schemes
                .iter()
                .map(|&scheme| match solve_scheme(scheme, &inst, spec.tol) {
                    Ok(r) => Some(Outcome {
                        throughput: r.objective_bits_per_hz,
                        energy: r.energy_joules,
                        tau0: r.tau0_seconds,
                        ul_time: r.ul_time_seconds,
                        iterations: r.iterations_outer as f64 + r.iterations_inner as f64,
                        kkt: r.kkt.max_relative(inst.horizon()),
                    }),
                    Err(e) => {
                        log::warn!(
                            "{scheme} k={k} realization={realization} seed={seed} {}={value}: {e}",
                            spec.axis.as_str()
                        );
                        None
                    }
                })
                .collect()
        })
        .collect()
}

/// Runs the sweep on `jobs` worker threads (all cores when `None`).
pub fn run_sweep(spec: &SweepSpec, jobs: Option<usize>) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    let units: Vec<(usize, usize)> = spec
        .k_values
        .iter()
        .flat_map(|&k| (0..spec.num_realizations).map(move |i| (k, i)))
        .collect();
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = jobs {
        builder = builder.num_threads(n.max(1));
    }
    let pool = builder
        .build()
        .map_err(|e| Error::invalid("jobs", e.to_string()))?;
    let results: Vec<UnitResult> =
        pool.install(|| units.par_iter().map(|&(k, i)| run_unit(spec, k, i)).collect());

    let mut rows = Vec::new();
    for (s_idx, &scheme) in spec.schemes.iter().enumerate() {
        for &k in &spec.k_values {
            for (a_idx, &axis_value) in spec.axis_values.iter().enumerate() {
                let cell = units
                    .iter()
                    .zip(&results)
                    .filter(|((uk, _), _)| *uk == k)
                    .map(|(_, r)| r[a_idx][s_idx]);
                rows.push(aggregate(scheme, k, axis_value, cell));
            }
        }
    }
    rows.sort_by(|a, b| {
        (a.scheme, a.k)
            .cmp(&(b.scheme, b.k))
            .then(a.axis_value.total_cmp(&b.axis_value))
    });
    Ok(rows)
}

fn aggregate(
    scheme: Scheme,
    k: usize,
    axis_value: f64,
    cell: impl Iterator<Item = Option<Outcome>>,
) -> SweepRow {
    let mut n = 0usize;
    let mut failed = 0usize;
    let mut sum = [0.0f64; 5];
    let mut max_kkt: f64 = 0.0;
    for outcome in cell {
        match outcome {
            Some(o) => {
                n += 1;
                sum[0] += o.throughput;
                sum[1] += o.energy;
                sum[2] += o.tau0;
                sum[3] += o.ul_time;
                sum[4] += o.iterations;
                max_kkt = max_kkt.max(o.kkt);
            }
            None => failed += 1,
        }
    }
    let mean = |s: f64| if n > 0 { s / n as f64 } else { f64::NAN };
    SweepRow {
        scheme,
        k,
        axis_value,
        mean_throughput_bits_per_hz: mean(sum[0]),
        mean_energy_joules: mean(sum[1]),
        mean_tau0_seconds: mean(sum[2]),
        mean_ul_time_seconds: mean(sum[3]),
        num_infeasible: failed,
        mean_solver_iterations: mean(sum[4]),
        max_kkt_residual: if n > 0 { max_kkt } else { f64::NAN },
    }
}

/// 17 significant digits, enough to round-trip any `f64`.
fn render(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes `rows` as CSV with a header of [`SWEEP_COLUMNS`].
pub fn emit_csv<W: Write>(rows: &[SweepRow], destination: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(destination);
    w.write_record(SWEEP_COLUMNS)?;
    for r in rows {
        w.write_record([
            r.scheme.as_str().to_string(),
            r.k.to_string(),
            render(r.axis_value),
            render(r.mean_throughput_bits_per_hz),
            render(r.mean_energy_joules),
            render(r.mean_tau0_seconds),
            render(r.mean_ul_time_seconds),
            r.num_infeasible.to_string(),
            render(r.mean_solver_iterations),
            render(r.max_kkt_residual),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads rows written by [`emit_csv`].
pub fn parse_csv<R: Read>(source: R) -> Result<Vec<SweepRow>> {
    let mut r = csv::Reader::from_reader(source);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != SWEEP_COLUMNS {
        return Err(Error::invalid("header", format!("unexpected columns {header:?}")));
    }
    let num = |s: &str, field: &str| -> Result<f64> {
        s.parse()
            .map_err(|_| Error::invalid(field, format!("not a number: `{s}`")))
    };
    let int = |s: &str, field: &str| -> Result<usize> {
        s.parse()
            .map_err(|_| Error::invalid(field, format!("not an integer: `{s}`")))
    };
    r.records()
        .map(|rec| {
            let rec = rec?;
            Ok(SweepRow {
                scheme: rec[0].parse()?,
                k: int(&rec[1], "k")?,
                axis_value: num(&rec[2], "axis_value")?,
                mean_throughput_bits_per_hz: num(&rec[3], "mean_throughput_bits_per_hz")?,
                mean_energy_joules: num(&rec[4], "mean_energy_joules")?,
                mean_tau0_seconds: num(&rec[5], "mean_tau0_seconds")?,
                mean_ul_time_seconds: num(&rec[6], "mean_ul_time_seconds")?,
                num_infeasible: int(&rec[7], "num_infeasible")?,
                mean_solver_iterations: num(&rec[8], "mean_solver_iterations")?,
                max_kkt_residual: num(&rec[9], "max_kkt_residual")?,
            })
        })
        .collect()
}
