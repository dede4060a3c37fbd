//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 on a failed verification or a runtime error,
//! 2 on a usage or configuration error (the message names the field).

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::baselines::{solve_noma_fixed_wet, solve_tdma_fixed_wet};
use crate::bench::{emit_csv, run_sweep, SweepSpec};
use crate::config::{parse_params, parse_solve_config, parse_sweep_spec, read_json};
use crate::error::{Error, Result};
use crate::model::sample_topology;
use crate::noma::solve_noma;
use crate::report::{Scheme, SolveReport};
use crate::tdma::solve_tdma;
use crate::verify::suite::{run_suite, SuiteOptions, CHECKS};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

/// Environment variable giving the default worker count.
pub const JOBS_ENV: &str = "WPCN_JOBS";

#[derive(Debug, Parser)]
#[command(name = "wpcn", version, about = "Time and power allocation for wireless powered TDMA and NOMA uplinks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve one instance and print the report as JSON.
    Solve {
        #[arg(long)]
        config: PathBuf,
        /// tdma_opt, noma_opt, tdma_fixed or noma_fixed.
        #[arg(long)]
        scheme: String,
        /// Also write the report to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a Monte Carlo sweep and write CSV.
    Sweep {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Worker threads; defaults to all cores.
        #[arg(long, env = JOBS_ENV)]
        jobs: Option<usize>,
    },
    /// Run the randomized theorem and oracle checks.
    Verify {
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 3)]
        k_max: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Relative tolerance for equality claims.
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        /// Leading trials with K <= 3 that also run the grid oracles.
        #[arg(long, default_value_t = SuiteOptions::default().oracle_trials)]
        oracle_trials: usize,
        #[arg(long, env = JOBS_ENV)]
        jobs: Option<usize>,
        /// Also write the JSON report to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Draw a topology and fading realization and print it as JSON.
    Topology {
        /// System parameters; defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: u64,
    },
}

#[derive(Serialize)]
struct SolveOutput<A: Serialize> {
    #[serde(flatten)]
    report: SolveReport,
    allocation: A,
}

/// Parses `args` (including the program name) and runs the command.
pub fn cli_main<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(err, "{}", e.render());
            return e.exit_code();
        }
    };
    match run(cli.command, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            if e.is_config_error() {
                EXIT_CONFIG
            } else {
                EXIT_FAILURE
            }
        }
    }
}

fn run(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    match command {
        Command::Solve {
            config,
            scheme,
            out: file,
        } => {
            let scheme: Scheme = scheme.parse()?;
            let cfg = parse_solve_config(&read_json(&config)?)?;
            let inst = &cfg.instance;
            let tau0 = cfg.fixed_tau0.unwrap_or(inst.horizon() / 2.0);
            let doc = match scheme {
                Scheme::TdmaOpt => to_doc(solve_tdma(inst, cfg.tol)?),
                Scheme::NomaOpt => to_doc(solve_noma(inst, cfg.tol)?),
                Scheme::TdmaFixed => to_doc(solve_tdma_fixed_wet(inst, tau0, cfg.tol)?),
                Scheme::NomaFixed => to_doc(solve_noma_fixed_wet(inst, tau0, cfg.tol)?),
            }?;
            emit_json(&doc, out, file.as_deref())?;
            Ok(EXIT_OK)
        }
        Command::Sweep { spec, out: file, jobs } => {
            check_jobs(jobs)?;
            let spec = parse_sweep_spec(&read_json(&spec)?)?;
            let rows = run_sweep(&spec, jobs)?;
            let infeasible: usize = rows.iter().map(|r| r.num_infeasible).sum();
            emit_csv(&rows, BufWriter::new(File::create(&file)?))?;
            write_metadata(&spec, &file)?;
            writeln!(
                err,
                "wrote {} rows to {} ({infeasible} infeasible solves)",
                rows.len(),
                file.display()
            )?;
            Ok(EXIT_OK)
        }
        Command::Verify {
            trials,
            k_max,
            seed,
            tol,
            oracle_trials,
            jobs,
            out: file,
        } => {
            check_jobs(jobs)?;
            let opts = SuiteOptions {
                trials,
                k_max,
                seed,
                tol,
                oracle_trials,
            };
            opts.validate()?;
            let mut builder = rayon::ThreadPoolBuilder::new();
            if let Some(n) = jobs {
                builder = builder.num_threads(n);
            }
            let pool = builder
                .build()
                .map_err(|e| Error::invalid("jobs", e.to_string()))?;
            let report = pool.install(|| run_suite(&opts))?;
            for (c, (_, meaning)) in report.checks.iter().zip(CHECKS) {
                writeln!(
                    err,
                    "{:<4} {:<32} {:>5} instances, {} failures, worst {:.3e} ({meaning})",
                    match (c.pass, c.gating) {
                        (true, _) => "PASS",
                        (false, true) => "FAIL",
                        (false, false) => "NOTE",
                    },
                    c.name,
                    c.instances,
                    c.failures,
                    c.worst
                )?;
            }
            if report.construction_slot_violations > 0 {
                writeln!(
                    err,
                    "note: {} constructions had a slot outside (0, tau1)",
                    report.construction_slot_violations
                )?;
            }
            emit_json(&serde_json::to_value(&report)?, out, file.as_deref())?;
            Ok(if report.pass { EXIT_OK } else { EXIT_FAILURE })
        }
        Command::Topology { config, seed } => {
            let params = match config {
                Some(path) => parse_params(&read_json(&path)?)?,
                None => crate::model::SystemParams::default(),
            };
            let real = sample_topology(&params, seed)?;
            emit_json(&serde_json::to_value(&real)?, out, None)?;
            Ok(EXIT_OK)
        }
    }
}

fn to_doc<A: Serialize>((allocation, report): (A, SolveReport)) -> Result<serde_json::Value> {
    Ok(serde_json::to_value(SolveOutput { report, allocation })?)
}

fn check_jobs(jobs: Option<usize>) -> Result<()> {
    match jobs {
        Some(0) => Err(Error::invalid("jobs", "must be at least 1")),
        _ => Ok(()),
    }
}

fn emit_json(doc: &serde_json::Value, out: &mut dyn Write, file: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(doc)?;
    writeln!(out, "{text}")?;
    if let Some(path) = file {
        std::fs::write(path, text + "\n")?;
    }
    Ok(())
}

/// Sidecar `<out>.meta.json` recording the spec and the seeding scheme.
fn write_metadata(spec: &SweepSpec, csv_path: &Path) -> Result<()> {
    let mut name = csv_path.as_os_str().to_owned();
    name.push(".meta.json");
    let meta = serde_json::json!({
        "spec": spec,
        "channel_seed": "mix_seed(base_seed, [k, realization])",
        "channels_shared_across_axis_values": true,
        "channels_shared_across_schemes": true,
        "fixed_split_tau0": "horizon_seconds / 2",
        "means_exclude_infeasible": true,
    });
    std::fs::write(name, serde_json::to_string_pretty(&meta)? + "\n")?;
    Ok(())
}
