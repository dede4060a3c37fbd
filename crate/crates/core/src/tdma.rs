//! Optimal energy-transfer / uplink time split for TDMA.
//!
//! With energy causality tight, the problem is concave in `(τ0, τ_1..τ_K)`.
//! Writing `y_k = p_k γ_k` for the received SNR and `c_k = p_c,k γ_k`, the
//! stationarity conditions decouple into
//!
//! * per device: `log2(1 + y_k) - (y_k + c_k) log2(e) / (1 + y_k) = λ`
//! * for `τ0`:   `Σ_k D_k log2(e) / (1 + y_k) = λ`, with `D_k = η_k P_E h_k γ_k`
//!
//! The solver bisects on the dual variable `λ` (outer loop) and inverts the
//! per-device equation by bisection (inner loop).

use std::cell::Cell;
use std::f64::consts::{LN_2, LOG2_E};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Instance;
use crate::report::{KktResiduals, Scheme, SolveReport};
use crate::roots::solve_increasing;

/// Residual reported when a stationarity condition cannot be evaluated
/// (zero energy-transfer time or an unscheduled device).
pub const UNDEFINED_STATIONARITY: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TdmaAllocation {
    pub tau0: f64,
    pub tau: Vec<f64>,
    pub powers: Vec<f64>,
}

impl TdmaAllocation {
    pub fn ul_time(&self) -> f64 {
        self.tau.iter().sum()
    }

    pub fn zeros(k: usize) -> Self {
        TdmaAllocation {
            tau0: 0.0,
            tau: vec![0.0; k],
            powers: vec![0.0; k],
        }
    }

    /// `Σ τ_k log2(1 + p_k γ_k)`.
    pub fn throughput(&self, inst: &Instance) -> f64 {
        self.tau
            .iter()
            .zip(&self.powers)
            .zip(inst.devices())
            .map(|((&t, &p), d)| crate::model::rate_tdma(t, p, d.gamma()))
            .sum()
    }
}

/// Dual variable and per-device SNRs at the solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TdmaSolverState {
    pub lambda: f64,
    /// Received SNR `y_k = p_k γ_k`.
    pub snr: Vec<f64>,
    /// `x_k = y_k + p_c,k γ_k`.
    pub x: Vec<f64>,
    pub iterations_outer: u32,
    pub iterations_inner: u64,
    /// Dual balance at the returned `λ`, relative to `λ`.
    pub residual: f64,
}

fn stationarity_nat(y: f64, c: f64) -> f64 {
    y.ln_1p() - (y + c) / (1.0 + y)
}

/// `f(y) = log2(1 + y) - (y + c) log2(e) / (1 + y)`, the derivative of a
/// device's throughput with respect to its own slot length.
pub fn user_stationarity(y: f64, c: f64) -> f64 {
    stationarity_nat(y, c) * LOG2_E
}

/// Solves `user_stationarity(y, c) = lambda` for `y >= 0`.
///
/// The left side is strictly increasing, so the root is unique. With
/// `lambda = 0` and `c = 0` the root is `y = 0`.
pub fn invert_user_stationarity(lambda: f64, c: f64, tol: f64) -> Result<crate::roots::Root> {
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::Domain {
            what: "lambda",
            value: lambda,
        });
    }
    if !(c.is_finite() && c >= 0.0) {
        return Err(Error::Domain {
            what: "circuit snr",
            value: c,
        });
    }
    let target = lambda * LN_2;
    solve_increasing(|y| stationarity_nat(y, c) - target, tol)
}

struct DualEval {
    balance: f64,
    snr: Vec<f64>,
    inner_iterations: u64,
}

fn eval_dual(lambda: f64, energy: &[f64], circuit: &[f64], tol: f64) -> Result<DualEval> {
    let mut sum = 0.0;
    let mut snr = Vec::with_capacity(energy.len());
    let mut inner_iterations = 0u64;
    for (&d, &c) in energy.iter().zip(circuit) {
        let root = invert_user_stationarity(lambda, c, tol)?;
        inner_iterations += root.iterations as u64;
        sum += d / (1.0 + root.value);
        snr.push(root.value);
    }
    Ok(DualEval {
        balance: sum * LOG2_E - lambda,
        snr,
        inner_iterations,
    })
}

/// `H(λ) = Σ_k D_k log2(e) / (1 + y_k(λ)) - λ`; strictly decreasing in `λ`.
pub fn dual_balance(lambda: f64, inst: &Instance, tol: f64) -> Result<f64> {
    Ok(eval_dual(lambda, &inst.energy_snrs(), &inst.circuit_snrs(), tol)?.balance)
}

pub(crate) fn check_instance(inst: &Instance) -> Result<()> {
    if inst.is_empty() {
        return Err(Error::Degenerate("instance has no devices".into()));
    }
    for (k, d) in inst.devices().iter().enumerate() {
        if d.gamma().is_nan() || d.gamma() <= 0.0 {
            return Err(Error::Degenerate(format!("device {k} has gamma {}", d.gamma())));
        }
    }
    Ok(())
}

/// Finds the `λ >= 0` at which `Σ_k τ_k(λ)` is balanced, where `balance`
/// is any strictly decreasing function of `λ` built from the per-device
/// inversions. Returns the final evaluation.
pub(crate) fn solve_dual<F>(tol: f64, mut balance: F) -> Result<(f64, DualSolve)>
where
    F: FnMut(f64) -> Result<(f64, Vec<f64>, u64)>,
{
    let inner = Cell::new(0u64);
    let mut failure: Option<Error> = None;
    let outer = solve_increasing(
        |lambda| match balance(lambda) {
            Ok((b, _, it)) => {
                inner.set(inner.get() + it);
                -b
            }
            Err(e) => {
                failure.get_or_insert(e);
                f64::NAN
            }
        },
        tol,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    let outer = outer?;
    let (b, snr, it) = balance(outer.value)?;
    Ok((
        outer.value,
        DualSolve {
            balance: b,
            snr,
            outer_iterations: outer.iterations,
            inner_iterations: inner.get() + it,
        },
    ))
}

pub(crate) struct DualSolve {
    pub balance: f64,
    pub snr: Vec<f64>,
    pub outer_iterations: u32,
    pub inner_iterations: u64,
}

/// Globally optimal TDMA allocation.
pub fn solve_tdma(inst: &Instance, tol: f64) -> Result<(TdmaAllocation, SolveReport)> {
    let (alloc, report, _) = solve_tdma_detailed(inst, tol)?;
    Ok((alloc, report))
}

/// As [`solve_tdma`], also returning the dual state.
pub fn solve_tdma_detailed(
    inst: &Instance,
    tol: f64,
) -> Result<(TdmaAllocation, SolveReport, TdmaSolverState)> {
    check_instance(inst)?;
    let energy = inst.energy_snrs();
    let circuit = inst.circuit_snrs();
    let (lambda, dual) = solve_dual(tol, |lambda| {
        let ev = eval_dual(lambda, &energy, &circuit, tol)?;
        Ok((ev.balance, ev.snr, ev.inner_iterations))
    })?;

    let x: Vec<f64> = dual.snr.iter().zip(&circuit).map(|(y, c)| y + c).collect();
    let ratios: Vec<f64> = energy.iter().zip(&x).map(|(d, x)| d / x).collect();
    let horizon = inst.horizon();
    let tau0 = horizon / (1.0 + ratios.iter().sum::<f64>());
    let tau: Vec<f64> = ratios.iter().map(|r| r * tau0).collect();
    for (k, &t) in tau.iter().enumerate() {
        if t.is_nan() || t <= 0.0 {
            log::warn!("device {k} received no uplink time at the TDMA optimum");
        }
    }
    let powers: Vec<f64> = dual
        .snr
        .iter()
        .zip(inst.devices())
        .map(|(y, d)| y / d.gamma())
        .collect();
    let alloc = TdmaAllocation { tau0, tau, powers };

    let objective: f64 = alloc
        .tau
        .iter()
        .zip(&dual.snr)
        .map(|(t, y)| t * y.ln_1p())
        .sum::<f64>()
        * LOG2_E;
    let mut report = SolveReport::new(Scheme::TdmaOpt, inst, objective, tau0, alloc.ul_time());
    report.iterations_outer = dual.outer_iterations;
    report.iterations_inner = dual.inner_iterations;
    report.kkt = kkt_residuals(&alloc, inst);

    let state = TdmaSolverState {
        lambda,
        snr: dual.snr,
        x,
        iterations_outer: dual.outer_iterations,
        iterations_inner: dual.inner_iterations,
        residual: if lambda > 0.0 {
            dual.balance.abs() / lambda
        } else {
            dual.balance.abs()
        },
    };
    Ok((alloc, report, state))
}

pub(crate) fn causality_slack(consumed: f64, harvested: f64) -> f64 {
    if harvested > 0.0 {
        (consumed - harvested).abs() / harvested
    } else {
        consumed.abs()
    }
}

/// Re-evaluates the optimality system of the TDMA problem at `alloc`.
pub fn kkt_residuals(alloc: &TdmaAllocation, inst: &Instance) -> KktResiduals {
    let horizon = inst.horizon();
    let pe = inst.pb_power();
    let budget_slack_seconds = (horizon - alloc.tau0 - alloc.ul_time()).abs();

    let causality = inst
        .devices()
        .iter()
        .zip(alloc.tau.iter().zip(&alloc.powers))
        .map(|(d, (&t, &p))| {
            causality_slack((p + d.circuit_power_watts()) * t, d.harvest_rate(pe) * alloc.tau0)
        })
        .fold(0.0, f64::max);

    let stationarity = if alloc.tau0 > 0.0 && alloc.tau.iter().all(|&t| t > 0.0) {
        let snr: Vec<(f64, f64)> = inst
            .devices()
            .iter()
            .zip(&alloc.tau)
            .map(|(d, &t)| {
                let x = d.energy_snr(pe) * alloc.tau0 / t;
                (x - d.circuit_snr(), d.circuit_snr())
            })
            .collect();
        let lambda_hat: f64 = inst
            .devices()
            .iter()
            .zip(&snr)
            .map(|(d, (y, _))| d.energy_snr(pe) / (1.0 + y))
            .sum::<f64>()
            * LOG2_E;
        snr.iter()
            .map(|&(y, c)| (user_stationarity(y, c) - lambda_hat).abs() / lambda_hat)
            .fold(0.0, f64::max)
    } else {
        UNDEFINED_STATIONARITY
    };

    KktResiduals {
        stationarity,
        budget_slack_seconds,
        causality_slack: causality,
    }
}
