//! Reference schemes: fixed energy-transfer time with optimized uplink, and
//! the transmit-power-limited comparison without energy harvesting.

use std::f64::consts::LOG2_E;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{rate_tdma, Instance};
use crate::noma::{uplink_ratio_cap, NomaAllocation};
use crate::report::{KktResiduals, Scheme, SolveReport};
use crate::tdma::{
    causality_slack, check_instance, invert_user_stationarity, solve_dual, user_stationarity,
    TdmaAllocation,
};

fn check_tau0(inst: &Instance, tau0: f64) -> Result<()> {
    if !(tau0 > 0.0 && tau0 < inst.horizon()) {
        return Err(Error::invalid(
            "tau0",
            format!("must lie in (0, {}), got {tau0}", inst.horizon()),
        ));
    }
    Ok(())
}

/// TDMA with `τ0` pinned; slot lengths and powers are still optimal.
///
/// When every device draws circuit power, the unconstrained slot lengths can
/// fit inside `T_max - τ0`; the budget is then left inactive.
pub fn solve_tdma_fixed_wet(
    inst: &Instance,
    tau0: f64,
    tol: f64,
) -> Result<(TdmaAllocation, SolveReport)> {
    check_instance(inst)?;
    check_tau0(inst, tau0)?;
    let energy = inst.energy_snrs();
    let circuit = inst.circuit_snrs();
    let budget = inst.horizon() - tau0;

    let slots = |lambda: f64| -> Result<(f64, Vec<f64>, u64)> {
        let mut used = 0.0;
        let mut snr = Vec::with_capacity(energy.len());
        let mut it = 0u64;
        for (&d, &c) in energy.iter().zip(&circuit) {
            let root = invert_user_stationarity(lambda, c, tol)?;
            it += root.iterations as u64;
            used += d * tau0 / (root.value + c);
            snr.push(root.value);
        }
        Ok((used - budget, snr, it))
    };

    let (free_excess, free_snr, free_it) = slots(0.0)?;
    let (lambda, snr, outer, inner) = if free_excess <= 0.0 {
        log::info!(
            "fixed-WET TDMA leaves {:.3e} s of uplink time unused",
            -free_excess
        );
        (0.0, free_snr, 1, free_it)
    } else {
        let (lambda, dual) = solve_dual(tol, slots)?;
        (lambda, dual.snr, dual.outer_iterations, dual.inner_iterations + free_it)
    };

    let tau: Vec<f64> = energy
        .iter()
        .zip(&circuit)
        .zip(&snr)
        .map(|((d, c), y)| d * tau0 / (y + c))
        .collect();
    let powers: Vec<f64> = snr.iter().zip(inst.devices()).map(|(y, d)| y / d.gamma()).collect();
    let objective: f64 = tau.iter().zip(&snr).map(|(t, y)| t * y.ln_1p()).sum::<f64>() * LOG2_E;
    let alloc = TdmaAllocation { tau0, tau, powers };

    let mut report = SolveReport::new(Scheme::TdmaFixed, inst, objective, tau0, alloc.ul_time());
    report.iterations_outer = outer;
    report.iterations_inner = inner;
    report.budget_active = lambda > 0.0;
    report.kkt = fixed_tdma_residuals(&alloc, inst, lambda);
    Ok((alloc, report))
}

/// Every scheduled device must sit at the common marginal value `lambda`;
/// the budget may only be slack when `lambda = 0`.
fn fixed_tdma_residuals(alloc: &TdmaAllocation, inst: &Instance, lambda: f64) -> KktResiduals {
    let pe = inst.pb_power();
    let budget = inst.horizon() - alloc.tau0;
    let used = alloc.ul_time();
    let budget_slack_seconds = if lambda > 0.0 {
        (budget - used).abs()
    } else {
        (used - budget).max(0.0)
    };
    let mut stationarity: f64 = 0.0;
    let mut causality: f64 = 0.0;
    for ((d, &t), &p) in inst.devices().iter().zip(&alloc.tau).zip(&alloc.powers) {
        causality = causality.max(causality_slack(
            (p + d.circuit_power_watts()) * t,
            d.harvest_rate(pe) * alloc.tau0,
        ));
        if t > 0.0 {
            let y = d.energy_snr(pe) * alloc.tau0 / t - d.circuit_snr();
            let f = user_stationarity(y, d.circuit_snr());
            stationarity = stationarity.max((f - lambda).abs() / lambda.max(1.0));
        }
    }
    KktResiduals {
        stationarity,
        budget_slack_seconds,
        causality_slack: causality,
    }
}

/// NOMA with `τ0` pinned and the shared uplink time optimized.
///
/// The throughput is concave in `τ̄1`; its stationary point is clamped to the
/// time budget and to the largest uplink time that keeps every transmit
/// power non-negative.
pub fn solve_noma_fixed_wet(
    inst: &Instance,
    tau0: f64,
    tol: f64,
) -> Result<(NomaAllocation, SolveReport)> {
    check_instance(inst)?;
    check_tau0(inst, tau0)?;
    let pe = inst.pb_power();
    let c_sum: f64 = inst.circuit_snrs().iter().sum();
    let d_sum: f64 = inst.energy_snrs().iter().sum();
    let budget = inst.horizon() - tau0;
    let (cap, cap_device) = uplink_ratio_cap(inst);

    let root = invert_user_stationarity(0.0, c_sum, tol)?;
    let stationary = if root.value + c_sum > 0.0 {
        d_sum * tau0 / (root.value + c_sum)
    } else {
        f64::INFINITY
    };
    let cap_time = cap * tau0;
    let tau1 = stationary.min(budget).min(cap_time);
    let at_cap = tau1 == cap_time;
    if tau1 < budget {
        log::info!(
            "fixed-WET NOMA leaves {:.3e} s of uplink time unused",
            budget - tau1
        );
    }

    let powers: Vec<f64> = inst
        .devices()
        .iter()
        .enumerate()
        .map(|(k, d)| {
            if at_cap && Some(k) == cap_device {
                0.0
            } else {
                (d.harvest_rate(pe) * tau0 / tau1 - d.circuit_power_watts()).max(0.0)
            }
        })
        .collect();
    let snr = (d_sum * tau0 / tau1 - c_sum).max(0.0);
    let objective = tau1 * snr.ln_1p() * LOG2_E;
    let alloc = NomaAllocation { tau0, tau1, powers };

    let mut report = SolveReport::new(Scheme::NomaFixed, inst, objective, tau0, tau1);
    report.iterations_outer = root.iterations;
    report.budget_active = tau1 == budget;
    report.bottleneck_device = if at_cap { cap_device } else { None };

    // dR/dτ̄1 must vanish in the interior and be >= 0 on either bound
    let slope = user_stationarity(snr, c_sum);
    let scale = 1.0 + snr.ln_1p() * LOG2_E;
    let interior = tau1 < budget && !at_cap;
    report.kkt = KktResiduals {
        stationarity: if interior { slope.abs() } else { (-slope).max(0.0) } / scale,
        budget_slack_seconds: if report.budget_active { 0.0 } else { (tau1 - budget).max(0.0) },
        causality_slack: inst
            .devices()
            .iter()
            .zip(&alloc.powers)
            .map(|(d, &p)| {
                causality_slack((p + d.circuit_power_watts()) * tau1, d.harvest_rate(pe) * tau0)
            })
            .fold(0.0, f64::max),
    };
    Ok((alloc, report))
}

/// Rates and transmit energies with fixed powers and no energy causality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLimitedRecord {
    pub r_tdma: f64,
    pub r_noma: f64,
    pub e_tdma: f64,
    pub e_noma: f64,
}

/// Equal TDMA slots `T_max / K`.
pub fn default_tau_split(inst: &Instance) -> Vec<f64> {
    let k = inst.len();
    vec![inst.horizon() / k as f64; k]
}

/// Compares TDMA over `tau_split` against NOMA over the whole horizon when
/// each device transmits at a fixed power.
pub fn power_limited_comparison(
    inst: &Instance,
    powers: &[f64],
    tau_split: &[f64],
) -> Result<PowerLimitedRecord> {
    let k = inst.len();
    if powers.len() != k {
        return Err(Error::invalid("powers", format!("expected {k} entries, got {}", powers.len())));
    }
    if tau_split.len() != k {
        return Err(Error::invalid(
            "tau_split",
            format!("expected {k} entries, got {}", tau_split.len()),
        ));
    }
    if powers.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
        return Err(Error::invalid("powers", "must be finite and >= 0"));
    }
    if tau_split.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(Error::invalid("tau_split", "must be finite and >= 0"));
    }
    let horizon = inst.horizon();
    let total: f64 = tau_split.iter().sum();
    if total > horizon * (1.0 + 1e-12) {
        return Err(Error::invalid(
            "tau_split",
            format!("slots sum to {total}, more than the horizon {horizon}"),
        ));
    }
    let r_tdma = tau_split
        .iter()
        .zip(powers)
        .zip(inst.devices())
        .map(|((&t, &p), d)| rate_tdma(t, p, d.gamma()))
        .sum();
    let snr: f64 = powers.iter().zip(inst.devices()).map(|(p, d)| p * d.gamma()).sum();
    Ok(PowerLimitedRecord {
        r_tdma,
        r_noma: horizon * snr.ln_1p() * LOG2_E,
        e_tdma: tau_split.iter().zip(powers).map(|(t, p)| t * p).sum(),
        e_noma: horizon * powers.iter().sum::<f64>(),
    })
}
