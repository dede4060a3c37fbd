//! Optimal energy-transfer / uplink time split for NOMA with SIC.
//!
//! With energy causality tight, the sum throughput depends on the devices only
//! through `C = Σ p_c,k γ_k` and `D = Σ η_k P_E h_k γ_k`, which turns the
//! problem into a single-device TDMA problem. Its stationary point is the
//! unique root of
//!
//! `G(y) = log2(1 + y) - (y + C + D) log2(e) / (1 + y)`
//!
//! and fixes the ratio `τ̄1 / τ0 = D / (y + C)`.
//!
//! That reduction drops the requirement `p_k >= 0`. A device whose harvest
//! rate is small relative to its circuit power would need negative transmit
//! power at the stationary point. Keeping every `p_k >= 0` is equivalent to
//! the single linear cut `τ̄1 <= β τ0` with `β = min_k η_k P_E h_k / p_c,k`,
//! so [`solve_noma`] returns the stationary point when it satisfies the cut
//! and otherwise the vertex where the cut meets the time budget. At that
//! vertex the weakest device only powers its circuit. [`solve_noma_relaxed`]
//! keeps the stationary point and reports an infeasible device instead.

use std::f64::consts::LOG2_E;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Instance;
use crate::report::{KktResiduals, Scheme, SolveReport};
use crate::roots::solve_increasing;
use crate::tdma::{causality_slack, check_instance, UNDEFINED_STATIONARITY};

/// Relative tolerance below which a negative transmit power is rounding noise.
pub const NEGATIVE_POWER_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NomaAllocation {
    pub tau0: f64,
    /// Shared uplink time `τ̄1`.
    pub tau1: f64,
    pub powers: Vec<f64>,
}

impl NomaAllocation {
    pub fn zeros(k: usize) -> Self {
        NomaAllocation {
            tau0: 0.0,
            tau1: 0.0,
            powers: vec![0.0; k],
        }
    }

    pub fn throughput(&self, inst: &Instance) -> f64 {
        crate::model::noma_sum_rate(self.tau1, &self.powers, inst)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NomaSolverState {
    /// Sum received SNR `Σ p_k γ_k` at the returned allocation.
    pub snr: f64,
    /// Root `y⋆` of the stationarity equation.
    pub stationary_snr: f64,
    /// `x⋆ = y⋆ + C`.
    pub x: f64,
    pub c_sum: f64,
    pub d_sum: f64,
    /// `τ̄1 / τ0` at the stationary point.
    pub stationary_ratio: f64,
    /// Largest `τ̄1 / τ0` keeping every transmit power non-negative.
    pub ratio_cap: f64,
    pub bottleneck_device: Option<usize>,
    pub iterations: u32,
}

/// `G(y)` in bits; strictly increasing with `G(0) = -(C + D) log2(e)`.
pub fn noma_root_function(y: f64, c_sum: f64, d_sum: f64) -> f64 {
    (y.ln_1p() - (y + c_sum + d_sum) / (1.0 + y)) * LOG2_E
}

/// `β = min_k η_k P_E h_k / p_c,k` and the device attaining it; infinite when
/// no device draws circuit power.
pub fn uplink_ratio_cap(inst: &Instance) -> (f64, Option<usize>) {
    let pe = inst.pb_power();
    inst.devices()
        .iter()
        .enumerate()
        .filter(|(_, d)| d.circuit_power_watts() > 0.0)
        .map(|(k, d)| (d.harvest_rate(pe) / d.circuit_power_watts(), Some(k)))
        .fold((f64::INFINITY, None), |best, cur| if cur.0 < best.0 { cur } else { best })
}

/// Longest shared uplink time any energy-causal NOMA allocation can use,
/// `min_k η_k P_E h_k / (p_c,k + η_k P_E h_k) · T_max`.
pub fn worst_user_bound(inst: &Instance) -> f64 {
    let pe = inst.pb_power();
    inst.devices()
        .iter()
        .map(|d| {
            let e = d.harvest_rate(pe);
            e / (d.circuit_power_watts() + e)
        })
        .fold(1.0, f64::min)
        * inst.horizon()
}

struct Stationary {
    y: f64,
    c_sum: f64,
    d_sum: f64,
    iterations: u32,
}

fn stationary_point(inst: &Instance, tol: f64) -> Result<Stationary> {
    check_instance(inst)?;
    let c_sum: f64 = inst.circuit_snrs().iter().sum();
    let d_sum: f64 = inst.energy_snrs().iter().sum();
    if !(d_sum > 0.0 && d_sum.is_finite()) {
        return Err(Error::Degenerate(format!("total energy SNR is {d_sum}")));
    }
    let s = c_sum + d_sum;
    let root = solve_increasing(|y| y.ln_1p() - (y + s) / (1.0 + y), tol)?;
    Ok(Stationary {
        y: root.value,
        c_sum,
        d_sum,
        iterations: root.iterations,
    })
}

/// Allocation with uplink-to-transfer ratio `ratio` on the full time budget.
fn allocation_at_ratio(inst: &Instance, ratio: f64) -> NomaAllocation {
    let pe = inst.pb_power();
    let tau0 = inst.horizon() / (1.0 + ratio);
    let tau1 = ratio * tau0;
    let powers = inst
        .devices()
        .iter()
        .map(|d| d.harvest_rate(pe) / ratio - d.circuit_power_watts())
        .collect();
    NomaAllocation { tau0, tau1, powers }
}

fn finish(
    inst: &Instance,
    scheme: Scheme,
    alloc: NomaAllocation,
    snr: f64,
    iterations: u32,
    bottleneck: Option<usize>,
) -> SolveReport {
    let objective = alloc.tau1 * snr.ln_1p() * LOG2_E;
    let mut report = SolveReport::new(scheme, inst, objective, alloc.tau0, alloc.tau1);
    report.iterations_outer = iterations;
    report.kkt = noma_kkt_residuals(&alloc, inst);
    report.bottleneck_device = bottleneck;
    report
}

/// Optimal NOMA allocation with every transmit power non-negative.
pub fn solve_noma(inst: &Instance, tol: f64) -> Result<(NomaAllocation, SolveReport)> {
    let (alloc, report, _) = solve_noma_detailed(inst, tol)?;
    Ok((alloc, report))
}

pub fn solve_noma_detailed(
    inst: &Instance,
    tol: f64,
) -> Result<(NomaAllocation, SolveReport, NomaSolverState)> {
    let st = stationary_point(inst, tol)?;
    let x = st.y + st.c_sum;
    let stationary_ratio = st.d_sum / x;
    let (cap, cap_device) = uplink_ratio_cap(inst);

    let (ratio, snr, bottleneck) = if stationary_ratio <= cap {
        (stationary_ratio, st.y, None)
    } else {
        // Σ_k (D_k/β - c_k) with every term >= 0 by definition of β
        let snr = (st.d_sum / cap - st.c_sum).max(0.0);
        (cap, snr, cap_device)
    };
    let mut alloc = allocation_at_ratio(inst, ratio);
    for (k, p) in alloc.powers.iter_mut().enumerate() {
        if Some(k) == bottleneck {
            *p = 0.0;
        } else if *p < 0.0 {
            let scale = inst.devices()[k].harvest_rate(inst.pb_power()) / ratio;
            if *p < -NEGATIVE_POWER_TOL * scale {
                return Err(Error::InfeasibleDevice { device: k, power: *p });
            }
            *p = 0.0;
        }
    }
    let report = finish(inst, Scheme::NomaOpt, alloc.clone(), snr, st.iterations, bottleneck);
    let state = NomaSolverState {
        snr,
        stationary_snr: st.y,
        x,
        c_sum: st.c_sum,
        d_sum: st.d_sum,
        stationary_ratio,
        ratio_cap: cap,
        bottleneck_device: bottleneck,
        iterations: st.iterations,
    };
    Ok((alloc, report, state))
}

/// Stationary point of the aggregate problem without the `p_k >= 0` cut.
///
/// Fails with [`Error::InfeasibleDevice`] when some device would need
/// negative transmit power.
pub fn solve_noma_relaxed(inst: &Instance, tol: f64) -> Result<(NomaAllocation, SolveReport)> {
    let st = stationary_point(inst, tol)?;
    let ratio = st.d_sum / (st.y + st.c_sum);
    let mut alloc = allocation_at_ratio(inst, ratio);
    let pe = inst.pb_power();
    for (k, p) in alloc.powers.iter_mut().enumerate() {
        if *p < 0.0 {
            let scale = inst.devices()[k].harvest_rate(pe) / ratio;
            if *p < -NEGATIVE_POWER_TOL * scale {
                return Err(Error::InfeasibleDevice { device: k, power: *p });
            }
            *p = 0.0;
        }
    }
    let report = finish(inst, Scheme::NomaOpt, alloc.clone(), st.y, st.iterations, None);
    Ok((alloc, report))
}

/// Optimality diagnostics for a NOMA allocation.
///
/// With `a = ∂R/∂τ0` and `b = ∂R/∂τ̄1`, an interior point needs `a = b`.
/// When the ratio cut `τ̄1 <= β τ0` binds, its multiplier is
/// `(b - a) / (1 + β)`, so only `b >= a` is required.
pub fn noma_kkt_residuals(alloc: &NomaAllocation, inst: &Instance) -> KktResiduals {
    let pe = inst.pb_power();
    let budget_slack_seconds = (inst.horizon() - alloc.tau0 - alloc.tau1).abs();
    let causality = inst
        .devices()
        .iter()
        .zip(&alloc.powers)
        .map(|(d, &p)| {
            causality_slack((p + d.circuit_power_watts()) * alloc.tau1, d.harvest_rate(pe) * alloc.tau0)
        })
        .fold(0.0, f64::max);

    let stationarity = if alloc.tau0 > 0.0 && alloc.tau1 > 0.0 {
        let c_sum: f64 = inst.circuit_snrs().iter().sum();
        let d_sum: f64 = inst.energy_snrs().iter().sum();
        let ratio = alloc.tau1 / alloc.tau0;
        let y = d_sum / ratio - c_sum;
        let a = d_sum * LOG2_E / (1.0 + y);
        let b = y.ln_1p() * LOG2_E - (y + c_sum) * LOG2_E / (1.0 + y);
        let (cap, _) = uplink_ratio_cap(inst);
        if ratio >= cap * (1.0 - 1e-9) {
            (a - b).max(0.0) / a
        } else {
            (b - a).abs() / a
        }
    } else {
        UNDEFINED_STATIONARITY
    };

    KktResiduals {
        stationarity,
        budget_slack_seconds,
        causality_slack: causality,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{rate_noma_per_user, DeviceDefaults, SystemParams};
    use crate::tdma::tests::{normalized, rel, R_STAR, TAU0_STAR, TAU1_STAR, Y_STAR};
    use crate::tdma::solve_tdma;

    #[test]
    fn root_function_boundary_and_root() {
        assert!(rel(noma_root_function(0.0, 1.0, 2.0), -3.0 * LOG2_E) < 1e-15);
        assert!(noma_root_function(Y_STAR, 0.0, 3.0).abs() < 1e-14);
        let mut prev = noma_root_function(0.0, 2.0, 5.0);
        for i in 1..2000 {
            let v = noma_root_function(0.01 * (i as f64).powi(2), 2.0, 5.0);
            assert!(v > prev);
            prev = v;
        }
    }

    #[test]
    fn two_device_normalized_example() {
        let inst = normalized(&[(1.0, 0.0, 1.0, 1.0), (1.0, 0.0, 1.0, 2.0)]);
        let (alloc, report, state) = solve_noma_detailed(&inst, 1e-12).unwrap();
        assert!(rel(state.d_sum, 3.0) < 1e-15);
        assert!(rel(state.stationary_snr, Y_STAR) < 1e-10);
        assert!(rel(alloc.tau0, TAU0_STAR) < 1e-10);
        assert!(rel(alloc.tau1, TAU1_STAR) < 1e-10);
        assert!(rel(report.objective_bits_per_hz, R_STAR) < 1e-10);
        assert!(state.bottleneck_device.is_none());
    }

    #[test]
    fn single_device_matches_tdma() {
        for pc in [0.0, 0.05, 0.3] {
            let inst = normalized(&[(0.8, pc, 1.5, 2.5)]);
            let (n, nr) = solve_noma(&inst, 1e-12).unwrap();
            let (t, tr) = solve_tdma(&inst, 1e-12).unwrap();
            assert!(rel(n.tau0, t.tau0) < 1e-9);
            assert!(rel(n.tau1, t.tau[0]) < 1e-9);
            assert!(rel(nr.objective_bits_per_hz, tr.objective_bits_per_hz) < 1e-9);
        }
    }

    #[test]
    fn sic_rates_sum_to_objective() {
        let inst = normalized(&[(0.9, 0.01, 1.0, 1.0), (0.7, 0.02, 2.0, 3.0), (0.5, 0.0, 1.2, 6.0)]);
        let (alloc, report) = solve_noma(&inst, 1e-12).unwrap();
        let per_user: f64 = (0..3)
            .map(|k| rate_noma_per_user(k, alloc.tau1, &alloc.powers, &inst))
            .sum();
        assert!(rel(per_user, report.objective_bits_per_hz) < 1e-12);
        assert!(rel(alloc.throughput(&inst), report.objective_bits_per_hz) < 1e-12);
    }

    #[test]
    fn weak_device_triggers_bottleneck() {
        // device 0 harvests 1e-3 of what device 1 does but pays the same circuit power
        let inst = normalized(&[(1.0, 0.05, 1e-3, 5.0), (1.0, 0.05, 1.0, 5.0)]);
        assert!(matches!(
            solve_noma_relaxed(&inst, 1e-12),
            Err(Error::InfeasibleDevice { .. })
        ));
        let (alloc, report, state) = solve_noma_detailed(&inst, 1e-12).unwrap();
        let weak = state.bottleneck_device.expect("cut binds");
        assert_eq!(alloc.powers[weak], 0.0);
        assert!(alloc.powers.iter().all(|&p| p >= 0.0));
        assert!(rel(alloc.tau1, worst_user_bound(&inst)) < 1e-12);
        assert!(report.kkt.max_relative(1.0) < 1e-9, "{:?}", report.kkt);
        assert!(rel(alloc.tau0 + alloc.tau1, 1.0) < 1e-12);
    }

    #[test]
    fn optimum_respects_worst_user_bound() {
        let p = SystemParams::default();
        for seed in 0..30 {
            let real = crate::model::sample_topology(&p, seed).unwrap();
            let inst = crate::model::realize_instance(&p, &real, &DeviceDefaults::default()).unwrap();
            let (alloc, report) = solve_noma(&inst, 1e-12).unwrap();
            assert!(alloc.tau1 <= worst_user_bound(&inst) * (1.0 + 1e-12));
            assert!(report.kkt.max_relative(p.horizon_seconds) < 1e-8, "{:?}", report.kkt);
            assert!(alloc.powers.iter().all(|&p| p >= 0.0));
        }
    }

    #[test]
    fn kkt_detects_perturbations() {
        let inst = normalized(&[(0.9, 0.01, 1.0, 1.0), (0.7, 0.02, 2.0, 3.0)]);
        let (mut alloc, report) = solve_noma(&inst, 1e-12).unwrap();
        assert!(report.kkt.stationarity < 1e-8);
        alloc.tau1 *= 1.01;
        let kkt = noma_kkt_residuals(&alloc, &inst);
        let pe = inst.pb_power();
        for (d, &p) in inst.devices().iter().zip(&alloc.powers) {
            let slack = causality_slack((p + d.circuit_power_watts()) * alloc.tau1, d.harvest_rate(pe) * alloc.tau0);
            assert!(slack > 1e-3);
        }
        assert!(kkt.causality_slack > 1e-3);
        let zero = noma_kkt_residuals(&NomaAllocation::zeros(2), &inst);
        assert_eq!(zero.budget_slack_seconds, 1.0);
        assert_eq!(zero.causality_slack, 0.0);
    }
}
