//! Independent checks of the analytic solvers.
//!
//! The grid oracles search the original problems directly (time simplex,
//! powers from tight energy causality, negative powers rejected) and share no
//! code with the solvers beyond the instance accessors.

use std::f64::consts::LOG2_E;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Instance;
use crate::noma::{solve_noma_detailed, NomaAllocation};
use crate::report::SolveReport;
use crate::roots::solve_increasing;
use crate::tdma::{solve_tdma_detailed, TdmaAllocation};

pub mod suite;

/// Largest device count the TDMA grid oracle accepts.
pub const MAX_TDMA_ORACLE_DEVICES: usize = 3;

/// Result of a refined grid search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult<A> {
    pub allocation: A,
    pub objective: f64,
    /// Best objective after the initial grid and after each refinement.
    pub history: Vec<f64>,
    /// Largest objective change between the final best point and its
    /// feasible grid neighbours.
    pub cell_variation: f64,
    pub evaluations: u64,
}

/// A point of the search box with its objective.
#[derive(Clone, Copy)]
struct Best {
    value: f64,
    index: usize,
}

fn better(a: Option<Best>, b: Option<Best>) -> Option<Best> {
    match (a, b) {
        (None, x) | (x, None) => x,
        (Some(x), Some(y)) => {
            if y.value > x.value || (y.value == x.value && y.index < x.index) {
                Some(y)
            } else {
                Some(x)
            }
        }
    }
}

/// Best point, its objective, history, cell variation and evaluation count.
type SearchResult = (Vec<f64>, f64, Vec<f64>, f64, u64);

/// Exhaustive search of `objective` over an axis-aligned grid, refined
/// `refinements` times around the incumbent. Points with `None` objective
/// are infeasible.
fn refined_grid_search<F>(
    dims: usize,
    horizon: f64,
    levels: usize,
    refinements: usize,
    objective: F,
) -> Option<SearchResult>
where
    F: Fn(&[f64]) -> Option<f64> + Sync,
{
    let levels = levels.max(2);
    let mut lo = vec![0.0; dims];
    let mut hi = vec![horizon; dims];
    let mut incumbent: Option<(Vec<f64>, f64)> = None;
    let mut history = Vec::with_capacity(refinements + 1);
    let mut evaluations = 0u64;
    let per_axis = levels + 1;
    let total = per_axis.pow(dims as u32);
    let mut step = vec![0.0; dims];

    for _pass in 0..=refinements {
        for d in 0..dims {
            step[d] = (hi[d] - lo[d]) / levels as f64;
        }
        let point_at = |mut index: usize, out: &mut [f64]| {
            for d in (0..dims).rev() {
                out[d] = lo[d] + (index % per_axis) as f64 * step[d];
                index /= per_axis;
            }
        };
        // parallel over the leading axis, deterministic tie-break on index
        let chunk = total / per_axis;
        let best = (0..per_axis)
            .into_par_iter()
            .map(|lead| {
                let mut point = vec![0.0; dims];
                let mut best: Option<Best> = None;
                for index in lead * chunk..(lead + 1) * chunk {
                    point_at(index, &mut point);
                    if point.iter().sum::<f64>() > horizon {
                        continue;
                    }
                    if let Some(value) = objective(&point) {
                        best = better(best, Some(Best { value, index }));
                    }
                }
                best
            })
            .reduce(|| None, better);
        evaluations += total as u64;
        if let Some(b) = best {
            let mut point = vec![0.0; dims];
            point_at(b.index, &mut point);
            if incumbent.as_ref().is_none_or(|(_, v)| b.value > *v) {
                incumbent = Some((point, b.value));
            }
        }
        let (center, value) = incumbent.as_ref()?;
        history.push(*value);
        for d in 0..dims {
            lo[d] = (center[d] - 2.0 * step[d]).max(0.0);
            hi[d] = (center[d] + 2.0 * step[d]).min(horizon);
        }
    }

    let (center, value) = incumbent?;
    // neighbours on the final grid spacing
    let mut variation: f64 = 0.0;
    let final_step: Vec<f64> = (0..dims).map(|d| (hi[d] - lo[d]) / 4.0).collect();
    for d in 0..dims {
        for sign in [-1.0, 1.0] {
            let mut nb = center.clone();
            nb[d] += sign * final_step[d];
            if nb[d] < 0.0 || nb.iter().sum::<f64>() > horizon {
                continue;
            }
            if let Some(v) = objective(&nb) {
                variation = variation.max((v - value).abs());
            }
        }
    }
    Some((center, value, history, variation, evaluations))
}

/// NOMA objective at `(τ0, τ̄1)` with every device spending all its harvest.
/// Powers are pushed to `powers` when given.
fn noma_point(inst: &Instance, tau0: f64, tau1: f64, mut powers: Option<&mut Vec<f64>>) -> Option<f64> {
    let pe = inst.pb_power();
    let mut snr = 0.0;
    for d in inst.devices() {
        let p = if tau1 == 0.0 {
            0.0
        } else {
            d.eta() * pe * d.dl_gain() * tau0 / tau1 - d.circuit_power_watts()
        };
        if p < 0.0 {
            return None;
        }
        snr += p * d.gamma();
        if let Some(out) = powers.as_deref_mut() {
            out.push(p);
        }
    }
    Some(if tau1 == 0.0 { 0.0 } else { tau1 * (1.0 + snr).log2() })
}

/// Refined grid search over `(τ0, τ̄1)` with `τ0 + τ̄1 <= T_max`.
pub fn brute_force_oracle_noma(
    inst: &Instance,
    levels: usize,
    refinements: usize,
) -> Result<OracleResult<NomaAllocation>> {
    let found = refined_grid_search(2, inst.horizon(), levels, refinements, |p| {
        noma_point(inst, p[0], p[1], None)
    });
    let (point, objective, history, cell_variation, evaluations) =
        found.ok_or_else(|| Error::Degenerate("no feasible grid point".into()))?;
    let mut powers = Vec::with_capacity(inst.len());
    noma_point(inst, point[0], point[1], Some(&mut powers)).expect("incumbent is feasible");
    Ok(OracleResult {
        allocation: NomaAllocation {
            tau0: point[0],
            tau1: point[1],
            powers,
        },
        objective,
        history,
        cell_variation,
        evaluations,
    })
}

fn tdma_point(inst: &Instance, point: &[f64], mut powers: Option<&mut Vec<f64>>) -> Option<f64> {
    let pe = inst.pb_power();
    let tau0 = point[0];
    let mut total = 0.0;
    for (d, &t) in inst.devices().iter().zip(&point[1..]) {
        let p = if t == 0.0 {
            0.0
        } else {
            d.eta() * pe * d.dl_gain() * tau0 / t - d.circuit_power_watts()
        };
        if p < 0.0 {
            return None;
        }
        if t > 0.0 {
            total += t * (1.0 + p * d.gamma()).log2();
        }
        if let Some(out) = powers.as_deref_mut() {
            out.push(p);
        }
    }
    Some(total)
}

/// Refined grid search over `(τ0, τ_1, …, τ_K)` on the time simplex, K <= 3.
pub fn brute_force_oracle_tdma(
    inst: &Instance,
    levels: usize,
    refinements: usize,
) -> Result<OracleResult<TdmaAllocation>> {
    if inst.len() > MAX_TDMA_ORACLE_DEVICES {
        return Err(Error::Dimension {
            max: MAX_TDMA_ORACLE_DEVICES,
            got: inst.len(),
        });
    }
    let found = refined_grid_search(inst.len() + 1, inst.horizon(), levels, refinements, |p| {
        tdma_point(inst, p, None)
    });
    let (point, objective, history, cell_variation, evaluations) =
        found.ok_or_else(|| Error::Degenerate("no feasible grid point".into()))?;
    let mut powers = Vec::with_capacity(inst.len());
    tdma_point(inst, &point, Some(&mut powers)).expect("incumbent is feasible");
    Ok(OracleResult {
        allocation: TdmaAllocation {
            tau0: point[0],
            tau: point[1..].to_vec(),
            powers,
        },
        objective,
        history,
        cell_variation,
        evaluations,
    })
}

/// TDMA allocation in which every device reaches the same SNR while using
/// the NOMA energy-transfer time and, in total, the NOMA uplink time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EqualSnrConstruction {
    pub allocation: TdmaAllocation,
    /// Common received SNR.
    pub snr: f64,
    pub throughput: f64,
    /// `0 < τ̃_k < τ̄1` for every device.
    pub slots_strictly_inside: bool,
}

/// Builds the equal-SNR TDMA allocation from a NOMA allocation.
///
/// With common SNR `s`, device `k` needs `τ̃_k = D_k τ0 / (s + c_k)`; the
/// total is strictly decreasing in `s` and is matched to `τ̄1` by bisection.
pub fn equal_snr_construction(
    inst: &Instance,
    noma: &NomaAllocation,
    tol: f64,
) -> Result<EqualSnrConstruction> {
    let tau0 = noma.tau0;
    let target = noma.tau1;
    if !(tau0 > 0.0 && target > 0.0) {
        return Err(Error::Degenerate(format!(
            "NOMA allocation has tau0 = {tau0}, tau1 = {target}"
        )));
    }
    let energy = inst.energy_snrs();
    let circuit = inst.circuit_snrs();
    let slots = |s: f64| -> f64 {
        energy
            .iter()
            .zip(&circuit)
            .map(|(d, c)| d * tau0 / (s + c))
            .sum()
    };
    if slots(0.0) < target {
        return Err(Error::Degenerate(
            "uplink time exceeds what any common SNR can fill".into(),
        ));
    }
    let root = solve_increasing(|s| target - slots(s), tol)?;
    let snr = root.value;
    let tau: Vec<f64> = energy
        .iter()
        .zip(&circuit)
        .map(|(d, c)| d * tau0 / (snr + c))
        .collect();
    let powers: Vec<f64> = inst.devices().iter().map(|d| snr / d.gamma()).collect();
    let throughput = tau.iter().sum::<f64>() * snr.ln_1p() * LOG2_E;
    let slots_strictly_inside = tau.iter().all(|&t| t > 0.0 && t < target);
    if !slots_strictly_inside {
        log::debug!("equal-SNR construction has a slot outside (0, tau1)");
    }
    Ok(EqualSnrConstruction {
        allocation: TdmaAllocation { tau0, tau, powers },
        snr,
        throughput,
        slots_strictly_inside,
    })
}

/// Energy-transfer time and beacon energy of both optimal schemes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Theorem1Report {
    pub tau0_tdma: f64,
    pub tau0_noma: f64,
    pub e_tdma: f64,
    pub e_noma: f64,
    /// NOMA's `x = D / (τ̄1 / τ0)` and the largest per-device TDMA `x_k`.
    pub x_noma: f64,
    pub x_tdma_max: f64,
    pub pass: bool,
}

/// NOMA never transfers energy for less time, nor spends less beacon energy,
/// than TDMA.
pub fn check_theorem1(inst: &Instance, tol: f64) -> Result<Theorem1Report> {
    let (t, _, ts) = solve_tdma_detailed(inst, crate::roots::DEFAULT_TOL)?;
    let (n, _, ns) = solve_noma_detailed(inst, crate::roots::DEFAULT_TOL)?;
    Ok(theorem1_from(inst, &t, &n, ns.d_sum * n.tau0 / n.tau1, ts.x.iter().copied().fold(0.0, f64::max), tol))
}

fn theorem1_from(
    inst: &Instance,
    t: &TdmaAllocation,
    n: &NomaAllocation,
    x_noma: f64,
    x_tdma_max: f64,
    tol: f64,
) -> Theorem1Report {
    let pe = inst.pb_power();
    let (e_tdma, e_noma) = (pe * t.tau0, pe * n.tau0);
    let pass = n.tau0 >= t.tau0 - tol * inst.horizon() && e_noma >= e_tdma - tol * e_tdma;
    Theorem1Report {
        tau0_tdma: t.tau0,
        tau0_noma: n.tau0,
        e_tdma,
        e_noma,
        x_noma,
        x_tdma_max,
        pass,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Theorem2Report {
    pub r_tdma: f64,
    pub r_noma: f64,
    /// Throughput of the equal-SNR construction, between the two.
    pub r_constructed: f64,
    pub pass: bool,
    /// Some device draws circuit power and TDMA wins by more than `tol`.
    pub strict: bool,
    pub construction_inside: bool,
}

/// Optimal TDMA throughput is at least optimal NOMA throughput.
pub fn check_theorem2(inst: &Instance, tol: f64) -> Result<Theorem2Report> {
    let (_, tr) = crate::tdma::solve_tdma(inst, crate::roots::DEFAULT_TOL)?;
    let (n, nr) = crate::noma::solve_noma(inst, crate::roots::DEFAULT_TOL)?;
    let built = equal_snr_construction(inst, &n, crate::roots::DEFAULT_TOL)?;
    Ok(theorem2_from(inst, &tr, &nr, &built, tol))
}

fn theorem2_from(
    inst: &Instance,
    tr: &SolveReport,
    nr: &SolveReport,
    built: &EqualSnrConstruction,
    tol: f64,
) -> Theorem2Report {
    let (r_tdma, r_noma) = (tr.objective_bits_per_hz, nr.objective_bits_per_hz);
    let draws_circuit = inst.circuit_snrs().iter().any(|&c| c > 0.0);
    Theorem2Report {
        r_tdma,
        r_noma,
        r_constructed: built.throughput,
        pass: r_tdma >= r_noma - tol * r_tdma,
        strict: draws_circuit && r_tdma - r_noma > tol * r_tdma,
        construction_inside: built.slots_strictly_inside,
    }
}
