use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The four allocation schemes compared in the experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    TdmaOpt,
    NomaOpt,
    TdmaFixed,
    NomaFixed,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [
        Scheme::TdmaOpt,
        Scheme::NomaOpt,
        Scheme::TdmaFixed,
        Scheme::NomaFixed,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::TdmaOpt => "tdma_opt",
            Scheme::NomaOpt => "noma_opt",
            Scheme::TdmaFixed => "tdma_fixed",
            Scheme::NomaFixed => "noma_fixed",
        }
    }

    pub fn is_noma(self) -> bool {
        matches!(self, Scheme::NomaOpt | Scheme::NomaFixed)
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|sc| sc.as_str() == s)
            .ok_or_else(|| {
                Error::invalid(
                    "scheme",
                    format!("unknown scheme `{s}` (expected tdma_opt, noma_opt, tdma_fixed or noma_fixed)"),
                )
            })
    }
}

/// First-order optimality diagnostics at an allocation. All fields are >= 0.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct KktResiduals {
    /// Largest relative violation of the stationarity conditions.
    pub stationarity: f64,
    /// `|T_max - (τ0 + uplink time)|` in seconds.
    pub budget_slack_seconds: f64,
    /// Largest `|consumed - harvested| / harvested` over devices.
    pub causality_slack: f64,
}

impl KktResiduals {
    pub fn max_relative(&self, horizon: f64) -> f64 {
        self.stationarity
            .max(self.budget_slack_seconds / horizon)
            .max(self.causality_slack)
    }
}

/// Summary of one solve, independent of the scheme.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub scheme: Scheme,
    pub objective_bits_per_hz: f64,
    /// `objective * bandwidth / T_max`.
    pub throughput_bits_per_second: f64,
    /// Beacon energy `P_E τ0`; every device spends exactly what it harvests.
    pub energy_joules: f64,
    pub tau0_seconds: f64,
    pub ul_time_seconds: f64,
    pub iterations_outer: u32,
    pub iterations_inner: u64,
    pub kkt: KktResiduals,
    /// Whether the time budget binds (baselines may leave uplink time unused).
    pub budget_active: bool,
    /// NOMA only: device whose circuit power caps the shared uplink time.
    pub bottleneck_device: Option<usize>,
}

impl SolveReport {
    pub(crate) fn new(
        scheme: Scheme,
        inst: &crate::model::Instance,
        objective: f64,
        tau0: f64,
        ul_time: f64,
    ) -> Self {
        let p = inst.params();
        SolveReport {
            scheme,
            objective_bits_per_hz: objective,
            throughput_bits_per_second: objective * p.bandwidth_hz / p.horizon_seconds,
            energy_joules: p.pb_power_watts * tau0,
            tau0_seconds: tau0,
            ul_time_seconds: ul_time,
            iterations_outer: 0,
            iterations_inner: 0,
            kkt: KktResiduals::default(),
            budget_active: true,
            bottleneck_device: None,
        }
    }
}
