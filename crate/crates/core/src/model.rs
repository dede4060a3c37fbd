//! Network model: parameters, devices, channel sampling and the primitive
//! energy and rate formulas shared by every solver.
//!
//! All quantities are SI (watts, joules, seconds). Throughput is measured in
//! bits/Hz over the horizon, i.e. time multiplied by spectral efficiency.

use std::f64::consts::{LOG2_E, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Path gain at the reference distance (-30 dB at 1 m).
pub const REFERENCE_GAIN: f64 = 1e-3;

pub fn dbm_to_watts(level_dbm: f64) -> f64 {
    10f64.powf((level_dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * watts.log10() + 30.0
}

pub fn mw_to_watts(mw: f64) -> f64 {
    mw * 1e-3
}

/// Network-level constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Power beacon transmit power.
    pub pb_power_watts: f64,
    /// Total frame length shared by energy transfer and uplink.
    pub horizon_seconds: f64,
    /// Receiver noise power at the access point.
    pub noise_watts: f64,
    pub num_devices: usize,
    pub pathloss_exponent: f64,
    /// Used only to convert bits/Hz into bits/s for reporting.
    pub bandwidth_hz: f64,
    pub pb_ap_distance_m: f64,
    pub cell_radius_m: f64,
    pub reference_distance_m: f64,
}

impl Default for SystemParams {
    /// NB-IoT style scenario: 40 dBm beacon, 100 ms frame, -117 dBm noise,
    /// ten devices within 5 m of the beacon and an access point 50 m away.
    fn default() -> Self {
        SystemParams {
            pb_power_watts: dbm_to_watts(40.0),
            horizon_seconds: 0.1,
            noise_watts: dbm_to_watts(-117.0),
            num_devices: 10,
            pathloss_exponent: 2.2,
            bandwidth_hz: 180e3,
            pb_ap_distance_m: 50.0,
            cell_radius_m: 5.0,
            reference_distance_m: 1.0,
        }
    }
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(field, format!("must be finite and > 0, got {v}")))
    }
}

impl SystemParams {
    pub fn validate(&self) -> Result<()> {
        positive("pb_power_watts", self.pb_power_watts)?;
        positive("horizon_seconds", self.horizon_seconds)?;
        positive("noise_watts", self.noise_watts)?;
        if self.num_devices == 0 {
            return Err(Error::invalid("num_devices", "must be at least 1"));
        }
        positive("pathloss_exponent", self.pathloss_exponent)?;
        positive("bandwidth_hz", self.bandwidth_hz)?;
        positive("pb_ap_distance_m", self.pb_ap_distance_m)?;
        positive("cell_radius_m", self.cell_radius_m)?;
        positive("reference_distance_m", self.reference_distance_m)?;
        if self.reference_distance_m > self.cell_radius_m {
            return Err(Error::invalid(
                "reference_distance_m",
                format!(
                    "{} exceeds cell_radius_m {}",
                    self.reference_distance_m, self.cell_radius_m
                ),
            ));
        }
        Ok(())
    }
}

/// Per-device parameters shared by every device of a generated instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviceDefaults {
    pub eta: f64,
    pub circuit_power_watts: f64,
}

impl Default for DeviceDefaults {
    fn default() -> Self {
        DeviceDefaults {
            eta: 0.9,
            circuit_power_watts: mw_to_watts(0.1),
        }
    }
}

/// Physical state of one device.
///
/// `gamma` is always `ul_gain / noise_watts`; it is computed on construction
/// and never taken from input.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Device {
    eta: f64,
    circuit_power_watts: f64,
    dl_gain: f64,
    ul_gain: f64,
    gamma: f64,
}

impl Device {
    pub fn new(
        eta: f64,
        circuit_power_watts: f64,
        dl_gain: f64,
        ul_gain: f64,
        noise_watts: f64,
    ) -> Result<Self> {
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(Error::invalid("eta", format!("must lie in (0, 1], got {eta}")));
        }
        if !(circuit_power_watts.is_finite() && circuit_power_watts >= 0.0) {
            return Err(Error::invalid(
                "circuit_power_watts",
                format!("must be finite and >= 0, got {circuit_power_watts}"),
            ));
        }
        positive("noise_watts", noise_watts)?;
        let gamma = ul_gain / noise_watts;
        let dev = Device {
            eta,
            circuit_power_watts,
            dl_gain,
            ul_gain,
            gamma,
        };
        dev.check_gains(0)?;
        Ok(dev)
    }

    fn check_gains(&self, device: usize) -> Result<()> {
        for (name, v) in [
            ("dl_gain", self.dl_gain),
            ("ul_gain", self.ul_gain),
            ("gamma", self.gamma),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidChannel {
                    device,
                    reason: format!("{name} must be finite and > 0, got {v}"),
                });
            }
        }
        Ok(())
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }
    pub fn circuit_power_watts(&self) -> f64 {
        self.circuit_power_watts
    }
    pub fn dl_gain(&self) -> f64 {
        self.dl_gain
    }
    pub fn ul_gain(&self) -> f64 {
        self.ul_gain
    }
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Harvested power per unit of beacon-on time, `η P_E h`, in watts.
    pub fn harvest_rate(&self, pb_power_watts: f64) -> f64 {
        self.eta * pb_power_watts * self.dl_gain
    }

    /// Received SNR per second of energy transfer per second of uplink,
    /// `η P_E h γ` (the energy constant of the time-allocation problems).
    pub fn energy_snr(&self, pb_power_watts: f64) -> f64 {
        self.harvest_rate(pb_power_watts) * self.gamma
    }

    /// Circuit power expressed as received SNR, `p_c γ`.
    pub fn circuit_snr(&self) -> f64 {
        self.circuit_power_watts * self.gamma
    }

    fn with_circuit_power(&self, circuit_power_watts: f64) -> Self {
        Device {
            circuit_power_watts,
            ..self.clone()
        }
    }
}

/// Solver input: parameters plus devices sorted by ascending `gamma`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Instance {
    params: SystemParams,
    devices: Vec<Device>,
}

impl Instance {
    /// Validates and stably sorts `devices` by `gamma`.
    ///
    /// `params.num_devices` must equal the number of devices.
    pub fn new(params: SystemParams, mut devices: Vec<Device>) -> Result<Self> {
        params.validate()?;
        if devices.len() != params.num_devices {
            return Err(Error::invalid(
                "num_devices",
                format!(
                    "{} declared but {} devices given",
                    params.num_devices,
                    devices.len()
                ),
            ));
        }
        for (k, d) in devices.iter().enumerate() {
            d.check_gains(k)?;
            let expected = d.ul_gain / params.noise_watts;
            if d.gamma != expected {
                return Err(Error::InvalidChannel {
                    device: k,
                    reason: format!(
                        "gamma {} was computed with a different noise power (expected {expected})",
                        d.gamma
                    ),
                });
            }
        }
        devices.sort_by(|a, b| a.gamma.total_cmp(&b.gamma));
        Ok(Instance { params, devices })
    }

    /// Builds an instance from raw per-device tuples `(eta, p_c, h, g)`,
    /// setting `num_devices` from the list.
    pub fn from_gains(
        mut params: SystemParams,
        devices: &[(f64, f64, f64, f64)],
    ) -> Result<Self> {
        params.num_devices = devices.len();
        let noise = params.noise_watts;
        let devices = devices
            .iter()
            .enumerate()
            .map(|(k, &(eta, pc, h, g))| {
                Device::new(eta, pc, h, g, noise).map_err(|e| match e {
                    Error::InvalidChannel { reason, .. } => Error::InvalidChannel { device: k, reason },
                    other => other,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Instance::new(params, devices)
    }

    pub fn params(&self) -> &SystemParams {
        &self.params
    }
    pub fn devices(&self) -> &[Device] {
        &self.devices
    }
    pub fn len(&self) -> usize {
        self.devices.len()
    }
    pub fn is_empty(&self) -> bool {
        self.devices.is_empty()
    }
    pub fn horizon(&self) -> f64 {
        self.params.horizon_seconds
    }
    pub fn pb_power(&self) -> f64 {
        self.params.pb_power_watts
    }

    /// `η_k P_E h_k γ_k` for every device.
    pub fn energy_snrs(&self) -> Vec<f64> {
        let pe = self.pb_power();
        self.devices.iter().map(|d| d.energy_snr(pe)).collect()
    }

    /// `p_c,k γ_k` for every device.
    pub fn circuit_snrs(&self) -> Vec<f64> {
        self.devices.iter().map(Device::circuit_snr).collect()
    }

    /// Same channels with a different beacon power.
    pub fn with_pb_power(&self, pb_power_watts: f64) -> Result<Self> {
        let mut params = self.params.clone();
        params.pb_power_watts = pb_power_watts;
        params.validate()?;
        Ok(Instance {
            params,
            devices: self.devices.clone(),
        })
    }

    /// Same channels with every device's circuit power replaced.
    pub fn with_circuit_power(&self, circuit_power_watts: f64) -> Result<Self> {
        if !(circuit_power_watts.is_finite() && circuit_power_watts >= 0.0) {
            return Err(Error::invalid(
                "circuit_power_watts",
                format!("must be finite and >= 0, got {circuit_power_watts}"),
            ));
        }
        Ok(Instance {
            params: self.params.clone(),
            devices: self
                .devices
                .iter()
                .map(|d| d.with_circuit_power(circuit_power_watts))
                .collect(),
        })
    }
}

/// Random geometry and small-scale fading for one network drop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelRealization {
    /// Beacon-to-device distances, already clamped to the reference distance.
    pub distances_m: Vec<f64>,
    /// Device bearings seen from the beacon; the AP sits at bearing 0.
    pub angles_rad: Vec<f64>,
    pub fading_dl: Vec<f64>,
    pub fading_ul: Vec<f64>,
    pub seed: u64,
}

fn unit_exponential(rng: &mut ChaCha8Rng) -> f64 {
    loop {
        let v: f64 = rng.sample(Exp1);
        if v > 0.0 {
            return v;
        }
    }
}

/// Drops `num_devices` devices uniformly over the disc around the beacon and
/// draws independent unit-mean exponential power fading for both links.
pub fn sample_topology(params: &SystemParams, seed: u64) -> Result<ChannelRealization> {
    params.validate()?;
    let k = params.num_devices;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut distances_m = Vec::with_capacity(k);
    let mut angles_rad = Vec::with_capacity(k);
    for _ in 0..k {
        let u: f64 = rng.random();
        let theta: f64 = rng.random::<f64>() * 2.0 * PI;
        let r = params.cell_radius_m * u.sqrt();
        distances_m.push(r.max(params.reference_distance_m));
        angles_rad.push(theta);
    }
    let fading_dl = (0..k).map(|_| unit_exponential(&mut rng)).collect();
    let fading_ul = (0..k).map(|_| unit_exponential(&mut rng)).collect();
    Ok(ChannelRealization {
        distances_m,
        angles_rad,
        fading_dl,
        fading_ul,
        seed,
    })
}

/// Topology plus channels for one seeded drop.
pub fn sample_instance(params: &SystemParams, defaults: &DeviceDefaults, seed: u64) -> Result<Instance> {
    let real = sample_topology(params, seed)?;
    realize_instance(params, &real, defaults)
}

/// Deterministic seed derivation (SplitMix64 finalizer folded over `parts`).
///
/// Independent of platform and of the standard library's hasher.
pub fn mix_seed(base: u64, parts: &[u64]) -> u64 {
    fn splitmix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    parts.iter().fold(splitmix(base), |acc, &p| splitmix(acc ^ splitmix(p)))
}

/// `10^-3 ρ² d^-α`.
pub fn path_gain(fading: f64, distance_m: f64, exponent: f64) -> f64 {
    REFERENCE_GAIN * fading * distance_m.powf(-exponent)
}

/// Device-to-AP distance for a device at `(distance, angle)` from the beacon
/// with the AP on the positive x-axis.
pub fn ap_distance(params: &SystemParams, distance_m: f64, angle_rad: f64) -> f64 {
    let x = distance_m * angle_rad.cos() - params.pb_ap_distance_m;
    let y = distance_m * angle_rad.sin();
    x.hypot(y)
}

pub fn realize_instance(
    params: &SystemParams,
    real: &ChannelRealization,
    defaults: &DeviceDefaults,
) -> Result<Instance> {
    let k = params.num_devices;
    for (name, len) in [
        ("distances_m", real.distances_m.len()),
        ("angles_rad", real.angles_rad.len()),
        ("fading_dl", real.fading_dl.len()),
        ("fading_ul", real.fading_ul.len()),
    ] {
        if len != k {
            return Err(Error::invalid(
                name,
                format!("has {len} entries, expected {k}"),
            ));
        }
    }
    let alpha = params.pathloss_exponent;
    let mut devices = Vec::with_capacity(k);
    for i in 0..k {
        let d = real.distances_m[i];
        let h = path_gain(real.fading_dl[i], d, alpha);
        let g = path_gain(real.fading_ul[i], ap_distance(params, d, real.angles_rad[i]), alpha);
        let dev = Device::new(defaults.eta, defaults.circuit_power_watts, h, g, params.noise_watts)
            .map_err(|e| match e {
                Error::InvalidChannel { reason, .. } => Error::InvalidChannel { device: i, reason },
                other => other,
            })?;
        devices.push(dev);
    }
    Instance::new(params.clone(), devices)
}

/// `E^h = η P_E h τ0`.
pub fn harvested_energy(dev: &Device, pb_power_watts: f64, tau0: f64) -> Result<f64> {
    if tau0.is_nan() || tau0 < 0.0 {
        return Err(Error::Domain {
            what: "tau0",
            value: tau0,
        });
    }
    Ok(dev.harvest_rate(pb_power_watts) * tau0)
}

/// TDMA throughput of one device, `τ log2(1 + p γ)`, in bits/Hz.
pub fn rate_tdma(tau: f64, power: f64, gamma: f64) -> f64 {
    if tau == 0.0 {
        return 0.0;
    }
    tau * (power * gamma).ln_1p() * LOG2_E
}

/// Per-device NOMA throughput under SIC in ascending-`gamma` order.
///
/// `k` is a 0-based index into `inst.devices()`; devices decoded after `k`
/// (indices `> k`) are treated as interference.
pub fn rate_noma_per_user(k: usize, tau1: f64, powers: &[f64], inst: &Instance) -> f64 {
    let devs = inst.devices();
    let interference: f64 = powers[k + 1..]
        .iter()
        .zip(&devs[k + 1..])
        .map(|(p, d)| p * d.gamma())
        .sum();
    let signal = powers[k] * devs[k].gamma();
    tau1 * (signal / (interference + 1.0)).ln_1p() * LOG2_E
}

/// Aggregate NOMA throughput `τ̄1 log2(1 + Σ p_k γ_k)`.
pub fn noma_sum_rate(tau1: f64, powers: &[f64], inst: &Instance) -> f64 {
    let snr: f64 = powers
        .iter()
        .zip(inst.devices())
        .map(|(p, d)| p * d.gamma())
        .sum();
    tau1 * snr.ln_1p() * LOG2_E
}
