//! JSON input documents.
//!
//! Parsing walks `serde_json::Value`s by hand instead of deriving, so that
//! every rejection names the offending key with its full path
//! (`devices[2].circuit_power_mw`). Missing system parameters fall back to
//! [`SystemParams::default`]. Power-like fields accept one alternative unit
//! (`pb_power_dbm`, `noise_dbm`, `circuit_power_mw`); giving both spellings
//! is an error.

use std::path::Path;

use serde_json::{Map, Value};

use crate::bench::{SweepAxis, SweepSpec};
use crate::error::{Error, Result};
use crate::model::{dbm_to_watts, mw_to_watts, sample_instance, Device, DeviceDefaults, Instance, SystemParams};
use crate::report::Scheme;
use crate::roots::DEFAULT_TOL;

/// Relative tolerance for a stored `gamma` to agree with `ul_gain / noise`.
const GAMMA_CONSISTENCY_TOL: f64 = 1e-9;

struct Obj<'a> {
    path: String,
    map: &'a Map<String, Value>,
}

impl<'a> Obj<'a> {
    fn new(path: impl Into<String>, value: &'a Value) -> Result<Self> {
        let path = path.into();
        match value {
            Value::Object(map) => Ok(Obj { path, map }),
            _ => Err(Error::invalid(display(&path), "expected a JSON object")),
        }
    }

    fn field(&self, key: &str) -> String {
        if self.path.is_empty() {
            key.to_string()
        } else {
            format!("{}.{key}", self.path)
        }
    }

    fn reject_unknown(&self, allowed: &[&str]) -> Result<()> {
        match self.map.keys().find(|k| !allowed.contains(&k.as_str())) {
            Some(k) => Err(Error::invalid(self.field(k), "unknown field")),
            None => Ok(()),
        }
    }

    fn get(&self, key: &str) -> Option<&'a Value> {
        self.map.get(key).filter(|v| !v.is_null())
    }

    fn f64(&self, key: &str) -> Result<Option<f64>> {
        self.get(key)
            .map(|v| {
                v.as_f64()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| Error::invalid(self.field(key), format!("expected a finite number, got {v}")))
            })
            .transpose()
    }

    fn u64(&self, key: &str) -> Result<Option<u64>> {
        self.get(key)
            .map(|v| {
                v.as_u64()
                    .ok_or_else(|| Error::invalid(self.field(key), format!("expected a non-negative integer, got {v}")))
            })
            .transpose()
    }

    fn usize(&self, key: &str) -> Result<Option<usize>> {
        self.u64(key)?
            .map(|v| usize::try_from(v).map_err(|_| Error::invalid(self.field(key), "too large")))
            .transpose()
    }

    fn str(&self, key: &str) -> Result<Option<&'a str>> {
        self.get(key)
            .map(|v| {
                v.as_str()
                    .ok_or_else(|| Error::invalid(self.field(key), format!("expected a string, got {v}")))
            })
            .transpose()
    }

    fn array(&self, key: &str) -> Result<Option<&'a Vec<Value>>> {
        self.get(key)
            .map(|v| {
                v.as_array()
                    .ok_or_else(|| Error::invalid(self.field(key), "expected an array"))
            })
            .transpose()
    }

    fn require<T>(&self, key: &str, v: Option<T>) -> Result<T> {
        v.ok_or_else(|| Error::invalid(self.field(key), "missing"))
    }

    /// A quantity given either as `primary` (watts) or as `alt` converted by `f`.
    fn either(&self, primary: &str, alt: &str, f: fn(f64) -> f64) -> Result<Option<f64>> {
        match (self.f64(primary)?, self.f64(alt)?) {
            (Some(_), Some(_)) => Err(Error::invalid(
                self.field(alt),
                format!("conflicts with `{}`; give only one", self.field(primary)),
            )),
            (Some(w), None) => Ok(Some(w)),
            (None, Some(a)) => Ok(Some(f(a))),
            (None, None) => Ok(None),
        }
    }

    fn child(&self, key: &str) -> Result<Option<Obj<'a>>> {
        self.get(key).map(|v| Obj::new(self.field(key), v)).transpose()
    }
}

fn display(path: &str) -> &str {
    if path.is_empty() {
        "<document>"
    } else {
        path
    }
}

/// Prefixes the field of a validation error with `path`.
fn scoped(path: &str, e: Error) -> Error {
    match e {
        Error::InvalidParameter { field, reason } if !path.is_empty() => Error::InvalidParameter {
            field: format!("{path}.{field}"),
            reason,
        },
        other => other,
    }
}

const PARAM_KEYS: [&str; 11] = [
    "pb_power_watts",
    "pb_power_dbm",
    "horizon_seconds",
    "noise_watts",
    "noise_dbm",
    "num_devices",
    "pathloss_exponent",
    "bandwidth_hz",
    "pb_ap_distance_m",
    "cell_radius_m",
    "reference_distance_m",
];

fn params_from(obj: &Obj) -> Result<SystemParams> {
    obj.reject_unknown(&PARAM_KEYS)?;
    let d = SystemParams::default();
    let p = SystemParams {
        pb_power_watts: obj
            .either("pb_power_watts", "pb_power_dbm", dbm_to_watts)?
            .unwrap_or(d.pb_power_watts),
        horizon_seconds: obj.f64("horizon_seconds")?.unwrap_or(d.horizon_seconds),
        noise_watts: obj
            .either("noise_watts", "noise_dbm", dbm_to_watts)?
            .unwrap_or(d.noise_watts),
        num_devices: obj.usize("num_devices")?.unwrap_or(d.num_devices),
        pathloss_exponent: obj.f64("pathloss_exponent")?.unwrap_or(d.pathloss_exponent),
        bandwidth_hz: obj.f64("bandwidth_hz")?.unwrap_or(d.bandwidth_hz),
        pb_ap_distance_m: obj.f64("pb_ap_distance_m")?.unwrap_or(d.pb_ap_distance_m),
        cell_radius_m: obj.f64("cell_radius_m")?.unwrap_or(d.cell_radius_m),
        reference_distance_m: obj.f64("reference_distance_m")?.unwrap_or(d.reference_distance_m),
    };
    p.validate().map_err(|e| scoped(&obj.path, e))?;
    Ok(p)
}

fn defaults_from(obj: &Obj) -> Result<DeviceDefaults> {
    obj.reject_unknown(&["eta", "circuit_power_watts", "circuit_power_mw"])?;
    let d = DeviceDefaults::default();
    let out = DeviceDefaults {
        eta: obj.f64("eta")?.unwrap_or(d.eta),
        circuit_power_watts: obj
            .either("circuit_power_watts", "circuit_power_mw", mw_to_watts)?
            .unwrap_or(d.circuit_power_watts),
    };
    if !(out.eta > 0.0 && out.eta <= 1.0) {
        return Err(Error::invalid(obj.field("eta"), "must lie in (0, 1]"));
    }
    if out.circuit_power_watts < 0.0 {
        return Err(Error::invalid(obj.field("circuit_power_watts"), "must be >= 0"));
    }
    Ok(out)
}

fn device_from(obj: &Obj, index: usize, noise_watts: f64) -> Result<Device> {
    obj.reject_unknown(&["eta", "circuit_power_watts", "circuit_power_mw", "dl_gain", "ul_gain", "gamma"])?;
    let eta = obj.require("eta", obj.f64("eta")?)?;
    let pc = obj.require(
        "circuit_power_watts",
        obj.either("circuit_power_watts", "circuit_power_mw", mw_to_watts)?,
    )?;
    let h = obj.require("dl_gain", obj.f64("dl_gain")?)?;
    let g = obj.require("ul_gain", obj.f64("ul_gain")?)?;
    let dev = Device::new(eta, pc, h, g, noise_watts).map_err(|e| match e {
        Error::InvalidChannel { reason, .. } => Error::InvalidChannel { device: index, reason },
        other => scoped(&obj.path, other),
    })?;
    if let Some(stored) = obj.f64("gamma")? {
        if (stored - dev.gamma()).abs() > GAMMA_CONSISTENCY_TOL * dev.gamma() {
            return Err(Error::invalid(
                obj.field("gamma"),
                format!("{stored} disagrees with ul_gain / noise_watts = {}", dev.gamma()),
            ));
        }
    }
    Ok(dev)
}

/// A problem instance: either explicit `devices`, or `seed` (plus optional
/// `device_defaults`) to draw a topology from `params`.
#[derive(Debug, Clone)]
pub struct SolveConfig {
    pub instance: Instance,
    pub tol: f64,
    /// Energy-transfer time for the fixed-split baselines; half the horizon if absent.
    pub fixed_tau0: Option<f64>,
}

pub fn parse_solve_config(value: &Value) -> Result<SolveConfig> {
    let root = Obj::new("", value)?;
    root.reject_unknown(&["params", "devices", "seed", "device_defaults", "tol", "fixed_tau0_seconds"])?;
    let params_obj = root.child("params")?;
    let mut params = match &params_obj {
        Some(o) => params_from(o)?,
        None => SystemParams::default(),
    };
    let tol = parse_tol(&root)?;
    let fixed_tau0 = root.f64("fixed_tau0_seconds")?;
    if let Some(t) = fixed_tau0 {
        if !(t > 0.0 && t < params.horizon_seconds) {
            return Err(Error::invalid("fixed_tau0_seconds", "must lie in (0, horizon_seconds)"));
        }
    }

    let instance = match (root.array("devices")?, root.u64("seed")?) {
        (Some(_), Some(_)) => {
            return Err(Error::invalid("seed", "give either `devices` or `seed`, not both"))
        }
        (Some(list), None) => {
            let declared = params_obj.as_ref().and_then(|o| o.get("num_devices")).is_some();
            if declared && params.num_devices != list.len() {
                return Err(Error::invalid(
                    "params.num_devices",
                    format!("{} declared but {} devices given", params.num_devices, list.len()),
                ));
            }
            if root.get("device_defaults").is_some() {
                return Err(Error::invalid("device_defaults", "only used together with `seed`"));
            }
            params.num_devices = list.len();
            let devices = list
                .iter()
                .enumerate()
                .map(|(i, v)| device_from(&Obj::new(format!("devices[{i}]"), v)?, i, params.noise_watts))
                .collect::<Result<Vec<_>>>()?;
            Instance::new(params, devices)?
        }
        (None, Some(seed)) => {
            let defaults = match root.child("device_defaults")? {
                Some(o) => defaults_from(&o)?,
                None => DeviceDefaults::default(),
            };
            sample_instance(&params, &defaults, seed)?
        }
        (None, None) => return Err(Error::invalid("devices", "missing (or give `seed`)")),
    };
    Ok(SolveConfig {
        instance,
        tol,
        fixed_tau0,
    })
}

/// [`parse_solve_config`] on JSON text.
pub fn parse_solve_config_str(text: &str) -> Result<SolveConfig> {
    let value: Value = serde_json::from_str(text)
        .map_err(|e| Error::invalid("<document>", format!("malformed JSON: {e}")))?;
    parse_solve_config(&value)
}

fn parse_tol(root: &Obj) -> Result<f64> {
    let tol = root.f64("tol")?.unwrap_or(DEFAULT_TOL);
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::invalid(root.field("tol"), "must lie in (0, 1)"));
    }
    Ok(tol)
}

/// System parameters, either bare or wrapped as `{"params": {...}}`.
pub fn parse_params(value: &Value) -> Result<SystemParams> {
    let root = Obj::new("", value)?;
    match root.child("params")? {
        Some(inner) => {
            root.reject_unknown(&["params"])?;
            params_from(&inner)
        }
        None => params_from(&root),
    }
}

pub fn parse_sweep_spec(value: &Value) -> Result<SweepSpec> {
    let root = Obj::new("", value)?;
    root.reject_unknown(&[
        "base",
        "device_defaults",
        "axis",
        "axis_values",
        "k_values",
        "num_realizations",
        "base_seed",
        "schemes",
        "tol",
    ])?;
    let base = match root.child("base")? {
        Some(o) => params_from(&o)?,
        None => SystemParams::default(),
    };
    let device_defaults = match root.child("device_defaults")? {
        Some(o) => defaults_from(&o)?,
        None => DeviceDefaults::default(),
    };
    let axis = match root.require("axis", root.str("axis")?)? {
        "pb_power_dbm" => SweepAxis::PbPowerDbm,
        "circuit_power_mw" => SweepAxis::CircuitPowerMw,
        other => {
            return Err(Error::invalid(
                "axis",
                format!("unknown axis `{other}` (expected pb_power_dbm or circuit_power_mw)"),
            ))
        }
    };
    let axis_values = root
        .require("axis_values", root.array("axis_values")?)?
        .iter()
        .enumerate()
        .map(|(i, v)| {
            v.as_f64()
                .filter(|x| x.is_finite())
                .ok_or_else(|| Error::invalid(format!("axis_values[{i}]"), "expected a finite number"))
        })
        .collect::<Result<Vec<_>>>()?;
    let k_values = root
        .require("k_values", root.array("k_values")?)?
        .iter()
        .enumerate()
        .map(|(i, v)| {
            v.as_u64()
                .filter(|&k| k > 0)
                .map(|k| k as usize)
                .ok_or_else(|| Error::invalid(format!("k_values[{i}]"), "expected a positive integer"))
        })
        .collect::<Result<Vec<_>>>()?;
    let schemes = match root.array("schemes")? {
        Some(list) => list
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let name = v
                    .as_str()
                    .ok_or_else(|| Error::invalid(format!("schemes[{i}]"), "expected a string"))?;
                name.parse::<Scheme>().map_err(|e| scoped_index("schemes", i, e))
            })
            .collect::<Result<Vec<_>>>()?,
        None => Scheme::ALL.to_vec(),
    };
    let spec = SweepSpec {
        base,
        device_defaults,
        axis,
        axis_values,
        k_values,
        num_realizations: root.require("num_realizations", root.usize("num_realizations")?)?,
        base_seed: root.u64("base_seed")?.unwrap_or(0),
        schemes,
        tol: parse_tol(&root)?,
    };
    spec.validate()?;
    Ok(spec)
}

fn scoped_index(key: &str, i: usize, e: Error) -> Error {
    match e {
        Error::InvalidParameter { reason, .. } => Error::invalid(format!("{key}[{i}]"), reason),
        other => other,
    }
}

/// Reads and parses a JSON file; I/O and syntax errors name the path.
pub fn read_json(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::invalid(path.display().to_string(), e.to_string()))?;
    serde_json::from_str(&text).map_err(|e| Error::invalid(path.display().to_string(), format!("malformed JSON: {e}")))
}
