//! C ABI over the `wpcn` solvers.
//!
//! Instances and solutions are opaque heap handles released with their
//! `_free` function. Every fallible call returns a [`WpcnStatus`] code and,
//! on failure, leaves a message retrievable with [`wpcn_last_error_message`]
//! on the same thread. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use wpcn::baselines::{solve_noma_fixed_wet, solve_tdma_fixed_wet};
use wpcn::config::parse_solve_config_str;
use wpcn::model::{sample_instance, DeviceDefaults, Instance, SystemParams};
use wpcn::verify::{check_theorem1, check_theorem2};
use wpcn::{solve_noma, solve_tdma, Error, Scheme, SolveReport};

#[repr(i32)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WpcnStatus {
    Ok = 0,
    NullPointer = 1,
    /// A parameter, channel or document was rejected.
    InvalidArgument = 2,
    /// A root finder failed or the instance is degenerate.
    SolverFailure = 3,
    /// The caller's buffer is shorter than the required length.
    BufferTooSmall = 4,
    Panic = 5,
}

#[repr(u32)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WpcnScheme {
    TdmaOpt = 0,
    NomaOpt = 1,
    /// Half the horizon for energy transfer.
    TdmaFixed = 2,
    NomaFixed = 3,
}

impl WpcnScheme {
    fn from_raw(raw: u32) -> Option<Scheme> {
        Some(match raw {
            0 => Scheme::TdmaOpt,
            1 => Scheme::NomaOpt,
            2 => Scheme::TdmaFixed,
            3 => Scheme::NomaFixed,
            _ => return None,
        })
    }

    fn to_raw(s: Scheme) -> u32 {
        match s {
            Scheme::TdmaOpt => WpcnScheme::TdmaOpt as u32,
            Scheme::NomaOpt => WpcnScheme::NomaOpt as u32,
            Scheme::TdmaFixed => WpcnScheme::TdmaFixed as u32,
            Scheme::NomaFixed => WpcnScheme::NomaFixed as u32,
        }
    }
}

/// Mirror of the system parameters; fill with [`wpcn_default_params`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct WpcnSystemParams {
    pub pb_power_watts: f64,
    pub horizon_seconds: f64,
    pub noise_watts: f64,
    pub num_devices: usize,
    pub pathloss_exponent: f64,
    pub bandwidth_hz: f64,
    pub pb_ap_distance_m: f64,
    pub cell_radius_m: f64,
    pub reference_distance_m: f64,
}

impl From<&SystemParams> for WpcnSystemParams {
    fn from(p: &SystemParams) -> Self {
        WpcnSystemParams {
            pb_power_watts: p.pb_power_watts,
            horizon_seconds: p.horizon_seconds,
            noise_watts: p.noise_watts,
            num_devices: p.num_devices,
            pathloss_exponent: p.pathloss_exponent,
            bandwidth_hz: p.bandwidth_hz,
            pb_ap_distance_m: p.pb_ap_distance_m,
            cell_radius_m: p.cell_radius_m,
            reference_distance_m: p.reference_distance_m,
        }
    }
}

impl From<&WpcnSystemParams> for SystemParams {
    fn from(p: &WpcnSystemParams) -> Self {
        SystemParams {
            pb_power_watts: p.pb_power_watts,
            horizon_seconds: p.horizon_seconds,
            noise_watts: p.noise_watts,
            num_devices: p.num_devices,
            pathloss_exponent: p.pathloss_exponent,
            bandwidth_hz: p.bandwidth_hz,
            pb_ap_distance_m: p.pb_ap_distance_m,
            cell_radius_m: p.cell_radius_m,
            reference_distance_m: p.reference_distance_m,
        }
    }
}

/// Scheme-independent summary of a solution.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct WpcnSummary {
    /// A [`WpcnScheme`] value.
    pub scheme: u32,
    pub num_devices: usize,
    pub objective_bits_per_hz: f64,
    pub throughput_bits_per_second: f64,
    pub energy_joules: f64,
    pub tau0_seconds: f64,
    pub ul_time_seconds: f64,
    pub iterations_outer: u32,
    pub iterations_inner: u64,
    pub max_kkt_residual: f64,
    pub budget_active: bool,
    /// Device whose harvest limits the NOMA uplink, or -1.
    pub bottleneck_device: i64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct WpcnTheoremReport {
    pub tau0_tdma: f64,
    pub tau0_noma: f64,
    pub e_tdma: f64,
    pub e_noma: f64,
    pub r_tdma: f64,
    pub r_noma: f64,
    pub r_constructed: f64,
    /// NOMA transfer time and energy are at least TDMA's.
    pub transfer_pass: bool,
    /// TDMA throughput is at least NOMA's.
    pub throughput_pass: bool,
    pub throughput_strict: bool,
}

/// Opaque problem instance.
pub struct WpcnInstance(Instance);

/// Opaque solution of one scheme.
pub struct WpcnSolution {
    report: SolveReport,
    powers: Vec<f64>,
    /// `[τ0, τ_1, …, τ_K]` for TDMA, `[τ0, τ̄1]` for NOMA.
    times: Vec<f64>,
    horizon: f64,
    num_devices: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: impl Into<String>) {
    let text = message.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).unwrap_or_default());
}

fn status_of(e: &Error) -> WpcnStatus {
    if e.is_config_error() || matches!(e, Error::Domain { .. } | Error::Dimension { .. }) {
        WpcnStatus::InvalidArgument
    } else {
        WpcnStatus::SolverFailure
    }
}

/// Runs `body`, converting errors and panics into status codes.
fn guard(body: impl FnOnce() -> Result<(), (WpcnStatus, String)>) -> WpcnStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            set_error("");
            WpcnStatus::Ok
        }
        Ok(Err((status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal panic");
            WpcnStatus::Panic
        }
    }
}

fn core_err(e: Error) -> (WpcnStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (WpcnStatus, String) {
    (WpcnStatus::NullPointer, format!("`{what}` is null"))
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, (WpcnStatus, String)> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn store<T>(out: *mut *mut T, value: T) -> Result<(), (WpcnStatus, String)> {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn copy_into(src: &[f64], buf: *mut f64, len: usize) -> Result<(), (WpcnStatus, String)> {
    if len < src.len() {
        return Err((
            WpcnStatus::BufferTooSmall,
            format!("buffer holds {len} values, {} needed", src.len()),
        ));
    }
    if buf.is_null() {
        return Err(null("buf"));
    }
    ptr::copy_nonoverlapping(src.as_ptr(), buf, src.len());
    Ok(())
}

/// Message of the last failed call on this thread, or an empty string.
/// Valid until the next `wpcn_` call on the same thread.
#[no_mangle]
pub extern "C" fn wpcn_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

#[no_mangle]
pub extern "C" fn wpcn_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

#[no_mangle]
pub extern "C" fn wpcn_dbm_to_watts(level_dbm: f64) -> f64 {
    wpcn::model::dbm_to_watts(level_dbm)
}

/// Writes the default scenario parameters to `out`.
///
/// # Safety
/// `out` must be null or point to writable memory for one struct.
#[no_mangle]
pub unsafe extern "C" fn wpcn_default_params(out: *mut WpcnSystemParams) -> WpcnStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = WpcnSystemParams::from(&SystemParams::default());
        Ok(())
    })
}

/// Builds an instance from a JSON document in the CLI's `solve` format.
///
/// # Safety
/// `json` must be null or a NUL-terminated string; `out` must be null or
/// writable.
#[no_mangle]
pub unsafe extern "C" fn wpcn_instance_from_json(json: *const c_char, out: *mut *mut WpcnInstance) -> WpcnStatus {
    guard(|| {
        if json.is_null() {
            return Err(null("json"));
        }
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|e| (WpcnStatus::InvalidArgument, format!("json is not UTF-8: {e}")))?;
        let cfg = parse_solve_config_str(text).map_err(core_err)?;
        store(out, WpcnInstance(cfg.instance))
    })
}

/// Builds an instance from per-device arrays of length `num_devices`.
/// `params.num_devices` is ignored.
///
/// # Safety
/// Each array must hold `num_devices` readable values; `out` must be null
/// or writable.
#[no_mangle]
pub unsafe extern "C" fn wpcn_instance_from_arrays(
    params: *const WpcnSystemParams,
    num_devices: usize,
    eta: *const f64,
    circuit_power_watts: *const f64,
    dl_gain: *const f64,
    ul_gain: *const f64,
    out: *mut *mut WpcnInstance,
) -> WpcnStatus {
    guard(|| {
        let params = SystemParams::from(deref(params, "params")?);
        if num_devices == 0 {
            return Err((WpcnStatus::InvalidArgument, "`num_devices` must be at least 1".into()));
        }
        let slice = |p: *const f64, what: &str| -> Result<&[f64], (WpcnStatus, String)> {
            if p.is_null() {
                Err(null(what))
            } else {
                Ok(std::slice::from_raw_parts(p, num_devices))
            }
        };
        let (e, c, h, g) = (
            slice(eta, "eta")?,
            slice(circuit_power_watts, "circuit_power_watts")?,
            slice(dl_gain, "dl_gain")?,
            slice(ul_gain, "ul_gain")?,
        );
        let devices: Vec<_> = (0..num_devices).map(|k| (e[k], c[k], h[k], g[k])).collect();
        let inst = Instance::from_gains(params, &devices).map_err(core_err)?;
        store(out, WpcnInstance(inst))
    })
}

/// Draws `params.num_devices` devices with the given efficiency and circuit power.
///
/// # Safety
/// `params` must be null or readable; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn wpcn_instance_sample(
    params: *const WpcnSystemParams,
    eta: f64,
    circuit_power_watts: f64,
    seed: u64,
    out: *mut *mut WpcnInstance,
) -> WpcnStatus {
    guard(|| {
        let params = SystemParams::from(deref(params, "params")?);
        let defaults = DeviceDefaults {
            eta,
            circuit_power_watts,
        };
        let inst = sample_instance(&params, &defaults, seed).map_err(core_err)?;
        store(out, WpcnInstance(inst))
    })
}

/// # Safety
/// `inst` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn wpcn_instance_free(inst: *mut WpcnInstance) {
    if !inst.is_null() {
        drop(Box::from_raw(inst));
    }
}

/// Number of devices, or 0 for a null handle.
///
/// # Safety
/// `inst` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn wpcn_instance_num_devices(inst: *const WpcnInstance) -> usize {
    inst.as_ref().map_or(0, |i| i.0.len())
}

/// Normalized uplink gains in the solver's (ascending) device order.
///
/// # Safety
/// `inst` must be null or a live handle; `buf` must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn wpcn_instance_gammas(inst: *const WpcnInstance, buf: *mut f64, len: usize) -> WpcnStatus {
    guard(|| {
        let inst = &deref(inst, "inst")?.0;
        let gammas: Vec<f64> = inst.devices().iter().map(|d| d.gamma()).collect();
        copy_into(&gammas, buf, len)
    })
}

/// Solves `inst` under `scheme` (a [`WpcnScheme`] value).
///
/// # Safety
/// `inst` must be null or a live handle; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn wpcn_solve(
    inst: *const WpcnInstance,
    scheme: u32,
    tol: f64,
    out: *mut *mut WpcnSolution,
) -> WpcnStatus {
    guard(|| {
        let inst = &deref(inst, "inst")?.0;
        let scheme = WpcnScheme::from_raw(scheme)
            .ok_or_else(|| (WpcnStatus::InvalidArgument, format!("unknown scheme {scheme}")))?;
        let half = inst.horizon() / 2.0;
        let (report, powers, times) = match scheme {
            Scheme::TdmaOpt | Scheme::TdmaFixed => {
                let (a, r) = if scheme == Scheme::TdmaOpt {
                    solve_tdma(inst, tol)
                } else {
                    solve_tdma_fixed_wet(inst, half, tol)
                }
                .map_err(core_err)?;
                let times = std::iter::once(a.tau0).chain(a.tau.iter().copied()).collect();
                (r, a.powers, times)
            }
            Scheme::NomaOpt | Scheme::NomaFixed => {
                let (a, r) = if scheme == Scheme::NomaOpt {
                    solve_noma(inst, tol)
                } else {
                    solve_noma_fixed_wet(inst, half, tol)
                }
                .map_err(core_err)?;
                (r, a.powers, vec![a.tau0, a.tau1])
            }
        };
        store(
            out,
            WpcnSolution {
                report,
                powers,
                times,
                horizon: inst.horizon(),
                num_devices: inst.len(),
            },
        )
    })
}

/// # Safety
/// `sol` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn wpcn_solution_free(sol: *mut WpcnSolution) {
    if !sol.is_null() {
        drop(Box::from_raw(sol));
    }
}

/// # Safety
/// `sol` must be null or a live handle; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn wpcn_solution_summary(sol: *const WpcnSolution, out: *mut WpcnSummary) -> WpcnStatus {
    guard(|| {
        let sol = deref(sol, "sol")?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let r = &sol.report;
        *out = WpcnSummary {
            scheme: WpcnScheme::to_raw(r.scheme),
            num_devices: sol.num_devices,
            objective_bits_per_hz: r.objective_bits_per_hz,
            throughput_bits_per_second: r.throughput_bits_per_second,
            energy_joules: r.energy_joules,
            tau0_seconds: r.tau0_seconds,
            ul_time_seconds: r.ul_time_seconds,
            iterations_outer: r.iterations_outer,
            iterations_inner: r.iterations_inner,
            max_kkt_residual: r.kkt.max_relative(sol.horizon),
            budget_active: r.budget_active,
            bottleneck_device: r.bottleneck_device.map_or(-1, |k| k as i64),
        };
        Ok(())
    })
}

/// Transmit powers in watts, one per device in solver order.
///
/// # Safety
/// `sol` must be null or a live handle; `buf` must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn wpcn_solution_powers(sol: *const WpcnSolution, buf: *mut f64, len: usize) -> WpcnStatus {
    guard(|| copy_into(&deref(sol, "sol")?.powers, buf, len))
}

/// Length of the time vector: `K + 1` for TDMA, 2 for NOMA, 0 for null.
///
/// # Safety
/// `sol` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn wpcn_solution_num_times(sol: *const WpcnSolution) -> usize {
    sol.as_ref().map_or(0, |s| s.times.len())
}

/// Time allocation in seconds: `[τ0, τ_1, …, τ_K]` for TDMA schemes and
/// `[τ0, τ̄1]` for NOMA schemes.
///
/// # Safety
/// `sol` must be null or a live handle; `buf` must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn wpcn_solution_times(sol: *const WpcnSolution, buf: *mut f64, len: usize) -> WpcnStatus {
    guard(|| copy_into(&deref(sol, "sol")?.times, buf, len))
}

/// Compares both optimal schemes on `inst`; `tol` is relative.
///
/// # Safety
/// `inst` must be null or a live handle; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn wpcn_check_theorems(
    inst: *const WpcnInstance,
    tol: f64,
    out: *mut WpcnTheoremReport,
) -> WpcnStatus {
    guard(|| {
        let inst = &deref(inst, "inst")?.0;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        if !(0.0..1.0).contains(&tol) {
            return Err((WpcnStatus::InvalidArgument, "`tol` must lie in [0, 1)".into()));
        }
        let t1 = check_theorem1(inst, tol).map_err(core_err)?;
        let t2 = check_theorem2(inst, tol).map_err(core_err)?;
        *out = WpcnTheoremReport {
            tau0_tdma: t1.tau0_tdma,
            tau0_noma: t1.tau0_noma,
            e_tdma: t1.e_tdma,
            e_noma: t1.e_noma,
            r_tdma: t2.r_tdma,
            r_noma: t2.r_noma,
            r_constructed: t2.r_constructed,
            transfer_pass: t1.pass,
            throughput_pass: t2.pass,
            throughput_strict: t2.strict,
        };
        Ok(())
    })
}
