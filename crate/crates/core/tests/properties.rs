use proptest::prelude::*;

use wpcn::model::{dbm_to_watts, noma_sum_rate, rate_noma_per_user, Instance, SystemParams};
use wpcn::{solve_noma, solve_tdma, DEFAULT_TOL};

type Gains = (f64, f64, f64, f64);

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

fn log_uniform(lo: f64, hi: f64) -> impl Strategy<Value = f64> {
    (lo.log10()..hi.log10()).prop_map(|e| 10f64.powf(e))
}

/// `(eta, p_c, h, g)` in the ranges the default geometry produces.
fn device() -> impl Strategy<Value = Gains> {
    (
        0.2f64..=1.0,
        prop_oneof![Just(0.0), 1e-6f64..5e-4],
        log_uniform(1e-6, 1e-3),
        log_uniform(1e-9, 1e-6),
    )
}

fn params(pb_dbm: f64) -> SystemParams {
    SystemParams {
        pb_power_watts: dbm_to_watts(pb_dbm),
        ..SystemParams::default()
    }
}

fn build(pb_dbm: f64, devices: &[Gains]) -> Instance {
    Instance::from_gains(params(pb_dbm), devices).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sic_rates_telescope_to_sum_rate(
        devices in prop::collection::vec(device(), 1..8),
        powers in prop::collection::vec(0.0f64..1e-2, 8),
        tau1 in 1e-3f64..0.1,
    ) {
        let inst = build(34.0, &devices);
        let p = &powers[..inst.len()];
        let per_user: f64 = (0..inst.len()).map(|k| rate_noma_per_user(k, tau1, p, &inst)).sum();
        prop_assert!(rel(per_user, noma_sum_rate(tau1, p, &inst)) < 1e-12);
    }

    #[test]
    fn devices_are_sorted_and_order_does_not_matter(
        devices in prop::collection::vec(device(), 1..8),
        pb in 28.0f64..40.0,
    ) {
        let inst = build(pb, &devices);
        prop_assert!(inst.devices().windows(2).all(|w| w[0].gamma() <= w[1].gamma()));
        let mut reversed = devices.clone();
        reversed.reverse();
        let other = build(pb, &reversed);
        let (_, a) = solve_tdma(&inst, DEFAULT_TOL).unwrap();
        let (_, b) = solve_tdma(&other, DEFAULT_TOL).unwrap();
        prop_assert!(rel(a.objective_bits_per_hz, b.objective_bits_per_hz) < 1e-10);
        let (_, a) = solve_noma(&inst, DEFAULT_TOL).unwrap();
        let (_, b) = solve_noma(&other, DEFAULT_TOL).unwrap();
        prop_assert!(rel(a.objective_bits_per_hz, b.objective_bits_per_hz) < 1e-10);
    }

    /// Noise and uplink gain only enter through `γ = g / σ²`.
    #[test]
    fn scaling_noise_and_uplink_gain_together_changes_nothing(
        devices in prop::collection::vec(device(), 1..6),
        pb in 28.0f64..40.0,
        scale in log_uniform(1e-3, 1e3),
    ) {
        let base = build(pb, &devices);
        let scaled_devices: Vec<Gains> = devices.iter().map(|&(e, c, h, g)| (e, c, h, g * scale)).collect();
        let mut p = params(pb);
        p.noise_watts *= scale;
        let scaled = Instance::from_gains(p, &scaled_devices).unwrap();
        for (a, b) in [
            (solve_tdma(&base, DEFAULT_TOL).unwrap().1, solve_tdma(&scaled, DEFAULT_TOL).unwrap().1),
            (solve_noma(&base, DEFAULT_TOL).unwrap().1, solve_noma(&scaled, DEFAULT_TOL).unwrap().1),
        ] {
            prop_assert!(rel(a.objective_bits_per_hz, b.objective_bits_per_hz) < 1e-9);
            prop_assert!(rel(a.tau0_seconds, b.tau0_seconds) < 1e-9);
        }
    }

    #[test]
    fn throughput_grows_with_beacon_power(
        devices in prop::collection::vec(device(), 1..8),
        pb in 28.0f64..39.0,
        step in 0.1f64..1.0,
    ) {
        let low = build(pb, &devices);
        let high = low.with_pb_power(dbm_to_watts(pb + step)).unwrap();
        let guard = 1e-10;
        let (t_lo, t_hi) = (solve_tdma(&low, DEFAULT_TOL).unwrap().1, solve_tdma(&high, DEFAULT_TOL).unwrap().1);
        prop_assert!(t_hi.objective_bits_per_hz >= t_lo.objective_bits_per_hz * (1.0 - guard));
        let (n_lo, n_hi) = (solve_noma(&low, DEFAULT_TOL).unwrap().1, solve_noma(&high, DEFAULT_TOL).unwrap().1);
        prop_assert!(n_hi.objective_bits_per_hz >= n_lo.objective_bits_per_hz * (1.0 - guard));
    }

    #[test]
    fn single_device_schemes_coincide(d in device(), pb in 28.0f64..40.0) {
        let inst = build(pb, &[d]);
        let (ta, tr) = solve_tdma(&inst, DEFAULT_TOL).unwrap();
        let (na, nr) = solve_noma(&inst, DEFAULT_TOL).unwrap();
        prop_assert!(rel(tr.objective_bits_per_hz, nr.objective_bits_per_hz) < 1e-9);
        prop_assert!((ta.tau0 - na.tau0).abs() < 1e-9 * inst.horizon());
        prop_assert!(rel(ta.powers[0], na.powers[0]) < 1e-6);
    }

    #[test]
    fn theorem_orderings_and_budget(
        devices in prop::collection::vec(device(), 1..10),
        pb in 28.0f64..40.0,
    ) {
        let inst = build(pb, &devices);
        let horizon = inst.horizon();
        let (ta, tr) = solve_tdma(&inst, DEFAULT_TOL).unwrap();
        let (na, nr) = solve_noma(&inst, DEFAULT_TOL).unwrap();
        prop_assert!(na.tau0 >= ta.tau0 - 1e-9 * horizon);
        prop_assert!(tr.objective_bits_per_hz >= nr.objective_bits_per_hz * (1.0 - 1e-9));
        prop_assert!((ta.tau0 + ta.ul_time() - horizon).abs() < 1e-12 * horizon);
        prop_assert!((na.tau0 + na.tau1 - horizon).abs() < 1e-12 * horizon);
        prop_assert!(ta.powers.iter().chain(&na.powers).all(|&p| p >= 0.0));
    }
}
