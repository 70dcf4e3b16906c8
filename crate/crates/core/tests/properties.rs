use proptest::prelude::*;

use spinchain::analysis::{enhancement_factor, linspace, nonreciprocity_contrast, transmission_at, MetricMode};
use spinchain::params::{effective_detuning, sagnac_shift};
use spinchain::presets::{resonator_pair, single_resonator};
use spinchain::response::{eta_from_delta_p, ResponseOptions};
use spinchain::steady::solve_steady_single_oracle;
use spinchain::{
    parse_config, solve_response, solve_steady, sweep_spectrum, to_config_string, ChainConfig, ProbeDirection,
    SolverOptions, SteadyOptions,
};

fn opts() -> SolverOptions {
    SolverOptions::default()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

fn pair(j: f64, w1: f64, w2: f64) -> ChainConfig {
    let mut c = resonator_pair(j);
    c.resonators[0].spin_rate = w1;
    c.resonators[1].spin_rate = w2;
    c
}

fn cases(n: u32) -> ProptestConfig {
    ProptestConfig { cases: n, ..ProptestConfig::default() }
}

proptest! {
    #![proptest_config(cases(256))]

    #[test]
    fn sagnac_shift_is_odd_and_linear(w in -1e6f64..1e6, k in -4.0f64..4.0, disp in -1e5f64..1e5) {
        let mut s = single_resonator().resonators[0];
        s.dn_dlambda = disp;
        let at = |w: f64| sagnac_shift(&spinchain::ResonatorSpec { spin_rate: w, ..s });
        prop_assert_eq!(at(-w), -at(w));
        prop_assert_eq!(at(0.0), 0.0);
        prop_assert!((at(k * w) - k * at(w)).abs() <= 1e-12 * at(w).abs().max(1.0) * k.abs().max(1.0));
    }

    #[test]
    fn backward_launch_equals_forward_with_spins_negated(w in -1e6f64..1e6) {
        let mut c = single_resonator();
        c.resonators[0].spin_rate = w;
        let mut back = c.drive;
        back.direction = ProbeDirection::Backward;
        let neg = spinchain::ResonatorSpec { spin_rate: -w, ..c.resonators[0] };
        prop_assert_eq!(effective_detuning(&c.resonators[0], &back), effective_detuning(&neg, &c.drive));
    }

    #[test]
    fn config_text_round_trips(
        w1 in -1e6f64..1e6,
        w2 in -1e6f64..1e6,
        j in 0.0f64..1e8,
        mass in 1e-15f64..1e-9,
        pump in 1e-6f64..1.0,
        backward in any::<bool>(),
        pump_all in any::<bool>(),
    ) {
        let mut c = pair(1.0, w1, w2);
        c.couplings[0] = j;
        c.resonators[1].mass = mass;
        c.drive.pump_power = pump;
        c.drive.pump_all = pump_all;
        if backward {
            c.drive.direction = ProbeDirection::Backward;
        }
        let back = parse_config(&to_config_string(&c)).unwrap();
        prop_assert_eq!(back, c);
    }
}

proptest! {
    #![proptest_config(cases(128))]

    #[test]
    fn chain_solver_matches_single_resonator_oracle(w in -150e3f64..150e3, shift in -50e6f64..250e6) {
        let mut c = single_resonator();
        c.resonators[0].spin_rate = w;
        c.drive.omega_l -= shift;
        let oracle = solve_steady_single_oracle(&c.resonators[0], &c.drive).unwrap();
        let ss = solve_steady(&c, &SteadyOptions::default()).unwrap();
        prop_assert!(rel(ss.photons()[0], oracle.a.norm_sqr()) <= 1e-9, "{} vs {}", ss.photons()[0], oracle.a.norm_sqr());
        prop_assert!(rel(ss.x[0], oracle.x) <= 1e-9);
        prop_assert!((ss.a[0] - oracle.a).norm() <= 1e-9 * oracle.a.norm());
    }

    #[test]
    fn uncoupled_top_resonator_is_invisible(
        w1 in -120e3f64..120e3,
        w2 in -120e3f64..120e3,
        kin in 1e6f64..2e7,
        dp in -40e6f64..40e6,
    ) {
        let mut two = pair(0.0, w1, w2);
        two.resonators[1].kappa_in = kin;
        let mut one = single_resonator();
        one.resonators[0].spin_rate = w1;
        // both steady states converge to 1e-12 independently, so δa_−1 agrees
        // to rounding of that order rather than bit for bit
        let ss2 = solve_steady(&two, &SteadyOptions::default()).unwrap();
        let ss1 = solve_steady(&one, &SteadyOptions::default()).unwrap();
        let r = ResponseOptions::default();
        let a2 = solve_response(&ss2, &two, eta_from_delta_p(&two, dp), &r).unwrap();
        let a1 = solve_response(&ss1, &one, eta_from_delta_p(&one, dp), &r).unwrap();
        let (d2, d1) = (a2.delta_a_minus[0], a1.delta_a_minus[0]);
        prop_assert!((d2 - d1).norm() <= 1e-10 * d1.norm(), "{d1} vs {d2}");
        // T = |1 − k δa|² cancels near critical coupling, so compare it absolutely
        prop_assert!((a1.transmission - a2.transmission).abs() <= 1e-10, "T {} vs {}", a1.transmission, a2.transmission);
    }

    #[test]
    fn chain_at_rest_is_reciprocal(j in 0.0f64..2.0, dp in -40e6f64..40e6) {
        let r = nonreciprocity_contrast(&pair(j, 0.0, 0.0), dp, &opts()).unwrap();
        prop_assert_eq!(r.forward, r.backward);
        prop_assert_eq!(r.contrast, 0.0);
    }

    #[test]
    fn contrast_is_bounded_and_flips_with_launch_direction(
        j in 0.0f64..2.0,
        w1 in -120e3f64..120e3,
        w2 in -120e3f64..120e3,
        dp in -40e6f64..40e6,
    ) {
        let c = pair(j, w1, w2);
        let f = nonreciprocity_contrast(&c, dp, &opts()).unwrap();
        let b = nonreciprocity_contrast(&c.reversed(), dp, &opts()).unwrap();
        prop_assert!((-1.0..=1.0).contains(&f.contrast));
        prop_assert_eq!(f.forward, b.backward);
        prop_assert_eq!(f.backward, b.forward);
        prop_assert_eq!(f.contrast, -b.contrast);
    }

    #[test]
    fn probe_power_drops_out_of_linear_response(
        w in -120e3f64..120e3,
        dp in -40e6f64..40e6,
        scale in 1e-3f64..1e3,
    ) {
        let c = pair(1.0, w, -w);
        let mut scaled = c.clone();
        scaled.drive.probe_power *= scale;
        let t = transmission_at(&c, dp, &opts()).unwrap();
        let ts = transmission_at(&scaled, dp, &opts()).unwrap();
        prop_assert!(rel(t, ts) <= 1e-9, "{t} vs {ts}");
    }

    #[test]
    fn enhancement_factor_ignores_probe_power(w in 1e3f64..120e3, scale in 1e-3f64..1e3) {
        let c = pair(1.0, w, w);
        let mut scaled = c.clone();
        scaled.drive.probe_power *= scale;
        let e = enhancement_factor(&c, &c.at_rest(), 10e6, &opts()).unwrap();
        let es = enhancement_factor(&scaled, &scaled.at_rest(), 10e6, &opts()).unwrap();
        prop_assert!((e - es).abs() <= 1e-8 * e.abs().max(1.0), "{e} vs {es}");
    }
}

proptest! {
    #![proptest_config(cases(32))]

    #[test]
    fn reversed_grid_gives_reversed_spectrum(j in 0.0f64..2.0, w in -120e3f64..120e3, lo in -30e6f64..0.0) {
        let c = pair(j, w, 0.0);
        let grid = linspace(lo, lo + 20e6, 201).unwrap();
        let rev: Vec<f64> = grid.iter().rev().copied().collect();
        let a = sweep_spectrum(&c, &grid, &opts()).unwrap();
        let b = sweep_spectrum(&c, &rev, &opts()).unwrap();
        let flip = |v: &[f64]| v.iter().rev().copied().collect::<Vec<f64>>();
        prop_assert_eq!(flip(&b.grid), a.grid);
        prop_assert_eq!(flip(&b.transmission), a.transmission);
        prop_assert_eq!(flip(&b.phase), a.phase);
        prop_assert_eq!(flip(&b.tau_g), a.tau_g);
    }

    #[test]
    fn sweeps_are_deterministic(w1 in -120e3f64..120e3, w2 in -120e3f64..120e3) {
        let c = pair(1.0, w1, w2);
        let grid = linspace(-20e6, 20e6, 301).unwrap();
        let a = sweep_spectrum(&c, &grid, &opts()).unwrap();
        let b = sweep_spectrum(&c, &grid, &opts()).unwrap();
        prop_assert_eq!(a.transmission, b.transmission);
        prop_assert_eq!(a.phase, b.phase);
        prop_assert_eq!(a.tau_g, b.tau_g);
    }
}

#[test]
fn metric_modes_parse_from_lowercase() {
    for (m, s) in [(MetricMode::Ef, "\"ef\""), (MetricMode::Gd, "\"gd\""), (MetricMode::Tau, "\"tau\"")] {
        assert_eq!(serde_json::to_string(&m).unwrap(), s);
        assert_eq!(m.as_str(), s.trim_matches('"'));
    }
}
