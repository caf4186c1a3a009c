use flowdecomp_core::canonical_model::*;
use proptest::prelude::*;

fn economy(types: Vec<WorkerTypeSpec>, phi: f64) -> EconomySpec {
    EconomySpec { alpha: 0.3, lambda_capital: Lambda::Infinite, tfp: 1.0, types, phi_override: Some(phi) }
}

/// Solves the log-linear equilibrium for a small shock by bisection and
/// returns finite-difference responses (pure wage, employment, regional wage).
fn equilibrium_oracle(types: &[WorkerTypeSpec], phi: f64, c: f64) -> (f64, f64, f64) {
    let di = 1e-7;
    let l0: f64 = types.iter().map(|t| t.theta * t.count).sum();
    let e0: f64 = types.iter().map(|t| t.count).sum();
    let supply = |lw: f64| -> f64 {
        types.iter().map(|t| t.theta * t.count * (t.eta * lw).exp()).sum::<f64>() + c * di * l0
    };
    // Excess: log w − φ log(L^S(w)/L0), monotone increasing in log w for φ ≤ 0.
    let excess = |lw: f64| lw - phi * (supply(lw) / l0).ln();
    let (mut lo, mut hi) = (-1e-3, 1e-3);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if excess(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let lw = 0.5 * (lo + hi);
    let heads: f64 = types.iter().map(|t| t.count * (t.eta * lw).exp()).sum();
    let eff: f64 = types.iter().map(|t| t.theta * t.count * (t.eta * lw).exp()).sum();
    let log_e = (heads / e0).ln();
    let log_reg = lw + (eff / heads).ln() - (l0 / e0).ln();
    (lw / di, log_e / di, log_reg / di)
}

#[test]
fn headline_calibration_reproduces_reduced_form() {
    let r = responses_from_parameters(-1.95, 3.68, 4.64, 0.789).unwrap();
    assert!((r.pure_wage - -0.188).abs() <= 0.002, "{}", r.pure_wage);
    assert!((r.employment - -0.873).abs() <= 0.002, "{}", r.employment);
    assert!((r.regional_wage - -0.008).abs() <= 0.002, "{}", r.regional_wage);
}

#[test]
fn forward_matches_numerical_equilibrium() {
    let types = vec![
        WorkerTypeSpec::new(0.7, 7.0, 30.0),
        WorkerTypeSpec::new(1.0, 4.0, 40.0),
        WorkerTypeSpec::new(1.5, 1.0, 30.0),
    ];
    for &(phi, c) in &[(-1.95, 0.789), (-0.3, 1.0), (-0.05, 0.5)] {
        let r = forward_responses(&economy(types.clone(), phi), &ShockSpec { d_i_head: 0.01, c_ratio: c }).unwrap();
        let (w, e, reg) = equilibrium_oracle(&types, phi, c);
        assert!((r.pure_wage / w - 1.0).abs() < 1e-4, "phi={phi}: {} vs {w}", r.pure_wage);
        assert!((r.employment / e - 1.0).abs() < 1e-4, "phi={phi}: {} vs {e}", r.employment);
        assert!((r.regional_wage / reg - 1.0).abs() < 1e-4, "phi={phi}: {} vs {reg}", r.regional_wage);
    }
}

#[test]
fn cobb_douglas_phi_is_used_without_override() {
    let mut econ = economy(vec![WorkerTypeSpec::new(1.0, 2.0, 10.0)], 0.0);
    econ.phi_override = None;
    econ.lambda_capital = Lambda::Finite(1.0);
    let r = forward_responses(&econ, &ShockSpec { d_i_head: 0.1, c_ratio: 1.0 }).unwrap();
    assert!((r.phi - -0.3 / 1.7).abs() < 1e-15);
}

#[test]
fn equal_elasticities_leave_no_composition_wedge() {
    let types = vec![WorkerTypeSpec::new(0.5, 3.0, 1.0), WorkerTypeSpec::new(2.0, 3.0, 5.0)];
    let r = forward_responses(&economy(types, -1.0), &ShockSpec { d_i_head: 0.1, c_ratio: 0.8 }).unwrap();
    assert_eq!(r.eta_eff, r.eta_pop);
    assert_eq!(r.regional_wage, r.pure_wage);
}

#[test]
fn single_type_collapses_weightings() {
    let (eff, pop) = weighted_elasticities(&[WorkerTypeSpec::new(1.0, 2.0, 10.0)]).unwrap();
    assert_eq!((eff, pop), (2.0, 2.0));
}

fn type_strategy() -> impl Strategy<Value = WorkerTypeSpec> {
    (0.2f64..3.0, 0.0f64..8.0, 0.5f64..100.0).prop_map(|(t, e, n)| WorkerTypeSpec::new(t, e, n))
}

proptest! {
    #[test]
    fn phi_bounded_and_monotone(alpha in 0.01f64..0.99, l1 in 0.0f64..50.0, dl in 0.0f64..50.0) {
        let p1 = inverse_demand_elasticity(alpha, Lambda::Finite(l1)).unwrap();
        let p2 = inverse_demand_elasticity(alpha, Lambda::Finite(l1 + dl)).unwrap();
        let pinf = inverse_demand_elasticity(alpha, Lambda::Infinite).unwrap();
        prop_assert!(p1 <= 0.0 && p1 >= -alpha);
        prop_assert!(p2 <= p1 + 1e-15);
        prop_assert!(pinf <= p2);
    }

    #[test]
    fn response_ratios_exact(types in prop::collection::vec(type_strategy(), 1..6), phi in -3.0f64..-0.01, c in 0.2f64..2.0) {
        let r = forward_responses(&economy(types, phi), &ShockSpec { d_i_head: 0.05, c_ratio: c }).unwrap();
        prop_assume!(r.pure_wage != 0.0);
        prop_assert!((r.employment / r.pure_wage / r.eta_pop - 1.0).abs() < 1e-12 || r.eta_pop == 0.0);
        let wedge = 1.0 + r.eta_eff - r.eta_pop;
        prop_assert!((r.regional_wage - r.pure_wage * wedge).abs() <= 1e-12 * r.regional_wage.abs().max(1e-300));
    }

    #[test]
    fn permutation_invariant(types in prop::collection::vec(type_strategy(), 2..6), phi in -3.0f64..0.0) {
        let shock = ShockSpec { d_i_head: 0.05, c_ratio: 0.9 };
        let a = forward_responses(&economy(types.clone(), phi), &shock).unwrap();
        let mut rev = types.clone();
        rev.reverse();
        let b = forward_responses(&economy(rev, phi), &shock).unwrap();
        prop_assert!((a.eta_eff - b.eta_eff).abs() < 1e-12 * a.eta_eff.abs().max(1.0));
        prop_assert!((a.eta_pop - b.eta_pop).abs() < 1e-12 * a.eta_pop.abs().max(1.0));
        prop_assert!((a.regional_wage - b.regional_wage).abs() < 1e-12);
    }

    #[test]
    fn theta_scale_and_tfp_invariant(types in prop::collection::vec(type_strategy(), 1..6), k in 0.1f64..10.0, tfp in 0.1f64..10.0) {
        let shock = ShockSpec { d_i_head: 0.05, c_ratio: 0.9 };
        let a = forward_responses(&economy(types.clone(), -1.0), &shock).unwrap();
        let scaled: Vec<_> = types.iter().map(|t| WorkerTypeSpec::new(t.theta * k, t.eta, t.count)).collect();
        let mut econ = economy(scaled, -1.0);
        econ.tfp = tfp;
        let b = forward_responses(&econ, &shock).unwrap();
        prop_assert!((a.eta_eff - b.eta_eff).abs() < 1e-12 * a.eta_eff.abs().max(1.0));
        prop_assert!((a.pure_wage - b.pure_wage).abs() < 1e-12);
        prop_assert!((a.employment - b.employment).abs() < 1e-12);
        prop_assert!((a.regional_wage - b.regional_wage).abs() < 1e-12);
    }

    #[test]
    fn components_reproduce_eta(p0 in 0.01f64..1.0, de in -2.0f64..2.0, dn in -2.0f64..2.0, dr in -2.0f64..2.0) {
        let comp = elasticity_components(&TypeFlows {
            p_employed_r0: p0,
            d_employed_given_r0: de,
            d_enter_given_not_r0: dn,
            d_relocate_given_r0: dr,
        }).unwrap();
        // Oracle: derivative of Pr(d_r1 = 1)/Pr(d_r0 = 1) assembled from the
        // stay-in-region and entry margins directly.
        let d_stay = de - dr;
        let direct = (p0 * d_stay + (1.0 - p0) * dn) / p0;
        prop_assert!((comp.eta() - direct).abs() < 1e-12 * direct.abs().max(1.0));
    }
}
