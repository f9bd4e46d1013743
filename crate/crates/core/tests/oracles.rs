//! Frozen reference values and reference error levels.

use approx::assert_relative_eq;
use mac_swe::cases::{vortex_f_integral, CaseName, CaseSpec, DropParams, RiemannSolution};
use mac_swe::diagnostics::l1_error;
use mac_swe::driver::{convergence, riemann_table};
use mac_swe::reconstruct::LimiterConfig;
use mac_swe::schemes::{run, RunLimit, SchemeKind};

#[test]
fn riemann_star_state_frozen() {
    let s = RiemannSolution::solve(1.0, 0.0, 0.2, 0.0, 9.81, 0.5).unwrap();
    assert_relative_eq!(s.h_star, 0.507871, max_relative = 2e-6);
    assert_relative_eq!(s.u_star, 1.800007, max_relative = 2e-6);
    assert_relative_eq!(s.right_shock_speed(), 2.96933, max_relative = 2e-6);
}

#[test]
fn drop_period_frozen() {
    let p = DropParams::new(9.81);
    assert_relative_eq!(p.omega(), 1.40071, max_relative = 1e-5);
    assert_relative_eq!(p.period3(), 13.458, max_relative = 1e-4);
}

#[test]
fn vortex_profile_integral() {
    assert_relative_eq!(vortex_f_integral(1.0), 10.0 / 63.0, max_relative = 1e-13);
    assert_eq!(vortex_f_integral(3.0), vortex_f_integral(1.0));
}

/// The first-order Riemann error sets the threshold of the second-order check.
#[test]
fn first_order_riemann_reference_frozen() {
    let (_, m) = riemann_table(200, SchemeKind::EulerUpwind, LimiterConfig::muscl()).unwrap();
    assert_relative_eq!(m.l1_h, 4.39e-3, max_relative = 0.01);
    assert_eq!(m.shock_cells, 2);
}

/// `g h` and `u` are unchanged when `g` varies, so `err_h` scales like `1/g`.
#[test]
fn vortex_errors_scale_with_gravity() {
    let mut errs = Vec::new();
    for g in [1.0, 9.81] {
        let case = CaseSpec::build(CaseName::Vortex, 16, Some(g)).unwrap();
        let end = run(case.initial.clone(), &case.z, &case.mesh, &case.scheme_config(SchemeKind::HeunMuscl), RunLimit::Time(case.t_end), |_, _, _| {}).unwrap();
        errs.push(l1_error(&end, case.exact.as_ref().unwrap().as_ref(), &case.mesh, case.t_end));
    }
    assert_relative_eq!(errs[0].0, 9.81 * errs[1].0, max_relative = 1e-9);
    assert_relative_eq!(errs[0].1, errs[1].1, max_relative = 1e-9);
}

/// Reference vortex errors at 32² and 64², reproduced with `g = 9.81`.
#[test]
fn vortex_errors_match_reference_values() {
    let heun = convergence(CaseName::Vortex, SchemeKind::HeunMuscl, &[32, 64], Some(9.81), |_| {}).unwrap();
    let up = convergence(CaseName::Vortex, SchemeKind::EulerUpwind, &[32, 64], Some(9.81), |_| {}).unwrap();
    for (row, (eh, eu)) in heun.iter().zip([(3.61e-3, 2.93e-1), (1.15e-3, 1.14e-1)]) {
        assert_relative_eq!(row.err_h, eh, max_relative = 0.05);
        assert_relative_eq!(row.err_u, eu, max_relative = 0.06);
    }
    for (row, (eh, eu)) in up.iter().zip([(8.04e-3, 6.55e-1), (5.56e-3, 4.84e-1)]) {
        assert_relative_eq!(row.err_h, eh, max_relative = 0.05);
        assert_relative_eq!(row.err_u, eu, max_relative = 0.05);
    }
}
