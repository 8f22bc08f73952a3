//! Fixed-seed randomized suites: norm-report orderings, Young inequalities
//! for discrete convolutions, the weakly singular time-convolution bound,
//! semigroup and maximum-principle behaviour of the half-line Dirichlet
//! solver, L² growth bounds of the odd extension, and bump perturbations of
//! the inversion formulas.

mod common;

use std::cell::RefCell;
use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use modular_burgers::abel::{m_operator_fn, AbelData, AbelProblem};
use modular_burgers::field::{GammaSignal, PerturbationField};
use modular_burgers::heat_kernel::odd_exact_solution;
use modular_burgers::quad::QuadratureSpec;

use common::{mode_field, random_modes, trapezoid_l2, INSTANCES};

#[test]
fn norm_report_orderings_hold_on_random_fields() {
    common::check_norm_orderings().unwrap();
}

#[test]
fn spatial_young_inequality_bounds_the_convolution() {
    common::check_spatial_young().unwrap();
}

#[test]
fn temporal_young_inequality_bounds_the_convolution() {
    common::check_temporal_young().unwrap();
}

#[test]
fn singular_convolution_bound_holds() {
    common::check_singular_bound().unwrap();
}

#[test]
fn dirichlet_solver_composes_as_a_semigroup() {
    common::check_semigroup().unwrap();
}

#[test]
fn dirichlet_solver_obeys_the_maximum_principle() {
    common::check_max_principle().unwrap();
}

#[test]
fn odd_evolution_l2_norms_stay_bounded() {
    // ‖u(t)‖₂ ≤ 2‖u₀‖₂, ‖u_x‖₂ ≤ 2‖u₀′‖₂ + ‖u₀‖₂,
    // ‖u_xx‖₂ ≤ 2‖u₀″‖₂ + 2‖u₀′‖₂ + ‖u₀‖₂.
    let mut rng = common::rng(7);
    let spec = QuadratureSpec::default();
    for _ in 0..INSTANCES {
        let modes = random_modes(&mut rng, true);
        let u0 = mode_field(&modes, 0.01, 1200);
        let n0 = trapezoid_l2(u0.values(), 0.01);
        let n1 = trapezoid_l2(u0.d1().unwrap(), 0.01);
        let n2 = trapezoid_l2(u0.d2().unwrap(), 0.01);
        let t: f64 = rng.gen_range(0.1..4.0);
        let evolved = |deriv: u8| {
            let samples: Vec<f64> = (0..=200)
                .map(|j| odd_exact_solution(&u0, t, 0.08 * j as f64, deriv, &spec).unwrap())
                .collect();
            trapezoid_l2(&samples, 0.08)
        };
        let l0 = evolved(0);
        let l1 = evolved(1);
        let l2 = evolved(2);
        assert!(l0 <= 2.0 * n0 + 1e-6, "t {}: value norm {} vs {}", t, l0, n0);
        assert!(
            l1 <= 2.0 * n1 + n0 + 1e-6,
            "t {}: slope norm {} vs {} {}",
            t,
            l1,
            n1,
            n0
        );
        assert!(
            l2 <= 2.0 * n2 + 2.0 * n1 + n0 + 1e-6,
            "t {}: curvature norm {} vs {} {} {}",
            t,
            l2,
            n2,
            n1,
            n0
        );
    }
}

#[test]
fn inversions_resist_random_bumps() {
    // Perturbing a solved signal by a one-signed Gaussian bump must push the
    // operator away from the right-hand side: the kernel is positive, so no
    // second signal can reproduce the same data.
    let spec = QuadratureSpec::default();
    let f = PerturbationField::from_fn_with_derivs(
        0.01,
        1200,
        |y| y * (-y).exp(),
        |y| (1.0 - y) * (-y).exp(),
        |y| (y - 2.0) * (-y).exp(),
    )
    .unwrap();
    let g = |tau: f64, eta: f64| (-tau).exp() * eta * (-eta).exp();
    let local = GammaSignal::from_fn(0.01, 150, |tau| (-tau).exp() * (1.0 + 0.3 * (3.0 * tau).sin()))
        .unwrap();
    let problems = [
        AbelProblem {
            data: AbelData::FromF(&f),
            quad: spec,
        },
        AbelProblem {
            data: AbelData::FromG(&g),
            quad: spec,
        },
        AbelProblem {
            data: AbelData::Local(&local),
            quad: spec,
        },
    ];
    let t = 1.0;
    let mut rng = ChaCha8Rng::seed_from_u64(0x62756d70);
    for problem in &problems {
        let rhs = problem.rhs(t).unwrap();
        // The operator revisits the same quadrature nodes for every bump, so
        // the solved signal is cached by node.
        let cache: RefCell<HashMap<u64, f64>> = RefCell::new(HashMap::new());
        let solved = |tau: f64| {
            if let Some(v) = cache.borrow().get(&tau.to_bits()) {
                return *v;
            }
            let v = problem.solve(tau).unwrap_or(f64::NAN);
            cache.borrow_mut().insert(tau.to_bits(), v);
            v
        };
        let base = (m_operator_fn(&solved, t, &spec).unwrap() - rhs).abs();
        for _ in 0..20 {
            let eps = rng.gen_range(0.02..0.2) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            let center: f64 = rng.gen_range(0.1..0.9);
            let width: f64 = rng.gen_range(0.05..0.3);
            let bumped = |tau: f64| {
                solved(tau) + eps * (-(tau - center) * (tau - center) / (width * width)).exp()
            };
            let pushed = (m_operator_fn(&bumped, t, &spec).unwrap() - rhs).abs();
            assert!(
                pushed > base + 1e-4,
                "bump ({}, {}, {}): residual {} vs base {}",
                eps,
                center,
                width,
                pushed,
                base
            );
        }
    }
}
