//! Inversion-formula checks: the operator against a dense two-dimensional
//! oracle, the integration-by-parts twin forms against each other, the
//! forcing/local reduction identity, and residuals of all three inversions.

use modular_burgers::abel::{
    m_operator, m_operator_fn, solve_abel_from_f, solve_abel_from_f_unintegrated,
    solve_abel_from_g, solve_abel_local, AbelData, AbelProblem,
};
use modular_burgers::field::{GammaSignal, PerturbationField};
use modular_burgers::quad::QuadratureSpec;

fn trapezoid(a: f64, b: f64, n: usize, f: impl Fn(f64) -> f64) -> f64 {
    let h = (b - a) / n as f64;
    let mut acc = 0.5 * (f(a) + f(b));
    for i in 1..n {
        acc += f(a + i as f64 * h);
    }
    acc * h
}

#[test]
fn operator_on_the_unit_signal_matches_dense_oracle() {
    let spec = QuadratureSpec::default();
    let one = GammaSignal::constant(1.0, 1.0);
    let t = 1.0;
    let got = m_operator(&one, t, &spec).unwrap();

    // Oracle in substituted variables: with σ = s² and η = s·v the operator
    // becomes 2t^{1/2}π^{-1/2} − (4π)^{-1/2}·2∫₀^{√t} s ∫₀^∞ e^{-sv/2-v²/4} dv ds,
    // a smooth double integral safe for plain trapezoid sums.
    let inner = |s: f64| trapezoid(0.0, 14.0, 40_000, |v| (-0.5 * s * v - 0.25 * v * v).exp());
    let second = (4.0 * std::f64::consts::PI).sqrt().recip()
        * 2.0
        * trapezoid(0.0, t.sqrt(), 4_000, |s| s * inner(s));
    let oracle = 2.0 * t.sqrt() / std::f64::consts::PI.sqrt() - second;

    assert!((got - oracle).abs() < 1e-6, "got {got}, oracle {oracle}");
    assert!((got - 7.686193116e-1).abs() < 1e-6, "drifted from frozen value: {got}");
}

#[test]
fn operator_is_linear() {
    let spec = QuadratureSpec::default();
    let g1 = |tau: f64| (1.0 + tau).sin();
    let g2 = |tau: f64| (-tau).exp();
    let (a, b) = (1.7, -0.4);
    for t in [0.3, 1.0, 2.5] {
        let lhs = m_operator_fn(&|tau| a * g1(tau) + b * g2(tau), t, &spec).unwrap();
        let rhs = a * m_operator_fn(&g1, t, &spec).unwrap()
            + b * m_operator_fn(&g2, t, &spec).unwrap();
        assert!((lhs - rhs).abs() < 1e-10, "t {t}: {lhs} vs {rhs}");
    }
}

// Fine sampling: the two inversion forms are related by integration by
// parts, which linear interpolation only respects to O(step²).
fn decaying_field() -> PerturbationField {
    PerturbationField::from_fn_with_derivs(
        1e-4,
        400_001,
        |y| y * (-y).exp(),
        |y| (1.0 - y) * (-y).exp(),
        |y| (y - 2.0) * (-y).exp(),
    )
    .unwrap()
}

#[test]
fn both_initial_data_inversion_forms_agree() {
    let spec = QuadratureSpec::default();
    let f = decaying_field();
    for t in [0.1, 0.25, 1.0, 4.0] {
        let a = solve_abel_from_f(&f, t, &spec).unwrap();
        let b = solve_abel_from_f_unintegrated(&f, t, &spec).unwrap();
        assert!((a - b).abs() < 1e-8, "t {t}: {a} vs {b}");
    }
}

#[test]
fn forcing_inversion_reduces_to_the_local_one_for_matched_data() {
    // g(τ,η) = ½h(τ)e^{-η/2} makes the inner kernel integrate to exactly 1,
    // so the forcing inversion equals the local inversion minus ½h(t).
    let spec = QuadratureSpec::default();
    let h = GammaSignal::constant(1.0, 4.0);
    let g = |_tau: f64, eta: f64| 0.5 * (-0.5 * eta).exp();
    for t in [0.5, 1.0, 3.0] {
        let via_g = solve_abel_from_g(&g, t, &spec).unwrap();
        let via_local = solve_abel_local(&h, t, &spec).unwrap() - 0.5;
        assert!(
            (via_g - via_local).abs() < 1e-5,
            "t {t}: {via_g} vs {via_local}"
        );
    }
}

#[test]
fn initial_data_inversion_residuals_are_small() {
    let f = decaying_field();
    let problem = AbelProblem {
        data: AbelData::FromF(&f),
        quad: QuadratureSpec::default(),
    };
    for t in [0.25, 1.0, 4.0] {
        let r = problem.residual(t).unwrap();
        println!("from_f residual at {t}: {r:.3e}");
        assert!(r < 1e-5, "t {t}: residual {r}");
    }
}

#[test]
fn forcing_inversion_residual_is_small() {
    let g = |tau: f64, eta: f64| (-tau).exp() * (-eta).exp();
    let problem = AbelProblem {
        data: AbelData::FromG(&g),
        quad: QuadratureSpec::default(),
    };
    let r = problem.residual(1.0).unwrap();
    println!("from_g residual at 1: {r:.3e}");
    assert!(r < 1e-5, "residual {r}");
}

#[test]
fn local_inversion_residual_is_small() {
    let h = GammaSignal::from_fn(1e-3, 4001, |tau| (-tau).exp()).unwrap();
    let problem = AbelProblem {
        data: AbelData::Local(&h),
        quad: QuadratureSpec::default(),
    };
    let r = problem.residual(1.0).unwrap();
    println!("local residual at 1: {r:.3e}");
    assert!(r < 1e-5, "residual {r}");
}

#[test]
fn solvers_are_linear_in_their_data() {
    // All three fields share one grid so their interpolants combine linearly.
    let spec = QuadratureSpec::default();
    let f1 = PerturbationField::from_fn_with_derivs(
        0.005,
        8001,
        |y| y * (-y).exp(),
        |y| (1.0 - y) * (-y).exp(),
        |y| (y - 2.0) * (-y).exp(),
    )
    .unwrap();
    let f2 = PerturbationField::from_fn_with_derivs(
        0.005,
        8001,
        |y| y * y * (-y).exp(),
        |y| (2.0 * y - y * y) * (-y).exp(),
        |y| (2.0 - 4.0 * y + y * y) * (-y).exp(),
    )
    .unwrap();
    let (a, b) = (0.6, -2.3);
    let combined = PerturbationField::from_fn_with_derivs(
        0.005,
        8001,
        |y| (a * y + b * y * y) * (-y).exp(),
        |y| (a * (1.0 - y) + b * (2.0 * y - y * y)) * (-y).exp(),
        |y| (a * (y - 2.0) + b * (2.0 - 4.0 * y + y * y)) * (-y).exp(),
    )
    .unwrap();
    for t in [0.25, 1.0] {
        let lhs = solve_abel_from_f(&combined, t, &spec).unwrap();
        let rhs = a * solve_abel_from_f(&f1, t, &spec).unwrap()
            + b * solve_abel_from_f(&f2, t, &spec).unwrap();
        assert!((lhs - rhs).abs() < 1e-10, "t {t}: {lhs} vs {rhs}");

        let lhs_g = solve_abel_from_g(
            &|tau: f64, eta: f64| (a * tau.cos() + b) * (-eta).exp(),
            t,
            &spec,
        )
        .unwrap();
        let rhs_g = a
            * solve_abel_from_g(&|tau: f64, eta: f64| tau.cos() * (-eta).exp(), t, &spec)
                .unwrap()
            + b * solve_abel_from_g(&|_, eta: f64| (-eta).exp(), t, &spec).unwrap();
        assert!((lhs_g - rhs_g).abs() < 1e-10, "t {t}: {lhs_g} vs {rhs_g}");
    }
}
