mod common;

use std::f64::consts::PI;

use corpuscle_core::concentration::{fit_loglog, ConcentrationSchedule};
use corpuscle_core::conservation::{enmt_from_sample, lagrangian_from_sample};
use corpuscle_core::corpuscle::{densities_from_sample, FieldProvider};
use corpuscle_core::fields::{
    split_polynomial_field, AnalyticPotentials, PolyScalarField, PolyVectorField, Potentials, TimePoly,
};
use corpuscle_core::formfactor::Nonlinearity;
use corpuscle_core::quadrature::{cumulative_simpson, GaussLegendre};
use corpuscle_core::{PhysicalConstants, Vec3};
use proptest::prelude::*;

const DEGREES: [[u32; 3]; 20] = [
    [0, 0, 0],
    [1, 0, 0],
    [0, 1, 0],
    [0, 0, 1],
    [2, 0, 0],
    [1, 1, 0],
    [1, 0, 1],
    [0, 2, 0],
    [0, 1, 1],
    [0, 0, 2],
    [3, 0, 0],
    [2, 1, 0],
    [2, 0, 1],
    [1, 2, 0],
    [1, 1, 1],
    [1, 0, 2],
    [0, 3, 0],
    [0, 2, 1],
    [0, 1, 2],
    [0, 0, 3],
];

fn poly(coeffs: &[f64]) -> PolyScalarField {
    DEGREES.iter().zip(coeffs).fold(PolyScalarField::zero(Vec3::zeros()), |acc, (d, c)| {
        let mut out = acc;
        out.add_term(*d, TimePoly::constant(*c));
        out
    })
}

fn coeffs() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0..1.0f64, 20)
}

fn point() -> impl Strategy<Value = Vec3> {
    (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64).prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn product_rule(a in coeffs(), b in coeffs(), y in point(), k in 0usize..3) {
        let (p, q) = (poly(&a), poly(&b));
        let lhs = p.mul(&q).partial(k).eval(0.0, &y);
        let rhs = p.partial(k).eval(0.0, &y) * q.eval(0.0, &y) + p.eval(0.0, &y) * q.partial(k).eval(0.0, &y);
        prop_assert!((lhs - rhs).abs() < 1e-12 * (1.0 + lhs.abs()));
    }

    #[test]
    fn recentering_preserves_values(a in coeffs(), o in point(), y in point()) {
        let p = poly(&a);
        let moved = p.recentered(o);
        prop_assert!((moved.eval(0.0, &y) - p.eval(0.0, &y)).abs() < 1e-12);
    }

    #[test]
    fn split_reproduces_field_and_is_tangent(a in coeffs(), b in coeffs(), c in coeffs(), y in point()) {
        let v = PolyVectorField::new([poly(&a), poly(&b), poly(&c)]).unwrap();
        let (pi, tan) = split_polynomial_field(&v).unwrap();
        let back = pi.gradient().eval(0.0, &y) + tan.eval(0.0, &y);
        prop_assert!((back - v.eval(0.0, &y)).norm() < 1e-12);
        prop_assert!(tan.eval(0.0, &y).dot(&y).abs() < 1e-12);
        prop_assert!(pi.eval(0.0, &Vec3::zeros()).abs() < 1e-15);
    }

    #[test]
    fn gauss_legendre_is_exact_to_degree_2n_minus_1(n in 1usize..12, seed in prop::collection::vec(-1.0..1.0f64, 24)) {
        let deg = 2 * n - 1;
        let coef = &seed[..=deg];
        let rule = GaussLegendre::new(n);
        let got = rule.integrate(0.0, 2.0, |x| coef.iter().rev().fold(0.0, |acc, c| acc * x + c));
        let exact: f64 = coef.iter().enumerate().map(|(k, c)| c * 2f64.powi(k as i32 + 1) / (k as f64 + 1.0)).sum();
        prop_assert!((got - exact).abs() < 1e-12 * (1.0 + exact.abs()));
    }

    #[test]
    fn cumulative_simpson_is_exact_for_quadratics(c0 in -1.0..1.0f64, c1 in -1.0..1.0f64, c2 in -1.0..1.0f64, n in 3usize..30) {
        let h = 0.1;
        let f = |x: f64| c0 + c1 * x + c2 * x * x;
        let vals: Vec<f64> = (0..n).map(|i| f(h * i as f64)).collect();
        let cum = cumulative_simpson(&vals, h);
        for (i, v) in cum.iter().enumerate() {
            let x = h * i as f64;
            let exact = c0 * x + c1 * x * x / 2.0 + c2 * x * x * x / 3.0;
            prop_assert!((v - exact).abs() < 1e-13);
        }
    }

    #[test]
    fn local_densities_are_phase_invariant(
        gamma in 0.0..(2.0 * PI),
        m in 0.5..2.0f64, q in 0.5..2.0f64, chi in 0.5..2.0f64, c in 0.5..3.0f64,
        y in point(),
    ) {
        let k = PhysicalConstants::new(m, q, chi, c).unwrap();
        let pot = common::generic_potentials();
        let wc = common::corpuscle(&pot, 0.3, &common::cubic(true));
        let x = wc.center(0.6).unwrap() + y * 0.5;
        let s = wc.sample(0.6, &x).unwrap();
        let p = pot.sample(0.6, &x);
        let nl = Nonlinearity::logarithmic();
        let g = s.rotated(gamma);
        let (d0, d1) = (densities_from_sample(&s, &p, &k), densities_from_sample(&g, &p, &k));
        let (t0, t1) = (enmt_from_sample(&s, &p, &nl, &k), enmt_from_sample(&g, &p, &nl, &k));
        let (l0, l1) = (lagrangian_from_sample(&s, &p, &nl, &k), lagrangian_from_sample(&g, &p, &nl, &k));
        let scale = t0.entries.amax().max(1.0);
        prop_assert!((d0.rho - d1.rho).abs() <= 1e-12 * d0.rho.abs().max(1.0));
        prop_assert!((d0.j - d1.j).amax() <= 1e-12 * d0.j.amax().max(1.0));
        prop_assert!((t0.entries - t1.entries).amax() <= 1e-12 * scale);
        prop_assert!((l0 - l1).abs() <= 1e-12 * l0.abs().max(1.0));
        // P = (m/q) J holds for any constants.
        prop_assert!((d0.p - d0.j * (m / q)).amax() <= 4.0 * f64::EPSILON * d0.p.amax().max(f64::MIN_POSITIVE));
    }

    #[test]
    fn uniform_potentials_reproduce_their_fields(e in point(), b in point(), x in point(), t in -2.0..2.0f64) {
        let pot = AnalyticPotentials::uniform(&e, &b);
        let f = pot.sample(t, &x).fields(1.0);
        prop_assert!((f.e - e).norm() < 1e-14);
        prop_assert!((f.b - b).norm() < 1e-14);
    }

    #[test]
    fn schedule_admissibility(ae in 0.1..10.0f64, re in 0.1..3.0f64) {
        let ok = ConcentrationSchedule::new(0.02, 0.5, ae, re, 1, 4).is_ok();
        prop_assert_eq!(ok, ae > 4.0 * re);
    }

    #[test]
    fn loglog_fit_recovers_power_laws(slope in -12.0..12.0f64, scale in 0.01..100.0f64) {
        let xs: Vec<f64> = (1..=6).map(f64::from).collect();
        let ys: Vec<f64> = xs.iter().map(|x| scale * x.powf(slope)).collect();
        let fit = fit_loglog("y", &xs, &ys).unwrap();
        prop_assert!((fit.slope - slope).abs() < 1e-10);
        prop_assert!((fit.intercept - scale.ln()).abs() < 1e-10);
    }
}
