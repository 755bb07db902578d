//! Fast invariant suites, one per module, reporting measured value against
//! tolerance for every check.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::concentration::{surface_density_integral, ConcentrationSchedule, Neighborhood};
use crate::conservation::{enmt_from_sample, phase_invariance_terms};
use crate::constants::PhysicalConstants;
use crate::corpuscle::{corpuscle_in, densities_from_sample, nls_residual, FieldProvider};
use crate::dynamics::integrate_newton;
use crate::error::Result;
use crate::fields::{
    split_field_at_point, split_polynomial_field, tangent_part_via_curl, AnalyticPotentials, PolyScalarField,
    PolyVectorField, Potentials, TimePoly, Vec3,
};
use crate::formfactor::{charge_norm, gaussian_profile, reconstruct_nonlinearity, FormFactor};

/// Outcome of one check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub suite: &'static str,
    pub name: &'static str,
    /// Measured quantity; NaN when the check raised an error.
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
    /// Error message, empty on success.
    pub detail: String,
}

fn record(suite: &'static str, name: &'static str, tolerance: f64, value: Result<f64>) -> Check {
    match value {
        Ok(v) => Check { suite, name, value: v, tolerance, pass: v <= tolerance, detail: String::new() },
        Err(e) => Check { suite, name, value: f64::NAN, tolerance, pass: false, detail: e.to_string() },
    }
}

/// Names of the suites in execution order.
pub const SUITES: [&str; 6] = ["fields", "formfactor", "dynamics", "corpuscle", "conservation", "concentration"];

/// Runs one suite by name; `None` for an unknown name.
pub fn run_suite(name: &str) -> Option<Vec<Check>> {
    Some(match name {
        "fields" => fields_suite(),
        "formfactor" => formfactor_suite(),
        "dynamics" => dynamics_suite(),
        "corpuscle" => corpuscle_suite(),
        "conservation" => conservation_suite(),
        "concentration" => concentration_suite(),
        _ => return None,
    })
}

pub fn run_all() -> Vec<Check> {
    SUITES.iter().flat_map(|s| run_suite(s).unwrap_or_default()).collect()
}

fn mono(deg: [u32; 3], c: f64) -> PolyScalarField {
    PolyScalarField::monomial(deg, TimePoly::constant(c), Vec3::zeros())
}

fn test_field() -> Result<PolyVectorField> {
    PolyVectorField::new([
        mono([0, 1, 0], 0.7).add(&mono([2, 0, 1], -0.4)).add(&mono([0, 0, 0], 0.3)),
        mono([1, 0, 0], -0.2).add(&mono([0, 2, 0], 0.5)),
        mono([1, 1, 1], 0.9).add(&mono([0, 0, 2], -0.1)),
    ])
}

fn test_points() -> [Vec3; 4] {
    [Vec3::new(0.3, -0.2, 0.5), Vec3::new(-0.7, 0.1, 0.2), Vec3::new(0.05, 0.6, -0.4), Vec3::new(1.1, -0.9, 0.3)]
}

fn fields_suite() -> Vec<Check> {
    let s = "fields";
    let split = || -> Result<(PolyVectorField, PolyScalarField, PolyVectorField)> {
        let v = test_field()?;
        let (pi, tan) = split_polynomial_field(&v)?;
        Ok((v, pi, tan))
    };
    vec![
        record(s, "gradient plus tangent part reproduces the field", 1e-14, (|| {
            let (v, pi, tan) = split()?;
            let d = v.sub(&pi.gradient()).sub(&tan);
            Ok(test_points().iter().map(|y| d.eval(0.0, y).norm()).fold(0.0, f64::max))
        })()),
        record(s, "tangent part is orthogonal to the radius", 1e-14, (|| {
            let (_, _, tan) = split()?;
            Ok(test_points().iter().map(|y| tan.eval(0.0, y).dot(y).abs()).fold(0.0, f64::max))
        })()),
        record(s, "curl form of the tangent part agrees", 1e-14, (|| {
            let (v, _, tan) = split()?;
            let alt = tangent_part_via_curl(&v)?;
            Ok(test_points().iter().map(|y| (alt.eval(0.0, y) - tan.eval(0.0, y)).norm()).fold(0.0, f64::max))
        })()),
        record(s, "ray-integral splitter agrees with the polynomial one", 1e-9, (|| {
            let (v, pi, tan) = split()?;
            let f = |y: &Vec3| v.eval(0.0, y);
            let mut worst: f64 = 0.0;
            for y in test_points() {
                let (p, t) = split_field_at_point(&f, &y, 32)?;
                worst = worst.max((p - pi.eval(0.0, &y)).abs()).max((t - tan.eval(0.0, &y)).norm());
            }
            Ok(worst)
        })()),
    ]
}

fn formfactor_suite() -> Vec<Check> {
    let s = "formfactor";
    vec![
        record(s, "reconstructed G' matches the logarithmic closed form", 1e-8, (|| {
            let profile = gaussian_profile();
            let nl = reconstruct_nonlinearity(&profile, 4.0, 400)?;
            let c2 = PI.powf(-1.5);
            let (lo, hi) = (profile.value(4.0).powi(2), profile.value(0.0).powi(2));
            let mut worst: f64 = 0.0;
            for i in 0..50 {
                let sv = lo * (hi / lo).powf(i as f64 / 49.0);
                let exact = -(sv / c2).ln() - 3.0;
                worst = worst.max(((nl.gprime(sv) - exact) / exact).abs());
            }
            Ok(worst)
        })()),
        record(s, "form factor carries unit charge at every size", 1e-10, (|| {
            let mut worst: f64 = 0.0;
            for a in [1.0, 0.1, 0.003] {
                worst = worst.max((charge_norm(&FormFactor::new(gaussian_profile(), a)?)? - 1.0).abs());
            }
            Ok(worst)
        })()),
    ]
}

fn dynamics_suite() -> Vec<Check> {
    let s = "dynamics";
    let k = PhysicalConstants::unit();
    vec![
        record(s, "cyclotron orbit closes after one period", 1e-8, (|| {
            let pot = AnalyticPotentials::uniform(&Vec3::zeros(), &Vec3::new(0.0, 0.0, 1.0));
            let r0 = Vec3::new(1.0, 0.0, 0.0);
            let traj = integrate_newton(&pot, &r0, &Vec3::new(0.0, 1.0, 0.0), 0.0, 2.0 * PI, 1e-3, &k)?;
            Ok((traj.positions().last().copied().unwrap_or(r0) - r0).norm())
        })()),
        record(s, "free motion is a straight line", 1e-12, (|| {
            let r0 = Vec3::new(0.1, 0.2, 0.3);
            let v0 = Vec3::new(-1.0, 0.5, 2.0);
            let traj = integrate_newton(&AnalyticPotentials::zero(), &r0, &v0, 0.0, 1.0, 1e-2, &k)?;
            Ok(traj
                .positions()
                .iter()
                .enumerate()
                .map(|(i, r)| (r - (r0 + v0 * traj.time(i))).norm())
                .fold(0.0, f64::max))
        })()),
    ]
}

fn crossed_corpuscle(a: f64, p3: &PolyScalarField) -> Result<crate::corpuscle::WaveCorpuscle> {
    let pot = AnalyticPotentials::uniform(&Vec3::new(0.1, 0.0, 0.0), &Vec3::new(0.0, 0.0, 1.0));
    corpuscle_in(
        &pot,
        gaussian_profile(),
        a,
        &Vec3::new(0.2, -0.1, 0.3),
        &Vec3::new(0.0, 1.0, 0.2),
        (0.0, 1.0),
        2e-4,
        p3,
        PhysicalConstants::unit(),
    )
}

fn corpuscle_suite() -> Vec<Check> {
    let s = "corpuscle";
    vec![record(s, "relative NLS residual in crossed fields", 1e-9, (|| {
        let a = 0.3;
        let wc = crossed_corpuscle(a, &mono([1, 2, 0], 0.3))?;
        let nl = wc.nonlinearity()?;
        let k = *wc.constants();
        let mut worst: f64 = 0.0;
        for (i, y) in test_points().iter().enumerate() {
            let t = 0.1 + 0.2 * i as f64;
            let x = wc.center(t)? + y * a;
            let r = nls_residual(&wc, wc.auxiliary(), &nl, t, &x, &k)?;
            worst = worst.max(r.norm() / (k.residual_scale(a) * wc.sample(t, &x)?.psi.norm()));
        }
        Ok(worst)
    })())]
}

fn conservation_suite() -> Vec<Check> {
    let s = "conservation";
    let samples = || -> Result<Vec<(crate::corpuscle::FieldSample, crate::fields::PotentialSample)>> {
        let a = 0.3;
        let wc = crossed_corpuscle(a, &mono([1, 2, 0], 0.3))?;
        let mut out = Vec::new();
        for (i, y) in test_points().iter().enumerate() {
            let t = 0.15 + 0.2 * i as f64;
            let x = wc.center(t)? + y * a;
            out.push((wc.sample(t, &x)?, wc.auxiliary().sample(t, &x)));
        }
        Ok(out)
    };
    let k = PhysicalConstants::new(1.3, 0.7, 0.9, 2.0).unwrap_or_else(|_| PhysicalConstants::unit());
    let nl = crate::formfactor::Nonlinearity::logarithmic();
    vec![
        record(s, "momentum density equals (m/q) J", 4.0 * f64::EPSILON, (|| {
            let mut worst: f64 = 0.0;
            for (f, p) in samples()? {
                let d = densities_from_sample(&f, &p, &k);
                worst = worst.max((d.p - d.j * (k.m / k.q)).norm() / d.p.norm().max(f64::MIN_POSITIVE));
            }
            Ok(worst)
        })()),
        record(s, "stress tensor is symmetric and T0j = Pj", 0.0, (|| {
            let mut worst: f64 = 0.0;
            for (f, p) in samples()? {
                let t = enmt_from_sample(&f, &p, &nl, &k);
                for i in 0..3 {
                    worst = worst.max((t.entries[(0, i + 1)] - t.p[i]).abs());
                    for j in 0..3 {
                        worst = worst.max((t.spatial(i, j) - t.spatial(j, i)).abs());
                    }
                }
            }
            Ok(worst)
        })()),
        record(s, "densities and tensor are invariant under a constant phase", 1e-12, (|| {
            let mut worst: f64 = 0.0;
            for (f, p) in samples()? {
                let (d0, t0) = (densities_from_sample(&f, &p, &k), enmt_from_sample(&f, &p, &nl, &k));
                for gamma in [0.37, PI] {
                    let g = f.rotated(gamma);
                    let (d1, t1) = (densities_from_sample(&g, &p, &k), enmt_from_sample(&g, &p, &nl, &k));
                    let scale = t0.entries.amax().max(1.0);
                    worst = worst
                        .max((d1.rho - d0.rho).abs() / d0.rho.abs().max(1.0))
                        .max((d1.j - d0.j).norm() / d0.j.norm().max(1.0))
                        .max((t1.entries - t0.entries).amax() / scale);
                }
            }
            Ok(worst)
        })()),
        record(s, "phase-invariance terms cancel", 1e-12, (|| {
            let mut worst: f64 = 0.0;
            for (f, p) in samples()? {
                let terms = phase_invariance_terms(&f, &p, &nl, &k);
                let sum: Complex64 = terms.iter().sum();
                let scale = terms.iter().map(|z| z.norm()).fold(1.0, f64::max);
                worst = worst.max(sum.norm() / scale);
            }
            Ok(worst)
        })()),
    ]
}

fn concentration_suite() -> Vec<Check> {
    let s = "concentration";
    vec![
        record(s, "sphere quadrature matches the closed-form surface density", 1e-8, (|| {
            let (a, r) = (0.05, 0.4);
            let nb = Neighborhood::standard(r, a)?;
            let theta: f64 = r / a;
            let exact = 4.0 * PI * a / (r * r) * theta.powi(4) * PI.powf(-1.5) * (-theta * theta).exp();
            Ok(((surface_density_integral(&FormFactor::new(gaussian_profile(), a)?, &nb) - exact) / exact).abs())
        })()),
        record(s, "inadmissible schedules are rejected", 0.0, {
            let accepted = ConcentrationSchedule::new(1.0, 1.0, 4.0, 1.0, 1, 3).is_ok()
                || ConcentrationSchedule::new(1.0, 1.0, 5.0, -1.0, 1, 3).is_ok();
            Ok(if accepted { 1.0 } else { 0.0 })
        }),
    ]
}
