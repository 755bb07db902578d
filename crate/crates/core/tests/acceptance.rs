//! Acceptance run: each criterion prints one PASS/FAIL line and the process
//! exits nonzero if any criterion fails.

mod common;

use std::f64::consts::PI;
use std::time::Instant;

use common::*;
use corpuscle_core::concentration::{
    concentration_study, surface_density_integral, ConcentrationReport, ConcentrationSchedule, Neighborhood,
    StudyOptions,
};
use corpuscle_core::conservation::{continuity_residual, enmt_from_sample, lagrangian_from_sample, momentum_residual};
use corpuscle_core::corpuscle::{corpuscle_in, densities_from_sample, nls_residual, AmplitudeRamp, FieldProvider};
use corpuscle_core::dynamics::{integrate_newton, lorentz_force};
use corpuscle_core::fields::{
    balance_residual, build_auxiliary_potentials, split_field_at_point, split_polynomial_field, tangent_part_via_curl,
    AnalyticPotentials, PolyScalarField, PolyVectorField, Potentials, TimePoly,
};
use corpuscle_core::formfactor::{gaussian_profile, reconstruct_nonlinearity, FormFactor};
use corpuscle_core::{PhysicalConstants, Result, Vec3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    summary: String,
}

fn outcome(pass: bool, summary: String) -> Result<Outcome> {
    Ok(Outcome { pass, summary })
}

fn gaussian_sq(x: f64) -> f64 {
    PI.powf(-1.5) * (-x * x).exp()
}

fn nonlinearity_reconstruction() -> Result<Outcome> {
    let profile = gaussian_profile();
    let nl = reconstruct_nonlinearity(&profile, 4.0, 400)?;
    let (lo, hi) = (gaussian_sq(4.0), gaussian_sq(0.0));
    let mut worst: f64 = 0.0;
    for i in 0..200 {
        let s = lo * (hi / lo).powf(i as f64 / 199.0);
        let exact = -(s / PI.powf(-1.5)).ln() - 3.0;
        worst = worst.max(((nl.gprime(s) - exact) / exact).abs());
    }
    outcome(worst <= 1e-8, format!("max relative error of G' = {worst:.2e} (limit 1e-8)"))
}

fn exact_solution_residual() -> Result<Outcome> {
    let a = 0.3;
    let pot = crossed_fields();
    let mut worst: f64 = 0.0;
    for (seed, p3) in [(11, PolyScalarField::zero(Vec3::zeros())), (12, cubic(false))] {
        let wc = corpuscle(&pot, a, &p3);
        let nl = wc.nonlinearity()?;
        let k = *wc.constants();
        for (t, x) in sample_points(&wc, 200, 4.0 * a, 0.0, 2.0, seed) {
            let r = nls_residual(&wc, wc.auxiliary(), &nl, t, &x, &k)?;
            worst = worst.max(r.norm() / (k.residual_scale(a) * wc.sample(t, &x)?.psi.norm()));
        }
    }
    outcome(worst <= 1e-9, format!("max |residual| / (chi^2/(2ma^2)|psi|) = {worst:.2e} (limit 1e-9)"))
}

fn conservation_convergence() -> Result<Outcome> {
    let a = 0.3;
    let wc = corpuscle(&generic_potentials(), a, &cubic(true));
    let nl = wc.nonlinearity()?;
    let k = *wc.constants();
    let aux = wc.auxiliary();
    let t = 0.9;
    let x = wc.center(t)? + Vec3::new(0.2, -0.15, 0.1);
    let hs = [a / 10.0, a / 20.0, a / 40.0];
    let mut cont = Vec::new();
    let mut mom = Vec::new();
    for &h in &hs {
        cont.push(continuity_residual(&wc, aux, t, &x, h, &k)?.abs());
        mom.push(momentum_residual(&wc, aux, &nl, t, &x, h, &k)?.norm());
    }
    let orders = |r: &[f64]| r.windows(2).map(|w| (w[0] / w[1]).log2()).collect::<Vec<_>>();
    let (oc, om) = (orders(&cont), orders(&mom));
    let orders_ok = oc.iter().chain(&om).all(|o| (o - 4.0).abs() <= 0.3);
    let ramp = AmplitudeRamp { inner: &wc, rate: 0.1 };
    let bad_c = continuity_residual(&ramp, aux, t, &x, hs[1], &k)?.abs();
    let bad_m = momentum_residual(&ramp, aux, &nl, t, &x, hs[1], &k)?.norm();
    let control_ok = bad_c >= 1e3 * cont[1] && bad_m >= 1e3 * mom[1];
    outcome(
        orders_ok && control_ok,
        format!(
            "orders continuity {:.2}/{:.2}, momentum {:.2}/{:.2}; corrupted/exact at a/20: {:.1e}, {:.1e}",
            oc[0],
            oc[1],
            om[0],
            om[1],
            bad_c / cont[1],
            bad_m / mom[1]
        ),
    )
}

fn pointwise_identities() -> Result<Outcome> {
    let k = PhysicalConstants::new(1.3, 0.7, 0.9, 2.0)?;
    let a = 0.3;
    let wc = corpuscle_in(
        &generic_potentials(),
        gaussian_profile(),
        a,
        &Vec3::new(0.2, -0.1, 0.3),
        &Vec3::new(0.0, 1.0, 0.2),
        (0.0, 1.0),
        2e-4,
        &cubic(true),
        k,
    )?;
    let nl = wc.nonlinearity()?;
    let (mut pj_ulps, mut t0j, mut sym, mut gauge): (f64, f64, f64, f64) = (0.0, 0.0, 0.0, 0.0);
    for (t, x) in sample_points(&wc, 50, 3.0 * a, 0.0, 1.0, 4) {
        let f = wc.sample(t, &x)?;
        let p = wc.auxiliary().sample(t, &x);
        let d = densities_from_sample(&f, &p, &k);
        let tensor = enmt_from_sample(&f, &p, &nl, &k);
        let l = lagrangian_from_sample(&f, &p, &nl, &k);
        let mj = d.j * (k.m / k.q);
        for i in 0..3 {
            pj_ulps = pj_ulps.max((d.p[i] - mj[i]).abs() / (f64::EPSILON * d.p.amax()));
            t0j = t0j.max((tensor.entries[(0, i + 1)] - d.p[i]).abs());
            for j in 0..3 {
                sym = sym.max((tensor.spatial(i, j) - tensor.spatial(j, i)).abs());
            }
        }
        for gamma in [0.37, PI] {
            let g = f.rotated(gamma);
            let dg = densities_from_sample(&g, &p, &k);
            let tg = enmt_from_sample(&g, &p, &nl, &k);
            let lg = lagrangian_from_sample(&g, &p, &nl, &k);
            let rel = |x: f64, y: f64| (x - y).abs() / y.abs().max(1.0);
            gauge = gauge
                .max(rel(lg, l))
                .max(rel(dg.rho, d.rho))
                .max((dg.j - d.j).amax() / d.j.amax().max(1.0))
                .max((tg.entries - tensor.entries).amax() / tensor.entries.amax().max(1.0));
        }
    }
    outcome(
        pj_ulps <= 4.0 && t0j == 0.0 && sym == 0.0 && gauge <= 1e-12,
        format!("P-(m/q)J {pj_ulps:.1} ulp, |T0j-Pj| = {t0j:e}, |Tij-Tji| = {sym:e}, phase rotation {gauge:.1e}"),
    )
}

fn newton_dynamics() -> Result<Outcome> {
    let k = PhysicalConstants::unit();
    let cyclotron = AnalyticPotentials::uniform(&Vec3::zeros(), &Vec3::new(0.0, 0.0, 1.0));
    let r0 = Vec3::new(1.0, 0.0, 0.0);
    let v0 = Vec3::new(0.0, -1.0, 0.0);
    let one = integrate_newton(&cyclotron, &r0, &v0, 0.0, 2.0 * PI, 1e-3, &k)?;
    let closure = (one.positions().last().copied().unwrap_or(r0) - r0).norm();
    let ten = integrate_newton(&cyclotron, &r0, &v0, 0.0, 20.0 * PI, 1e-3, &k)?;
    let drift = ten.velocities().iter().map(|v| (v.norm() - v0.norm()).abs()).fold(0.0, f64::max);

    // Averaging over whole gyration periods removes the gyration.
    let e = Vec3::from(E0);
    let b = Vec3::from(B0);
    let crossed = crossed_fields();
    let v_start = Vec3::new(0.3, 0.2, 0.0);
    let periods = 5.0 * 2.0 * PI * k.m * k.c / (k.q * b.norm());
    let tr = integrate_newton(&crossed, &Vec3::zeros(), &v_start, 0.0, periods, 1e-3, &k)?;
    let mean_v = tr.positions().last().copied().unwrap_or_default() / periods;
    let analytic = e.cross(&b) * (k.c / b.norm_squared());
    let drift_err = (mean_v - analytic).norm();
    outcome(
        closure <= 1e-8 && drift <= 1e-9 && drift_err <= 1e-6,
        format!("orbit closure {closure:.2e}, |v| drift {drift:.2e}, E x B drift error {drift_err:.2e}"),
    )
}

fn mono(deg: [u32; 3], c: f64) -> PolyScalarField {
    PolyScalarField::monomial(deg, TimePoly::constant(c), Vec3::zeros())
}

fn max_coefficient(p: &PolyScalarField) -> f64 {
    p.terms().flat_map(|(_, c)| c.coeffs().iter().map(|x| x.abs())).fold(0.0, f64::max)
}

fn field_splitting() -> Result<Outcome> {
    let o = Vec3::zeros();
    let mut degrees = Vec::new();
    for n in 0..=3u32 {
        for i in 0..=n {
            for j in 0..=(n - i) {
                degrees.push([i, j, n - i - j]);
            }
        }
    }
    // Basis fields e_k y^α: Π = y_k y^α/(j+1) and
    // V̆_i = δ_ik y^α − (α_i + δ_ik)/(j+1) y^{α + e_k − e_i}.
    let mut coeff_err: f64 = 0.0;
    for alpha in &degrees {
        let j = (alpha[0] + alpha[1] + alpha[2]) as f64;
        for k in 0..3 {
            let comps: [PolyScalarField; 3] =
                std::array::from_fn(|i| if i == k { mono(*alpha, 1.0) } else { PolyScalarField::zero(o) });
            let v = PolyVectorField::new(comps)?;
            let (pi, tan) = split_polynomial_field(&v)?;
            let mut raised = *alpha;
            raised[k] += 1;
            coeff_err = coeff_err.max(max_coefficient(&pi.sub(&mono(raised, 1.0 / (j + 1.0)))));
            for i in 0..3 {
                let delta = if i == k { 1.0 } else { 0.0 };
                let mut expected = mono(*alpha, delta);
                let weight = (alpha[i] as f64 + delta) / (j + 1.0);
                if weight != 0.0 {
                    let mut d = raised;
                    d[i] -= 1;
                    expected = expected.sub(&mono(d, weight));
                }
                coeff_err = coeff_err.max(max_coefficient(&tan.component(i).sub(&expected)));
            }
            let curl_form = tangent_part_via_curl(&v)?;
            for i in 0..3 {
                coeff_err = coeff_err.max(max_coefficient(&curl_form.component(i).sub(tan.component(i))));
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let comps: [PolyScalarField; 3] = std::array::from_fn(|_| {
        degrees.iter().fold(PolyScalarField::zero(o), |acc, d| acc.add(&mono(*d, rng.random_range(-1.0..1.0))))
    });
    let v = PolyVectorField::new(comps)?;
    let (pi, tan) = split_polynomial_field(&v)?;
    let eval = |y: &Vec3| v.eval(0.0, y);
    let (mut ray_err, mut tangency): (f64, f64) = (0.0, 0.0);
    for _ in 0..100 {
        let y = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let (p, t) = split_field_at_point(&eval, &y, 32)?;
        ray_err = ray_err.max((p - pi.eval(0.0, &y)).abs()).max((t - tan.eval(0.0, &y)).norm());
        tangency = tangency.max(y.dot(&tan.eval(0.0, &y)).abs());
    }
    outcome(
        coeff_err <= 1e-15 && ray_err <= 1e-9 && tangency <= 1e-12,
        format!("basis coefficient error {coeff_err:.1e}, ray splitter {ray_err:.1e}, |y.V_tan| {tangency:.1e}"),
    )
}

fn surface_scaling() -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    for (a, r) in [(0.1, 0.5), (0.05, 0.4), (0.02, 0.3)] {
        let nb = Neighborhood::standard(r, a)?;
        let theta: f64 = r / a;
        let exact = 4.0 * PI * a / (r * r) * theta.powi(4) * gaussian_sq(theta);
        let got = surface_density_integral(&FormFactor::new(gaussian_profile(), a)?, &nb);
        worst = worst.max(((got - exact) / exact).abs());
    }
    outcome(worst <= 1e-8, format!("max relative error {worst:.2e} (limit 1e-8)"))
}

fn concentration() -> Result<Outcome> {
    let schedule = ConcentrationSchedule::default();
    let report = concentration_study(
        &crossed_fields(),
        &gaussian_profile(),
        &Vec3::new(0.2, -0.1, 0.3),
        &Vec3::new(0.0, 1.0, 0.2),
        (0.0, 1.0),
        &schedule,
        &cubic(false),
        PhysicalConstants::unit(),
        &StudyOptions::default(),
    )?;
    let verdicts = report.decay_verdicts(3, 1e-4);
    let failing: Vec<&str> =
        verdicts.iter().filter(|v| !(v.monotone && v.small_enough)).map(|v| v.quantity.as_str()).collect();
    let center = report.rows.iter().map(|r| r.center_err).fold(0.0, f64::max);
    let slope = report.p_prime_vs_radius.as_ref().map_or(f64::NAN, |f| f.slope);
    let pp = report.column("Pprime_int").unwrap_or_default();
    let summary = format!(
        "decaying {}/{} diagnostics{}, sup|r_n - r| = {center:.1e}, slope of int P' vs R = {slope:.2}, int P' {:.1e} -> {:.1e}",
        verdicts.len() - failing.len(),
        ConcentrationReport::DIAGNOSTICS.len(),
        if failing.is_empty() { String::new() } else { format!(" (failing: {})", failing.join(", ")) },
        pp.first().copied().unwrap_or(f64::NAN),
        pp.last().copied().unwrap_or(f64::NAN),
    );
    outcome(failing.is_empty() && center <= 1e-10 && slope >= 1.9, summary)
}

fn balance_falsification() -> Result<Outcome> {
    let k = PhysicalConstants::unit();
    let phi = mono([2, 0, 0], 0.4).add(&mono([0, 1, 1], -0.3)).add(&mono([0, 2, 0], 0.25)).add(&mono([1, 0, 0], 0.2));
    let pot = AnalyticPotentials::new(phi, AnalyticPotentials::uniform(&Vec3::zeros(), &Vec3::from(B0)).a().clone());
    let (r, v, t) = (Vec3::new(0.3, -0.2, 0.5), Vec3::new(0.4, 0.1, -0.6), 0.35);
    let acc = lorentz_force(&pot, t, &r, &v, &k) / k.m;
    let aux = build_auxiliary_potentials(&pot, &r, &v, t, &PolyScalarField::zero(Vec3::zeros()), &k)?;
    let dir = Vec3::new(0.6, -0.48, 0.64).normalize();
    let radii = [1e-3, 1e-2, 1e-1, 1.0];
    let mut generic = Vec::new();
    let mut corrected: f64 = 0.0;
    for s in radii {
        let y = dir * s;
        generic.push(balance_residual(&pot, &r, &v, &acc, t, &y, &k)?.0.norm());
        corrected = corrected.max(balance_residual(&aux, &r, &v, &acc, t, &y, &k)?.0.norm());
    }
    let slope = corpuscle_core::concentration::fit_loglog("generic", &radii, &generic).map_or(f64::NAN, |f| f.slope);
    outcome(
        slope >= 0.9 && corrected <= 1e-12,
        format!("uncorrected residual slope {slope:.3} in |y|, corrected residual {corrected:.1e}"),
    )
}

fn main() {
    type Criterion = fn() -> Result<Outcome>;
    let criteria: [(&str, Criterion); 9] = [
        ("nonlinearity reconstruction", nonlinearity_reconstruction),
        ("exact-solution residual", exact_solution_residual),
        ("conservation-law convergence", conservation_convergence),
        ("pointwise identities", pointwise_identities),
        ("Newton dynamics", newton_dynamics),
        ("field splitting", field_splitting),
        ("surface-scaling closed form", surface_scaling),
        ("concentration study", concentration),
        ("balance-condition falsification", balance_falsification),
    ];
    let mut failures = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (pass, summary) = match run() {
            Ok(o) => (o.pass, o.summary),
            Err(e) => (false, format!("error: {e}")),
        };
        let secs = start.elapsed().as_secs_f64();
        println!("{} {}. {name}: {summary} [{secs:.1} s]", if pass { "PASS" } else { "FAIL" }, i + 1);
        if !pass {
            failures += 1;
        }
    }
    if failures > 0 {
        println!("{failures} of {} criteria failed", criteria.len());
        std::process::exit(1);
    }
}
