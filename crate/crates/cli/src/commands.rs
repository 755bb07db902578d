//! The workflows behind each subcommand.

use corpuscle_core::concentration::{concentration_study, ConcentrationReport, DecayVerdict, SlopeFit};
use corpuscle_core::conservation::{continuity_residual, energy_residual, momentum_residual};
use corpuscle_core::corpuscle::{nls_residual, FieldProvider, WaveCorpuscle};
use corpuscle_core::dynamics::integrate_newton;
use corpuscle_core::fields::{
    split_field_at_point, split_polynomial_field, ScalarDoc, Vec3, VectorDoc, DEFAULT_SPLIT_NODES,
};
use corpuscle_core::formfactor::{reconstruct_nonlinearity, FormFactor};
use corpuscle_core::selftest;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{ConfigError, ProfileConfig, StudyConfig};
use crate::output::{num, Sink, Table};

/// Why a command did not succeed, mapped to the process exit status.
#[derive(Debug)]
pub enum Failure {
    Config(String),
    Numeric(String),
    Acceptance(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Numeric(_) => 3,
            Self::Acceptance(_) => 4,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Config(m) => write!(f, "configuration error: {m}"),
            Self::Numeric(m) => write!(f, "numerical failure: {m}"),
            Self::Acceptance(m) => write!(f, "acceptance failure: {m}"),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Self::Config(e.0)
    }
}

impl From<corpuscle_core::Error> for Failure {
    fn from(e: corpuscle_core::Error) -> Self {
        Self::Numeric(e.to_string())
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Self::Numeric(format!("{e:#}"))
    }
}

pub type Outcome = Result<(), Failure>;

/// Settings that come from flags rather than the config.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub quad_nodes: Option<usize>,
}

/// Tolerance of the relative NLS residual in `corpuscle-verify`.
pub const RESIDUAL_TOLERANCE: f64 = 1e-9;

fn v3(v: &Vec3) -> [String; 3] {
    [num(v[0]), num(v[1]), num(v[2])]
}

/// Seeded points `(t, y)` with `t` uniform in `[t_lo, t_hi]` and `y`
/// uniform in the ball of the given radius.
fn sample_offsets(n: usize, radius: f64, t_lo: f64, t_hi: f64, seed: u64) -> Vec<(f64, Vec3)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let t = rng.random_range(t_lo..=t_hi);
            let y = loop {
                let y = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                if y.norm() <= 1.0 {
                    break y * radius;
                }
            };
            (t, y)
        })
        .collect()
}

fn build_corpuscle(cfg: &StudyConfig) -> Result<WaveCorpuscle, Failure> {
    let s = &cfg.initial_state;
    let ff = FormFactor::with_lambda(cfg.profile.build(), cfg.corpuscle.a, cfg.corpuscle.lambda)?;
    Ok(WaveCorpuscle::build(
        cfg.potentials()?,
        ff,
        &cfg.r0(),
        &cfg.v0(),
        (s.t0, s.t1),
        s.step,
        &cfg.p3()?,
        cfg.constants,
    )?)
}

#[derive(Serialize)]
struct ReconstructSummary {
    profile: String,
    points: usize,
    s_min: f64,
    s_max: f64,
    extension_rule: &'static str,
    /// Against `−ln(s/π^{-3/2}) − 3`, for the Gaussian profile only.
    max_relative_error: Option<f64>,
}

pub fn reconstruct(cfg: &StudyConfig, sink: &Sink) -> Outcome {
    let profile = cfg.profile.build();
    let r_max = 4.0;
    let nl = reconstruct_nonlinearity(&profile, r_max, 400)?;
    let (lo, hi) = (profile.value(r_max).powi(2), profile.value(0.0).powi(2));
    let gaussian = matches!(cfg.profile, ProfileConfig::Gaussian);
    let n = 200;
    let mut table = Table::new(&["s", "gprime", "g", "gprime_closed_form", "relative_error"]);
    let mut worst: f64 = 0.0;
    for i in 0..n {
        let s = lo * (hi / lo).powf(i as f64 / (n - 1) as f64);
        let gp = nl.gprime(s);
        let (exact, rel) = if gaussian {
            let e = -(s / std::f64::consts::PI.powf(-1.5)).ln() - 3.0;
            let r = ((gp - e) / e).abs();
            worst = worst.max(r);
            (num(e), num(r))
        } else {
            (String::new(), String::new())
        };
        table.push(vec![num(s), num(gp), num(nl.g(s)), exact, rel]);
    }
    sink.csv("reconstruct", &table)?;
    let summary = ReconstructSummary {
        profile: profile.name().to_string(),
        points: n,
        s_min: lo,
        s_max: hi,
        extension_rule: nl.extension_rule(),
        max_relative_error: gaussian.then_some(worst),
    };
    sink.summary("reconstruct", &summary)?;
    println!("reconstructed G' for {} on [{lo:.3e}, {hi:.3e}]", summary.profile);
    if gaussian {
        println!("max relative error against the closed form: {worst:.3e}");
    }
    Ok(())
}

#[derive(Serialize)]
struct SplitSummary {
    center: [f64; 3],
    t: f64,
    gradient_potential: ScalarDoc,
    tangent_part: VectorDoc,
    ray_nodes: usize,
    max_ray_error: f64,
    max_radial_component: f64,
}

pub fn split(cfg: &StudyConfig, over: &Overrides, sink: &Sink) -> Outcome {
    let pot = cfg.potentials()?;
    let (r, t) = (cfg.r0(), cfg.initial_state.t0);
    let local = pot.a().recentered(r).at_time(t);
    let (pi, tan) = split_polynomial_field(&local)?;
    let nodes = over.quad_nodes.unwrap_or(DEFAULT_SPLIT_NODES);
    let field = |y: &Vec3| local.eval_offset(t, y);
    let mut table = Table::new(&["y1", "y2", "y3", "pi", "pi_ray", "tan1", "tan2", "tan3", "tan_ray_error", "radial"]);
    let (mut worst, mut radial): (f64, f64) = (0.0, 0.0);
    for (_, y) in sample_offsets(100, 1.0, t, t, cfg.seed) {
        let (p_ray, t_ray) = split_field_at_point(&field, &y, nodes)?;
        let (p, tv) = (pi.eval_offset(t, &y), tan.eval_offset(t, &y));
        let err = (t_ray - tv).norm().max((p_ray - p).abs());
        let rad = y.dot(&tv).abs();
        worst = worst.max(err);
        radial = radial.max(rad);
        let [y1, y2, y3] = v3(&y);
        let [a1, a2, a3] = v3(&tv);
        table.push(vec![y1, y2, y3, num(p), num(p_ray), a1, a2, a3, num(err), num(rad)]);
    }
    sink.csv("split", &table)?;
    sink.summary(
        "split",
        &SplitSummary {
            center: cfg.initial_state.r0,
            t,
            gradient_potential: pi.to_doc(),
            tangent_part: tan.to_doc(),
            ray_nodes: nodes,
            max_ray_error: worst,
            max_radial_component: radial,
        },
    )?;
    println!("split A about r0: ray splitter error {worst:.3e}, max |y.V_tan| {radial:.3e}");
    Ok(())
}

#[derive(Serialize)]
struct TrajectorySummary {
    steps: usize,
    step: f64,
    sup_speed: f64,
    sup_acceleration: f64,
    final_position: [f64; 3],
}

pub fn trajectory(cfg: &StudyConfig, sink: &Sink) -> Outcome {
    let s = &cfg.initial_state;
    let pot = cfg.potentials()?;
    let traj = integrate_newton(&pot, &cfg.r0(), &cfg.v0(), s.t0, s.t1, s.step, &cfg.constants)?;
    let mut table = Table::new(&["t", "x", "y", "z", "vx", "vy", "vz", "ax", "ay", "az", "s_p"]);
    for i in 0..traj.len() {
        let mut row = vec![num(traj.time(i))];
        row.extend(v3(&traj.positions()[i]));
        row.extend(v3(&traj.velocities()[i]));
        row.extend(v3(&traj.accelerations()[i]));
        row.push(num(traj.phases()[i]));
        table.push(row);
    }
    sink.csv("trajectory", &table)?;
    let last = traj.positions().last().copied().unwrap_or_default();
    sink.summary(
        "trajectory",
        &TrajectorySummary {
            steps: traj.len() - 1,
            step: traj.step(),
            sup_speed: traj.sup_speed(),
            sup_acceleration: traj.sup_acceleration(),
            final_position: [last[0], last[1], last[2]],
        },
    )?;
    println!("integrated {} steps of {:.3e}; r(t1) = ({:.6}, {:.6}, {:.6})", traj.len() - 1, traj.step(), last[0], last[1], last[2]);
    Ok(())
}

#[derive(Serialize)]
struct VerifySummary {
    a: f64,
    lambda: f64,
    samples: usize,
    max_relative_residual: f64,
    tolerance: f64,
    pass: bool,
}

pub fn corpuscle_verify(cfg: &StudyConfig, sink: &Sink) -> Outcome {
    let wc = build_corpuscle(cfg)?;
    let nl = wc.nonlinearity()?;
    let k = cfg.constants;
    let a = cfg.corpuscle.a;
    let s = &cfg.initial_state;
    let mut table = Table::new(&["t", "x", "y", "z", "abs_psi", "abs_residual", "relative_residual"]);
    let mut worst: f64 = 0.0;
    for (t, y) in sample_offsets(cfg.corpuscle.samples, cfg.corpuscle.radius_factor * a, s.t0, s.t1, cfg.seed) {
        let x = wc.center(t)? + y;
        let res = nls_residual(&wc, wc.auxiliary(), &nl, t, &x, &k)?.norm();
        let psi = wc.sample(t, &x)?.psi.norm();
        let rel = res / (k.residual_scale(a) * psi);
        worst = worst.max(rel);
        let [x1, x2, x3] = v3(&x);
        table.push(vec![num(t), x1, x2, x3, num(psi), num(res), num(rel)]);
    }
    sink.csv("corpuscle_verify", &table)?;
    let pass = worst <= RESIDUAL_TOLERANCE;
    sink.summary(
        "corpuscle_verify",
        &VerifySummary {
            a,
            lambda: cfg.corpuscle.lambda,
            samples: cfg.corpuscle.samples,
            max_relative_residual: worst,
            tolerance: RESIDUAL_TOLERANCE,
            pass,
        },
    )?;
    println!("max relative NLS residual {worst:.3e} (tolerance {RESIDUAL_TOLERANCE:e})");
    if pass {
        Ok(())
    } else {
        Err(Failure::Acceptance(format!("relative residual {worst:e} exceeds {RESIDUAL_TOLERANCE:e}")))
    }
}

#[derive(Serialize)]
struct ConserveSummary {
    steps: [f64; 3],
    points: usize,
    continuity_order: [f64; 2],
    momentum_order: [f64; 2],
    energy_order: [f64; 2],
}

fn order(r: &[f64; 3]) -> f64 {
    (r[1] / r[2]).log2()
}

fn range(v: &[f64]) -> [f64; 2] {
    v.iter().fold([f64::INFINITY, f64::NEG_INFINITY], |[lo, hi], x| [lo.min(*x), hi.max(*x)])
}

/// Residuals of the local conservation laws at `h = a/10, a/20, a/40` and
/// the observed orders between the two finer steps.
pub fn conserve(cfg: &StudyConfig, sink: &Sink) -> Outcome {
    let wc = build_corpuscle(cfg)?;
    let nl = wc.nonlinearity()?;
    let k = cfg.constants;
    let a = cfg.corpuscle.a;
    let hs = [a / 10.0, a / 20.0, a / 40.0];
    let s = &cfg.initial_state;
    let margin = 2.0 * hs[0];
    if s.t1 - s.t0 <= 2.0 * margin {
        return Err(Failure::Config(format!("initial_state: [t0, t1] must be longer than {} for the stencils", 2.0 * margin)));
    }
    let aux = wc.auxiliary();
    let mut table = Table::new(&[
        "t", "x", "y", "z", "continuity_h1", "continuity_h2", "continuity_h3", "momentum_h1", "momentum_h2",
        "momentum_h3", "energy_h1", "energy_h2", "energy_h3", "continuity_order", "momentum_order", "energy_order",
    ]);
    let (mut oc, mut om, mut oe) = (Vec::new(), Vec::new(), Vec::new());
    let points = sample_offsets(cfg.corpuscle.samples, a, s.t0 + margin, s.t1 - margin, cfg.seed);
    for (t, y) in &points {
        let x = wc.center(*t)? + y;
        let mut c = [0.0; 3];
        let mut m = [0.0; 3];
        let mut e = [0.0; 3];
        for (i, &h) in hs.iter().enumerate() {
            c[i] = continuity_residual(&wc, aux, *t, &x, h, &k)?.abs();
            m[i] = momentum_residual(&wc, aux, &nl, *t, &x, h, &k)?.norm();
            e[i] = energy_residual(&wc, aux, &nl, *t, &x, h, &k)?.abs();
        }
        let (a1, a2, a3) = (order(&c), order(&m), order(&e));
        oc.push(a1);
        om.push(a2);
        oe.push(a3);
        let [x1, x2, x3] = v3(&x);
        let mut row = vec![num(*t), x1, x2, x3];
        row.extend(c.iter().chain(&m).chain(&e).map(|v| num(*v)));
        row.extend([num(a1), num(a2), num(a3)]);
        table.push(row);
    }
    sink.csv("conserve", &table)?;
    let summary = ConserveSummary {
        steps: hs,
        points: points.len(),
        continuity_order: range(&oc),
        momentum_order: range(&om),
        energy_order: range(&oe),
    };
    sink.summary("conserve", &summary)?;
    println!(
        "observed orders: continuity {:.2}..{:.2}, momentum {:.2}..{:.2}, energy {:.2}..{:.2}",
        summary.continuity_order[0],
        summary.continuity_order[1],
        summary.momentum_order[0],
        summary.momentum_order[1],
        summary.energy_order[0],
        summary.energy_order[1]
    );
    Ok(())
}

#[derive(Serialize)]
struct ConcentrateSummary<'a> {
    rho_bar_limit: f64,
    sup_speed: f64,
    sup_acceleration: f64,
    slopes: &'a [SlopeFit],
    p_prime_vs_radius: &'a Option<SlopeFit>,
    decay: Vec<DecayVerdict>,
}

pub fn concentrate(cfg: &StudyConfig, over: &Overrides, sink: &Sink) -> Outcome {
    let s = &cfg.initial_state;
    let mut options = cfg.study;
    options.step = s.step;
    if let Some(n) = over.quad_nodes {
        options.nodes_per_panel = n;
    }
    let report: ConcentrationReport = concentration_study(
        &cfg.potentials()?,
        &cfg.profile.build(),
        &cfg.r0(),
        &cfg.v0(),
        (s.t0, s.t1),
        &cfg.schedule,
        &cfg.p3()?,
        cfg.constants,
        &options,
    )?;
    let mut header = vec!["n", "a", "radius", "theta", "rho_bar", "rho_drift", "tail", "center_err"];
    header.extend(ConcentrationReport::DIAGNOSTICS);
    header.extend(["momentum", "momentum_err", "converged"]);
    let mut table = Table::new(&header);
    for (i, row) in report.rows.iter().enumerate() {
        let mut cells = vec![row.n.to_string()];
        cells.extend([row.a, row.radius, row.theta, row.rho_bar, row.rho_drift, row.tail, row.center_err].map(num));
        for name in ConcentrationReport::DIAGNOSTICS {
            cells.push(num(report.column(name).map_or(f64::NAN, |c| c[i])));
        }
        cells.extend([num(row.momentum), num(row.momentum_err), row.converged.to_string()]);
        table.push(cells);
    }
    sink.csv("concentrate", &table)?;
    let decay = report.decay_verdicts(3, 1e-4);
    for v in &decay {
        log::info!("{}: non-increasing from n = 3: {}, last/first small: {}", v.quantity, v.monotone, v.small_enough);
    }
    sink.summary(
        "concentrate",
        &ConcentrateSummary {
            rho_bar_limit: report.rho_bar_limit,
            sup_speed: report.sup_speed,
            sup_acceleration: report.sup_acceleration,
            slopes: &report.slopes,
            p_prime_vs_radius: &report.p_prime_vs_radius,
            decay,
        },
    )?;
    println!("concentration study over n = {}..={}", cfg.schedule.n_min, cfg.schedule.n_max);
    for row in &report.rows {
        println!(
            "n = {}: rho_bar = {:.15}, sup|r_n - r| = {:.2e}, int P' = {:.3e}, Q0 = {:.3e}",
            row.n, row.rho_bar, row.center_err, row.p_prime, row.q0
        );
    }
    if let Some(fit) = &report.p_prime_vs_radius {
        println!("slope of int P' against R_n: {:.3}", fit.slope);
    }
    Ok(())
}

pub fn selftest(sink: &Sink) -> Outcome {
    let checks = selftest::run_all();
    let mut table = Table::new(&["suite", "check", "value", "tolerance", "pass", "detail"]);
    for c in &checks {
        println!("{} [{}] {}: {:.3e} (tolerance {:.1e})", if c.pass { "PASS" } else { "FAIL" }, c.suite, c.name, c.value, c.tolerance);
        table.push(vec![
            c.suite.to_string(),
            c.name.to_string(),
            num(c.value),
            num(c.tolerance),
            c.pass.to_string(),
            c.detail.clone(),
        ]);
    }
    sink.csv("selftest", &table)?;
    let failed = checks.iter().filter(|c| !c.pass).count();
    if failed == 0 {
        Ok(())
    } else {
        Err(Failure::Acceptance(format!("{failed} of {} checks failed", checks.len())))
    }
}
