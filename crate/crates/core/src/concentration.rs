//! Diagnostics over shrinking balls around a trajectory: adjacent charge
//! and centre, surface and volume Q-integrals, primed integrals against
//! the auxiliary potentials, and the scaling study over a schedule of
//! sizes `a_n` and radii `R_n`.

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conservation::{enmt_from_sample, force_from_sample};
use crate::constants::PhysicalConstants;
use crate::corpuscle::{densities_from_sample, CorpuscleSnapshot, FieldProvider, FieldSample, WaveCorpuscle};
use crate::dynamics::integrate_newton;
use crate::error::{Error, Result};
use crate::fields::{
    linearize_potentials, AnalyticPotentials, AuxiliaryPotentials, PolyScalarField, PotentialSample, Potentials, Vec3,
};
use crate::formfactor::{charge_norm, FormFactor, Nonlinearity, RadialProfile};
use crate::quadrature::{adaptive_integrate, cumulative_simpson, BallRule, SphereRule};

/// Adjacent charge below this value leaves the centre undefined.
pub const CENTER_THRESHOLD: f64 = 1e-30;

/// Highest monomial degree checked when a neighborhood is built.
const SPHERE_CHECK_DEGREE: usize = 8;

fn compensated_sum(values: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut c) = (0.0f64, 0.0f64);
    for v in values {
        let t = sum + v;
        c += if sum.abs() >= v.abs() { (sum - t) + v } else { (v - t) + sum };
        sum = t;
    }
    sum + c
}

/// Euclidean norm without underflow of the squares.
pub fn safe_norm(v: &Vec3) -> f64 {
    v.x.hypot(v.y).hypot(v.z)
}

/// The ball `|x − r̂(t)| ≤ R` with its quadrature rules.
#[derive(Debug, Clone, PartialEq)]
pub struct Neighborhood {
    pub radius: f64,
    pub sphere: SphereRule,
    pub ball: BallRule,
}

impl Neighborhood {
    /// Builds and validates the rules: the sphere rule must reproduce
    /// monomial averages and the ball rule the volume `4πR³/3`.
    pub fn new(radius: f64, scale: f64, sphere: SphereRule, nodes_per_panel: usize) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() || !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::Invalid(format!("neighborhood needs positive radius and scale, got {radius}, {scale}")));
        }
        if nodes_per_panel == 0 || sphere.is_empty() {
            return Err(Error::Invalid("empty quadrature rule".into()));
        }
        let err = sphere.validate(sphere.exact_degree().min(SPHERE_CHECK_DEGREE));
        if err > 1e-12 {
            return Err(Error::Invalid(format!("sphere rule misses monomial averages by {err:e}")));
        }
        let ball = BallRule::new(radius, scale, nodes_per_panel, sphere.clone());
        let volume = compensated_sum(ball.points().map(|(_, w)| w));
        let exact = 4.0 / 3.0 * PI * radius.powi(3);
        if (volume - exact).abs() > 1e-12 * exact {
            return Err(Error::Invalid(format!("ball rule volume {volume:e} differs from {exact:e}")));
        }
        Ok(Self { radius, sphere, ball })
    }

    /// 24 × 48 sphere rule and 20 nodes per radial panel.
    pub fn standard(radius: f64, scale: f64) -> Result<Self> {
        Self::new(radius, scale, SphereRule::new(24, 48), 20)
    }

    /// Outward normals and area weights on the bounding sphere.
    pub fn surface(&self) -> impl Iterator<Item = (Vec3, f64)> + '_ {
        let r2 = self.radius * self.radius;
        self.sphere.directions.iter().zip(&self.sphere.weights).map(move |(n, w)| (*n, w * r2))
    }
}

/// `∮ |ψ̊_a|² dσ` over the bounding sphere of a ball centred on the form factor.
pub fn surface_density_integral(ff: &FormFactor, nb: &Neighborhood) -> f64 {
    nb.surface()
        .map(|(n, w)| {
            let v = ff.value((n * nb.radius).norm());
            w * v * v
        })
        .sum()
}

/// Adjacent charge `ρ̄ = ∫_Ω ρ` and centre `ρ̄⁻¹ ∫_Ω x ρ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdjacentCharge {
    pub rho_bar: f64,
    /// `None` when `ρ̄` is below [`CENTER_THRESHOLD`].
    pub center: Option<Vec3>,
}

/// Adjacent charge and centre of `field` on the ball about `r_hat`.
pub fn adjacent_charge_and_center(
    field: &impl FieldProvider,
    t: f64,
    r_hat: &Vec3,
    nb: &Neighborhood,
    k: &PhysicalConstants,
) -> Result<AdjacentCharge> {
    let mut rho_bar = 0.0;
    let mut moment = Vec3::zeros();
    for (y, w) in nb.ball.points() {
        let rho = k.q * field.sample(t, &(r_hat + y))?.psi.norm_sqr();
        rho_bar += w * rho;
        moment += y * (w * rho);
    }
    let center = (rho_bar.abs() >= CENTER_THRESHOLD).then(|| r_hat + moment / rho_bar);
    Ok(AdjacentCharge { rho_bar, center })
}

/// A field frozen at one time, evaluated at offsets from the ball centre.
pub trait SliceSource {
    fn time(&self) -> f64;
    /// Ball centre `r̂(t)`.
    fn center(&self) -> Vec3;
    /// `v̂(t) = dr̂/dt`.
    fn velocity(&self) -> Vec3;
    fn field(&self, y: &Vec3) -> Result<FieldSample>;
    /// Auxiliary potentials at offset `y`, if primed integrals are wanted.
    fn auxiliary(&self, _y: &Vec3) -> Option<PotentialSample> {
        None
    }
}

impl SliceSource for CorpuscleSnapshot<'_> {
    fn time(&self) -> f64 {
        self.t()
    }

    fn center(&self) -> Vec3 {
        self.state().r
    }

    fn velocity(&self) -> Vec3 {
        self.state().v
    }

    fn field(&self, y: &Vec3) -> Result<FieldSample> {
        CorpuscleSnapshot::field(self, y)
    }

    fn auxiliary(&self, y: &Vec3) -> Option<PotentialSample> {
        Some(CorpuscleSnapshot::auxiliary(self, y))
    }
}

/// Any field provider on a ball with a given centre and centre velocity.
pub struct FieldSlice<'a, F> {
    pub field: &'a F,
    pub t: f64,
    pub center: Vec3,
    pub velocity: Vec3,
}

impl<F: FieldProvider> SliceSource for FieldSlice<'_, F> {
    fn time(&self) -> f64 {
        self.t
    }

    fn center(&self) -> Vec3 {
        self.center
    }

    fn velocity(&self) -> Vec3 {
        self.velocity
    }

    fn field(&self, y: &Vec3) -> Result<FieldSample> {
        self.field.sample(self.t, &(self.center + y))
    }
}

/// Integrals at one time that involve the auxiliary potentials.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PrimedSlice {
    /// `∫_Ω P′`.
    pub momentum: Vec3,
    /// `∫_Ω J′`.
    pub current: Vec3,
    /// `∫_Ω f′`.
    pub force: Vec3,
    /// `∮ P′ v̂·n dσ`.
    pub momentum_flux: Vec3,
    /// `∮ n_i T′^{ij} dσ`.
    pub stress_flux: Vec3,
    /// `∮ (x − r) n·J′ dσ`.
    pub q22: Vec3,
    /// `∮ n·J′ dσ`.
    pub current_flux: f64,
}

/// Volume and surface integrals at one time.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Slice {
    pub t: f64,
    /// `∫_Ω ρ`.
    pub rho_bar: f64,
    /// `∫_Ω (x − r̂) ρ`.
    pub first_moment: Vec3,
    /// `∫_Ω P`.
    pub momentum: Vec3,
    /// `∮ n_i T^{ij} dσ`.
    pub stress_flux: Vec3,
    /// `∮ P v̂·n dσ`.
    pub momentum_flux: Vec3,
    /// `−∮ (x − r) v̂·n ρ dσ`.
    pub q20: Vec3,
    /// `∮ (x − r) n·J dσ`.
    pub q22: Vec3,
    /// `∮ (v̂·n ρ − n·J) dσ`.
    pub charge_flux: f64,
    /// `∫_Ω (E − E_∞) ρ`.
    pub q30: Vec3,
    /// `∫_Ω J × (B − B_∞) / c`.
    pub q31: Vec3,
    pub primed: Option<PrimedSlice>,
}

impl Slice {
    /// `ρ̄⁻¹ ∫_Ω (x − r̂) ρ`, or `None` below [`CENTER_THRESHOLD`].
    pub fn center_offset(&self) -> Option<Vec3> {
        (self.rho_bar.abs() >= CENTER_THRESHOLD).then(|| self.first_moment / self.rho_bar)
    }
}

fn is_zero(s: &FieldSample) -> bool {
    s.psi.norm_sqr() == 0.0 && s.grad_psi.iter().all(|g| g.norm_sqr() == 0.0)
}

/// All integrals of one time slice. `pot` are the true potentials and `lin`
/// their linearization about `r̂(t)`.
pub fn slice_integrals(
    src: &impl SliceSource,
    pot: &impl Potentials,
    lin: &impl Potentials,
    nl: &Nonlinearity,
    nb: &Neighborhood,
    k: &PhysicalConstants,
) -> Result<Slice> {
    let t = src.time();
    let c = src.center();
    let v_hat = src.velocity();
    let mut out = Slice { t, ..Slice::default() };
    let mut primed = PrimedSlice::default();
    let mut any_primed = false;

    for (y, w) in nb.ball.points() {
        let s = src.field(&y)?;
        if is_zero(&s) {
            continue;
        }
        let x = c + y;
        let p = pot.sample(t, &x);
        let d = densities_from_sample(&s, &p, k);
        let em = p.fields(k.c);
        let em_inf = lin.sample(t, &x).fields(k.c);
        out.rho_bar += w * d.rho;
        out.first_moment += y * (w * d.rho);
        out.momentum += d.p * w;
        out.q30 += (em.e - em_inf.e) * (w * d.rho);
        out.q31 += d.j.cross(&(em.b - em_inf.b)) * (w / k.c);
        if let Some(pa) = src.auxiliary(&y) {
            any_primed = true;
            let da = densities_from_sample(&s, &pa, k);
            primed.momentum += (d.p - da.p) * w;
            primed.current += (d.j - da.j) * w;
            primed.force += (force_from_sample(&s, &p, k).f - force_from_sample(&s, &pa, k).f) * w;
        }
    }

    for (n, w) in nb.surface() {
        let y = n * nb.radius;
        let s = src.field(&y)?;
        if is_zero(&s) {
            continue;
        }
        let x = c + y;
        let p = pot.sample(t, &x);
        let d = densities_from_sample(&s, &p, k);
        let tensor = enmt_from_sample(&s, &p, nl, k);
        let vn = v_hat.dot(&n);
        let nj = n.dot(&d.j);
        out.stress_flux += stress_contraction(&tensor.entries, &n) * w;
        out.momentum_flux += d.p * (w * vn);
        out.q20 -= y * (w * vn * d.rho);
        out.q22 += y * (w * nj);
        out.charge_flux += w * (vn * d.rho - nj);
        if let Some(pa) = src.auxiliary(&y) {
            any_primed = true;
            let da = densities_from_sample(&s, &pa, k);
            let ta = enmt_from_sample(&s, &pa, nl, k);
            let njp = n.dot(&(d.j - da.j));
            primed.momentum_flux += (d.p - da.p) * (w * vn);
            primed.stress_flux += stress_contraction(&(tensor.entries - ta.entries), &n) * w;
            primed.q22 += y * (w * njp);
            primed.current_flux += w * njp;
        }
    }
    if any_primed || src.auxiliary(&Vec3::zeros()).is_some() {
        out.primed = Some(primed);
    }
    Ok(out)
}

/// `n_i T^{ij}` from the spatial block of a 4 × 4 tensor.
fn stress_contraction(e: &nalgebra::Matrix4<f64>, n: &Vec3) -> Vec3 {
    Vec3::from_fn(|j, _| (0..3).map(|i| n[i] * e[(i + 1, j + 1)]).sum())
}

/// Q-integrals at one time of a uniform grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QRecord {
    pub t: f64,
    /// `∫_{t₀}^t ∮ n_i T^{ij} dσ dt′`.
    pub q0: Vec3,
    /// `∫_{t₀}^t ∮ P v̂·n dσ dt′`.
    pub q01: Vec3,
    pub q20: Vec3,
    pub q22: Vec3,
    /// `∫_{t₀}^t ∮ (v̂·n ρ − n·J) dσ dt′`.
    pub q23: f64,
    /// `∫_{t₀}^t (Q₃₀ + Q₃₁) dt′`.
    pub q3: Vec3,
}

/// Assembles the Q-integrals from slices on a uniform time grid of step
/// `h`, integrating in time with cumulative Simpson weights.
pub fn q_integrals(slices: &[Slice], h: f64) -> Vec<QRecord> {
    let collect_v = |f: &dyn Fn(&Slice) -> Vec3| slices.iter().map(f).collect::<Vec<_>>();
    let q0 = cumulative_simpson(&collect_v(&|s| s.stress_flux), h);
    let q01 = cumulative_simpson(&collect_v(&|s| s.momentum_flux), h);
    let q3 = cumulative_simpson(&collect_v(&|s| s.q30 + s.q31), h);
    let q23 = cumulative_simpson(&slices.iter().map(|s| s.charge_flux).collect::<Vec<_>>(), h);
    slices
        .iter()
        .enumerate()
        .map(|(i, s)| QRecord { t: s.t, q0: q0[i], q01: q01[i], q20: s.q20, q22: s.q22, q23: q23[i], q3: q3[i] })
        .collect()
}

/// Primed integrals at one time of a uniform grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrimedRecord {
    pub t: f64,
    /// `∫_Ω P′(t)`.
    pub p_prime: Vec3,
    /// `∫_{t₀}^t ∮ P′ v̂·n̄ dσ dt′`.
    pub momentum_flux: Vec3,
    /// `∫_{t₀}^t ∮ n̄_i T′^{ij} dσ dt′`.
    pub stress_flux: Vec3,
    /// `∫_{t₀}^t ∫_Ω f′ dx dt′`.
    pub force: Vec3,
    /// `∫_Ω J′(t)`.
    pub j_prime: Vec3,
    /// `∮ (x − r) n·J′ dσ`.
    pub q22_prime: Vec3,
    /// `Q₀′`, with the volume integral of `∂_i T′^{ij}` taken as a flux.
    pub q0_prime: Vec3,
    /// `Q₂′`; the `ρ′` terms vanish identically.
    pub q2_prime: Vec3,
    /// `Q₃′ = ∮ n·J′ dσ`; the `ρ′` terms vanish identically.
    pub q3_prime: f64,
}

/// Assembles the primed integrals; every slice must carry primed data.
pub fn primed_diagnostics(slices: &[Slice], h: f64) -> Result<Vec<PrimedRecord>> {
    let primed: Vec<PrimedSlice> = slices
        .iter()
        .map(|s| s.primed.ok_or_else(|| Error::Invalid(format!("no auxiliary potentials at t = {}", s.t))))
        .collect::<Result<_>>()?;
    let collect_v = |f: &dyn Fn(&PrimedSlice) -> Vec3| primed.iter().map(f).collect::<Vec<_>>();
    let mflux = cumulative_simpson(&collect_v(&|p| p.momentum_flux), h);
    let sflux = cumulative_simpson(&collect_v(&|p| p.stress_flux), h);
    let force = cumulative_simpson(&collect_v(&|p| p.force), h);
    let p_start = primed.first().map(|p| p.momentum).unwrap_or_default();
    Ok(slices
        .iter()
        .zip(&primed)
        .enumerate()
        .map(|(i, (s, p))| PrimedRecord {
            t: s.t,
            p_prime: p.momentum,
            momentum_flux: mflux[i],
            stress_flux: sflux[i],
            force: force[i],
            j_prime: p.current,
            q22_prime: p.q22,
            q0_prime: p.momentum - p_start - mflux[i] + sflux[i] - force[i],
            q2_prime: p.q22 - p.current,
            q3_prime: p.current_flux,
        })
        .collect())
}

/// Slices of a corpuscle on its own trajectory at the given times.
pub fn corpuscle_slices(
    wc: &WaveCorpuscle,
    nl: &Nonlinearity,
    nb: &Neighborhood,
    times: &[f64],
) -> Result<Vec<Slice>> {
    let aux = wc.auxiliary();
    let pot = aux.true_potentials();
    times
        .iter()
        .map(|&t| {
            let snap = wc.snapshot(t)?;
            let lin = linearize_potentials(pot, &snap.state().r)?;
            slice_integrals(&snap, pot, &lin, nl, nb, aux.constants())
        })
        .collect()
}

/// `4π ∫_θ^∞ ψ̊₁(x)² x² dx`, the charge of the unit profile outside radius `θ`.
pub fn tail_charge(profile: &RadialProfile, theta: f64) -> Result<f64> {
    if !(theta >= 0.0) || !theta.is_finite() {
        return Err(Error::Invalid(format!("tail radius must be non-negative, got {theta}")));
    }
    let mut f = |x: f64| {
        let v = profile.value(x);
        4.0 * PI * v * v * x * x
    };
    let mut total = 0.0;
    let mut lo = theta;
    let mut width = theta.max(1.0);
    for _ in 0..80 {
        let hi = lo + width;
        let (part, _) = adaptive_integrate(&mut f, lo, hi, 0.0, 1e-12)?;
        total += part;
        if part <= 1e-16 * total || (part == 0.0 && profile.value(hi) == 0.0) {
            return Ok(total);
        }
        lo = hi;
        width *= 2.0;
    }
    Err(Error::TailNotConverged { tail: total, radius: lo })
}

/// Power-law schedule `a_n = a0 n^{-a_exponent}`, `R_n = r0 n^{-r_exponent}`
/// for `n_min ≤ n ≤ n_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConcentrationSchedule {
    pub a0: f64,
    pub r0: f64,
    pub a_exponent: f64,
    pub r_exponent: f64,
    pub n_min: u32,
    pub n_max: u32,
}

impl Default for ConcentrationSchedule {
    fn default() -> Self {
        Self { a0: 0.02, r0: 0.5, a_exponent: 5.0, r_exponent: 1.0, n_min: 1, n_max: 6 }
    }
}

impl ConcentrationSchedule {
    pub fn new(a0: f64, r0: f64, a_exponent: f64, r_exponent: f64, n_min: u32, n_max: u32) -> Result<Self> {
        let s = Self { a0, r0, a_exponent, r_exponent, n_min, n_max };
        s.validate()?;
        Ok(s)
    }

    /// Requires `a_n → 0`, `R_n → 0`, `R_n/a_n → ∞` and `a_n R_n⁻⁴ → 0`.
    pub fn validate(&self) -> Result<()> {
        let all_finite = [self.a0, self.r0, self.a_exponent, self.r_exponent].iter().all(|v| v.is_finite());
        if !all_finite || !(self.a0 > 0.0) || !(self.r0 > 0.0) {
            return Err(Error::Invalid("schedule: a0 and r0 must be positive and finite".into()));
        }
        if !(self.r_exponent > 0.0) {
            return Err(Error::Invalid("schedule: R_n must tend to zero (r_exponent > 0)".into()));
        }
        if !(self.a_exponent > self.r_exponent) {
            return Err(Error::Invalid("schedule: R_n/a_n must diverge (a_exponent > r_exponent)".into()));
        }
        if !(self.a_exponent > 4.0 * self.r_exponent) {
            return Err(Error::Invalid("schedule: a_n R_n^-4 must tend to zero (a_exponent > 4 r_exponent)".into()));
        }
        if self.n_min == 0 || self.n_max < self.n_min {
            return Err(Error::Invalid(format!("schedule: need 1 <= n_min <= n_max, got {}..{}", self.n_min, self.n_max)));
        }
        Ok(())
    }

    pub fn a(&self, n: u32) -> f64 {
        self.a0 * (n as f64).powf(-self.a_exponent)
    }

    pub fn radius(&self, n: u32) -> f64 {
        self.r0 * (n as f64).powf(-self.r_exponent)
    }

    pub fn theta(&self, n: u32) -> f64 {
        self.radius(n) / self.a(n)
    }

    pub fn indices(&self) -> std::ops::RangeInclusive<u32> {
        self.n_min..=self.n_max
    }
}

/// Discretization of the study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StudyOptions {
    /// Number of grid times in `[t0, t1]`, endpoints included.
    pub n_times: usize,
    /// Upper bound on the trajectory step; the actual step divides the
    /// spacing of the time grid.
    pub step: f64,
    pub sphere_polar: usize,
    pub sphere_azimuth: usize,
    pub nodes_per_panel: usize,
    /// Bounds on `sup|v|` and `sup|r̈|` along the trajectory.
    pub max_speed: f64,
    pub max_acceleration: f64,
}

impl Default for StudyOptions {
    fn default() -> Self {
        Self {
            n_times: 21,
            step: 1e-4,
            sphere_polar: 24,
            sphere_azimuth: 48,
            nodes_per_panel: 20,
            max_speed: 1e6,
            max_acceleration: 1e6,
        }
    }
}

/// One schedule index of the study; Q values are suprema over the time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationRow {
    pub n: u32,
    pub a: f64,
    pub radius: f64,
    pub theta: f64,
    /// `ρ̄_n(t₀)`.
    pub rho_bar: f64,
    /// `sup_t |ρ̄_n(t) − ρ̄_n(t₀)|`.
    pub rho_drift: f64,
    /// `q` times the charge of the form factor outside the ball.
    pub tail: f64,
    /// `sup_t |r_n(t) − r̂(t)|`.
    pub center_err: f64,
    pub q0: f64,
    pub q01: f64,
    pub q20: f64,
    pub q22: f64,
    pub q23: f64,
    pub q3: f64,
    /// `sup_t |∫_Ω P′|`.
    pub p_prime: f64,
    pub q0_prime: f64,
    pub q2_prime: f64,
    pub q3_prime: f64,
    /// `sup_t |∫_Ω P|`.
    pub momentum: f64,
    /// `|∫_Ω P(t₀) − m v(t₀) ρ̄_∞ / q|`.
    pub momentum_err: f64,
    /// Adjacent charge agrees with a coarser rule to `1e-6` relative.
    pub converged: bool,
}

/// Log-log least-squares fit `ln y = slope · ln x + intercept`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub quantity: String,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: usize,
}

/// Fits over the points with positive finite `x` and `y`; `None` with
/// fewer than two such points.
pub fn fit_loglog(quantity: &str, xs: &[f64], ys: &[f64]) -> Option<SlopeFit> {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0 && x.is_finite() && y.is_finite())
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Some(SlopeFit { quantity: quantity.to_string(), slope, intercept: my - slope * mx, r_squared, points: pts.len() })
}

/// Decay verdict for one diagnostic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayVerdict {
    pub quantity: String,
    /// Non-increasing from the starting index on.
    pub monotone: bool,
    pub first: f64,
    pub last: f64,
    /// `last ≤ ratio · first`.
    pub small_enough: bool,
}

/// Outcome of the scaling study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationReport {
    pub schedule: ConcentrationSchedule,
    pub times: Vec<f64>,
    pub rows: Vec<ConcentrationRow>,
    /// Slopes of every diagnostic against `n`.
    pub slopes: Vec<SlopeFit>,
    /// Slope of `sup_t |∫_Ω P′|` against `R_n`.
    pub p_prime_vs_radius: Option<SlopeFit>,
    pub sup_speed: f64,
    pub sup_acceleration: f64,
    /// `ρ̄_∞ = q υ₀`.
    pub rho_bar_limit: f64,
}

impl ConcentrationReport {
    /// Names of the Q diagnostics in report order.
    pub const DIAGNOSTICS: [&'static str; 10] =
        ["Q0", "Q01", "Q20", "Q22", "Q23", "Q3", "Pprime_int", "Q0prime", "Q2prime", "Q3prime"];

    /// Values of one diagnostic across the schedule.
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let pick: fn(&ConcentrationRow) -> f64 = match name {
            "Q0" => |r| r.q0,
            "Q01" => |r| r.q01,
            "Q20" => |r| r.q20,
            "Q22" => |r| r.q22,
            "Q23" => |r| r.q23,
            "Q3" => |r| r.q3,
            "Pprime_int" => |r| r.p_prime,
            "Q0prime" => |r| r.q0_prime,
            "Q2prime" => |r| r.q2_prime,
            "Q3prime" => |r| r.q3_prime,
            _ => return None,
        };
        Some(self.rows.iter().map(pick).collect())
    }

    /// Checks every diagnostic for non-increase from index `start_n` on
    /// and for `last ≤ ratio · first`.
    pub fn decay_verdicts(&self, start_n: u32, ratio: f64) -> Vec<DecayVerdict> {
        Self::DIAGNOSTICS
            .iter()
            .map(|name| {
                let col = self.column(name).unwrap_or_default();
                let tail: Vec<f64> =
                    self.rows.iter().zip(&col).filter(|(r, _)| r.n >= start_n).map(|(_, v)| *v).collect();
                let monotone = tail.windows(2).all(|w| w[1] <= w[0]);
                let first = col.first().copied().unwrap_or(f64::NAN);
                let last = col.last().copied().unwrap_or(f64::NAN);
                DecayVerdict {
                    quantity: name.to_string(),
                    monotone,
                    first,
                    last,
                    small_enough: last <= ratio * first,
                }
            })
            .collect()
    }
}

/// Runs the scaling study: one Newton trajectory, then for every schedule
/// index a corpuscle of size `a_n` evaluated on the ball of radius `R_n`
/// at `options.n_times` grid times. Indices run in parallel and the rows
/// come back in index order.
#[allow(clippy::too_many_arguments)]
pub fn concentration_study(
    pot_true: &AnalyticPotentials,
    profile: &RadialProfile,
    r0: &Vec3,
    v0: &Vec3,
    t_span: (f64, f64),
    schedule: &ConcentrationSchedule,
    p3: &PolyScalarField,
    constants: PhysicalConstants,
    options: &StudyOptions,
) -> Result<ConcentrationReport> {
    schedule.validate()?;
    constants.validate()?;
    let (t0, t1) = t_span;
    if options.n_times < 2 {
        return Err(Error::Invalid("the study needs at least two grid times".into()));
    }
    if !(t1 > t0) || !(options.step > 0.0) {
        return Err(Error::Invalid(format!("need t0 < t1 and a positive step, got [{t0}, {t1}], {}", options.step)));
    }
    let dt = (t1 - t0) / (options.n_times - 1) as f64;
    let sub = (dt / options.step * (1.0 - 1e-12)).ceil().max(1.0);
    let traj = integrate_newton(pot_true, r0, v0, t0, t1, dt / sub, &constants)?;
    let (sup_speed, sup_acceleration) = (traj.sup_speed(), traj.sup_acceleration());
    if !(sup_speed <= options.max_speed) || !(sup_acceleration <= options.max_acceleration) {
        return Err(Error::Unbounded(format!(
            "trajectory bounds violated: sup|v| = {sup_speed:e} (max {:e}), sup|acc| = {sup_acceleration:e} (max {:e})",
            options.max_speed, options.max_acceleration
        )));
    }
    let times: Vec<f64> =
        (0..options.n_times).map(|i| if i + 1 == options.n_times { t1 } else { t0 + dt * i as f64 }).collect();
    let aux = Arc::new(AuxiliaryPotentials::new(Arc::new(pot_true.clone()), Arc::new(traj), p3, constants)?);
    let base_nl = Nonlinearity::for_profile(profile, crate::corpuscle::RECONSTRUCTION_RADIUS)?;
    let upsilon = charge_norm(&FormFactor::new(profile.clone(), 1.0)?)?;
    let rho_bar_limit = constants.q * upsilon;
    let v_start = aux.trajectory().velocities()[0];

    let indices: Vec<u32> = schedule.indices().collect();
    let rows = indices
        .par_iter()
        .map(|&n| {
            let a = schedule.a(n);
            let radius = schedule.radius(n);
            let wc = WaveCorpuscle::new(FormFactor::new(profile.clone(), a)?, Arc::clone(&aux));
            let nl = base_nl.scaled(a)?;
            let sphere = SphereRule::new(options.sphere_polar, options.sphere_azimuth);
            let nb = Neighborhood::new(radius, a, sphere, options.nodes_per_panel)?;
            let coarse = Neighborhood::new(
                radius,
                a,
                SphereRule::new(options.sphere_polar.div_ceil(2), options.sphere_azimuth.div_ceil(2)),
                options.nodes_per_panel.div_ceil(2),
            )?;
            let slices = corpuscle_slices(&wc, &nl, &nb, &times)?;
            let mut converged = true;
            for s in &slices {
                let snap = wc.snapshot(s.t)?;
                let mut rho = 0.0;
                for (y, w) in coarse.ball.points() {
                    rho += w * constants.q * snap.field(&y)?.psi.norm_sqr();
                }
                converged &= (rho - s.rho_bar).abs() <= 1e-6 * s.rho_bar.abs();
            }
            let q = q_integrals(&slices, dt);
            let primed = primed_diagnostics(&slices, dt)?;
            let sup = |f: &dyn Fn(usize) -> f64| (0..slices.len()).map(f).fold(0.0f64, f64::max);
            let rho0 = slices[0].rho_bar;
            let center_err = sup(&|i| slices[i].center_offset().map_or(f64::INFINITY, |c| safe_norm(&c)));
            let row = ConcentrationRow {
                n,
                a,
                radius,
                theta: radius / a,
                rho_bar: rho0,
                rho_drift: sup(&|i| (slices[i].rho_bar - rho0).abs()),
                tail: constants.q * tail_charge(profile, radius / a)?,
                center_err,
                q0: sup(&|i| safe_norm(&q[i].q0)),
                q01: sup(&|i| safe_norm(&q[i].q01)),
                q20: sup(&|i| safe_norm(&q[i].q20)),
                q22: sup(&|i| safe_norm(&q[i].q22)),
                q23: sup(&|i| q[i].q23.abs()),
                q3: sup(&|i| safe_norm(&q[i].q3)),
                p_prime: sup(&|i| safe_norm(&primed[i].p_prime)),
                q0_prime: sup(&|i| safe_norm(&primed[i].q0_prime)),
                q2_prime: sup(&|i| safe_norm(&primed[i].q2_prime)),
                q3_prime: sup(&|i| primed[i].q3_prime.abs()),
                momentum: sup(&|i| safe_norm(&slices[i].momentum)),
                momentum_err: safe_norm(&(slices[0].momentum - v_start * (constants.m * rho_bar_limit / constants.q))),
                converged,
            };
            let finite = [row.rho_bar, row.rho_drift, row.q0, row.q01, row.q20, row.q22, row.q23, row.q3]
                .iter()
                .chain([row.p_prime, row.q0_prime, row.q2_prime, row.q3_prime, row.momentum].iter())
                .all(|v| v.is_finite());
            if !finite {
                return Err(Error::NonFinite(format!("concentration diagnostics at n = {n}")));
            }
            Ok(row)
        })
        .collect::<Vec<Result<ConcentrationRow>>>()
        .into_iter()
        .collect::<Result<Vec<_>>>()?;

    let mut report = ConcentrationReport {
        schedule: *schedule,
        times,
        rows,
        slopes: Vec::new(),
        p_prime_vs_radius: None,
        sup_speed,
        sup_acceleration,
        rho_bar_limit,
    };
    let ns: Vec<f64> = report.rows.iter().map(|r| r.n as f64).collect();
    for name in ConcentrationReport::DIAGNOSTICS {
        if let Some(fit) = fit_loglog(name, &ns, &report.column(name).unwrap_or_default()) {
            report.slopes.push(fit);
        }
    }
    let radii: Vec<f64> = report.rows.iter().map(|r| r.radius).collect();
    report.p_prime_vs_radius = fit_loglog("Pprime_int_vs_R", &radii, &report.column("Pprime_int").unwrap_or_default());
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formfactor::gaussian_profile;

    #[test]
    fn schedule_validation() {
        assert!(ConcentrationSchedule::default().validate().is_ok());
        assert!(ConcentrationSchedule::new(1.0, 1.0, 5.0, 1.0, 1, 6).is_ok());
        assert!(ConcentrationSchedule::new(1.0, 1.0, 4.0, 1.0, 1, 6).is_err());
        assert!(ConcentrationSchedule::new(1.0, 1.0, 3.0, 1.0, 1, 6).is_err());
        assert!(ConcentrationSchedule::new(1.0, 1.0, 5.0, 0.0, 1, 6).is_err());
        assert!(ConcentrationSchedule::new(1.0, 1.0, 5.0, 1.0, 0, 6).is_err());
        let s = ConcentrationSchedule::default();
        assert!((s.theta(2) - 400.0).abs() < 1e-9);
    }

    #[test]
    fn neighborhood_volume() {
        let nb = Neighborhood::standard(0.5, 0.02).unwrap();
        let exact = 4.0 / 3.0 * PI * 0.125;
        assert!((compensated_sum(nb.ball.points().map(|(_, w)| w)) - exact).abs() < 1e-12 * exact);
        assert!(Neighborhood::standard(-1.0, 0.1).is_err());
    }

    #[test]
    fn loglog_fit_recovers_power() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(-2.5)).collect();
        let fit = fit_loglog("y", &xs, &ys).unwrap();
        assert!((fit.slope + 2.5).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
        assert!(fit_loglog("y", &[1.0, 2.0], &[0.0, 1.0]).is_none());
    }

    #[test]
    fn gaussian_tail() {
        let tail = tail_charge(&gaussian_profile(), 1.0).unwrap();
        // 1 − erf(1) + 2 e^{-1}/√π
        assert!((tail - (1.0 - 0.8427007929497149 + 2.0 * (-1.0f64).exp() / PI.sqrt())).abs() < 1e-12);
        assert_eq!(tail_charge(&gaussian_profile(), 400.0).unwrap(), 0.0);
    }
}
