//! Radial ground states, their size scaling, the charge normalization and
//! the nonlinearity a ground state determines.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quadrature::adaptive_integrate;

pub type RadialFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Which closed forms are known for a profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProfileKind {
    /// `π^{-3/4} exp(-θ²/2)`.
    Gaussian,
    /// `(1 + θ²)^{-p}`.
    Power { p: f64 },
    Custom,
}

/// A radial profile `ψ̊₁(θ)` with analytic first and second derivatives.
#[derive(Clone)]
pub struct RadialProfile {
    name: String,
    kind: ProfileKind,
    value: RadialFn,
    d1: RadialFn,
    d2: RadialFn,
}

impl fmt::Debug for RadialProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RadialProfile").field("name", &self.name).field("kind", &self.kind).finish()
    }
}

/// `π^{-3/4}`.
pub fn gaussian_constant() -> f64 {
    PI.powf(-0.75)
}

/// The Gaussian ground state `π^{-3/4} exp(-θ²/2)`, normalized to unit charge.
pub fn gaussian_profile() -> RadialProfile {
    let c = gaussian_constant();
    RadialProfile {
        name: "gaussian".into(),
        kind: ProfileKind::Gaussian,
        value: Arc::new(move |x| c * (-0.5 * x * x).exp()),
        d1: Arc::new(move |x| -c * x * (-0.5 * x * x).exp()),
        d2: Arc::new(move |x| c * (x * x - 1.0) * (-0.5 * x * x).exp()),
    }
}

/// The algebraically decaying profile `(1 + θ²)^{-p}` (not normalized).
pub fn power_profile(p: f64) -> RadialProfile {
    RadialProfile {
        name: format!("power({p})"),
        kind: ProfileKind::Power { p },
        value: Arc::new(move |x| (1.0 + x * x).powf(-p)),
        d1: Arc::new(move |x| -2.0 * p * x * (1.0 + x * x).powf(-p - 1.0)),
        d2: Arc::new(move |x| {
            let u = 1.0 + x * x;
            -2.0 * p * u.powf(-p - 1.0) + 4.0 * p * (p + 1.0) * x * x * u.powf(-p - 2.0)
        }),
    }
}

impl RadialProfile {
    pub fn custom(name: impl Into<String>, value: RadialFn, d1: RadialFn, d2: RadialFn) -> Self {
        Self { name: name.into(), kind: ProfileKind::Custom, value, d1, d2 }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> ProfileKind {
        self.kind
    }

    pub fn value(&self, x: f64) -> f64 {
        (self.value)(x)
    }

    pub fn d1(&self, x: f64) -> f64 {
        (self.d1)(x)
    }

    pub fn d2(&self, x: f64) -> f64 {
        (self.d2)(x)
    }

    /// `ψ̊'' + 2ψ̊'/θ`, with the removable singularity at the origin resolved.
    pub fn laplacian(&self, x: f64) -> f64 {
        if x.abs() < 1e-6 {
            3.0 * self.d2(x)
        } else {
            self.d2(x) + 2.0 * self.d1(x) / x
        }
    }

    /// The profile multiplied by a constant.
    pub fn scaled_amplitude(&self, k: f64) -> Self {
        let (v, d1, d2) = (Arc::clone(&self.value), Arc::clone(&self.d1), Arc::clone(&self.d2));
        Self::custom(
            format!("{}*{k}", self.name),
            Arc::new(move |x| k * v(x)),
            Arc::new(move |x| k * d1(x)),
            Arc::new(move |x| k * d2(x)),
        )
    }
}

/// A radial profile with size parameter `a` and eigenvalue shift `lambda`:
/// `ψ̊_a(r) = a^{-3/2} ψ̊₁(r/a)`.
#[derive(Debug, Clone)]
pub struct FormFactor {
    pub profile: RadialProfile,
    pub a: f64,
    pub lambda: f64,
}

impl FormFactor {
    pub fn new(profile: RadialProfile, a: f64) -> Result<Self> {
        Self::with_lambda(profile, a, 0.0)
    }

    pub fn with_lambda(profile: RadialProfile, a: f64, lambda: f64) -> Result<Self> {
        if !(a > 0.0) || !a.is_finite() {
            return Err(Error::Invalid(format!("size parameter must be positive, got {a}")));
        }
        if !lambda.is_finite() {
            return Err(Error::NonFinite("eigenvalue shift".into()));
        }
        Ok(Self { profile, a, lambda })
    }

    pub fn value(&self, r: f64) -> f64 {
        self.a.powf(-1.5) * self.profile.value(r / self.a)
    }

    /// `(ψ̊_a, ψ̊_a', ψ̊_a'')` at radius `r`.
    pub fn eval(&self, r: f64) -> (f64, f64, f64) {
        let a = self.a;
        let x = r / a;
        let s = a.powf(-1.5);
        (s * self.profile.value(x), s / a * self.profile.d1(x), s / (a * a) * self.profile.d2(x))
    }

    /// `∇²ψ̊_a` at radius `r`.
    pub fn laplacian(&self, r: f64) -> f64 {
        self.a.powf(-3.5) * self.profile.laplacian(r / self.a)
    }

    /// The scaled profile as a standalone radial profile.
    pub fn as_profile(&self) -> RadialProfile {
        let me = self.clone();
        let (m1, m2) = (self.clone(), self.clone());
        RadialProfile::custom(
            format!("{}@a={}", self.profile.name, self.a),
            Arc::new(move |r| me.eval(r).0),
            Arc::new(move |r| m1.eval(r).1),
            Arc::new(move |r| m2.eval(r).2),
        )
    }
}

/// `υ₀ = 4π ∫ ψ̊_a(r)² r² dr`, extending the range until the next doubling
/// contributes less than `1e-13` relative.
pub fn charge_norm(ff: &FormFactor) -> Result<f64> {
    let mut f = |r: f64| {
        let v = ff.value(r);
        v * v * r * r
    };
    let mut upper = 16.0 * ff.a;
    let (mut total, _) = adaptive_integrate(&mut f, 0.0, upper, 1e-15 / ff.a, 1e-14)?;
    let mut tail = f64::INFINITY;
    for _ in 0..13 {
        let (piece, _) = adaptive_integrate(&mut f, upper, 2.0 * upper, 1e-16 / ff.a, 1e-14)?;
        total += piece;
        upper *= 2.0;
        tail = piece.abs();
        if tail <= 1e-13 * total.abs() {
            return Ok(4.0 * PI * total);
        }
    }
    Err(Error::TailNotConverged { tail: 4.0 * PI * tail, radius: upper })
}

/// Result of [`decay_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct DecayReport {
    /// `sup θ² |ψ̊₁(θ)|` over the grid, and where it is attained.
    pub sup_value: f64,
    pub argsup_value: f64,
    /// `sup θ³ |ψ̊₁'(θ)|` over the grid, and where it is attained.
    pub sup_derivative: f64,
    pub argsup_derivative: f64,
    /// Whether each weighted quantity is non-increasing on the outer half.
    pub value_tail_decreasing: bool,
    pub derivative_tail_decreasing: bool,
    pub value_pass: bool,
    pub derivative_pass: bool,
}

impl DecayReport {
    pub fn pass(&self) -> bool {
        self.value_pass && self.derivative_pass
    }
}

/// Checks the decay bounds `θ²|ψ̊₁| ≤ C` and `θ³|ψ̊₁'| ≤ C` on a grid.
pub fn decay_check(profile: &RadialProfile, grid: &[f64]) -> Result<DecayReport> {
    if grid.len() < 4 || grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Invalid("decay grid must be increasing with at least 4 points".into()));
    }
    let last = *grid.last().unwrap();
    if last < 20.0 {
        return Err(Error::Invalid(format!("decay grid must reach 20, ends at {last}")));
    }
    let wv: Vec<f64> = grid.iter().map(|&x| x * x * profile.value(x).abs()).collect();
    let wd: Vec<f64> = grid.iter().map(|&x| x * x * x * profile.d1(x).abs()).collect();
    let sup = |w: &[f64]| {
        w.iter().zip(grid).fold((f64::NEG_INFINITY, 0.0), |(m, at), (v, x)| if *v > m { (*v, *x) } else { (m, at) })
    };
    let tail_decreasing = |w: &[f64]| {
        grid.iter()
            .zip(w)
            .filter(|(x, _)| **x >= 0.5 * last)
            .map(|(_, v)| *v)
            .collect::<Vec<_>>()
            .windows(2)
            .all(|p| p[1] <= p[0])
    };
    let (sv, av) = sup(&wv);
    let (sd, ad) = sup(&wd);
    let (tv, td) = (tail_decreasing(&wv), tail_decreasing(&wd));
    Ok(DecayReport {
        sup_value: sv,
        argsup_value: av,
        sup_derivative: sd,
        argsup_derivative: ad,
        value_tail_decreasing: tv,
        derivative_tail_decreasing: td,
        value_pass: sv.is_finite() && tv,
        derivative_pass: sd.is_finite() && td,
    })
}

#[derive(Debug, Clone)]
struct Reconstructed {
    profile: RadialProfile,
    r_max: f64,
    s_max: f64,
    s_min: f64,
    extension: f64,
    g_at_s_max: f64,
}

impl Reconstructed {
    /// Root of `ψ̊₁(r)² = s` on `[0, r_max]` by bisection.
    fn radius(&self, s: f64) -> f64 {
        let target = s.sqrt();
        let (mut lo, mut hi) = (0.0, self.r_max);
        for _ in 0..200 {
            if hi - lo <= 1e-14 {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if self.profile.value(mid) > target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    fn gprime_at_radius(&self, r: f64) -> f64 {
        self.profile.laplacian(r) / self.profile.value(r)
    }

    fn gprime(&self, s: f64) -> f64 {
        if s >= self.s_max {
            self.extension
        } else if s <= self.s_min {
            self.gprime_at_radius(self.r_max)
        } else {
            self.gprime_at_radius(self.radius(s))
        }
    }

    /// `G(s) = -2 ∫_{r(s)}^{r_max} ψ̊' (ψ̊'' + 2ψ̊'/r) dr`, which is the
    /// antiderivative of `G'` after the substitution `s = ψ̊²(r)`.
    fn g_below_max(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        let r0 = if s <= self.s_min { self.r_max } else { self.radius(s) };
        let p = &self.profile;
        let mut f = |r: f64| -2.0 * p.d1(r) * p.laplacian(r);
        adaptive_integrate(&mut f, r0, self.r_max, 1e-14, 1e-13).map(|v| v.0).unwrap_or(f64::NAN)
    }

    fn g(&self, s: f64) -> f64 {
        if s > self.s_max {
            self.g_at_s_max + self.extension * (s - self.s_max)
        } else {
            self.g_below_max(s)
        }
    }
}

#[derive(Debug, Clone)]
enum Base {
    /// `G'(s) = -ln(s/C²) - 3`, `C² = π^{-3/2}`.
    Logarithmic,
    Reconstructed(Reconstructed),
}

/// A nonlinearity `G'` with its antiderivative `G`, in scaled form
/// `G'_a(s) = σ a^{-2} G'₁(a³ s) + λ` and `G_a(s) = σ a^{-5} G₁(a³ s) + λ s`.
#[derive(Debug, Clone)]
pub struct Nonlinearity {
    base: Arc<Base>,
    a: f64,
    sign: f64,
    shift: f64,
}

impl Nonlinearity {
    /// The logarithmic nonlinearity of the Gaussian ground state, in closed form.
    pub fn logarithmic() -> Self {
        Self { base: Arc::new(Base::Logarithmic), a: 1.0, sign: 1.0, shift: 0.0 }
    }

    /// Closed form for the built-in Gaussian, reconstruction otherwise.
    pub fn for_profile(profile: &RadialProfile, r_max: f64) -> Result<Self> {
        match profile.kind() {
            ProfileKind::Gaussian => Ok(Self::logarithmic()),
            _ => reconstruct_nonlinearity(profile, r_max, 2000),
        }
    }

    pub fn size(&self) -> f64 {
        self.a
    }

    /// `ψ̊₁(0)²` scaled to the current size.
    pub fn s_max(&self) -> f64 {
        let s1 = match &*self.base {
            Base::Logarithmic => gaussian_constant().powi(2),
            Base::Reconstructed(r) => r.s_max,
        };
        s1 / self.a.powi(3)
    }

    /// `G'(s_max)`, the value used above `s_max` by reconstructed
    /// nonlinearities.
    pub fn extension_value(&self) -> f64 {
        self.gprime(self.s_max())
    }

    /// How `G'` is continued above `s_max`.
    pub fn extension_rule(&self) -> &'static str {
        match &*self.base {
            Base::Logarithmic => "closed form (no extension needed)",
            Base::Reconstructed(_) => "constant G'(s_max) above the sampled range, G'(s_min) below it",
        }
    }

    pub fn is_closed_form(&self) -> bool {
        matches!(&*self.base, Base::Logarithmic)
    }

    fn gprime1(&self, s: f64) -> f64 {
        match &*self.base {
            Base::Logarithmic => -(s / gaussian_constant().powi(2)).ln() - 3.0,
            Base::Reconstructed(r) => r.gprime(s),
        }
    }

    fn g1(&self, s: f64) -> f64 {
        match &*self.base {
            Base::Logarithmic => {
                if s <= 0.0 {
                    0.0
                } else {
                    -s * s.ln() + s * (gaussian_constant().powi(2).ln() - 2.0)
                }
            }
            Base::Reconstructed(r) => r.g(s),
        }
    }

    pub fn gprime(&self, s: f64) -> f64 {
        self.sign * self.gprime1(self.a.powi(3) * s) / (self.a * self.a) + self.shift
    }

    pub fn g(&self, s: f64) -> f64 {
        self.sign * self.g1(self.a.powi(3) * s) / self.a.powi(5) + self.shift * s
    }

    /// `G'(|ψ|²) ψ`, continuously extended by zero at `ψ = 0`.
    pub fn apply(&self, psi: Complex64) -> Complex64 {
        let s = psi.norm_sqr();
        if s == 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            psi * self.gprime(s)
        }
    }

    /// The same nonlinearity for size parameter `a` relative to the current one.
    pub fn scaled(&self, a: f64) -> Result<Self> {
        if !(a > 0.0) || !a.is_finite() {
            return Err(Error::Invalid(format!("size parameter must be positive, got {a}")));
        }
        Ok(Self { a: self.a * a, shift: self.shift / (a * a), ..self.clone() })
    }

    /// `G' + lambda`, matching a form factor with eigenvalue `lambda`.
    pub fn shifted(&self, lambda: f64) -> Self {
        Self { shift: self.shift + lambda, ..self.clone() }
    }

    /// `-G'`; a deliberately wrong nonlinearity for negative controls.
    pub fn negated(&self) -> Self {
        Self { sign: -self.sign, shift: -self.shift, ..self.clone() }
    }
}

/// `a^{-2} G'₁(a³ s)`.
pub fn scaled_nonlinearity(base: &Nonlinearity, a: f64) -> Result<Nonlinearity> {
    base.scaled(a)
}

/// The nonlinearity for which `profile` solves `∇²ψ̊ = G'(ψ̊²) ψ̊`, obtained
/// by inverting `s = ψ̊²(r)` on `[0, r_max]`. `n_samples` points are used
/// to verify that the profile is positive and strictly decreasing.
pub fn reconstruct_nonlinearity(profile: &RadialProfile, r_max: f64, n_samples: usize) -> Result<Nonlinearity> {
    if !(r_max > 0.0) || !r_max.is_finite() {
        return Err(Error::Invalid(format!("r_max must be positive, got {r_max}")));
    }
    let n = n_samples.max(2);
    for i in 1..=n {
        let r = r_max * i as f64 / n as f64;
        if !(profile.d1(r) < 0.0) || !(profile.value(r) > 0.0) {
            return Err(Error::NonMonotone { r });
        }
    }
    let s_max = profile.value(0.0).powi(2);
    let s_min = profile.value(r_max).powi(2);
    let mut rec = Reconstructed {
        profile: profile.clone(),
        r_max,
        s_max,
        s_min,
        extension: profile.laplacian(0.0) / profile.value(0.0),
        g_at_s_max: 0.0,
    };
    rec.g_at_s_max = rec.g_below_max(s_max);
    Ok(Nonlinearity { base: Arc::new(Base::Reconstructed(rec)), a: 1.0, sign: 1.0, shift: 0.0 })
}

/// `∇²ψ̊_a − G'_a(ψ̊_a²) ψ̊_a` at radius `r`.
pub fn steady_state_residual(ff: &FormFactor, nl: &Nonlinearity, r: f64) -> f64 {
    let f = ff.value(r);
    ff.laplacian(r) - nl.gprime(f * f) * f + ff.lambda * f
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_values() {
        let g = gaussian_profile();
        assert_eq!(g.value(0.0), PI.powf(-0.75));
        assert_eq!(g.d1(0.0), 0.0);
        let x: f64 = 1.7;
        assert!((g.laplacian(x) / g.value(x) - (x * x - 3.0)).abs() < 1e-14);
        assert!((g.laplacian(x) / g.value(x) + 0.11).abs() < 1e-12);
    }

    #[test]
    fn reconstruction_matches_logarithm() {
        let nl = reconstruct_nonlinearity(&gaussian_profile(), 12.0, 500).unwrap();
        let c2 = PI.powf(-1.5);
        assert!((nl.gprime(c2) + 3.0).abs() < 1e-12);
        assert!((nl.gprime(c2 * (-1.0f64).exp()) + 2.0).abs() < 1e-10);
        // Constant extension above s_max.
        assert_eq!(nl.gprime(2.0 * c2), nl.extension_value());
        // Antiderivative against the closed form.
        let log = Nonlinearity::logarithmic();
        for s in [1e-6, 1e-3, 0.05, c2 * 0.999] {
            assert!((nl.g(s) - log.g(s)).abs() < 1e-10, "s = {s}: {} vs {}", nl.g(s), log.g(s));
        }
        assert_eq!(nl.g(0.0), 0.0);
    }

    #[test]
    fn non_monotone_profile_is_rejected() {
        let bump = RadialProfile::custom(
            "bump",
            Arc::new(|x| (1.0 + 2.0 * x * x) * (-x * x).exp()),
            Arc::new(|x| (2.0 * x - 4.0 * x * x * x) * (-x * x).exp()),
            Arc::new(|_| 0.0),
        );
        assert!(matches!(reconstruct_nonlinearity(&bump, 5.0, 100), Err(Error::NonMonotone { .. })));
    }

    #[test]
    fn scaled_logarithmic_value() {
        let nl = scaled_nonlinearity(&Nonlinearity::logarithmic(), 2.0).unwrap();
        let expected = -0.25 * (8.0 / PI.powf(-1.5)).ln() - 0.75;
        assert!((nl.gprime(1.0) - expected).abs() < 1e-15);
        assert!((nl.gprime(1.0) + 1.6992).abs() < 1e-4);
        assert!(scaled_nonlinearity(&nl, 0.0).is_err());
        let id = scaled_nonlinearity(&Nonlinearity::logarithmic(), 1.0).unwrap();
        assert_eq!(id.gprime(0.3), Nonlinearity::logarithmic().gprime(0.3));
    }

    #[test]
    fn charge_norm_is_scale_invariant() {
        for a in [0.1, 1.0, 3.0] {
            let ff = FormFactor::new(gaussian_profile(), a).unwrap();
            assert!((charge_norm(&ff).unwrap() - 1.0).abs() < 1e-10);
        }
        let double = FormFactor::new(gaussian_profile().scaled_amplitude(2.0), 0.5).unwrap();
        assert!((charge_norm(&double).unwrap() - 4.0).abs() < 1e-9);
        let slow = FormFactor::new(power_profile(0.75), 1.0).unwrap();
        assert!(matches!(charge_norm(&slow), Err(Error::TailNotConverged { .. })));
    }

    #[test]
    fn decay_reports() {
        let grid: Vec<f64> = (0..=400).map(|i| i as f64 * 0.1).collect();
        let g = decay_check(&gaussian_profile(), &grid).unwrap();
        assert!(g.pass());
        assert!(g.argsup_value < 3.0 && g.argsup_derivative < 3.0);

        let slow = decay_check(&power_profile(0.75), &grid).unwrap();
        assert!(!slow.value_pass);
        assert!(!slow.pass());

        let mid = decay_check(&power_profile(1.5), &grid).unwrap();
        assert!(mid.value_pass);
        assert!(mid.sup_value.is_finite() && mid.sup_derivative.is_finite());
    }

    #[test]
    fn logarithmic_g_vanishes_continuously() {
        let nl = Nonlinearity::logarithmic();
        let mut prev = f64::INFINITY;
        for e in 2..=30 {
            let psi = Complex64::new(10f64.powi(-e), 0.0);
            let g = nl.apply(psi).norm();
            assert!(g < prev);
            prev = g;
        }
        assert!(prev < 1e-27);
        assert_eq!(nl.apply(Complex64::new(0.0, 0.0)), Complex64::new(0.0, 0.0));
    }
}
