//! Wave-corpuscle solutions `ψ = e^{iS} ψ̊_a(|x − r(t)|)`, pointwise
//! densities and the NLS residual of any field.

use std::sync::Arc;

use nalgebra::Vector3;
use num_complex::Complex64;

use crate::constants::PhysicalConstants;
use crate::dynamics::{integrate_newton, Trajectory, TrajectoryState};
use crate::error::{Error, Result};
use crate::fields::{AnalyticPotentials, AuxFrame, AuxiliaryPotentials, PolyScalarField, PotentialSample, Potentials, Vec3};
use crate::formfactor::{FormFactor, Nonlinearity, RadialProfile};
use crate::quadrature::GaussLegendre;

pub type CVec3 = Vector3<Complex64>;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// `ψ` and its first derivatives and Laplacian at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSample {
    pub psi: Complex64,
    pub grad_psi: CVec3,
    pub dt_psi: Complex64,
    pub laplacian_psi: Complex64,
}

impl FieldSample {
    pub fn zero() -> Self {
        let z = Complex64::new(0.0, 0.0);
        Self { psi: z, grad_psi: CVec3::from_element(z), dt_psi: z, laplacian_psi: z }
    }

    pub fn is_finite(&self) -> bool {
        self.psi.is_finite()
            && self.dt_psi.is_finite()
            && self.laplacian_psi.is_finite()
            && self.grad_psi.iter().all(|c| c.is_finite())
    }

    /// Multiplies the field by a constant phase `e^{iγ}`.
    pub fn rotated(&self, gamma: f64) -> Self {
        let e = Complex64::from_polar(1.0, gamma);
        Self {
            psi: self.psi * e,
            grad_psi: self.grad_psi.map(|c| c * e),
            dt_psi: self.dt_psi * e,
            laplacian_psi: self.laplacian_psi * e,
        }
    }
}

/// A complex field that can be sampled with derivatives.
pub trait FieldProvider: Sync {
    fn sample(&self, t: f64, x: &Vec3) -> Result<FieldSample>;
}

/// The field `ψ ≡ 0`.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroField;

impl FieldProvider for ZeroField {
    fn sample(&self, _t: f64, _x: &Vec3) -> Result<FieldSample> {
        Ok(FieldSample::zero())
    }
}

/// `e^{iγ} ψ`.
#[derive(Debug, Clone)]
pub struct PhaseRotated<F> {
    pub inner: F,
    pub gamma: f64,
}

impl<F: FieldProvider> FieldProvider for PhaseRotated<F> {
    fn sample(&self, t: f64, x: &Vec3) -> Result<FieldSample> {
        Ok(self.inner.sample(t, x)?.rotated(self.gamma))
    }
}

/// `(1 + rate·t) ψ`: a deliberately broken field for negative controls.
#[derive(Debug, Clone)]
pub struct AmplitudeRamp<F> {
    pub inner: F,
    pub rate: f64,
}

impl<F: FieldProvider> FieldProvider for AmplitudeRamp<F> {
    fn sample(&self, t: f64, x: &Vec3) -> Result<FieldSample> {
        let s = self.inner.sample(t, x)?;
        let k = 1.0 + self.rate * t;
        Ok(FieldSample {
            psi: s.psi * k,
            grad_psi: s.grad_psi * Complex64::new(k, 0.0),
            dt_psi: s.dt_psi * k + s.psi * self.rate,
            laplacian_psi: s.laplacian_psi * k,
        })
    }
}

impl<F: FieldProvider + ?Sized> FieldProvider for &F {
    fn sample(&self, t: f64, x: &Vec3) -> Result<FieldSample> {
        (**self).sample(t, x)
    }
}

impl<F: FieldProvider + ?Sized + Send> FieldProvider for Arc<F> {
    fn sample(&self, t: f64, x: &Vec3) -> Result<FieldSample> {
        (**self).sample(t, x)
    }
}

/// The phase `S` and its derivatives at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseSample {
    pub s: f64,
    pub grad: Vec3,
    pub laplacian: f64,
    /// `∂_t S` at fixed `x`.
    pub dt: f64,
}

/// A wave-corpuscle: a form factor riding on a Newton–Lorentz trajectory,
/// with the phase built from the auxiliary potentials along it.
#[derive(Debug, Clone)]
pub struct WaveCorpuscle {
    ff: FormFactor,
    aux: Arc<AuxiliaryPotentials>,
}

impl WaveCorpuscle {
    pub fn new(ff: FormFactor, aux: Arc<AuxiliaryPotentials>) -> Self {
        Self { ff, aux }
    }

    /// Integrates the trajectory in `pot` and assembles the corpuscle.
    #[allow(clippy::too_many_arguments)]
    pub fn build(
        pot: AnalyticPotentials,
        ff: FormFactor,
        r0: &Vec3,
        v0: &Vec3,
        t_span: (f64, f64),
        step: f64,
        p3: &PolyScalarField,
        constants: PhysicalConstants,
    ) -> Result<Self> {
        let traj = integrate_newton(&pot, r0, v0, t_span.0, t_span.1, step, &constants)?;
        let aux = AuxiliaryPotentials::new(Arc::new(pot), Arc::new(traj), p3, constants)?;
        Ok(Self::new(ff, Arc::new(aux)))
    }

    /// The same trajectory and potentials with another form factor.
    pub fn with_form_factor(&self, ff: FormFactor) -> Self {
        Self { ff, aux: Arc::clone(&self.aux) }
    }

    pub fn form_factor(&self) -> &FormFactor {
        &self.ff
    }

    pub fn auxiliary(&self) -> &AuxiliaryPotentials {
        &self.aux
    }

    pub fn shared_auxiliary(&self) -> Arc<AuxiliaryPotentials> {
        Arc::clone(&self.aux)
    }

    pub fn trajectory(&self) -> &Trajectory {
        self.aux.trajectory()
    }

    pub fn constants(&self) -> &PhysicalConstants {
        self.aux.constants()
    }

    /// The quadratic-and-cubic phase part
    /// `s_p2 = (q/(2χc)) y·A1 y + (q/(3χc)) y·∇P3` (the latter equals
    /// `(q/(χc)) P3` for a homogeneous cubic).
    pub fn s_p2(&self, t: f64, y: &Vec3) -> Result<f64> {
        let f = self.aux.frame(t)?;
        let c1 = f.constants.q / (f.constants.chi * f.constants.c);
        Ok(0.5 * c1 * y.dot(&(f.a1 * y)) + c1 / 3.0 * y.dot(&f.p3.gradient(t, y)))
    }

    /// `s_p2` as the ray integral `(q/(χc)) ∫₀¹ y·A_∇2(s y) ds` of the
    /// non-constant gradient part `A_∇2(y) = ½(A1 + A1ᵀ) y + ∇P3(y)`.
    pub fn s_p2_ray(&self, t: f64, y: &Vec3, nodes: usize) -> Result<f64> {
        let f = self.aux.frame(t)?;
        let c1 = f.constants.q / (f.constants.chi * f.constants.c);
        let sym = (f.a1 + f.a1.transpose()) * 0.5;
        let gl = GaussLegendre::new(nodes);
        Ok(c1 * gl.integrate(0.0, 1.0, |s| {
            let z = y * s;
            y.dot(&(sym * z + f.p3.gradient(t, &z)))
        }))
    }

    /// `S(t, y)` with `y = x − r(t)`.
    pub fn phase(&self, t: f64, y: &Vec3) -> Result<f64> {
        let st = self.trajectory().state(t)?;
        let f = self.aux.frame_from_state(t, &st);
        Ok(self.phase_parts(&f, st.s_p, st.s_p_dot, y).s)
    }

    /// `S` with its gradient, Laplacian and time derivative.
    pub fn phase_sample(&self, t: f64, y: &Vec3) -> Result<PhaseSample> {
        let st = self.trajectory().state(t)?;
        let f = self.aux.frame_from_state(t, &st);
        Ok(self.phase_parts(&f, st.s_p, st.s_p_dot, y))
    }

    fn phase_parts(&self, f: &AuxFrame<'_>, s_p: f64, s_p_dot: f64, y: &Vec3) -> PhaseSample {
        let k = &f.constants;
        let t = f.t;
        let c1 = k.q / (k.chi * k.c);
        let mv = k.m / k.chi;
        let lam = k.chi * self.ff.lambda / (2.0 * k.m);
        let sym = f.a1 + f.a1.transpose();
        let p3 = f.p3.value(t, y);
        let gp3 = f.p3.gradient(t, y);
        let lap_p3 = f.p3.hessian(t, y).trace();
        let a0_dot = f.dt_a0 + f.a1 * f.v;

        let s = mv * f.v.dot(y) + c1 * y.dot(&f.a0) + s_p + 0.5 * c1 * y.dot(&(f.a1 * y)) + c1 * p3 - lam * t;
        let grad = f.v * mv + f.a0 * c1 + sym * y * (0.5 * c1) + gp3 * c1;
        let laplacian = c1 * f.a1.trace() + c1 * lap_p3;
        let dt = mv * (f.acc.dot(y) - f.v.norm_squared())
            + c1 * (a0_dot.dot(y) - f.v.dot(&f.a0))
            + s_p_dot
            + 0.5 * c1 * (y.dot(&(f.a1_dot * y)) - f.v.dot(&(sym * y)))
            + c1 * (f.p3.dt_value(t, y) - f.v.dot(&gp3))
            - lam;
        PhaseSample { s, grad, laplacian, dt }
    }

    /// The centre `r(t)`.
    pub fn center(&self, t: f64) -> Result<Vec3> {
        Ok(self.trajectory().state(t)?.r)
    }
}

impl FieldProvider for WaveCorpuscle {
    fn sample(&self, t: f64, x: &Vec3) -> Result<FieldSample> {
        let st = self.trajectory().state(t)?;
        let y = x - st.r;
        let (f, f1, _) = self.ff.eval(y.norm());
        if f == 0.0 && f1 == 0.0 {
            return Ok(FieldSample::zero());
        }
        let frame = self.aux.frame_from_state(t, &st);
        self.assemble(&st, &frame, &y)
    }
}

impl WaveCorpuscle {
    fn assemble(&self, st: &TrajectoryState, frame: &AuxFrame<'_>, y: &Vec3) -> Result<FieldSample> {
        let rho = y.norm();
        let (f, f1, _) = self.ff.eval(rho);
        if f == 0.0 && f1 == 0.0 {
            return Ok(FieldSample::zero());
        }
        let lap_f = self.ff.laplacian(rho);
        let grad_f = if rho > 0.0 { y * (f1 / rho) } else { Vec3::zeros() };
        let ph = self.phase_parts(frame, st.s_p, st.s_p_dot, y);
        let e = Complex64::from_polar(1.0, ph.s);
        let cgrad = |v: &Vec3| CVec3::new(v[0].into(), v[1].into(), v[2].into());
        let grad_psi = (cgrad(&grad_f) + cgrad(&ph.grad) * (I * f)) * e;
        let laplacian_psi =
            e * (lap_f + I * (2.0 * ph.grad.dot(&grad_f)) + I * (f * ph.laplacian) - f * ph.grad.norm_squared());
        let dt_psi = e * (-st.v.dot(&grad_f) + I * (f * ph.dt));
        let out = FieldSample { psi: e * f, grad_psi, dt_psi, laplacian_psi };
        if out.is_finite() {
            Ok(out)
        } else {
            Err(Error::NonFinite(format!("corpuscle field at t = {}", frame.t)))
        }
    }

    /// Trajectory state and auxiliary frame at `t`, for evaluating many
    /// points at one time.
    pub fn snapshot(&self, t: f64) -> Result<CorpuscleSnapshot<'_>> {
        let st = self.trajectory().state(t)?;
        let frame = self.aux.frame_from_state(t, &st);
        Ok(CorpuscleSnapshot { wc: self, st, frame })
    }

    /// The nonlinearity for which this corpuscle is an exact solution.
    pub fn nonlinearity(&self) -> Result<Nonlinearity> {
        let base = Nonlinearity::for_profile(&self.ff.profile, RECONSTRUCTION_RADIUS)?;
        Ok(base.scaled(self.ff.a)?.shifted(self.ff.lambda))
    }
}

/// Radius in units of `a` up to which non-Gaussian nonlinearities are
/// reconstructed.
pub const RECONSTRUCTION_RADIUS: f64 = 40.0;

/// A corpuscle frozen at one time.
#[derive(Debug, Clone, Copy)]
pub struct CorpuscleSnapshot<'a> {
    wc: &'a WaveCorpuscle,
    st: TrajectoryState,
    frame: AuxFrame<'a>,
}

impl CorpuscleSnapshot<'_> {
    pub fn t(&self) -> f64 {
        self.frame.t
    }

    pub fn state(&self) -> &TrajectoryState {
        &self.st
    }

    /// The field at offset `y` from the centre.
    pub fn field(&self, y: &Vec3) -> Result<FieldSample> {
        self.wc.assemble(&self.st, &self.frame, y)
    }

    /// The auxiliary potentials at offset `y` from the centre.
    pub fn auxiliary(&self, y: &Vec3) -> PotentialSample {
        self.frame.potentials(y)
    }
}

/// Covariant derivatives `∂̃_t ψ = ∂_t ψ + i(qφ/χ)ψ` and
/// `∇̃ψ = ∇ψ − i(q/(χc)) A ψ`, plus the covariant Laplacian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Covariant {
    pub psi: Complex64,
    pub dt: Complex64,
    pub grad: CVec3,
    pub laplacian: Complex64,
}

pub fn covariant(s: &FieldSample, p: &PotentialSample, k: &PhysicalConstants) -> Covariant {
    let ca = k.q / (k.chi * k.c);
    let a = CVec3::new(p.a[0].into(), p.a[1].into(), p.a[2].into());
    let dt = s.dt_psi + I * (k.q * p.phi / k.chi) * s.psi;
    let grad = s.grad_psi - a * (I * ca * s.psi);
    let a_dot_grad = a.dot(&s.grad_psi);
    let laplacian = s.laplacian_psi - I * ca * (s.psi * p.div_a() + 2.0 * a_dot_grad)
        - ca * ca * p.a.norm_squared() * s.psi;
    Covariant { psi: s.psi, dt, grad, laplacian }
}

/// `Im(ψ* ∇̃ψ)`.
fn current_kernel(c: &Covariant) -> Vec3 {
    let w = c.grad * c.psi.conj();
    Vec3::new(w[0].im, w[1].im, w[2].im)
}

/// Charge density, current density and momentum density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Densities {
    pub rho: f64,
    pub j: Vec3,
    pub p: Vec3,
}

/// `ρ = q|ψ|²`, `J = −i(qχ/2m)(ψ*∇̃ψ − ψ∇̃*ψ*)`,
/// `P = i(χ/2)(ψ∇̃*ψ* − ψ*∇̃ψ)` from one sample.
pub fn densities_from_sample(s: &FieldSample, p: &PotentialSample, k: &PhysicalConstants) -> Densities {
    let c = covariant(s, p, k);
    let w = current_kernel(&c);
    Densities { rho: k.q * s.psi.norm_sqr(), j: w * (k.q * k.chi / k.m), p: w * k.chi }
}

/// Densities of `field` under potentials `pot` at `(t, x)`.
pub fn densities(
    field: &impl FieldProvider,
    pot: &impl Potentials,
    t: f64,
    x: &Vec3,
    k: &PhysicalConstants,
) -> Result<Densities> {
    Ok(densities_from_sample(&field.sample(t, x)?, &pot.sample(t, x), k))
}

/// `iχ∂̃_tψ − (χ²/2m)[−∇̃²ψ + G'(|ψ|²)ψ]` from one sample.
pub fn nls_residual_from_sample(
    s: &FieldSample,
    p: &PotentialSample,
    nl: &crate::formfactor::Nonlinearity,
    k: &PhysicalConstants,
) -> Complex64 {
    let c = covariant(s, p, k);
    I * k.chi * c.dt - k.chi * k.chi / (2.0 * k.m) * (-c.laplacian + nl.apply(s.psi))
}

/// NLS residual of `field` under potentials `pot` at `(t, x)`.
pub fn nls_residual(
    field: &impl FieldProvider,
    pot: &impl Potentials,
    nl: &crate::formfactor::Nonlinearity,
    t: f64,
    x: &Vec3,
    k: &PhysicalConstants,
) -> Result<Complex64> {
    Ok(nls_residual_from_sample(&field.sample(t, x)?, &pot.sample(t, x), nl, k))
}

/// Convenience constructor used across tests and the CLI: a corpuscle of
/// size `a` with the given profile on the trajectory of `pot`.
#[allow(clippy::too_many_arguments)]
pub fn corpuscle_in(
    pot: &AnalyticPotentials,
    profile: RadialProfile,
    a: f64,
    r0: &Vec3,
    v0: &Vec3,
    t_span: (f64, f64),
    step: f64,
    p3: &PolyScalarField,
    constants: PhysicalConstants,
) -> Result<WaveCorpuscle> {
    WaveCorpuscle::build(pot.clone(), FormFactor::new(profile, a)?, r0, v0, t_span, step, p3, constants)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::TimePoly;
    use crate::formfactor::gaussian_profile;

    fn free(v0: Vec3) -> WaveCorpuscle {
        let k = PhysicalConstants::unit();
        corpuscle_in(
            &AnalyticPotentials::zero(),
            gaussian_profile(),
            0.5,
            &Vec3::zeros(),
            &v0,
            (0.0, 1.0),
            0.01,
            &PolyScalarField::zero(Vec3::zeros()),
            k,
        )
        .unwrap()
    }

    #[test]
    fn free_de_broglie_phase() {
        let v0 = Vec3::new(0.3, -0.4, 0.2);
        let wc = free(v0);
        let y = Vec3::new(0.1, 0.2, -0.3);
        let t = 0.37;
        let expected = v0.dot(&y) + 0.5 * v0.norm_squared() * t;
        assert!((wc.phase(t, &y).unwrap() - expected).abs() < 1e-14);
        assert!((wc.phase(t, &Vec3::zeros()).unwrap() - wc.trajectory().state(t).unwrap().s_p).abs() == 0.0);
        assert!(wc.phase(2.0, &y).is_err());
    }

    #[test]
    fn center_value_and_free_current() {
        let v0 = Vec3::new(0.3, -0.4, 0.2);
        let wc = free(v0);
        let k = *wc.constants();
        let t = 0.5;
        let r = wc.center(t).unwrap();
        let s = wc.sample(t, &r).unwrap();
        assert!((s.psi.norm() - 0.5f64.powf(-1.5) * gaussian_profile().value(0.0)).abs() < 1e-14);
        let x = r + Vec3::new(0.2, 0.1, -0.3);
        let d = densities(&wc, &AnalyticPotentials::zero(), t, &x, &k).unwrap();
        let f2 = wc.sample(t, &x).unwrap().psi.norm_sqr();
        assert!((d.j - v0 * (k.q * f2)).norm() < 1e-14);
    }

    #[test]
    fn zero_field_has_zero_residual() {
        let k = PhysicalConstants::unit();
        let r = nls_residual(&ZeroField, &AnalyticPotentials::zero(), &Nonlinearity::logarithmic(), 0.0, &Vec3::zeros(), &k)
            .unwrap();
        assert_eq!(r, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn antisymmetric_field_without_cubic_has_no_quadratic_phase() {
        let k = PhysicalConstants::unit();
        let pot = AnalyticPotentials::uniform(&Vec3::zeros(), &Vec3::new(0.0, 0.0, 1.0));
        let wc = corpuscle_in(
            &pot,
            gaussian_profile(),
            0.2,
            &Vec3::new(1.0, 0.0, 0.0),
            &Vec3::new(0.0, 1.0, 0.0),
            (0.0, 1.0),
            0.01,
            &PolyScalarField::zero(Vec3::zeros()),
            k,
        )
        .unwrap();
        assert!(wc.s_p2(0.4, &Vec3::new(0.3, -0.2, 0.5)).unwrap().abs() < 1e-16);
    }

    #[test]
    fn ray_integral_matches_closed_form() {
        let k = PhysicalConstants::new(1.0, 0.7, 1.2, 2.0).unwrap();
        let o = Vec3::zeros();
        let phi = PolyScalarField::monomial([2, 0, 0], TimePoly::constant(0.3), o);
        let a = crate::fields::PolyVectorField::linear(
            &crate::fields::Mat3::new(0.1, 0.5, 0.0, -0.2, 0.3, 0.4, 0.0, 0.1, -0.2),
            o,
        );
        let p3 = PolyScalarField::monomial([1, 2, 0], TimePoly::new(vec![0.5, 0.1]), o);
        let wc = corpuscle_in(
            &AnalyticPotentials::new(phi, a),
            gaussian_profile(),
            0.2,
            &Vec3::zeros(),
            &Vec3::new(0.1, 0.0, 0.0),
            (0.0, 0.5),
            0.01,
            &p3,
            k,
        )
        .unwrap();
        let y = Vec3::new(0.3, -0.6, 0.2);
        let (closed, ray) = (wc.s_p2(0.2, &y).unwrap(), wc.s_p2_ray(0.2, &y, 8).unwrap());
        assert!((closed - ray).abs() < 1e-14, "{closed} vs {ray}");
    }
}
