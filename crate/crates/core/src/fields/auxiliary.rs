//! Auxiliary potentials: the linearization of the true potentials about the
//! moving centre plus the cubic gauge-like term `grad P3` and the quadratic
//! scalar correction `phi2`, for which the wave-corpuscle is exact.

use std::sync::Arc;

use super::poly::{eval_matrix, Mat3, PolyScalarField, PolyVectorField, TimePoly, Vec3};
use super::potentials::{AnalyticPotentials, PotentialSample, Potentials};
use super::split::split_polynomial_field;
use crate::constants::PhysicalConstants;
use crate::dynamics::{Trajectory, TrajectoryState};
use crate::error::{Error, Result};

/// A homogeneous cubic `P3(t, y)` with its derivative polynomials.
#[derive(Debug, Clone, PartialEq)]
pub struct CubicGauge {
    p: PolyScalarField,
    grad: PolyVectorField,
    hess: [[PolyScalarField; 3]; 3],
    dt: PolyScalarField,
    dt_grad: PolyVectorField,
}

impl CubicGauge {
    /// Accepts the zero polynomial or a homogeneous cubic; the origin of
    /// `p3` is ignored because `P3` is always expanded in `y = x - r(t)`.
    pub fn new(p3: &PolyScalarField) -> Result<Self> {
        if let Some((d, _)) = p3.terms().find(|(d, _)| d.iter().sum::<u32>() != 3) {
            return Err(Error::Invalid(format!(
                "P3 must be a homogeneous cubic in y; found a term of multi-degree {d:?}"
            )));
        }
        let p = p3.with_origin(Vec3::zeros());
        let grad = p.gradient();
        let hess = p.hessian();
        let dt = p.dt();
        let dt_grad = dt.gradient();
        Ok(Self { p, grad, hess, dt, dt_grad })
    }

    pub fn zero() -> Self {
        Self::new(&PolyScalarField::zero(Vec3::zeros())).expect("zero is admissible")
    }

    pub fn poly(&self) -> &PolyScalarField {
        &self.p
    }

    pub fn is_zero(&self) -> bool {
        self.p.is_zero()
    }

    pub fn value(&self, t: f64, y: &Vec3) -> f64 {
        self.p.eval_offset(t, y)
    }

    pub fn gradient(&self, t: f64, y: &Vec3) -> Vec3 {
        self.grad.eval_offset(t, y)
    }

    pub fn hessian(&self, t: f64, y: &Vec3) -> Mat3 {
        eval_matrix(&self.hess, t, y)
    }

    pub fn dt_value(&self, t: f64, y: &Vec3) -> f64 {
        self.dt.eval_offset(t, y)
    }

    pub fn dt_gradient(&self, t: f64, y: &Vec3) -> Vec3 {
        self.dt_grad.eval_offset(t, y)
    }
}

/// Second-derivative data of `A` needed for the time derivative of its
/// Jacobian along the trajectory.
#[derive(Debug, Clone, PartialEq)]
struct JacobianRates {
    dt_jac: [[PolyScalarField; 3]; 3],
    /// `d_jac[k][i][j] = d_k d_j A_i`.
    d_jac: [[[PolyScalarField; 3]; 3]; 3],
}

impl JacobianRates {
    fn new(pot: &AnalyticPotentials) -> Self {
        let jac = pot.a().jacobian();
        Self {
            dt_jac: std::array::from_fn(|i| std::array::from_fn(|j| jac[i][j].dt())),
            d_jac: std::array::from_fn(|k| std::array::from_fn(|i| std::array::from_fn(|j| jac[i][j].partial(k)))),
        }
    }

    /// `d/dt [J_A(t, r(t))]` for a centre moving with velocity `v`.
    fn total_rate(&self, t: f64, y: &Vec3, v: &Vec3) -> Mat3 {
        let mut m = eval_matrix(&self.dt_jac, t, y);
        for k in 0..3 {
            if v[k] != 0.0 {
                m += eval_matrix(&self.d_jac[k], t, y) * v[k];
            }
        }
        m
    }
}

/// Everything about the auxiliary potentials that depends on time only.
#[derive(Debug, Clone, Copy)]
pub struct AuxFrame<'a> {
    pub t: f64,
    pub r: Vec3,
    pub v: Vec3,
    pub acc: Vec3,
    /// `A(t, r)`.
    pub a0: Vec3,
    /// `A1 = J_A(t, r)`, `A1[(i, j)] = d_j A_i`.
    pub a1: Mat3,
    /// `d/dt A1` along the centre.
    pub a1_dot: Mat3,
    /// `d_t A(t, r)` at fixed `x`.
    pub dt_a0: Vec3,
    pub phi0: f64,
    pub grad_phi0: Vec3,
    pub p3: &'a CubicGauge,
    pub constants: PhysicalConstants,
}

impl AuxFrame<'_> {
    /// Antisymmetric part of `A1`; `Ă = K y`.
    pub fn k(&self) -> Mat3 {
        (self.a1 - self.a1.transpose()) * 0.5
    }

    /// `phi2(y)`.
    pub fn phi2(&self, y: &Vec3) -> f64 {
        let c = &self.constants;
        let ky = self.k() * y;
        -c.q / (2.0 * c.m * c.c * c.c) * ky.norm_squared()
            - (0.5 * y.dot(&(self.a1_dot * y)) + self.p3.dt_value(self.t, y)) / c.c
            + self.v.dot(&self.p3.gradient(self.t, y)) / c.c
    }

    /// Auxiliary potentials and derivatives at offset `y` from the centre.
    pub fn potentials(&self, y: &Vec3) -> PotentialSample {
        let c = &self.constants;
        let t = self.t;
        let gp3 = self.p3.gradient(t, y);
        let hp3 = self.p3.hessian(t, y);
        let k = self.k();
        let ky = k * y;
        let a = self.a0 + self.a1 * y + gp3;
        let jac_a = self.a1 + hp3;
        let dt_a = self.dt_a0 + self.a1_dot * y + self.p3.dt_gradient(t, y) - hp3 * self.v;
        let phi2 = -c.q / (2.0 * c.m * c.c * c.c) * ky.norm_squared()
            - (0.5 * y.dot(&(self.a1_dot * y)) + self.p3.dt_value(t, y)) / c.c
            + self.v.dot(&gp3) / c.c;
        let grad_phi2 = -(k.transpose() * ky) * (c.q / (c.m * c.c * c.c))
            - ((self.a1_dot + self.a1_dot.transpose()) * y * 0.5 + self.p3.dt_gradient(t, y)) / c.c
            + hp3 * self.v / c.c;
        PotentialSample {
            phi: self.phi0 + self.grad_phi0.dot(y) + phi2,
            a,
            grad_phi: self.grad_phi0 + grad_phi2,
            jac_a,
            dt_a,
        }
    }
}

/// Auxiliary potentials following a trajectory; evaluable at any `(t, x)`
/// in the trajectory's time range.
#[derive(Debug, Clone)]
pub struct AuxiliaryPotentials {
    pot: Arc<AnalyticPotentials>,
    traj: Arc<Trajectory>,
    p3: CubicGauge,
    rates: JacobianRates,
    constants: PhysicalConstants,
}

impl AuxiliaryPotentials {
    pub fn new(
        pot: Arc<AnalyticPotentials>,
        traj: Arc<Trajectory>,
        p3: &PolyScalarField,
        constants: PhysicalConstants,
    ) -> Result<Self> {
        constants.validate()?;
        let rates = JacobianRates::new(&pot);
        Ok(Self { p3: CubicGauge::new(p3)?, rates, pot, traj, constants })
    }

    pub fn true_potentials(&self) -> &AnalyticPotentials {
        &self.pot
    }

    pub fn trajectory(&self) -> &Trajectory {
        &self.traj
    }

    pub fn shared_trajectory(&self) -> Arc<Trajectory> {
        Arc::clone(&self.traj)
    }

    pub fn cubic(&self) -> &CubicGauge {
        &self.p3
    }

    pub fn constants(&self) -> &PhysicalConstants {
        &self.constants
    }

    pub fn frame(&self, t: f64) -> Result<AuxFrame<'_>> {
        let st = self.traj.state(t)?;
        Ok(self.frame_from_state(t, &st))
    }

    /// Frame for an already interpolated trajectory state at `t`.
    pub fn frame_from_state(&self, t: f64, st: &TrajectoryState) -> AuxFrame<'_> {
        frame_at(&self.pot, &self.rates, &self.p3, t, st.r, st.v, st.acc, self.constants)
    }
}

#[allow(clippy::too_many_arguments)]
fn frame_at<'a>(
    pot: &AnalyticPotentials,
    rates: &JacobianRates,
    p3: &'a CubicGauge,
    t: f64,
    r: Vec3,
    v: Vec3,
    acc: Vec3,
    constants: PhysicalConstants,
) -> AuxFrame<'a> {
    let s = pot.sample(t, &r);
    let ya = r - pot.a().origin();
    AuxFrame {
        t,
        r,
        v,
        acc,
        a0: s.a,
        a1: s.jac_a,
        a1_dot: rates.total_rate(t, &ya, &v),
        dt_a0: s.dt_a,
        phi0: s.phi,
        grad_phi0: s.grad_phi,
        p3,
        constants,
    }
}

impl Potentials for AuxiliaryPotentials {
    /// Panics if `t` is outside the trajectory range.
    fn sample(&self, t: f64, x: &Vec3) -> PotentialSample {
        let f = self.frame(t).expect("auxiliary potentials evaluated outside the trajectory range");
        f.potentials(&(x - f.r))
    }
}

/// Snapshot of the auxiliary potentials about the centre `r` at time `t`,
/// as polynomials in `y = x - r`. The vector potential carries its exact
/// first time derivative at `t` (linear in `t' - t`); the scalar potential
/// is frozen at `t`. Values and first derivatives agree with
/// [`AuxiliaryPotentials`] at time `t`.
pub fn build_auxiliary_potentials(
    pot: &AnalyticPotentials,
    r: &Vec3,
    v: &Vec3,
    t: f64,
    p3: &PolyScalarField,
    constants: &PhysicalConstants,
) -> Result<AnalyticPotentials> {
    constants.validate()?;
    let gauge = CubicGauge::new(p3)?;
    let rates = JacobianRates::new(pot);
    let f = frame_at(pot, &rates, &gauge, t, *r, *v, Vec3::zeros(), *constants);
    let o = *r;
    let c = constants;

    let grad_p3 = gauge.grad.at_time(t).with_origin(o);
    let hess_v = PolyVectorField::new(std::array::from_fn(|i| {
        (0..3).fold(PolyScalarField::zero(o), |acc, j| acc.add(&gauge.hess[i][j].at_time(t).with_origin(o).scale(v[j])))
    }))?;
    let a_now = PolyVectorField::constant(&f.a0, o).add(&PolyVectorField::linear(&f.a1, o)).add(&grad_p3);
    let a_rate = PolyVectorField::constant(&f.dt_a0, o)
        .add(&PolyVectorField::linear(&f.a1_dot, o))
        .add(&gauge.dt_grad.at_time(t).with_origin(o))
        .sub(&hess_v);
    let tau = TimePoly::new(vec![-t, 1.0]);
    let a = a_now.add(&a_rate.scale_time(&tau));

    let k = f.k();
    let phi2 = PolyScalarField::quadratic_form(&(k.transpose() * k), o)
        .scale(-c.q / (2.0 * c.m * c.c * c.c))
        .sub(&PolyScalarField::quadratic_form(&f.a1_dot, o).scale(0.5 / c.c))
        .sub(&gauge.dt.at_time(t).with_origin(o).scale(1.0 / c.c))
        .add(&grad_p3.components().iter().enumerate().fold(PolyScalarField::zero(o), |acc, (j, g)| {
            acc.add(&g.scale(v[j] / c.c))
        }));
    let phi = PolyScalarField::constant(f.phi0, o).add(&PolyScalarField::linear(&f.grad_phi0, o)).add(&phi2);
    Ok(AnalyticPotentials::new(phi, a))
}

/// Residuals of the shape-preservation balance conditions at offset `y`:
/// the force balance
/// `m r'' - [(q/c) grad(v.A) - (q²/(2mc²)) grad|Ă|² - q grad phi - (q/c) d_t A_grad]`
/// and the divergence `div Ă`, where `A = grad Pi + Ă` is the splitting of
/// `A` about the centre `r` and `d_t` acts at fixed `y`.
pub fn balance_residual(
    pot: &AnalyticPotentials,
    r: &Vec3,
    v: &Vec3,
    acc: &Vec3,
    t: f64,
    y: &Vec3,
    constants: &PhysicalConstants,
) -> Result<(Vec3, f64)> {
    let c = constants;
    let a_local = pot.a().recentered(*r).at_time(t);
    let (_, a_tan) = split_polynomial_field(&a_local)?;
    let moving_rate = pot.dt_a_field().recentered(*r).at_time(t).add(&a_local.directional(v));
    let (pi_rate, _) = split_polynomial_field(&moving_rate)?;

    let x = r + y;
    let s = pot.sample(t, &x);
    let tan = a_tan.eval_offset(t, y);
    let tan_jac = eval_matrix(&a_tan.jacobian(), t, y);
    let grad_tan_sq = tan_jac.transpose() * tan * 2.0;
    let grad_v_dot_a = s.jac_a.transpose() * v;
    let rhs = grad_v_dot_a * (c.q / c.c) - grad_tan_sq * (c.q * c.q / (2.0 * c.m * c.c * c.c))
        - s.grad_phi * c.q
        - pi_rate.gradient().eval_offset(t, y) * (c.q / c.c);
    let div = a_tan.divergence().eval_offset(t, y);
    Ok((acc * c.m - rhs, div))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::lorentz_force;

    fn mono(deg: [u32; 3], c: f64) -> PolyScalarField {
        PolyScalarField::monomial(deg, TimePoly::constant(c), Vec3::zeros())
    }

    #[test]
    fn spatially_constant_potentials_are_their_own_auxiliary() {
        let k = PhysicalConstants::unit();
        let o = Vec3::zeros();
        let phi = PolyScalarField::monomial([0, 0, 0], TimePoly::new(vec![0.3, 0.2]), o);
        let a = PolyVectorField::constant(&Vec3::new(1.0, -1.0, 0.5), o);
        let pot = AnalyticPotentials::new(phi, a);
        let r = Vec3::new(0.2, 0.4, -0.1);
        let v = Vec3::new(0.5, 0.0, 0.1);
        let aux = build_auxiliary_potentials(&pot, &r, &v, 0.7, &PolyScalarField::zero(o), &k).unwrap();
        for y in [Vec3::zeros(), Vec3::new(0.3, -0.2, 0.9)] {
            let (s_true, s_aux) = (pot.sample(0.7, &(r + y)), aux.sample(0.7, &(r + y)));
            assert!((s_true.phi - s_aux.phi).abs() < 1e-15);
            assert!((s_true.a - s_aux.a).norm() < 1e-15);
        }
    }

    #[test]
    fn antisymmetric_linear_vector_potential() {
        let k = PhysicalConstants::new(2.0, 0.5, 1.0, 3.0).unwrap();
        let m = Mat3::new(0.0, 1.0, -0.5, -1.0, 0.0, 2.0, 0.5, -2.0, 0.0);
        let pot = AnalyticPotentials::new(PolyScalarField::zero(Vec3::zeros()), PolyVectorField::linear(&m, Vec3::zeros()));
        let r = Vec3::zeros();
        let aux =
            build_auxiliary_potentials(&pot, &r, &Vec3::zeros(), 0.0, &PolyScalarField::zero(Vec3::zeros()), &k).unwrap();
        let y = Vec3::new(0.4, -0.3, 0.8);
        let expected = -k.q / (2.0 * k.m * k.c * k.c) * (m * y).norm_squared();
        assert!((aux.sample(0.0, &y).phi - expected).abs() < 1e-15);
    }

    #[test]
    fn uniform_magnetic_field_phi2() {
        let k = PhysicalConstants::new(1.5, 0.7, 1.0, 2.0).unwrap();
        let b0 = 1.3;
        let pot = AnalyticPotentials::uniform(&Vec3::zeros(), &Vec3::new(0.0, 0.0, b0));
        let r = Vec3::new(0.1, 0.2, 0.3);
        let aux =
            build_auxiliary_potentials(&pot, &r, &Vec3::zeros(), 0.0, &PolyScalarField::zero(Vec3::zeros()), &k).unwrap();
        let y = Vec3::new(0.4, -0.3, 0.8);
        let s0 = pot.sample(0.0, &r).phi;
        let expected = -k.q * b0 * b0 / (8.0 * k.m * k.c * k.c) * (y[0] * y[0] + y[1] * y[1]);
        assert!((aux.sample(0.0, &(r + y)).phi - s0 - expected).abs() < 1e-15);
    }

    #[test]
    fn non_cubic_gauge_is_rejected() {
        assert!(CubicGauge::new(&mono([1, 1, 0], 1.0)).is_err());
        assert!(CubicGauge::new(&mono([1, 1, 1], 1.0)).is_ok());
    }

    #[test]
    fn snapshot_balances_with_newton_acceleration() {
        let k = PhysicalConstants::new(1.3, 0.8, 0.9, 1.7).unwrap();
        let o = Vec3::zeros();
        let mut phi = mono([2, 0, 0], 0.4).add(&mono([0, 1, 1], -0.3)).add(&mono([1, 0, 0], 0.2));
        phi.add_term([0, 0, 1], TimePoly::new(vec![0.0, 0.5]));
        let a = PolyVectorField::new([
            mono([0, 1, 0], -0.5).add(&mono([1, 1, 0], 0.2)),
            mono([1, 0, 0], 0.5).add(&PolyScalarField::monomial([0, 0, 1], TimePoly::new(vec![0.1, 0.3]), o)),
            mono([2, 0, 0], 0.1),
        ])
        .unwrap();
        let pot = AnalyticPotentials::new(phi, a);
        let p3 = mono([1, 2, 0], 0.7).add(&PolyScalarField::monomial([0, 0, 3], TimePoly::new(vec![0.2, -0.4]), o));
        let (r, v, t) = (Vec3::new(0.3, -0.2, 0.5), Vec3::new(0.4, 0.1, -0.6), 0.35);
        let aux = build_auxiliary_potentials(&pot, &r, &v, t, &p3, &k).unwrap();
        let acc = lorentz_force(&pot, t, &r, &v, &k) / k.m;
        for y in [Vec3::zeros(), Vec3::new(0.3, -0.1, 0.2), Vec3::new(-1.0, 0.7, 0.4)] {
            let (force, div) = balance_residual(&aux, &r, &v, &acc, t, &y, &k).unwrap();
            assert!(force.norm() < 1e-12, "y = {y:?}: {force:?}");
            assert!(div.abs() < 1e-14);
        }
        // Fields at the centre are unchanged.
        let (e_true, e_aux) = (pot.sample(t, &r).fields(k.c), aux.sample(t, &r).fields(k.c));
        assert!((e_true.e - e_aux.e).norm() < 1e-14);
        assert!((e_true.b - e_aux.b).norm() < 1e-14);
    }
}
