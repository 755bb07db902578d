//! Newton–Lorentz point dynamics with the accumulated corpuscle phase.

use crate::constants::PhysicalConstants;
use crate::error::{Error, Result};
use crate::fields::{Potentials, Vec3};

/// `qE + (q/c) v x B` at `(t, r)`.
pub fn lorentz_force(pot: &impl Potentials, t: f64, r: &Vec3, v: &Vec3, k: &PhysicalConstants) -> Vec3 {
    let f = pot.sample(t, r).fields(k.c);
    f.e * k.q + v.cross(&f.b) * (k.q / k.c)
}

/// The phase integrand `(1/χ)(m v²/2 + (q/c) v·A(t,r) − q φ(t,r))`.
pub fn phase_rate(pot: &impl Potentials, t: f64, r: &Vec3, v: &Vec3, k: &PhysicalConstants) -> f64 {
    let s = pot.sample(t, r);
    (0.5 * k.m * v.norm_squared() + k.q / k.c * v.dot(&s.a) - k.q * s.phi) / k.chi
}

/// Time derivative of [`phase_rate`] along a trajectory with acceleration
/// `acc`, or `None` if the potentials do not provide `∂_t φ`.
pub fn phase_rate_derivative(
    pot: &impl Potentials,
    t: f64,
    r: &Vec3,
    v: &Vec3,
    acc: &Vec3,
    k: &PhysicalConstants,
) -> Option<f64> {
    let dt_phi = pot.dt_phi(t, r)?;
    let s = pot.sample(t, r);
    let a_dot = s.dt_a + s.jac_a * v;
    let phi_dot = dt_phi + s.grad_phi.dot(v);
    Some((k.m * v.dot(acc) + k.q / k.c * (acc.dot(&s.a) + v.dot(&a_dot)) - k.q * phi_dot) / k.chi)
}

/// The same integrand written with the kinetic velocity
/// `ṽ = v + (q/(mc)) A`: `(1/χ)(m ṽ²/2 − (q²/(2mc²)) A² − q φ)`.
pub fn phase_rate_kinetic(pot: &impl Potentials, t: f64, r: &Vec3, v: &Vec3, k: &PhysicalConstants) -> f64 {
    let s = pot.sample(t, r);
    let vt = v + s.a * (k.q / (k.m * k.c));
    (0.5 * k.m * vt.norm_squared() - k.q * k.q / (2.0 * k.m * k.c * k.c) * s.a.norm_squared() - k.q * s.phi)
        / k.chi
}

/// Interpolated state on a trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryState {
    pub r: Vec3,
    pub v: Vec3,
    pub acc: Vec3,
    pub s_p: f64,
    pub s_p_dot: f64,
}

/// RK4 trajectory on a uniform grid.
///
/// Between nodes, `r` is the quintic Hermite interpolant of the nodal
/// position, velocity and acceleration; `v` and `acc` are its first and
/// second derivatives, so `v = dr/dt` holds exactly on the whole interval.
/// The interpolants are written in terms of the RK4 increments of each
/// step rather than differences of nodal values, which keeps the rounding
/// error of `acc` at `ε|v|/h` instead of `ε|r|/h²`.
/// The phase `s_p` is quintic Hermite in its nodal values, rates and
/// second derivatives when the potentials provide `∂_t φ`, and cubic
/// Hermite otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    t0: f64,
    h: f64,
    r: Vec<Vec3>,
    /// `r[k+1] − r[k]` as the RK4 increment, before rounding into `r[k+1]`.
    dr: Vec<Vec3>,
    v: Vec<Vec3>,
    acc: Vec<Vec3>,
    s_p: Vec<f64>,
    ds: Vec<f64>,
    s_p_dot: Vec<f64>,
    s_p_ddot: Option<Vec<f64>>,
}

impl Trajectory {
    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn t1(&self) -> f64 {
        self.t0 + self.h * (self.r.len() - 1) as f64
    }

    pub fn step(&self) -> f64 {
        self.h
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + self.h * k as f64
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|k| self.time(k)).collect()
    }

    pub fn positions(&self) -> &[Vec3] {
        &self.r
    }

    pub fn velocities(&self) -> &[Vec3] {
        &self.v
    }

    pub fn accelerations(&self) -> &[Vec3] {
        &self.acc
    }

    pub fn phases(&self) -> &[f64] {
        &self.s_p
    }

    pub fn phase_rates(&self) -> &[f64] {
        &self.s_p_dot
    }

    /// `sup |v|` over the stored nodes.
    pub fn sup_speed(&self) -> f64 {
        self.v.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// `sup |r''|` over the stored nodes.
    pub fn sup_acceleration(&self) -> f64 {
        self.acc.iter().map(|a| a.norm()).fold(0.0, f64::max)
    }

    /// Dense output at `t`.
    pub fn state(&self, t: f64) -> Result<TrajectoryState> {
        let (t0, t1) = (self.t0, self.t1());
        let slack = 1e-12 * (t1 - t0).abs().max(1.0);
        if !(t >= t0 - slack && t <= t1 + slack) {
            return Err(Error::OutOfRange { t, t0, t1 });
        }
        let n = self.len();
        if n == 1 {
            return Ok(TrajectoryState {
                r: self.r[0],
                v: self.v[0],
                acc: self.acc[0],
                s_p: self.s_p[0],
                s_p_dot: self.s_p_dot[0],
            });
        }
        let x = (t - t0) / self.h;
        let k = (x.floor().max(0.0) as usize).min(n - 2);
        let s = x - k as f64;
        let h = self.h;

        let (s2, s3, s4, s5) = (s * s, s * s * s, s.powi(4), s.powi(5));
        let b = [
            1.0 - 10.0 * s3 + 15.0 * s4 - 6.0 * s5,
            s - 6.0 * s3 + 8.0 * s4 - 3.0 * s5,
            0.5 * s2 - 1.5 * s3 + 1.5 * s4 - 0.5 * s5,
            0.5 * s3 - s4 + 0.5 * s5,
            -4.0 * s3 + 7.0 * s4 - 3.0 * s5,
            10.0 * s3 - 15.0 * s4 + 6.0 * s5,
        ];
        let db = [
            -30.0 * s2 + 60.0 * s3 - 30.0 * s4,
            1.0 - 18.0 * s2 + 32.0 * s3 - 15.0 * s4,
            s - 4.5 * s2 + 6.0 * s3 - 2.5 * s4,
            1.5 * s2 - 4.0 * s3 + 2.5 * s4,
            -12.0 * s2 + 28.0 * s3 - 15.0 * s4,
            30.0 * s2 - 60.0 * s3 + 30.0 * s4,
        ];
        let ddb = [
            -60.0 * s + 180.0 * s2 - 120.0 * s3,
            -36.0 * s + 96.0 * s2 - 60.0 * s3,
            1.0 - 9.0 * s + 18.0 * s2 - 10.0 * s3,
            3.0 * s - 12.0 * s2 + 10.0 * s3,
            -24.0 * s + 84.0 * s2 - 60.0 * s3,
            60.0 * s - 180.0 * s2 + 120.0 * s3,
        ];
        // The weights of the two nodal values sum to one, so the pair
        // enters only through the increment with the weight of the end node.
        let data = [
            Vec3::zeros(),
            self.v[k] * h,
            self.acc[k] * (h * h),
            self.acc[k + 1] * (h * h),
            self.v[k + 1] * h,
            self.dr[k],
        ];
        let combine = |w: &[f64; 6]| data.iter().zip(w).fold(Vec3::zeros(), |acc, (d, c)| acc + d * *c);
        let r = self.r[k] + combine(&b);
        let v = combine(&db) / h;
        let acc = combine(&ddb) / (h * h);

        let (p0, dp) = (self.s_p[k], self.ds[k]);
        let (m0, m1) = (self.s_p_dot[k] * h, self.s_p_dot[k + 1] * h);
        if let Some(dd) = &self.s_p_ddot {
            let d = [0.0, m0, dd[k] * h * h, dd[k + 1] * h * h, m1, dp];
            let dot = |w: &[f64; 6]| d.iter().zip(w).map(|(x, c)| x * c).sum::<f64>();
            return Ok(TrajectoryState { r, v, acc, s_p: p0 + dot(&b), s_p_dot: dot(&db) / h });
        }
        let s_p = p0 + (s3 - 2.0 * s2 + s) * m0 + (-2.0 * s3 + 3.0 * s2) * dp + (s3 - s2) * m1;
        let s_p_dot = ((3.0 * s2 - 4.0 * s + 1.0) * m0 + (-6.0 * s2 + 6.0 * s) * dp + (3.0 * s2 - 2.0 * s) * m1) / h;
        Ok(TrajectoryState { r, v, acc, s_p, s_p_dot })
    }
}

#[derive(Clone, Copy)]
struct State {
    r: Vec3,
    v: Vec3,
    s: f64,
}

impl State {
    fn axpy(&self, h: f64, d: &State) -> State {
        State { r: self.r + d.r * h, v: self.v + d.v * h, s: self.s + d.s * h }
    }

    fn finite(&self) -> bool {
        self.r.iter().chain(self.v.iter()).all(|x| x.is_finite()) && self.s.is_finite()
    }
}

/// Integrates `m r'' = qE + (q/c) v x B` together with
/// `s_p' = (1/χ)(m v²/2 + (q/c) v·A − q φ)` by classical RK4. The step is
/// adjusted down so that a whole number of steps spans `[t0, t1]`.
pub fn integrate_newton(
    pot: &impl Potentials,
    r0: &Vec3,
    v0: &Vec3,
    t0: f64,
    t1: f64,
    step: f64,
    k: &PhysicalConstants,
) -> Result<Trajectory> {
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::Invalid(format!("step must be positive, got {step}")));
    }
    if !(t1 > t0) || !t0.is_finite() || !t1.is_finite() {
        return Err(Error::Invalid(format!("need t0 < t1, got [{t0}, {t1}]")));
    }
    let n_steps = ((t1 - t0) / step * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    let h = (t1 - t0) / n_steps as f64;

    let deriv = |t: f64, y: &State| -> State {
        State { r: y.v, v: lorentz_force(pot, t, &y.r, &y.v, k) / k.m, s: phase_rate(pot, t, &y.r, &y.v, k) }
    };

    let mut y = State { r: *r0, v: *v0, s: 0.0 };
    if !y.finite() {
        return Err(Error::IntegrationAborted { last_valid_t: t0, reason: "non-finite initial state".into() });
    }
    let mut traj = Trajectory {
        t0,
        h,
        r: Vec::with_capacity(n_steps + 1),
        dr: Vec::with_capacity(n_steps),
        v: Vec::with_capacity(n_steps + 1),
        acc: Vec::with_capacity(n_steps + 1),
        s_p: Vec::with_capacity(n_steps + 1),
        ds: Vec::with_capacity(n_steps),
        s_p_dot: Vec::with_capacity(n_steps + 1),
        s_p_ddot: pot.dt_phi(t0, r0).map(|_| Vec::with_capacity(n_steps + 1)),
    };
    let mut d = deriv(t0, &y);
    for i in 0..=n_steps {
        let t = t0 + h * i as f64;
        traj.r.push(y.r);
        traj.v.push(y.v);
        traj.acc.push(d.v);
        traj.s_p.push(y.s);
        traj.s_p_dot.push(d.s);
        if let Some(dd) = traj.s_p_ddot.as_mut() {
            dd.push(phase_rate_derivative(pot, t, &y.r, &y.v, &d.v, k).unwrap_or(f64::NAN));
        }
        if i == n_steps {
            break;
        }
        let k1 = d;
        let k2 = deriv(t + 0.5 * h, &y.axpy(0.5 * h, &k1));
        let k3 = deriv(t + 0.5 * h, &y.axpy(0.5 * h, &k2));
        let k4 = deriv(t + h, &y.axpy(h, &k3));
        let dr = (k1.r + k2.r * 2.0 + k3.r * 2.0 + k4.r) * (h / 6.0);
        let ds = (k1.s + 2.0 * k2.s + 2.0 * k3.s + k4.s) * (h / 6.0);
        let next = State { r: y.r + dr, v: y.v + (k1.v + k2.v * 2.0 + k3.v * 2.0 + k4.v) * (h / 6.0), s: y.s + ds };
        let t_next = t0 + h * (i + 1) as f64;
        let d_next = deriv(t_next, &next);
        if !next.finite() || !d_next.finite() {
            return Err(Error::IntegrationAborted { last_valid_t: t, reason: "non-finite state".into() });
        }
        traj.dr.push(dr);
        traj.ds.push(ds);
        y = next;
        d = d_next;
    }
    Ok(traj)
}
