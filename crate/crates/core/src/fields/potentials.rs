use serde::{Deserialize, Serialize};

use super::poly::{eval_matrix, Mat3, PolyScalarField, PolyVectorField, ScalarDoc, Vec3, VectorDoc};
use crate::error::{Error, Result};

/// Potentials and their first derivatives at one space-time point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialSample {
    pub phi: f64,
    pub a: Vec3,
    pub grad_phi: Vec3,
    /// `jac_a[(i, j)] = d_j A_i`.
    pub jac_a: Mat3,
    /// `d_t A` at fixed `x`.
    pub dt_a: Vec3,
}

impl PotentialSample {
    pub fn zero() -> Self {
        Self { phi: 0.0, a: Vec3::zeros(), grad_phi: Vec3::zeros(), jac_a: Mat3::zeros(), dt_a: Vec3::zeros() }
    }

    pub fn div_a(&self) -> f64 {
        self.jac_a.trace()
    }

    pub fn curl_a(&self) -> Vec3 {
        let j = &self.jac_a;
        Vec3::new(j[(2, 1)] - j[(1, 2)], j[(0, 2)] - j[(2, 0)], j[(1, 0)] - j[(0, 1)])
    }

    /// `E = -grad phi - (1/c) d_t A`, `B = curl A`.
    pub fn fields(&self, c: f64) -> EMFieldSample {
        EMFieldSample { e: -self.grad_phi - self.dt_a / c, b: self.curl_a() }
    }
}

/// Electric and magnetic field at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EMFieldSample {
    pub e: Vec3,
    pub b: Vec3,
}

/// Anything that yields electromagnetic potentials with first derivatives.
pub trait Potentials: Sync {
    fn sample(&self, t: f64, x: &Vec3) -> PotentialSample;

    /// `∂_t φ` at fixed `x`, when available.
    fn dt_phi(&self, _t: f64, _x: &Vec3) -> Option<f64> {
        None
    }
}

/// Potentials `phi`, `A` as polynomial fields, with their derivative
/// polynomials precomputed.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticPotentials {
    phi: PolyScalarField,
    a: PolyVectorField,
    grad_phi: PolyVectorField,
    jac_a: [[PolyScalarField; 3]; 3],
    dt_a: PolyVectorField,
    dt_phi: PolyScalarField,
}

impl AnalyticPotentials {
    pub fn new(phi: PolyScalarField, a: PolyVectorField) -> Self {
        let grad_phi = phi.gradient();
        let jac_a = a.jacobian();
        let dt_a = a.dt();
        let dt_phi = phi.dt();
        Self { phi, a, grad_phi, jac_a, dt_a, dt_phi }
    }

    pub fn zero() -> Self {
        Self::new(PolyScalarField::zero(Vec3::zeros()), PolyVectorField::zero(Vec3::zeros()))
    }

    /// Uniform fields: `phi = -E . x`, `A = (1/2) B x x` (symmetric gauge).
    pub fn uniform(e: &Vec3, b: &Vec3) -> Self {
        let o = Vec3::zeros();
        let phi = PolyScalarField::linear(&(-e), o);
        let half_b = b * 0.5;
        // (B x y)_i = eps_ijk B_j y_k
        let m = Mat3::new(0.0, -half_b[2], half_b[1], half_b[2], 0.0, -half_b[0], -half_b[1], half_b[0], 0.0);
        Self::new(phi, PolyVectorField::linear(&m, o))
    }

    pub fn phi(&self) -> &PolyScalarField {
        &self.phi
    }

    pub fn a(&self) -> &PolyVectorField {
        &self.a
    }

    pub fn dt_a_field(&self) -> &PolyVectorField {
        &self.dt_a
    }

    pub fn to_doc(&self) -> PotentialsDoc {
        PotentialsDoc { phi: self.phi.to_doc(), a: self.a.to_doc() }
    }

    pub fn from_doc(doc: &PotentialsDoc) -> Result<Self> {
        Ok(Self::new(PolyScalarField::from_doc(&doc.phi)?, PolyVectorField::from_doc(&doc.a)?))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_doc()).expect("plain data serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Self::from_doc(&serde_json::from_str(s)?)
    }
}

impl Potentials for AnalyticPotentials {
    fn sample(&self, t: f64, x: &Vec3) -> PotentialSample {
        let yp = x - self.phi.origin();
        let ya = x - self.a.origin();
        PotentialSample {
            phi: self.phi.eval_offset(t, &yp),
            a: self.a.eval_offset(t, &ya),
            grad_phi: self.grad_phi.eval_offset(t, &yp),
            jac_a: eval_matrix(&self.jac_a, t, &ya),
            dt_a: self.dt_a.eval_offset(t, &ya),
        }
    }

    fn dt_phi(&self, t: f64, x: &Vec3) -> Option<f64> {
        Some(self.dt_phi.eval_offset(t, &(x - self.phi.origin())))
    }
}

/// Serialized potentials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialsDoc {
    pub phi: ScalarDoc,
    pub a: VectorDoc,
}

/// `E` and `B` of the given potentials at `(t, x)`.
pub fn em_fields(pot: &impl Potentials, t: f64, x: &Vec3, c: f64) -> EMFieldSample {
    pot.sample(t, x).fields(c)
}

/// First-order Taylor truncation of the potentials about `r_hat`, with the
/// full time dependence of the retained coefficients kept, so that the
/// result reproduces `E(t, r_hat)` and `B(t, r_hat)` at every `t`.
pub fn linearize_potentials(pot: &AnalyticPotentials, r_hat: &Vec3) -> Result<AnalyticPotentials> {
    if !r_hat.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite("linearization point".into()));
    }
    Ok(AnalyticPotentials::new(
        pot.phi.recentered(*r_hat).truncated(1),
        pot.a.recentered(*r_hat).truncated(1),
    ))
}
