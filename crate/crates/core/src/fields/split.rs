//! Splitting of a vector field into a gradient part and a part tangent to
//! the spheres centred at the origin.

use super::poly::{PolyScalarField, PolyVectorField, Vec3, SPATIAL_DEGREE_CAP};
use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;

/// Default radial node count of [`split_field_at_point`].
pub const DEFAULT_SPLIT_NODES: usize = 32;

/// Splits `V = grad(Pi) + V_tan` with `y . V_tan(y) = 0`, degree by degree:
/// `Pi_{j+1} = y . V_j / (j + 1)` and `V_tan_j = V_j - grad(Pi_{j+1})`.
pub fn split_polynomial_field(v: &PolyVectorField) -> Result<(PolyScalarField, PolyVectorField)> {
    let deg = v.spatial_degree();
    if deg > SPATIAL_DEGREE_CAP {
        return Err(Error::DegreeCap { what: "field to split".into(), found: deg, cap: SPATIAL_DEGREE_CAP });
    }
    let o = v.origin();
    let mut pi = PolyScalarField::zero(o);
    let mut tangent = PolyVectorField::zero(o);
    for j in 0..=deg {
        let vj = v.homogeneous(j);
        if vj.is_zero() {
            continue;
        }
        let pj = vj.dot_position().scale(1.0 / (j as f64 + 1.0));
        tangent = tangent.add(&vj.sub(&pj.gradient()));
        pi = pi.add(&pj);
    }
    Ok((pi, tangent))
}

/// The sphere-tangent part through the curl form
/// `V_tan_j = -(1/(j+1)) y x (curl V_j)`.
pub fn tangent_part_via_curl(v: &PolyVectorField) -> Result<PolyVectorField> {
    let deg = v.spatial_degree();
    if deg > SPATIAL_DEGREE_CAP {
        return Err(Error::DegreeCap { what: "field to split".into(), found: deg, cap: SPATIAL_DEGREE_CAP });
    }
    let mut out = PolyVectorField::zero(v.origin());
    for j in 0..=deg {
        let vj = v.homogeneous(j);
        out = out.add(&vj.curl().cross_position().scale(-1.0 / (j as f64 + 1.0)));
    }
    Ok(out)
}

/// Pointwise splitting of a general field. `Pi(y)` is the ray integral
/// `int_0^|y| Ω . V(Ω s) ds` by Gauss–Legendre; the radial component of
/// `grad Pi` equals `Ω . V(y)` exactly, and the two tangential components
/// come from fourth-order central differences of `Pi` along perturbed rays.
pub fn split_field_at_point(
    v: &dyn Fn(&Vec3) -> Vec3,
    y: &Vec3,
    quad_nodes: usize,
) -> Result<(f64, Vec3)> {
    let norm = y.norm();
    if !norm.is_finite() {
        return Err(Error::NonFinite("evaluation point".into()));
    }
    if norm == 0.0 {
        return Ok((0.0, Vec3::zeros()));
    }
    let gl = GaussLegendre::new(quad_nodes.max(1));
    let ray = |p: &Vec3| -> Result<f64> {
        let val = gl.integrate(0.0, 1.0, |s| p.dot(&v(&(p * s))));
        if val.is_finite() {
            Ok(val)
        } else {
            Err(Error::NonFinite(format!("field along the ray to {p:?}")))
        }
    };
    let pi = ray(y)?;
    let vy = v(y);
    if !vy.iter().all(|c| c.is_finite()) {
        return Err(Error::NonFinite(format!("field value at {y:?}")));
    }
    let u = y / norm;
    let (e1, e2) = orthonormal_complement(&u);
    let h = 1e-3 * norm.max(1e-3);
    let mut grad = u * u.dot(&vy);
    for e in [e1, e2] {
        let f = |k: f64| ray(&(y + e * (k * h)));
        let d = (f(-2.0)? - 8.0 * f(-1.0)? + 8.0 * f(1.0)? - f(2.0)?) / (12.0 * h);
        grad += e * d;
    }
    Ok((pi, vy - grad))
}

fn orthonormal_complement(u: &Vec3) -> (Vec3, Vec3) {
    let pick = if u[0].abs() < 0.9 { Vec3::x() } else { Vec3::y() };
    let e1 = (pick - u * u.dot(&pick)).normalize();
    let e2 = u.cross(&e1);
    (e1, e2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::poly::{Mat3, TimePoly};

    fn o() -> Vec3 {
        Vec3::zeros()
    }

    fn mono(deg: [u32; 3], c: f64) -> PolyScalarField {
        PolyScalarField::monomial(deg, TimePoly::constant(c), o())
    }

    #[test]
    fn constant_field_is_pure_gradient() {
        let c = Vec3::new(1.0, -2.0, 0.5);
        let (pi, tan) = split_polynomial_field(&PolyVectorField::constant(&c, o())).unwrap();
        assert!(tan.is_zero());
        assert_eq!(pi, PolyScalarField::linear(&c, o()));
    }

    #[test]
    fn linear_field_symmetric_and_antisymmetric_parts() {
        let m = Mat3::new(1.0, 2.0, -3.0, 0.5, -1.0, 4.0, 2.0, 0.25, 3.0);
        let (pi, tan) = split_polynomial_field(&PolyVectorField::linear(&m, o())).unwrap();
        let y = Vec3::new(0.3, -0.7, 1.1);
        let sym = 0.5 * (m + m.transpose());
        let anti = 0.5 * (m - m.transpose());
        assert!((pi.gradient().eval_offset(0.0, &y) - sym * y).norm() < 1e-14);
        assert!((tan.eval_offset(0.0, &y) - anti * y).norm() < 1e-14);
        assert!(tan.divergence().is_zero());
    }

    #[test]
    fn quadratic_example() {
        let v = PolyVectorField::new([mono([0, 2, 0], 1.0), PolyScalarField::zero(o()), PolyScalarField::zero(o())])
            .unwrap();
        let (pi, tan) = split_polynomial_field(&v).unwrap();
        assert!((pi.coeff([1, 2, 0]).eval(0.0) - 1.0 / 3.0).abs() < 1e-16);
        assert_eq!(pi.terms().count(), 1);
        assert!((tan.component(0).coeff([0, 2, 0]).eval(0.0) - 2.0 / 3.0).abs() < 1e-15);
        assert!((tan.component(1).coeff([1, 1, 0]).eval(0.0) + 2.0 / 3.0).abs() < 1e-15);
        assert!(tan.component(2).is_zero());
        assert!(tan.dot_position().terms().all(|(_, c)| c.eval(0.0).abs() < 1e-15));
    }

    #[test]
    fn degree_cap_is_enforced() {
        let v = PolyVectorField::new([mono([4, 0, 0], 1.0), PolyScalarField::zero(o()), PolyScalarField::zero(o())])
            .unwrap();
        assert!(matches!(split_polynomial_field(&v), Err(Error::DegreeCap { .. })));
    }

    #[test]
    fn numeric_gradient_and_rotation() {
        // grad(y1^2 y2)
        let g = |y: &Vec3| Vec3::new(2.0 * y[0] * y[1], y[0] * y[0], 0.0);
        let (_, tan) = split_field_at_point(&g, &Vec3::new(0.4, -0.9, 0.3), 32).unwrap();
        assert!(tan.norm() < 1e-10);

        let rot = |y: &Vec3| Vec3::new(-y[1], y[0], 0.0);
        let y = Vec3::new(0.5, 0.2, -0.4);
        let (pi, tan) = split_field_at_point(&rot, &y, 32).unwrap();
        assert!(pi.abs() < 1e-15);
        assert!((tan - rot(&y)).norm() < 1e-10);

        let sq = |y: &Vec3| Vec3::new(y[1] * y[1], 0.0, 0.0);
        let (pi, _) = split_field_at_point(&sq, &Vec3::new(1.0, 1.0, 0.0), 32).unwrap();
        assert!((pi - 1.0 / 3.0).abs() < 1e-14);

        let (pi, tan) = split_field_at_point(&sq, &Vec3::zeros(), 32).unwrap();
        assert_eq!((pi, tan), (0.0, Vec3::zeros()));

        let bad = |_: &Vec3| Vec3::new(f64::NAN, 0.0, 0.0);
        assert!(split_field_at_point(&bad, &Vec3::new(1.0, 0.0, 0.0), 8).is_err());
    }
}
