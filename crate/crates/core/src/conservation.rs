//! Lagrangian density, energy–momentum tensor, Lorentz force density and
//! finite-difference residuals of the continuity and momentum laws.
//!
//! Index convention: index 0 is time with `∂₀ = c⁻¹∂_t`, spatial indices
//! are 1..3 and the metric signature is `(+,−,−,−)`. The time row of
//! [`EnMT::entries`] stores the densities themselves (`u` and `P`), so the
//! balance laws read `∂_t u + ∂_j T^{j0} = c f⁰` and
//! `∂_t P^j + ∂_i T^{ij} = f^j`.

use nalgebra::Matrix4;
use num_complex::Complex64;

use crate::constants::PhysicalConstants;
use crate::corpuscle::{covariant, densities_from_sample, FieldProvider, FieldSample};
use crate::error::Result;
use crate::fields::{PotentialSample, Potentials, Vec3};
use crate::formfactor::Nonlinearity;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Energy–momentum tensor at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnMT {
    /// `entries[(0,0)] = u`, `entries[(0,j)] = P^j`, `entries[(j,0)]` is the
    /// energy flux and `entries[(i,j)]` the momentum flux `T^{ij}`.
    pub entries: Matrix4<f64>,
    pub u: f64,
    pub p: Vec3,
}

impl EnMT {
    /// `T^{ij}` for spatial `i, j` in `0..3`.
    pub fn spatial(&self, i: usize, j: usize) -> f64 {
        self.entries[(i + 1, j + 1)]
    }

    /// Energy flux `T^{j0}`.
    pub fn energy_flux(&self) -> Vec3 {
        Vec3::new(self.entries[(1, 0)], self.entries[(2, 0)], self.entries[(3, 0)])
    }
}

/// Lorentz force density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForceDensity4 {
    /// `J·E / c`.
    pub f0: f64,
    /// `ρE + J×B / c`.
    pub f: Vec3,
}

/// `L = i(χ/2)[ψ*∂̃_tψ − ψ∂̃_t*ψ*] − (χ²/2m)[∇̃ψ·∇̃*ψ* + G(ψ*ψ)]`.
pub fn lagrangian_from_sample(s: &FieldSample, p: &PotentialSample, nl: &Nonlinearity, k: &PhysicalConstants) -> f64 {
    let c = covariant(s, p, k);
    let z = c.psi.conj() * c.dt;
    let kinetic = I * (0.5 * k.chi) * (z - z.conj());
    let grad_sq: f64 = c.grad.iter().map(|g| g.norm_sqr()).sum();
    kinetic.re - k.chi * k.chi / (2.0 * k.m) * (grad_sq + nl.g(s.psi.norm_sqr()))
}

pub fn lagrangian_density(
    s: &FieldSample,
    pot: &impl Potentials,
    nl: &Nonlinearity,
    t: f64,
    x: &Vec3,
    k: &PhysicalConstants,
) -> f64 {
    lagrangian_from_sample(s, &pot.sample(t, x), nl, k)
}

/// The energy–momentum tensor from one field sample.
pub fn enmt_from_sample(s: &FieldSample, p: &PotentialSample, nl: &Nonlinearity, k: &PhysicalConstants) -> EnMT {
    let c = covariant(s, p, k);
    let scale = k.chi * k.chi / (2.0 * k.m);
    let grad_sq: f64 = c.grad.iter().map(|g| g.norm_sqr()).sum();
    let u = scale * (grad_sq + nl.g(s.psi.norm_sqr()));
    let l = lagrangian_from_sample(s, p, nl, k);
    let mom = densities_from_sample(s, p, k).p;

    let mut e = Matrix4::zeros();
    e[(0, 0)] = u;
    for j in 0..3 {
        e[(0, j + 1)] = mom[j];
        e[(j + 1, 0)] = -2.0 * scale * (c.dt * c.grad[j].conj()).re;
    }
    for i in 0..3 {
        e[(i + 1, i + 1)] = 2.0 * scale * c.grad[i].norm_sqr() + l;
        for j in (i + 1)..3 {
            let tij = 2.0 * scale * (c.grad[i].conj() * c.grad[j]).re;
            e[(i + 1, j + 1)] = tij;
            e[(j + 1, i + 1)] = tij;
        }
    }
    EnMT { entries: e, u, p: mom }
}

pub fn enmt_at_point(
    s: &FieldSample,
    pot: &impl Potentials,
    nl: &Nonlinearity,
    t: f64,
    x: &Vec3,
    k: &PhysicalConstants,
) -> EnMT {
    enmt_from_sample(s, &pot.sample(t, x), nl, k)
}

/// `f = ρE + J×B/c`, `f⁰ = J·E/c`.
pub fn force_from_sample(s: &FieldSample, p: &PotentialSample, k: &PhysicalConstants) -> ForceDensity4 {
    let d = densities_from_sample(s, p, k);
    let em = p.fields(k.c);
    ForceDensity4 { f0: d.j.dot(&em.e) / k.c, f: em.e * d.rho + d.j.cross(&em.b) / k.c }
}

pub fn force_density(s: &FieldSample, pot: &impl Potentials, t: f64, x: &Vec3, k: &PhysicalConstants) -> ForceDensity4 {
    force_from_sample(s, &pot.sample(t, x), k)
}

/// The four terms `∂L/∂ψ_{;μ} ψ_{;μ}`, `−∂L/∂ψ*_{;μ} ψ*_{;μ}`, `∂L/∂ψ ψ` and
/// `−∂L/∂ψ* ψ*` of the phase-invariance identity, summed over `μ`; they
/// cancel for any sample.
pub fn phase_invariance_terms(
    s: &FieldSample,
    p: &PotentialSample,
    nl: &Nonlinearity,
    k: &PhysicalConstants,
) -> [Complex64; 4] {
    let c = covariant(s, p, k);
    let scale = k.chi * k.chi / (2.0 * k.m);
    let (psi, psic) = (c.psi, c.psi.conj());
    let gp = if psi.norm_sqr() == 0.0 { 0.0 } else { nl.gprime(psi.norm_sqr()) };
    let dl_dgrad: Complex64 = c.grad.iter().map(|g| -scale * g.conj() * g).sum();
    let dl_dgrad_c: Complex64 = c.grad.iter().map(|g| -scale * g * g.conj()).sum();
    let t1 = I * (0.5 * k.chi) * psic * c.dt + dl_dgrad;
    let t2 = -(-I * (0.5 * k.chi) * psi * c.dt.conj() + dl_dgrad_c);
    let t3 = (-I * (0.5 * k.chi) * c.dt.conj() - scale * gp * psic) * psi;
    let t4 = -((I * (0.5 * k.chi) * c.dt - scale * gp * psi) * psic);
    [t1, t2, t3, t4]
}

/// Fourth-order central difference of `f` at `x` with step `h`.
fn d4<T>(f: impl Fn(f64) -> Result<T>, x: f64, h: f64) -> Result<T>
where
    T: std::ops::Sub<Output = T> + std::ops::Mul<f64, Output = T> + std::ops::Add<Output = T>,
{
    let (m2, m1, p1, p2) = (f(x - 2.0 * h)?, f(x - h)?, f(x + h)?, f(x + 2.0 * h)?);
    Ok((m2 - p2 + (p1 - m1) * 8.0) * (1.0 / (12.0 * h)))
}

fn shifted(x: &Vec3, axis: usize, d: f64) -> Vec3 {
    let mut y = *x;
    y[axis] += d;
    y
}

/// `∂_tρ + ∇·J` by fourth-order central differences of exactly evaluated
/// densities, with the same step `h` in time and space.
pub fn continuity_residual(
    field: &impl FieldProvider,
    pot: &impl Potentials,
    t: f64,
    x: &Vec3,
    h: f64,
    k: &PhysicalConstants,
) -> Result<f64> {
    let dens = |tt: f64, xx: &Vec3| -> Result<crate::corpuscle::Densities> {
        Ok(densities_from_sample(&field.sample(tt, xx)?, &pot.sample(tt, xx), k))
    };
    let dt_rho = d4(|tt| Ok(dens(tt, x)?.rho), t, h)?;
    let mut div = 0.0;
    for axis in 0..3 {
        div += d4(|d| Ok(dens(t, &shifted(x, axis, d - x[axis]))?.j[axis]), x[axis], h)?;
    }
    Ok(dt_rho + div)
}

/// `∂_tP^j + ∂_iT^{ij} − f^j` with fourth-order central differences.
pub fn momentum_residual(
    field: &impl FieldProvider,
    pot: &impl Potentials,
    nl: &Nonlinearity,
    t: f64,
    x: &Vec3,
    h: f64,
    k: &PhysicalConstants,
) -> Result<Vec3> {
    let tensor = |tt: f64, xx: &Vec3| -> Result<EnMT> { Ok(enmt_from_sample(&field.sample(tt, xx)?, &pot.sample(tt, xx), nl, k)) };
    let dt_p = d4(|tt| Ok(tensor(tt, x)?.p), t, h)?;
    let mut div = Vec3::zeros();
    for i in 0..3 {
        let row = d4(
            |d| {
                let e = tensor(t, &shifted(x, i, d - x[i]))?;
                Ok(Vec3::new(e.spatial(i, 0), e.spatial(i, 1), e.spatial(i, 2)))
            },
            x[i],
            h,
        )?;
        div += row;
    }
    let f = force_from_sample(&field.sample(t, x)?, &pot.sample(t, x), k);
    Ok(dt_p + div - f.f)
}

/// `∂_t u + ∂_jT^{j0} − J·E` with fourth-order central differences.
pub fn energy_residual(
    field: &impl FieldProvider,
    pot: &impl Potentials,
    nl: &Nonlinearity,
    t: f64,
    x: &Vec3,
    h: f64,
    k: &PhysicalConstants,
) -> Result<f64> {
    let tensor = |tt: f64, xx: &Vec3| -> Result<EnMT> { Ok(enmt_from_sample(&field.sample(tt, xx)?, &pot.sample(tt, xx), nl, k)) };
    let dt_u = d4(|tt| Ok(tensor(tt, x)?.u), t, h)?;
    let mut div = 0.0;
    for j in 0..3 {
        div += d4(|d| Ok(tensor(t, &shifted(x, j, d - x[j]))?.energy_flux()[j]), x[j], h)?;
    }
    let f = force_from_sample(&field.sample(t, x)?, &pot.sample(t, x), k);
    Ok(dt_u + div - k.c * f.f0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpuscle::ZeroField;
    use crate::fields::AnalyticPotentials;

    #[test]
    fn zero_field_lagrangian_vanishes() {
        let k = PhysicalConstants::unit();
        let pot = AnalyticPotentials::uniform(&Vec3::new(1.0, 0.0, 0.0), &Vec3::new(0.0, 0.0, 1.0));
        let s = ZeroField.sample(0.0, &Vec3::zeros()).unwrap();
        assert_eq!(lagrangian_density(&s, &pot, &Nonlinearity::logarithmic(), 0.0, &Vec3::zeros(), &k), 0.0);
    }
}
