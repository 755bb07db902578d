#![allow(dead_code)]

use corpuscle_core::corpuscle::{corpuscle_in, WaveCorpuscle};
use corpuscle_core::fields::{AnalyticPotentials, PolyScalarField, PolyVectorField, TimePoly};
use corpuscle_core::formfactor::gaussian_profile;
use corpuscle_core::{Mat3, PhysicalConstants, Vec3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const E0: [f64; 3] = [0.1, 0.0, 0.0];
pub const B0: [f64; 3] = [0.0, 0.0, 1.0];

/// Uniform `B = (0, 0, 1)` and uniform `E = (0.1, 0, 0)`.
pub fn crossed_fields() -> AnalyticPotentials {
    AnalyticPotentials::uniform(&Vec3::from(E0), &Vec3::from(B0))
}

/// Time-dependent quadratic potentials with nonzero curl and gradient parts.
pub fn generic_potentials() -> AnalyticPotentials {
    let o = Vec3::zeros();
    let mut phi = PolyScalarField::linear(&Vec3::new(-0.1, 0.05, 0.0), o);
    phi.add_term([2, 0, 0], TimePoly::new(vec![0.05, 0.02]));
    phi.add_term([0, 1, 1], TimePoly::new(vec![-0.03]));
    let m = Mat3::new(0.0, -0.5, 0.1, 0.5, 0.0, 0.0, 0.2, 0.0, 0.1);
    let mut ax = PolyScalarField::zero(o);
    ax.add_term([0, 2, 0], TimePoly::new(vec![0.02, 0.01]));
    let a = PolyVectorField::linear(&m, o)
        .add(&PolyVectorField::new([ax, PolyScalarField::zero(o), PolyScalarField::zero(o)]).unwrap());
    AnalyticPotentials::new(phi, a)
}

/// Homogeneous cubic gauge term `y1 y2²`, optionally time dependent.
pub fn cubic(time_dependent: bool) -> PolyScalarField {
    let coeff = if time_dependent { TimePoly::new(vec![0.3, 0.2]) } else { TimePoly::constant(0.3) };
    PolyScalarField::monomial([1, 2, 0], coeff, Vec3::zeros())
}

pub fn corpuscle(pot: &AnalyticPotentials, a: f64, p3: &PolyScalarField) -> WaveCorpuscle {
    corpuscle_in(
        pot,
        gaussian_profile(),
        a,
        &Vec3::new(0.2, -0.1, 0.3),
        &Vec3::new(0.0, 1.0, 0.2),
        (0.0, 2.0),
        2e-4,
        p3,
        PhysicalConstants::unit(),
    )
    .unwrap()
}

/// Seeded points `(t, x)` with `|x - r(t)| <= radius` and `t` inside
/// `[t_lo, t_hi]`.
pub fn sample_points(wc: &WaveCorpuscle, n: usize, radius: f64, t_lo: f64, t_hi: f64, seed: u64) -> Vec<(f64, Vec3)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let t = rng.random_range(t_lo..t_hi);
            let y = loop {
                let y = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                if y.norm() <= 1.0 {
                    break y * radius;
                }
            };
            (t, wc.center(t).unwrap() + y)
        })
        .collect()
}
