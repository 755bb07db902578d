//! Quadrature rules: Gauss–Legendre, adaptive Gauss–Legendre, a product
//! rule on the unit sphere, a radial-panel ball rule and cumulative
//! Simpson integration on uniform grids.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::fields::Vec3;

/// Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes are the roots of `P_n`, found by Newton iteration.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped to `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
        self.nodes.iter().zip(&self.weights).map(move |(x, w)| (mid + half * x, half * w))
    }

    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Adaptive bisection driven by comparing one Gauss–Legendre panel against
/// its two halves. Returns the integral and the accumulated error estimate.
pub fn adaptive_integrate(
    f: &mut dyn FnMut(f64) -> f64,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<(f64, f64)> {
    let rule = GaussLegendre::new(12);
    let whole = rule.integrate(a, b, &mut *f);
    let mut total = 0.0;
    let mut err = 0.0;
    let mut stack = vec![(a, b, whole, 0u32)];
    while let Some((lo, hi, est, depth)) = stack.pop() {
        let mid = 0.5 * (lo + hi);
        let left = rule.integrate(lo, mid, &mut *f);
        let right = rule.integrate(mid, hi, &mut *f);
        let refined = left + right;
        let diff = (refined - est).abs();
        if !refined.is_finite() {
            return Err(Error::NonFinite(format!("integrand on [{lo}, {hi}]")));
        }
        let share = (hi - lo) / (b - a);
        if diff <= (abs_tol * share).max(rel_tol * refined.abs()) || depth >= 40 {
            total += refined;
            err += diff;
        } else {
            stack.push((mid, hi, right, depth + 1));
            stack.push((lo, mid, left, depth + 1));
        }
    }
    Ok((total, err))
}

/// Product rule on the unit sphere: Gauss–Legendre in `cos(theta)` times a
/// uniform azimuthal rule.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereRule {
    pub directions: Vec<Vec3>,
    pub weights: Vec<f64>,
    pub n_polar: usize,
    pub n_azimuth: usize,
}

impl SphereRule {
    pub fn new(n_polar: usize, n_azimuth: usize) -> Self {
        let gl = GaussLegendre::new(n_polar);
        let mut directions = Vec::with_capacity(n_polar * n_azimuth);
        let mut weights = Vec::with_capacity(n_polar * n_azimuth);
        let dphi = 2.0 * PI / n_azimuth as f64;
        for (z, w) in gl.nodes.iter().zip(&gl.weights) {
            let s = (1.0 - z * z).sqrt();
            for k in 0..n_azimuth {
                let phi = (k as f64 + 0.5) * dphi;
                directions.push(Vec3::new(s * phi.cos(), s * phi.sin(), *z));
                weights.push(w * dphi);
            }
        }
        Self { directions, weights, n_polar, n_azimuth }
    }

    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }

    /// Highest total degree integrated exactly.
    pub fn exact_degree(&self) -> usize {
        (2 * self.n_polar - 1).min(self.n_azimuth - 1)
    }

    /// Checks monomials `x^i y^j z^k` up to `degree` against their exact
    /// sphere averages; returns the worst absolute error.
    pub fn validate(&self, degree: usize) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..=degree {
            for j in 0..=(degree - i) {
                for k in 0..=(degree - i - j) {
                    let q: f64 = self
                        .directions
                        .iter()
                        .zip(&self.weights)
                        .map(|(d, w)| w * d[0].powi(i as i32) * d[1].powi(j as i32) * d[2].powi(k as i32))
                        .sum();
                    worst = worst.max((q - sphere_monomial(i, j, k)).abs());
                }
            }
        }
        worst
    }
}

/// Exact `int_{S^2} x^i y^j z^k dσ`.
pub fn sphere_monomial(i: usize, j: usize, k: usize) -> f64 {
    if i % 2 == 1 || j % 2 == 1 || k % 2 == 1 {
        return 0.0;
    }
    // 2 Γ(b1)Γ(b2)Γ(b3)/Γ(b1+b2+b3) with b = (e+1)/2, via half-integer products.
    let half_gamma = |e: usize| -> f64 {
        // Γ((e+1)/2) / Γ(1/2) for even e.
        (1..=e / 2).map(|m| m as f64 - 0.5).product()
    };
    let s = i + j + k;
    let num = half_gamma(i) * half_gamma(j) * half_gamma(k);
    // Γ((s+3)/2) / Γ(1/2) for even s: (s+1)/2 factor chain.
    let den: f64 = (1..=(s / 2 + 1)).map(|m| m as f64 - 0.5).product();
    2.0 * PI * num / den
}

/// Radial nodes `(r, w)` with `w` including the `r^2` Jacobian, on panels
/// that start at `scale / 4` and double in length up to `radius`.
pub fn radial_panels(radius: f64, scale: f64, nodes_per_panel: usize) -> Vec<(f64, f64)> {
    let gl = GaussLegendre::new(nodes_per_panel);
    let mut edges = vec![0.0];
    let mut width = (scale / 4.0).min(radius);
    let mut r = 0.0;
    while r < radius {
        let next = (r + width).min(radius);
        // Avoid a sliver panel at the end.
        let next = if radius - next < 0.25 * width { radius } else { next };
        edges.push(next);
        r = next;
        if r > 0.0 {
            width = r;
        }
    }
    let mut out = Vec::with_capacity((edges.len() - 1) * nodes_per_panel);
    for pair in edges.windows(2) {
        out.extend(gl.mapped(pair[0], pair[1]).map(|(x, w)| (x, w * x * x)));
    }
    out
}

/// Ball rule as a product of a radial panel rule and a sphere rule.
#[derive(Debug, Clone, PartialEq)]
pub struct BallRule {
    pub radial: Vec<(f64, f64)>,
    pub sphere: SphereRule,
}

impl BallRule {
    pub fn new(radius: f64, scale: f64, nodes_per_panel: usize, sphere: SphereRule) -> Self {
        Self { radial: radial_panels(radius, scale, nodes_per_panel), sphere }
    }

    /// Offsets from the centre and weights.
    pub fn points(&self) -> impl Iterator<Item = (Vec3, f64)> + '_ {
        self.radial.iter().flat_map(move |&(r, wr)| {
            self.sphere.directions.iter().zip(&self.sphere.weights).map(move |(d, ws)| (d * r, wr * ws))
        })
    }
}

/// Cumulative integrals `int_{x_0}^{x_k} f` on a uniform grid of spacing `h`.
/// Even indices use composite Simpson; odd ones close the last interval with
/// the three-point rule `h(-f0 + 8 f1 + 5 f2)/12`.
pub fn cumulative_simpson<T>(values: &[T], h: f64) -> Vec<T>
where
    T: Copy + std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T> + std::ops::Sub<Output = T>,
{
    let n = values.len();
    let mut out: Vec<T> = Vec::with_capacity(n);
    if n == 0 {
        return out;
    }
    let zero = values[0] * 0.0;
    out.push(zero);
    if n == 1 {
        return out;
    }
    if n == 2 {
        out.push((values[0] + values[1]) * (0.5 * h));
        return out;
    }
    for k in 1..n {
        let v = if k % 2 == 0 {
            out[k - 2] + (values[k - 2] + values[k - 1] * 4.0 + values[k]) * (h / 3.0)
        } else if k == 1 {
            (values[0] * 5.0 + values[1] * 8.0 - values[2]) * (h / 12.0)
        } else {
            out[k - 1] + (values[k - 1] * 8.0 + values[k] * 5.0 - values[k - 2]) * (h / 12.0)
        };
        out.push(v);
    }
    out
}
