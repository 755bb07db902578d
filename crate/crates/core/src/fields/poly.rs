//! Polynomial fields in the spatial offset `y = x - origin` whose
//! coefficients are polynomials in time.

use std::collections::BTreeMap;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

/// Spatial degree cap of serialized fields.
pub const SPATIAL_DEGREE_CAP: usize = 3;
/// Time degree cap of serialized fields.
pub const TIME_DEGREE_CAP: usize = 3;

/// Multi-degree `[i, j, k]` of the monomial `y1^i y2^j y3^k`.
pub type MultiDegree = [u32; 3];

fn total(d: &MultiDegree) -> usize {
    (d[0] + d[1] + d[2]) as usize
}

/// Polynomial in `t`, coefficients in increasing order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TimePoly(Vec<f64>);

impl TimePoly {
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        Self(coeffs)
    }

    pub fn constant(c: f64) -> Self {
        Self::new(vec![c])
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    /// Degree, with the zero polynomial reported as degree 0.
    pub fn degree(&self) -> usize {
        self.0.len().saturating_sub(1)
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, &c| acc * t + c)
    }

    pub fn derivative(&self) -> Self {
        Self::new(
            self.0
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| k as f64 * c)
                .collect(),
        )
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.0.len().max(other.0.len());
        let get = |v: &Vec<f64>, k: usize| v.get(k).copied().unwrap_or(0.0);
        Self::new((0..n).map(|k| get(&self.0, k) + get(&other.0, k)).collect())
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.0.iter().map(|c| c * s).collect())
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::default();
        }
        let mut out = vec![0.0; self.0.len() + other.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in other.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self::new(out)
    }
}

/// Scalar polynomial field `sum_alpha c_alpha(t) y^alpha` with `y = x - origin`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyScalarField {
    terms: BTreeMap<MultiDegree, TimePoly>,
    origin: Vec3,
}

impl PolyScalarField {
    pub fn zero(origin: Vec3) -> Self {
        Self { terms: BTreeMap::new(), origin }
    }

    pub fn constant(c: f64, origin: Vec3) -> Self {
        Self::monomial([0, 0, 0], TimePoly::constant(c), origin)
    }

    pub fn monomial(deg: MultiDegree, coeff: TimePoly, origin: Vec3) -> Self {
        let mut p = Self::zero(origin);
        p.add_term(deg, coeff);
        p
    }

    /// The coordinate function `y_k`.
    pub fn coordinate(k: usize, origin: Vec3) -> Self {
        let mut deg = [0; 3];
        deg[k] = 1;
        Self::monomial(deg, TimePoly::constant(1.0), origin)
    }

    /// Linear function `g . y` with time-independent `g`.
    pub fn linear(g: &Vec3, origin: Vec3) -> Self {
        let mut p = Self::zero(origin);
        for k in 0..3 {
            let mut deg = [0; 3];
            deg[k] = 1;
            p.add_term(deg, TimePoly::constant(g[k]));
        }
        p
    }

    /// Quadratic form `y . M y` with time-independent `M`.
    pub fn quadratic_form(m: &Mat3, origin: Vec3) -> Self {
        let mut p = Self::zero(origin);
        for i in 0..3 {
            for j in 0..3 {
                let mut deg = [0; 3];
                deg[i] += 1;
                deg[j] += 1;
                p.add_term(deg, TimePoly::constant(m[(i, j)]));
            }
        }
        p
    }

    /// Accumulates `coeff * y^deg` into the field.
    pub fn add_term(&mut self, deg: MultiDegree, coeff: TimePoly) {
        let sum = match self.terms.get(&deg) {
            Some(old) => old.add(&coeff),
            None => coeff,
        };
        if sum.is_zero() {
            self.terms.remove(&deg);
        } else {
            self.terms.insert(deg, sum);
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiDegree, &TimePoly)> {
        self.terms.iter()
    }

    pub fn coeff(&self, deg: MultiDegree) -> TimePoly {
        self.terms.get(&deg).cloned().unwrap_or_default()
    }

    pub fn origin(&self) -> Vec3 {
        self.origin
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn spatial_degree(&self) -> usize {
        self.terms.keys().map(total).max().unwrap_or(0)
    }

    pub fn time_degree(&self) -> usize {
        self.terms.values().map(TimePoly::degree).max().unwrap_or(0)
    }

    /// Same coefficients, reinterpreted about a new origin.
    pub fn with_origin(&self, origin: Vec3) -> Self {
        Self { terms: self.terms.clone(), origin }
    }

    /// Value at time `t` and absolute position `x`.
    pub fn eval(&self, t: f64, x: &Vec3) -> f64 {
        self.eval_offset(t, &(x - self.origin))
    }

    /// Value at time `t` and offset `y` from the origin.
    pub fn eval_offset(&self, t: f64, y: &Vec3) -> f64 {
        let deg = self.spatial_degree();
        let mut pw = [[1.0f64; 8]; 3];
        if deg >= pw[0].len() {
            return self
                .terms
                .iter()
                .map(|(d, c)| c.eval(t) * y[0].powi(d[0] as i32) * y[1].powi(d[1] as i32) * y[2].powi(d[2] as i32))
                .sum();
        }
        for k in 0..3 {
            for e in 1..=deg {
                pw[k][e] = pw[k][e - 1] * y[k];
            }
        }
        self.terms
            .iter()
            .map(|(d, c)| c.eval(t) * pw[0][d[0] as usize] * pw[1][d[1] as usize] * pw[2][d[2] as usize])
            .sum()
    }

    pub fn partial(&self, k: usize) -> Self {
        let mut out = Self::zero(self.origin);
        for (d, c) in &self.terms {
            if d[k] > 0 {
                let mut nd = *d;
                nd[k] -= 1;
                out.add_term(nd, c.scale(d[k] as f64));
            }
        }
        out
    }

    pub fn gradient(&self) -> PolyVectorField {
        PolyVectorField::new([self.partial(0), self.partial(1), self.partial(2)])
            .expect("components share the origin")
    }

    pub fn hessian(&self) -> [[PolyScalarField; 3]; 3] {
        let g = [self.partial(0), self.partial(1), self.partial(2)];
        std::array::from_fn(|i| std::array::from_fn(|j| g[i].partial(j)))
    }

    pub fn laplacian(&self) -> Self {
        let mut out = Self::zero(self.origin);
        for k in 0..3 {
            out = out.add(&self.partial(k).partial(k));
        }
        out
    }

    /// Partial time derivative at fixed `x`.
    pub fn dt(&self) -> Self {
        let mut out = Self::zero(self.origin);
        for (d, c) in &self.terms {
            out.add_term(*d, c.derivative());
        }
        out
    }

    /// Freezes the time dependence at `t`.
    pub fn at_time(&self, t: f64) -> Self {
        let mut out = Self::zero(self.origin);
        for (d, c) in &self.terms {
            out.add_term(*d, TimePoly::constant(c.eval(t)));
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        debug_assert_eq!(self.origin, other.origin, "polynomials about different origins");
        let mut out = self.clone();
        for (d, c) in &other.terms {
            out.add_term(*d, c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = Self::zero(self.origin);
        for (d, c) in &self.terms {
            out.add_term(*d, c.scale(s));
        }
        out
    }

    /// Multiplies every coefficient by the time polynomial `p`.
    pub fn scale_time(&self, p: &TimePoly) -> Self {
        let mut out = Self::zero(self.origin);
        for (d, c) in &self.terms {
            out.add_term(*d, c.mul(p));
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        debug_assert_eq!(self.origin, other.origin, "polynomials about different origins");
        let mut out = Self::zero(self.origin);
        for (da, ca) in &self.terms {
            for (db, cb) in &other.terms {
                out.add_term([da[0] + db[0], da[1] + db[1], da[2] + db[2]], ca.mul(cb));
            }
        }
        out
    }

    /// The part of total spatial degree exactly `j`.
    pub fn homogeneous(&self, j: usize) -> Self {
        Self {
            terms: self.terms.iter().filter(|(d, _)| total(d) == j).map(|(d, c)| (*d, c.clone())).collect(),
            origin: self.origin,
        }
    }

    /// Drops every term of spatial degree above `max_degree`.
    pub fn truncated(&self, max_degree: usize) -> Self {
        Self {
            terms: self.terms.iter().filter(|(d, _)| total(d) <= max_degree).map(|(d, c)| (*d, c.clone())).collect(),
            origin: self.origin,
        }
    }

    /// The same function expanded about `new_origin`.
    pub fn recentered(&self, new_origin: Vec3) -> Self {
        let shift = new_origin - self.origin;
        let mut out = Self::zero(new_origin);
        for (d, c) in &self.terms {
            // y = y' + shift; expand each factor binomially.
            for i in 0..=d[0] {
                for j in 0..=d[1] {
                    for k in 0..=d[2] {
                        let w = binomial(d[0], i)
                            * binomial(d[1], j)
                            * binomial(d[2], k)
                            * shift[0].powi((d[0] - i) as i32)
                            * shift[1].powi((d[1] - j) as i32)
                            * shift[2].powi((d[2] - k) as i32);
                        if w != 0.0 {
                            out.add_term([i, j, k], c.scale(w));
                        }
                    }
                }
            }
        }
        out
    }

    pub fn to_doc(&self) -> ScalarDoc {
        ScalarDoc {
            terms: self
                .terms
                .iter()
                .map(|(d, c)| {
                    let mut t_coeffs = c.coeffs().to_vec();
                    if t_coeffs.len() < TIME_DEGREE_CAP + 1 {
                        t_coeffs.resize(TIME_DEGREE_CAP + 1, 0.0);
                    }
                    TermDoc { deg: *d, t_coeffs }
                })
                .collect(),
            origin: [self.origin[0], self.origin[1], self.origin[2]],
        }
    }

    /// Parses a document, enforcing the serialization caps.
    pub fn from_doc(doc: &ScalarDoc) -> Result<Self> {
        let origin = Vec3::from(doc.origin);
        if !origin.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("polynomial origin".into()));
        }
        let mut p = Self::zero(origin);
        for term in &doc.terms {
            let sd = total(&term.deg);
            if sd > SPATIAL_DEGREE_CAP {
                return Err(Error::DegreeCap {
                    what: format!("spatial degree of term {:?}", term.deg),
                    found: sd,
                    cap: SPATIAL_DEGREE_CAP,
                });
            }
            if term.t_coeffs.is_empty() {
                return Err(Error::Invalid(format!("term {:?} has no time coefficients", term.deg)));
            }
            let tp = TimePoly::new(term.t_coeffs.clone());
            if tp.degree() > TIME_DEGREE_CAP {
                return Err(Error::DegreeCap {
                    what: format!("time degree of term {:?}", term.deg),
                    found: tp.degree(),
                    cap: TIME_DEGREE_CAP,
                });
            }
            if !term.t_coeffs.iter().all(|v| v.is_finite()) {
                return Err(Error::NonFinite(format!("coefficient of term {:?}", term.deg)));
            }
            p.add_term(term.deg, tp);
        }
        Ok(p)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_doc()).expect("plain data serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Self::from_doc(&serde_json::from_str(s)?)
    }
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Serialized term of a polynomial field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermDoc {
    pub deg: MultiDegree,
    pub t_coeffs: Vec<f64>,
}

/// Serialized scalar polynomial field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalarDoc {
    pub terms: Vec<TermDoc>,
    #[serde(default)]
    pub origin: [f64; 3],
}

/// Serialized vector polynomial field: one scalar document per component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VectorDoc {
    pub components: [ScalarDoc; 3],
}

/// Three scalar polynomial components about a common origin.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyVectorField {
    c: [PolyScalarField; 3],
}

impl PolyVectorField {
    pub fn new(c: [PolyScalarField; 3]) -> Result<Self> {
        if c[0].origin != c[1].origin || c[0].origin != c[2].origin {
            return Err(Error::Invalid("vector field components have different origins".into()));
        }
        Ok(Self { c })
    }

    pub fn zero(origin: Vec3) -> Self {
        Self { c: std::array::from_fn(|_| PolyScalarField::zero(origin)) }
    }

    pub fn constant(v: &Vec3, origin: Vec3) -> Self {
        Self { c: std::array::from_fn(|k| PolyScalarField::constant(v[k], origin)) }
    }

    /// The linear field `M y`.
    pub fn linear(m: &Mat3, origin: Vec3) -> Self {
        Self { c: std::array::from_fn(|i| PolyScalarField::linear(&m.row(i).transpose(), origin)) }
    }

    /// The position field `y` itself.
    pub fn position(origin: Vec3) -> Self {
        Self::linear(&Mat3::identity(), origin)
    }

    pub fn component(&self, k: usize) -> &PolyScalarField {
        &self.c[k]
    }

    pub fn components(&self) -> &[PolyScalarField; 3] {
        &self.c
    }

    pub fn origin(&self) -> Vec3 {
        self.c[0].origin
    }

    pub fn is_zero(&self) -> bool {
        self.c.iter().all(PolyScalarField::is_zero)
    }

    pub fn spatial_degree(&self) -> usize {
        self.c.iter().map(PolyScalarField::spatial_degree).max().unwrap_or(0)
    }

    pub fn time_degree(&self) -> usize {
        self.c.iter().map(PolyScalarField::time_degree).max().unwrap_or(0)
    }

    fn map(&self, f: impl Fn(&PolyScalarField) -> PolyScalarField) -> Self {
        Self { c: std::array::from_fn(|k| f(&self.c[k])) }
    }

    pub fn eval(&self, t: f64, x: &Vec3) -> Vec3 {
        self.eval_offset(t, &(x - self.origin()))
    }

    pub fn eval_offset(&self, t: f64, y: &Vec3) -> Vec3 {
        Vec3::new(self.c[0].eval_offset(t, y), self.c[1].eval_offset(t, y), self.c[2].eval_offset(t, y))
    }

    /// Jacobian polynomials, `J[i][j] = d_j V_i`.
    pub fn jacobian(&self) -> [[PolyScalarField; 3]; 3] {
        std::array::from_fn(|i| std::array::from_fn(|j| self.c[i].partial(j)))
    }

    pub fn divergence(&self) -> PolyScalarField {
        self.c[0].partial(0).add(&self.c[1].partial(1)).add(&self.c[2].partial(2))
    }

    pub fn curl(&self) -> Self {
        Self {
            c: [
                self.c[2].partial(1).sub(&self.c[1].partial(2)),
                self.c[0].partial(2).sub(&self.c[2].partial(0)),
                self.c[1].partial(0).sub(&self.c[0].partial(1)),
            ],
        }
    }

    pub fn dt(&self) -> Self {
        self.map(PolyScalarField::dt)
    }

    pub fn at_time(&self, t: f64) -> Self {
        self.map(|p| p.at_time(t))
    }

    pub fn add(&self, other: &Self) -> Self {
        Self { c: std::array::from_fn(|k| self.c[k].add(&other.c[k])) }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self { c: std::array::from_fn(|k| self.c[k].sub(&other.c[k])) }
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|p| p.scale(s))
    }

    pub fn scale_time(&self, p: &TimePoly) -> Self {
        self.map(|c| c.scale_time(p))
    }

    /// Directional derivative `(w . grad) V` for a fixed vector `w`.
    pub fn directional(&self, w: &Vec3) -> Self {
        self.map(|p| p.partial(0).scale(w[0]).add(&p.partial(1).scale(w[1])).add(&p.partial(2).scale(w[2])))
    }

    /// `y . V(y)`.
    pub fn dot_position(&self) -> PolyScalarField {
        let o = self.origin();
        (0..3).fold(PolyScalarField::zero(o), |acc, k| acc.add(&PolyScalarField::coordinate(k, o).mul(&self.c[k])))
    }

    /// `y x V(y)`.
    pub fn cross_position(&self) -> Self {
        let o = self.origin();
        let y: [PolyScalarField; 3] = std::array::from_fn(|k| PolyScalarField::coordinate(k, o));
        Self {
            c: [
                y[1].mul(&self.c[2]).sub(&y[2].mul(&self.c[1])),
                y[2].mul(&self.c[0]).sub(&y[0].mul(&self.c[2])),
                y[0].mul(&self.c[1]).sub(&y[1].mul(&self.c[0])),
            ],
        }
    }

    pub fn homogeneous(&self, j: usize) -> Self {
        self.map(|p| p.homogeneous(j))
    }

    pub fn truncated(&self, max_degree: usize) -> Self {
        self.map(|p| p.truncated(max_degree))
    }

    pub fn recentered(&self, new_origin: Vec3) -> Self {
        self.map(|p| p.recentered(new_origin))
    }

    pub fn with_origin(&self, origin: Vec3) -> Self {
        self.map(|p| p.with_origin(origin))
    }

    pub fn to_doc(&self) -> VectorDoc {
        VectorDoc { components: std::array::from_fn(|k| self.c[k].to_doc()) }
    }

    pub fn from_doc(doc: &VectorDoc) -> Result<Self> {
        let c = [
            PolyScalarField::from_doc(&doc.components[0])?,
            PolyScalarField::from_doc(&doc.components[1])?,
            PolyScalarField::from_doc(&doc.components[2])?,
        ];
        Self::new(c)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_doc()).expect("plain data serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Self::from_doc(&serde_json::from_str(s)?)
    }
}

/// Evaluates a 3x3 array of polynomials into a matrix.
pub fn eval_matrix(m: &[[PolyScalarField; 3]; 3], t: f64, y: &Vec3) -> Mat3 {
    Mat3::from_fn(|i, j| m[i][j].eval_offset(t, y))
}
