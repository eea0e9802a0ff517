//! Geometry of the unit sphere of a finite-dimensional real inner-product space.
//!
//! Points are unit vectors, the metric is the great-circle distance
//! `d(x, y) = arccos <x, y>`, and `geodesic_combine(a, x, y)` is the point on
//! the minimal geodesic from `x` to `y` lying at distance `(1 - a) d(x, y)`
//! from `x` (so `a = 1` gives `x` and `a = 0` gives `y`).

use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, Index, Mul, Sub};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Tolerance on `|‖x‖ - 1|` accepted for a sphere point after renormalization.
pub const UNIT_TOL: f64 = 1e-12;

/// `inner(x, y) <= -1 + ANTIPODAL_TOL` is treated as an antipodal pair.
pub const ANTIPODAL_TOL: f64 = 1e-12;

/// A vector of the ambient space `R^d`, `d >= 2`, with finite coordinates.
#[derive(Clone, PartialEq)]
pub struct AmbientVector(Vec<f64>);

impl AmbientVector {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(Error::InvalidVector(format!(
                "ambient dimension must be at least 2, got {}",
                coords.len()
            )));
        }
        if let Some(i) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::InvalidVector(format!(
                "coordinate {i} is not finite"
            )));
        }
        Ok(Self(coords))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }

    /// The `i`-th standard basis vector (0-based index).
    pub fn basis(dim: usize, i: usize) -> Self {
        let mut v = vec![0.0; dim];
        v[i] = 1.0;
        Self(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn dot(&self, other: &Self) -> f64 {
        dot(&self.0, &other.0)
    }

    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0.0)
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self(self.0.iter().map(|c| c * s).collect())
    }

    /// `self + s * other`
    pub fn axpy(&self, s: f64, other: &Self) -> Self {
        Self(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| a + s * b)
                .collect(),
        )
    }
}

impl fmt::Debug for AmbientVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(&self.0).finish()
    }
}

impl Index<usize> for AmbientVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl Add for &AmbientVector {
    type Output = AmbientVector;
    fn add(self, rhs: Self) -> AmbientVector {
        self.axpy(1.0, rhs)
    }
}

impl Sub for &AmbientVector {
    type Output = AmbientVector;
    fn sub(self, rhs: Self) -> AmbientVector {
        self.axpy(-1.0, rhs)
    }
}

impl Mul<f64> for &AmbientVector {
    type Output = AmbientVector;
    fn mul(self, s: f64) -> AmbientVector {
        self.scaled(s)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `‖a‖² - 1` with error-free products and compensated summation.
///
/// Ordinary evaluation loses everything below `1e-16`, which is the whole
/// answer for a vector that was just normalized.
pub(crate) fn norm_sq_minus_one(a: &[f64]) -> f64 {
    let mut sum = -1.0f64;
    let mut comp = 0.0f64;
    let mut add = |v: f64| {
        let t = sum + v;
        comp += if sum.abs() >= v.abs() {
            (sum - t) + v
        } else {
            (v - t) + sum
        };
        sum = t;
    };
    for &c in a {
        let p = c * c;
        add(p);
        add(c.mul_add(c, -p));
    }
    sum + comp
}

/// A point of the unit sphere.
#[derive(Clone, PartialEq)]
pub struct SpherePoint(AmbientVector);

impl SpherePoint {
    /// Normalizes `coords` onto the sphere. Fails on the zero vector.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        Self::from_vector(AmbientVector::new(coords)?)
    }

    pub fn from_vector(v: AmbientVector) -> Result<Self> {
        let n = v.norm();
        if n.is_nan() || n <= 0.0 || n.is_infinite() {
            return Err(Error::InvalidVector(
                "cannot normalize a zero or non-finite vector".into(),
            ));
        }
        let mut p = Self(v.scaled(1.0 / n));
        p.renormalize();
        Ok(p)
    }

    /// The `i`-th standard basis vector (0-based index).
    pub fn basis(dim: usize, i: usize) -> Self {
        Self(AmbientVector::basis(dim, i))
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn coords(&self) -> &[f64] {
        self.0.as_slice()
    }

    pub fn vector(&self) -> &AmbientVector {
        &self.0
    }

    pub fn into_vector(self) -> AmbientVector {
        self.0
    }

    /// `p / ‖p‖ - p` to first order, computed without cancellation.
    pub(crate) fn normalization_defect(&self) -> f64 {
        -0.5 * norm_sq_minus_one(self.coords())
    }

    pub fn antipode(&self) -> Self {
        Self(self.0.scaled(-1.0))
    }

    // A second pass brings the norm within a few ulps of 1.
    fn renormalize(&mut self) {
        let n = self.0.norm();
        if (n - 1.0).abs() > f64::EPSILON {
            self.0 = self.0.scaled(1.0 / n);
        }
    }
}

impl fmt::Debug for SpherePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SpherePoint({:?})", self.0)
    }
}

fn check_dims(x: &SpherePoint, y: &SpherePoint) {
    assert_eq!(
        x.dim(),
        y.dim(),
        "sphere points of different dimension combined"
    );
}

/// Inner product of two sphere points, clamped to `[-1, 1]`.
pub fn inner(x: &SpherePoint, y: &SpherePoint) -> f64 {
    check_dims(x, y);
    x.0.dot(&y.0).clamp(-1.0, 1.0)
}

/// Great-circle distance in `[0, pi]`.
///
/// Evaluated as `2 atan2(‖x - y‖, ‖x + y‖)`, which equals `arccos <x, y>` for
/// unit vectors but keeps full relative accuracy for nearby points, where
/// `arccos` loses about half the significant digits.
pub fn distance(x: &SpherePoint, y: &SpherePoint) -> f64 {
    check_dims(x, y);
    let (mut diff, mut sum) = (0.0, 0.0);
    for (a, b) in x.coords().iter().zip(y.coords()) {
        diff += (a - b) * (a - b);
        sum += (a + b) * (a + b);
    }
    (2.0 * diff.sqrt().atan2(sum.sqrt())).clamp(0.0, PI)
}

/// The point `alpha x ⊕ (1 - alpha) y` on the geodesic `[x, y]`, at distance
/// `alpha d(x, y)` from `y` and `(1 - alpha) d(x, y)` from `x`.
pub fn geodesic_combine(alpha: f64, x: &SpherePoint, y: &SpherePoint) -> Result<SpherePoint> {
    check_dims(x, y);
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidArgument(format!(
            "geodesic weight {alpha} is outside [0, 1]"
        )));
    }
    let c = x.0.dot(&y.0);
    if c <= -1.0 + ANTIPODAL_TOL {
        return Err(Error::AntipodalPoints { inner: c });
    }
    let theta = distance(x, y);
    if theta == 0.0 || alpha == 1.0 {
        return Ok(x.clone());
    }
    if alpha == 0.0 {
        return Ok(y.clone());
    }
    let s = theta.sin();
    let wx = (alpha * theta).sin() / s;
    let wy = ((1.0 - alpha) * theta).sin() / s;
    let v = x.0.scaled(wx).axpy(wy, &y.0);
    SpherePoint::from_vector(v)
}

/// `LHS - RHS` of the CAT(1) comparison inequality
///
/// ```text
/// cos d(v,z) sin d(x,y) >= cos d(x,z) sin(t d(x,y)) + cos d(y,z) sin((1-t) d(x,y))
/// ```
///
/// with `v = t x ⊕ (1 - t) y`. Nonnegative whenever the triangle perimeter
/// is below `2 pi`.
pub fn pal_inequality_gap(
    t: f64,
    x: &SpherePoint,
    y: &SpherePoint,
    z: &SpherePoint,
) -> Result<f64> {
    let dxy = distance(x, y);
    let perimeter = dxy + distance(y, z) + distance(z, x);
    if perimeter >= 2.0 * PI {
        return Err(Error::PerimeterTooLarge { perimeter });
    }
    let v = geodesic_combine(t, x, y)?;
    let lhs = inner(&v, z) * dxy.sin();
    let rhs = inner(x, z) * (t * dxy).sin() + inner(y, z) * ((1.0 - t) * dxy).sin();
    Ok(lhs - rhs)
}

/// Draws a point at geodesic distance at most `rho` from `center`.
pub fn sample_in_cap<R: Rng + ?Sized>(center: &SpherePoint, rho: f64, rng: &mut R) -> SpherePoint {
    let dim = center.dim();
    // Tangent direction: Gaussian vector with its center component removed.
    let tangent = loop {
        let g = AmbientVector(
            (0..dim)
                .map(|_| rng.sample::<f64, _>(StandardNormal))
                .collect(),
        );
        let t = g.axpy(-g.dot(&center.0), &center.0);
        let n = t.norm();
        if n > 1e-6 {
            break t.scaled(1.0 / n);
        }
    };
    let u: f64 = rng.random();
    let angle = rho * u.powf(1.0 / (dim as f64 - 1.0));
    let v = center.0.scaled(angle.cos()).axpy(angle.sin(), &tangent);
    SpherePoint::from_vector(v).expect("cap sample has unit norm")
}

/// Deterministic point in the closed cap of radius `rho` around `center`.
pub fn random_point_in_cap(center: &SpherePoint, rho: f64, seed: u64) -> SpherePoint {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_in_cap(center, rho, &mut rng)
}
