//! Nonexpansive self-maps of the sphere and the W-mapping built from a finite
//! family of them.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::region::Cap;
use crate::sphere::{distance, geodesic_combine, sample_in_cap, AmbientVector, SpherePoint};

/// Number of cap samples used to certify that a family maps the cap into itself.
pub const CAP_CHECK_SAMPLES: usize = 1000;

const CAP_CHECK_SEED: u64 = 0x05ee_dcab;
const CAP_CHECK_TOL: f64 = 1e-10;

/// Eigenvalues of `(R - I)^T (R - I)` below this count as zero.
const NULL_TOL: f64 = 1e-10;

/// Rotation by `angle` in the coordinate plane `(i, j)`, `i < j`, 0-based.
///
/// Maps `e_i` to `cos(angle) e_i + sin(angle) e_j` and fixes every other axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneRotation {
    i: usize,
    j: usize,
    angle: f64,
}

impl PlaneRotation {
    pub fn new(i: usize, j: usize, angle: f64) -> Result<Self> {
        if i >= j {
            return Err(Error::InvalidArgument(format!(
                "rotation plane ({i}, {j}) needs i < j"
            )));
        }
        if !angle.is_finite() {
            return Err(Error::InvalidArgument("rotation angle is not finite".into()));
        }
        Ok(Self { i, j, angle })
    }

    pub fn plane(&self) -> (usize, usize) {
        (self.i, self.j)
    }

    pub fn angle(&self) -> f64 {
        self.angle
    }

    fn apply_in_place(&self, v: &mut [f64]) {
        let (s, c) = self.angle.sin_cos();
        let (a, b) = (v[self.i], v[self.j]);
        v[self.i] = c * a - s * b;
        v[self.j] = s * a + c * b;
    }

    fn matrix(&self, dim: usize) -> DMatrix<f64> {
        let mut m = DMatrix::identity(dim, dim);
        let (s, c) = self.angle.sin_cos();
        m[(self.i, self.i)] = c;
        m[(self.i, self.j)] = -s;
        m[(self.j, self.i)] = s;
        m[(self.j, self.j)] = c;
        m
    }
}

/// A self-map of the sphere.
#[derive(Debug, Clone, PartialEq)]
pub enum Mapping {
    Identity,
    Rotation(PlaneRotation),
    /// Rotations applied in order, first element first.
    Composition(Vec<PlaneRotation>),
    /// `x ↦ beta p ⊕ (1 - beta) x`; quasinonexpansive only, not certified.
    #[cfg(feature = "experimental")]
    Contraction { pole: SpherePoint, beta: f64 },
}

impl Mapping {
    pub fn apply(&self, x: &SpherePoint) -> Result<SpherePoint> {
        let rotations: &[PlaneRotation] = match self {
            Mapping::Identity => return Ok(x.clone()),
            Mapping::Rotation(r) => std::slice::from_ref(r),
            Mapping::Composition(rs) => rs,
            #[cfg(feature = "experimental")]
            Mapping::Contraction { pole, beta } => return geodesic_combine(*beta, pole, x),
        };
        let mut v = x.coords().to_vec();
        for r in rotations {
            if r.j >= v.len() {
                return Err(Error::DimensionMismatch {
                    expected: r.j + 1,
                    got: v.len(),
                });
            }
            r.apply_in_place(&mut v);
        }
        SpherePoint::new(v)
    }

    /// Largest coordinate index touched, if any.
    fn max_axis(&self) -> Option<usize> {
        match self {
            Mapping::Identity => None,
            Mapping::Rotation(r) => Some(r.j),
            Mapping::Composition(rs) => rs.iter().map(|r| r.j).max(),
            #[cfg(feature = "experimental")]
            Mapping::Contraction { pole, .. } => Some(pole.dim() - 1),
        }
    }

    /// Matrix of a linear map; `None` for nonlinear maps.
    pub fn matrix(&self, dim: usize) -> Option<DMatrix<f64>> {
        match self {
            Mapping::Identity => Some(DMatrix::identity(dim, dim)),
            Mapping::Rotation(r) => Some(r.matrix(dim)),
            Mapping::Composition(rs) => Some(
                rs.iter()
                    .fold(DMatrix::identity(dim, dim), |acc, r| r.matrix(dim) * acc),
            ),
            #[cfg(feature = "experimental")]
            Mapping::Contraction { .. } => None,
        }
    }

    /// Orthonormal basis of `{v : R v = v}`; the fixed points on the sphere
    /// are the unit vectors of this subspace.
    pub fn fixed_set_basis(&self, dim: usize) -> Result<Vec<AmbientVector>> {
        common_fixed_basis(std::slice::from_ref(self), dim)
    }
}

/// Orthonormal basis of the subspace fixed by every (linear) map in `maps`.
///
/// Null space of `sum_i (R_i - I)^T (R_i - I)`, which is the intersection of
/// the individual null spaces since each term is positive semidefinite.
pub fn common_fixed_basis(maps: &[Mapping], dim: usize) -> Result<Vec<AmbientVector>> {
    let mut gram = DMatrix::<f64>::zeros(dim, dim);
    for m in maps {
        if m.max_axis().is_some_and(|a| a >= dim) {
            return Err(Error::DimensionMismatch {
                expected: m.max_axis().unwrap() + 1,
                got: dim,
            });
        }
        let r = m.matrix(dim).ok_or_else(|| {
            Error::InvalidArgument("fixed sets are only computed for linear maps".into())
        })?;
        let d = r - DMatrix::identity(dim, dim);
        gram += d.transpose() * d;
    }
    let eig = SymmetricEigen::new(gram);
    let mut basis = Vec::new();
    for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda.abs() <= NULL_TOL {
            let mut v: Vec<f64> = eig.eigenvectors.column(k).iter().copied().collect();
            // Fix the sign so the basis is reproducible.
            let lead = v
                .iter()
                .copied()
                .fold(0.0f64, |m, c| if c.abs() > m.abs() { c } else { m });
            if lead < 0.0 {
                v.iter_mut().for_each(|c| *c = -*c);
            }
            basis.push(AmbientVector::new(v)?);
        }
    }
    basis.sort_by(|a, b| {
        let ka = a.as_slice().iter().position(|c| c.abs() > 1e-8);
        let kb = b.as_slice().iter().position(|c| c.abs() > 1e-8);
        ka.cmp(&kb)
    });
    Ok(basis)
}

/// Weights `alpha_{n,i}` of the W-mapping used at step `n`.
#[derive(Clone)]
pub enum AlphaSchedule {
    /// The same weights at every step.
    Constant(Vec<f64>),
    /// `f(n, i)` with `n >= 1` the step and `i` the 0-based stage.
    Custom(Arc<dyn Fn(usize, usize) -> f64 + Send + Sync>),
}

impl fmt::Debug for AlphaSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AlphaSchedule::Constant(a) => f.debug_tuple("Constant").field(a).finish(),
            AlphaSchedule::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

/// Maps `T_1..T_r` with weights in `[a, 1 - a]`, all sending the cap into itself.
#[derive(Debug, Clone)]
pub struct MappingFamily {
    maps: Vec<Mapping>,
    schedule: AlphaSchedule,
    lower: f64,
}

impl MappingFamily {
    /// Constant weights `1/2` with bound `a = 1/4`.
    pub fn with_default_alphas(maps: Vec<Mapping>, cap: &Cap) -> Result<Self> {
        let r = maps.len();
        Self::new(maps, AlphaSchedule::Constant(vec![0.5; r]), 0.25, cap)
    }

    pub fn new(maps: Vec<Mapping>, schedule: AlphaSchedule, lower: f64, cap: &Cap) -> Result<Self> {
        if maps.is_empty() {
            return Err(Error::InvalidArgument("a mapping family needs r >= 1 maps".into()));
        }
        if !(lower > 0.0 && lower < 0.5) {
            return Err(Error::InvalidArgument(format!(
                "alpha bound a = {lower} must lie in (0, 1/2)"
            )));
        }
        let family = Self {
            maps,
            schedule,
            lower,
        };
        if let AlphaSchedule::Constant(a) = &family.schedule {
            if a.len() != family.maps.len() {
                return Err(Error::InvalidArgument(format!(
                    "{} alphas given for {} maps",
                    a.len(),
                    family.maps.len()
                )));
            }
        }
        family.alphas(1)?;
        family.check_cap_invariance(cap)?;
        Ok(family)
    }

    fn check_cap_invariance(&self, cap: &Cap) -> Result<()> {
        let mut rng = ChaCha8Rng::seed_from_u64(CAP_CHECK_SEED);
        let samples = std::iter::once(cap.pole().clone()).chain(
            (0..CAP_CHECK_SAMPLES).map(|_| sample_in_cap(cap.pole(), cap.radius(), &mut rng)),
        );
        for x in samples {
            for (index, m) in self.maps.iter().enumerate() {
                let slack = cap.slack(&m.apply(&x)?);
                if slack < -CAP_CHECK_TOL {
                    return Err(Error::CapNotInvariant { index, slack });
                }
            }
        }
        Ok(())
    }

    pub fn maps(&self) -> &[Mapping] {
        &self.maps
    }

    pub fn len(&self) -> usize {
        self.maps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maps.is_empty()
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn schedule(&self) -> &AlphaSchedule {
        &self.schedule
    }

    /// Weights for step `n`, checked against `[a, 1 - a]`.
    pub fn alphas(&self, n: usize) -> Result<Vec<f64>> {
        let alphas: Vec<f64> = match &self.schedule {
            AlphaSchedule::Constant(a) => a.clone(),
            AlphaSchedule::Custom(f) => (0..self.maps.len()).map(|i| f(n, i)).collect(),
        };
        let upper = 1.0 - self.lower;
        for (stage, &alpha) in alphas.iter().enumerate() {
            if !(alpha >= self.lower && alpha <= upper) {
                return Err(Error::AlphaOutOfRange {
                    n,
                    stage,
                    alpha,
                    lower: self.lower,
                    upper,
                });
            }
        }
        Ok(alphas)
    }

    /// The W-mapping `W_n` for step `n`.
    pub fn w_mapping(&self, n: usize) -> Result<WMapping<'_>> {
        Ok(WMapping {
            maps: &self.maps,
            alphas: self.alphas(n)?,
        })
    }

    /// `d(T_i x, x)` for each map.
    pub fn residuals(&self, x: &SpherePoint) -> Result<Vec<f64>> {
        self.maps
            .iter()
            .map(|m| Ok(distance(&m.apply(x)?, x)))
            .collect()
    }
}

/// `U_1 = a_1 T_1 ⊕ (1 - a_1) I`, `U_k = a_k T_k U_{k-1} ⊕ (1 - a_k) I`, `W = U_r`.
#[derive(Debug, Clone)]
pub struct WMapping<'a> {
    maps: &'a [Mapping],
    alphas: Vec<f64>,
}

impl<'a> WMapping<'a> {
    /// Uses the given weights directly, without the `[a, 1 - a]` check.
    pub fn new(maps: &'a [Mapping], alphas: Vec<f64>) -> Result<Self> {
        if maps.len() != alphas.len() || maps.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "{} alphas given for {} maps",
                alphas.len(),
                maps.len()
            )));
        }
        Ok(Self { maps, alphas })
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    /// `U_1 x, ..., U_r x`; the last entry is `W x`.
    pub fn stages(&self, x: &SpherePoint) -> Result<Vec<SpherePoint>> {
        let mut out = Vec::with_capacity(self.maps.len());
        let mut u = x.clone();
        for (map, &alpha) in self.maps.iter().zip(&self.alphas) {
            u = geodesic_combine(alpha, &map.apply(&u)?, x)?;
            out.push(u.clone());
        }
        Ok(out)
    }

    pub fn apply(&self, x: &SpherePoint) -> Result<SpherePoint> {
        Ok(self.stages(x)?.pop().expect("family is nonempty"))
    }
}
