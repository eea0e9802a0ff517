//! Spherically convex regions cut out by halfspaces, and the metric
//! projection onto them.
//!
//! A region is the intersection of the sphere with a closed cap
//! `{z : <p, z> >= cos rho}` and a list of homogeneous halfspaces
//! `{z : <a, z> >= 0}`. Every such region lies in the open hemisphere around
//! the cap pole, so the nearest point to `x` is the normalized Euclidean
//! projection of `x` onto the convex cone spanned by the region. That cone is
//! the intersection of the halfspace cones with the second-order cone
//! `{z : <p, z> >= cos rho ‖z‖}`; see [`crate::projection`] for the solvers.

use std::f64::consts::FRAC_PI_4;

use crate::error::{Error, Result};
use crate::projection::{project_cone, CapCone, Solver};
use crate::sphere::{inner, norm, AmbientVector, SpherePoint, UNIT_TOL};

pub use crate::projection::SolveStats;

/// Slack below which a witness is rejected.
pub const WITNESS_TOL: f64 = 1e-10;

/// Vectors shorter than this make a halfspace trivial.
const DEGENERATE_NORMAL: f64 = 1e-12;

/// The closed ball of geodesic radius `radius < pi/4` around `pole`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cap {
    pole: SpherePoint,
    radius: f64,
}

impl Cap {
    pub fn new(pole: SpherePoint, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius < FRAC_PI_4) {
            return Err(Error::InvalidArgument(format!(
                "cap radius {radius} must lie in (0, pi/4)"
            )));
        }
        Ok(Self { pole, radius })
    }

    pub fn pole(&self) -> &SpherePoint {
        &self.pole
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn dim(&self) -> usize {
        self.pole.dim()
    }

    /// `<pole, z> - cos(radius)`
    pub fn slack(&self, z: &SpherePoint) -> f64 {
        inner(&self.pole, z) - self.radius.cos()
    }

    pub fn contains(&self, z: &SpherePoint, tol: f64) -> bool {
        self.slack(z) >= -tol
    }

    /// The cap as a linear constraint `<pole, z> >= cos(radius)`.
    pub fn halfspace(&self) -> Halfspace {
        Halfspace {
            normal: self.pole.vector().clone(),
            offset: self.radius.cos(),
        }
    }
}

/// A linear constraint `<normal, z> >= offset`.
#[derive(Debug, Clone, PartialEq)]
pub struct Halfspace {
    normal: AmbientVector,
    offset: f64,
}

impl Halfspace {
    /// Builds `<normal, z> >= offset`, rescaling a nonzero normal to unit length.
    pub fn new(normal: AmbientVector, offset: f64) -> Result<Self> {
        if !(-1.0..1.0).contains(&offset) {
            return Err(Error::InvalidArgument(format!(
                "halfspace offset {offset} is outside [-1, 1)"
            )));
        }
        let n = normal.norm();
        if n <= DEGENERATE_NORMAL {
            if offset > 0.0 {
                return Err(Error::InvalidArgument(
                    "zero normal with positive offset is infeasible".into(),
                ));
            }
            return Ok(Self::trivial(normal.dim()));
        }
        Ok(Self {
            normal: normal.scaled(1.0 / n),
            offset,
        })
    }

    /// Homogeneous halfspace `<normal, z> >= 0`; trivial when `normal` is tiny.
    pub fn homogeneous(normal: AmbientVector) -> Self {
        Self::new(normal, 0.0).expect("offset 0 is always valid")
    }

    /// The constraint satisfied by every point.
    pub fn trivial(dim: usize) -> Self {
        Self {
            normal: AmbientVector::zeros(dim),
            offset: 0.0,
        }
    }

    pub fn is_trivial(&self) -> bool {
        self.normal.is_zero()
    }

    pub fn normal(&self) -> &AmbientVector {
        &self.normal
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn slack(&self, z: &SpherePoint) -> f64 {
        self.normal.dot(z.vector()) - self.offset
    }

    pub fn contains(&self, z: &SpherePoint, tol: f64) -> bool {
        self.slack(z) >= -tol
    }
}

/// `{z : d(y_n, z) <= d(x_n, z)}` as the halfspace `<y_n - x_n, z> >= 0`.
///
/// `arccos` is decreasing, so `d(y, z) <= d(x, z)` iff `<y, z> >= <x, z>`.
/// Returns the trivial halfspace when `y_n` and `x_n` coincide.
///
/// The stored points are unit vectors only up to rounding. Near a fixed
/// point `‖y_n - x_n‖` can be as small as `1e-8`, where that rounding would
/// tilt the bisector noticeably, so the normal is taken between the exactly
/// renormalized points: `y (1 + ey) - x (1 + ex)` with `ex = 1/‖x‖ - 1`.
pub fn make_cn(x_n: &SpherePoint, y_n: &SpherePoint) -> Halfspace {
    let ex = x_n.normalization_defect();
    let ey = y_n.normalization_defect();
    let normal: Vec<f64> = x_n
        .coords()
        .iter()
        .zip(y_n.coords())
        .map(|(x, y)| (y - x) + (ey * y - ex * x))
        .collect();
    Halfspace::homogeneous(AmbientVector::new(normal).expect("finite coordinates"))
}

/// `{z : cos d(x_1, x_n) cos d(x_n, z) >= cos d(x_1, z)}` as the halfspace
/// `<cos d(x_1, x_n) x_n - x_1, z> >= 0`.
///
/// The normal has length `sin d(x_1, x_n)`, so the halfspace is trivial when
/// `x_n = x_1`.
pub fn make_qn(x_1: &SpherePoint, x_n: &SpherePoint) -> Halfspace {
    let c = inner(x_1, x_n);
    Halfspace::homogeneous(x_n.vector().scaled(c).axpy(-1.0, x_1.vector()))
}

/// Metric projection of `x` onto `cap ∩ {<a_i, z> >= 0}`.
///
/// Does not require a witness; callers that cannot name a feasible point in
/// advance use this and verify the result.
pub fn project_onto(
    cap: &Cap,
    linear: &[Halfspace],
    x: &SpherePoint,
) -> Result<(SpherePoint, SolveStats)> {
    project_onto_with(Solver::default(), cap, linear, x)
}

pub fn project_onto_with(
    solver: Solver,
    cap: &Cap,
    linear: &[Halfspace],
    x: &SpherePoint,
) -> Result<(SpherePoint, SolveStats)> {
    let dim = cap.dim();
    if x.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: x.dim(),
        });
    }
    let normals: Vec<&[f64]> = linear
        .iter()
        .filter(|h| !h.is_trivial())
        .map(|h| h.normal.as_slice())
        .collect();

    if cap.slack(x) >= 0.0 && normals.iter().all(|a| crate::sphere::dot(a, x.coords()) >= 0.0) {
        return Ok((x.clone(), SolveStats::default()));
    }

    let cone = CapCone {
        axis: cap.pole().coords(),
        cos_radius: cap.radius().cos(),
    };
    let (z, stats) = project_cone(solver, cone, &normals, x.coords())?;
    let n = norm(&z);
    if n <= UNIT_TOL {
        return Err(Error::EmptyOrDegenerate { norm: n });
    }
    Ok((SpherePoint::new(z)?, stats))
}

/// A nonempty region: the cap, an ordered list of nontrivial homogeneous
/// halfspaces, and a point known to satisfy all of them.
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    cap: Cap,
    linear: Vec<Halfspace>,
    witness: SpherePoint,
}

impl Region {
    /// The cap alone, witnessed by its pole.
    pub fn from_cap(cap: Cap) -> Self {
        let witness = cap.pole().clone();
        Self {
            cap,
            linear: Vec::new(),
            witness,
        }
    }

    /// Trivial halfspaces are dropped; fails if `witness` violates a constraint.
    pub fn new(cap: Cap, linear: Vec<Halfspace>, witness: SpherePoint) -> Result<Self> {
        let linear: Vec<Halfspace> = linear.into_iter().filter(|h| !h.is_trivial()).collect();
        for h in &linear {
            if h.normal.dim() != cap.dim() || h.offset != 0.0 {
                return Err(Error::InvalidArgument(
                    "region halfspaces must be homogeneous and match the cap dimension".into(),
                ));
            }
        }
        let r = Self {
            cap,
            linear,
            witness,
        };
        r.check_witness(&r.witness)?;
        Ok(r)
    }

    fn check_witness(&self, w: &SpherePoint) -> Result<()> {
        let slack = self.slack(w);
        if slack < -WITNESS_TOL {
            return Err(Error::WitnessInfeasible { slack });
        }
        Ok(())
    }

    pub fn cap(&self) -> &Cap {
        &self.cap
    }

    pub fn linear(&self) -> &[Halfspace] {
        &self.linear
    }

    pub fn witness(&self) -> &SpherePoint {
        &self.witness
    }

    /// Number of nontrivial homogeneous halfspaces (the cap is not counted).
    pub fn constraint_count(&self) -> usize {
        self.linear.len()
    }

    /// Smallest slack of `z` over the cap and every halfspace.
    pub fn slack(&self, z: &SpherePoint) -> f64 {
        self.linear
            .iter()
            .map(|h| h.slack(z))
            .fold(self.cap.slack(z), f64::min)
    }

    pub fn contains(&self, z: &SpherePoint, tol: f64) -> bool {
        self.cap.contains(z, tol) && self.linear.iter().all(|h| h.contains(z, tol))
    }

    /// The region further cut by `h`, witnessed by `new_witness`.
    pub fn intersect(&self, h: Halfspace, new_witness: SpherePoint) -> Result<Self> {
        let mut linear = self.linear.clone();
        if !h.is_trivial() {
            if h.offset != 0.0 {
                return Err(Error::InvalidArgument(
                    "only homogeneous halfspaces can be intersected".into(),
                ));
            }
            linear.push(h);
        }
        let r = Self {
            cap: self.cap.clone(),
            linear,
            witness: new_witness,
        };
        r.check_witness(&r.witness)?;
        Ok(r)
    }

    /// Nearest point of the region to `x`.
    pub fn project(&self, x: &SpherePoint) -> Result<(SpherePoint, SolveStats)> {
        project_onto(&self.cap, &self.linear, x)
    }

    pub fn project_with(&self, solver: Solver, x: &SpherePoint) -> Result<(SpherePoint, SolveStats)> {
        project_onto_with(solver, &self.cap, &self.linear, x)
    }
}
