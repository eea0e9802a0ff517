//! Independent answers for checking the solvers: brute-force grid search on
//! the 2-sphere and closed forms that hold in any dimension.
//!
//! Nothing in the iteration drivers calls into this module.

use std::f64::consts::PI;

use rand::Rng;

use crate::error::{Error, Result};
use crate::region::{Cap, Halfspace, Region};
use crate::sphere::{distance, sample_in_cap, AmbientVector, SpherePoint};

/// Points covering a cap of the 2-sphere: every cap point lies within `h`
/// of some grid point.
#[derive(Debug, Clone)]
pub struct GeodesicGrid {
    points: Vec<[f64; 3]>,
    resolution: f64,
}

type P3 = [f64; 3];

fn dot3(a: &P3, b: &P3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Orthonormal pair spanning the tangent plane at `p` on the 2-sphere.
fn tangent_frame(c: &P3) -> (P3, P3) {
    let pick = if c[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let d = dot3(&pick, c);
    let mut t1 = [pick[0] - d * c[0], pick[1] - d * c[1], pick[2] - d * c[2]];
    let n = dot3(&t1, &t1).sqrt();
    t1.iter_mut().for_each(|v| *v /= n);
    let t2 = [
        c[1] * t1[2] - c[2] * t1[1],
        c[2] * t1[0] - c[0] * t1[2],
        c[0] * t1[1] - c[1] * t1[0],
    ];
    (t1, t2)
}

/// `exp_c(u t1 + v t2)`
fn exp_map(c: &P3, t1: &P3, t2: &P3, u: f64, v: f64) -> P3 {
    let r = (u * u + v * v).sqrt();
    let (s, co) = if r == 0.0 { (0.0, 1.0) } else { (r.sin() / r, r.cos()) };
    std::array::from_fn(|k| co * c[k] + s * (u * t1[k] + v * t2[k]))
}

fn as_p3(x: &SpherePoint) -> P3 {
    [x.coords()[0], x.coords()[1], x.coords()[2]]
}

/// Rings of constant distance from the pole spaced by `h`, each sampled at
/// spacing at most `h`; the outermost ring sits on the cap boundary.
fn cap_rings(pole: &P3, radius: f64, h: f64) -> impl Iterator<Item = P3> + '_ {
    let (t1, t2) = tangent_frame(pole);
    let rings = (radius / h).ceil() as usize;
    std::iter::once(*pole).chain((1..=rings).flat_map(move |k| {
        let theta = (k as f64 * h).min(radius);
        let count = ((2.0 * PI * theta.sin()) / h).ceil().max(6.0) as usize;
        (0..count).map(move |m| {
            let phi = 2.0 * PI * m as f64 / count as f64;
            exp_map(pole, &t1, &t2, theta * phi.cos(), theta * phi.sin())
        })
    }))
}

fn check_grid_args(dim: usize, h: f64) -> Result<()> {
    if dim != 3 {
        return Err(Error::InvalidArgument(
            "grid oracle is only defined on the 2-sphere".into(),
        ));
    }
    if h.is_nan() || h <= 0.0 {
        return Err(Error::InvalidArgument("grid resolution must be positive".into()));
    }
    Ok(())
}

impl GeodesicGrid {
    pub fn covering_cap(cap: &Cap, h: f64) -> Result<Self> {
        check_grid_args(cap.dim(), h)?;
        let pole = as_p3(cap.pole());
        Ok(Self {
            points: cap_rings(&pole, cap.radius(), h).collect(),
            resolution: h,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> impl Iterator<Item = SpherePoint> + '_ {
        self.points
            .iter()
            .map(|p| SpherePoint::new(p.to_vec()).expect("unit grid point"))
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }
}

/// Region constraints flattened to arrays for the inner search loops.
struct FlatRegion {
    pole: P3,
    cos_radius: f64,
    normals: Vec<P3>,
}

impl FlatRegion {
    fn new(region: &Region) -> Self {
        Self {
            pole: as_p3(region.cap().pole()),
            cos_radius: region.cap().radius().cos(),
            normals: region
                .linear()
                .iter()
                .map(|h| {
                    let a = h.normal().as_slice();
                    [a[0], a[1], a[2]]
                })
                .collect(),
        }
    }

    fn contains(&self, z: &P3) -> bool {
        dot3(&self.pole, z) >= self.cos_radius && self.normals.iter().all(|a| dot3(a, z) >= 0.0)
    }
}

/// Nearest feasible point of `region` to `x` by exhaustive search on the
/// 2-sphere: a cap grid at spacing `h`, then one local pass at `h / 100`.
///
/// The local pass covers, in tangent coordinates at the best coarse point,
/// the bounding box of every feasible coarse point within `h` of the best
/// coarse distance, padded by `h`. The true answer lies there whenever the
/// region is thicker than the grid, however flat the distance is along the
/// boundary.
///
/// Feasible points are compared by `<x, z>`, which orders them exactly as
/// geodesic distance does.
pub fn brute_project(region: &Region, x: &SpherePoint, h: f64) -> Result<SpherePoint> {
    if x.dim() != 3 || region.cap().dim() != 3 {
        return Err(Error::InvalidArgument(
            "brute-force projection needs the 2-sphere".into(),
        ));
    }
    if !(h > 0.0 && h <= 1e-2) {
        return Err(Error::InvalidArgument(format!(
            "grid resolution {h} must lie in (0, 1e-2]"
        )));
    }
    let flat = FlatRegion::new(region);
    let xa = as_p3(x);
    let radius = region.cap().radius();
    let coarse = || cap_rings(&flat.pole, radius, h).filter(|z| flat.contains(z));
    let (best_score, center) = coarse()
        .map(|z| (dot3(&xa, &z), z))
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .ok_or(Error::NoFeasibleGridPoint)?;

    let (t1, t2) = tangent_frame(&center);
    let near = (best_score.clamp(-1.0, 1.0).acos() + h).min(PI).cos();
    let (mut lo, mut hi) = ([0.0f64; 2], [0.0f64; 2]);
    for z in coarse().filter(|z| dot3(&xa, z) >= near) {
        let (a, b) = (dot3(&t1, &z), dot3(&t2, &z));
        let w = a.hypot(b);
        let angle = w.atan2(dot3(&center, &z));
        let scale = if w > 0.0 { angle / w } else { 0.0 };
        for (k, c) in [a * scale, b * scale].into_iter().enumerate() {
            lo[k] = lo[k].min(c);
            hi[k] = hi[k].max(c);
        }
    }

    let fine = h / 100.0;
    let index_range = |k: usize| {
        ((lo[k] - h) / fine).floor() as i64..=((hi[k] + h) / fine).ceil() as i64
    };
    let (ru, rv) = (index_range(0), index_range(1));
    let best = ru
        .flat_map(|i| {
            let rv = rv.clone();
            rv.map(move |j| exp_map(&center, &t1, &t2, i as f64 * fine, j as f64 * fine))
        })
        .filter(|z| flat.contains(z))
        .map(|z| (dot3(&xa, &z), z))
        .filter(|(score, _)| *score > best_score)
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .map_or(center, |(_, z)| z);
    SpherePoint::new(best.to_vec())
}

/// Nearest point on the great circle of the coordinate plane `kept_axes`
/// (0-based): drop the other coordinates and renormalize.
pub fn circle_project(x: &SpherePoint, kept_axes: (usize, usize)) -> Result<SpherePoint> {
    let (i, j) = kept_axes;
    let dim = x.dim();
    if i == j || i >= dim || j >= dim {
        return Err(Error::InvalidArgument(format!(
            "axes ({i}, {j}) do not name a plane in dimension {dim}"
        )));
    }
    let (a, b) = (x.coords()[i], x.coords()[j]);
    if a.hypot(b) <= 1e-12 {
        return Err(Error::DegenerateInput(
            "point is orthogonal to the kept plane".into(),
        ));
    }
    let mut v = vec![0.0; dim];
    v[i] = a;
    v[j] = b;
    SpherePoint::new(v)
}

/// Closed-form nearest point of a cap: move along the geodesic toward the
/// pole until the distance to it is the cap radius.
pub fn cap_project(cap: &Cap, x: &SpherePoint) -> Result<SpherePoint> {
    let d = distance(cap.pole(), x);
    if d <= cap.radius() {
        return Ok(x.clone());
    }
    if d >= PI - 1e-12 {
        return Err(Error::DegenerateInput("point is antipodal to the pole".into()));
    }
    crate::sphere::geodesic_combine(cap.radius() / d, x, cap.pole())
}

/// True iff `sin d < sin(alpha d) + sin((1 - alpha) d)` at every grid value.
pub fn sin_lemma_check(delta_grid: &[f64], alpha: f64) -> bool {
    delta_grid
        .iter()
        .all(|&d| d.sin() < (alpha * d).sin() + ((1.0 - alpha) * d).sin())
}

/// A seeded region on the 2-sphere for projection tests: a cap of radius in
/// `[0.3, 0.75]`, up to three homogeneous cuts that all keep a margin of 0.05
/// at an interior witness, and a query point within 0.5 of that witness.
pub fn random_test_case<R: Rng + ?Sized>(rng: &mut R) -> (Region, SpherePoint) {
    let pole = sample_in_cap(&SpherePoint::basis(3, 2), PI / 2.0, rng);
    let radius = rng.random_range(0.3..0.75);
    let cap = Cap::new(pole.clone(), radius).expect("radius below pi/4");
    let witness = sample_in_cap(&pole, 0.6 * radius, rng);
    let cuts = rng.random_range(0..=3);
    let mut linear = Vec::new();
    while linear.len() < cuts {
        let a = sample_in_cap(&SpherePoint::basis(3, 0), PI, rng);
        let mut n = a.into_vector();
        let s = n.dot(witness.vector());
        if s < 0.0 {
            n = n.scaled(-1.0);
        }
        if s.abs() < 0.05 {
            continue;
        }
        linear.push(Halfspace::homogeneous(AmbientVector::new(n.into_vec()).unwrap()));
    }
    let region = Region::new(cap, linear, witness.clone()).expect("witness has margin");
    let x = sample_in_cap(&witness, 0.5, rng);
    (region, x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sphere::geodesic_combine;

    #[test]
    fn grid_covers_cap() {
        let cap = Cap::new(SpherePoint::new(vec![0.3, 0.2, 1.0]).unwrap(), 0.4).unwrap();
        let h = 0.02;
        let grid = GeodesicGrid::covering_cap(&cap, h).unwrap();
        let mut rng = rand::rng();
        for _ in 0..300 {
            let z = sample_in_cap(cap.pole(), cap.radius(), &mut rng);
            let nearest = grid
                .points()
                .map(|g| distance(&g, &z))
                .fold(f64::INFINITY, f64::min);
            assert!(nearest <= h, "gap {nearest}");
        }
    }

    #[test]
    fn brute_feasible_point_is_nearly_fixed() {
        let cap = Cap::new(SpherePoint::basis(3, 2), 0.5).unwrap();
        let r = Region::from_cap(cap);
        let x = SpherePoint::new(vec![0.1, -0.05, 1.0]).unwrap();
        let p = brute_project(&r, &x, 1e-2).unwrap();
        assert!(distance(&p, &x) <= 1e-4);
    }

    #[test]
    fn brute_single_halfspace_matches_kkt() {
        let cap = Cap::new(SpherePoint::basis(3, 1), 0.7).unwrap();
        let h = Halfspace::homogeneous(AmbientVector::basis(3, 0));
        let r = Region::new(cap, vec![h], SpherePoint::basis(3, 1)).unwrap();
        let x = SpherePoint::new(vec![-0.6, 0.8, 0.0]).unwrap();
        let p = brute_project(&r, &x, 1e-2).unwrap();
        assert!(distance(&p, &SpherePoint::basis(3, 1)) <= 2e-4, "{p:?}");
    }

    #[test]
    fn brute_cap_only_matches_closed_form() {
        let cap = Cap::new(SpherePoint::basis(3, 0), PI / 6.0).unwrap();
        let x = SpherePoint::basis(3, 1);
        let want = cap_project(&cap, &x).unwrap();
        let p = brute_project(&Region::from_cap(cap), &x, 1e-2).unwrap();
        assert!(distance(&p, &want) <= 2e-4);
    }

    #[test]
    fn brute_rejects_wrong_dimension_and_thin_regions() {
        let cap4 = Cap::new(SpherePoint::basis(4, 3), 0.5).unwrap();
        assert!(brute_project(&Region::from_cap(cap4), &SpherePoint::basis(4, 3), 1e-2).is_err());

        // Two nearly opposite cuts leave a sliver far thinner than the grid.
        let cap = Cap::new(SpherePoint::basis(3, 2), 0.5).unwrap();
        let a = Halfspace::homogeneous(AmbientVector::new(vec![1.0, 0.0, -1e-9]).unwrap());
        let b = Halfspace::homogeneous(AmbientVector::new(vec![-1.0, 0.0, 2e-9]).unwrap());
        let w = SpherePoint::new(vec![1.5e-9, 0.0, 1.0]).unwrap();
        let r = Region::new(cap, vec![a, b], w).unwrap();
        let x = SpherePoint::new(vec![0.2, 0.0, 1.0]).unwrap();
        assert!(matches!(brute_project(&r, &x, 1e-2), Err(Error::NoFeasibleGridPoint)));
    }

    #[test]
    fn circle_projection_cases() {
        let x = SpherePoint::new(vec![0.6, 0.0, 0.8, 0.0]).unwrap();
        let p = circle_project(&x, (2, 3)).unwrap();
        assert_eq!(p, SpherePoint::basis(4, 2));
        let on = SpherePoint::new(vec![0.0, 0.0, 0.6, 0.8]).unwrap();
        assert!(distance(&circle_project(&on, (2, 3)).unwrap(), &on) < 1e-15);
        assert!(matches!(
            circle_project(&SpherePoint::basis(4, 0), (2, 3)),
            Err(Error::DegenerateInput(_))
        ));
    }

    #[test]
    fn circle_distance_is_arccos_of_plane_norm() {
        let x = SpherePoint::new(vec![0.3, -0.4, 0.5, 0.7]).unwrap();
        let p = circle_project(&x, (2, 3)).unwrap();
        let plane = x.coords()[2].hypot(x.coords()[3]);
        assert!((distance(&x, &p) - plane.acos()).abs() < 1e-12);
    }

    #[test]
    fn circle_projection_beats_circle_grid() {
        // On S^2, compare with a fine sweep of the great circle of plane (0, 1).
        let x = SpherePoint::new(vec![0.5, -0.3, 0.6]).unwrap();
        let p = circle_project(&x, (0, 1)).unwrap();
        let d = distance(&x, &p);
        let best = (0..200_000)
            .map(|k| {
                let t = 2.0 * PI * k as f64 / 200_000.0;
                distance(&x, &SpherePoint::new(vec![t.cos(), t.sin(), 0.0]).unwrap())
            })
            .fold(f64::INFINITY, f64::min);
        assert!(d <= best + 1e-6);
    }

    #[test]
    fn cap_projection_is_slerp_toward_pole() {
        let cap = Cap::new(SpherePoint::basis(3, 0), PI / 6.0).unwrap();
        let p = cap_project(&cap, &SpherePoint::basis(3, 1)).unwrap();
        let want = SpherePoint::new(vec![(PI / 6.0).cos(), (PI / 6.0).sin(), 0.0]).unwrap();
        assert!(distance(&p, &want) < 1e-14);
        let inside = geodesic_combine(0.9, cap.pole(), &SpherePoint::basis(3, 1)).unwrap();
        assert_eq!(cap_project(&cap, &inside).unwrap(), inside);
    }

    #[test]
    fn sin_lemma_cases() {
        assert!(sin_lemma_check(&[PI / 2.0], 0.5));
        assert!(sin_lemma_check(&[1e-6], 0.3));
        // Fails at delta = 0, where both sides vanish.
        assert!(!sin_lemma_check(&[0.0], 0.5));
    }
}
