use std::f64::consts::PI;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sphere_cq::oracle::random_test_case;
use sphere_cq::sphere::sample_in_cap;
use sphere_cq::{
    distance, geodesic_combine, inner, make_cn, make_qn, pal_inequality_gap, random_point_in_cap,
    shrink_step, Cap, IterationState, Mapping, MappingFamily, PlaneRotation, Problem, Region,
    SpherePoint, WMapping,
};

fn point(dim: usize, seed: u64) -> SpherePoint {
    random_point_in_cap(&SpherePoint::basis(dim, dim - 1), PI / 2.0 - 1e-3, seed)
}

fn cap_point(cap: &Cap, seed: u64) -> SpherePoint {
    random_point_in_cap(cap.pole(), cap.radius(), seed)
}

fn rotation_family() -> Vec<Mapping> {
    vec![
        Mapping::Rotation(PlaneRotation::new(0, 1, 0.8).unwrap()),
        Mapping::Rotation(PlaneRotation::new(0, 2, 0.5).unwrap()),
    ]
}

fn bench_cap() -> Cap {
    Cap::new(SpherePoint::basis(4, 3), PI / 5.0).unwrap()
}

/// Residual of projecting `v` onto span{x, y}.
fn span_residual(v: &SpherePoint, x: &SpherePoint, y: &SpherePoint) -> f64 {
    let g = inner(x, y);
    let (bx, by) = (inner(v, x), inner(v, y));
    let det = 1.0 - g * g;
    let a = (bx - g * by) / det;
    let b = (by - g * bx) / det;
    v.coords()
        .iter()
        .zip(x.coords().iter().zip(y.coords()))
        .map(|(vi, (xi, yi))| (vi - a * xi - b * yi).powi(2))
        .sum::<f64>()
        .sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn distance_is_a_metric(dim in 2usize..7, a: u64, b: u64, c: u64) {
        let (x, y, z) = (point(dim, a), point(dim, b), point(dim, c));
        let dxy = distance(&x, &y);
        prop_assert!((0.0..=PI).contains(&dxy));
        prop_assert_eq!(dxy, distance(&y, &x));
        prop_assert!(dxy <= distance(&x, &z) + distance(&z, &y) + 1e-12);
        prop_assert!(distance(&x, &x) == 0.0);
    }

    #[test]
    fn combination_splits_distance_on_the_great_circle(
        dim in 2usize..7, a: u64, b: u64, alpha in 0.0f64..=1.0,
    ) {
        let (x, y) = (point(dim, a), point(dim, b));
        let z = geodesic_combine(alpha, &x, &y).unwrap();
        let d = distance(&x, &y);
        prop_assert!((distance(&y, &z) - alpha * d).abs() <= 1e-10);
        prop_assert!((distance(&x, &z) - (1.0 - alpha) * d).abs() <= 1e-10);
        if d > 1e-6 {
            prop_assert!(span_residual(&z, &x, &y) <= 1e-12);
        }
    }

    #[test]
    fn comparison_inequality_holds_in_small_caps(
        dim in 2usize..6, a: u64, b: u64, c: u64, t in 0.0f64..=1.0,
    ) {
        let cap = Cap::new(SpherePoint::basis(dim, 0), 0.7).unwrap();
        let (x, y, z) = (cap_point(&cap, a), cap_point(&cap, b), cap_point(&cap, c));
        prop_assert!(pal_inequality_gap(t, &x, &y, &z).unwrap() >= -1e-10);
    }

    #[test]
    fn linear_cuts_match_metric_inequalities(dim in 2usize..6, a: u64, b: u64, c: u64) {
        let cap = Cap::new(SpherePoint::basis(dim, 0), 0.7).unwrap();
        let (x, y, z) = (cap_point(&cap, a), cap_point(&cap, b), cap_point(&cap, c));
        let cn = make_cn(&x, &y);
        let slack = cn.slack(&z);
        let metric = distance(&y, &z) <= distance(&x, &z);
        if slack.abs() > 1e-10 {
            prop_assert_eq!(slack > 0.0, metric);
        }
        let qn = make_qn(&x, &y);
        let slack = qn.slack(&z);
        let metric = distance(&x, &y).cos() * distance(&y, &z).cos() >= distance(&x, &z).cos();
        if slack.abs() > 1e-10 {
            prop_assert_eq!(slack > 0.0, metric);
        }
    }

    #[test]
    fn projection_is_idempotent_and_fejer(seed: u64, w_seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (region, x) = random_test_case(&mut rng);
        let (p, _) = region.project(&x).unwrap();
        prop_assert!(region.contains(&p, 1e-8));
        let (pp, _) = region.project(&p).unwrap();
        prop_assert!(distance(&p, &pp) <= 1e-8);
        prop_assert!(distance(&p, region.witness()) <= distance(&x, region.witness()) + 1e-8);
        let mut wr = ChaCha8Rng::seed_from_u64(w_seed);
        for _ in 0..50 {
            let w = sample_in_cap(region.cap().pole(), region.cap().radius(), &mut wr);
            if region.contains(&w, 0.0) {
                prop_assert!(distance(&p, &w) <= distance(&x, &w) + 1e-8);
            }
        }
    }

    #[test]
    fn rotations_are_isometries(
        dim in 3usize..7, a: u64, b: u64, i in 0usize..3, angle in -PI..PI, angle2 in -PI..PI,
    ) {
        let r1 = PlaneRotation::new(i % (dim - 1), dim - 1, angle).unwrap();
        let r2 = PlaneRotation::new(0, 1, angle2).unwrap();
        let (x, y) = (point(dim, a), point(dim, b));
        for m in [Mapping::Rotation(r1), Mapping::Composition(vec![r1, r2])] {
            let (tx, ty) = (m.apply(&x).unwrap(), m.apply(&y).unwrap());
            prop_assert!((distance(&tx, &ty) - distance(&x, &y)).abs() <= 1e-12);
        }
    }

    #[test]
    fn one_stage_map_is_quasinonexpansive(seed: u64, alpha in 0.0f64..=1.0, angle in -1.5f64..1.5) {
        let t = Mapping::Rotation(PlaneRotation::new(0, 1, angle).unwrap());
        let cap = bench_cap();
        let x = cap_point(&cap, seed);
        let u = geodesic_combine(alpha, &t.apply(&x).unwrap(), &x).unwrap();
        // T fixes the (3,4) great circle; take p on its arc inside the cap.
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabc);
        let phi: f64 = rand::Rng::random_range(&mut rng, (0.3 * PI)..=(0.7 * PI));
        let p = SpherePoint::new(vec![0.0, 0.0, phi.cos(), phi.sin()]).unwrap();
        prop_assert!(distance(&u, &p) <= distance(&x, &p) + 1e-10);
    }

    #[test]
    fn w_mapping_fixes_common_fixed_points_and_keeps_the_cap(
        seed: u64, a1 in 0.25f64..=0.75, a2 in 0.25f64..=0.75,
    ) {
        let maps = rotation_family();
        let cap = bench_cap();
        let w = WMapping::new(&maps, vec![a1, a2]).unwrap();
        let e4 = SpherePoint::basis(4, 3);
        prop_assert!(distance(&w.apply(&e4).unwrap(), &e4) <= 1e-10);
        let x = cap_point(&cap, seed);
        let wx = w.apply(&x).unwrap();
        prop_assert!(cap.contains(&wx, 1e-12));
        for m in &maps {
            prop_assert!(cap.contains(&m.apply(&x).unwrap(), 1e-12));
        }
        if distance(&x, &e4) > 1e-6 {
            prop_assert!(distance(&wx, &x) > 1e-8);
        }
    }
}

#[test]
fn shrinking_regions_are_nested_and_bounded() {
    let cap = bench_cap();
    let family = MappingFamily::with_default_alphas(rotation_family(), &cap).unwrap();
    let p = Problem::new(cap.clone(), family, cap_point(&cap, 3))
        .unwrap()
        .with_computed_fixed_set()
        .unwrap();
    let pf = p.known_projection().unwrap();
    let bound = distance(p.x1(), &pf);
    let mut s = IterationState::initial(&p);
    let mut regions: Vec<Region> = Vec::new();
    for _ in 0..40 {
        s = shrink_step(&p, s).unwrap();
        assert!(distance(p.x1(), &s.x_n) <= bound + 1e-8);
        regions.push(s.region.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..2000 {
        let z = sample_in_cap(cap.pole(), cap.radius(), &mut rng);
        for k in 1..regions.len() {
            if regions[k].contains(&z, 0.0) {
                assert!(regions[k - 1].contains(&z, 0.0));
            }
        }
    }
    for r in &regions {
        assert!(r.slack(&pf) >= -1e-8);
    }
}
