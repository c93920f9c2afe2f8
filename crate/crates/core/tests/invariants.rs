use proptest::prelude::*;
use reifenberg::enlargement::{enlarge, neighbor_family, EnlargeConfig};
use reifenberg::geometry::{
    fit_hyperplane, local_hausdorff, Aabb, Ball, BallDomain, DyadicCube, HalfSpace, Point, PointSetComplement,
};
use reifenberg::harmonic::{dimension_fit, dyadic_radii, sample_exits, tabulate, PowerLaw, WosConfig};
use reifenberg::measure::{box_count, sample_polyline};
use reifenberg::snowflake::Profile;
use reifenberg::whitney::{decompose, WhitneyConfig};
use reifenberg::Exec;

fn pt2() -> impl Strategy<Value = Point<2>> {
    (-4.0..4.0f64, -4.0..4.0f64).prop_map(|(x, y)| Point::<2>::new(x, y))
}

fn rotate(p: &Point<2>, a: f64, t: &Point<2>) -> Point<2> {
    Point::<2>::new(a.cos() * p[0] - a.sin() * p[1], a.sin() * p[0] + a.cos() * p[1]) + t
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dyadic_cube_contains_its_points(p in pt2(), level in -3i32..20) {
        let q = DyadicCube::containing(&p, level);
        prop_assert!(q.contains(&p));
        prop_assert_eq!(q.parent().level, level - 1);
        prop_assert!(q.parent().children().contains(&q));
        let hits = q.children().iter().filter(|c| c.contains(&p)).count();
        prop_assert_eq!(hits, 1);
    }

    #[test]
    fn hausdorff_is_symmetric_and_rigid(
        a in prop::collection::vec(pt2(), 3..30),
        b in prop::collection::vec(pt2(), 3..30),
        angle in 0.0..6.3f64,
        shift in pt2(),
    ) {
        let ball = Ball::new(Point::<2>::zeros(), 100.0);
        let ab = local_hausdorff(&a, &b, &ball).unwrap();
        let ba = local_hausdorff(&b, &a, &ball).unwrap();
        prop_assert_eq!(ab, ba);
        prop_assert_eq!(local_hausdorff(&a, &a, &ball).unwrap(), 0.0);
        let ma: Vec<Point<2>> = a.iter().map(|p| rotate(p, angle, &shift)).collect();
        let mb: Vec<Point<2>> = b.iter().map(|p| rotate(p, angle, &shift)).collect();
        let moved = local_hausdorff(&ma, &mb, &Ball::new(shift, 100.0)).unwrap();
        prop_assert!((moved - ab).abs() <= 1e-9 * (1.0 + ab));
    }

    #[test]
    fn plane_fit_residual_is_rigid(
        pts in prop::collection::vec(pt2(), 4..40),
        angle in 0.0..6.3f64,
        shift in pt2(),
    ) {
        let a = fit_hyperplane(&pts, None).unwrap();
        let moved: Vec<Point<2>> = pts.iter().map(|p| rotate(p, angle, &shift)).collect();
        let b = fit_hyperplane(&moved, None).unwrap();
        prop_assert!((a.residual - b.residual).abs() <= 1e-3 * (1.0 + a.residual));
        for p in &pts {
            prop_assert!(a.plane.distance(p) <= a.residual + 1e-9);
        }
    }

    #[test]
    fn whitney_cubes_are_maximal_and_disjoint(
        e in prop::collection::vec((-0.9..0.9f64, -0.9..0.9f64), 1..4),
        k in prop::sample::select(vec![4.0, 8.0]),
    ) {
        let e: Vec<Point<2>> = e.into_iter().map(|(x, y)| Point::<2>::new(x, y)).collect();
        let set = PointSetComplement::new(e.clone());
        let bbox = Aabb { lo: Point::<2>::repeat(-1.0), hi: Point::<2>::repeat(1.0) };
        let mut cfg = WhitneyConfig::new(k, f64::INFINITY, bbox);
        cfg.max_level = 9;
        cfg.exec = Exec::Sequential;
        let w = decompose(&set, &cfg).unwrap();
        prop_assert_eq!(w.disjointness_violations(), 0);
        prop_assert_eq!(w.maximality_violations(&set), 0);
        for q in w.cubes.iter().take(50) {
            // The closed dilate misses E, checked by a direct scan.
            let dil = q.dilate(k);
            prop_assert!(e.iter().all(|p| (0..2).any(|i| p[i] < dil.lo[i] || p[i] > dil.hi[i])));
        }
    }

    #[test]
    fn box_counts_are_monotone_and_shift_invariant(
        k in -64i64..64,
        m in -64i64..64,
        y0 in 0.01..0.99f64,
    ) {
        let pts = sample_polyline(&[Point::<2>::new(0.0, y0), Point::<2>::new(0.7, y0 + 0.2)], 1e-4);
        let scales: Vec<f64> = (2..=7).map(|j| 0.5f64.powi(j)).collect();
        let a = box_count(&pts, 1e-4, &scales, 1).unwrap();
        // A shift by a multiple of the coarsest side moves every grid.
        let t = Point::<2>::new(k as f64 * 0.25, m as f64 * 0.25);
        let moved: Vec<Point<2>> = pts.iter().map(|p| p + t).collect();
        let b = box_count(&moved, 1e-4, &scales, 1).unwrap();
        prop_assert_eq!(&a.counts, &b.counts);
        prop_assert!(a.counts.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn power_law_slope_is_recovered(exp in 0.2..2.5f64, scale in 0.1..10.0f64) {
        let mu = PowerLaw { center: Point::<2>::zeros(), exponent: exp, scale };
        let f = dimension_fit(&tabulate(&mu, &Point::<2>::zeros(), &dyadic_radii(0.5, 8))).unwrap();
        prop_assert!((f.slope_fit - exp).abs() < 1e-9);
    }

    #[test]
    fn tent_blip_lengthens_the_face(theta in 0.0..0.3f64, n in 2u32..40) {
        let p = Profile::tent(theta, n, 1).unwrap();
        let len: f64 = p.graph_faces::<2>().iter().map(|f| f.measure()).sum();
        prop_assert!(len >= 1.0 - 1e-12);
        prop_assert!(len <= (1.0 + theta * theta).sqrt() + 1e-12);
        prop_assert!(p.max_slope() <= theta + 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn radius_law_is_one_lipschitz(eps in 0.02..0.049f64, x0 in 0.2..0.8f64) {
        let bbox = Aabb { lo: Point::<2>::new(x0 - 0.15, -0.5), hi: Point::<2>::new(x0 + 0.15, 0.5) };
        let mut cfg = EnlargeConfig::new(eps, bbox);
        cfg.family.max_level = 14;
        cfg.exec = Exec::Sequential;
        let d = enlarge(HalfSpace::<2>::upper(4.0), &[Point::<2>::zeros()], &cfg).unwrap();
        prop_assert_eq!(d.e_clearance_violations(), 0);
        for q in d.interior_balls(5, 0.0) {
            let nf = neighbor_family(&d.family, q, 25.0, None).unwrap();
            let bq = &d.family.entries[q];
            for &p in &nf.members {
                let bp = &d.family.entries[p];
                prop_assert!((bp.r - bq.r).abs() <= eps * (bp.z - bq.z).norm() + 1e-15);
            }
        }
    }

    #[test]
    fn exit_fractions_are_additive_and_monotone(seed in 0u64..1000, a in 0.0..6.0f64, w in 0.05..1.0f64) {
        let d = BallDomain::<2>::unit();
        let cfg = WosConfig { tol: Some(1e-5), exec: Exec::Sequential, ..Default::default() };
        let s = sample_exits(&d, &Point::<2>::new(0.3, -0.2), 2000, seed, &cfg).unwrap();
        let ang = |p: &Point<2>| p[1].atan2(p[0]).rem_euclid(std::f64::consts::TAU);
        let arc = |lo: f64, hi: f64| move |p: &Point<2>| { let t = ang(p); t >= lo && t < hi };
        let (whole, _) = s.fraction(|_| true);
        prop_assert_eq!(whole, 1.0);
        let (ab, _) = s.fraction(arc(0.0, a));
        let (bc, _) = s.fraction(arc(a, std::f64::consts::TAU));
        prop_assert!((ab + bc - 1.0).abs() < 1e-12);
        let xi = Point::<2>::new(a.cos(), a.sin());
        prop_assert!(s.hits(&Ball::new(xi, 0.5 * w)) <= s.hits(&Ball::new(xi, w)));
        // Same seed, same exits.
        let again = sample_exits(&d, &Point::<2>::new(0.3, -0.2), 2000, seed, &cfg).unwrap();
        prop_assert_eq!(s.exits(), again.exits());
    }
}
