//! Walk-on-spheres and flatness against closed forms.

use std::f64::consts::{PI, TAU};

use reifenberg::flatness::{measure_flatness, FlatnessConfig};
use reifenberg::geometry::{BallDomain, HalfSpace, Point};
use reifenberg::harmonic::{sample_exits, WosConfig};

fn cfg(tol: f64) -> WosConfig {
    WosConfig {
        tol: Some(tol),
        ..Default::default()
    }
}

/// Poisson-kernel mass of the arc `[a, b]` of the unit circle seen from `z`,
/// by midpoint quadrature.
fn poisson_arc(z: &Point<2>, a: f64, b: f64) -> f64 {
    let m = 20_000;
    let h = (b - a) / m as f64;
    (0..m)
        .map(|k| {
            let t = a + h * (k as f64 + 0.5);
            let d2 = (t.cos() - z[0]).powi(2) + (t.sin() - z[1]).powi(2);
            (1.0 - z.norm_squared()) / (TAU * d2) * h
        })
        .sum()
}

#[test]
fn disk_arcs_match_the_poisson_kernel() {
    let d = BallDomain::<2>::unit();
    let poles = [
        Point::<2>::new(0.0, 0.0),
        Point::<2>::new(0.5, 0.0),
        Point::<2>::new(-0.3, 0.6),
        Point::<2>::new(0.1, -0.8),
        Point::<2>::new(-0.7, -0.2),
    ];
    for (k, z) in poles.iter().enumerate() {
        let s = sample_exits(&d, z, 40_000, 100 + k as u64, &cfg(1e-6)).unwrap();
        for (a, b) in [(0.0, 1.0), (2.0, 3.5), (4.0, 6.0)] {
            let (p, se) = s.fraction(|w| {
                let t = w[1].atan2(w[0]).rem_euclid(TAU);
                t >= a && t < b
            });
            let exact = poisson_arc(z, a, b);
            assert!(
                (p - exact).abs() < 4.0 * se + 1e-3,
                "pole {z:?} arc [{a}, {b}]: {p} vs {exact}"
            );
        }
    }
}

#[test]
fn half_space_disk_mass_in_three_dimensions() {
    let h = HalfSpace::<3>::upper(8.0);
    let s = sample_exits(&h, &Point::<3>::new(0.0, 0.0, 1.0), 20_000, 9, &cfg(1e-5)).unwrap();
    for r in [0.5, 1.0, 3.0] {
        let (p, se) = s.fraction(|w| w[0].hypot(w[1]) <= r);
        let exact = 1.0 - 1.0 / (r * r + 1.0f64).sqrt();
        assert!((p - exact).abs() < 4.0 * se + 1e-3, "r = {r}: {p} vs {exact}");
    }
}

#[test]
fn ball_from_center_is_uniform_in_three_dimensions() {
    let d = BallDomain::<3>::unit();
    let s = sample_exits(&d, &Point::<3>::zeros(), 20_000, 4, &cfg(1e-6)).unwrap();
    for beta in [0.3f64, 1.0, 2.0] {
        let (p, se) = s.fraction(|w| w[2] >= beta.cos());
        let exact = 0.5 * (1.0 - beta.cos());
        assert!((p - exact).abs() < 4.0 * se + 1e-3);
    }
}

#[test]
fn stopping_tolerance_bounds_the_bias() {
    // Coarser tolerances shift exits by at most `tol`: every exit lies on the
    // circle within the bias bound.
    let d = BallDomain::<2>::unit();
    for tol in [1e-2, 1e-4] {
        let s = sample_exits(&d, &Point::<2>::new(0.2, 0.2), 5_000, 3, &cfg(tol)).unwrap();
        assert!(s.bias_bound >= tol);
        assert!(s.exits().iter().all(|p| (p.norm() - 1.0).abs() <= 1e-12));
        let (p, se) = s.fraction(|w| w[0] > 0.0);
        let exact = poisson_arc(&Point::<2>::new(0.2, 0.2), -PI / 2.0, PI / 2.0);
        assert!((p - exact).abs() < 4.0 * se + tol);
    }
}

#[test]
fn circle_flatness_follows_the_sagitta() {
    let d = BallDomain::<2>::unit();
    let x = Point::<2>::new(0.0, 1.0);
    let fc = FlatnessConfig::default();
    let mut last = f64::INFINITY;
    for r in [0.4, 0.2, 0.1, 0.05] {
        let rep = measure_flatness(&d, &x, r, &fc).unwrap();
        // Normalized sagitta of the arc in `B(x, r)`.
        let sag = (1.0 - (1.0 - r * r).sqrt()) / r;
        assert!(rep.delta <= sag + 1e-3, "r = {r}: {} vs {sag}", rep.delta);
        assert!(rep.delta >= 0.25 * sag, "r = {r}: {} vs {sag}", rep.delta);
        assert!(rep.delta < last);
        last = rep.delta;
        assert!(rep.separation_ok);
    }
}

#[test]
fn whitney_half_plane_oracle() {
    use reifenberg::geometry::domain::Interior;
    use reifenberg::geometry::Aabb;
    use reifenberg::whitney::{decompose, WhitneyConfig};
    let h = HalfSpace::<2>::upper(8.0);
    let bbox = Aabb {
        lo: Point::<2>::new(-4.0, 0.0),
        hi: Point::<2>::new(4.0, 8.0),
    };
    let mut c = WhitneyConfig::new(4.0, f64::INFINITY, bbox);
    c.max_level = 6;
    let w = decompose(&Interior(&h), &c).unwrap();
    // With K = 4 the dilate of `Q` reaches down to `y - 3ℓ/2`, so `Q` is
    // admissible iff `y > 3ℓ/2`; maximal iff its parent's bottom is `≤ 3ℓ`.
    for q in &w.cubes {
        let (y, l) = (q.lo()[1], q.side());
        assert!(y > 1.5 * l, "{q:?}");
        if q.level > w.top_level {
            assert!(q.parent().lo()[1] <= 3.0 * l, "{q:?}");
        }
    }
}
