//! Hyperplane fitting and the two-plane proximity estimate.

use super::linalg::{complete_basis, dist_to_affine_span, symmetric_eigen};
use super::sampling::halton;
use super::{Hyperplane, Point};
use crate::error::{Error, Result};
use nalgebra::SMatrix;
use serde::Serialize;

#[derive(Clone, Copy, Debug)]
pub struct PlaneFit<const D: usize> {
    pub plane: Hyperplane<D>,
    /// Maximal orthogonal deviation of the points from the plane.
    pub residual: f64,
    /// The points span fewer than `D - 1` dimensions.
    pub degenerate: bool,
}

fn canonical_sign<const D: usize>(n: Point<D>) -> Point<D> {
    for i in (0..D).rev() {
        if n[i].abs() > 1e-12 {
            return if n[i] < 0.0 { -n } else { n };
        }
    }
    n
}

/// Sup-norm objective for a unit normal: `(residual, anchor)`.
fn minimax_for<const D: usize>(points: &[Point<D>], anchor: Option<&Point<D>>, n: &Point<D>) -> (f64, Point<D>) {
    match anchor {
        Some(a) => {
            let r = points.iter().map(|p| (p - a).dot(n).abs()).fold(0.0, f64::max);
            (r, *a)
        }
        None => {
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for p in points {
                let t = p.dot(n);
                lo = lo.min(t);
                hi = hi.max(t);
            }
            let o = points[0];
            let mid = 0.5 * (lo + hi);
            ((hi - lo) * 0.5, o + n * (mid - o.dot(n)))
        }
    }
}

/// Least-squares seed followed by a shrinking rotation search minimizing the
/// maximal orthogonal deviation. With an anchor the plane passes through it.
pub fn fit_hyperplane<const D: usize>(points: &[Point<D>], anchor: Option<Point<D>>) -> Result<PlaneFit<D>> {
    if points.len() < D {
        return Err(Error::InvalidInput(format!(
            "need at least {D} points to fit a hyperplane, got {}",
            points.len()
        )));
    }
    let center = anchor.unwrap_or_else(|| points.iter().sum::<Point<D>>() / points.len() as f64);
    let mut cov = SMatrix::<f64, D, D>::zeros();
    for p in points {
        let v = p - center;
        cov += v * v.transpose();
    }
    let scale = points.iter().map(|p| (p - center).norm()).fold(0.0, f64::max);
    if scale <= 1e-300 {
        return Err(Error::Degenerate("all points coincide".into()));
    }
    let (vals, vecs) = symmetric_eigen(&cov);
    let degenerate = D >= 3 && vals[1] <= 1e-20 * vals[D - 1].max(1e-300);
    let n0 = vecs[0];
    let tangents = complete_basis(&n0);
    let normal_at = |alpha: &[f64]| -> Point<D> {
        let mut n = n0;
        for (a, t) in alpha.iter().zip(&tangents) {
            n += t * *a;
        }
        n / n.norm()
    };
    let anchor_ref = anchor.as_ref();
    let mut alpha = vec![0.0; D - 1];
    let mut best = minimax_for(points, anchor_ref, &n0).0;
    let mut step = 0.05;
    let grid = 2i32;
    let mut iters = 0;
    while step > 1e-10 && iters < 400 && best > 0.0 {
        iters += 1;
        let mut improved: Option<(Vec<f64>, f64)> = None;
        let count = (2 * grid + 1).pow((D - 1) as u32);
        for code in 0..count {
            let mut c = code;
            let mut trial = alpha.clone();
            for a in trial.iter_mut() {
                let k = c % (2 * grid + 1) - grid;
                c /= 2 * grid + 1;
                *a += k as f64 * step;
            }
            let r = minimax_for(points, anchor_ref, &normal_at(&trial)).0;
            if r < improved.as_ref().map(|x| x.1).unwrap_or(best) {
                improved = Some((trial, r));
            }
        }
        match improved {
            Some((a, r)) if r < best => {
                alpha = a;
                best = r;
            }
            _ => step *= 0.5,
        }
    }
    let n = canonical_sign(normal_at(&alpha));
    let (residual, a) = minimax_for(points, anchor_ref, &n);
    Ok(PlaneFit {
        plane: Hyperplane::new(a, n),
        residual,
        degenerate,
    })
}

pub fn diameter<const D: usize>(xs: &[Point<D>]) -> f64 {
    let mut d: f64 = 0.0;
    for (i, a) in xs.iter().enumerate() {
        for b in &xs[i + 1..] {
            d = d.max((a - b).norm());
        }
    }
    d
}

/// `η(X) = min_i dist(x_i, span(X \ x_i)) / diam X` with affine spans.
pub fn simplex_eta<const D: usize>(xs: &[Point<D>]) -> f64 {
    let diam = diameter(xs);
    if diam == 0.0 {
        return 0.0;
    }
    (0..xs.len())
        .map(|i| {
            let rest: Vec<Point<D>> = xs
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, p)| *p)
                .collect();
            dist_to_affine_span(&xs[i], &rest)
        })
        .fold(f64::INFINITY, f64::min)
        / diam
}

#[derive(Clone, Debug, Serialize)]
pub struct ProximityReport {
    pub eta: f64,
    pub diam: f64,
    /// Largest `dist(y, P1) / (θ((2d/η) dist(y, X) + diam X))` over sampled `y ∈ P2`.
    pub worst_ratio: f64,
    pub worst_y: Vec<f64>,
    pub samples: usize,
    pub holds: bool,
}

/// Checks the hypotheses on `X`, then evaluates both sides of the proximity
/// inequality at `n_samples` quasi-random points of `P2` near `X` together with
/// the projections of `X` onto `P2`.
pub fn plane_proximity_bound<const D: usize>(
    p1: &Hyperplane<D>,
    p2: &Hyperplane<D>,
    xs: &[Point<D>],
    theta: f64,
    n_samples: usize,
) -> Result<ProximityReport> {
    if xs.len() != D {
        return Err(Error::InvalidInput(format!("X must have {D} points, got {}", xs.len())));
    }
    let d = (D - 1) as f64;
    let diam = diameter(xs);
    let eta = simplex_eta(xs);
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::HypothesisViolation {
            which: "a",
            detail: format!("eta = {eta} not in (0, 1)"),
        });
    }
    if theta >= eta / (2.0 * (d + 1.0)) {
        return Err(Error::HypothesisViolation {
            which: "theta",
            detail: format!("theta = {theta} >= eta/(2(d+1)) = {}", eta / (2.0 * (d + 1.0))),
        });
    }
    for (i, x) in xs.iter().enumerate() {
        for (j, p) in [p1, p2].iter().enumerate() {
            if p.distance(x) >= theta * diam {
                return Err(Error::HypothesisViolation {
                    which: "b",
                    detail: format!(
                        "dist(x_{i}, P_{}) = {} >= theta diam X = {}",
                        j + 1,
                        p.distance(x),
                        theta * diam
                    ),
                });
            }
        }
    }
    let centroid: Point<D> = xs.iter().sum::<Point<D>>() / D as f64;
    let c = p2.project(&centroid);
    let tang = p2.tangent_basis();
    let radius = 4.0 * diam;
    let mut ys: Vec<Point<D>> = xs.iter().map(|x| p2.project(x)).collect();
    for k in 0..n_samples as u64 {
        let u = halton(k, D - 1);
        let mut y = c;
        for (ui, t) in u.iter().zip(&tang) {
            y += t * ((2.0 * ui - 1.0) * radius);
        }
        ys.push(y);
    }
    let mut worst = 0.0f64;
    let mut worst_y = ys[0];
    for y in &ys {
        let dx = xs.iter().map(|x| (y - x).norm()).fold(f64::INFINITY, f64::min);
        let rhs = theta * ((2.0 * d / eta) * dx + diam);
        let ratio = p1.distance(y) / rhs;
        if ratio > worst {
            worst = ratio;
            worst_y = *y;
        }
    }
    Ok(ProximityReport {
        eta,
        diam,
        worst_ratio: worst,
        worst_y: worst_y.iter().copied().collect(),
        samples: ys.len(),
        holds: worst <= 1.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn coplanar_points_fit_exactly() {
        let pts: Vec<Point<3>> = (0..20)
            .map(|i| Point::<3>::new((i % 5) as f64, (i / 5) as f64 * 0.7, 0.0))
            .collect();
        let f = fit_hyperplane(&pts, None).unwrap();
        assert!(f.residual < 1e-12);
        assert!((f.plane.normal - Point::<3>::new(0.0, 0.0, 1.0)).norm() < 1e-9);
    }

    #[test]
    fn anchored_offset_plane() {
        let pts: Vec<Point<2>> = (0..11).map(|i| Point::<2>::new(i as f64 / 10.0 - 0.5, 0.1)).collect();
        let f = fit_hyperplane(&pts, Some(Point::<2>::zeros())).unwrap();
        assert!((f.residual - 0.1).abs() < 1e-9);
    }

    #[test]
    fn minimax_matches_fine_grid_oracle() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let pts: Vec<Point<2>> = (0..30)
            .map(|_| {
                let x = rng.random::<f64>() * 2.0 - 1.0;
                Point::<2>::new(x, 0.3 * x + 0.05 * (rng.random::<f64>() - 0.5))
            })
            .collect();
        let f = fit_hyperplane(&pts, None).unwrap();
        let step = 1e-4;
        let mut oracle = f64::INFINITY;
        let mut a = 0.0;
        while a < std::f64::consts::PI {
            let n = Point::<2>::new(a.cos(), a.sin());
            let t: Vec<f64> = pts.iter().map(|p| p.dot(&n)).collect();
            let lo = t.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = t.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            oracle = oracle.min(0.5 * (hi - lo));
            a += step;
        }
        assert!(f.residual <= oracle + 1e-9);
        assert!(oracle - f.residual <= 2.0 * step);
    }

    #[test]
    fn eta_of_standard_simplex_is_rigid_invariant() {
        let xs = [
            Point::<3>::new(0.0, 0.0, 0.0),
            Point::<3>::new(1.0, 0.0, 0.0),
            Point::<3>::new(0.0, 1.0, 0.0),
        ];
        let e = simplex_eta(&xs);
        let rot = nalgebra::Rotation3::from_euler_angles(0.3, -0.7, 1.1);
        let moved: Vec<Point<3>> = xs
            .iter()
            .map(|p| rot * p * 2.5 + Point::<3>::new(1.0, 2.0, 3.0))
            .collect();
        assert!((simplex_eta(&moved) - e).abs() < 1e-12);
        assert!((e - 0.5).abs() < 1e-12);
    }

    #[test]
    fn identical_planes_pass() {
        let p = Hyperplane::new(Point::<2>::zeros(), Point::<2>::new(0.0, 1.0));
        let xs = [Point::<2>::new(0.0, 0.0), Point::<2>::new(1.0, 0.0)];
        // eta is 1 for two points, outside the open interval.
        assert!(matches!(
            plane_proximity_bound(&p, &p, &xs, 0.1, 10),
            Err(Error::HypothesisViolation { which: "a", .. })
        ));
        let xs3 = [
            Point::<3>::new(0.0, 0.0, 0.0),
            Point::<3>::new(1.0, 0.0, 0.0),
            Point::<3>::new(0.0, 1.0, 0.0),
        ];
        let p3 = Hyperplane::new(Point::<3>::zeros(), Point::<3>::new(0.0, 0.0, 1.0));
        let r = plane_proximity_bound(&p3, &p3, &xs3, 0.05, 100).unwrap();
        assert_eq!(r.worst_ratio, 0.0);
        assert!(r.holds);
    }
}
