//! Maximum-principle check `ω_{Ω⁺}(A) ≥ ω_Ω(A)` for sets on the shared boundary.

use log::warn;
use serde::Serialize;

use super::wos::{sample_exits, WosConfig};
use crate::error::Result;
use crate::geometry::{to_vec, Ball, Domain, Point};

#[derive(Clone, Debug, Serialize)]
pub struct MonotonicityRow {
    pub set: usize,
    pub centers: Vec<Vec<f64>>,
    pub radii: Vec<f64>,
    pub omega_base: f64,
    pub stderr_base: f64,
    pub omega_plus: f64,
    pub stderr_plus: f64,
    /// `(ω̂_{Ω⁺} - ω̂_Ω) / combined stderr`.
    pub z: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct MonotonicityReport {
    pub rows: Vec<MonotonicityRow>,
    pub failed: Vec<usize>,
    pub walks: usize,
    pub seed_base: u64,
    pub seed_plus: u64,
    pub bias_base: f64,
    pub bias_plus: f64,
}

impl MonotonicityReport {
    pub fn passes(&self) -> bool {
        self.failed.is_empty()
    }
}

/// Second seed for the enlarged domain, so the two runs are independent.
pub fn derived_seed(seed: u64) -> u64 {
    let mut z = seed.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Estimates both measures of each `A = (⋃ balls) ∩ shared` with independent
/// seeds and flags sets where `ω̂_plus < ω̂_base - 3σ`. `shared` picks out
/// exit points on `∂Ω ∩ ∂Ω⁺`.
#[allow(clippy::too_many_arguments)]
pub fn monotonicity_check<const D: usize, B, P, S>(
    base: &B,
    plus: &P,
    pole: &Point<D>,
    sets: &[Vec<Ball<D>>],
    shared: S,
    n: usize,
    seed: u64,
    cfg: &WosConfig,
) -> Result<MonotonicityReport>
where
    B: Domain<D> + ?Sized,
    P: Domain<D> + ?Sized,
    S: Fn(&Point<D>) -> bool + Sync,
{
    let seed_plus = derived_seed(seed);
    let sb = sample_exits(base, pole, n, seed, cfg)?;
    let sp = sample_exits(plus, pole, n, seed_plus, cfg)?;
    let mut rows = Vec::with_capacity(sets.len());
    let mut failed = Vec::new();
    for (k, set) in sets.iter().enumerate() {
        let inside = |w: &Point<D>| shared(w) && set.iter().any(|b| b.contains_closed(w));
        let (pb, sb_err) = sb.fraction(inside);
        let (pp, sp_err) = sp.fraction(inside);
        let sigma = (sb_err * sb_err + sp_err * sp_err).sqrt();
        let pass = pp >= pb - 3.0 * sigma;
        if !pass {
            warn!("monotonicity: set {k} has {pp:.4e} < {pb:.4e} - 3 sigma");
            failed.push(k);
        }
        rows.push(MonotonicityRow {
            set: k,
            centers: set.iter().map(|b| to_vec(&b.center)).collect(),
            radii: set.iter().map(|b| b.radius).collect(),
            omega_base: pb,
            stderr_base: sb_err,
            omega_plus: pp,
            stderr_plus: sp_err,
            z: if sigma > 0.0 { (pp - pb) / sigma } else { 0.0 },
            pass,
        });
    }
    Ok(MonotonicityReport {
        rows,
        failed,
        walks: n,
        seed_base: seed,
        seed_plus,
        bias_base: sb.bias_bound,
        bias_plus: sp.bias_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Aabb, BallDomain};

    #[test]
    fn same_domain_agrees_within_noise() {
        let d = BallDomain::<2>::unit();
        let sets: Vec<Vec<Ball<2>>> = (0..4)
            .map(|k| {
                let a = 1.3 * k as f64;
                vec![Ball::new(Point::<2>::new(a.cos(), a.sin()), 0.3)]
            })
            .collect();
        let cfg = WosConfig {
            tol: Some(1e-5),
            ..Default::default()
        };
        let rep = monotonicity_check(&d, &d, &Point::<2>::new(0.2, 0.1), &sets, |_| true, 20_000, 5, &cfg).unwrap();
        assert!(rep.passes());
        for r in &rep.rows {
            assert!(r.z.abs() < 4.0);
        }
    }

    /// Unit disk with a bump: the union with a small ball centred on the circle.
    struct Bumped {
        disk: BallDomain<2>,
        bump: Ball<2>,
    }

    impl Domain<2> for Bumped {
        fn contains(&self, p: &Point<2>) -> bool {
            self.disk.contains(p) || self.bump.contains(p)
        }
        fn nearest_boundary(&self, p: &Point<2>) -> (Point<2>, f64) {
            let (a, da) = self.disk.nearest_boundary(p);
            let v = p - self.bump.center;
            let b = self.bump.center + v * (self.bump.radius / v.norm().max(1e-300));
            let db = (p - b).norm();
            let a_ok = !self.bump.contains(&a);
            let b_ok = !self.disk.contains(&b);
            match (a_ok, b_ok) {
                (true, true) if da <= db => (a, da),
                (true, false) => (a, da),
                (_, true) => (b, db),
                _ => (a, da.min(db)),
            }
        }
        fn dist_lower(&self, p: &Point<2>) -> f64 {
            if !self.contains(p) {
                return 0.0;
            }
            let a = self.disk.dist_lower(p);
            let b = (self.bump.radius - (p - self.bump.center).norm()).max(0.0);
            a.max(b)
        }
        fn boundary_meets_box(&self, _b: &Aabb<2>) -> bool {
            true
        }
        fn boundary_samples(&self, _w: &Aabb<2>, _h: f64) -> Vec<Point<2>> {
            Vec::new()
        }
        fn window(&self) -> Aabb<2> {
            self.disk.window()
        }
    }

    #[test]
    fn bump_does_not_decrease_far_arc() {
        let plus = Bumped {
            disk: BallDomain::unit(),
            bump: Ball::new(Point::<2>::new(1.0, 0.0), 0.3),
        };
        let base = BallDomain::<2>::unit();
        let a = vec![Ball::new(Point::<2>::new(0.0, 1.0), 0.5)];
        let cfg = WosConfig {
            tol: Some(1e-5),
            ..Default::default()
        };
        let shared = |w: &Point<2>| (w.norm() - 1.0).abs() < 1e-9 && !plus.bump.contains(w);
        let rep = monotonicity_check(&base, &plus, &Point::<2>::new(-0.2, 0.0), &[a], shared, 40_000, 9, &cfg).unwrap();
        assert!(rep.passes(), "{:?}", rep.rows);
    }
}
