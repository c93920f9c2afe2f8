//! Harmonic measure from a fixed pole: walk-on-spheres estimates, pointwise
//! dimension fits, singular candidates and maximum-principle checks.

pub mod dimension;
pub mod monotone;
pub mod wos;

use crate::geometry::{to_vec, Ball, Point};

pub use dimension::{dimension_fit, extract_singular_candidates, r_min_for_budget, DimensionFit, SingularCandidateSet};
pub use monotone::{monotonicity_check, MonotonicityReport, MonotonicityRow};
pub use wos::{estimate_omega, sample_exits, walk_rng, wos_hit, ExitSample, WosConfig};

/// Estimate of `ω(B(ξ, r))`. Synthetic estimates carry `n = 0` and zero error.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasureEstimate<const D: usize> {
    pub xi: Point<D>,
    pub r: f64,
    pub omega_hat: f64,
    pub stderr: f64,
    pub n: usize,
    pub pole: Point<D>,
    pub seed: u64,
}

impl<const D: usize> MeasureEstimate<D> {
    pub fn exact(xi: Point<D>, r: f64, mass: f64) -> Self {
        MeasureEstimate {
            xi,
            r,
            omega_hat: mass,
            stderr: 0.0,
            n: 0,
            pole: Point::<D>::zeros(),
            seed: 0,
        }
    }

    pub fn csv_header() -> String {
        let xs: Vec<String> = (0..D).map(|i| format!("xi{i}")).collect();
        format!("{},r,omega_hat,stderr,n,seed", xs.join(","))
    }

    pub fn csv_row(&self) -> String {
        let xs: Vec<String> = to_vec(&self.xi).iter().map(|v| format!("{v:.17e}")).collect();
        format!(
            "{},{:.17e},{:.17e},{:.17e},{},{}",
            xs.join(","),
            self.r,
            self.omega_hat,
            self.stderr,
            self.n,
            self.seed
        )
    }
}

pub fn estimates_csv<const D: usize>(rows: &[MeasureEstimate<D>]) -> String {
    let mut s = MeasureEstimate::<D>::csv_header();
    s.push('\n');
    for r in rows {
        s.push_str(&r.csv_row());
        s.push('\n');
    }
    s
}

/// Anything that can report the mass of a ball, with a standard error.
pub trait MeasureProvider<const D: usize>: Sync {
    fn ball_mass(&self, xi: &Point<D>, r: f64) -> (f64, f64);

    fn estimate(&self, xi: &Point<D>, r: f64) -> MeasureEstimate<D> {
        let (m, se) = self.ball_mass(xi, r);
        MeasureEstimate {
            stderr: se,
            ..MeasureEstimate::exact(*xi, r, m)
        }
    }
}

impl<const D: usize> MeasureProvider<D> for ExitSample<D> {
    fn ball_mass(&self, xi: &Point<D>, r: f64) -> (f64, f64) {
        wos::binomial(self.hits(&Ball::new(*xi, r)), self.walks)
    }

    fn estimate(&self, xi: &Point<D>, r: f64) -> MeasureEstimate<D> {
        ExitSample::estimate(self, xi, r)
    }
}

/// `mass · δ_at`.
#[derive(Clone, Debug)]
pub struct PointMass<const D: usize> {
    pub at: Point<D>,
    pub mass: f64,
}

impl<const D: usize> MeasureProvider<D> for PointMass<D> {
    fn ball_mass(&self, xi: &Point<D>, r: f64) -> (f64, f64) {
        let m = if (xi - self.at).norm() <= r { self.mass } else { 0.0 };
        (m, 0.0)
    }
}

/// Radial law `μ(B(c, ρ)) = scale · ρ^exponent` about `center`. A ball
/// `B(ξ, r)` is charged with the largest concentric ball it contains, so the
/// value is a lower bound that is exact at `ξ = center`.
#[derive(Clone, Debug)]
pub struct PowerLaw<const D: usize> {
    pub center: Point<D>,
    pub exponent: f64,
    pub scale: f64,
}

impl<const D: usize> MeasureProvider<D> for PowerLaw<D> {
    fn ball_mass(&self, xi: &Point<D>, r: f64) -> (f64, f64) {
        let rho = (r - (xi - self.center).norm()).max(0.0);
        (self.scale * rho.powf(self.exponent), 0.0)
    }
}

/// Estimates of `μ(B(ξ, r))` over the given radii.
pub fn tabulate<const D: usize, M: MeasureProvider<D> + ?Sized>(
    mu: &M,
    xi: &Point<D>,
    radii: &[f64],
) -> Vec<MeasureEstimate<D>> {
    radii.iter().map(|&r| mu.estimate(xi, r)).collect()
}

/// `r_top · 2^{-k}` for `k = 0..count`.
pub fn dyadic_radii(r_top: f64, count: usize) -> Vec<f64> {
    (0..count).map(|k| r_top * 0.5f64.powi(k as i32)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn point_mass_is_constant_on_balls_containing_it() {
        let mu = PointMass {
            at: Point::<2>::zeros(),
            mass: 1.0,
        };
        assert_eq!(mu.ball_mass(&Point::<2>::new(0.1, 0.0), 0.2).0, 1.0);
        assert_eq!(mu.ball_mass(&Point::<2>::new(0.3, 0.0), 0.2).0, 0.0);
    }

    #[test]
    fn power_law_at_center() {
        let mu = PowerLaw {
            center: Point::<2>::zeros(),
            exponent: 1.5,
            scale: 2.0,
        };
        assert!((mu.ball_mass(&Point::<2>::zeros(), 0.25).0 - 2.0 * 0.125).abs() < 1e-15);
    }

    #[test]
    fn csv_row_has_all_columns() {
        let e = MeasureEstimate::exact(Point::<3>::new(1.0, 2.0, 3.0), 0.5, 0.25);
        assert_eq!(
            e.csv_row().split(',').count(),
            MeasureEstimate::<3>::csv_header().split(',').count()
        );
    }
}
