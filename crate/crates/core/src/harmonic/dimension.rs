//! Pointwise dimension fits and singular-candidate extraction.

use log::{info, warn};
use serde::Serialize;

use super::{MeasureEstimate, MeasureProvider};
use crate::error::{Error, Result};
use crate::geometry::{to_vec, Point};
use crate::par::{self, Exec};

#[derive(Clone, Debug, Serialize)]
pub struct DimensionFit {
    pub xi: Vec<f64>,
    /// Radii used, increasing.
    pub radii: Vec<f64>,
    /// Two-point log-slopes between consecutive radii.
    pub slopes: Vec<f64>,
    pub lower_dim: f64,
    pub upper_dim: f64,
    pub slope_fit: f64,
    /// Half-width of the 95% band on `slope_fit` from the propagated errors.
    pub ci: f64,
    /// Radii dropped for zero estimated mass.
    pub excluded: Vec<f64>,
}

/// Log-log fit of `ω̂(B(ξ, r))` against `r` for the estimates of one point.
pub fn dimension_fit<const D: usize>(estimates: &[MeasureEstimate<D>]) -> Result<DimensionFit> {
    let mut rows: Vec<&MeasureEstimate<D>> = estimates.iter().collect();
    rows.sort_by(|a, b| a.r.total_cmp(&b.r));
    let excluded: Vec<f64> = rows.iter().filter(|e| e.omega_hat <= 0.0).map(|e| e.r).collect();
    for r in &excluded {
        warn!("dimension fit: zero mass at r = {r:.3e}, radius excluded");
    }
    rows.retain(|e| e.omega_hat > 0.0);
    if rows.len() < 4 {
        return Err(match excluded.first() {
            Some(&r) => Error::ZeroMass { r },
            None => Error::InvalidInput(format!("need at least 4 radii, got {}", rows.len())),
        });
    }
    let x: Vec<f64> = rows.iter().map(|e| e.r.ln()).collect();
    let y: Vec<f64> = rows.iter().map(|e| e.omega_hat.ln()).collect();
    let slopes: Vec<f64> = (1..x.len()).map(|i| (y[i] - y[i - 1]) / (x[i] - x[i - 1])).collect();
    let n = x.len() as f64;
    let xm = x.iter().sum::<f64>() / n;
    let ym = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - xm).powi(2)).sum();
    let slope_fit = x.iter().zip(&y).map(|(a, b)| (a - xm) * (b - ym)).sum::<f64>() / sxx;
    let var: f64 = rows
        .iter()
        .zip(&x)
        .map(|(e, xi)| ((xi - xm) / sxx).powi(2) * (e.stderr / e.omega_hat).powi(2))
        .sum();
    Ok(DimensionFit {
        xi: to_vec(&rows[0].xi),
        radii: rows.iter().map(|e| e.r).collect(),
        lower_dim: slopes.iter().cloned().fold(f64::INFINITY, f64::min),
        upper_dim: slopes.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        slopes,
        slope_fit,
        ci: 1.96 * var.sqrt(),
        excluded,
    })
}

/// Probes whose lower-confidence mass beats `r^{d-α}` at every dyadic radius
/// `r0 2^{-k} ≥ r_min`.
#[derive(Clone, Debug, Serialize)]
pub struct SingularCandidateSet {
    pub points: Vec<Vec<f64>>,
    pub alpha: f64,
    pub r0: f64,
    pub r_min: f64,
    pub radii: Vec<f64>,
    /// Per kept point: `min_r (ω̂ - z·stderr) / r^{d-α}`.
    pub certificate: Vec<f64>,
    pub probes: usize,
}

/// Smallest dyadic radius below `r0` at which `n` walks still expect 100 hits
/// in a ball of mass `r^{d-α}`.
pub fn r_min_for_budget(n: usize, d: usize, alpha: f64, r0: f64) -> f64 {
    let floor = (100.0 / n as f64).powf(1.0 / (d as f64 - alpha));
    let mut r = r0;
    while r * 0.5 >= floor {
        r *= 0.5;
    }
    r
}

pub fn extract_singular_candidates<const D: usize, M: MeasureProvider<D> + ?Sized>(
    mu: &M,
    probes: &[Point<D>],
    alpha: f64,
    r0: f64,
    r_min: f64,
    z: f64,
    exec: Exec,
) -> Result<SingularCandidateSet> {
    let d = (D - 1) as f64;
    if !(alpha > 0.0 && alpha < d) {
        return Err(Error::InvalidInput(format!("alpha = {alpha} must lie in (0, {d})")));
    }
    if !(r0 > 0.0 && r0 <= 1.0 && r_min > 0.0 && r_min <= r0) {
        return Err(Error::InvalidInput(format!(
            "need 0 < r_min <= r0 <= 1, got {r_min}, {r0}"
        )));
    }
    let mut radii = vec![r0];
    while radii.last().unwrap() * 0.5 >= r_min * (1.0 - 1e-12) {
        radii.push(radii.last().unwrap() * 0.5);
    }
    let certs = par::map_slice(exec, probes, |xi| {
        radii
            .iter()
            .map(|&r| {
                let (m, se) = mu.ball_mass(xi, r);
                (m - z * se) / r.powf(d - alpha)
            })
            .fold(f64::INFINITY, f64::min)
    });
    let mut out = SingularCandidateSet {
        points: Vec::new(),
        alpha,
        r0,
        r_min,
        radii,
        certificate: Vec::new(),
        probes: probes.len(),
    };
    for (p, c) in probes.iter().zip(certs) {
        if c > 1.0 {
            out.points.push(to_vec(p));
            out.certificate.push(c);
        }
    }
    if out.points.is_empty() {
        info!(
            "singular candidates: none of {} probes qualify at alpha = {alpha}",
            probes.len()
        );
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harmonic::{dyadic_radii, tabulate, PointMass, PowerLaw};

    #[test]
    fn power_law_slope_is_recovered() {
        let mu = PowerLaw {
            center: Point::<2>::zeros(),
            exponent: 1.5,
            scale: 1.0,
        };
        let est = tabulate(&mu, &Point::<2>::zeros(), &dyadic_radii(0.5, 8));
        let f = dimension_fit(&est).unwrap();
        assert!((f.slope_fit - 1.5).abs() < 1e-12);
        assert!((f.lower_dim - 1.5).abs() < 1e-12 && (f.upper_dim - 1.5).abs() < 1e-12);
    }

    #[test]
    fn point_mass_has_zero_slope() {
        let mu = PointMass {
            at: Point::<2>::zeros(),
            mass: 0.3,
        };
        let f = dimension_fit(&tabulate(&mu, &Point::<2>::zeros(), &dyadic_radii(0.5, 6))).unwrap();
        assert_eq!(f.slope_fit, 0.0);
    }

    #[test]
    fn zero_mass_radii_are_excluded() {
        let mut est = tabulate(
            &PowerLaw {
                center: Point::<2>::zeros(),
                exponent: 1.0,
                scale: 1.0,
            },
            &Point::<2>::zeros(),
            &dyadic_radii(0.5, 5),
        );
        est[4].omega_hat = 0.0;
        let f = dimension_fit(&est).unwrap();
        assert_eq!(f.excluded.len(), 1);
        est[3].omega_hat = 0.0;
        assert!(matches!(dimension_fit(&est), Err(Error::ZeroMass { .. })));
    }

    #[test]
    fn atom_is_always_a_candidate() {
        let mu = PointMass {
            at: Point::<2>::zeros(),
            mass: 1.0,
        };
        let probes = [Point::<2>::zeros(), Point::<2>::new(0.7, 0.0)];
        for alpha in [0.1, 0.5, 0.9] {
            let s = extract_singular_candidates(&mu, &probes, alpha, 0.5, 1e-4, 3.0, Exec::Sequential).unwrap();
            assert_eq!(s.points, vec![vec![0.0, 0.0]]);
        }
    }

    #[test]
    fn budget_radius_is_dyadic() {
        let r = r_min_for_budget(1_000_000, 1, 0.5, 0.5);
        assert!(r >= 1e-8 && (r / 0.5).log2().fract().abs() < 1e-12);
        assert!(1e6 * r.sqrt() >= 100.0);
    }
}
