//! Numerical check of the counting argument behind local finiteness of
//! `H^d|_{∂Ω_ε⁺}`: the patch areas in `B(ξ, r)` against `r^α μ(B(ξ, Cr))`.

use std::collections::BTreeMap;

use log::info;
use serde::Serialize;

use super::area::patch_area;
use super::boxcount::ls_slope;
use crate::enlargement::EnlargedDomain;
use crate::error::{Error, Result};
use crate::geometry::{to_vec, Ball, Domain, Point};
use crate::harmonic::MeasureProvider;
use crate::par::{self, Exec};

#[derive(Clone, Copy, Debug)]
pub struct Thm31Config {
    /// Quadrature cells along a patch diameter.
    pub area_resolution: usize,
    pub exec: Exec,
}

impl Default for Thm31Config {
    fn default() -> Self {
        Thm31Config {
            area_resolution: 32,
            exec: Exec::Parallel,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ScaleRow {
    /// `ℓ(Q) = 2^{-n}`.
    pub n: i32,
    pub count: usize,
    /// Largest number of balls `B^Q`, `Q ∈ C_n`, containing one point of `E`.
    pub overlap: usize,
    /// `Σ_{Q ∈ C_n} H^d(Γ_Q ∩ B(ξ, r))`.
    pub lhs_n: f64,
    /// `Σ_{Q ∈ C_n} H^d(Γ_Q)`.
    pub area_n: f64,
    /// `Σ_{Q ∈ C_n} μ(B^Q)`.
    pub mu_n: f64,
    /// `area_n / (c_μ^{-1} 2^{-nα} mu_n)`.
    pub chain_ratio: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Thm31Report {
    pub xi: Vec<f64>,
    pub r: f64,
    /// 1 when `dist(ξ, E) ≥ 2r`, else 2.
    pub case: u8,
    pub dist_e: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    /// `max_Q (|ξ_Q - ξ| + ℓ(Q)) / r` for this radius.
    pub c_measured: f64,
    pub per_n: Vec<ScaleRow>,
    /// Max of the per-scale overlaps.
    pub n1: usize,
    pub cubes: usize,
    pub level_min: i32,
    pub level_max: i32,
    /// Largest level spread allowed by the distance range of cubes whose
    /// patches can reach `B(ξ, r)`; only meaningful in case 1.
    pub level_spread_bound: i32,
    /// Range of `H^d(Γ_Q) / (ε^{-d} ℓ(Q)^d)`.
    pub area_ratio_min: f64,
    pub area_ratio_max: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Thm31Sweep {
    pub alpha: f64,
    pub c_mu: f64,
    /// The `C` of `B(ξ, Cr)`: the largest measured value over the sweep, at least 1.
    pub c_used: f64,
    pub reports: Vec<Thm31Report>,
    /// Least-squares slope of `log(LHS/RHS)` against `log(1/r)`.
    pub slope: f64,
}

/// Runs the verifier at every radius in `radii` around `xi`. The patches are
/// built once for the largest radius.
#[allow(clippy::too_many_arguments)]
pub fn theorem31_sweep<const D: usize, B: Domain<D>, M: MeasureProvider<D> + ?Sized>(
    dom: &EnlargedDomain<D, B>,
    mu: &M,
    xi: &Point<D>,
    radii: &[f64],
    alpha: f64,
    c_mu: f64,
    cfg: &Thm31Config,
) -> Result<Thm31Sweep> {
    if radii.is_empty() || radii.iter().any(|r| !(*r > 0.0)) {
        return Err(Error::InvalidInput("radii must be positive".into()));
    }
    if !(alpha > 0.0 && c_mu > 0.0) {
        return Err(Error::InvalidInput(format!(
            "need alpha, c_mu > 0, got {alpha}, {c_mu}"
        )));
    }
    if dom.e.is_empty() {
        return Err(Error::InvalidInput("E is empty".into()));
    }
    let d = (D - 1) as i32;
    let rmax = radii.iter().cloned().fold(0.0, f64::max);
    let fam = &dom.family;
    let near: Vec<usize> = (0..fam.len())
        .filter(|&q| (fam.entries[q].z - xi).norm() <= rmax + 10.0 * fam.entries[q].r)
        .collect();
    info!("theorem 3.1 sweep: {} candidate patches", near.len());
    let patches = par::map_slice(cfg.exec, &near, |&q| dom.patch(q));
    let patches = patches.into_iter().collect::<Result<Vec<_>>>()?;
    let areas: Vec<f64> = par::map_slice(cfg.exec, &patches, |p| patch_area(p, cfg.area_resolution, None));
    let xi_q: Vec<Point<D>> = par::map_slice(cfg.exec, &near, |&q| {
        let b = fam.entries[q].cube.aabb();
        *dom.e.iter().min_by(|a, c| b.dist2(a).total_cmp(&b.dist2(c))).unwrap()
    });
    let dist_e = dom.e.iter().map(|e| (e - xi).norm()).fold(f64::INFINITY, f64::min);

    let mut raw = Vec::new();
    for &r in radii {
        let ball = Ball::new(*xi, r);
        let clipped: Vec<f64> = par::map_slice(cfg.exec, &patches, |p| patch_area(p, cfg.area_resolution, Some(&ball)));
        let members: Vec<usize> = (0..near.len()).filter(|&k| clipped[k] > 0.0).collect();
        let c_measured = members
            .iter()
            .map(|&k| ((xi_q[k] - xi).norm() + fam.entries[near[k]].cube.side()) / r)
            .fold(0.0, f64::max);
        raw.push((r, clipped, members, c_measured));
    }
    let c_used = raw.iter().map(|x| x.3).fold(1.0, f64::max) * (1.0 + 1e-12);

    let mut reports = Vec::new();
    for (r, clipped, members, c_measured) in raw {
        let mut by_n: BTreeMap<i32, Vec<usize>> = BTreeMap::new();
        for &k in &members {
            by_n.entry(fam.entries[near[k]].cube.level).or_default().push(k);
        }
        let reach = members
            .iter()
            .map(|&k| (xi_q[k] - xi).norm() + fam.entries[near[k]].cube.side())
            .fold(0.0, f64::max);
        let zetas: Vec<&Point<D>> = dom.e.iter().filter(|e| (*e - xi).norm() <= reach).collect();
        let per_n: Vec<ScaleRow> = by_n
            .iter()
            .map(|(&n, ks)| {
                let side = 0.5f64.powi(n);
                let overlap = zetas
                    .iter()
                    .map(|z| ks.iter().filter(|&&k| (xi_q[k] - *z).norm() < side).count())
                    .max()
                    .unwrap_or(0);
                let area_n: f64 = ks.iter().map(|&k| areas[k]).sum();
                let mu_n: f64 = ks.iter().map(|&k| mu.ball_mass(&xi_q[k], side).0).sum();
                ScaleRow {
                    n,
                    count: ks.len(),
                    overlap,
                    lhs_n: ks.iter().map(|&k| clipped[k]).sum(),
                    area_n,
                    mu_n,
                    chain_ratio: area_n * c_mu / (side.powf(alpha) * mu_n),
                }
            })
            .collect();
        let eps = fam.epsilon;
        let area_ratio = |k: usize| areas[k] / (fam.entries[near[k]].cube.side() / eps).powi(d);
        let lhs: f64 = members.iter().map(|&k| clipped[k]).sum();
        let rhs = r.powf(alpha) * mu.ball_mass(xi, c_used * r).0;
        reports.push(Thm31Report {
            xi: to_vec(xi),
            r,
            case: if dist_e >= 2.0 * r { 1 } else { 2 },
            dist_e,
            lhs,
            rhs,
            ratio: lhs / rhs,
            c_measured,
            n1: per_n.iter().map(|s| s.overlap).max().unwrap_or(0),
            per_n,
            cubes: members.len(),
            level_min: by_n.keys().next().copied().unwrap_or(0),
            level_max: by_n.keys().next_back().copied().unwrap_or(0),
            level_spread_bound: spread_bound(dist_e, r, eps),
            area_ratio_min: members.iter().map(|&k| area_ratio(k)).fold(f64::INFINITY, f64::min),
            area_ratio_max: members.iter().map(|&k| area_ratio(k)).fold(0.0, f64::max),
        });
    }
    let case2: Vec<&Thm31Report> = reports.iter().filter(|r| r.case == 2).collect();
    if let (Some(big), Some(small)) = (
        case2.iter().max_by(|a, b| a.r.total_cmp(&b.r)),
        case2.iter().min_by(|a, b| a.r.total_cmp(&b.r)),
    ) {
        if small.n1 > 2 * big.n1 + 1 {
            return Err(Error::UnboundedOverlap(format!(
                "N1 = {} at r = {:.3e} but {} at r = {:.3e}",
                small.n1, small.r, big.n1, big.r
            )));
        }
    }
    let pts: Vec<(f64, f64)> = reports
        .iter()
        .filter(|r| r.ratio.is_finite() && r.ratio > 0.0)
        .map(|r| ((1.0 / r.r).ln(), r.ratio.ln()))
        .collect();
    let slope = if pts.len() >= 2 {
        let (x, y): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
        ls_slope(&x, &y)
    } else {
        f64::NAN
    };
    Ok(Thm31Sweep {
        alpha,
        c_mu,
        c_used,
        reports,
        slope,
    })
}

/// Cubes whose `10B_Q` meets `B(ξ, r)` have `dist(z_Q, E)` within
/// `[(t - r)/(1 + 10ε), (t + r)/(1 - 10ε)]`, `t = dist(ξ, E)`; Whitney sides are
/// proportional to that distance up to one dyadic step.
fn spread_bound(dist_e: f64, r: f64, eps: f64) -> i32 {
    if dist_e < 2.0 * r || 10.0 * eps >= 1.0 {
        return i32::MAX;
    }
    let ratio = (dist_e + r) / (dist_e - r) * (1.0 + 10.0 * eps) / (1.0 - 10.0 * eps);
    ratio.log2().ceil() as i32 + 1
}

/// Single-radius form of [`theorem31_sweep`].
#[allow(clippy::too_many_arguments)]
pub fn theorem31_verify<const D: usize, B: Domain<D>, M: MeasureProvider<D> + ?Sized>(
    dom: &EnlargedDomain<D, B>,
    mu: &M,
    xi: &Point<D>,
    r: f64,
    alpha: f64,
    c_mu: f64,
    cfg: &Thm31Config,
) -> Result<Thm31Report> {
    let mut s = theorem31_sweep(dom, mu, xi, &[r], alpha, c_mu, cfg)?;
    Ok(s.reports.remove(0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::enlargement::{enlarge, EnlargeConfig};
    use crate::geometry::{Aabb, HalfSpace};
    use crate::harmonic::PointMass;

    fn fixture(eps: f64, max_level: i32) -> EnlargedDomain<2, HalfSpace<2>> {
        let bbox = Aabb {
            lo: Point::<2>::new(-0.5, -0.5),
            hi: Point::<2>::new(0.5, 0.5),
        };
        let mut cfg = EnlargeConfig::new(eps, bbox);
        cfg.family.max_level = max_level;
        enlarge(HalfSpace::<2>::upper(4.0), &[Point::<2>::zeros()], &cfg).unwrap()
    }

    #[test]
    fn point_mass_ratio_is_bounded() {
        let dom = fixture(0.045, 20);
        let mu = PointMass {
            at: Point::<2>::zeros(),
            mass: 1.0,
        };
        let radii: Vec<f64> = (5..=9).map(|k| 0.5f64.powi(k)).collect();
        let cfg = Thm31Config {
            area_resolution: 16,
            ..Default::default()
        };
        let s = theorem31_sweep(&dom, &mu, &Point::<2>::zeros(), &radii, 0.5, 1.0, &cfg).unwrap();
        assert!(s.slope <= 0.0, "slope {}", s.slope);
        let n1 = s.reports[0].n1;
        assert!(n1 > 0);
        for r in &s.reports {
            assert_eq!(r.case, 2);
            assert_eq!(r.n1, n1);
            assert!(r.lhs > 0.0 && r.rhs > 0.0);
        }
        // LHS and RHS grow with r.
        for w in s.reports.windows(2) {
            assert!(w[1].lhs <= w[0].lhs && w[1].rhs <= w[0].rhs);
        }
    }

    #[test]
    fn case_one_sides_are_comparable() {
        let dom = fixture(0.045, 20);
        let mu = PointMass {
            at: Point::<2>::zeros(),
            mass: 1.0,
        };
        let r = 0.5f64.powi(7);
        let rep = theorem31_verify(
            &dom,
            &mu,
            &Point::<2>::new(4.0 * r, 0.0),
            r,
            0.5,
            1.0,
            &Thm31Config::default(),
        )
        .unwrap();
        assert_eq!(rep.case, 1);
        assert!(rep.cubes > 0);
        assert!(rep.level_max - rep.level_min <= rep.level_spread_bound);
    }
}
