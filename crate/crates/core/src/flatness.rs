//! One-scale flatness `δ(x, r)`, the two-sided separation condition and the
//! oriented normals `N_{x,r}`.

use crate::error::{Error, Result};
use crate::geometry::sampling::{halton, sphere_lattice};
use crate::geometry::{fit_hyperplane, Aabb, Ball, Domain, Hyperplane, Point};
use crate::par::{self, Exec};
use serde::Serialize;

#[derive(Clone, Debug)]
pub struct FlatnessConfig {
    /// Boundary sample spacing as a fraction of `r`.
    pub spacing: f64,
    /// Per-axis resolution of the separation test (`res^d` points per side).
    pub separation_res: usize,
    /// Most points handed to the plane fit.
    pub fit_points: usize,
    /// Return failing reports instead of errors.
    pub strict: bool,
    pub exec: Exec,
}

impl Default for FlatnessConfig {
    fn default() -> Self {
        FlatnessConfig {
            spacing: 1.0 / 64.0,
            separation_res: 64,
            fit_points: 2000,
            strict: true,
            exec: Exec::Parallel,
        }
    }
}

#[derive(Clone, Debug)]
pub struct FlatnessReport<const D: usize> {
    pub x: Point<D>,
    pub r: f64,
    pub plane: Hyperplane<D>,
    pub delta: f64,
    /// Unit `N_{x,r}` with `x + (3/4) r N ∉ Ω`.
    pub normal: Point<D>,
    pub separation_ok: bool,
    pub orientation_ok: bool,
    pub samples: usize,
}

impl<const D: usize> FlatnessReport<D> {
    pub fn csv_header() -> String {
        let mut cols: Vec<String> = (0..D).map(|i| format!("x{i}")).collect();
        cols.extend(["r", "delta", "sep_ok"].map(String::from));
        cols.extend((0..D).map(|i| format!("n{i}")));
        cols.join(",")
    }

    pub fn csv_row(&self) -> String {
        let mut cols: Vec<String> = self.x.iter().map(|v| format!("{v:.12e}")).collect();
        cols.push(format!("{:.12e}", self.r));
        cols.push(format!("{:.12e}", self.delta));
        cols.push(u8::from(self.separation_ok).to_string());
        cols.extend(self.normal.iter().map(|v| format!("{v:.12e}")));
        cols.join(",")
    }
}

/// Points of `plane ∩ B(x, r)` on a grid of spacing `h` around `x`.
fn plane_grid<const D: usize>(plane: &Hyperplane<D>, x: &Point<D>, r: f64, h: f64) -> Vec<Point<D>> {
    let c = plane.project(x);
    let t = plane.tangent_basis();
    let m = (r / h).ceil() as i64;
    let mut out = Vec::new();
    if D == 2 {
        for i in -m..=m {
            let p = c + t[0] * (i as f64 * h);
            if (p - x).norm() <= r {
                out.push(p);
            }
        }
    } else {
        for i in -m..=m {
            for j in -m..=m {
                let p = c + t[0] * (i as f64 * h) + t[1] * (j as f64 * h);
                if (p - x).norm() <= r {
                    out.push(p);
                }
            }
        }
    }
    out
}

/// `δ(x, r)` of a boundary sample against a plane: the larger of the two
/// one-sided deviations in `B(x, r)`, normalized by `r`. The plane side uses
/// the domain's own boundary distance.
fn deviation<const D: usize>(
    domain: &dyn Domain<D>,
    samples: &[Point<D>],
    plane: &Hyperplane<D>,
    x: &Point<D>,
    r: f64,
    h: f64,
    exec: Exec,
) -> f64 {
    let a = samples.iter().map(|p| plane.distance(p)).fold(0.0, f64::max);
    let grid = plane_grid(plane, x, r, h);
    let b = par::map_slice(exec, &grid, |p| domain.nearest_boundary(p).1)
        .into_iter()
        .fold(0.0, f64::max);
    a.max(b) / r
}

/// Unit-ball points by Halton rejection.
fn ball_points<const D: usize>(n: usize) -> Vec<Point<D>> {
    let mut out = Vec::with_capacity(n);
    let mut i = 0u64;
    while out.len() < n {
        let h = halton(i, D);
        i += 1;
        let u = Point::<D>::from_fn(|k, _| 2.0 * h[k] - 1.0);
        if u.norm_squared() < 1.0 {
            out.push(u);
        }
    }
    out
}

/// Which side of the band is inside: `Some(+1)` when `{sd > band}` lies in
/// `Ω` and `{sd < -band}` outside, `Some(-1)` for the reverse, `None` when the
/// components are not separated.
fn separation_side<const D: usize>(
    domain: &dyn Domain<D>,
    plane: &Hyperplane<D>,
    x: &Point<D>,
    r: f64,
    band: f64,
    n: usize,
    exec: Exec,
) -> Option<f64> {
    let pts: Vec<(Point<D>, f64)> = ball_points::<D>(2 * n)
        .into_iter()
        .map(|u| x + u * r)
        .map(|p| (p, plane.signed_distance(&p)))
        .filter(|(_, s)| s.abs() > band)
        .collect();
    let inside = par::map_slice(exec, &pts, |(p, _)| domain.contains(p));
    let (mut pos_in, mut pos_out, mut neg_in, mut neg_out) = (0, 0, 0, 0);
    for ((_, s), ins) in pts.iter().zip(inside) {
        match (*s > 0.0, ins) {
            (true, true) => pos_in += 1,
            (true, false) => pos_out += 1,
            (false, true) => neg_in += 1,
            (false, false) => neg_out += 1,
        }
    }
    if pos_out == 0 && neg_in == 0 && pos_in > 0 && neg_out > 0 {
        Some(1.0)
    } else if pos_in == 0 && neg_out == 0 && pos_out > 0 && neg_in > 0 {
        Some(-1.0)
    } else {
        None
    }
}

/// Orients `N` by the two test balls `B(x ± (3/4) r N, r/10)`.
fn orient<const D: usize>(domain: &dyn Domain<D>, n: &Point<D>, x: &Point<D>, r: f64) -> Option<Point<D>> {
    let mut probe = sphere_lattice::<D>(32);
    probe.push(Point::<D>::zeros());
    let inside_ball = |c: Point<D>| probe.iter().all(|u| domain.contains(&(c + u * (0.1 * r * 0.999))));
    let outside_ball = |c: Point<D>| probe.iter().all(|u| !domain.contains(&(c + u * (0.1 * r * 0.999))));
    [*n, -*n]
        .into_iter()
        .find(|cand| outside_ball(x + cand * (0.75 * r)) && inside_ball(x - cand * (0.75 * r)))
}

/// Measures `δ(x, r)` against the best-fit plane through `x`, checks that the
/// two components of `B(x, r) \ {dist(·, P) < 2δr}` lie on opposite sides of
/// `∂Ω`, and orients the normal.
pub fn measure_flatness<const D: usize>(
    domain: &dyn Domain<D>,
    x: &Point<D>,
    r: f64,
    cfg: &FlatnessConfig,
) -> Result<FlatnessReport<D>> {
    if !(r > 0.0) || r > domain.r0() {
        return Err(Error::InvalidInput(format!("radius {r} outside (0, r0]")));
    }
    let h = cfg.spacing * r;
    let off = domain.nearest_boundary(x).1;
    if off > h.max(domain.projection_error()).max(1e-9) {
        return Err(Error::InvalidInput(format!(
            "x = {:?} lies {off:.3e} from the boundary",
            x.as_slice()
        )));
    }
    let ball = Ball::new(*x, r);
    let mut h_now = h;
    let mut attempt = 0;
    loop {
        let samples = domain.boundary_samples_in_ball(&ball, h_now);
        if samples.len() < D {
            return Err(Error::Degenerate(format!(
                "{} boundary samples in the ball",
                samples.len()
            )));
        }
        let stride = (samples.len() / cfg.fit_points.max(D)).max(1);
        let fit_set: Vec<Point<D>> = samples.iter().step_by(stride).copied().collect();
        let plane = fit_hyperplane(&fit_set, Some(*x))?.plane;
        let delta = deviation(domain, &samples, &plane, x, r, h_now, cfg.exec);
        let n_sep = cfg.separation_res.pow((D - 1) as u32) * if attempt == 0 { 1 } else { 4 };
        let band = 2.0 * delta * r + 1e-12 * r;
        let side = separation_side(domain, &plane, x, r, band, n_sep, cfg.exec);
        if side.is_none() && attempt == 0 {
            attempt = 1;
            h_now = h / 4.0;
            continue;
        }
        let separation_ok = side.is_some();
        if !separation_ok && cfg.strict {
            return Err(Error::SeparationFailure {
                x: x.iter().copied().collect(),
                r,
            });
        }
        let normal = orient(domain, &plane.normal, x, r);
        let orientation_ok = normal.is_some();
        if !orientation_ok && cfg.strict {
            return Err(Error::OrientationFailure {
                x: x.iter().copied().collect(),
                r,
            });
        }
        let normal = normal.unwrap_or_else(|| match side {
            Some(s) => -plane.normal * s,
            None => plane.normal,
        });
        return Ok(FlatnessReport {
            x: *x,
            r,
            plane,
            delta,
            normal,
            separation_ok,
            orientation_ok,
            samples: samples.len(),
        });
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CertifySummary {
    pub delta_sup: f64,
    pub probes: usize,
    pub separation_failures: usize,
    pub orientation_failures: usize,
    pub worst_x: Vec<f64>,
    pub worst_r: f64,
}

#[derive(Clone, Debug)]
pub struct Certificate<const D: usize> {
    pub delta_sup: f64,
    pub worst: FlatnessReport<D>,
    pub reports: Vec<FlatnessReport<D>>,
}

impl<const D: usize> Certificate<D> {
    pub fn summary(&self) -> CertifySummary {
        CertifySummary {
            delta_sup: self.delta_sup,
            probes: self.reports.len(),
            separation_failures: self.reports.iter().filter(|r| !r.separation_ok).count(),
            orientation_failures: self.reports.iter().filter(|r| !r.orientation_ok).count(),
            worst_x: self.worst.x.iter().copied().collect(),
            worst_r: self.worst.r,
        }
    }

    pub fn to_csv(&self) -> String {
        let mut s = FlatnessReport::<D>::csv_header();
        s.push('\n');
        for r in &self.reports {
            s.push_str(&r.csv_row());
            s.push('\n');
        }
        s
    }
}

/// Where and at which scales to probe.
#[derive(Clone, Debug)]
pub struct ProbePlan<const D: usize> {
    /// Probe centres are boundary points in this box.
    pub window: Aabb<D>,
    /// Largest radius used (capped by `r0`).
    pub r_top: f64,
    /// Number of dyadic radii below `r_top`.
    pub levels: usize,
}

/// Quasi-random probes `(x, r)`: boundary points of the window and dyadic
/// radii `r_top · 2^{-j}`, `0 ≤ j < levels`.
pub fn probes<const D: usize>(
    domain: &dyn Domain<D>,
    r0: f64,
    n_probes: usize,
    plan: &ProbePlan<D>,
) -> Vec<(Point<D>, f64)> {
    let top = plan.r_top.min(r0);
    let top = 2f64.powi(top.log2().floor() as i32);
    let pool = domain.boundary_samples(&plan.window, plan.window.diameter() / 512.0);
    if pool.is_empty() {
        return Vec::new();
    }
    (0..n_probes as u64)
        .map(|i| {
            let h = halton(i, 2);
            let x = pool[((h[0] * pool.len() as f64) as usize).min(pool.len() - 1)];
            let j = ((h[1] * plan.levels as f64) as i32).min(plan.levels as i32 - 1);
            (x, top * 2f64.powi(-j))
        })
        .collect()
}

/// Supremum of `δ` over quasi-random probes with dyadic radii in `(0, r0]`.
/// In strict mode the first separation or orientation failure is returned.
pub fn certify_domain<const D: usize>(
    domain: &dyn Domain<D>,
    r0: f64,
    n_probes: usize,
    plan: &ProbePlan<D>,
    cfg: &FlatnessConfig,
) -> Result<Certificate<D>> {
    if n_probes == 0 {
        return Err(Error::InvalidInput("n_probes must be positive".into()));
    }
    let ps = probes(domain, r0, n_probes, plan);
    if ps.is_empty() {
        return Err(Error::InvalidInput("no boundary in the probe window".into()));
    }
    let inner = FlatnessConfig {
        exec: Exec::Sequential,
        ..cfg.clone()
    };
    let results = par::map_slice(cfg.exec, &ps, |(x, r)| measure_flatness(domain, x, *r, &inner));
    let mut reports = Vec::with_capacity(results.len());
    for res in results {
        reports.push(res?);
    }
    let worst = reports
        .iter()
        .max_by(|a, b| a.delta.total_cmp(&b.delta))
        .cloned()
        .expect("nonempty");
    Ok(Certificate {
        delta_sup: worst.delta,
        worst,
        reports,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{BallDomain, HalfSpace};

    #[test]
    fn half_space_is_flat() {
        let h = HalfSpace::<2>::upper(8.0);
        let rep = measure_flatness(&h, &Point::<2>::new(0.3, 0.0), 1.0, &FlatnessConfig::default()).unwrap();
        assert!(rep.delta < 1e-9);
        assert!(rep.separation_ok);
        assert!((rep.normal - Point::<2>::new(0.0, -1.0)).norm() < 1e-9);
    }

    #[test]
    fn disk_sagitta() {
        let d = BallDomain::<2>::unit();
        let rep = measure_flatness(&d, &Point::<2>::new(0.0, 1.0), 0.2, &FlatnessConfig::default()).unwrap();
        // Tangent line at x: the boundary leaves it by 1 - sqrt(1 - r^2) ≈ r^2 / 2.
        assert!(rep.delta <= 0.105, "{}", rep.delta);
        assert!(rep.delta > 0.0);
        assert!((rep.normal - Point::<2>::new(0.0, 1.0)).norm() < 0.05);
    }

    #[test]
    fn off_boundary_point_is_rejected() {
        let h = HalfSpace::<2>::upper(8.0);
        assert!(measure_flatness(&h, &Point::<2>::new(0.0, 0.5), 1.0, &FlatnessConfig::default()).is_err());
    }

    #[test]
    fn certify_half_space() {
        let h = HalfSpace::<3>::upper(4.0);
        let plan = ProbePlan {
            window: h.window,
            r_top: 1.0,
            levels: 3,
        };
        let cfg = FlatnessConfig {
            separation_res: 16,
            spacing: 1.0 / 16.0,
            ..Default::default()
        };
        let c = certify_domain(&h, f64::INFINITY, 6, &plan, &cfg).unwrap();
        assert!(c.delta_sup < 1e-9);
        assert_eq!(c.summary().separation_failures, 0);
    }
}
