//! The enlarged domain `Ω_ε⁺ = Ω ∪ ⋃ B_Q` and its local graph structure.

use crate::error::{Error, Result};
use crate::flatness::{certify_domain, measure_flatness, FlatnessConfig, ProbePlan};
use crate::geometry::bvh::Bvh;
use crate::geometry::sampling::{halton, sphere_count, sphere_lattice};
use crate::geometry::{Aabb, Ball, Domain, Hyperplane, Point, PointIndex};
use crate::par::{self, Exec};
use crate::whitney::{boundary_family, BallFamily, FamilyConfig};
use serde::Serialize;

#[derive(Clone, Debug)]
pub struct EnlargeConfig<const D: usize> {
    pub epsilon: f64,
    /// Largest admissible measured flatness of the base; `None` means `ε²`.
    /// An infinite cap skips the measurement.
    pub delta_cap: Option<f64>,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub family: FamilyConfig<D>,
    /// Sphere sample spacing as a fraction of the ball radius.
    pub cloud_spacing: f64,
    /// Probes used to measure the base flatness.
    pub flatness_probes: usize,
    pub exec: Exec,
}

impl<const D: usize> EnlargeConfig<D> {
    pub fn new(epsilon: f64, bbox: Aabb<D>) -> Self {
        EnlargeConfig {
            epsilon,
            delta_cap: None,
            c1: 25.0,
            c2: 11.0,
            c3: 10.0,
            family: FamilyConfig::new(bbox),
            cloud_spacing: 0.25,
            flatness_probes: 24,
            exec: Exec::default(),
        }
    }

    pub fn cap(&self) -> f64 {
        self.delta_cap.unwrap_or(self.epsilon * self.epsilon)
    }
}

/// `Ω_ε⁺` over a base domain `B`.
#[derive(Clone, Debug)]
pub struct EnlargedDomain<const D: usize, B: Domain<D>> {
    pub base: B,
    pub family: BallFamily<D>,
    pub epsilon: f64,
    /// Exposed sphere samples with their covering radii.
    sphere_points: Vec<(Point<D>, f64)>,
    cloud: PointIndex<D>,
    sphere_bvh: Bvh<D>,
    /// Per ball: estimated outward direction and half-angle of the exposed cap.
    caps: Vec<Option<(Point<D>, f64)>>,
    pub e: Vec<Point<D>>,
    /// Measured flatness of the base (`None` when the check was skipped).
    pub base_delta: Option<f64>,
    /// Distance to `E` below which the family is cut off by `max_level`.
    pub resolved: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

/// Exposed samples of one sphere with their covering radii, and its cap.
type SphereSamples<const D: usize> = (Vec<(Point<D>, f64)>, Option<(Point<D>, f64)>);

/// Measured flatness of the base over the family box, as checked against
/// the cap by [`enlarge`].
pub fn base_flatness<const D: usize, B: Domain<D>>(base: &B, cfg: &EnlargeConfig<D>) -> Result<f64> {
    let plan = ProbePlan {
        window: cfg.family.bbox,
        r_top: 0.25 * cfg.family.bbox.diameter(),
        levels: 4,
    };
    let fc = FlatnessConfig {
        strict: false,
        separation_res: 16,
        exec: cfg.exec,
        ..Default::default()
    };
    Ok(certify_domain(base, base.r0(), cfg.flatness_probes, &plan, &fc)?.delta_sup)
}

/// Builds `Ω_ε⁺` from `(Ω, E, ε)`.
pub fn enlarge<const D: usize, B: Domain<D>>(
    base: B,
    e: &[Point<D>],
    cfg: &EnlargeConfig<D>,
) -> Result<EnlargedDomain<D, B>> {
    let cap = cfg.cap();
    let base_delta = if cap.is_finite() {
        let delta = base_flatness(&base, cfg)?;
        if delta > cap {
            return Err(Error::FlatnessPrecondition { delta, cap });
        }
        Some(delta)
    } else {
        None
    };
    let family = boundary_family(&base, e, cfg.epsilon, &cfg.family)?;
    let spheres: Vec<SphereSamples<D>> = par::map_range(cfg.exec, family.len(), |i| {
        let b = &family.entries[i];
        let keep = |p: &Point<D>| !family.inside_other(p, i) && !base.contains(p);
        let h = cfg.cloud_spacing * b.r;
        let coarse = sphere_lattice::<D>(sphere_count::<D>(b.r, h));
        let mut out: Vec<(Point<D>, f64)> = Vec::new();
        let mut outward = Point::<D>::zeros();
        for u in &coarse {
            let p = b.z + u * b.r;
            if !base.contains(&p) {
                outward += u;
            }
            if keep(&p) {
                out.push((p, h));
            }
        }
        let mut cap = None;
        if outward.norm() > 0.0 {
            let outward = refine_outward(&base, &b.z, b.r, outward / outward.norm());
            let hf = 0.25 * b.cube.side();
            let beta = (4.0 * (cfg.epsilon + b.cube.side() / b.r)).min(std::f64::consts::PI);
            for u in cap_points(&outward, beta, hf / b.r) {
                let p = b.z + u * b.r;
                if keep(&p) {
                    out.push((p, hf));
                }
            }
            cap = Some((outward, beta));
        }
        (out, cap)
    });
    let (spheres, caps): (Vec<_>, Vec<_>) = spheres.into_iter().unzip();
    let sphere_points: Vec<(Point<D>, f64)> = spheres.into_iter().flatten().collect();
    let boxes: Vec<Aabb<D>> = sphere_points.iter().map(|(p, h)| Ball::new(*p, *h).aabb()).collect();
    let sphere_bvh = Bvh::build(&boxes);
    let mut cloud_pts: Vec<Point<D>> = sphere_points.iter().map(|x| x.0).collect();
    cloud_pts.extend_from_slice(e);
    log::info!(
        "enlarged domain: {} balls, {} exposed sphere samples",
        family.len(),
        sphere_points.len()
    );
    let resolved = 4.0 * family.k * 2f64.powi(-cfg.family.max_level);
    Ok(EnlargedDomain {
        base,
        family,
        epsilon: cfg.epsilon,
        sphere_points,
        cloud: PointIndex::new(cloud_pts),
        sphere_bvh,
        caps,
        e: e.to_vec(),
        base_delta,
        resolved,
        c1: cfg.c1,
        c2: cfg.c2,
        c3: cfg.c3,
    })
}

/// Centres the outside arc of the sphere `∂B(z, r)`: along the great circle
/// through `n` and each tangent direction, the two crossings of `∂Ω` are
/// located by bisection and `n` is turned to their midpoint.
fn refine_outward<const D: usize, B: Domain<D>>(base: &B, z: &Point<D>, r: f64, mut n: Point<D>) -> Point<D> {
    let outside = |u: &Point<D>| !base.contains(&(z + u * r));
    for _ in 0..2 {
        if !outside(&n) {
            return n;
        }
        let t = crate::geometry::linalg::complete_basis(&n);
        let mut m = n;
        for ti in t.iter().take(D - 1) {
            let cross = |s: f64| {
                let (mut lo, mut hi) = (0.0, std::f64::consts::PI);
                for _ in 0..16 {
                    let mid = 0.5 * (lo + hi);
                    if outside(&(n * mid.cos() + ti * (s * mid.sin()))) {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                0.5 * (lo + hi)
            };
            let tilt = 0.5 * (cross(1.0) - cross(-1.0));
            m += ti * tilt.tan();
        }
        n = m / m.norm();
    }
    n
}

/// Unit vectors within angle `beta` of `n`, angular spacing about `step`.
fn cap_points<const D: usize>(n: &Point<D>, beta: f64, step: f64) -> Vec<Point<D>> {
    let t = crate::geometry::linalg::complete_basis(n);
    let rings = (beta / step).ceil() as usize;
    let mut out = vec![*n];
    for k in 1..=rings {
        let a = beta * k as f64 / rings as f64;
        if D == 2 {
            for s in [1.0, -1.0] {
                out.push(n * a.cos() + t[0] * (s * a.sin()));
            }
        } else {
            let m = ((std::f64::consts::TAU * a.sin() / step).ceil() as usize).max(3);
            for j in 0..m {
                let phi = std::f64::consts::TAU * j as f64 / m as f64;
                out.push(n * a.cos() + (t[0] * phi.cos() + t[1] * phi.sin()) * a.sin());
            }
        }
    }
    out
}

impl<const D: usize, B: Domain<D>> EnlargedDomain<D, B> {
    /// Covering radius of the exposed-sphere sample.
    pub fn cloud_cover(&self) -> f64 {
        self.sphere_points.iter().map(|x| x.1).fold(0.0, f64::max)
    }

    pub fn cloud_len(&self) -> usize {
        self.cloud.len()
    }

    /// Lower bound on the distance to the exposed sphere parts.
    fn sphere_lower(&self, p: &Point<D>) -> f64 {
        self.sphere_bvh
            .nearest(p, |i| {
                let (c, h) = &self.sphere_points[i];
                ((p - c).norm() - h).max(0.0).powi(2)
            })
            .map_or(f64::INFINITY, |x| x.1.sqrt())
    }

    /// `E ⊂ ∂Ω_ε⁺`: each point of `E` lies within `tol` of `∂Ω` and in no ball.
    /// Returns the failures.
    pub fn e_membership(&self, tol: f64) -> Vec<Point<D>> {
        self.e
            .iter()
            .filter(|e| self.family.inside_any(e) || self.base.nearest_boundary(e).1 > tol)
            .copied()
            .collect()
    }

    /// Exposed sphere samples lying off every sphere (should be empty).
    pub fn off_sphere_cloud(&self, tol: f64) -> usize {
        self.sphere_points
            .iter()
            .filter(|(p, _)| {
                let ids = self.family.meeting(&Ball::new(*p, tol));
                !ids.iter().any(|&i| {
                    let b = &self.family.entries[i];
                    ((p - b.z).norm() - b.r).abs() <= tol
                })
            })
            .count()
    }

    /// `20 B_Q ∩ E = ∅` for every ball (exact distance comparison).
    pub fn e_clearance_violations(&self) -> usize {
        self.family
            .entries
            .iter()
            .filter(|b| self.family.e.dist(&b.z) <= 20.0 * b.r)
            .count()
    }

    /// Ball indices whose `20 B_Q` sits inside the family box shrunk by
    /// `margin` and clear of the unresolved region around `E`, thinned by
    /// stride to at most `n`.
    pub fn interior_balls(&self, n: usize, margin: f64) -> Vec<usize> {
        let bb = self.family.bbox;
        let ok: Vec<usize> = (0..self.family.len())
            .filter(|&i| {
                let b = &self.family.entries[i];
                let r = 20.0 * b.r + margin;
                b.dist_e - 20.0 * b.r >= self.resolved
                    && (0..D - 1).all(|k| b.z[k] - r >= bb.lo[k] && b.z[k] + r <= bb.hi[k])
            })
            .collect();
        if ok.len() <= n {
            return ok;
        }
        let stride = ok.len() as f64 / n as f64;
        (0..n).map(|k| ok[(k as f64 * stride) as usize]).collect()
    }
}

impl<const D: usize, B: Domain<D>> Domain<D> for EnlargedDomain<D, B> {
    fn contains(&self, p: &Point<D>) -> bool {
        self.family.inside_any(p) || self.base.contains(p)
    }

    /// Nearest among the exposed samples, `E`, and the nearest base boundary
    /// point when it is not covered by a ball; then improved by radial
    /// projections onto nearby spheres that land on an exposed part.
    fn nearest_boundary(&self, p: &Point<D>) -> (Point<D>, f64) {
        let mut best = self
            .cloud
            .nearest(p)
            .map(|(i, d)| (self.cloud.points()[i], d))
            .unwrap_or((*p, f64::INFINITY));
        let (q, d) = self.base.nearest_boundary(p);
        if d < best.1 && !self.family.inside_any(&q) {
            best = (q, d);
        }
        if best.1 > 0.0 && best.1.is_finite() {
            for i in self.family.meeting(&Ball::new(*p, best.1)) {
                let b = &self.family.entries[i];
                let v = p - b.z;
                let n = v.norm();
                if n == 0.0 || (n - b.r).abs() >= best.1 {
                    continue;
                }
                let q = b.z + v * (b.r / n);
                if !self.family.inside_other(&q, i) && !self.base.contains(&q) {
                    best = (q, (n - b.r).abs());
                }
            }
        }
        best
    }

    fn dist_lower(&self, p: &Point<D>) -> f64 {
        if !self.contains(p) {
            return 0.0;
        }
        let m = self.family.max_margin(p).map_or(0.0, |x| x.1);
        self.base.dist_lower(p).max(m)
    }

    /// `∂Ω_ε⁺` is contained in the exposed sphere parts and `∂Ω`, so the
    /// smaller of the two lower bounds is a lower bound too.
    fn safe_radius(&self, p: &Point<D>) -> f64 {
        if !self.contains(p) {
            return 0.0;
        }
        let cloud = self.sphere_lower(p).min(self.base.nearest_boundary(p).1);
        self.dist_lower(p).max(cloud)
    }

    fn boundary_meets_box(&self, b: &Aabb<D>) -> bool {
        self.cloud.any_in_box(b) || (self.base.boundary_meets_box(b) && !self.family.bbox.intersects(b))
    }

    fn boundary_samples(&self, window: &Aabb<D>, h: f64) -> Vec<Point<D>> {
        let mut out: Vec<Point<D>> = self
            .base
            .boundary_samples(window, h)
            .into_iter()
            .filter(|p| !self.family.inside_any(p))
            .collect();
        out.extend(self.cloud.points().iter().filter(|p| window.contains(p)).copied());
        for i in self.family.meeting_box(window) {
            let Some((n, beta)) = self.caps[i] else { continue };
            let b = &self.family.entries[i];
            for u in cap_points(&n, beta, h / b.r) {
                let p = b.z + u * b.r;
                if window.contains(&p) && !self.family.inside_other(&p, i) && !self.base.contains(&p) {
                    out.push(p);
                }
            }
        }
        out
    }

    fn window(&self) -> Aabb<D> {
        self.base.window()
    }

    fn r0(&self) -> f64 {
        0.5 * self.base.r0()
    }

    fn projection_error(&self) -> f64 {
        self.cloud_cover().max(self.base.projection_error())
    }
}

/// The neighbours `𝓘_Q` of a ball with the measured certificate constants.
#[derive(Clone, Debug, Serialize)]
pub struct NeighborFamily {
    pub q: usize,
    pub members: Vec<usize>,
    /// `max |z_P - z_Q| / r_Q`.
    pub center_ratio: f64,
    /// `max |r_P - r_Q| / (ε r_Q)`.
    pub c1_measured: f64,
    /// `max dist(z_P, L_Q) / (δ r_Q)` when a plane is supplied.
    pub plane_ratio: f64,
}

/// `𝓘_Q = {P : 20B_Q ∩ B_P ≠ ∅}` with the checks `|z_P - z_Q| ≤ 30 r_Q`,
/// `|r_P - r_Q| ≤ c₁ ε r_Q` and, given `(L_Q, δ)`, `dist(z_P, L_Q) ≤ 30 δ r_Q`.
pub fn neighbor_family<const D: usize>(
    fam: &BallFamily<D>,
    q: usize,
    c1: f64,
    plane: Option<(&Hyperplane<D>, f64)>,
) -> Result<NeighborFamily> {
    let bq = &fam.entries[q];
    let members = fam.meeting(&Ball::new(bq.z, 20.0 * bq.r));
    let mut out = NeighborFamily {
        q,
        members: members.clone(),
        center_ratio: 0.0,
        c1_measured: 0.0,
        plane_ratio: 0.0,
    };
    for &p in &members {
        let bp = &fam.entries[p];
        let cr = (bp.z - bq.z).norm() / bq.r;
        out.center_ratio = out.center_ratio.max(cr);
        if cr > 30.0 {
            return Err(Error::Certificate {
                inequality: "|z_P - z_Q| <= 30 r_Q",
                q,
                p,
                detail: format!("ratio {cr:.4}"),
            });
        }
        let c1m = (bp.r - bq.r).abs() / (fam.epsilon * bq.r);
        out.c1_measured = out.c1_measured.max(c1m);
        if c1m > c1 {
            return Err(Error::Certificate {
                inequality: "|r_P - r_Q| <= c1 eps r_Q",
                q,
                p,
                detail: format!("measured {c1m:.4} > {c1}"),
            });
        }
        if let Some((l, delta)) = plane {
            let d = l.distance(&bp.z);
            let bound = 30.0 * delta * bq.r;
            if delta > 0.0 {
                out.plane_ratio = out.plane_ratio.max(d / (delta * bq.r));
            }
            if d > bound + 1e-12 * bq.r {
                return Err(Error::Certificate {
                    inequality: "dist(z_P, L_Q) <= 30 delta r_Q",
                    q,
                    p,
                    detail: format!("{d:.4e} > {bound:.4e}"),
                });
            }
        }
    }
    Ok(out)
}

/// A ball of `𝓘_Q` in the patch frame: `(z̃_P, z_{P,d})` and `r_P`.
#[derive(Clone, Debug)]
pub struct PatchBall<const D: usize> {
    pub index: usize,
    pub local: Point<D>,
    pub r: f64,
}

/// Local graph description of `∂Ω_ε⁺` over `L_Q ∩ 10B_Q`.
#[derive(Clone, Debug)]
pub struct GraphPatch<const D: usize> {
    pub q: usize,
    pub z: Point<D>,
    pub r: f64,
    pub epsilon: f64,
    pub plane: Hyperplane<D>,
    /// Measured `δ(z_Q, 30 r_Q)` of the base.
    pub delta: f64,
    /// Orthonormal frame: tangents, then the outward normal.
    pub frame: Vec<Point<D>>,
    pub balls: Vec<PatchBall<D>>,
    /// Floor value `(1 - c₂ε) r_Q`.
    pub floor: f64,
    pub neighbors: NeighborFamily,
}

impl<const D: usize> GraphPatch<D> {
    pub fn to_local(&self, p: &Point<D>) -> Point<D> {
        let v = p - self.z;
        Point::<D>::from_fn(|i, _| self.frame[i].dot(&v))
    }

    pub fn to_world(&self, y: &Point<D>) -> Point<D> {
        (0..D).fold(self.z, |acc, i| acc + self.frame[i] * y[i])
    }
}

fn tangential_dist2<const D: usize>(a: &Point<D>, b: &Point<D>) -> f64 {
    (0..D - 1).map(|i| (a[i] - b[i]).powi(2)).sum()
}

/// `f_Q(x̃) = max_P g_P(x̃)`; the last coordinate of `x` is ignored. Returns
/// the height and the index (into `patch.balls`) of the active sphere, if any.
pub fn graph_function<const D: usize>(patch: &GraphPatch<D>, x: &Point<D>) -> (f64, Option<usize>) {
    let mut best = (patch.floor, None);
    for (k, b) in patch.balls.iter().enumerate() {
        let t2 = tangential_dist2(x, &b.local);
        if t2 <= b.r * b.r {
            let g = (b.r * b.r - t2).sqrt() + b.local[D - 1];
            if g > best.0 {
                best = (g, Some(k));
            }
        }
    }
    best
}

/// Gradient of `f_Q` (tangential components), closed form on the active branch.
pub fn graph_gradient<const D: usize>(patch: &GraphPatch<D>, x: &Point<D>) -> Point<D> {
    let mut g = Point::<D>::zeros();
    if let (_, Some(k)) = graph_function(patch, x) {
        let b = &patch.balls[k];
        let s = (b.r * b.r - tangential_dist2(x, &b.local)).max(1e-300).sqrt();
        for i in 0..D - 1 {
            g[i] = -(x[i] - b.local[i]) / s;
        }
    }
    g
}

impl<const D: usize, B: Domain<D>> EnlargedDomain<D, B> {
    /// Builds the patch of ball `q`: `L_Q = 𝓟(z_Q, 30 r_Q)` fitted to `∂Ω`,
    /// oriented so that `Ω` lies below.
    pub fn patch(&self, q: usize) -> Result<GraphPatch<D>> {
        let bq = &self.family.entries[q];
        let fc = FlatnessConfig {
            strict: false,
            separation_res: 16,
            exec: Exec::Sequential,
            ..Default::default()
        };
        let rep = measure_flatness(&self.base, &bq.z, 30.0 * bq.r, &fc)?;
        let mut n = rep.normal;
        if !rep.orientation_ok && self.base.contains(&(bq.z + n * (0.5 * bq.r))) {
            n = -n;
        }
        let plane = Hyperplane::new(bq.z, n);
        let mut frame = plane.tangent_basis();
        frame.push(n);
        let neighbors = neighbor_family(&self.family, q, self.c1, Some((&plane, rep.delta)))?;
        let mut patch = GraphPatch {
            q,
            z: bq.z,
            r: bq.r,
            epsilon: self.epsilon,
            plane,
            delta: rep.delta,
            frame,
            balls: Vec::new(),
            floor: (1.0 - self.c2 * self.epsilon) * bq.r,
            neighbors,
        };
        patch.balls = patch
            .neighbors
            .members
            .iter()
            .map(|&i| PatchBall {
                index: i,
                local: patch.to_local(&self.family.entries[i].z),
                r: self.family.entries[i].r,
            })
            .collect();
        Ok(patch)
    }
}

/// Grid on `L_Q ∩ 10B_Q` with about `n` points, in patch coordinates.
pub fn patch_grid<const D: usize>(patch: &GraphPatch<D>, n: usize) -> Vec<Point<D>> {
    let rad = 10.0 * patch.r;
    let mut out = Vec::new();
    if D == 2 {
        let m = n.max(2);
        for i in 0..m {
            let t = -rad + 2.0 * rad * (i as f64 + 0.5) / m as f64;
            out.push(Point::<D>::from_fn(|k, _| if k == 0 { t } else { 0.0 }));
        }
    } else {
        let m = ((n as f64 * 4.0 / std::f64::consts::PI).sqrt().ceil() as usize).max(2);
        for i in 0..m {
            for j in 0..m {
                let a = -rad + 2.0 * rad * (i as f64 + 0.5) / m as f64;
                let b = -rad + 2.0 * rad * (j as f64 + 0.5) / m as f64;
                if a * a + b * b < rad * rad {
                    out.push(Point::<D>::from_fn(|k, _| [a, b, 0.0][k]));
                }
            }
        }
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct Lemma23Report {
    pub q: usize,
    pub r: f64,
    pub neighbors: usize,
    pub delta: f64,
    /// `max |f_Q - r_Q| / (ε r_Q)`.
    pub c2_measured: f64,
    pub band_violations: usize,
    /// Largest pairwise slope of `f_Q`.
    pub lip_measured: f64,
    /// `lip_measured / ε^{1/2}`.
    pub lip_over_sqrt_eps: f64,
    /// Points of `10B_Q` on the wrong side of the graph.
    pub side_failures: usize,
    pub side_samples: usize,
    /// Graph points farther than the cloud covering radius from `∂Ω_ε⁺`.
    pub boundary_failures: usize,
    pub grid: usize,
}

impl Lemma23Report {
    pub fn passes(&self) -> bool {
        self.band_violations == 0 && self.side_failures == 0 && self.boundary_failures == 0
    }
}

/// Checks the four parts of the local graph lemma on a patch: the graph
/// separates `Ω_ε⁺ ∩ 10B_Q` (a), the height band (b), the Lipschitz bound (c)
/// and that graph points lie on `∂Ω_ε⁺` (d).
pub fn verify_lemma23<const D: usize, B: Domain<D>>(
    dom: &EnlargedDomain<D, B>,
    patch: &GraphPatch<D>,
    n_samples: usize,
    exec: Exec,
) -> Lemma23Report {
    let grid = patch_grid(patch, n_samples);
    let f: Vec<f64> = grid.iter().map(|x| graph_function(patch, x).0).collect();
    let eps = patch.epsilon;
    let c2_measured = f
        .iter()
        .map(|v| (v - patch.r).abs() / (eps * patch.r))
        .fold(0.0, f64::max);
    let band_violations = f
        .iter()
        .filter(|v| (*v - patch.r).abs() > dom.c2 * eps * patch.r)
        .count();
    let lip = par::max_range(exec, grid.len(), |i| {
        let mut m = 0.0f64;
        for j in 0..i {
            let d = tangential_dist2(&grid[i], &grid[j]).sqrt();
            m = m.max((f[i] - f[j]).abs() / d);
        }
        m
    })
    .max(0.0);
    let cover = patch
        .balls
        .iter()
        .map(|b| 0.25 * dom.family.entries[b.index].cube.side())
        .fold(0.0, f64::max);
    let boundary_failures = par::map_range(exec, grid.len(), |i| {
        let mut y = grid[i];
        y[D - 1] = f[i];
        let w = patch.to_world(&y);
        usize::from(dom.nearest_boundary(&w).1 > cover + 1e-9 * patch.r)
    })
    .into_iter()
    .sum();
    let rad = 10.0 * patch.r;
    let pts: Vec<Point<D>> = (0..n_samples as u64)
        .map(|i| {
            let h = halton(i, D);
            Point::<D>::from_fn(|k, _| (2.0 * h[k] - 1.0) * rad)
        })
        .filter(|y| y.norm() < rad)
        .collect();
    let side: Vec<Option<bool>> = par::map_slice(exec, &pts, |y| {
        let (fy, _) = graph_function(patch, y);
        if (y[D - 1] - fy).abs() < 1e-9 * patch.r {
            return None;
        }
        let below = y[D - 1] < fy;
        Some(dom.contains(&patch.to_world(y)) != below)
    });
    let side_samples = side.iter().filter(|c| c.is_some()).count();
    let side_failures = side.iter().filter(|c| **c == Some(true)).count();
    Lemma23Report {
        q: patch.q,
        r: patch.r,
        neighbors: patch.balls.len(),
        delta: patch.delta,
        c2_measured,
        band_violations,
        lip_measured: lip,
        lip_over_sqrt_eps: lip / eps.sqrt(),
        side_failures,
        side_samples,
        boundary_failures,
        grid: grid.len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::HalfSpace;

    fn half_plane(eps: f64, lo: [f64; 2], hi: [f64; 2], max_level: i32) -> EnlargedDomain<2, HalfSpace<2>> {
        let bbox = Aabb {
            lo: Point::<2>::new(lo[0], lo[1]),
            hi: Point::<2>::new(hi[0], hi[1]),
        };
        let mut cfg = EnlargeConfig::new(eps, bbox);
        cfg.family.max_level = max_level;
        cfg.exec = Exec::Sequential;
        enlarge(HalfSpace::<2>::upper(4.0), &[Point::<2>::zeros()], &cfg).unwrap()
    }

    #[test]
    fn half_plane_balls_touch_the_line() {
        let d = half_plane(0.05, [-1.0, -1.0], [1.0, 1.0], 12);
        for b in &d.family.entries {
            assert_eq!(b.z[1], 0.0);
            assert!((b.r - 0.05 * b.z.norm()).abs() < 1e-15);
        }
        assert!(d.e_membership(1e-12).is_empty());
        assert_eq!(d.off_sphere_cloud(1e-9), 0);
        // Monotone: points of Ω stay inside.
        for i in 0..50 {
            let p = Point::<2>::new(-1.0 + 0.04 * i as f64, 1e-3);
            assert!(d.contains(&p));
        }
        // Boundary near E converges to E.
        let (q, dist) = d.nearest_boundary(&Point::<2>::new(0.0, 1e-6));
        assert!(q.norm() < 1e-3 && dist < 1e-3);
    }

    #[test]
    fn query_at_a_cloud_point() {
        let d = half_plane(0.05, [-1.0, -1.0], [1.0, 1.0], 10);
        let p = d.cloud.points()[d.cloud_len() / 2];
        assert_eq!(d.nearest_boundary(&p), (p, 0.0));
    }

    #[test]
    fn radius_law_is_one_lipschitz() {
        let d = half_plane(0.05, [-1.0, -1.0], [1.0, 1.0], 12);
        for q in d.interior_balls(20, 0.0) {
            let n = neighbor_family(&d.family, q, 25.0, None).unwrap();
            assert!(n.members.contains(&q));
            for &p in &n.members {
                let (a, b) = (&d.family.entries[p], &d.family.entries[q]);
                assert!((a.r - b.r).abs() <= 0.05 * (a.z - b.z).norm() + 1e-15);
            }
        }
    }

    #[test]
    fn single_ball_formula() {
        let patch = GraphPatch::<2> {
            q: 0,
            z: Point::<2>::zeros(),
            r: 1.0,
            epsilon: 0.01,
            plane: Hyperplane::new(Point::<2>::zeros(), Point::<2>::new(0.0, 1.0)),
            delta: 0.0,
            frame: vec![Point::<2>::new(1.0, 0.0), Point::<2>::new(0.0, 1.0)],
            balls: vec![PatchBall {
                index: 0,
                local: Point::<2>::zeros(),
                r: 1.0,
            }],
            floor: 0.9,
            neighbors: NeighborFamily {
                q: 0,
                members: vec![0],
                center_ratio: 0.0,
                c1_measured: 0.0,
                plane_ratio: 0.0,
            },
        };
        assert_eq!(graph_function(&patch, &Point::<2>::zeros()), (1.0, Some(0)));
        assert_eq!(graph_function(&patch, &Point::<2>::new(1.0, 0.0)).0, 0.9);
        let x = Point::<2>::new(0.3, 0.0);
        let h = 1e-6;
        let fd = (graph_function(&patch, &Point::<2>::new(0.3 + h, 0.0)).0
            - graph_function(&patch, &Point::<2>::new(0.3 - h, 0.0)).0)
            / (2.0 * h);
        let closed = -0.3 / (1.0f64 - 0.09).sqrt();
        assert!((graph_gradient(&patch, &x)[0] - closed).abs() < 1e-12);
        assert!((fd - closed).abs() < 1e-6);
    }

    #[test]
    fn half_plane_local_graph() {
        let d = half_plane(0.01, [0.375, -0.125], [0.625, 0.125], 20);
        assert_eq!(d.e_clearance_violations(), 0);
        let qs = d.interior_balls(3, 0.0);
        assert!(!qs.is_empty());
        for q in qs {
            let patch = d.patch(q).unwrap();
            assert!(patch.delta < 1e-9);
            let rep = verify_lemma23(&d, &patch, 300, Exec::Sequential);
            assert!(rep.passes(), "{rep:?}");
            assert!(rep.c2_measured < 10.5);
        }
    }

    #[test]
    fn precondition_is_enforced() {
        let bbox = Aabb {
            lo: Point::<2>::new(-1.0, -1.0),
            hi: Point::<2>::new(1.0, 1.0),
        };
        let cfg = EnlargeConfig::new(0.05, bbox);
        let disk = crate::geometry::BallDomain::<2> {
            ball: Ball::new(Point::<2>::new(0.0, -1.0), 1.0),
        };
        let r = enlarge(disk, &[Point::<2>::zeros()], &cfg);
        assert!(matches!(r, Err(Error::FlatnessPrecondition { .. })));
    }
}
