//! Whitney-type decompositions by maximal dyadic cubes and the boundary ball
//! family built from them.
//!
//! A cube `Q` is *admissible* when `diam KQ ≤ r_0` and the closed dilate `KQ`
//! misses the complement. For `K ≥ 1` admissibility passes from a cube to its
//! children, so a top-down descent that stops at the first admissible cube
//! emits exactly the maximal ones.

use crate::error::{Error, Result};
use crate::geometry::bvh::Bvh;
use crate::geometry::sampling::halton;
use crate::geometry::{Aabb, Ball, Domain, DyadicCube, OpenSet, Point, PointSetComplement};
use crate::par::{self, Exec};
use log::{debug, info};
use std::collections::HashSet;
use std::fmt::Write as _;

#[derive(Clone, Debug)]
pub struct WhitneyConfig<const D: usize> {
    /// Dilation factor `K ≥ 4`.
    pub k: f64,
    /// Scale cap; `f64::INFINITY` for none.
    pub r0: f64,
    /// Region to decompose.
    pub bbox: Aabb<D>,
    /// Finest level examined; unresolved cells there form the residual collar.
    pub max_level: i32,
    pub exec: Exec,
}

impl<const D: usize> WhitneyConfig<D> {
    pub fn new(k: f64, r0: f64, bbox: Aabb<D>) -> Self {
        WhitneyConfig {
            k,
            r0,
            bbox,
            max_level: 10,
            exec: Exec::default(),
        }
    }

    /// Coarsest level examined: cubes no larger than the box, and small
    /// enough for the scale cap.
    pub fn top_level(&self) -> i32 {
        let ext = (0..D).map(|i| self.bbox.extent()[i]).fold(0.0f64, f64::max);
        let mut level = (-ext.log2()).ceil() as i32;
        if self.r0.is_finite() {
            let cap = ((self.k * (D as f64).sqrt()) / self.r0).log2().ceil() as i32;
            level = level.max(cap);
        }
        level
    }

    fn validate(&self) -> Result<()> {
        if !(self.k >= 4.0) {
            return Err(Error::InvalidInput(format!("K = {} must be at least 4", self.k)));
        }
        if !(self.r0 > 0.0) {
            return Err(Error::InvalidInput(format!("r0 = {} must be positive", self.r0)));
        }
        Ok(())
    }
}

/// Smallest power of two `≥ ε^{-2}`.
pub fn dilation_for_epsilon(epsilon: f64) -> f64 {
    let k = (epsilon * epsilon).recip();
    2f64.powi(k.log2().ceil() as i32)
}

#[derive(Clone, Debug)]
pub struct WhitneyDecomposition<const D: usize> {
    /// Maximal admissible cubes, sorted.
    pub cubes: Vec<DyadicCube<D>>,
    /// Cells at `max_level` that were neither admissible nor discarded.
    pub residual: Vec<DyadicCube<D>>,
    pub config: WhitneyConfig<D>,
    pub top_level: i32,
}

/// Exact admissibility of `q` for the open set.
pub fn is_admissible<const D: usize, S: OpenSet<D> + ?Sized>(set: &S, q: &DyadicCube<D>, k: f64, r0: f64) -> bool {
    let side = q.side();
    if k * side * (D as f64).sqrt() > r0 {
        return false;
    }
    let d = set.dist_to_complement(&q.center());
    let half_diag = 0.5 * k * side * (D as f64).sqrt();
    if d > half_diag {
        return true;
    }
    if set.distance_is_exact() && d <= 0.5 * k * side {
        return false;
    }
    !set.complement_meets_box(&q.dilate(k))
}

enum Visit<const D: usize> {
    Emit(DyadicCube<D>),
    Descend(Vec<DyadicCube<D>>),
    Residual(DyadicCube<D>),
    Drop,
}

/// Maximal admissible cubes inside `cfg.bbox`, descending only into cubes
/// accepted by `keep`.
pub fn decompose_filtered<const D: usize, S, F>(
    set: &S,
    cfg: &WhitneyConfig<D>,
    keep: F,
) -> Result<WhitneyDecomposition<D>>
where
    S: OpenSet<D> + ?Sized,
    F: Fn(&DyadicCube<D>) -> bool + Sync,
{
    cfg.validate()?;
    let top = cfg.top_level();
    if top > cfg.max_level {
        return Err(Error::InvalidInput(format!(
            "top level {top} is finer than max_level {}",
            cfg.max_level
        )));
    }
    let inner = |q: &DyadicCube<D>| {
        let b = q.half_open_box();
        b.intersects(&cfg.bbox) && set.meets_box(&q.aabb()) && keep(q)
    };
    let mut frontier: Vec<DyadicCube<D>> = DyadicCube::cover(&cfg.bbox, top)
        .into_iter()
        .filter(|q| inner(q))
        .collect();
    let mut cubes = Vec::new();
    let mut residual = Vec::new();
    while !frontier.is_empty() {
        let visits = par::map_slice(cfg.exec, &frontier, |q| {
            if is_admissible(set, q, cfg.k, cfg.r0) {
                Visit::Emit(*q)
            } else if q.level >= cfg.max_level {
                Visit::Residual(*q)
            } else {
                let kids: Vec<DyadicCube<D>> = q.children().into_iter().filter(|c| inner(c)).collect();
                if kids.is_empty() {
                    Visit::Drop
                } else {
                    Visit::Descend(kids)
                }
            }
        });
        let mut next = Vec::new();
        for v in visits {
            match v {
                Visit::Emit(q) => cubes.push(q),
                Visit::Descend(kids) => next.extend(kids),
                Visit::Residual(q) => residual.push(q),
                Visit::Drop => {}
            }
        }
        frontier = next;
    }
    if cubes.is_empty() {
        return Err(Error::DepthLimit {
            max_level: cfg.max_level,
        });
    }
    cubes.sort();
    residual.sort();
    debug!("whitney: {} cubes, {} residual cells", cubes.len(), residual.len());
    Ok(WhitneyDecomposition {
        cubes,
        residual,
        config: cfg.clone(),
        top_level: top,
    })
}

/// Maximal admissible cubes of `set` inside `cfg.bbox`.
pub fn decompose<const D: usize, S: OpenSet<D> + ?Sized>(
    set: &S,
    cfg: &WhitneyConfig<D>,
) -> Result<WhitneyDecomposition<D>> {
    decompose_filtered(set, cfg, |_| true)
}

#[derive(Clone, Debug, Default, serde::Serialize)]
pub struct WhitneyReport {
    pub cubes: usize,
    pub probes: usize,
    /// Range of `ℓ(Q) K / min{r_0, dist(x, Ω^c)}` over probes `x ∈ Q`.
    pub a_min: f64,
    pub a_max: f64,
    /// Largest `ℓ(Q)/ℓ(R)` over pairs with `(K/4)Q ∩ (K/4)R ≠ ∅`.
    pub b_max_ratio: f64,
    /// Largest number of dilates `(K/4)Q` containing a probe.
    pub c_max_overlap: usize,
    pub maximality_violations: usize,
    pub disjointness_violations: usize,
    /// Probes far from the complement that are not in exactly one cube.
    pub covering_failures: usize,
}

impl<const D: usize> WhitneyDecomposition<D> {
    fn cube_set(&self) -> HashSet<DyadicCube<D>> {
        self.cubes.iter().copied().collect()
    }

    /// Emitted cube containing `p`, if any.
    pub fn locate(&self, set: &HashSet<DyadicCube<D>>, p: &Point<D>) -> Option<DyadicCube<D>> {
        (self.top_level..=self.config.max_level)
            .map(|l| DyadicCube::containing(p, l))
            .find(|q| set.contains(q))
    }

    /// Each emitted cube's parent must be inadmissible.
    pub fn maximality_violations<S: OpenSet<D> + ?Sized>(&self, set: &S) -> usize {
        let bad = par::map_slice(self.config.exec, &self.cubes, |q| {
            q.level > self.top_level && is_admissible(set, &q.parent(), self.config.k, self.config.r0)
        });
        bad.into_iter().filter(|b| *b).count()
    }

    /// Pairs of emitted cubes with overlapping interiors (exact, on corners).
    pub fn disjointness_violations(&self) -> usize {
        let set = self.cube_set();
        let mut bad = self.cubes.len() - set.len();
        for q in &self.cubes {
            let mut a = *q;
            while a.level > self.top_level {
                a = a.parent();
                if set.contains(&a) {
                    bad += 1;
                }
            }
        }
        bad
    }

    /// Checks maximality, disjointness, covering, and reports the three
    /// Whitney properties over `samples` quasi-random probes.
    pub fn verify_properties<S: OpenSet<D> + ?Sized>(&self, set: &S, samples: usize) -> WhitneyReport {
        let cfg = &self.config;
        let lookup = self.cube_set();
        let quarter = cfg.k / 4.0;
        let boxes: Vec<Aabb<D>> = self.cubes.iter().map(|q| q.dilate(quarter)).collect();
        let bvh = Bvh::build(&boxes);
        let b_max_ratio = par::max_range(cfg.exec, self.cubes.len(), |i| {
            let mut worst = 1.0f64;
            let b = &boxes[i];
            bvh.visit(
                |nb| nb.intersects(b),
                |j| {
                    if boxes[j].intersects(b) {
                        worst = worst.max(self.cubes[i].side() / self.cubes[j].side());
                    }
                    true
                },
            );
            worst
        });
        let finest = self
            .cubes
            .iter()
            .chain(self.residual.iter())
            .map(|q| q.level)
            .max()
            .unwrap_or(cfg.max_level);
        let collar = cfg.k * (D as f64).sqrt() * 2f64.powi(-finest);
        let smallest = 2f64.powi(-self.cubes.iter().map(|q| q.level).max().unwrap_or(0));
        let per_probe = par::map_range(cfg.exec, samples, |i| {
            let u = halton(i as u64, D);
            let p = Point::<D>::from_fn(|j, _| cfg.bbox.lo[j] + u[j] * cfg.bbox.extent()[j]);
            if !set.contains(&p) {
                return None;
            }
            let dist = set.dist_to_complement(&p);
            let q = self.locate(&lookup, &p);
            let a = q.map(|q| q.side() * cfg.k / cfg.r0.min(dist));
            let mut overlap = 0usize;
            bvh.visit(
                |nb| nb.contains(&p),
                |j| {
                    if boxes[j].contains(&p) {
                        overlap += 1;
                    }
                    true
                },
            );
            let interior = (0..D).all(|j| p[j] - cfg.bbox.lo[j] > smallest && cfg.bbox.hi[j] - p[j] > smallest);
            let must_cover = interior && dist > collar;
            let count = (self.top_level..=cfg.max_level)
                .filter(|&l| lookup.contains(&DyadicCube::containing(&p, l)))
                .count();
            Some((a, overlap, must_cover && count != 1))
        });
        let mut report = WhitneyReport {
            cubes: self.cubes.len(),
            a_min: f64::INFINITY,
            a_max: 0.0,
            b_max_ratio,
            ..Default::default()
        };
        for (a, overlap, fail) in per_probe.into_iter().flatten() {
            report.probes += 1;
            if let Some(a) = a {
                report.a_min = report.a_min.min(a);
                report.a_max = report.a_max.max(a);
            }
            report.c_max_overlap = report.c_max_overlap.max(overlap);
            report.covering_failures += fail as usize;
        }
        report.maximality_violations = self.maximality_violations(set);
        report.disjointness_violations = self.disjointness_violations();
        info!(
            "whitney report: a in [{:.3}, {:.3}], b {:.1}, c {}",
            report.a_min, report.a_max, report.b_max_ratio, report.c_max_overlap
        );
        report
    }

    /// One cube per line: `level k_1 … k_D`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for q in &self.cubes {
            let _ = writeln!(s, "{q}");
        }
        s
    }
}

/// One member of the ball family: the cube, its boundary point and radius.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BallEntry<const D: usize> {
    pub cube: DyadicCube<D>,
    pub z: Point<D>,
    pub r: f64,
    /// `dist(z_Q, E)` measured against the sample.
    pub dist_e: f64,
}

impl<const D: usize> BallEntry<D> {
    pub fn ball(&self) -> Ball<D> {
        Ball::new(self.z, self.r)
    }
}

#[derive(Clone, Debug)]
pub struct FamilyConfig<const D: usize> {
    pub bbox: Aabb<D>,
    pub r0: f64,
    pub max_level: i32,
    /// Covering radius of the sample of `E`; cubes finer than this are not resolved.
    pub e_covering: f64,
    pub exec: Exec,
}

impl<const D: usize> FamilyConfig<D> {
    pub fn new(bbox: Aabb<D>) -> Self {
        FamilyConfig {
            bbox,
            r0: f64::INFINITY,
            max_level: 14,
            e_covering: 0.0,
            exec: Exec::default(),
        }
    }
}

/// The family `{B_Q}` over cubes of `W_K(E^c)` meeting `∂Ω`.
#[derive(Clone, Debug)]
pub struct BallFamily<const D: usize> {
    pub entries: Vec<BallEntry<D>>,
    pub epsilon: f64,
    pub k: f64,
    pub r0: f64,
    pub bbox: Aabb<D>,
    /// Measured range of `ℓ(Q) / (ε r_Q)`.
    pub c_low: f64,
    pub c_high: f64,
    pub e: PointSetComplement<D>,
    bvh: Bvh<D>,
}

impl<const D: usize> BallFamily<D> {
    pub fn from_entries(
        entries: Vec<BallEntry<D>>,
        epsilon: f64,
        k: f64,
        r0: f64,
        bbox: Aabb<D>,
        e: PointSetComplement<D>,
    ) -> Self {
        let boxes: Vec<Aabb<D>> = entries.iter().map(|b| b.ball().aabb()).collect();
        let bvh = Bvh::build(&boxes);
        let ratios = entries.iter().map(|b| b.cube.side() / (epsilon * b.r));
        let (c_low, c_high) = ratios.fold((f64::INFINITY, 0.0f64), |(lo, hi), x| (lo.min(x), hi.max(x)));
        BallFamily {
            entries,
            epsilon,
            k,
            r0,
            bbox,
            c_low,
            c_high,
            e,
            bvh,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Indices of balls whose open ball contains `p`.
    pub fn containing(&self, p: &Point<D>) -> Vec<usize> {
        let mut out = Vec::new();
        self.bvh.visit(
            |b| b.contains(p),
            |i| {
                if self.entries[i].ball().contains(p) {
                    out.push(i);
                }
                true
            },
        );
        out.sort_unstable();
        out
    }

    pub fn inside_any(&self, p: &Point<D>) -> bool {
        !self
            .bvh
            .visit(|b| b.contains(p), |i| !self.entries[i].ball().contains(p))
    }

    /// Like [`BallFamily::inside_any`] but skipping ball `skip`.
    pub fn inside_other(&self, p: &Point<D>, skip: usize) -> bool {
        !self
            .bvh
            .visit(|b| b.contains(p), |i| i == skip || !self.entries[i].ball().contains(p))
    }

    /// `max_P (r_P - |p - z_P|)` over balls containing `p`, with the index.
    pub fn max_margin(&self, p: &Point<D>) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        self.bvh.visit(
            |b| b.contains(p),
            |i| {
                let e = &self.entries[i];
                let m = e.r - (p - e.z).norm();
                if m > 0.0 && best.map(|b| m > b.1).unwrap_or(true) {
                    best = Some((i, m));
                }
                true
            },
        );
        best
    }

    /// Indices of balls meeting the open ball `b`, sorted.
    pub fn meeting(&self, b: &Ball<D>) -> Vec<usize> {
        let bx = b.aabb();
        let mut out = Vec::new();
        self.bvh.visit(
            |nb| nb.intersects(&bx),
            |i| {
                let e = &self.entries[i];
                if (e.z - b.center).norm() < e.r + b.radius {
                    out.push(i);
                }
                true
            },
        );
        out.sort_unstable();
        out
    }

    /// Indices of balls whose closure meets the box, sorted.
    pub fn meeting_box(&self, bx: &Aabb<D>) -> Vec<usize> {
        let mut out = Vec::new();
        self.bvh.visit(
            |nb| nb.intersects(bx),
            |i| {
                if bx.intersects_ball(&self.entries[i].ball()) {
                    out.push(i);
                }
                true
            },
        );
        out.sort_unstable();
        out
    }

    /// CSV rows `level, k_1..k_D, z_1..z_D, r`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("level");
        for i in 0..D {
            let _ = write!(s, ",k{}", i + 1);
        }
        for i in 0..D {
            let _ = write!(s, ",z{}", i + 1);
        }
        s.push_str(",r\n");
        for e in &self.entries {
            let _ = write!(s, "{}", e.cube.level);
            for k in e.cube.corner {
                let _ = write!(s, ",{k}");
            }
            for i in 0..D {
                let _ = write!(s, ",{:.17e}", e.z[i]);
            }
            let _ = writeln!(s, ",{:.17e}", e.r);
        }
        s
    }

    /// Largest violation of `|r_P - r_Q| ≤ ε |z_P - z_Q|` over all pairs of
    /// meeting balls (positive means violated).
    pub fn lipschitz_excess(&self, exec: Exec) -> f64 {
        par::max_range(exec, self.entries.len(), |i| {
            let q = &self.entries[i];
            self.meeting(&q.ball())
                .into_iter()
                .map(|j| {
                    let p = &self.entries[j];
                    (p.r - q.r).abs() - self.epsilon * (p.z - q.z).norm()
                })
                .fold(f64::NEG_INFINITY, f64::max)
        })
    }
}

/// Boundary point chosen for a cube: nearest to the center among boundary
/// points inside the cube, ties by lexicographic order.
fn pick_boundary_point<const D: usize, Dm: Domain<D> + ?Sized>(domain: &Dm, q: &DyadicCube<D>) -> Option<Point<D>> {
    let c = q.center();
    let (p, _) = domain.nearest_boundary(&c);
    if q.contains(&p) {
        return Some(p);
    }
    let samples = domain.boundary_samples(&q.aabb(), q.side() / 32.0);
    samples.into_iter().filter(|s| q.contains(s)).min_by(|a, b| {
        (a - c).norm_squared().total_cmp(&(b - c).norm_squared()).then_with(|| {
            (0..D)
                .map(|i| a[i].total_cmp(&b[i]))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
    })
}

/// `{B_Q}` for cubes of `W_K(E^c)`, `K = ε^{-2}` rounded up to a power of two,
/// that meet `∂Ω`.
pub fn boundary_family<const D: usize, Dm: Domain<D> + ?Sized>(
    domain: &Dm,
    e: &[Point<D>],
    epsilon: f64,
    cfg: &FamilyConfig<D>,
) -> Result<BallFamily<D>> {
    if e.is_empty() {
        return Err(Error::InvalidInput("E must be nonempty".into()));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidInput(format!("epsilon = {epsilon} must lie in (0, 1)")));
    }
    if epsilon >= 0.01 {
        log::warn!("epsilon = {epsilon} is not below 1/100");
    }
    let k = dilation_for_epsilon(epsilon);
    info!("ball family: epsilon = {epsilon}, K = {k}");
    let set = PointSetComplement::new(e.to_vec());
    let mut max_level = cfg.max_level;
    if cfg.e_covering > 0.0 {
        max_level = max_level.min((-cfg.e_covering.log2()).floor() as i32);
    }
    let wcfg = WhitneyConfig {
        k,
        r0: cfg.r0,
        bbox: cfg.bbox,
        max_level,
        exec: cfg.exec,
    };
    let w = match decompose_filtered(&set, &wcfg, |q| domain.boundary_meets_box(&q.half_open_box())) {
        Ok(w) => w,
        Err(Error::DepthLimit { .. }) => return Err(Error::EmptyFamily),
        Err(err) => return Err(err),
    };
    let entries: Vec<Option<BallEntry<D>>> = par::map_slice(cfg.exec, &w.cubes, |q| {
        let z = pick_boundary_point(domain, q)?;
        let dist_e = set.dist(&z);
        Some(BallEntry {
            cube: *q,
            z,
            r: epsilon * cfg.r0.min(dist_e),
            dist_e,
        })
    });
    let entries: Vec<BallEntry<D>> = entries.into_iter().flatten().filter(|b| b.r > 0.0).collect();
    if entries.is_empty() {
        return Err(Error::EmptyFamily);
    }
    Ok(BallFamily::from_entries(entries, epsilon, k, cfg.r0, cfg.bbox, set))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::domain::Interior;
    use crate::geometry::{BallDomain, HalfSpace};

    fn half_plane_cfg() -> WhitneyConfig<2> {
        let bbox = Aabb {
            lo: Point::<2>::new(-8.0, 0.0),
            hi: Point::<2>::new(8.0, 8.0),
        };
        let mut c = WhitneyConfig::new(4.0, f64::INFINITY, bbox);
        c.max_level = 7;
        c
    }

    #[test]
    fn half_plane_oracle_cubes() {
        let h = HalfSpace::<2>::upper(8.0);
        let set = Interior(&h);
        let w = decompose(&set, &half_plane_cfg()).unwrap();
        assert!(w.cubes.contains(&DyadicCube::new(0, [0, 2])));
        assert!(!w.cubes.contains(&DyadicCube::new(0, [0, 1])));
        assert!(is_admissible(&set, &DyadicCube::new(0, [0, 2]), 4.0, f64::INFINITY));
        assert!(!is_admissible(&set, &DyadicCube::new(-1, [0, 1]), 4.0, f64::INFINITY));
    }

    #[test]
    fn half_plane_properties() {
        let h = HalfSpace::<2>::upper(8.0);
        let set = Interior(&h);
        let w = decompose(&set, &half_plane_cfg()).unwrap();
        let r = w.verify_properties(&set, 2000);
        assert_eq!(r.maximality_violations, 0);
        assert_eq!(r.disjointness_violations, 0);
        assert_eq!(r.covering_failures, 0);
        assert!(r.b_max_ratio <= 4.0);
    }

    #[test]
    fn finite_r0_caps_every_cube() {
        let set = PointSetComplement::new(vec![Point::<2>::new(0.3, 0.3)]);
        let bbox = Aabb {
            lo: Point::<2>::new(-2.0, -2.0),
            hi: Point::<2>::new(2.0, 2.0),
        };
        let mut cfg = WhitneyConfig::new(4.0, 0.5, bbox);
        cfg.max_level = 8;
        let w = decompose(&set, &cfg).unwrap();
        for q in &w.cubes {
            assert!(4.0 * q.diameter() <= 0.5);
        }
    }

    #[test]
    fn disk_family_radii_follow_distance_to_e() {
        let disk = BallDomain::<2>::unit();
        let e = vec![Point::<2>::new(1.0, 0.0)];
        let mut cfg = FamilyConfig::new(Aabb {
            lo: Point::<2>::new(-1.5, -1.5),
            hi: Point::<2>::new(1.5, 1.5),
        });
        cfg.max_level = 9;
        let fam = boundary_family(&disk, &e, 0.25, &cfg).unwrap();
        for b in &fam.entries {
            assert!(b.cube.contains(&b.z));
            assert!(((b.z.norm()) - 1.0).abs() < 1e-9);
            assert!((b.r - 0.25 * (b.z - e[0]).norm()).abs() < 1e-12);
        }
        assert!(fam.lipschitz_excess(Exec::Sequential) <= 1e-12);
    }
}
