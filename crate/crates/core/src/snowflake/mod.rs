//! Snowflake approximants built by repeatedly adding blips along boundary cubes.
//!
//! The reference blip lives over `Q(1) = [-1/2, 1/2]^d × {0}` with outward
//! normal `-e_D`: the domain lies above, the profile graph is raised into it.
//! A [`BlipCube`] carries the conformal placement `T` that maps `Q(1)` onto it,
//! so a child cube's placement is the parent's composed with the template's.

pub mod profile;
pub mod subdivision;

use crate::error::{Error, Result};
use crate::geometry::mesh::vertex_key;
use crate::geometry::{BoundaryMesh, Domain, MeshDomain, Point, Simplex};
use crate::par::{self, Exec};
use nalgebra::SMatrix;
use std::fmt::Write as _;

pub use profile::{smallest_separating_n, tent_radius, Face, Profile, ProfileKind};
pub use subdivision::{subdivide_face, FaceSubdivision};

/// Half-width of the lateral working box of the unbounded variant.
pub const WORKING_HALF_WIDTH: f64 = 4.0;

/// Conformal affine map `x ↦ translation + scale · rotation · x`.
#[derive(Clone, Debug, PartialEq)]
pub struct AffinePlacement<const D: usize> {
    pub scale: f64,
    pub rotation: SMatrix<f64, D, D>,
    pub translation: Point<D>,
}

impl<const D: usize> AffinePlacement<D> {
    pub fn identity() -> Self {
        AffinePlacement {
            scale: 1.0,
            rotation: SMatrix::identity(),
            translation: Point::zeros(),
        }
    }

    pub fn apply(&self, x: &Point<D>) -> Point<D> {
        self.translation + self.rotation * x * self.scale
    }

    /// Local coordinates `T^{-1}(p)`.
    pub fn local(&self, p: &Point<D>) -> Point<D> {
        self.rotation.transpose() * (p - self.translation) / self.scale
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &AffinePlacement<D>) -> AffinePlacement<D> {
        AffinePlacement {
            scale: self.scale * inner.scale,
            rotation: self.rotation * inner.rotation,
            translation: self.apply(&inner.translation),
        }
    }

    pub fn apply_simplex(&self, s: &Simplex<D>) -> Simplex<D> {
        Simplex::new(s.v.map(|p| self.apply(&p)))
    }

    /// Orthogonal with determinant `+1`, to `tol`.
    pub fn is_rotation(&self, tol: f64) -> bool {
        let r = &self.rotation;
        (r.transpose() * r - SMatrix::<f64, D, D>::identity()).amax() <= tol && (det(r) - 1.0).abs() <= tol
    }
}

fn det<const D: usize>(r: &SMatrix<f64, D, D>) -> f64 {
    match D {
        2 => r[(0, 0)] * r[(1, 1)] - r[(0, 1)] * r[(1, 0)],
        _ => {
            let c = crate::geometry::linalg::cross3(r.column(1).as_slice(), r.column(2).as_slice());
            (0..3).map(|i| r[(i, 0)] * c[i]).sum()
        }
    }
}

/// Placement of a face cube of side `side` centred at `center` with the given
/// outward normal. The distinguished side `{x_1 = 1/2}` goes to the in-plane
/// direction closest to `preferred` among the coordinate-like candidates
/// (first one wins ties); in the plane it is forced by orientation.
fn face_placement<const D: usize>(
    center: Point<D>,
    side: f64,
    outward: Point<D>,
    preferred: &Point<D>,
) -> AffinePlacement<D> {
    let inward = -outward;
    let mut rot = SMatrix::<f64, D, D>::zeros();
    if D == 2 {
        rot[(0, 0)] = inward[1];
        rot[(1, 0)] = -inward[0];
    } else {
        let axes: Vec<usize> = (0..D).filter(|&i| outward[i].abs() < 0.5).collect();
        let mut cands = Vec::new();
        for &i in &axes {
            let e = crate::geometry::basis::<D>(i);
            cands.push(e);
            cands.push(-e);
        }
        let mut best = 0;
        for (i, c) in cands.iter().enumerate() {
            if c.dot(preferred) > cands[best].dot(preferred) + 1e-12 {
                best = i;
            }
        }
        let r1 = cands[best];
        let r2 = crate::geometry::linalg::cross3(inward.as_slice(), r1.as_slice());
        for i in 0..D {
            rot[(i, 0)] = r1[i];
            rot[(i, 1)] = r2[i];
        }
    }
    for i in 0..D {
        rot[(i, D - 1)] = inward[i];
    }
    AffinePlacement {
        scale: side,
        rotation: rot,
        translation: center,
    }
}

/// The tents `P_Q` (outside, closed) and `P̃_Q` (inside, open) of a cube.
#[derive(Clone, Debug)]
pub struct BlipTents<const D: usize> {
    pub placement: AffinePlacement<D>,
    pub b: f64,
}

impl<const D: usize> BlipTents<D> {
    fn level(&self, y: &Point<D>, h: f64) -> f64 {
        (0..D - 1)
            .map(|i| 1.0 - 2.0 * y[i].abs() - h / self.b)
            .fold(f64::INFINITY, f64::min)
    }

    /// `p ∈ P_Q = cch(Q ∪ {a_Q + bℓ e})`.
    pub fn in_outer(&self, p: &Point<D>, tol: f64) -> bool {
        let y = self.placement.local(p);
        y[D - 1] <= tol && y[D - 1] >= -self.b - tol && self.level(&y, -y[D - 1]) >= -tol
    }

    /// `p ∈ P̃_Q = int cch(Q ∪ {a_Q - bℓ e})`.
    pub fn in_inner(&self, p: &Point<D>) -> bool {
        let y = self.placement.local(p);
        y[D - 1] > 0.0 && self.level(&y, y[D - 1]) > 0.0
    }

    /// `p ∈ P_Q ∪ P̃_Q` up to `tol` (in local units).
    pub fn in_union(&self, p: &Point<D>, tol: f64) -> bool {
        let y = self.placement.local(p);
        self.level(&y, y[D - 1].abs()) >= -tol && y[D - 1].abs() <= self.b + tol
    }

    /// Local sample points in `P_Q` (negative heights) and `P̃_Q`.
    fn probe_points(&self) -> (Vec<Point<D>>, Vec<Point<D>>) {
        let mut outer = Vec::new();
        let mut inner = Vec::new();
        for &x in &[0.0, -0.25, 0.25] {
            let mut y = Point::<D>::zeros();
            y[0] = x;
            let h = 0.5 * self.b * (1.0 - 2.0 * x.abs());
            y[D - 1] = -h;
            outer.push(self.placement.apply(&y));
            y[D - 1] = h;
            inner.push(self.placement.apply(&y));
        }
        (outer, inner)
    }
}

/// A boundary `d`-cube with its placement. The distinguished side is the
/// image of `{x_1 = 1/2}`, the outward normal the image of `-e_D`.
#[derive(Clone, Debug, PartialEq)]
pub struct BlipCube<const D: usize> {
    pub placement: AffinePlacement<D>,
}

impl<const D: usize> BlipCube<D> {
    pub fn center(&self) -> Point<D> {
        self.placement.translation
    }

    pub fn side(&self) -> f64 {
        self.placement.scale
    }

    pub fn outward(&self) -> Point<D> {
        -self.placement.rotation.column(D - 1).into_owned()
    }

    /// Orthonormal in-plane frame; the first vector is normal to the
    /// distinguished side.
    pub fn frame(&self) -> Vec<Point<D>> {
        (0..D - 1)
            .map(|i| self.placement.rotation.column(i).into_owned())
            .collect()
    }

    /// Distinguished side as `(axis, sign)` in the frame: always `(0, +1)`.
    pub fn distinguished_side(&self) -> (usize, f64) {
        (0, 1.0)
    }

    /// Center of the distinguished side.
    pub fn distinguished_center(&self) -> Point<D> {
        let mut y = Point::<D>::zeros();
        y[0] = 0.5;
        self.placement.apply(&y)
    }

    pub fn corners(&self) -> Vec<Point<D>> {
        let d = D - 1;
        (0..1usize << d)
            .map(|m| {
                let mut y = Point::<D>::zeros();
                for i in 0..d {
                    y[i] = if m >> i & 1 == 1 { 0.5 } else { -0.5 };
                }
                self.placement.apply(&y)
            })
            .collect()
    }

    pub fn simplices(&self) -> Vec<Simplex<D>> {
        reference_cube_simplices::<D>()
            .iter()
            .map(|s| self.placement.apply_simplex(s))
            .collect()
    }

    pub fn tents(&self, b: f64) -> BlipTents<D> {
        BlipTents {
            placement: self.placement.clone(),
            b,
        }
    }

    /// Frame orthonormal and rotation proper, to `tol`.
    pub fn is_valid(&self, tol: f64) -> bool {
        self.placement.is_rotation(tol)
    }
}

/// Simplices of `Q(1)` oriented with outward normal `-e_D`.
fn reference_cube_simplices<const D: usize>() -> Vec<Simplex<D>> {
    let pt = |c: &[f64]| Point::<D>::from_fn(|i, _| c[i]);
    if D == 2 {
        return vec![Simplex::new(
            [pt(&[-0.5, 0.0]), pt(&[0.5, 0.0])].as_slice().try_into().unwrap(),
        )];
    }
    rect_simplices(-0.5, 0.5, -0.5, 0.5)
}

/// Two triangles of a horizontal rectangle at height 0 with normal `-e_3`.
fn rect_simplices<const D: usize>(x0: f64, x1: f64, y0: f64, y1: f64) -> Vec<Simplex<D>> {
    let pt = |x: f64, y: f64| Point::<D>::from_fn(|i, _| [x, y, 0.0][i]);
    let (c00, c01, c10, c11) = (pt(x0, y0), pt(x0, y1), pt(x1, y0), pt(x1, y1));
    let tri = |a, b, c| Simplex::new([a, b, c].as_slice().try_into().unwrap());
    vec![tri(c00, c11, c10), tri(c00, c01, c11)]
}

#[derive(Clone, Debug)]
pub struct BlipConfig {
    pub theta: f64,
    /// Frequency `N`; `None` selects the smallest separating value.
    pub n: Option<u32>,
    pub b: f64,
    pub profile: ProfileKind,
    pub depth: usize,
    pub max_depth: usize,
    /// Finest face subdivision level.
    pub k_max: u32,
    /// Cubes are kept when `dist(Q, edges) ≥ c_w ℓ(Q)`.
    pub c_w: f64,
    pub max_faces: usize,
    /// Sampled check of the tent hypotheses before each blip.
    pub check_tents: bool,
    pub exec: Exec,
}

impl Default for BlipConfig {
    fn default() -> Self {
        BlipConfig {
            theta: 0.1,
            n: None,
            b: 0.05,
            profile: ProfileKind::Tent,
            depth: 2,
            max_depth: 5,
            k_max: 3,
            c_w: 1.0,
            max_faces: 4_000_000,
            check_tents: true,
            exec: Exec::Parallel,
        }
    }
}

impl BlipConfig {
    pub fn resolve_profile(&self, d: usize) -> Result<Profile> {
        if !(self.theta >= 0.0 && self.theta < 1.0) {
            return Err(Error::InvalidInput(format!(
                "theta = {} must lie in [0, 1)",
                self.theta
            )));
        }
        if self.b <= 0.0 {
            return Err(Error::InvalidInput("b must be positive".into()));
        }
        let n = match self.n {
            Some(n) => n,
            None => smallest_separating_n(&self.profile, self.theta, self.b, d, 10_000)?,
        };
        let p = Profile::new(self.profile.clone(), self.theta, n, d)?;
        let sep = p.separation(self.b);
        if sep < self.b / 100.0 {
            return Err(Error::HypothesisViolation {
                which: "separation",
                detail: format!("N = {n} gives separation {sep:.3e} < b/100"),
            });
        }
        Ok(p)
    }
}

/// Reference blip over `Q(1)`: graph faces, child placements and collar.
#[derive(Clone, Debug)]
pub struct Template<const D: usize> {
    pub profile: Profile,
    pub faces: Vec<Face<D>>,
    pub children: Vec<AffinePlacement<D>>,
    pub collar: Vec<Simplex<D>>,
    pub c_low: f64,
    pub c_high: f64,
    surface_samples: Vec<Point<D>>,
    cube_samples: Vec<Point<D>>,
}

impl<const D: usize> Template<D> {
    pub fn new(profile: Profile, k_max: u32, c_w: f64, b: f64) -> Result<Self> {
        let faces = profile.graph_faces::<D>();
        let e1 = crate::geometry::basis::<D>(0);
        let mut children = Vec::new();
        let mut collar = Vec::new();
        let (mut c_low, mut c_high) = (f64::INFINITY, 0.0f64);
        for f in &faces {
            let sub = subdivide_face(f, k_max, c_w, &e1);
            children.extend(sub.cubes);
            collar.extend(sub.collar);
            c_low = c_low.min(sub.c_low);
            c_high = c_high.max(sub.c_high);
        }
        let reference = BlipTents {
            placement: AffinePlacement::identity(),
            b,
        };
        for f in &faces {
            for v in &f.vertices {
                if !reference.in_union(v, 1e-12) {
                    return Err(Error::HypothesisViolation {
                        which: "containment",
                        detail: format!("graph vertex {:?} leaves the tents", v.as_slice()),
                    });
                }
            }
        }
        let mut surface_samples = Vec::new();
        for f in &faces {
            for k in 1..f.vertices.len().max(2) - (D - 2) {
                let mut v = [Point::<D>::zeros(); D];
                v[0] = f.vertices[0];
                for j in 1..D {
                    v[j] = f.vertices[k + j - 1];
                }
                surface_samples.extend(Simplex::new(v).samples(1.0 / 32.0));
            }
        }
        let cube_samples = reference_cube_simplices::<D>()
            .iter()
            .flat_map(|s| s.samples(1.0 / 32.0))
            .collect();
        Ok(Template {
            profile,
            faces,
            children,
            collar,
            c_low,
            c_high,
            surface_samples,
            cube_samples,
        })
    }

    fn simplices_per_blip(&self) -> usize {
        self.collar.len() + self.children.len() * reference_cube_simplices::<D>().len()
    }
}

/// One approximant `Ω_m`.
#[derive(Clone, Debug)]
pub struct SnowflakeGeneration<const D: usize> {
    pub index: usize,
    pub bounded: bool,
    pub domain: MeshDomain<D>,
    /// Cubes `G_m`.
    pub cubes: Vec<BlipCube<D>>,
    /// Edge set `E_m`: the accumulated collars.
    pub collar: Vec<Simplex<D>>,
    /// Flat part outside `Q(1)` (unbounded variant only).
    pub base: Vec<Simplex<D>>,
    /// `dist_H(∂Ω_{m-1}, ∂Ω_m)`; `None` for the seed.
    pub increment: Option<f64>,
}

impl<const D: usize> SnowflakeGeneration<D> {
    pub fn mesh(&self) -> &BoundaryMesh<D> {
        &self.domain.mesh
    }

    pub fn min_side(&self) -> f64 {
        self.cubes.iter().map(|c| c.side()).fold(f64::INFINITY, f64::min)
    }

    pub fn max_side(&self) -> f64 {
        self.cubes.iter().map(|c| c.side()).fold(0.0, f64::max)
    }

    /// `G_m` as CSV, one cube per row.
    pub fn cubes_csv(&self) -> String {
        let mut s = String::from("side");
        for i in 0..D {
            let _ = write!(s, ",center_{i}");
        }
        for i in 0..D {
            let _ = write!(s, ",outward_{i}");
        }
        for i in 0..D {
            let _ = write!(s, ",gamma_{i}");
        }
        s.push('\n');
        for c in &self.cubes {
            let _ = write!(s, "{:.17e}", c.side());
            let g = c.frame()[0];
            for v in [c.center(), c.outward(), g] {
                for i in 0..D {
                    let _ = write!(s, ",{:.17e}", v[i]);
                }
            }
            s.push('\n');
        }
        s
    }

    /// `E_m` as CSV, one simplex per row.
    pub fn collar_csv(&self) -> String {
        let mut s = String::new();
        for j in 0..D {
            for i in 0..D {
                if j + i > 0 {
                    s.push(',');
                }
                let _ = write!(s, "v{j}_{i}");
            }
        }
        s.push('\n');
        for t in &self.collar {
            let row: Vec<String> =
                t.v.iter()
                    .flat_map(|p| p.iter().map(|x| format!("{x:.17e}")).collect::<Vec<_>>())
                    .collect();
            s.push_str(&row.join(","));
            s.push('\n');
        }
        s
    }
}

/// A full construction `Ω_0, …, Ω_m`.
#[derive(Clone, Debug)]
pub struct Snowflake<const D: usize> {
    pub config: BlipConfig,
    pub template: Template<D>,
    pub generations: Vec<SnowflakeGeneration<D>>,
}

impl<const D: usize> Snowflake<D> {
    pub fn last(&self) -> &SnowflakeGeneration<D> {
        self.generations.last().expect("at least the seed")
    }

    /// Width of the collar left by the finest subdivision level.
    pub fn collar_width(&self) -> f64 {
        8f64.powi(-(self.config.k_max as i32))
    }

    /// Ratios of successive Hausdorff increments.
    pub fn increment_ratios(&self) -> Vec<f64> {
        let inc: Vec<f64> = self.generations.iter().filter_map(|g| g.increment).collect();
        inc.windows(2).map(|w| w[1] / w[0]).collect()
    }
}

fn make_domain<const D: usize>(simplices: Vec<Simplex<D>>, bounded: bool) -> MeshDomain<D> {
    let mesh = BoundaryMesh::new(simplices);
    if bounded {
        MeshDomain::closed(mesh)
    } else {
        MeshDomain::graph(mesh, WORKING_HALF_WIDTH)
    }
}

fn seed<const D: usize>(bounded: bool) -> (Vec<BlipCube<D>>, Vec<Simplex<D>>) {
    let e1 = crate::geometry::basis::<D>(0);
    if !bounded {
        let w = WORKING_HALF_WIDTH;
        let base = if D == 2 {
            let pt = |x: f64| Point::<D>::from_fn(|i, _| if i == 0 { x } else { 0.0 });
            vec![
                Simplex::new([pt(-w), pt(-0.5)].as_slice().try_into().unwrap()),
                Simplex::new([pt(0.5), pt(w)].as_slice().try_into().unwrap()),
            ]
        } else {
            let mut v = rect_simplices(-w, w, -w, -0.5);
            v.extend(rect_simplices(-w, w, 0.5, w));
            v.extend(rect_simplices(-w, -0.5, -0.5, 0.5));
            v.extend(rect_simplices(0.5, w, -0.5, 0.5));
            v
        };
        return (
            vec![BlipCube {
                placement: AffinePlacement::identity(),
            }],
            base,
        );
    }
    // Unit cube above Q(1): Q(1) is its bottom face.
    let mut cubes = vec![BlipCube {
        placement: AffinePlacement::identity(),
    }];
    let mut top = Point::<D>::zeros();
    top[D - 1] = 1.0;
    let mut up = Point::<D>::zeros();
    up[D - 1] = 1.0;
    let mut faces = vec![(top, up)];
    for i in 0..D - 1 {
        for s in [1.0, -1.0] {
            let mut c = Point::<D>::zeros();
            c[i] = 0.5 * s;
            c[D - 1] = 0.5;
            let mut n = Point::<D>::zeros();
            n[i] = s;
            faces.push((c, n));
        }
    }
    for (c, n) in faces {
        cubes.push(BlipCube {
            placement: face_placement(c, 1.0, n, &e1),
        });
    }
    (cubes, Vec::new())
}

/// Per-blip output in world coordinates.
struct BlipOutput<const D: usize> {
    children: Vec<BlipCube<D>>,
    collar: Vec<Simplex<D>>,
}

/// Adds a blip along `cube`: returns the child cubes and the new collar.
/// The caller replaces the cube's simplices by these.
pub fn add_blip<const D: usize>(
    domain: &MeshDomain<D>,
    cube: &BlipCube<D>,
    template: &Template<D>,
    b: f64,
    check_tents: bool,
) -> Result<(Vec<BlipCube<D>>, Vec<Simplex<D>>)> {
    if !cube.is_valid(1e-9) {
        return Err(Error::Placement(format!(
            "cube at {:?} has an improper frame",
            cube.center().as_slice()
        )));
    }
    if check_tents {
        let (outer, inner) = cube.tents(b).probe_points();
        if let Some(p) = outer.iter().find(|p| domain.contains(p)) {
            return Err(Error::HypothesisViolation {
                which: "P_Q disjoint from the domain",
                detail: format!("{:?}", p.as_slice()),
            });
        }
        if let Some(p) = inner.iter().find(|p| !domain.contains(p)) {
            return Err(Error::HypothesisViolation {
                which: "tilde P_Q inside the domain",
                detail: format!("{:?}", p.as_slice()),
            });
        }
    }
    let out = blip_output(cube, template);
    Ok((out.children, out.collar))
}

fn blip_output<const D: usize>(cube: &BlipCube<D>, template: &Template<D>) -> BlipOutput<D> {
    BlipOutput {
        children: template
            .children
            .iter()
            .map(|c| BlipCube {
                placement: cube.placement.compose(c),
            })
            .collect(),
        collar: template
            .collar
            .iter()
            .map(|s| cube.placement.apply_simplex(s))
            .collect(),
    }
}

/// Builds `Ω_0, …, Ω_depth` for the unbounded (`bounded = false`) or the
/// bounded seed.
pub fn build_snowflake<const D: usize>(cfg: &BlipConfig, bounded: bool) -> Result<Snowflake<D>> {
    if !(D == 2 || D == 3) {
        return Err(Error::InvalidInput(format!("dimension {D} unsupported")));
    }
    if cfg.depth > cfg.max_depth {
        return Err(Error::InvalidInput(format!(
            "depth {} exceeds max_depth {}",
            cfg.depth, cfg.max_depth
        )));
    }
    let profile = cfg.resolve_profile(D - 1)?;
    let template = Template::<D>::new(profile, cfg.k_max, cfg.c_w, cfg.b)?;
    log::info!(
        "snowflake template: N = {}, {} children, {} collar simplices, c in [{:.3}, {:.3}]",
        template.profile.n,
        template.children.len(),
        template.collar.len(),
        template.c_low,
        template.c_high
    );
    let (cubes, base) = seed::<D>(bounded);
    let mut simplices = base.clone();
    simplices.extend(cubes.iter().flat_map(|c| c.simplices()));
    let mut generations = vec![SnowflakeGeneration {
        index: 0,
        bounded,
        domain: make_domain(simplices, bounded),
        cubes,
        collar: Vec::new(),
        base,
        increment: None,
    }];
    for m in 0..cfg.depth {
        let prev = &generations[m];
        let predicted = prev.base.len() + prev.collar.len() + prev.cubes.len() * template.simplices_per_blip();
        if predicted > cfg.max_faces {
            return Err(Error::Budget {
                what: "simplices",
                value: predicted,
                limit: cfg.max_faces,
            });
        }
        let outputs: Vec<Result<(Vec<BlipCube<D>>, Vec<Simplex<D>>)>> = par::map_slice(cfg.exec, &prev.cubes, |q| {
            add_blip(&prev.domain, q, &template, cfg.b, cfg.check_tents)
        });
        let mut cubes = Vec::new();
        let mut collar = prev.collar.clone();
        for o in outputs {
            let (ch, co) = o?;
            cubes.extend(ch);
            collar.extend(co);
        }
        let mut simplices = prev.base.clone();
        simplices.extend(collar.iter().cloned());
        simplices.extend(cubes.iter().flat_map(|c| c.simplices()));
        let domain = make_domain(simplices, bounded);
        let increment = hausdorff_increment(&prev.domain.mesh, &domain.mesh, &prev.cubes, &template, cfg.exec);
        log::info!(
            "generation {}: {} cubes, {} simplices, increment {:.4e}",
            m + 1,
            cubes.len(),
            domain.mesh.len(),
            increment
        );
        generations.push(SnowflakeGeneration {
            index: m + 1,
            bounded,
            domain,
            cubes,
            collar,
            base: prev.base.clone(),
            increment: Some(increment),
        });
    }
    Ok(Snowflake {
        config: cfg.clone(),
        template,
        generations,
    })
}

/// `dist_H` between consecutive boundaries. They agree away from the blipped
/// cubes, so it suffices to sample the old cubes against the new mesh and the
/// new blip surfaces against the old mesh.
fn hausdorff_increment<const D: usize>(
    old: &BoundaryMesh<D>,
    new: &BoundaryMesh<D>,
    cubes: &[BlipCube<D>],
    template: &Template<D>,
    exec: Exec,
) -> f64 {
    let per_cube = par::map_slice(exec, cubes, |q| {
        let mut worst = 0.0f64;
        for y in &template.cube_samples {
            let p = q.placement.apply(y);
            worst = worst.max(new.nearest(&p).map_or(f64::INFINITY, |r| r.1));
        }
        for y in &template.surface_samples {
            let p = q.placement.apply(y);
            worst = worst.max(old.nearest(&p).map_or(f64::INFINITY, |r| r.1));
        }
        worst
    });
    per_cube.into_iter().fold(0.0, f64::max)
}

/// Sampled orientation check: just outside each sampled simplex lies outside
/// the domain, just inside lies inside. Returns the number of failures.
pub fn orientation_failures<const D: usize>(domain: &MeshDomain<D>, n_samples: usize, exec: Exec) -> usize {
    let s = domain.mesh.simplices();
    if s.is_empty() {
        return 0;
    }
    let stride = (s.len() / n_samples.max(1)).max(1);
    let picks: Vec<usize> = (0..s.len()).step_by(stride).collect();
    par::map_slice(exec, &picks, |&i| {
        let t = &s[i];
        if t.measure() < 1e-14 {
            return 0;
        }
        let c = t.centroid();
        let n = t.normal();
        let h = 1e-9;
        usize::from(domain.contains(&(c + n * h)) || !domain.contains(&(c - n * h)))
    })
    .into_iter()
    .sum()
}

/// Whether the mesh is a consistently oriented manifold. Planar meshes are
/// checked combinatorially (the unbounded variant has two free ends on the
/// working box); spatial meshes, which carry T-junctions between cube levels,
/// by sampled normals.
pub fn is_valid_manifold<const D: usize>(gen: &SnowflakeGeneration<D>, exec: Exec) -> bool {
    if D == 2 {
        let defects = gen.mesh().orientation_defects();
        let allowed = if gen.bounded { 0 } else { 2 };
        let at_ends = defects.iter().all(|p| (p[0].abs() - WORKING_HALF_WIDTH).abs() < 1e-9);
        if defects.len() != allowed || !at_ends {
            return false;
        }
    }
    orientation_failures(&gen.domain, 400, exec) == 0
}

/// Bounded and unbounded variants agree: the parts of the two boundaries inside the
/// reference tents `P_{Q(1)} ∪ P̃_{Q(1)}` consist of identical simplices.
pub fn agree_near_reference<const D: usize>(
    a: &SnowflakeGeneration<D>,
    b: &SnowflakeGeneration<D>,
    tent_b: f64,
) -> bool {
    let tents = BlipTents {
        placement: AffinePlacement::<D>::identity(),
        b: tent_b,
    };
    let keys = |g: &SnowflakeGeneration<D>| {
        let mut k: Vec<Vec<[i64; D]>> = g
            .mesh()
            .simplices()
            .iter()
            .filter(|s| tents.in_union(&s.centroid(), 0.0))
            .map(|s| s.v.iter().map(vertex_key).collect())
            .collect();
        k.sort();
        k
    };
    keys(a) == keys(b)
}

/// Boundary measure inside the box `[-1/2, 1/2]^d × [-1/2, 1/2]`.
pub fn measure_over_reference<const D: usize>(g: &SnowflakeGeneration<D>) -> f64 {
    let mut lo = Point::<D>::from_element(-0.5);
    let mut hi = Point::<D>::from_element(0.5);
    lo[D - 1] = -0.5;
    hi[D - 1] = 0.5;
    let b = crate::geometry::Aabb { lo, hi };
    g.mesh()
        .simplices()
        .iter()
        .filter(|s| b.contains(&s.centroid()))
        .map(|s| s.measure())
        .sum()
}
