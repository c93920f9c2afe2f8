//! Domain representations: inside predicate, distance oracle, boundary sampler.

use super::mesh::BoundaryMesh;
use super::pointindex::PointIndex;
use super::sampling::{sphere_count, sphere_lattice};
use super::{Aabb, Ball, Hyperplane, Point};

/// An open set `Ω ⊂ R^D` together with its boundary.
pub trait Domain<const D: usize>: Sync + Send {
    fn contains(&self, p: &Point<D>) -> bool;

    /// Nearest boundary point and its distance.
    fn nearest_boundary(&self, p: &Point<D>) -> (Point<D>, f64);

    /// Lower bound on `dist(p, Ω^c)`; zero outside.
    fn dist_lower(&self, p: &Point<D>) -> f64 {
        if self.contains(p) {
            self.nearest_boundary(p).1
        } else {
            0.0
        }
    }

    /// Radius of a ball around `p` certified to lie in `Ω`. Defaults to
    /// [`Domain::dist_lower`]; composite domains may do better.
    fn safe_radius(&self, p: &Point<D>) -> f64 {
        self.dist_lower(p)
    }

    /// Whether `∂Ω` meets the closed box.
    fn boundary_meets_box(&self, b: &Aabb<D>) -> bool;

    /// Boundary points in `window` with spacing about `h`.
    fn boundary_samples(&self, window: &Aabb<D>, h: f64) -> Vec<Point<D>>;

    fn boundary_samples_in_ball(&self, ball: &Ball<D>, h: f64) -> Vec<Point<D>> {
        self.boundary_samples(&ball.aabb(), h)
            .into_iter()
            .filter(|p| ball.contains_closed(p))
            .collect()
    }

    /// Region in which the boundary is represented.
    fn window(&self) -> Aabb<D>;

    /// Flatness scale `r_0`.
    fn r0(&self) -> f64 {
        f64::INFINITY
    }

    /// Bound on `|nearest_boundary(p) - true nearest point|` coming from a
    /// discrete boundary representation.
    fn projection_error(&self) -> f64 {
        0.0
    }
}

/// `{x : (x - anchor)·n > 0}` where `n` is the plane's normal.
#[derive(Clone, Debug)]
pub struct HalfSpace<const D: usize> {
    pub plane: Hyperplane<D>,
    pub window: Aabb<D>,
}

impl<const D: usize> HalfSpace<D> {
    /// `{x_D > 0}` with boundary window `[-w, w]^D`.
    pub fn upper(w: f64) -> Self {
        HalfSpace {
            plane: Hyperplane::new(Point::<D>::zeros(), super::basis::<D>(D - 1)),
            window: Aabb {
                lo: Point::<D>::repeat(-w),
                hi: Point::<D>::repeat(w),
            },
        }
    }
}

impl<const D: usize> Domain<D> for HalfSpace<D> {
    fn contains(&self, p: &Point<D>) -> bool {
        self.plane.signed_distance(p) > 0.0
    }

    fn nearest_boundary(&self, p: &Point<D>) -> (Point<D>, f64) {
        (self.plane.project(p), self.plane.distance(p))
    }

    fn boundary_meets_box(&self, b: &Aabb<D>) -> bool {
        let c = b.center();
        let h = b.extent() * 0.5;
        let r: f64 = (0..D).map(|i| h[i] * self.plane.normal[i].abs()).sum();
        self.plane.signed_distance(&c).abs() <= r
    }

    fn boundary_samples(&self, window: &Aabb<D>, h: f64) -> Vec<Point<D>> {
        let c = self.plane.project(&window.center());
        let rad = 0.5 * window.diameter();
        let n = (rad / h).ceil() as i64;
        let tang = self.plane.tangent_basis();
        let mut out = Vec::new();
        if D == 2 {
            for i in -n..=n {
                let p = c + tang[0] * (i as f64 * h);
                if window.contains(&p) {
                    out.push(p);
                }
            }
        } else {
            for i in -n..=n {
                for j in -n..=n {
                    let p = c + tang[0] * (i as f64 * h) + tang[1] * (j as f64 * h);
                    if window.contains(&p) {
                        out.push(p);
                    }
                }
            }
        }
        out
    }

    fn window(&self) -> Aabb<D> {
        self.window
    }
}

/// Open ball (a disk when `D = 2`).
#[derive(Clone, Debug)]
pub struct BallDomain<const D: usize> {
    pub ball: Ball<D>,
}

impl<const D: usize> BallDomain<D> {
    pub fn unit() -> Self {
        BallDomain {
            ball: Ball::new(Point::<D>::zeros(), 1.0),
        }
    }
}

impl<const D: usize> Domain<D> for BallDomain<D> {
    fn contains(&self, p: &Point<D>) -> bool {
        self.ball.contains(p)
    }

    fn nearest_boundary(&self, p: &Point<D>) -> (Point<D>, f64) {
        let v = p - self.ball.center;
        let n = v.norm();
        let dir = if n > 0.0 { v / n } else { super::basis::<D>(0) };
        (self.ball.center + dir * self.ball.radius, (n - self.ball.radius).abs())
    }

    fn boundary_meets_box(&self, b: &Aabb<D>) -> bool {
        let r2 = self.ball.radius * self.ball.radius;
        b.dist2(&self.ball.center) <= r2 && r2 <= b.max_dist2(&self.ball.center)
    }

    fn boundary_samples(&self, window: &Aabb<D>, h: f64) -> Vec<Point<D>> {
        let n = sphere_count::<D>(self.ball.radius, h);
        sphere_lattice::<D>(n)
            .into_iter()
            .map(|u| self.ball.center + u * self.ball.radius)
            .filter(|p| window.contains(p))
            .collect()
    }

    fn window(&self) -> Aabb<D> {
        self.ball.aabb().inflated(0.01 * self.ball.radius)
    }
}

/// How a mesh bounds its domain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MeshKind {
    /// Closed surface; the domain is the bounded region inside.
    Closed,
    /// Surface spanning the lateral box `|x_i| ≤ half_width` (`i < D`) and
    /// continued by the flat plane `x_D = 0` outside; the domain lies above.
    Graph { half_width: f64 },
}

#[derive(Clone, Debug)]
pub struct MeshDomain<const D: usize> {
    pub mesh: BoundaryMesh<D>,
    pub kind: MeshKind,
    pub r0: f64,
}

fn ray_direction<const D: usize>() -> Point<D> {
    let v = [0.012_345_678_9, 0.009_876_543_21, 1.0];
    let mut d = Point::<D>::zeros();
    for i in 0..D - 1 {
        d[i] = v[i];
    }
    d[D - 1] = 1.0;
    d
}

impl<const D: usize> MeshDomain<D> {
    pub fn closed(mesh: BoundaryMesh<D>) -> Self {
        MeshDomain {
            mesh,
            kind: MeshKind::Closed,
            r0: f64::INFINITY,
        }
    }

    pub fn graph(mesh: BoundaryMesh<D>, half_width: f64) -> Self {
        MeshDomain {
            mesh,
            kind: MeshKind::Graph { half_width },
            r0: f64::INFINITY,
        }
    }

    fn lateral_margin(&self, p: &Point<D>) -> Option<f64> {
        match self.kind {
            MeshKind::Closed => None,
            MeshKind::Graph { half_width } => Some(
                (0..D - 1)
                    .map(|i| half_width - p[i].abs())
                    .fold(f64::INFINITY, f64::min),
            ),
        }
    }

    /// Nearest point of the flat continuation outside the lateral box.
    fn flat_nearest(&self, p: &Point<D>, half_width: f64) -> (Point<D>, f64) {
        let mut q = *p;
        q[D - 1] = 0.0;
        let margin = (0..D - 1)
            .map(|i| half_width - p[i].abs())
            .fold(f64::INFINITY, f64::min);
        if margin > 0.0 {
            let i = (0..D - 1)
                .min_by(|&a, &b| (half_width - p[a].abs()).total_cmp(&(half_width - p[b].abs())))
                .unwrap();
            q[i] = half_width * p[i].signum();
            if p[i] == 0.0 {
                q[i] = half_width;
            }
        }
        (q, (q - p).norm())
    }
}

impl<const D: usize> Domain<D> for MeshDomain<D> {
    fn contains(&self, p: &Point<D>) -> bool {
        match self.lateral_margin(p) {
            None => self.mesh.crossings(p, &ray_direction::<D>()) % 2 == 1,
            Some(m) if m < 0.01 => p[D - 1] > 0.0,
            Some(_) => self.mesh.crossings(p, &ray_direction::<D>()).is_multiple_of(2),
        }
    }

    fn nearest_boundary(&self, p: &Point<D>) -> (Point<D>, f64) {
        let (q, d, _) = self.mesh.nearest(p).expect("nonempty mesh");
        match self.kind {
            MeshKind::Closed => (q, d),
            MeshKind::Graph { half_width } => {
                let (f, df) = self.flat_nearest(p, half_width);
                if df < d {
                    (f, df)
                } else {
                    (q, d)
                }
            }
        }
    }

    fn boundary_meets_box(&self, b: &Aabb<D>) -> bool {
        if self.mesh.meets_box(b) {
            return true;
        }
        match self.kind {
            MeshKind::Closed => false,
            MeshKind::Graph { half_width } => {
                b.lo[D - 1] <= 0.0
                    && b.hi[D - 1] >= 0.0
                    && (0..D - 1).any(|i| b.lo[i] < -half_width || b.hi[i] > half_width)
            }
        }
    }

    fn boundary_samples(&self, window: &Aabb<D>, h: f64) -> Vec<Point<D>> {
        self.mesh.samples_in_box(window, h)
    }

    fn window(&self) -> Aabb<D> {
        self.mesh.aabb()
    }

    fn r0(&self) -> f64 {
        self.r0
    }
}

/// An open set seen through distance and box queries, as Whitney
/// decompositions need it.
pub trait OpenSet<const D: usize>: Sync {
    fn contains(&self, p: &Point<D>) -> bool;

    /// Lower bound on `dist(p, complement)`.
    fn dist_to_complement(&self, p: &Point<D>) -> f64;

    /// Whether [`OpenSet::dist_to_complement`] is exact.
    fn distance_is_exact(&self) -> bool;

    /// Whether the complement meets the closed box.
    fn complement_meets_box(&self, b: &Aabb<D>) -> bool;

    /// Whether the set itself meets the closed box.
    fn meets_box(&self, b: &Aabb<D>) -> bool;
}

/// The open set of a [`Domain`].
pub struct Interior<'a, T: ?Sized>(pub &'a T);

impl<'a, const D: usize, T: Domain<D> + ?Sized> OpenSet<D> for Interior<'a, T> {
    fn contains(&self, p: &Point<D>) -> bool {
        self.0.contains(p)
    }

    fn dist_to_complement(&self, p: &Point<D>) -> f64 {
        self.0.dist_lower(p)
    }

    fn distance_is_exact(&self) -> bool {
        true
    }

    fn complement_meets_box(&self, b: &Aabb<D>) -> bool {
        self.0.boundary_meets_box(b) || !self.0.contains(&b.center())
    }

    fn meets_box(&self, b: &Aabb<D>) -> bool {
        self.0.boundary_meets_box(b) || self.0.contains(&b.center())
    }
}

/// `E^c` for a finite sample `E`.
#[derive(Clone, Debug)]
pub struct PointSetComplement<const D: usize> {
    pub index: PointIndex<D>,
}

impl<const D: usize> PointSetComplement<D> {
    pub fn new(points: Vec<Point<D>>) -> Self {
        PointSetComplement {
            index: PointIndex::new(points),
        }
    }

    pub fn dist(&self, p: &Point<D>) -> f64 {
        self.index.nearest(p).map(|x| x.1).unwrap_or(f64::INFINITY)
    }
}

impl<const D: usize> OpenSet<D> for PointSetComplement<D> {
    fn contains(&self, p: &Point<D>) -> bool {
        self.dist(p) > 0.0
    }

    fn dist_to_complement(&self, p: &Point<D>) -> f64 {
        self.dist(p)
    }

    fn distance_is_exact(&self) -> bool {
        true
    }

    fn complement_meets_box(&self, b: &Aabb<D>) -> bool {
        self.index.any_in_box(b)
    }

    fn meets_box(&self, _b: &Aabb<D>) -> bool {
        true
    }
}
