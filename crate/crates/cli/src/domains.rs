//! Base domains selected at run time.

use reifenberg::geometry::{Aabb, Ball, BallDomain, Domain, HalfSpace, MeshDomain, Point};

#[derive(Clone, Debug)]
pub enum AnyDomain<const D: usize> {
    HalfSpace(HalfSpace<D>),
    Ball(BallDomain<D>),
    Mesh(MeshDomain<D>),
}

impl<const D: usize> AnyDomain<D> {
    fn inner(&self) -> &dyn Domain<D> {
        match self {
            AnyDomain::HalfSpace(h) => h,
            AnyDomain::Ball(b) => b,
            AnyDomain::Mesh(m) => m,
        }
    }

    /// A pole well inside the domain.
    pub fn default_pole(&self) -> Point<D> {
        match self {
            AnyDomain::HalfSpace(_) => reifenberg::geometry::basis::<D>(D - 1),
            AnyDomain::Ball(b) => b.ball.center,
            AnyDomain::Mesh(_) => reifenberg::geometry::basis::<D>(D - 1) * 0.5,
        }
    }
}

impl<const D: usize> Domain<D> for AnyDomain<D> {
    fn contains(&self, p: &Point<D>) -> bool {
        self.inner().contains(p)
    }

    fn nearest_boundary(&self, p: &Point<D>) -> (Point<D>, f64) {
        self.inner().nearest_boundary(p)
    }

    fn dist_lower(&self, p: &Point<D>) -> f64 {
        self.inner().dist_lower(p)
    }

    fn safe_radius(&self, p: &Point<D>) -> f64 {
        self.inner().safe_radius(p)
    }

    fn boundary_meets_box(&self, b: &Aabb<D>) -> bool {
        self.inner().boundary_meets_box(b)
    }

    fn boundary_samples(&self, window: &Aabb<D>, h: f64) -> Vec<Point<D>> {
        self.inner().boundary_samples(window, h)
    }

    fn boundary_samples_in_ball(&self, ball: &Ball<D>, h: f64) -> Vec<Point<D>> {
        self.inner().boundary_samples_in_ball(ball, h)
    }

    fn window(&self) -> Aabb<D> {
        self.inner().window()
    }

    fn r0(&self) -> f64 {
        self.inner().r0()
    }

    fn projection_error(&self) -> f64 {
        self.inner().projection_error()
    }
}
