//! Euclidean primitives shared by every other module.

pub mod bvh;
pub mod domain;
pub mod dyadic;
pub mod fit;
pub mod hausdorff;
pub mod linalg;
pub mod mesh;
pub mod pointindex;
pub mod sampling;

use nalgebra::SVector;

pub use domain::{BallDomain, Domain, HalfSpace, MeshDomain, OpenSet, PointSetComplement};
pub use dyadic::DyadicCube;
pub use fit::{fit_hyperplane, plane_proximity_bound, simplex_eta, PlaneFit, ProximityReport};
pub use hausdorff::local_hausdorff;
pub use mesh::{BoundaryMesh, Simplex};
pub use pointindex::PointIndex;

/// A point (or vector) of the ambient space `R^D`.
pub type Point<const D: usize> = SVector<f64, D>;

pub fn point_from_slice<const D: usize>(xs: &[f64]) -> Point<D> {
    Point::<D>::from_fn(|i, _| xs[i])
}

pub fn to_vec<const D: usize>(p: &Point<D>) -> Vec<f64> {
    p.iter().copied().collect()
}

/// Unit basis vector `e_i`.
pub fn basis<const D: usize>(i: usize) -> Point<D> {
    let mut e = Point::<D>::zeros();
    e[i] = 1.0;
    e
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ball<const D: usize> {
    pub center: Point<D>,
    pub radius: f64,
}

impl<const D: usize> Ball<D> {
    pub fn new(center: Point<D>, radius: f64) -> Self {
        debug_assert!(radius > 0.0, "ball radius must be positive");
        Ball { center, radius }
    }

    /// Open-ball membership.
    pub fn contains(&self, p: &Point<D>) -> bool {
        (p - self.center).norm_squared() < self.radius * self.radius
    }

    pub fn contains_closed(&self, p: &Point<D>) -> bool {
        (p - self.center).norm_squared() <= self.radius * self.radius
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Ball::new(self.center, self.radius * factor)
    }

    pub fn aabb(&self) -> Aabb<D> {
        Aabb {
            lo: self.center.add_scalar(-self.radius),
            hi: self.center.add_scalar(self.radius),
        }
    }

    pub fn intersects(&self, other: &Ball<D>) -> bool {
        (self.center - other.center).norm() < self.radius + other.radius
    }
}

/// Affine hyperplane through `anchor` with unit `normal`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Hyperplane<const D: usize> {
    pub anchor: Point<D>,
    pub normal: Point<D>,
}

impl<const D: usize> Hyperplane<D> {
    /// Normalizes `normal`; panics on a zero vector.
    pub fn new(anchor: Point<D>, normal: Point<D>) -> Self {
        let n = normal.norm();
        assert!(n > 0.0, "hyperplane normal must be nonzero");
        Hyperplane {
            anchor,
            normal: normal / n,
        }
    }

    pub fn signed_distance(&self, p: &Point<D>) -> f64 {
        (p - self.anchor).dot(&self.normal)
    }

    pub fn distance(&self, p: &Point<D>) -> f64 {
        self.signed_distance(p).abs()
    }

    pub fn project(&self, p: &Point<D>) -> Point<D> {
        p - self.normal * self.signed_distance(p)
    }

    pub fn flipped(&self) -> Self {
        Hyperplane {
            anchor: self.anchor,
            normal: -self.normal,
        }
    }

    /// Parallel plane through `p`.
    pub fn through(&self, p: Point<D>) -> Self {
        Hyperplane {
            anchor: p,
            normal: self.normal,
        }
    }

    /// Orthonormal basis of the direction space (D-1 vectors).
    pub fn tangent_basis(&self) -> Vec<Point<D>> {
        linalg::complete_basis(&self.normal)
    }
}

/// Axis-aligned closed box.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Aabb<const D: usize> {
    pub lo: Point<D>,
    pub hi: Point<D>,
}

impl<const D: usize> Aabb<D> {
    pub fn empty() -> Self {
        Aabb {
            lo: Point::<D>::repeat(f64::INFINITY),
            hi: Point::<D>::repeat(f64::NEG_INFINITY),
        }
    }

    pub fn from_points<'a, I: IntoIterator<Item = &'a Point<D>>>(pts: I) -> Self {
        let mut b = Self::empty();
        for p in pts {
            b.grow(p);
        }
        b
    }

    pub fn grow(&mut self, p: &Point<D>) {
        self.lo = self.lo.inf(p);
        self.hi = self.hi.sup(p);
    }

    pub fn union(&self, other: &Aabb<D>) -> Aabb<D> {
        Aabb {
            lo: self.lo.inf(&other.lo),
            hi: self.hi.sup(&other.hi),
        }
    }

    pub fn center(&self) -> Point<D> {
        (self.lo + self.hi) * 0.5
    }

    pub fn extent(&self) -> Point<D> {
        self.hi - self.lo
    }

    pub fn contains(&self, p: &Point<D>) -> bool {
        (0..D).all(|i| p[i] >= self.lo[i] && p[i] <= self.hi[i])
    }

    pub fn intersects(&self, other: &Aabb<D>) -> bool {
        (0..D).all(|i| self.lo[i] <= other.hi[i] && other.lo[i] <= self.hi[i])
    }

    /// Squared distance from `p` to the box (0 inside).
    pub fn dist2(&self, p: &Point<D>) -> f64 {
        let mut s = 0.0;
        for i in 0..D {
            let d = (self.lo[i] - p[i]).max(0.0).max(p[i] - self.hi[i]);
            s += d * d;
        }
        s
    }

    /// Squared distance from `p` to the farthest point of the box.
    pub fn max_dist2(&self, p: &Point<D>) -> f64 {
        let mut s = 0.0;
        for i in 0..D {
            let d = (p[i] - self.lo[i]).abs().max((self.hi[i] - p[i]).abs());
            s += d * d;
        }
        s
    }

    pub fn intersects_ball(&self, b: &Ball<D>) -> bool {
        self.dist2(&b.center) <= b.radius * b.radius
    }

    pub fn clamp(&self, p: &Point<D>) -> Point<D> {
        p.sup(&self.lo).inf(&self.hi)
    }

    pub fn inflated(&self, r: f64) -> Self {
        Aabb {
            lo: self.lo.add_scalar(-r),
            hi: self.hi.add_scalar(r),
        }
    }

    pub fn diameter(&self) -> f64 {
        self.extent().norm()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hyperplane_projection_lies_on_plane() {
        let h = Hyperplane::new(Point::<3>::new(1.0, 2.0, 3.0), Point::<3>::new(1.0, 1.0, 0.0));
        let p = Point::<3>::new(-4.0, 0.5, 9.0);
        let q = h.project(&p);
        assert!(h.distance(&q) < 1e-12);
        assert!((h.normal.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn aabb_distances() {
        let b = Aabb::<2> {
            lo: Point::<2>::new(0.0, 0.0),
            hi: Point::<2>::new(1.0, 1.0),
        };
        assert_eq!(b.dist2(&Point::<2>::new(0.5, 0.5)), 0.0);
        assert!((b.dist2(&Point::<2>::new(2.0, 0.5)) - 1.0).abs() < 1e-15);
        assert!((b.max_dist2(&Point::<2>::new(0.0, 0.0)) - 2.0).abs() < 1e-15);
    }
}
