//! Nearest-neighbour index over a finite point sample.

use super::bvh::Bvh;
use super::{Aabb, Ball, Point};

#[derive(Clone, Debug, Default)]
pub struct PointIndex<const D: usize> {
    points: Vec<Point<D>>,
    bvh: Bvh<D>,
}

impl<const D: usize> PointIndex<D> {
    pub fn new(points: Vec<Point<D>>) -> Self {
        let boxes: Vec<Aabb<D>> = points.iter().map(|p| Aabb { lo: *p, hi: *p }).collect();
        let bvh = Bvh::build(&boxes);
        PointIndex { points, bvh }
    }

    pub fn points(&self) -> &[Point<D>] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Index of and distance to the nearest sample point (lowest index on ties).
    pub fn nearest(&self, p: &Point<D>) -> Option<(usize, f64)> {
        self.bvh
            .nearest(p, |i| (self.points[i] - p).norm_squared())
            .map(|(i, d2)| (i, d2.sqrt()))
    }

    /// Indices of points in the closed ball, sorted.
    pub fn within(&self, ball: &Ball<D>) -> Vec<usize> {
        let r2 = ball.radius * ball.radius;
        let mut out: Vec<usize> = self
            .bvh
            .candidates_in_box(&ball.aabb())
            .into_iter()
            .filter(|&i| (self.points[i] - ball.center).norm_squared() <= r2)
            .collect();
        out.sort_unstable();
        out
    }

    pub fn any_in_box(&self, b: &Aabb<D>) -> bool {
        self.bvh.any_in_box(b, |i| b.contains(&self.points[i]))
    }
}
