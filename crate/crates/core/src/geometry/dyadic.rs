//! Half-open dyadic cubes anchored at the origin.

use super::{Aabb, Point};
use std::fmt;

/// `Π [k_i 2^{-n}, (k_i + 1) 2^{-n})`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DyadicCube<const D: usize> {
    pub level: i32,
    pub corner: [i64; D],
}

impl<const D: usize> DyadicCube<D> {
    pub fn new(level: i32, corner: [i64; D]) -> Self {
        DyadicCube { level, corner }
    }

    /// The cube of the given level containing `p`.
    pub fn containing(p: &Point<D>, level: i32) -> Self {
        let scale = (2.0f64).powi(level);
        let mut corner = [0i64; D];
        for i in 0..D {
            corner[i] = (p[i] * scale).floor() as i64;
        }
        DyadicCube { level, corner }
    }

    pub fn side(&self) -> f64 {
        (2.0f64).powi(-self.level)
    }

    pub fn lo(&self) -> Point<D> {
        let s = self.side();
        Point::<D>::from_fn(|i, _| self.corner[i] as f64 * s)
    }

    pub fn hi(&self) -> Point<D> {
        let s = self.side();
        Point::<D>::from_fn(|i, _| (self.corner[i] + 1) as f64 * s)
    }

    pub fn center(&self) -> Point<D> {
        let s = self.side();
        Point::<D>::from_fn(|i, _| (self.corner[i] as f64 + 0.5) * s)
    }

    pub fn diameter(&self) -> f64 {
        self.side() * (D as f64).sqrt()
    }

    /// Closed bounding box of the cube.
    pub fn aabb(&self) -> Aabb<D> {
        Aabb {
            lo: self.lo(),
            hi: self.hi(),
        }
    }

    /// Closed box of the concentric dilate `λQ`.
    pub fn dilate(&self, lambda: f64) -> Aabb<D> {
        let c = self.center();
        let h = 0.5 * lambda * self.side();
        Aabb {
            lo: c.add_scalar(-h),
            hi: c.add_scalar(h),
        }
    }

    /// Box slightly shrunk on the upper faces, a stand-in for the half-open cube
    /// in closed-set intersection tests.
    pub fn half_open_box(&self) -> Aabb<D> {
        let s = self.side();
        Aabb {
            lo: self.lo(),
            hi: self.hi().add_scalar(-1e-12 * s),
        }
    }

    pub fn contains(&self, p: &Point<D>) -> bool {
        let s = self.side();
        (0..D).all(|i| {
            let lo = self.corner[i] as f64 * s;
            let hi = (self.corner[i] + 1) as f64 * s;
            p[i] >= lo && p[i] < hi
        })
    }

    pub fn parent(&self) -> Self {
        let mut corner = [0i64; D];
        for i in 0..D {
            corner[i] = self.corner[i].div_euclid(2);
        }
        DyadicCube {
            level: self.level - 1,
            corner,
        }
    }

    /// The `2^D` children, in lexicographic corner order.
    pub fn children(&self) -> Vec<Self> {
        (0..(1usize << D))
            .map(|mask| {
                let mut corner = [0i64; D];
                for i in 0..D {
                    let bit = ((mask >> (D - 1 - i)) & 1) as i64;
                    corner[i] = 2 * self.corner[i] + bit;
                }
                DyadicCube {
                    level: self.level + 1,
                    corner,
                }
            })
            .collect()
    }

    /// Ancestor at a coarser `level`.
    pub fn ancestor(&self, level: i32) -> Self {
        assert!(level <= self.level);
        let shift = (self.level - level) as u32;
        let mut corner = [0i64; D];
        for i in 0..D {
            corner[i] = self.corner[i] >> shift;
        }
        DyadicCube { level, corner }
    }

    /// Exact interior-disjointness test on integer corners.
    pub fn interiors_disjoint(&self, other: &Self) -> bool {
        let (a, b) = if self.level <= other.level {
            (self, other)
        } else {
            (other, self)
        };
        b.ancestor(a.level) != *a
    }

    /// Dyadic cubes of `level` covering the box.
    pub fn cover(b: &Aabb<D>, level: i32) -> Vec<Self> {
        let scale = (2.0f64).powi(level);
        let lo: Vec<i64> = (0..D).map(|i| (b.lo[i] * scale).floor() as i64).collect();
        let hi: Vec<i64> = (0..D)
            .map(|i| ((b.hi[i] * scale).ceil() as i64).max(lo[i] + 1))
            .collect();
        let mut out = Vec::new();
        let mut idx = lo.clone();
        loop {
            let mut corner = [0i64; D];
            corner.copy_from_slice(&idx);
            out.push(DyadicCube { level, corner });
            let mut k = D;
            loop {
                if k == 0 {
                    return out;
                }
                k -= 1;
                idx[k] += 1;
                if idx[k] < hi[k] {
                    break;
                }
                idx[k] = lo[k];
            }
        }
    }
}

impl<const D: usize> fmt::Display for DyadicCube<D> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.level)?;
        for k in &self.corner {
            write!(f, " {k}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parent_child_roundtrip() {
        let q = DyadicCube::<2>::new(3, [-5, 7]);
        for c in q.children() {
            assert_eq!(c.parent(), q);
            assert!(!c.interiors_disjoint(&q));
        }
        let kids = q.children();
        assert!(kids[0].interiors_disjoint(&kids[1]));
        assert_eq!(q.parent().corner, [-3, 3]);
    }

    #[test]
    fn containing_is_half_open() {
        let q = DyadicCube::<2>::containing(&Point::<2>::new(1.0, 0.5), 1);
        assert_eq!(q.corner, [2, 1]);
        assert!(q.contains(&Point::<2>::new(1.0, 0.5)));
        assert!(!q.contains(&Point::<2>::new(1.5, 0.5)));
    }

    #[test]
    fn cover_box() {
        let b = Aabb::<2> {
            lo: Point::<2>::new(-1.0, 0.0),
            hi: Point::<2>::new(1.0, 0.5),
        };
        assert_eq!(DyadicCube::cover(&b, 1).len(), 4);
    }
}
