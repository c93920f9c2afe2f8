//! Whitney subdivision of a planar face into `8^{-k}` cubes and a thin collar.

use super::profile::Face;
use super::AffinePlacement;
use crate::geometry::linalg::cross3;
use crate::geometry::{Point, Simplex};
use nalgebra::SMatrix;

#[derive(Clone, Debug, Default)]
pub struct FaceSubdivision<const D: usize> {
    /// Placements `T_Q` of the cubes (in the face's coordinates).
    pub cubes: Vec<AffinePlacement<D>>,
    /// Simplices of the part left uncovered at the finest level.
    pub collar: Vec<Simplex<D>>,
    /// Range of `ℓ(Q) / dist(Q, ∂face)` over the cubes.
    pub c_low: f64,
    pub c_high: f64,
}

impl<const D: usize> FaceSubdivision<D> {
    fn record(&mut self, side: f64, dist: f64) {
        let r = side / dist;
        self.c_low = self.c_low.min(r);
        self.c_high = self.c_high.max(r);
    }
}

fn rotation_from_columns<const D: usize>(cols: &[Point<D>]) -> SMatrix<f64, D, D> {
    SMatrix::<f64, D, D>::from_fn(|i, j| cols[j][i])
}

/// Subdivides `face` into cubes of sides `8^{-k}`, `1 ≤ k ≤ k_max`: a cell is
/// kept when it lies in the face at distance at least `c_w` times its side
/// from the face boundary, otherwise it is split. What remains at level
/// `k_max` becomes the collar. Each cube's distinguished side is the side
/// direction closest in angle to `preferred`.
pub fn subdivide_face<const D: usize>(
    face: &Face<D>,
    k_max: u32,
    c_w: f64,
    preferred: &Point<D>,
) -> FaceSubdivision<D> {
    let mut out = FaceSubdivision {
        c_low: f64::INFINITY,
        c_high: 0.0,
        ..Default::default()
    };
    if face.measure() <= 1e-15 {
        return out;
    }
    match D {
        2 => subdivide_segment(face, k_max, c_w, &mut out),
        _ => subdivide_polygon(face, k_max, c_w, preferred, &mut out),
    }
    out
}

fn subdivide_segment<const D: usize>(face: &Face<D>, k_max: u32, c_w: f64, out: &mut FaceSubdivision<D>) {
    let v0 = face.vertices[0];
    let len = (face.vertices[1] - v0).norm();
    let u = (face.vertices[1] - v0) / len;
    let inward = -face.outward;
    // Rotation with R e_2 = inward normal; then R e_1 = u.
    let e1 = Point::<D>::from_fn(|i, _| if i == 0 { inward[1] } else { -inward[0] });
    let rot = rotation_from_columns(&[e1, inward]);
    let mut collar: Vec<(f64, f64)> = Vec::new();
    let mut stack: Vec<(f64, f64, u32)> = Vec::new();
    let s1 = 0.125;
    let n1 = (len / s1).ceil() as usize;
    for j in (0..n1).rev() {
        stack.push((j as f64 * s1, s1, 1));
    }
    while let Some((t0, s, level)) = stack.pop() {
        if t0 >= len {
            continue;
        }
        let t1 = t0 + s;
        let dist = t0.min(len - t1);
        if t1 <= len && dist >= c_w * s {
            out.cubes.push(AffinePlacement {
                scale: s,
                rotation: rot,
                translation: v0 + u * (t0 + 0.5 * s),
            });
            out.record(s, dist);
        } else if level < k_max {
            let c = s / 8.0;
            for i in (0..8).rev() {
                stack.push((t0 + i as f64 * c, c, level + 1));
            }
        } else {
            let end = t1.min(len);
            match collar.last_mut() {
                Some(last) if (last.1 - t0).abs() < 1e-15 => last.1 = end,
                _ => collar.push((t0, end)),
            }
        }
    }
    for (a, b) in collar {
        let pa = if a == 0.0 { v0 } else { v0 + u * a };
        let pb = if b == len { face.vertices[1] } else { v0 + u * b };
        let mut v = [Point::<D>::zeros(); D];
        v[0] = pa;
        v[1] = pb;
        out.collar.push(Simplex::new(v));
    }
}

type P2 = [f64; 2];

fn clip_halfplane(poly: &[P2], a: P2, b: P2) -> Vec<P2> {
    // Keep the left side of a -> b.
    let side = |p: &P2| (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]);
    let mut out = Vec::with_capacity(poly.len() + 1);
    for i in 0..poly.len() {
        let p = poly[i];
        let q = poly[(i + 1) % poly.len()];
        let sp = side(&p);
        let sq = side(&q);
        if sp >= 0.0 {
            out.push(p);
        }
        if (sp >= 0.0) != (sq >= 0.0) {
            let t = sp / (sp - sq);
            out.push([p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]);
        }
    }
    out
}

fn area2(poly: &[P2]) -> f64 {
    let mut a = 0.0;
    for i in 0..poly.len() {
        let p = poly[i];
        let q = poly[(i + 1) % poly.len()];
        a += p[0] * q[1] - q[0] * p[1];
    }
    0.5 * a
}

fn subdivide_polygon<const D: usize>(
    face: &Face<D>,
    k_max: u32,
    c_w: f64,
    preferred: &Point<D>,
    out: &mut FaceSubdivision<D>,
) {
    let v0 = face.vertices[0];
    let n = face.outward;
    let u1 = (face.vertices[1] - v0).normalize();
    let c = cross3(n.as_slice(), u1.as_slice());
    let u2 = Point::<D>::from_fn(|i, _| c[i]);
    let to2 = |p: &Point<D>| -> P2 { [(p - v0).dot(&u1), (p - v0).dot(&u2)] };
    let to3 = |p: &P2| -> Point<D> { v0 + u1 * p[0] + u2 * p[1] };
    let mut poly: Vec<P2> = face.vertices.iter().map(to2).collect();
    if area2(&poly) < 0.0 {
        poly.reverse();
    }
    let m = poly.len();
    let edges: Vec<(P2, P2)> = (0..m).map(|i| (poly[i], poly[(i + 1) % m])).collect();
    let signed = |p: &P2| -> f64 {
        edges
            .iter()
            .map(|(a, b)| {
                let l = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
                ((b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])) / l
            })
            .fold(f64::INFINITY, f64::min)
    };
    // Distinguished side direction among ±u1, ±u2.
    let cands = [u1, -u1, u2, -u2];
    let mut best = 0;
    for (i, cnd) in cands.iter().enumerate() {
        if cnd.dot(preferred) > cands[best].dot(preferred) + 1e-12 {
            best = i;
        }
    }
    let r1 = cands[best];
    let r3 = -n;
    let cr = cross3(r3.as_slice(), r1.as_slice());
    let r2 = Point::<D>::from_fn(|i, _| cr[i]);
    let rot = rotation_from_columns(&[r1, r2, r3]);

    let (mut xmin, mut ymin, mut xmax, mut ymax) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in &poly {
        xmin = xmin.min(p[0]);
        ymin = ymin.min(p[1]);
        xmax = xmax.max(p[0]);
        ymax = ymax.max(p[1]);
    }
    let s1 = 0.125;
    let nx = ((xmax - xmin) / s1).ceil() as usize;
    let ny = ((ymax - ymin) / s1).ceil() as usize;
    let mut stack: Vec<(f64, f64, f64, u32)> = Vec::new();
    for j in (0..ny).rev() {
        for i in (0..nx).rev() {
            stack.push((xmin + i as f64 * s1, ymin + j as f64 * s1, s1, 1));
        }
    }
    let mut collar_polys: Vec<Vec<P2>> = Vec::new();
    while let Some((x0, y0, s, level)) = stack.pop() {
        let corners = [[x0, y0], [x0 + s, y0], [x0 + s, y0 + s], [x0, y0 + s]];
        let dist = corners.iter().map(&signed).fold(f64::INFINITY, f64::min);
        if dist >= c_w * s {
            out.cubes.push(AffinePlacement {
                scale: s,
                rotation: rot,
                translation: to3(&[x0 + 0.5 * s, y0 + 0.5 * s]),
            });
            out.record(s, dist);
            continue;
        }
        let mut clip = corners.to_vec();
        for (a, b) in &edges {
            clip = clip_halfplane(&clip, *a, *b);
            if clip.is_empty() {
                break;
            }
        }
        if clip.len() < 3 || area2(&clip) <= 1e-14 * s * s {
            continue;
        }
        if level < k_max {
            let c = s / 8.0;
            for j in (0..8).rev() {
                for i in (0..8).rev() {
                    stack.push((x0 + i as f64 * c, y0 + j as f64 * c, c, level + 1));
                }
            }
        } else {
            collar_polys.push(clip);
        }
    }
    for poly in collar_polys {
        for k in 1..poly.len() - 1 {
            let mut v = [Point::<D>::zeros(); D];
            v[0] = to3(&poly[0]);
            v[1] = to3(&poly[k]);
            v[2] = to3(&poly[k + 1]);
            let mut s = Simplex::new(v);
            if s.measure() <= 0.0 {
                continue;
            }
            if s.normal().dot(&n) < 0.0 {
                s = s.reversed();
            }
            out.collar.push(s);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square() -> Face<3> {
        Face {
            vertices: vec![
                Point::<3>::new(-0.5, -0.5, 0.0),
                Point::<3>::new(-0.5, 0.5, 0.0),
                Point::<3>::new(0.5, 0.5, 0.0),
                Point::<3>::new(0.5, -0.5, 0.0),
            ],
            outward: Point::<3>::new(0.0, 0.0, -1.0),
        }
    }

    #[test]
    fn square_face_area_is_conserved() {
        let f = unit_square();
        let sub = subdivide_face(&f, 2, 1.0, &Point::<3>::new(1.0, 0.0, 0.0));
        let cubes: f64 = sub.cubes.iter().map(|c| c.scale * c.scale).sum();
        let collar: f64 = sub.collar.iter().map(|s| s.measure()).sum();
        assert!((cubes + collar - 1.0).abs() < 1e-12);
        for s in &sub.collar {
            assert!(s.normal().dot(&f.outward) > 0.999);
        }
        for c in &sub.cubes {
            assert!(c.is_rotation(1e-12));
            assert!((c.rotation * Point::<3>::new(1.0, 0.0, 0.0) - Point::<3>::new(1.0, 0.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn cubes_near_the_edge_are_small() {
        let f = unit_square();
        let sub = subdivide_face(&f, 3, 1.0, &Point::<3>::new(1.0, 0.0, 0.0));
        // A cube centered about 1/8 from the boundary has side 1/8 or 1/64.
        for c in &sub.cubes {
            let p = c.translation;
            let d = (0.5 - p[0].abs()).min(0.5 - p[1].abs());
            if (d - 0.1875).abs() < 1e-9 {
                assert!(c.scale == 0.125 || c.scale == 0.125 / 8.0);
            }
        }
        assert!(sub.c_low > 0.0 && sub.c_high <= 1.0);
    }

    #[test]
    fn segment_subdivision_covers_the_face() {
        let f = Face::<2> {
            vertices: vec![Point::<2>::new(-0.5, 0.0), Point::<2>::new(0.5, 0.0)],
            outward: Point::<2>::new(0.0, -1.0),
        };
        let sub = subdivide_face(&f, 3, 1.0, &Point::<2>::new(1.0, 0.0));
        let total: f64 =
            sub.cubes.iter().map(|c| c.scale).sum::<f64>() + sub.collar.iter().map(|s| s.measure()).sum::<f64>();
        assert!((total - 1.0).abs() < 1e-12);
        assert_eq!(sub.collar.len(), 2);
        assert!((sub.collar[0].measure() - 1.0 / 512.0).abs() < 1e-15);
    }

    #[test]
    fn degenerate_face_is_empty() {
        let f = Face::<2> {
            vertices: vec![Point::<2>::new(0.1, 0.0), Point::<2>::new(0.1, 0.0)],
            outward: Point::<2>::new(0.0, -1.0),
        };
        assert!(subdivide_face(&f, 3, 1.0, &Point::<2>::new(1.0, 0.0)).cubes.is_empty());
    }
}
