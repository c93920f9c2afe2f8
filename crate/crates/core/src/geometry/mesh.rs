//! Simplicial boundary meshes: segments in the plane, triangles in space.

use super::bvh::Bvh;
use super::linalg::cross3;
use super::{Aabb, Ball, Point};
use crate::error::{Error, Result};
use std::collections::HashMap;
use std::io::Write;

/// A boundary simplex with `D` vertices. Vertex order fixes the outward side:
/// `(dy, -dx)` for segments, `(b - a) × (c - a)` for triangles.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Simplex<const D: usize> {
    pub v: [Point<D>; D],
}

pub fn closest_on_segment<const D: usize>(p: &Point<D>, a: &Point<D>, b: &Point<D>) -> Point<D> {
    let ab = b - a;
    let l2 = ab.norm_squared();
    if l2 == 0.0 {
        return *a;
    }
    let t = ((p - a).dot(&ab) / l2).clamp(0.0, 1.0);
    a + ab * t
}

/// Closest point on triangle `abc` (Voronoi-region walk; works in any dimension).
pub fn closest_on_triangle<const D: usize>(p: &Point<D>, a: &Point<D>, b: &Point<D>, c: &Point<D>) -> Point<D> {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return *a;
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return *b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return a + ab * v;
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return *c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return a + ac * w;
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return b + (c - b) * w;
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    a + ab * v + ac * w
}

fn segment_meets_box<const D: usize>(a: &Point<D>, b: &Point<D>, bx: &Aabb<D>) -> bool {
    let (mut t0, mut t1) = (0.0f64, 1.0f64);
    let d = b - a;
    for i in 0..D {
        if d[i].abs() < 1e-300 {
            if a[i] < bx.lo[i] || a[i] > bx.hi[i] {
                return false;
            }
        } else {
            let inv = 1.0 / d[i];
            let mut ta = (bx.lo[i] - a[i]) * inv;
            let mut tb = (bx.hi[i] - a[i]) * inv;
            if ta > tb {
                std::mem::swap(&mut ta, &mut tb);
            }
            t0 = t0.max(ta);
            t1 = t1.min(tb);
            if t0 > t1 {
                return false;
            }
        }
    }
    true
}

/// Separating-axis triangle/box overlap test in three dimensions.
fn triangle_meets_box(v: [[f64; 3]; 3], bx_lo: [f64; 3], bx_hi: [f64; 3]) -> bool {
    let c = [
        0.5 * (bx_lo[0] + bx_hi[0]),
        0.5 * (bx_lo[1] + bx_hi[1]),
        0.5 * (bx_lo[2] + bx_hi[2]),
    ];
    let h = [
        0.5 * (bx_hi[0] - bx_lo[0]),
        0.5 * (bx_hi[1] - bx_lo[1]),
        0.5 * (bx_hi[2] - bx_lo[2]),
    ];
    let p: Vec<[f64; 3]> = v.iter().map(|x| [x[0] - c[0], x[1] - c[1], x[2] - c[2]]).collect();
    let dot = |a: &[f64; 3], b: &[f64; 3]| a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
    let sep = |axis: &[f64; 3]| -> bool {
        let r = h[0] * axis[0].abs() + h[1] * axis[1].abs() + h[2] * axis[2].abs();
        let a = dot(&p[0], axis);
        let b = dot(&p[1], axis);
        let cc = dot(&p[2], axis);
        let lo = a.min(b).min(cc);
        let hi = a.max(b).max(cc);
        lo > r || hi < -r
    };
    for i in 0..3 {
        let mut e = [0.0; 3];
        e[i] = 1.0;
        if sep(&e) {
            return false;
        }
    }
    let edges = [
        [p[1][0] - p[0][0], p[1][1] - p[0][1], p[1][2] - p[0][2]],
        [p[2][0] - p[1][0], p[2][1] - p[1][1], p[2][2] - p[1][2]],
        [p[0][0] - p[2][0], p[0][1] - p[2][1], p[0][2] - p[2][2]],
    ];
    let n = cross3(&edges[0], &edges[1]);
    if sep(&n) {
        return false;
    }
    for e in &edges {
        for i in 0..3 {
            let mut u = [0.0; 3];
            u[i] = 1.0;
            let ax = cross3(&u, e);
            if ax.iter().any(|x| x.abs() > 1e-300) && sep(&ax) {
                return false;
            }
        }
    }
    true
}

impl<const D: usize> Simplex<D> {
    pub fn new(v: [Point<D>; D]) -> Self {
        Simplex { v }
    }

    pub fn closest_point(&self, p: &Point<D>) -> Point<D> {
        match D {
            2 => closest_on_segment(p, &self.v[0], &self.v[1]),
            3 => closest_on_triangle(p, &self.v[0], &self.v[1], &self.v[2]),
            _ => unreachable!("unsupported dimension"),
        }
    }

    pub fn dist2(&self, p: &Point<D>) -> f64 {
        (self.closest_point(p) - p).norm_squared()
    }

    pub fn aabb(&self) -> Aabb<D> {
        Aabb::from_points(self.v.iter())
    }

    pub fn centroid(&self) -> Point<D> {
        self.v.iter().sum::<Point<D>>() / D as f64
    }

    /// Length or area.
    pub fn measure(&self) -> f64 {
        let u = self.v[1] - self.v[0];
        if D == 2 {
            return u.norm();
        }
        let w = self.v[2] - self.v[0];
        0.5 * (u.norm_squared() * w.norm_squared() - u.dot(&w).powi(2))
            .max(0.0)
            .sqrt()
    }

    /// Unit outward normal (zero for degenerate simplices).
    pub fn normal(&self) -> Point<D> {
        let n = match D {
            2 => {
                let d = self.v[1] - self.v[0];
                Point::<D>::from_fn(|i, _| if i == 0 { d[1] } else { -d[0] })
            }
            _ => {
                let c = cross3((self.v[1] - self.v[0]).as_slice(), (self.v[2] - self.v[0]).as_slice());
                Point::<D>::from_fn(|i, _| c[i])
            }
        };
        let l = n.norm();
        if l > 0.0 {
            n / l
        } else {
            n
        }
    }

    pub fn reversed(&self) -> Self {
        let mut v = self.v;
        v.swap(0, 1);
        Simplex { v }
    }

    pub fn meets_box(&self, b: &Aabb<D>) -> bool {
        if !self.aabb().intersects(b) {
            return false;
        }
        match D {
            2 => segment_meets_box(&self.v[0], &self.v[1], b),
            _ => {
                let a = |p: &Point<D>| [p[0], p[1], p[2]];
                triangle_meets_box([a(&self.v[0]), a(&self.v[1]), a(&self.v[2])], a(&b.lo), a(&b.hi))
            }
        }
    }

    /// Parameter `t > 0` where the ray `o + t d` crosses the simplex.
    pub fn ray_hit(&self, o: &Point<D>, d: &Point<D>) -> Option<f64> {
        match D {
            2 => {
                let a = self.v[0];
                let e = self.v[1] - a;
                let den = d[0] * e[1] - d[1] * e[0];
                if den.abs() < 1e-300 {
                    return None;
                }
                let w = a - o;
                let t = (w[0] * e[1] - w[1] * e[0]) / den;
                let s = (w[0] * d[1] - w[1] * d[0]) / den;
                (t > 0.0 && (0.0..1.0).contains(&s)).then_some(t)
            }
            _ => {
                let e1 = (self.v[1] - self.v[0]).as_slice().to_vec();
                let e2 = (self.v[2] - self.v[0]).as_slice().to_vec();
                let ds = d.as_slice();
                let h = cross3(ds, &e2);
                let a = e1[0] * h[0] + e1[1] * h[1] + e1[2] * h[2];
                if a.abs() < 1e-300 {
                    return None;
                }
                let f = 1.0 / a;
                let s = o - self.v[0];
                let u = f * (s[0] * h[0] + s[1] * h[1] + s[2] * h[2]);
                if !(0.0..=1.0).contains(&u) {
                    return None;
                }
                let q = cross3(s.as_slice(), &e1);
                let v = f * (ds[0] * q[0] + ds[1] * q[1] + ds[2] * q[2]);
                if v < 0.0 || u + v > 1.0 {
                    return None;
                }
                let t = f * (e2[0] * q[0] + e2[1] * q[1] + e2[2] * q[2]);
                (t > 0.0).then_some(t)
            }
        }
    }

    /// Points covering the simplex with spacing at most about `h`.
    pub fn samples(&self, h: f64) -> Vec<Point<D>> {
        match D {
            2 => {
                let n = ((self.measure() / h).ceil() as usize).max(1);
                (0..=n)
                    .map(|i| self.v[0] + (self.v[1] - self.v[0]) * (i as f64 / n as f64))
                    .collect()
            }
            _ => {
                let e = (self.v[1] - self.v[0])
                    .norm()
                    .max((self.v[2] - self.v[0]).norm())
                    .max((self.v[2] - self.v[1]).norm());
                let m = ((e / h).ceil() as usize).max(1);
                let mut out = Vec::with_capacity((m + 1) * (m + 2) / 2);
                for i in 0..=m {
                    for j in 0..=(m - i) {
                        let u = i as f64 / m as f64;
                        let w = j as f64 / m as f64;
                        out.push(self.v[0] + (self.v[1] - self.v[0]) * u + (self.v[2] - self.v[0]) * w);
                    }
                }
                out
            }
        }
    }
}

fn ray_meets_box<const D: usize>(o: &Point<D>, d: &Point<D>, b: &Aabb<D>) -> bool {
    let (mut t0, mut t1) = (0.0f64, f64::INFINITY);
    for i in 0..D {
        if d[i].abs() < 1e-300 {
            if o[i] < b.lo[i] || o[i] > b.hi[i] {
                return false;
            }
        } else {
            let inv = 1.0 / d[i];
            let mut ta = (b.lo[i] - o[i]) * inv;
            let mut tb = (b.hi[i] - o[i]) * inv;
            if ta > tb {
                std::mem::swap(&mut ta, &mut tb);
            }
            t0 = t0.max(ta);
            t1 = t1.min(tb);
            if t0 > t1 {
                return false;
            }
        }
    }
    true
}

#[derive(Clone, Debug, Default)]
pub struct BoundaryMesh<const D: usize> {
    simplices: Vec<Simplex<D>>,
    bvh: Bvh<D>,
}

/// Quantized vertex key used to identify shared vertices.
pub fn vertex_key<const D: usize>(p: &Point<D>) -> [i64; D] {
    let mut k = [0i64; D];
    for i in 0..D {
        k[i] = (p[i] * 1e10).round() as i64;
    }
    k
}

impl<const D: usize> BoundaryMesh<D> {
    pub fn new(simplices: Vec<Simplex<D>>) -> Self {
        let boxes: Vec<Aabb<D>> = simplices.iter().map(|s| s.aabb()).collect();
        let bvh = Bvh::build(&boxes);
        BoundaryMesh { simplices, bvh }
    }

    pub fn simplices(&self) -> &[Simplex<D>] {
        &self.simplices
    }

    pub fn len(&self) -> usize {
        self.simplices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.simplices.is_empty()
    }

    pub fn aabb(&self) -> Aabb<D> {
        self.bvh.bounds()
    }

    /// Nearest point on the mesh, its distance and the simplex index.
    pub fn nearest(&self, p: &Point<D>) -> Option<(Point<D>, f64, usize)> {
        self.bvh
            .nearest(p, |i| self.simplices[i].dist2(p))
            .map(|(i, d2)| (self.simplices[i].closest_point(p), d2.sqrt(), i))
    }

    /// Exhaustive scan; the reference for [`BoundaryMesh::nearest`].
    pub fn nearest_brute(&self, p: &Point<D>) -> Option<(Point<D>, f64, usize)> {
        let mut best: Option<(usize, f64)> = None;
        for (i, s) in self.simplices.iter().enumerate() {
            let d2 = s.dist2(p);
            if best.map(|b| d2 < b.1).unwrap_or(true) {
                best = Some((i, d2));
            }
        }
        best.map(|(i, d2)| (self.simplices[i].closest_point(p), d2.sqrt(), i))
    }

    pub fn meets_box(&self, b: &Aabb<D>) -> bool {
        self.bvh.any_in_box(b, |i| self.simplices[i].meets_box(b))
    }

    /// Number of simplices crossed by the ray `o + t d`, `t > 0`.
    pub fn crossings(&self, o: &Point<D>, d: &Point<D>) -> usize {
        let mut n = 0;
        self.bvh.visit(
            |b| ray_meets_box(o, d, b),
            |i| {
                if self.simplices[i].ray_hit(o, d).is_some() {
                    n += 1;
                }
                true
            },
        );
        n
    }

    /// Total length or area.
    pub fn measure(&self) -> f64 {
        self.simplices.iter().map(|s| s.measure()).sum()
    }

    pub fn measure_in_box(&self, b: &Aabb<D>) -> f64 {
        self.simplices
            .iter()
            .filter(|s| b.contains(&s.centroid()))
            .map(|s| s.measure())
            .sum()
    }

    pub fn samples(&self, h: f64) -> Vec<Point<D>> {
        self.simplices.iter().flat_map(|s| s.samples(h)).collect()
    }

    pub fn samples_in_box(&self, b: &Aabb<D>, h: f64) -> Vec<Point<D>> {
        self.bvh
            .candidates_in_box(b)
            .into_iter()
            .flat_map(|i| self.simplices[i].samples(h))
            .filter(|p| b.contains(p))
            .collect()
    }

    pub fn samples_in_ball(&self, ball: &Ball<D>, h: f64) -> Vec<Point<D>> {
        self.samples_in_box(&ball.aabb(), h)
            .into_iter()
            .filter(|p| ball.contains_closed(p))
            .collect()
    }

    /// Orientation defects: for segments, vertices whose in- and out-degree
    /// differ; for triangles, directed edges without a reversed partner.
    /// A closed consistently oriented mesh has none.
    pub fn orientation_defects(&self) -> Vec<Point<D>> {
        let mut count: HashMap<Vec<i64>, (i64, Point<D>)> = HashMap::new();
        for s in &self.simplices {
            if D == 2 {
                let e = count.entry(vertex_key(&s.v[0]).to_vec()).or_insert((0, s.v[0]));
                e.0 += 1;
                let e = count.entry(vertex_key(&s.v[1]).to_vec()).or_insert((0, s.v[1]));
                e.0 -= 1;
            } else {
                for k in 0..3 {
                    let a = vertex_key(&s.v[k]);
                    let b = vertex_key(&s.v[(k + 1) % 3]);
                    let mid = (s.v[k] + s.v[(k + 1) % 3]) * 0.5;
                    let (key, sign) = if a < b {
                        ([a.to_vec(), b.to_vec()].concat(), 1)
                    } else {
                        ([b.to_vec(), a.to_vec()].concat(), -1)
                    };
                    let e = count.entry(key).or_insert((0, mid));
                    e.0 += sign;
                }
            }
        }
        let mut out: Vec<(Vec<i64>, Point<D>)> = count
            .into_iter()
            .filter(|(_, (c, _))| *c != 0)
            .map(|(k, (_, p))| (k, p))
            .collect();
        out.sort_by(|a, b| a.0.cmp(&b.0));
        out.into_iter().map(|x| x.1).collect()
    }

    /// OFF text. Planar meshes are written with a zero third coordinate and
    /// two-vertex faces.
    pub fn write_off<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let mut index: HashMap<[i64; D], usize> = HashMap::new();
        let mut verts: Vec<Point<D>> = Vec::new();
        let mut faces: Vec<[usize; D]> = Vec::with_capacity(self.simplices.len());
        for s in &self.simplices {
            let mut f = [0usize; D];
            for (k, v) in s.v.iter().enumerate() {
                let key = vertex_key(v);
                f[k] = *index.entry(key).or_insert_with(|| {
                    verts.push(*v);
                    verts.len() - 1
                });
            }
            faces.push(f);
        }
        writeln!(w, "OFF")?;
        writeln!(w, "{} {} 0", verts.len(), faces.len())?;
        for v in &verts {
            let z = if D == 3 { v[2] } else { 0.0 };
            writeln!(w, "{:.17e} {:.17e} {:.17e}", v[0], v[1], z)?;
        }
        for f in &faces {
            write!(w, "{D}")?;
            for i in f {
                write!(w, " {i}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn to_off_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_off(&mut buf).expect("write to memory");
        String::from_utf8(buf).expect("ascii")
    }

    pub fn read_off(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .filter(|l| !l.is_empty());
        let head = lines.next().ok_or_else(|| Error::Parse("empty OFF input".into()))?;
        if head != "OFF" {
            return Err(Error::Parse(format!("expected OFF header, got {head:?}")));
        }
        let counts: Vec<usize> = lines
            .next()
            .ok_or_else(|| Error::Parse("missing counts line".into()))?
            .split_whitespace()
            .map(|t| t.parse().map_err(|e| Error::Parse(format!("bad count {t:?}: {e}"))))
            .collect::<Result<_>>()?;
        if counts.len() < 2 {
            return Err(Error::Parse("counts line needs vertex and face counts".into()));
        }
        let mut verts = Vec::with_capacity(counts[0]);
        for _ in 0..counts[0] {
            let xs: Vec<f64> = lines
                .next()
                .ok_or_else(|| Error::Parse("truncated vertex list".into()))?
                .split_whitespace()
                .map(|t| {
                    t.parse()
                        .map_err(|e| Error::Parse(format!("bad coordinate {t:?}: {e}")))
                })
                .collect::<Result<_>>()?;
            if xs.len() < D {
                return Err(Error::Parse("vertex line has too few coordinates".into()));
            }
            verts.push(Point::<D>::from_fn(|i, _| xs[i]));
        }
        let mut simplices = Vec::with_capacity(counts[1]);
        for _ in 0..counts[1] {
            let ids: Vec<usize> = lines
                .next()
                .ok_or_else(|| Error::Parse("truncated face list".into()))?
                .split_whitespace()
                .map(|t| t.parse().map_err(|e| Error::Parse(format!("bad index {t:?}: {e}"))))
                .collect::<Result<_>>()?;
            if ids.first() != Some(&D) || ids.len() < D + 1 {
                return Err(Error::Parse(format!("faces must have {D} vertices")));
            }
            let mut v = [Point::<D>::zeros(); D];
            for k in 0..D {
                v[k] = *verts
                    .get(ids[k + 1])
                    .ok_or_else(|| Error::Parse(format!("vertex index {} out of range", ids[k + 1])))?;
            }
            simplices.push(Simplex::new(v));
        }
        Ok(BoundaryMesh::new(simplices))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn square() -> BoundaryMesh<2> {
        let c = [
            Point::<2>::new(0.0, 0.0),
            Point::<2>::new(1.0, 0.0),
            Point::<2>::new(1.0, 1.0),
            Point::<2>::new(0.0, 1.0),
        ];
        BoundaryMesh::new((0..4).map(|i| Simplex::new([c[i], c[(i + 1) % 4]])).collect())
    }

    #[test]
    fn square_is_closed_and_outward() {
        let m = square();
        assert!(m.orientation_defects().is_empty());
        assert!((m.simplices()[0].normal() - Point::<2>::new(0.0, -1.0)).norm() < 1e-15);
        let dir = Point::<2>::new(0.3141, 1.0);
        assert_eq!(m.crossings(&Point::<2>::new(0.5, 0.5), &dir) % 2, 1);
        assert_eq!(m.crossings(&Point::<2>::new(1.5, 0.5), &dir) % 2, 0);
    }

    #[test]
    fn triangle_closest_point_matches_dense_sampling() {
        let t = Simplex::<3>::new([
            Point::<3>::new(0.0, 0.0, 0.0),
            Point::<3>::new(1.0, 0.0, 0.0),
            Point::<3>::new(0.0, 1.0, 0.2),
        ]);
        let dense = t.samples(0.002);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let p = Point::<3>::new(
                rng.random::<f64>() * 2.0 - 0.5,
                rng.random::<f64>() * 2.0 - 0.5,
                rng.random(),
            );
            let exact = t.dist2(&p).sqrt();
            let approx = dense.iter().map(|q| (q - p).norm()).fold(f64::INFINITY, f64::min);
            assert!(exact <= approx + 1e-12);
            assert!(approx - exact < 3e-3);
        }
    }

    #[test]
    fn box_tests_agree_with_sampling() {
        let t = Simplex::<3>::new([
            Point::<3>::new(0.0, 0.0, 0.0),
            Point::<3>::new(1.0, 0.0, 0.0),
            Point::<3>::new(0.0, 1.0, 1.0),
        ]);
        let b = Aabb {
            lo: Point::<3>::new(0.4, 0.4, -1.0),
            hi: Point::<3>::new(0.6, 0.6, 0.3),
        };
        assert!(!t.meets_box(&b));
        let b2 = Aabb {
            lo: Point::<3>::new(0.1, 0.1, 0.0),
            hi: Point::<3>::new(0.3, 0.3, 0.2),
        };
        assert!(t.meets_box(&b2));
    }

    #[test]
    fn off_roundtrip() {
        let m = square();
        let text = m.to_off_string();
        let back = BoundaryMesh::<2>::read_off(&text).unwrap();
        assert_eq!(back.simplices(), m.simplices());
    }
}
