//! Blip profiles `ψ(x') = N^{-1} φ(N x')` and the faces of their graphs over `Q(1)`.

use crate::error::{Error, Result};
use crate::geometry::Point;

/// Half-width of the tent support in `|x'|_∞`. The planar tent uses the full
/// `1/2`; the spatial pyramid stays inside the Euclidean ball `|x'| < 1/2`.
pub fn tent_radius(d: usize) -> f64 {
    if d == 1 {
        0.5
    } else {
        0.35
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ProfileKind {
    /// `φ(x') = θ max(0, ρ - |x'|_∞)`.
    Tent,
    /// Piecewise-linear `φ` on the line through breakpoints `(x, φ(x))`,
    /// zero outside them. Only for `d = 1`.
    Custom(Vec<(f64, f64)>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Profile {
    pub kind: ProfileKind,
    pub theta: f64,
    pub n: u32,
    /// Base dimension `d`.
    pub d: usize,
}

/// A planar convex face with vertices ordered so that the simplex orientation
/// convention yields the outward normal.
#[derive(Clone, Debug, PartialEq)]
pub struct Face<const D: usize> {
    pub vertices: Vec<Point<D>>,
    pub outward: Point<D>,
}

impl<const D: usize> Face<D> {
    pub fn measure(&self) -> f64 {
        let v = &self.vertices;
        if D == 2 {
            return (v[1] - v[0]).norm();
        }
        let mut a = 0.0;
        for k in 1..v.len() - 1 {
            let u = v[k] - v[0];
            let w = v[k + 1] - v[0];
            a += 0.5
                * (u.norm_squared() * w.norm_squared() - u.dot(&w).powi(2))
                    .max(0.0)
                    .sqrt();
        }
        a
    }
}

impl Profile {
    pub fn new(kind: ProfileKind, theta: f64, n: u32, d: usize) -> Result<Self> {
        if !(0.0..1.0).contains(&theta) {
            return Err(Error::InvalidInput(format!("theta = {theta} must lie in [0, 1)")));
        }
        if n == 0 {
            return Err(Error::InvalidInput("N must be positive".into()));
        }
        if !(d == 1 || d == 2) {
            return Err(Error::InvalidInput(format!("d = {d} unsupported")));
        }
        if let ProfileKind::Custom(pts) = &kind {
            if d != 1 {
                return Err(Error::InvalidInput("custom profiles are one-dimensional".into()));
            }
            if pts.len() < 2 {
                return Err(Error::InvalidInput("custom profile needs two breakpoints".into()));
            }
            let first = pts[0];
            let last = pts[pts.len() - 1];
            if first.1 != 0.0 || last.1 != 0.0 || first.0 <= -0.5 || last.0 >= 0.5 {
                return Err(Error::InvalidInput(
                    "custom profile must vanish at its ends, inside |x| < 1/2".into(),
                ));
            }
            for w in pts.windows(2) {
                let dx = w[1].0 - w[0].0;
                if dx <= 0.0 {
                    return Err(Error::InvalidInput("breakpoints must increase".into()));
                }
                let slope = ((w[1].1 - w[0].1) / dx).abs();
                if slope > theta * (1.0 + 1e-12) {
                    return Err(Error::SlopeViolation { slope, theta });
                }
            }
        }
        Ok(Profile { kind, theta, n, d })
    }

    pub fn tent(theta: f64, n: u32, d: usize) -> Result<Self> {
        Profile::new(ProfileKind::Tent, theta, n, d)
    }

    fn phi(&self, x: &[f64]) -> f64 {
        match &self.kind {
            ProfileKind::Tent => {
                let m = x.iter().fold(0.0f64, |a, v| a.max(v.abs()));
                self.theta * (tent_radius(self.d) - m).max(0.0)
            }
            ProfileKind::Custom(pts) => {
                let t = x[0];
                for w in pts.windows(2) {
                    if t >= w[0].0 && t <= w[1].0 {
                        let s = (t - w[0].0) / (w[1].0 - w[0].0);
                        return w[0].1 + s * (w[1].1 - w[0].1);
                    }
                }
                0.0
            }
        }
    }

    /// `ψ(x') = N^{-1} φ(N x')`.
    pub fn psi(&self, x: &[f64]) -> f64 {
        let n = self.n as f64;
        let scaled: Vec<f64> = x.iter().map(|v| v * n).collect();
        self.phi(&scaled) / n
    }

    /// Largest slope of `ψ` (equal to that of `φ`).
    pub fn max_slope(&self) -> f64 {
        match &self.kind {
            ProfileKind::Tent => self.theta,
            ProfileKind::Custom(pts) => pts
                .windows(2)
                .map(|w| ((w[1].1 - w[0].1) / (w[1].0 - w[0].0)).abs())
                .fold(0.0, f64::max),
        }
    }

    /// Breakpoints of `ψ` on `[-1/2, 1/2]` (`d = 1`), including the ends.
    fn breakpoints_1d(&self) -> Vec<(f64, f64)> {
        let n = self.n as f64;
        let mut pts = vec![(-0.5, 0.0)];
        if self.theta > 0.0 {
            match &self.kind {
                ProfileKind::Tent => {
                    let a = tent_radius(1) / n;
                    if a < 0.5 {
                        pts.push((-a, 0.0));
                    }
                    pts.push((0.0, self.theta * tent_radius(1) / n));
                    if a < 0.5 {
                        pts.push((a, 0.0));
                    }
                }
                ProfileKind::Custom(c) => {
                    for &(x, y) in c {
                        pts.push((x / n, y / n));
                    }
                }
            }
        }
        pts.push((0.5, 0.0));
        // Merge collinear runs so that flat stretches form single faces.
        let mut out: Vec<(f64, f64)> = Vec::new();
        for p in pts {
            if let Some(last) = out.last() {
                if (p.0 - last.0).abs() < 1e-15 {
                    continue;
                }
            }
            if out.len() >= 2 {
                let a = out[out.len() - 2];
                let b = out[out.len() - 1];
                let cross = (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
                if cross.abs() < 1e-15 {
                    out.pop();
                }
            }
            out.push(p);
        }
        out
    }

    /// Faces of the graph `∂ = {(x', ψ(x')) : x' ∈ Q(1)}` with the domain above.
    pub fn graph_faces<const D: usize>(&self) -> Vec<Face<D>> {
        assert_eq!(D, self.d + 1, "profile dimension mismatch");
        let pt = |c: &[f64]| Point::<D>::from_fn(|i, _| c[i]);
        if D == 2 {
            let bp = self.breakpoints_1d();
            return bp
                .windows(2)
                .map(|w| {
                    let (dx, dy) = (w[1].0 - w[0].0, w[1].1 - w[0].1);
                    let l = (dx * dx + dy * dy).sqrt();
                    Face {
                        vertices: vec![pt(&[w[0].0, w[0].1]), pt(&[w[1].0, w[1].1])],
                        outward: pt(&[dy / l, -dx / l]),
                    }
                })
                .collect();
        }
        let down = pt(&[0.0, 0.0, -1.0]);
        // Counterclockwise from above, reversed so the normal points down.
        let rect = |x0: f64, x1: f64, y0: f64, y1: f64| Face {
            vertices: vec![
                pt(&[x0, y0, 0.0]),
                pt(&[x0, y1, 0.0]),
                pt(&[x1, y1, 0.0]),
                pt(&[x1, y0, 0.0]),
            ],
            outward: down,
        };
        let a = tent_radius(2) / self.n as f64;
        if self.theta == 0.0 || a >= 0.5 {
            return vec![rect(-0.5, 0.5, -0.5, 0.5)];
        }
        let h = self.theta * a;
        let mut faces = vec![
            rect(-0.5, 0.5, a, 0.5),
            rect(-0.5, 0.5, -0.5, -a),
            rect(-0.5, -a, -a, a),
            rect(a, 0.5, -a, a),
        ];
        let apex = pt(&[0.0, 0.0, h]);
        let c = [
            pt(&[-a, -a, 0.0]),
            pt(&[a, -a, 0.0]),
            pt(&[a, a, 0.0]),
            pt(&[-a, a, 0.0]),
        ];
        for k in 0..4 {
            // Counterclockwise base edge (c_k, c_{k+1}) seen from above; reversed.
            let v = vec![c[(k + 1) % 4], c[k], apex];
            let n = crate::geometry::linalg::cross3((v[1] - v[0]).as_slice(), (v[2] - v[0]).as_slice());
            let nv = pt(&n);
            faces.push(Face {
                outward: nv / nv.norm(),
                vertices: v,
            });
        }
        faces
    }

    /// `dist(∂ \ ∂Ω_0, ∂[P_{Q(1)} ∪ P̃_{Q(1)}])` for tent height `b`, computed
    /// exactly from the vertices of the raised faces (the distance to the
    /// boundary of a convex body is concave inside it).
    pub fn separation(&self, b: f64) -> f64 {
        let faces: Vec<Vec<Vec<f64>>> = match self.d {
            1 => self
                .graph_faces::<2>()
                .into_iter()
                .map(|f| f.vertices.iter().map(|p| p.iter().copied().collect()).collect())
                .collect(),
            _ => self
                .graph_faces::<3>()
                .into_iter()
                .map(|f| f.vertices.iter().map(|p| p.iter().copied().collect()).collect())
                .collect(),
        };
        let norm = (4.0 + 1.0 / (b * b)).sqrt();
        let dist_to_boundary = |v: &Vec<f64>| {
            let h = v[self.d].abs() / b;
            (0..self.d)
                .map(|i| (1.0 - 2.0 * v[i].abs() - h) / norm)
                .fold(f64::INFINITY, f64::min)
        };
        let mut best = f64::INFINITY;
        for f in faces {
            if f.iter().all(|v| v[self.d] == 0.0) {
                continue;
            }
            for v in &f {
                best = best.min(dist_to_boundary(v));
            }
        }
        best
    }
}

/// Smallest `N ≤ n_max` whose scaled profile keeps the raised part at distance
/// `≥ b/100` from the boundary of the double tent over `Q(1)`.
pub fn smallest_separating_n(kind: &ProfileKind, theta: f64, b: f64, d: usize, n_max: u32) -> Result<u32> {
    for n in 1..=n_max {
        let p = Profile::new(kind.clone(), theta, n, d)?;
        if p.separation(b) >= b / 100.0 {
            return Ok(n);
        }
    }
    Err(Error::InvalidInput(format!(
        "no N <= {n_max} separates the profile for theta = {theta}, b = {b}"
    )))
}
