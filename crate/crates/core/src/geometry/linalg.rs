//! Small dense linear algebra helpers for `D <= 3`.

use super::{basis, Point};
use nalgebra::SMatrix;

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues ascending and the matching unit eigenvectors.
pub fn symmetric_eigen<const D: usize>(m: &SMatrix<f64, D, D>) -> (Vec<f64>, Vec<Point<D>>) {
    let mut a = *m;
    let mut v = SMatrix::<f64, D, D>::identity();
    for _sweep in 0..64 {
        let mut off = 0.0;
        for p in 0..D {
            for q in (p + 1)..D {
                off += a[(p, q)] * a[(p, q)];
            }
        }
        if off < 1e-30 * (1.0 + a.norm_squared()) {
            break;
        }
        for p in 0..D {
            for q in (p + 1)..D {
                let apq = a[(p, q)];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..D {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..D {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..D {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut idx: Vec<usize> = (0..D).collect();
    idx.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]));
    let vals = idx.iter().map(|&i| a[(i, i)]).collect();
    let vecs = idx
        .iter()
        .map(|&i| {
            let c = v.column(i).into_owned();
            c / c.norm()
        })
        .collect();
    (vals, vecs)
}

pub fn cross3(a: &[f64], b: &[f64]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Orthonormal basis of `normal`'s orthogonal complement.
///
/// The first vector is the normalized projection of `e_1` (or `e_2` when `e_1`
/// is nearly parallel to `normal`). In three dimensions the second vector is
/// `normal × t_1`, so `(t_1, t_2, normal)` is right-handed.
pub fn complete_basis<const D: usize>(normal: &Point<D>) -> Vec<Point<D>> {
    let n = normal / normal.norm();
    let mut out: Vec<Point<D>> = Vec::with_capacity(D - 1);
    let pick = |e: Point<D>| -> Option<Point<D>> {
        let t = e - n * n.dot(&e);
        let len = t.norm();
        (len > 1e-6).then(|| t / len)
    };
    let first = pick(basis::<D>(0))
        .or_else(|| pick(basis::<D>(1.min(D - 1))))
        .expect("complement basis");
    out.push(first);
    if D == 3 {
        let c = cross3(n.as_slice(), first.as_slice());
        out.push(Point::<D>::from_fn(|i, _| c[i]));
    } else {
        for k in 0..D {
            if out.len() == D - 1 {
                break;
            }
            let mut t = basis::<D>(k) - n * n.dot(&basis::<D>(k));
            for u in &out {
                t -= u * u.dot(&t);
            }
            let len = t.norm();
            if len > 1e-6 {
                out.push(t / len);
            }
        }
    }
    out
}

/// Volume of the unit ball in `R^k` (`k = 0..=3`).
pub fn unit_ball_volume(k: usize) -> f64 {
    match k {
        0 => 1.0,
        1 => 2.0,
        2 => std::f64::consts::PI,
        3 => 4.0 / 3.0 * std::f64::consts::PI,
        _ => panic!("unsupported dimension {k}"),
    }
}

/// Distance from `p` to the affine span of `pts` (Gram–Schmidt on differences).
pub fn dist_to_affine_span<const D: usize>(p: &Point<D>, pts: &[Point<D>]) -> f64 {
    if pts.is_empty() {
        return f64::INFINITY;
    }
    let o = pts[0];
    let mut dirs: Vec<Point<D>> = Vec::new();
    for q in &pts[1..] {
        let mut v = q - o;
        for u in &dirs {
            v -= u * u.dot(&v);
        }
        let len = v.norm();
        if len > 1e-14 * (1.0 + (q - o).norm()) {
            dirs.push(v / len);
        }
    }
    let mut w = p - o;
    for u in &dirs {
        w -= u * u.dot(&w);
    }
    w.norm()
}
