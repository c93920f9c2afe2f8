//! Quasi-random and random point generators.

use super::Point;
use rand::Rng;
use rand_distr::StandardNormal;

const PRIMES: [u64; 8] = [2, 3, 5, 7, 11, 13, 17, 19];

/// Radical inverse of `i` in `base`.
pub fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += f * (i % base) as f64;
        i /= base;
        f *= inv;
    }
    r
}

/// `k`-dimensional Halton point with index `i` (skipping index 0).
pub fn halton(i: u64, k: usize) -> Vec<f64> {
    (0..k).map(|j| radical_inverse(i + 1, PRIMES[j])).collect()
}

/// Uniform point on the unit sphere `S^{D-1}`.
pub fn unit_sphere<const D: usize, R: Rng + ?Sized>(rng: &mut R) -> Point<D> {
    match D {
        2 => {
            let a = rng.random::<f64>() * std::f64::consts::TAU;
            Point::<D>::from_fn(|i, _| if i == 0 { a.cos() } else { a.sin() })
        }
        3 => {
            let z = 2.0 * rng.random::<f64>() - 1.0;
            let a = rng.random::<f64>() * std::f64::consts::TAU;
            let s = (1.0 - z * z).max(0.0).sqrt();
            let v = [s * a.cos(), s * a.sin(), z];
            Point::<D>::from_fn(|i, _| v[i])
        }
        _ => loop {
            let v = Point::<D>::from_fn(|_, _| rng.sample::<f64, _>(StandardNormal));
            let n = v.norm();
            if n > 1e-12 {
                return v / n;
            }
        },
    }
}

/// Nearly uniform deterministic points on the unit sphere with at most `n`
/// points (a circle grid when `D = 2`, a Fibonacci lattice when `D = 3`).
pub fn sphere_lattice<const D: usize>(n: usize) -> Vec<Point<D>> {
    let n = n.max(1);
    match D {
        2 => (0..n)
            .map(|k| {
                let a = std::f64::consts::TAU * k as f64 / n as f64;
                Point::<D>::from_fn(|i, _| if i == 0 { a.cos() } else { a.sin() })
            })
            .collect(),
        3 => {
            let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
            (0..n)
                .map(|k| {
                    let z = 1.0 - (2 * k + 1) as f64 / n as f64;
                    let s = (1.0 - z * z).max(0.0).sqrt();
                    let a = golden * k as f64;
                    let v = [s * a.cos(), s * a.sin(), z];
                    Point::<D>::from_fn(|i, _| v[i])
                })
                .collect()
        }
        _ => panic!("unsupported dimension {D}"),
    }
}

/// Number of lattice points giving spacing about `h` on a sphere of radius `r`.
pub fn sphere_count<const D: usize>(r: f64, h: f64) -> usize {
    let ratio = (r / h).max(1.0);
    match D {
        2 => (std::f64::consts::TAU * ratio).ceil() as usize,
        _ => (4.0 * std::f64::consts::PI * ratio * ratio * 1.2).ceil() as usize,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn radical_inverse_base2() {
        assert_eq!(radical_inverse(1, 2), 0.5);
        assert_eq!(radical_inverse(2, 2), 0.25);
        assert_eq!(radical_inverse(3, 2), 0.75);
    }

    #[test]
    fn sphere_points_are_unit() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            assert!((unit_sphere::<3, _>(&mut rng).norm() - 1.0).abs() < 1e-12);
        }
        for p in sphere_lattice::<3>(50) {
            assert!((p.norm() - 1.0).abs() < 1e-12);
        }
    }
}
