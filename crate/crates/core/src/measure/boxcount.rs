//! Box counting over dyadic grids.

use std::collections::HashSet;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::Point;

#[derive(Clone, Debug, Serialize)]
pub struct BoxCount {
    /// Box sides, decreasing.
    pub scales: Vec<f64>,
    pub counts: Vec<usize>,
    /// `N(δ) δ^d`.
    pub hd_estimates: Vec<f64>,
    /// Least-squares slope of `log N` against `log(1/δ)`.
    pub dim_fit: f64,
    pub d: usize,
}

impl BoxCount {
    /// Two-column `log(1/δ) log N` rows for plotting.
    pub fn plot_data(&self) -> String {
        self.scales
            .iter()
            .zip(&self.counts)
            .map(|(s, n)| format!("{:.10e} {:.10e}\n", (1.0 / s).ln(), (*n as f64).ln()))
            .collect()
    }
}

/// Counts grid boxes `Π [k_i δ, (k_i + 1) δ)` meeting the sample at each scale.
/// `covering` is the sample's covering radius of the underlying set.
pub fn box_count<const D: usize>(samples: &[Point<D>], covering: f64, scales: &[f64], d: usize) -> Result<BoxCount> {
    if samples.is_empty() || scales.len() < 2 {
        return Err(Error::InvalidInput("need samples and at least two scales".into()));
    }
    let mut scales: Vec<f64> = scales.to_vec();
    scales.sort_by(|a, b| b.total_cmp(a));
    let smallest = *scales.last().unwrap();
    if covering >= smallest / 4.0 {
        return Err(Error::Resolution {
            covering,
            scale: smallest,
        });
    }
    let counts: Vec<usize> = scales
        .iter()
        .map(|&s| {
            let boxes: HashSet<[i64; D]> = samples
                .iter()
                .map(|p| std::array::from_fn(|i| (p[i] / s).floor() as i64))
                .collect();
            boxes.len()
        })
        .collect();
    let x: Vec<f64> = scales.iter().map(|s| (1.0 / s).ln()).collect();
    let y: Vec<f64> = counts.iter().map(|&n| (n as f64).ln()).collect();
    Ok(BoxCount {
        hd_estimates: scales
            .iter()
            .zip(&counts)
            .map(|(s, &n)| n as f64 * s.powi(d as i32))
            .collect(),
        dim_fit: ls_slope(&x, &y),
        scales,
        counts,
        d,
    })
}

pub fn ls_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let xm = x.iter().sum::<f64>() / n;
    let ym = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - xm) * (b - ym)).sum();
    let sxx: f64 = x.iter().map(|a| (a - xm).powi(2)).sum();
    sxy / sxx
}

/// Points along a polyline with spacing at most `h`.
pub fn sample_polyline<const D: usize>(vertices: &[Point<D>], h: f64) -> Vec<Point<D>> {
    let mut out = Vec::new();
    for w in vertices.windows(2) {
        let len = (w[1] - w[0]).norm();
        let m = (len / h).ceil().max(1.0) as usize;
        for k in 0..m {
            out.push(w[0] + (w[1] - w[0]) * (k as f64 / m as f64));
        }
    }
    if let Some(last) = vertices.last() {
        out.push(*last);
    }
    out
}

/// Vertices of the Koch curve over `[0, 1] × {0}` after `depth` replacements
/// of the middle third of every segment by two sides of an equilateral triangle.
pub fn koch_curve(depth: usize) -> Vec<Point<2>> {
    let mut pts = vec![Point::<2>::new(0.0, 0.0), Point::<2>::new(1.0, 0.0)];
    let (s, c) = (std::f64::consts::FRAC_PI_3.sin(), 0.5);
    for _ in 0..depth {
        let mut next = Vec::with_capacity(4 * pts.len());
        for w in pts.windows(2) {
            let v = (w[1] - w[0]) / 3.0;
            let a = w[0] + v;
            let tip = a + Point::<2>::new(c * v[0] - s * v[1], s * v[0] + c * v[1]);
            next.extend_from_slice(&[w[0], a, tip, w[0] + v * 2.0]);
        }
        next.push(*pts.last().unwrap());
        pts = next;
    }
    pts
}
