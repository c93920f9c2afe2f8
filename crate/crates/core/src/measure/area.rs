//! Surface area of the local graphs `Γ_Q` by midpoint quadrature.

use crate::enlargement::{graph_function, graph_gradient, GraphPatch};
use crate::geometry::{Ball, Point};

/// Midpoint nodes and weights on the `(D-1)`-ball of radius `rad` centred at
/// the origin of the first `D - 1` coordinates. `m` cells along a diameter
/// when `D = 2`; `m` radial by `4m` angular polar cells when `D = 3`.
pub fn disk_nodes<const D: usize>(rad: f64, m: usize) -> Vec<(Point<D>, f64)> {
    let m = m.max(1);
    let mut out = Vec::new();
    if D == 2 {
        let h = 2.0 * rad / m as f64;
        for i in 0..m {
            let t = -rad + h * (i as f64 + 0.5);
            out.push((Point::<D>::from_fn(|k, _| if k == 0 { t } else { 0.0 }), h));
        }
    } else {
        let na = 4 * m;
        let dr = rad / m as f64;
        let da = std::f64::consts::TAU / na as f64;
        for i in 0..m {
            let rho = dr * (i as f64 + 0.5);
            for j in 0..na {
                let a = da * (j as f64 + 0.5);
                let v = [rho * a.cos(), rho * a.sin(), 0.0];
                out.push((Point::<D>::from_fn(|k, _| v[k]), rho * dr * da));
            }
        }
    }
    out
}

/// `∫ √(1 + |∇f|²)` over the disk of radius `rad`, where `grad` returns the
/// tangential gradient.
pub fn graph_area_with<const D: usize, G: Fn(&Point<D>) -> Point<D>>(rad: f64, m: usize, grad: G) -> f64 {
    disk_nodes::<D>(rad, m)
        .iter()
        .map(|(x, w)| w * (1.0 + grad(x).norm_squared()).sqrt())
        .sum()
}

/// `H^d(Γ_Q)` over `L_Q ∩ 10B_Q`, optionally restricted to graph points in
/// `clip` (the integrand is zeroed outside).
pub fn patch_area<const D: usize>(patch: &GraphPatch<D>, m: usize, clip: Option<&Ball<D>>) -> f64 {
    disk_nodes::<D>(10.0 * patch.r, m)
        .iter()
        .map(|(x, w)| {
            if let Some(b) = clip {
                let mut y = *x;
                y[D - 1] = graph_function(patch, x).0;
                if !b.contains_closed(&patch.to_world(&y)) {
                    return 0.0;
                }
            }
            w * (1.0 + graph_gradient(patch, x).norm_squared()).sqrt()
        })
        .sum()
}

/// Volume of the unit ball of `R^d`.
pub fn unit_ball_volume(d: usize) -> f64 {
    match d {
        1 => 2.0,
        2 => std::f64::consts::PI,
        3 => 4.0 * std::f64::consts::PI / 3.0,
        _ => {
            let d = d as f64;
            std::f64::consts::PI.powf(d / 2.0) / gamma_half_integer(d / 2.0 + 1.0)
        }
    }
}

fn gamma_half_integer(x: f64) -> f64 {
    if (x - 0.5).abs() < 1e-12 {
        std::f64::consts::PI.sqrt()
    } else if (x - 1.0).abs() < 1e-12 {
        1.0
    } else {
        (x - 1.0) * gamma_half_integer(x - 1.0)
    }
}
