//! Hausdorff-type distances between point samples restricted to a ball.

use super::pointindex::PointIndex;
use super::{Ball, Point};
use crate::error::{Error, Result};

/// `max(sup_{a ∈ A∩ball} dist(a, B), sup_{b ∈ B∩ball} dist(b, A))`.
pub fn local_hausdorff<const D: usize>(a: &[Point<D>], b: &[Point<D>], ball: &Ball<D>) -> Result<f64> {
    let ia = PointIndex::new(a.to_vec());
    let ib = PointIndex::new(b.to_vec());
    local_hausdorff_indexed(&ia, &ib, ball)
}

/// As [`local_hausdorff`] with prebuilt indices.
pub fn local_hausdorff_indexed<const D: usize>(a: &PointIndex<D>, b: &PointIndex<D>, ball: &Ball<D>) -> Result<f64> {
    let sa = a.within(ball);
    if sa.is_empty() {
        return Err(Error::EmptyIntersection { which: "A" });
    }
    let sb = b.within(ball);
    if sb.is_empty() {
        return Err(Error::EmptyIntersection { which: "B" });
    }
    let one = |from: &PointIndex<D>, idx: &[usize], to: &PointIndex<D>| {
        idx.iter()
            .map(|&i| to.nearest(&from.points()[i]).map(|x| x.1).unwrap_or(f64::INFINITY))
            .fold(0.0f64, f64::max)
    };
    Ok(one(a, &sa, b).max(one(b, &sb, a)))
}
