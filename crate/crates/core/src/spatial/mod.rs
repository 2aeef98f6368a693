//! Partition-of-unity cover sizing and fixed-radius neighbor search.
//!
//! The cover is a uniform `d_PU x d_PU` grid of centers laid over the data
//! rectangle and filtered to the convex hull, each center carrying a circular
//! patch of radius `delta_PU = l_box * sqrt(2) / d_PU`. Points are organized in
//! a [`BlockGrid`] of `q = ceil(l_box / delta_PU)` blocks per side so that a
//! patch query only touches the blocks around the center's block.
//!
//! [`KdTree`] and [`BruteForce`] answer the same queries and serve as the
//! comparison baseline and the correctness oracle respectively.

mod block;
pub mod bench;
mod kdtree;

use serde::{Deserialize, Serialize};

pub use block::{block_of, neighborhood_of, BlockGrid, Neighborhood};
pub use kdtree::KdTree;

use crate::error::{Error, Result};
use crate::geometry::{point_in_hull, BoundingBox, ConvexHull, Point2, Rect};

/// Smallest point count for which the center grid has at least 2 x 2 nodes.
pub const MIN_POINTS: usize = 16;

/// Fixed-radius range search over a static point set.
pub trait RangeIndex {
    /// Appends to `out` the index of every point within `radius` of `center`
    /// (inclusive). Order is unspecified.
    fn query_into(&self, center: Point2, radius: f64, out: &mut Vec<usize>) -> Result<()>;

    fn query(&self, center: Point2, radius: f64) -> Result<Vec<usize>> {
        let mut out = Vec::new();
        self.query_into(center, radius, &mut out)?;
        Ok(out)
    }
}

/// Full-scan oracle.
#[derive(Debug, Clone)]
pub struct BruteForce<'a> {
    pub sites: &'a [Point2],
}

impl RangeIndex for BruteForce<'_> {
    fn query_into(&self, center: Point2, radius: f64, out: &mut Vec<usize>) -> Result<()> {
        let r2 = radius * radius;
        out.extend(
            self.sites
                .iter()
                .enumerate()
                .filter(|(_, p)| p.dist2(center) <= r2)
                .map(|(i, _)| i),
        );
        Ok(())
    }
}

pub fn brute_force_query(center: Point2, radius: f64, sites: &[Point2]) -> Vec<usize> {
    let mut out = Vec::new();
    BruteForce { sites }
        .query_into(center, radius, &mut out)
        .expect("brute force queries are infallible");
    out
}

/// `d_PU = floor(sqrt(N) / 2)`.
pub fn pu_grid_resolution(n: usize) -> Result<usize> {
    if n < MIN_POINTS {
        return Err(Error::TooFewPoints { got: n, min: MIN_POINTS });
    }
    // integer square root avoids rounding trouble at perfect squares
    let mut s = (n as f64).sqrt() as usize;
    while s * s > n {
        s -= 1;
    }
    while (s + 1) * (s + 1) <= n {
        s += 1;
    }
    Ok(s / 2)
}

/// `q = ceil(l_box / delta_PU)`.
pub fn block_count(bbox: &BoundingBox, delta_pu: f64) -> Result<usize> {
    if !(delta_pu > 0.0) || !delta_pu.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "patch radius must be positive, got {delta_pu}"
        )));
    }
    Ok(((bbox.side / delta_pu).ceil() as usize).max(1))
}

/// Patch radius for a given grid resolution.
pub fn patch_radius(bbox: &BoundingBox, d_pu: usize) -> f64 {
    bbox.side * std::f64::consts::SQRT_2 / d_pu as f64
}

/// Retained partition-of-unity centers and their common patch radius.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PuCenters {
    pub centers: Vec<Point2>,
    /// Grid resolution per side before hull filtering.
    pub d_pu: usize,
    pub delta_pu: f64,
}

impl PuCenters {
    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }
}

/// Lays a `d_PU x d_PU` grid over `rect` (endpoints included) and keeps the
/// nodes that fall inside the hull.
pub fn build_pu_centers(
    hull: &ConvexHull,
    rect: &Rect,
    bbox: &BoundingBox,
    n: usize,
) -> Result<PuCenters> {
    let d_pu = pu_grid_resolution(n)?;
    let step = |lo: f64, hi: f64, i: usize| {
        if i + 1 == d_pu {
            hi
        } else {
            lo + (hi - lo) * i as f64 / (d_pu - 1) as f64
        }
    };
    let mut centers = Vec::with_capacity(d_pu * d_pu);
    for j in 0..d_pu {
        let y = step(rect.min_y, rect.max_y, j);
        for i in 0..d_pu {
            let c = Point2::new(step(rect.min_x, rect.max_x, i), y);
            if point_in_hull(c, hull) {
                centers.push(c);
            }
        }
    }
    if centers.is_empty() {
        return Err(Error::EmptyCover);
    }
    Ok(PuCenters {
        centers,
        d_pu,
        delta_pu: patch_radius(bbox, d_pu),
    })
}
