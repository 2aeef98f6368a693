//! Problem geometry detected from raw sites: enclosing rectangle, square
//! bounding box, convex hull and point-in-hull tests.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative boundary tolerance, scaled by the bounding-box edge.
pub const GEOM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    #[inline]
    pub fn dist2(self, other: Point2) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    #[inline]
    pub fn dist(self, other: Point2) -> f64 {
        self.dist2(other).sqrt()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl From<(f64, f64)> for Point2 {
    fn from((x, y): (f64, f64)) -> Self {
        Self { x, y }
    }
}

/// Cross product of `(a - o) x (b - o)`; positive for a counterclockwise turn.
#[inline]
fn cross(o: Point2, a: Point2, b: Point2) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub min_x: f64,
    pub max_x: f64,
    pub min_y: f64,
    pub max_y: f64,
}

impl Rect {
    pub fn width(&self) -> f64 {
        self.max_x - self.min_x
    }

    pub fn height(&self) -> f64 {
        self.max_y - self.min_y
    }

    pub fn contains(&self, p: Point2) -> bool {
        p.x >= self.min_x && p.x <= self.max_x && p.y >= self.min_y && p.y <= self.max_y
    }
}

/// Square of edge `side` anchored at `origin` (its lower-left corner).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub origin: Point2,
    pub side: f64,
}

impl BoundingBox {
    pub fn tolerance(&self) -> f64 {
        GEOM_TOL * self.side
    }

    pub fn contains(&self, p: Point2) -> bool {
        let tol = self.tolerance();
        p.x >= self.origin.x - tol
            && p.x <= self.origin.x + self.side + tol
            && p.y >= self.origin.y - tol
            && p.y <= self.origin.y + self.side + tol
    }
}

/// Counterclockwise convex polygon with no collinear vertices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexHull {
    vertices: Vec<Point2>,
    tol: f64,
}

impl ConvexHull {
    /// Rebuilds a hull from stored vertices, re-running the hull algorithm so
    /// the ordering and convexity invariants hold for any input.
    pub fn from_vertices(vertices: &[Point2]) -> Result<Self> {
        convex_hull(vertices)
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    /// Absolute boundary tolerance used by [`point_in_hull`].
    pub fn tolerance(&self) -> f64 {
        self.tol
    }

    pub fn area(&self) -> f64 {
        let v = &self.vertices;
        let n = v.len();
        let mut twice = 0.0;
        for i in 0..n {
            let (a, b) = (v[i], v[(i + 1) % n]);
            twice += a.x * b.y - b.x * a.y;
        }
        0.5 * twice
    }

    /// Area centroid of the polygon.
    pub fn centroid(&self) -> Point2 {
        let v = &self.vertices;
        let n = v.len();
        let (mut cx, mut cy, mut twice) = (0.0, 0.0, 0.0);
        for i in 0..n {
            let (a, b) = (v[i], v[(i + 1) % n]);
            let w = a.x * b.y - b.x * a.y;
            twice += w;
            cx += (a.x + b.x) * w;
            cy += (a.y + b.y) * w;
        }
        Point2::new(cx / (3.0 * twice), cy / (3.0 * twice))
    }

    pub fn contains(&self, p: Point2) -> bool {
        point_in_hull(p, self)
    }
}

fn check_finite(sites: &[Point2]) -> Result<()> {
    match sites.iter().position(|p| !p.is_finite()) {
        Some(i) => Err(Error::NonFinite(i)),
        None => Ok(()),
    }
}

pub fn bounding_rect(sites: &[Point2]) -> Result<Rect> {
    if sites.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    check_finite(sites)?;
    let mut r = Rect {
        min_x: f64::INFINITY,
        max_x: f64::NEG_INFINITY,
        min_y: f64::INFINITY,
        max_y: f64::NEG_INFINITY,
    };
    for p in sites {
        r.min_x = r.min_x.min(p.x);
        r.max_x = r.max_x.max(p.x);
        r.min_y = r.min_y.min(p.y);
        r.max_y = r.max_y.max(p.y);
    }
    Ok(r)
}

/// The square of edge `max(max_x, max_y) - min(min_x, min_y)`, anchored at
/// `(m, m)` with `m = min(min_x, min_y)`. That anchor is the only one for
/// which the scalar edge formula is guaranteed to cover the rectangle.
pub fn bounding_box(rect: &Rect) -> Result<BoundingBox> {
    let lo = rect.min_x.min(rect.min_y);
    let side = rect.max_x.max(rect.max_y) - lo;
    if !(side > 0.0) || !side.is_finite() {
        return Err(Error::DegenerateGeometry(format!(
            "bounding box edge {side} is not positive"
        )));
    }
    Ok(BoundingBox {
        origin: Point2::new(lo, lo),
        side,
    })
}

/// Andrew's monotone chain. Collinear points on the boundary are dropped.
pub fn convex_hull(sites: &[Point2]) -> Result<ConvexHull> {
    let rect = bounding_rect(sites)?;
    let scale = rect.width().max(rect.height());

    let mut pts: Vec<Point2> = sites.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();

    if pts.len() < 3 {
        return Err(Error::DegenerateGeometry(format!(
            "need at least 3 distinct sites for a hull, got {}",
            pts.len()
        )));
    }

    let mut hull: Vec<Point2> = Vec::with_capacity(2 * pts.len());
    for &p in &pts {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    let lower_len = hull.len() + 1;
    for &p in pts.iter().rev().skip(1) {
        while hull.len() >= lower_len && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0
        {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();

    if hull.len() < 3 {
        return Err(Error::DegenerateGeometry("all sites are collinear".into()));
    }
    Ok(ConvexHull {
        vertices: hull,
        tol: GEOM_TOL * scale,
    })
}

/// Closed-hull membership: true inside or within the hull tolerance of an edge.
pub fn point_in_hull(p: Point2, hull: &ConvexHull) -> bool {
    let v = &hull.vertices;
    let n = v.len();
    for i in 0..n {
        let (a, b) = (v[i], v[(i + 1) % n]);
        let edge = a.dist(b);
        // signed distance of p from the edge line, positive on the inside
        if cross(a, b, p) < -hull.tol * edge {
            return false;
        }
    }
    true
}
