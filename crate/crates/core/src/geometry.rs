//! Planar primitives: oriented rectangles with a separating-axis overlap test,
//! and simple polygons with boundary-inclusive containment.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{cos, hypot, sin};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(from = "[f64; 2]", into = "[f64; 2]"))]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dist(self, other: Point) -> f64 {
        hypot(other.x - self.x, other.y - self.y)
    }
}

impl From<[f64; 2]> for Point {
    fn from([x, y]: [f64; 2]) -> Self {
        Point { x, y }
    }
}

impl From<Point> for [f64; 2] {
    fn from(p: Point) -> Self {
        [p.x, p.y]
    }
}

/// Rectangle centered at `(x, y)`, `length` along `heading`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OrientedBox {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub length: f64,
    pub width: f64,
}

impl OrientedBox {
    pub fn new(x: f64, y: f64, heading: f64, length: f64, width: f64) -> Self {
        Self {
            x,
            y,
            heading,
            length,
            width,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.length > 0.0 && self.width > 0.0) {
            return Err(Error::malformed("box dimensions must be positive"));
        }
        Ok(())
    }

    /// Unit vectors along the length and width.
    #[inline]
    pub fn axes(&self) -> [(f64, f64); 2] {
        let (s, c) = (sin(self.heading), cos(self.heading));
        [(c, s), (-s, c)]
    }

    /// Corners, counter-clockwise starting front-left.
    pub fn corners(&self) -> [Point; 4] {
        let [(ux, uy), (vx, vy)] = self.axes();
        let (hl, hw) = (self.length / 2.0, self.width / 2.0);
        let at = |a: f64, b: f64| Point::new(self.x + a * ux + b * vx, self.y + a * uy + b * vy);
        [at(hl, hw), at(-hl, hw), at(-hl, -hw), at(hl, -hw)]
    }

    /// Radius of the circumscribed circle.
    pub fn bounding_radius(&self) -> f64 {
        hypot(self.length, self.width) / 2.0
    }

    /// Point containment, boundary inclusive.
    pub fn contains(&self, p: Point) -> bool {
        let [(ux, uy), (vx, vy)] = self.axes();
        let (dx, dy) = (p.x - self.x, p.y - self.y);
        (dx * ux + dy * uy).abs() <= self.length / 2.0 && (dx * vx + dy * vy).abs() <= self.width / 2.0
    }

    /// Positive-area overlap by the separating-axis test. Boxes that only
    /// touch along an edge or at a corner do not overlap.
    pub fn overlaps(&self, other: &OrientedBox) -> bool {
        let (dx, dy) = (other.x - self.x, other.y - self.y);
        let ra = self.bounding_radius();
        let rb = other.bounding_radius();
        if dx * dx + dy * dy >= (ra + rb) * (ra + rb) {
            return false;
        }
        let a = self.axes();
        let b = other.axes();
        let (ahl, ahw) = (self.length / 2.0, self.width / 2.0);
        let (bhl, bhw) = (other.length / 2.0, other.width / 2.0);
        for (nx, ny) in [a[0], a[1], b[0], b[1]] {
            let proj_a = ahl * (a[0].0 * nx + a[0].1 * ny).abs() + ahw * (a[1].0 * nx + a[1].1 * ny).abs();
            let proj_b = bhl * (b[0].0 * nx + b[0].1 * ny).abs() + bhw * (b[1].0 * nx + b[1].1 * ny).abs();
            let dist = (dx * nx + dy * ny).abs();
            if dist >= proj_a + proj_b {
                return false;
            }
        }
        true
    }
}

/// Simple (non-self-intersecting) polygon; vertex order is free.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "Vec<Point>", into = "Vec<Point>"))]
pub struct Polygon {
    vertices: Vec<Point>,
    min: Point,
    max: Point,
}

impl TryFrom<Vec<Point>> for Polygon {
    type Error = Error;

    fn try_from(v: Vec<Point>) -> Result<Self> {
        Polygon::new(v)
    }
}

impl From<Polygon> for Vec<Point> {
    fn from(p: Polygon) -> Self {
        p.vertices
    }
}

impl Polygon {
    pub fn new(vertices: Vec<Point>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::malformed("polygon needs at least 3 vertices"));
        }
        if vertices.iter().any(|p| !(p.x.is_finite() && p.y.is_finite())) {
            return Err(Error::malformed("polygon vertex is not finite"));
        }
        let n = vertices.len();
        for i in 0..n {
            if vertices[i] == vertices[(i + 1) % n] {
                return Err(Error::malformed("polygon has repeated consecutive vertices"));
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                if adjacent {
                    continue;
                }
                let (a, b) = (vertices[i], vertices[(i + 1) % n]);
                let (c, d) = (vertices[j], vertices[(j + 1) % n]);
                if segments_intersect(a, b, c, d) {
                    return Err(Error::malformed("polygon is self-intersecting"));
                }
            }
        }
        let mut min = vertices[0];
        let mut max = vertices[0];
        for p in &vertices {
            min = Point::new(min.x.min(p.x), min.y.min(p.y));
            max = Point::new(max.x.max(p.x), max.y.max(p.y));
        }
        Ok(Self { vertices, min, max })
    }

    /// Axis-aligned rectangle `[x0, x1] × [y0, y1]`.
    pub fn rectangle(x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Self> {
        Self::new(alloc::vec![
            Point::new(x0, y0),
            Point::new(x1, y0),
            Point::new(x1, y1),
            Point::new(x0, y1),
        ])
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn edges(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    /// Point containment; points on the boundary count as inside.
    pub fn contains(&self, p: Point) -> bool {
        const EPS: f64 = 1e-9;
        if p.x < self.min.x - EPS || p.x > self.max.x + EPS || p.y < self.min.y - EPS || p.y > self.max.y + EPS {
            return false;
        }
        let mut inside = false;
        for (a, b) in self.edges() {
            if on_segment(p, a, b, EPS) {
                return true;
            }
            if (a.y > p.y) != (b.y > p.y) {
                let x_cross = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
                if p.x < x_cross {
                    inside = !inside;
                }
            }
        }
        inside
    }
}

fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

fn on_segment(p: Point, a: Point, b: Point, eps: f64) -> bool {
    let len = a.dist(b);
    if len == 0.0 {
        return p.dist(a) <= eps;
    }
    if (cross(a, b, p) / len).abs() > eps {
        return false;
    }
    let dot = (p.x - a.x) * (b.x - a.x) + (p.y - a.y) * (b.y - a.y);
    dot >= -eps * len && dot <= len * len + eps * len
}

/// Closed-segment intersection test (touching counts).
pub fn segments_intersect(a: Point, b: Point, c: Point, d: Point) -> bool {
    let d1 = cross(c, d, a);
    let d2 = cross(c, d, b);
    let d3 = cross(a, b, c);
    let d4 = cross(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    let within = |p: Point, q: Point, r: Point| {
        r.x >= p.x.min(q.x) && r.x <= p.x.max(q.x) && r.y >= p.y.min(q.y) && r.y <= p.y.max(q.y)
    };
    (d1 == 0.0 && within(c, d, a))
        || (d2 == 0.0 && within(c, d, b))
        || (d3 == 0.0 && within(a, b, c))
        || (d4 == 0.0 && within(a, b, d))
}
