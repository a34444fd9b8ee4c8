//! Planar primitives: vectors, half-planes, convex polygons, polylines and the
//! closest-point velocity program.

mod polyline;
mod program;
mod vec2;

use alloc::vec::Vec;

use thiserror::Error;

pub use polyline::{Polyline, Projection};
pub use program::{
    least_violation_fallback, solve_or_fallback, solve_velocity_program, solve_velocity_program_seeded, Infeasible,
    DEFAULT_PROGRAM_SEED,
};
pub use vec2::Vec2;

/// Slack allowed when testing a point against a constraint.
pub const FEASIBILITY_TOL: f64 = 1e-7;
/// Tolerance for equality-style comparisons (unit normals, exact returns).
pub const EQUALITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeomError {
    #[error("non-finite coordinate")]
    NonFinite,
    #[error("polygon needs at least 3 distinct vertices, got {0}")]
    TooFewVertices(usize),
    #[error("polygon is not convex and counter-clockwise")]
    NotConvex,
    #[error("polyline needs at least 2 distinct points")]
    DegeneratePolyline,
    #[error("half-plane normal has zero length")]
    ZeroNormal,
}

/// The closed half-plane `{ v : normal · v >= offset }`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HalfPlane {
    normal: Vec2,
    offset: f64,
}

impl HalfPlane {
    /// Builds a half-plane, normalizing `normal` (and scaling `offset` to
    /// match).
    pub fn new(normal: Vec2, offset: f64) -> Result<Self, GeomError> {
        if !normal.is_finite() || !offset.is_finite() {
            return Err(GeomError::NonFinite);
        }
        let len = normal.norm();
        if len < 1e-12 {
            return Err(GeomError::ZeroNormal);
        }
        Ok(HalfPlane { normal: normal / len, offset: offset / len })
    }

    /// Half-plane whose boundary passes through `point`, feasible side along
    /// `normal`.
    pub fn through(point: Vec2, normal: Vec2) -> Result<Self, GeomError> {
        let n = normal.normalized().ok_or(GeomError::ZeroNormal)?;
        HalfPlane::new(n, n.dot(point))
    }

    #[inline]
    pub fn normal(&self) -> Vec2 {
        self.normal
    }

    #[inline]
    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// How far `v` is on the wrong side; negative when strictly inside.
    #[inline]
    pub fn violation(&self, v: Vec2) -> f64 {
        self.offset - self.normal.dot(v)
    }

    #[inline]
    pub fn contains(&self, v: Vec2, tol: f64) -> bool {
        self.violation(v) <= tol
    }

    /// Same plane with the boundary moved `by` against the normal.
    pub fn relaxed(&self, by: f64) -> HalfPlane {
        HalfPlane { normal: self.normal, offset: self.offset - by }
    }
}

/// Convex polygon with counter-clockwise vertices.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvexPolygon {
    vertices: Vec<Vec2>,
}

impl ConvexPolygon {
    /// Validates that `vertices` already form a strictly convex CCW polygon.
    pub fn new(vertices: Vec<Vec2>) -> Result<Self, GeomError> {
        if vertices.iter().any(|v| !v.is_finite()) {
            return Err(GeomError::NonFinite);
        }
        if vertices.len() < 3 {
            return Err(GeomError::TooFewVertices(vertices.len()));
        }
        let n = vertices.len();
        for i in 0..n {
            let a = vertices[i];
            let b = vertices[(i + 1) % n];
            let c = vertices[(i + 2) % n];
            if (b - a).cross(c - b) <= 0.0 {
                return Err(GeomError::NotConvex);
            }
        }
        let poly = ConvexPolygon { vertices };
        if poly.signed_area() <= 0.0 {
            return Err(GeomError::NotConvex);
        }
        Ok(poly)
    }

    /// Convex hull of an arbitrary point cloud (monotone chain). Collinear
    /// points are dropped.
    pub fn hull(points: &[Vec2]) -> Result<Self, GeomError> {
        if points.iter().any(|v| !v.is_finite()) {
            return Err(GeomError::NonFinite);
        }
        let mut pts: Vec<Vec2> = points.to_vec();
        pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
        pts.dedup_by(|a, b| (*a - *b).norm_sq() < 1e-24);
        if pts.len() < 3 {
            return Err(GeomError::TooFewVertices(pts.len()));
        }
        let mut hull: Vec<Vec2> = Vec::with_capacity(pts.len() * 2);
        for pass in 0..2 {
            let start = hull.len();
            let iter: &mut dyn Iterator<Item = &Vec2> = if pass == 0 { &mut pts.iter() } else { &mut pts.iter().rev() };
            for &p in iter {
                while hull.len() >= start + 2 {
                    let a = hull[hull.len() - 2];
                    let b = hull[hull.len() - 1];
                    if (b - a).cross(p - b) <= 1e-14 * (1.0 + (b - a).norm_sq()) {
                        hull.pop();
                    } else {
                        break;
                    }
                }
                hull.push(p);
            }
            hull.pop();
        }
        ConvexPolygon::new(hull)
    }

    /// Axis-aligned rectangle `[min.x, max.x] × [min.y, max.y]`.
    pub fn rect(min: Vec2, max: Vec2) -> Result<Self, GeomError> {
        ConvexPolygon::new(alloc::vec![min, Vec2::new(max.x, min.y), max, Vec2::new(min.x, max.y),])
    }

    /// Rectangle centered at `center`, rotated by `heading`.
    pub fn oriented_rect(center: Vec2, heading: f64, half_length: f64, half_width: f64) -> Result<Self, GeomError> {
        let f = Vec2::from_angle(heading);
        let l = f.perp();
        ConvexPolygon::new(alloc::vec![
            center - f * half_length - l * half_width,
            center + f * half_length - l * half_width,
            center + f * half_length + l * half_width,
            center - f * half_length + l * half_width,
        ])
    }

    /// Regular `n`-gon inscribed in the circle of radius `r` about `center`.
    pub fn regular(center: Vec2, r: f64, n: usize, phase: f64) -> Result<Self, GeomError> {
        let verts = (0..n)
            .map(|i| {
                let a = phase + crate::math::TAU * i as f64 / n as f64;
                center + Vec2::from_angle(a) * r
            })
            .collect();
        ConvexPolygon::new(verts)
    }

    pub fn vertices(&self) -> &[Vec2] {
        &self.vertices
    }

    pub fn signed_area(&self) -> f64 {
        let n = self.vertices.len();
        (0..n).map(|i| self.vertices[i].cross(self.vertices[(i + 1) % n])).sum::<f64>() * 0.5
    }

    pub fn centroid(&self) -> Vec2 {
        let n = self.vertices.len();
        let mut acc = Vec2::ZERO;
        let mut area2 = 0.0;
        for i in 0..n {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            let w = a.cross(b);
            acc += (a + b) * w;
            area2 += w;
        }
        acc / (3.0 * area2)
    }

    /// Inward-facing half-planes along each edge.
    pub fn edge_planes(&self) -> impl Iterator<Item = HalfPlane> + '_ {
        let n = self.vertices.len();
        (0..n).filter_map(move |i| {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            HalfPlane::through(a, (b - a).perp()).ok()
        })
    }

    pub fn contains(&self, p: Vec2, tol: f64) -> bool {
        self.edge_planes().all(|h| h.contains(p, tol))
    }

    pub fn bounding_box(&self) -> (Vec2, Vec2) {
        let mut lo = Vec2::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for v in &self.vertices {
            lo.x = lo.x.min(v.x);
            lo.y = lo.y.min(v.y);
            hi.x = hi.x.max(v.x);
            hi.y = hi.y.max(v.y);
        }
        (lo, hi)
    }

    pub fn diameter(&self) -> f64 {
        let mut best = 0.0f64;
        for (i, a) in self.vertices.iter().enumerate() {
            for b in &self.vertices[i + 1..] {
                best = best.max(a.distance(*b));
            }
        }
        best
    }

    /// Support function: largest `v · dir` over the vertices.
    pub fn support(&self, dir: Vec2) -> f64 {
        self.vertices.iter().map(|v| v.dot(dir)).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Separating-axis overlap test against another convex polygon. Touching
    /// boundaries do not count as overlap.
    pub fn overlaps(&self, other: &ConvexPolygon) -> bool {
        !has_separating_edge(self, other) && !has_separating_edge(other, self)
    }

    /// Overlap test against the disc `(center, radius)`.
    pub fn overlaps_disc(&self, center: Vec2, radius: f64) -> bool {
        if self.contains(center, 0.0) {
            return true;
        }
        let n = self.vertices.len();
        (0..n).any(|i| {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            segment_point_distance(a, b, center) < radius
        })
    }
}

fn has_separating_edge(a: &ConvexPolygon, b: &ConvexPolygon) -> bool {
    a.edge_planes().any(|h| {
        // b entirely on the outside of this edge
        b.vertices.iter().all(|&v| h.violation(v) >= 0.0)
    })
}

/// Distance from `p` to segment `ab`.
pub fn segment_point_distance(a: Vec2, b: Vec2, p: Vec2) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_sq();
    let t = if len2 > 0.0 { ((p - a).dot(ab) / len2).clamp(0.0, 1.0) } else { 0.0 };
    (a + ab * t).distance(p)
}
