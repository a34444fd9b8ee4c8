use alloc::vec::Vec;

use super::{GeomError, Vec2};

/// Open polyline with cached cumulative arc-lengths.
#[derive(Clone, Debug, PartialEq)]
pub struct Polyline {
    points: Vec<Vec2>,
    arcs: Vec<f64>,
}

/// Closest point on a polyline.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Projection {
    pub arc: f64,
    pub point: Vec2,
    pub distance: f64,
    /// Index of the piece `points[piece]..points[piece + 1]` holding `point`.
    pub piece: usize,
}

const MIN_PIECE: f64 = 1e-9;

impl Polyline {
    /// Strict constructor: consecutive points must be distinct.
    pub fn new(points: Vec<Vec2>) -> Result<Self, GeomError> {
        if points.iter().any(|p| !p.is_finite()) {
            return Err(GeomError::NonFinite);
        }
        if points.len() < 2 {
            return Err(GeomError::DegeneratePolyline);
        }
        let mut arcs = Vec::with_capacity(points.len());
        arcs.push(0.0);
        for w in points.windows(2) {
            let d = w[0].distance(w[1]);
            if d <= MIN_PIECE {
                return Err(GeomError::DegeneratePolyline);
            }
            let last = *arcs.last().unwrap();
            arcs.push(last + d);
        }
        Ok(Polyline { points, arcs })
    }

    /// Like [`Polyline::new`] but silently drops repeated points.
    pub fn from_points(points: impl IntoIterator<Item = Vec2>) -> Result<Self, GeomError> {
        let mut pts: Vec<Vec2> = Vec::new();
        for p in points {
            if pts.last().is_none_or(|q| q.distance(p) > MIN_PIECE) {
                pts.push(p);
            }
        }
        Polyline::new(pts)
    }

    pub fn points(&self) -> &[Vec2] {
        &self.points
    }

    /// Cumulative arc-length at each point.
    pub fn arcs(&self) -> &[f64] {
        &self.arcs
    }

    pub fn length(&self) -> f64 {
        *self.arcs.last().unwrap()
    }

    pub fn start(&self) -> Vec2 {
        self.points[0]
    }

    pub fn end(&self) -> Vec2 {
        *self.points.last().unwrap()
    }

    fn piece_at(&self, arc: f64) -> usize {
        // last i with arcs[i] <= arc, capped so that i + 1 is valid
        let idx = self.arcs.partition_point(|&a| a <= arc);
        idx.saturating_sub(1).min(self.points.len() - 2)
    }

    /// Point at `arc`, clamped to `[0, length]`.
    pub fn point_at(&self, arc: f64) -> Vec2 {
        let arc = arc.clamp(0.0, self.length());
        let i = self.piece_at(arc);
        let seg = self.arcs[i + 1] - self.arcs[i];
        let t = ((arc - self.arcs[i]) / seg).clamp(0.0, 1.0);
        self.points[i].lerp(self.points[i + 1], t)
    }

    /// Unit tangent at `arc` (clamped).
    pub fn tangent_at(&self, arc: f64) -> Vec2 {
        let i = self.piece_at(arc.clamp(0.0, self.length()));
        (self.points[i + 1] - self.points[i]).normalize_or_zero()
    }

    /// Closest point to `q`; ties go to the smaller arc-length.
    pub fn project(&self, q: Vec2) -> Projection {
        let mut best = Projection { arc: 0.0, point: self.points[0], distance: f64::INFINITY, piece: 0 };
        for i in 0..self.points.len() - 1 {
            let a = self.points[i];
            let ab = self.points[i + 1] - a;
            let len = self.arcs[i + 1] - self.arcs[i];
            let t = ((q - a).dot(ab) / (len * len)).clamp(0.0, 1.0);
            let p = a + ab * t;
            let d = p.distance(q);
            if d < best.distance - 1e-12 {
                best = Projection { arc: self.arcs[i] + t * len, point: p, distance: d, piece: i };
            }
        }
        best
    }

    /// Closest point searching only pieces overlapping `[lo, hi]` in arc.
    pub fn project_window(&self, q: Vec2, lo: f64, hi: f64) -> Projection {
        let first = self.piece_at(lo.max(0.0));
        let last = self.piece_at(hi.min(self.length()));
        let mut best =
            Projection { arc: self.arcs[first], point: self.points[first], distance: f64::INFINITY, piece: first };
        for i in first..=last {
            let a = self.points[i];
            let ab = self.points[i + 1] - a;
            let len = self.arcs[i + 1] - self.arcs[i];
            let t = ((q - a).dot(ab) / (len * len)).clamp(0.0, 1.0);
            let p = a + ab * t;
            let d = p.distance(q);
            if d < best.distance - 1e-12 {
                best = Projection { arc: self.arcs[i] + t * len, point: p, distance: d, piece: i };
            }
        }
        best
    }

    /// Sub-polyline between two arc-lengths (clamped). Returns `None` when
    /// the slice is shorter than the minimum piece length.
    pub fn slice(&self, from: f64, to: f64) -> Option<Polyline> {
        let from = from.clamp(0.0, self.length());
        let to = to.clamp(0.0, self.length());
        if to - from <= MIN_PIECE {
            return None;
        }
        let mut pts = Vec::new();
        pts.push(self.point_at(from));
        for (p, &a) in self.points.iter().zip(&self.arcs) {
            if a > from && a < to {
                pts.push(*p);
            }
        }
        pts.push(self.point_at(to));
        Polyline::from_points(pts).ok()
    }

    /// Appends `other`, dropping its first point when it coincides with this
    /// polyline's end.
    pub fn concat(&self, other: &Polyline) -> Polyline {
        let mut pts = self.points.clone();
        pts.extend_from_slice(&other.points);
        Polyline::from_points(pts).expect("concatenation of valid polylines")
    }

    /// Lateral offset; positive `d` shifts to the left of the travel
    /// direction. Interior vertices use the averaged piece normal.
    pub fn offset(&self, d: f64) -> Polyline {
        let n = self.points.len();
        let normals: Vec<Vec2> = self.points.windows(2).map(|w| (w[1] - w[0]).normalize_or_zero().perp()).collect();
        let pts = (0..n).map(|i| {
            let nrm = if i == 0 {
                normals[0]
            } else if i == n - 1 {
                normals[n - 2]
            } else {
                let avg = normals[i - 1] + normals[i];
                let avg = avg.normalize_or_zero();
                // miter length so the offset lines stay parallel
                let c = avg.dot(normals[i]).max(0.3);
                avg / c
            };
            self.points[i] + nrm * d
        });
        Polyline::from_points(pts).expect("offset of a valid polyline")
    }

    pub fn reversed(&self) -> Polyline {
        let mut pts = self.points.clone();
        pts.reverse();
        Polyline::new(pts).expect("reverse of a valid polyline")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn pl(pts: &[(f64, f64)]) -> Polyline {
        Polyline::new(pts.iter().map(|&p| p.into()).collect()).unwrap()
    }

    #[test]
    fn projects_perpendicular_foot() {
        let p = pl(&[(0.0, 0.0), (10.0, 0.0)]);
        let pr = p.project(Vec2::new(5.0, 3.0));
        assert_eq!(pr.arc, 5.0);
        assert_eq!(pr.point, Vec2::new(5.0, 0.0));
    }

    #[test]
    fn projection_clamps_to_start() {
        let p = pl(&[(0.0, 0.0), (10.0, 0.0)]);
        let pr = p.project(Vec2::new(-2.0, 1.0));
        assert_eq!(pr.arc, 0.0);
        assert_eq!(pr.point, Vec2::ZERO);
    }

    #[test]
    fn projection_picks_nearer_piece() {
        // distance to first piece is sqrt(2) at (10,0); to the second it is 1
        let p = pl(&[(0.0, 0.0), (10.0, 0.0), (10.0, 10.0)]);
        let pr = p.project(Vec2::new(11.0, 1.0));
        assert!((pr.arc - 11.0).abs() < 1e-12);
        assert!((pr.point - Vec2::new(10.0, 1.0)).norm() < 1e-12);
    }

    #[test]
    fn projection_tie_prefers_smaller_arc() {
        // (5, 5) is equidistant from (0,5)-(10,5)... use a U shape
        let p = pl(&[(0.0, 0.0), (10.0, 0.0), (10.0, 2.0), (0.0, 2.0)]);
        let pr = p.project(Vec2::new(5.0, 1.0));
        assert!((pr.arc - 5.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_repeated_points() {
        assert_eq!(
            Polyline::new(vec![Vec2::ZERO, Vec2::ZERO, Vec2::new(1.0, 0.0)]),
            Err(GeomError::DegeneratePolyline)
        );
        let p = Polyline::from_points(vec![Vec2::ZERO, Vec2::ZERO, Vec2::new(1.0, 0.0)]).unwrap();
        assert_eq!(p.points().len(), 2);
    }

    #[test]
    fn slice_and_point_at() {
        let p = pl(&[(0.0, 0.0), (10.0, 0.0), (10.0, 10.0)]);
        assert_eq!(p.point_at(15.0), Vec2::new(10.0, 5.0));
        assert_eq!(p.point_at(-1.0), Vec2::ZERO);
        assert_eq!(p.point_at(50.0), Vec2::new(10.0, 10.0));
        let s = p.slice(5.0, 15.0).unwrap();
        assert_eq!(s.points(), &[Vec2::new(5.0, 0.0), Vec2::new(10.0, 0.0), Vec2::new(10.0, 5.0)]);
        assert!((s.length() - 10.0).abs() < 1e-12);
    }

    #[test]
    fn offset_left_is_positive() {
        let p = pl(&[(0.0, 0.0), (10.0, 0.0)]);
        let o = p.offset(2.0);
        assert_eq!(o.points(), &[Vec2::new(0.0, 2.0), Vec2::new(10.0, 2.0)]);
    }
}
