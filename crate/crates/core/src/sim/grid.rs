use alloc::vec::Vec;

use crate::geom::Vec2;
use crate::math;

/// Uniform-cell bucket index over a fixed set of points.
#[derive(Clone, Debug)]
pub struct SpatialGrid {
    cell: f64,
    /// (cell key, point index), sorted by key.
    entries: Vec<((i64, i64), usize)>,
}

impl SpatialGrid {
    pub fn new(points: impl IntoIterator<Item = Vec2>, cell: f64) -> Self {
        let mut entries: Vec<((i64, i64), usize)> =
            points.into_iter().enumerate().map(|(i, p)| (key(p, cell), i)).collect();
        entries.sort_unstable();
        SpatialGrid { cell, entries }
    }

    /// Indices of points in cells overlapping the square of half-size
    /// `radius` around `p` (a superset of the points within `radius`).
    pub fn candidates(&self, p: Vec2, radius: f64) -> impl Iterator<Item = usize> + '_ {
        let (x0, y0) = key(p - Vec2::new(radius, radius), self.cell);
        let (x1, y1) = key(p + Vec2::new(radius, radius), self.cell);
        (x0..=x1).flat_map(move |cx| {
            let lo = self.entries.partition_point(|e| e.0 < (cx, y0));
            let hi = self.entries.partition_point(|e| e.0 <= (cx, y1));
            self.entries[lo..hi].iter().map(|e| e.1)
        })
    }
}

fn key(p: Vec2, cell: f64) -> (i64, i64) {
    (math::floor(p.x / cell) as i64, math::floor(p.y / cell) as i64)
}
