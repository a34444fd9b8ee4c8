//! Brute-force grid oracle for the closest-point velocity program.
//!
//! A row-by-row scan: on each grid row the feasible set is an interval in x,
//! so the best grid column on that row is the one nearest to the target
//! inside the interval. This visits exactly the same grid points as a full
//! 2D scan, in O(rows × constraints).

#![allow(dead_code)]

use crowdsim_core::geom::{ConvexPolygon, HalfPlane, Vec2};

pub struct GridResult {
    pub best: Option<Vec2>,
    pub feasible_points: u64,
}

fn constraints(kin: &ConvexPolygon, planes: &[HalfPlane]) -> Vec<(f64, f64, f64)> {
    kin.edge_planes().chain(planes.iter().copied()).map(|h| (h.normal().x, h.normal().y, h.offset())).collect()
}

/// Scans the grid `origin + (i h, j h)` covering `[lo, hi]`.
pub fn grid_argmin(kin: &ConvexPolygon, planes: &[HalfPlane], target: Vec2, lo: Vec2, hi: Vec2, h: f64) -> GridResult {
    let cons = constraints(kin, planes);
    let rows = ((hi.y - lo.y) / h).floor() as i64;
    let cols = ((hi.x - lo.x) / h).floor() as i64;
    let mut best: Option<(f64, Vec2)> = None;
    let mut count = 0u64;
    for r in 0..=rows {
        let y = lo.y + r as f64 * h;
        let mut xl = f64::NEG_INFINITY;
        let mut xh = f64::INFINITY;
        let mut empty = false;
        for &(nx, ny, off) in &cons {
            let rhs = off - ny * y;
            if nx.abs() < 1e-14 {
                if rhs > 1e-12 {
                    empty = true;
                    break;
                }
            } else if nx > 0.0 {
                xl = xl.max(rhs / nx);
            } else {
                xh = xh.min(rhs / nx);
            }
        }
        if empty {
            continue;
        }
        let jl = (((xl - lo.x) / h) - 1e-9).ceil().max(0.0) as i64;
        let jh = (((xh - lo.x) / h) + 1e-9).floor().min(cols as f64) as i64;
        if jl > jh {
            continue;
        }
        count += (jh - jl + 1) as u64;
        let jt = ((target.x - lo.x) / h).round() as i64;
        let mut cand = |j: i64| {
            let p = Vec2::new(lo.x + j as f64 * h, y);
            let d = p.distance(target);
            if best.map_or(true, |(bd, _)| d < bd) {
                best = Some((d, p));
            }
        };
        let j = jt.clamp(jl, jh);
        cand(j);
        if j > jl {
            cand(j - 1);
        }
        if j < jh {
            cand(j + 1);
        }
    }
    GridResult { best: best.map(|(_, p)| p), feasible_points: count }
}

/// The plain scan at spacing `h` over kin's bounding box.
pub fn coarse_argmin(kin: &ConvexPolygon, planes: &[HalfPlane], target: Vec2, h: f64) -> GridResult {
    let (lo, hi) = kin.bounding_box();
    grid_argmin(kin, planes, target, lo, hi, h)
}

/// Coarse scan followed by successively finer scans in a window around the
/// running best. The window radius bounds the distance between a grid
/// argmin and the true argmin for a convex set:
/// `‖g − v*‖² ≤ 2 D δ + δ²`, with `D` the objective value and `δ` a few grid
/// spacings.
pub fn refined_argmin(kin: &ConvexPolygon, planes: &[HalfPlane], target: Vec2, h0: f64, h_final: f64) -> Option<Vec2> {
    let (blo, bhi) = kin.bounding_box();
    let mut g = coarse_argmin(kin, planes, target, h0).best?;
    let mut h = h0;
    while h > h_final * 1.000001 {
        let d = g.distance(target);
        let delta = 3.0 * h;
        let w = (2.0 * d * delta + delta * delta).sqrt() + 2.0 * h;
        h /= 10.0;
        let lo = Vec2::new((g.x - w).max(blo.x), (g.y - w).max(blo.y));
        let hi = Vec2::new((g.x + w).min(bhi.x), (g.y + w).min(bhi.y));
        match grid_argmin(kin, planes, target, lo, hi, h).best {
            Some(p) if p.distance(target) <= g.distance(target) => g = p,
            _ => {}
        }
    }
    Some(g)
}

pub mod instances {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub struct Instance {
        pub kin: ConvexPolygon,
        pub planes: Vec<HalfPlane>,
        pub target: Vec2,
        /// Constructed so that a ball around an interior point is feasible.
        pub feasible_by_construction: bool,
    }

    /// Random convex polygon with circumradius ≤ 10, up to 20 planes.
    pub fn random_instance(seed: u64) -> Instance {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let radius = rng.random_range(1.0..10.0);
        let kin = loop {
            let n = rng.random_range(3..12);
            let pts: Vec<Vec2> = (0..n)
                .map(|_| {
                    let a = rng.random_range(0.0..std::f64::consts::TAU);
                    Vec2::from_angle(a) * radius
                })
                .collect();
            if let Ok(p) = ConvexPolygon::hull(&pts) {
                if p.signed_area() > 0.5 {
                    break p;
                }
            }
        };
        let verts = kin.vertices();
        let mut weights: Vec<f64> = verts.iter().map(|_| rng.random_range(0.05..1.0)).collect();
        let wsum: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= wsum);
        let interior = verts.iter().zip(&weights).fold(Vec2::ZERO, |acc, (v, w)| acc + *v * *w);
        let feasible_by_construction = rng.random_bool(0.8);
        let count = rng.random_range(0..=20);
        let planes = (0..count)
            .map(|_| {
                let n = Vec2::from_angle(rng.random_range(0.0..std::f64::consts::TAU));
                let offset = if feasible_by_construction {
                    n.dot(interior) - rng.random_range(0.05..3.0)
                } else {
                    rng.random_range(-radius..radius * 0.5)
                };
                HalfPlane::new(n, offset).unwrap()
            })
            .collect();
        let (lo, hi) = kin.bounding_box();
        let c = (lo + hi) * 0.5;
        let e = (hi - lo) * 0.75;
        let target = Vec2::new(rng.random_range(c.x - e.x..c.x + e.x), rng.random_range(c.y - e.y..c.y + e.y));
        Instance { kin, planes, target, feasible_by_construction }
    }
}
