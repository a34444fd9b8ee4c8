//! Reciprocal planes for footprints swept as capsules (a disc moved along a
//! segment). The relative obstacle of two capsules is a rounded
//! parallelogram, handled here as a convex polygon.

use alloc::vec::Vec;

use crate::agents::AgentProfile;
use crate::geom::{ConvexPolygon, HalfPlane, Vec2};
use crate::math;

/// Lateral inflation of a vehicle capsule over its half width.
const CAPSULE_INFLATION: f64 = 1.1;
/// Sides of the polygon that circumscribes the rounding disc.
const ROUND_SIDES: usize = 16;

/// Half segment length and radius of the capsule covering `profile`'s
/// footprint. Pedestrians are a plain disc.
pub fn capsule(profile: &AgentProfile) -> (f64, f64) {
    let (hl, hw) = (profile.half_length, profile.half_width);
    if !profile.class.is_vehicle() || hl <= hw {
        return (0.0, hl.max(hw));
    }
    let rho = CAPSULE_INFLATION * hw;
    // corners (±hl, ±hw) stay inside the end caps
    let cap = math::sqrt(rho * rho - hw * hw);
    ((hl - cap).max(0.0), rho)
}

/// Relative obstacle `B ⊖ A` (positions of B's points seen from A's), inflated
/// by `margin`.
pub fn relative_obstacle(
    pa: Vec2,
    heading_a: f64,
    prof_a: &AgentProfile,
    pb: Vec2,
    heading_b: f64,
    prof_b: &AgentProfile,
    margin: f64,
) -> ConvexPolygon {
    let (ha, ra) = capsule(prof_a);
    let (hb, rb) = capsule(prof_b);
    let fa = Vec2::from_angle(heading_a) * ha;
    let fb = Vec2::from_angle(heading_b) * hb;
    let core = segment_sum(pb - pa, fa, fb);
    let round = (ra + rb + margin) / math::cos(core::f64::consts::PI / ROUND_SIDES as f64);
    // rounding polygon, counter-clockwise from its lowest vertex
    let disc: Vec<Vec2> = (0..ROUND_SIDES)
        .map(|k| {
            let th =
                2.0 * core::f64::consts::PI * ((k + 3 * ROUND_SIDES / 4) % ROUND_SIDES) as f64 / ROUND_SIDES as f64;
            Vec2::from_angle(th) * round
        })
        .collect();
    let merged = minkowski(&core, &disc);
    ConvexPolygon::new(merged).unwrap_or_else(|_| {
        let pts: Vec<Vec2> = core.iter().flat_map(|c| disc.iter().map(move |d| *c + *d)).collect();
        ConvexPolygon::hull(&pts).expect("rounded obstacle has area")
    })
}

/// `c + [-1, 1]·fb − [-1, 1]·fa` as a counter-clockwise vertex list starting
/// at its lowest vertex: a parallelogram, a segment (two vertices) or a point.
fn segment_sum(c: Vec2, fa: Vec2, fb: Vec2) -> Vec<Vec2> {
    let tiny = 1e-9;
    let (la, lb) = (fa.norm(), fb.norm());
    let mut pts = if la < tiny && lb < tiny {
        alloc::vec![c]
    } else if la < tiny || lb < tiny || fa.cross(fb).abs() < tiny * la * lb {
        let d = if la >= lb { fa } else { fb };
        let dir = d.normalize_or_zero();
        let half = dir.dot(fa).abs() + dir.dot(fb).abs();
        alloc::vec![c - dir * half, c + dir * half]
    } else {
        let (e1, e2) = if fa.cross(fb) > 0.0 { (fa, fb) } else { (fb, fa) };
        let q0 = c - e1 - e2;
        alloc::vec![q0, q0 + e1 * 2.0, q0 + (e1 + e2) * 2.0, q0 + e2 * 2.0]
    };
    let low =
        (0..pts.len()).min_by(|&i, &j| pts[i].y.total_cmp(&pts[j].y).then(pts[i].x.total_cmp(&pts[j].x))).unwrap_or(0);
    pts.rotate_left(low);
    pts
}

/// Minkowski sum of two convex CCW vertex lists that both start at their
/// lowest vertex, by merging edges in angular order.
fn minkowski(p: &[Vec2], r: &[Vec2]) -> Vec<Vec2> {
    let (n, m) = (p.len(), r.len());
    let mut out: Vec<Vec2> = Vec::with_capacity(n + m);
    let (mut i, mut j) = (0, 0);
    while i < n || j < m {
        out.push(p[i % n] + r[j % m]);
        let ep = p[(i + 1) % n] - p[i % n];
        let er = r[(j + 1) % m] - r[j % m];
        let c = if i >= n {
            -1.0
        } else if j >= m {
            1.0
        } else {
            ep.cross(er)
        };
        let scale = 1e-12 * (1.0 + ep.norm_sq() + er.norm_sq());
        if c >= -scale && i < n {
            i += 1;
        }
        if c <= scale && j < m {
            j += 1;
        }
    }
    // drop vertices that do not turn left (rounding on nearly parallel edges)
    let mut k = 0;
    while out.len() >= 3 && k < out.len() {
        let len = out.len();
        let (a, b, c) = (out[(k + len - 1) % len], out[k], out[(k + 1) % len]);
        if (b - a).cross(c - b) <= 1e-12 * (1.0 + (b - a).norm_sq() + (c - b).norm_sq()) {
            out.remove(k);
            k = k.saturating_sub(1);
        } else {
            k += 1;
        }
    }
    out
}

fn closest_on_segment(a: Vec2, b: Vec2, p: Vec2) -> Vec2 {
    let d = b - a;
    let len_sq = d.norm_sq();
    if len_sq < 1e-24 {
        return a;
    }
    a + d * ((p - a).dot(d) / len_sq).clamp(0.0, 1.0)
}

/// Does the segment from the origin to `w` meet `q`?
fn segment_hits(q: &ConvexPolygon, w: Vec2) -> bool {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let v = q.vertices();
    for i in 0..v.len() {
        let e = v[(i + 1) % v.len()] - v[i];
        let n = Vec2::new(e.y, -e.x);
        // inside when n·(λw − v_i) ≤ 0
        let a = n.dot(w);
        let b = n.dot(v[i]);
        if a.abs() < 1e-15 {
            if b < 0.0 {
                return false;
            }
        } else if a > 0.0 {
            hi = hi.min(b / a);
        } else {
            lo = lo.max(b / a);
        }
        if lo > hi {
            return false;
        }
    }
    true
}

/// Reciprocal half-plane against the convex relative obstacle `q` for
/// relative velocity `v = v_A − v_B`. Velocities whose rays enter `q` within
/// `tau` are excluded; an obstacle that already contains the origin must be
/// left within `dt`.
pub fn polygon_halfplane(q: &ConvexPolygon, v: Vec2, tau: f64, dt: f64, v_a: Vec2, share: f64) -> HalfPlane {
    let verts = q.vertices();
    let n = verts.len();
    let outward = |i: usize| {
        let e = verts[(i + 1) % n] - verts[i];
        Vec2::new(e.y, -e.x).normalize_or_zero()
    };
    let mut best: Option<(f64, Vec2, Vec2)> = None;
    let mut consider = |c: Vec2, normal: Vec2| {
        let d = (v - c).norm_sq();
        if best.is_none_or(|(bd, _, _)| d < bd) {
            best = Some((d, c, normal));
        }
    };
    let inside;
    if q.contains(Vec2::ZERO, 0.0) {
        let s = 1.0 / dt;
        for i in 0..n {
            consider(closest_on_segment(verts[i] * s, verts[(i + 1) % n] * s, v), outward(i));
        }
        inside = q.contains(v * dt, 0.0);
    } else {
        let s = 1.0 / tau;
        let centroid = q.centroid();
        let front: Vec<bool> = (0..n).map(|i| outward(i).dot(verts[i]) < 0.0).collect();
        for i in 0..n {
            if front[i] {
                consider(closest_on_segment(verts[i] * s, verts[(i + 1) % n] * s, v), outward(i));
            }
            if front[i] != front[(i + n - 1) % n] {
                // tangent vertex: the leg runs from it away from the origin
                let t = verts[i];
                let dir = t.normalize_or_zero();
                let start = t * s;
                let c = start + dir * (v - start).dot(dir).max(0.0);
                let mut normal = dir.perp();
                if normal.dot(centroid - t) > 0.0 {
                    normal = -normal;
                }
                consider(c, normal);
            }
        }
        inside = segment_hits(q, v * tau);
    }
    let (_, c, piece_normal) = best.expect("polygon has edges");
    let d = v - c;
    let len = d.norm();
    let normal = if len > 1e-9 {
        if inside {
            -d / len
        } else {
            d / len
        }
    } else {
        piece_normal
    };
    let u = c - v;
    HalfPlane::new(normal, normal.dot(v_a + u * share)).expect("unit normal")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::AgentClass;
    use crate::gamma::orca_halfplane;

    fn disc_obstacle(center: Vec2, r: f64) -> ConvexPolygon {
        let ped = AgentProfile {
            half_length: r / 2.0,
            half_width: r / 2.0,
            ..AgentProfile::default_for(AgentClass::Pedestrian)
        };
        relative_obstacle(Vec2::ZERO, 0.0, &ped, center, 0.0, &ped, 0.0)
    }

    #[test]
    fn disc_case_matches_circular_orca() {
        let round = 1.0 / math::cos(core::f64::consts::PI / ROUND_SIDES as f64);
        let cases = [
            (Vec2::new(10.0, 0.0), Vec2::new(3.0, 0.0)),
            (Vec2::new(10.0, 1.0), Vec2::new(3.0, 0.5)),
            (Vec2::new(6.0, -3.0), Vec2::new(1.0, -1.5)),
            (Vec2::new(8.0, 0.0), Vec2::new(-1.0, 0.0)),
        ];
        for (p, v) in cases {
            let q = disc_obstacle(p, 2.0);
            let got = polygon_halfplane(&q, v, 4.0, 0.05, v, 0.5);
            let want = orca_halfplane(p, v, 2.0 * round, 4.0, 0.05, v, 0.5);
            // the 16-gon boundary differs from the circle by < 2 %
            assert!((got.normal() - want.normal()).norm() < 0.2, "{p:?} {v:?}: {got:?} vs {want:?}");
            assert!((got.offset() - want.offset()).abs() < 0.2, "{p:?} {v:?}: {got:?} vs {want:?}");
        }
    }

    #[test]
    fn overlap_case_pushes_apart_like_circular_orca() {
        let round = 1.0 / math::cos(core::f64::consts::PI / ROUND_SIDES as f64);
        let (p, v) = (Vec2::new(0.5, 0.2), Vec2::new(0.3, 0.0));
        let got = polygon_halfplane(&disc_obstacle(p, 2.0), v, 4.0, 0.05, v, 0.5);
        let want = orca_halfplane(p, v, 2.0 * round, 4.0, 0.05, v, 0.5);
        // facets are scaled by 1/dt here, so only agreement in direction and
        // relative size is expected
        assert!(got.normal().dot(want.normal()) > 0.95, "{got:?} vs {want:?}");
        assert!((got.offset() / want.offset() - 1.0).abs() < 0.05, "{got:?} vs {want:?}");
    }

    #[test]
    fn capsules_cover_the_footprint() {
        for class in AgentClass::ALL {
            let p = AgentProfile::default_for(class);
            let (h, r) = capsule(&p);
            // farthest footprint corner from the segment
            let dx = (p.half_length - h).max(0.0);
            let corner =
                if class.is_vehicle() { math::sqrt(dx * dx + p.half_width * p.half_width) } else { p.half_width };
            assert!(corner <= r + 1e-12, "{class:?}");
        }
    }

    #[test]
    fn merged_obstacle_equals_point_hull() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..300 {
            let ca = AgentClass::ALL[rng.random_range(0..5)];
            let cb = AgentClass::ALL[rng.random_range(0..5)];
            let (pa, pb) = (AgentProfile::default_for(ca), AgentProfile::default_for(cb));
            let rel = Vec2::new(rng.random_range(-20.0..20.0), rng.random_range(-20.0..20.0));
            // include exactly parallel and opposite headings
            let ha = [0.0, core::f64::consts::FRAC_PI_2, rng.random_range(-4.0..4.0)][rng.random_range(0..3)];
            let hb = [ha, ha + core::f64::consts::PI, rng.random_range(-4.0..4.0)][rng.random_range(0..3)];
            let q = relative_obstacle(Vec2::ZERO, ha, &pa, rel, hb, &pb, 0.3);
            let (sa, r1) = capsule(&pa);
            let (sb, r2) = capsule(&pb);
            let round = (r1 + r2 + 0.3) / math::cos(core::f64::consts::PI / ROUND_SIDES as f64);
            let mut pts = Vec::new();
            for s1 in [-1.0, 1.0] {
                for s2 in [-1.0, 1.0] {
                    let c = rel + Vec2::from_angle(hb) * (sb * s1) - Vec2::from_angle(ha) * (sa * s2);
                    for k in 0..ROUND_SIDES {
                        let th = 2.0 * core::f64::consts::PI * k as f64 / ROUND_SIDES as f64;
                        pts.push(c + Vec2::from_angle(th) * round);
                    }
                }
            }
            let want = ConvexPolygon::hull(&pts).unwrap();
            for k in 0..32 {
                let d = Vec2::from_angle(k as f64 * 0.2 + 0.05);
                assert!((q.support(d) - want.support(d)).abs() < 1e-9, "{ca:?} {cb:?} {ha} {hb}");
            }
        }
    }

    #[test]
    fn receding_obstacle_plane_holds_at_current_velocity() {
        let q = disc_obstacle(Vec2::new(5.0, 0.0), 2.0);
        let v = Vec2::new(-2.0, 0.0);
        let pl = polygon_halfplane(&q, v, 4.0, 0.05, v, 0.5);
        assert!(pl.contains(v, 1e-9));
    }
}
