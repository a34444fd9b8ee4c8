//! Procedural approximations of the three benchmark scene topologies: a
//! multi-lane highway, a single-lane roundabout with radial arms, and an
//! unsignalised multi-arm intersection.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Crossing, LaneSegment, Polygon, RoadError, RoadMap, SegmentId, SidewalkNetwork};
use crate::geom::{Polyline, Vec2};
use crate::math;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScenarioKind {
    Highway,
    Roundabout,
    Intersection,
}

impl ScenarioKind {
    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::Highway => "highway",
            ScenarioKind::Roundabout => "roundabout",
            ScenarioKind::Intersection => "intersection",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "highway" => Some(ScenarioKind::Highway),
            "roundabout" => Some(ScenarioKind::Roundabout),
            "intersection" => Some(ScenarioKind::Intersection),
            _ => None,
        }
    }
}

/// Generator parameters. `lanes` is per travel direction for intersections
/// and total for the (one-way) highway; roundabouts always use one lane per
/// direction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScenarioParams {
    pub lanes: usize,
    /// Highway length, or arm length for roundabout/intersection (m).
    pub length: f64,
    /// Roundabout ring radius (m).
    pub radius: f64,
    pub arms: usize,
    pub lane_width: f64,
}

impl Default for ScenarioParams {
    fn default() -> Self {
        ScenarioParams { lanes: 2, length: 120.0, radius: 30.0, arms: 4, lane_width: 3.5 }
    }
}

const SIDEWALK_GAP: f64 = 2.0;
const ROI_MARGIN: f64 = 15.0;

fn check(cond: bool, what: &str) -> Result<(), RoadError> {
    if cond {
        Ok(())
    } else {
        Err(RoadError::Param(what.into()))
    }
}

pub fn generate_scenario(kind: ScenarioKind, params: &ScenarioParams, seed: u64) -> Result<RoadMap, RoadError> {
    check(params.length >= 50.0 && params.length <= 5000.0, "length must be in [50, 5000] m")?;
    check(params.lane_width >= 2.5 && params.lane_width <= 5.0, "lane_width must be in [2.5, 5] m")?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5ce0_a210);
    match kind {
        ScenarioKind::Highway => {
            check((2..=5).contains(&params.lanes), "lanes must be in 2..=5")?;
            highway(params, &mut rng)
        }
        ScenarioKind::Intersection => {
            check((2..=5).contains(&params.lanes), "lanes must be in 2..=5")?;
            check((3..=5).contains(&params.arms), "arms must be in 3..=5")?;
            intersection(params, &mut rng)
        }
        ScenarioKind::Roundabout => {
            check(params.radius >= 20.0 && params.radius <= 60.0, "radius must be in [20, 60] m")?;
            check((3..=5).contains(&params.arms), "arms must be in 3..=5")?;
            roundabout(params, &mut rng)
        }
    }
}

fn line(a: Vec2, b: Vec2) -> Polyline {
    Polyline::new(vec![a, b]).expect("distinct endpoints")
}

fn arc(center: Vec2, r: f64, from: f64, to: f64, step: f64) -> Polyline {
    let n = (math::ceil(math::abs(to - from) * r / step) as usize).max(2);
    Polyline::from_points((0..=n).map(|i| center + Vec2::from_angle(from + (to - from) * i as f64 / n as f64) * r))
        .expect("arc with positive radius")
}

fn bezier(p0: Vec2, p1: Vec2, p2: Vec2, p3: Vec2, n: usize) -> Polyline {
    Polyline::from_points((0..=n).map(|i| {
        let t = i as f64 / n as f64;
        let s = 1.0 - t;
        p0 * (s * s * s) + p1 * (3.0 * s * s * t) + p2 * (3.0 * s * t * t) + p3 * (t * t * t)
    }))
    .expect("bezier with distinct endpoints")
}

fn regular_roi(r: f64) -> Polygon {
    Polygon::new((0..48).map(|i| Vec2::from_angle(math::TAU * i as f64 / 48.0) * r).collect()).unwrap()
}

fn highway(p: &ScenarioParams, rng: &mut ChaCha8Rng) -> Result<RoadMap, RoadError> {
    let w = p.lane_width * rng.random_range(0.95..1.05);
    let len = p.length;
    let n = p.lanes as f64;
    let median = line(Vec2::new(0.0, 0.0), Vec2::new(len, 0.0));
    let edge = line(Vec2::new(0.0, -n * w), Vec2::new(len, -n * w));
    let segments: Vec<LaneSegment> = (0..p.lanes)
        .map(|j| {
            let y = -(j as f64 + 0.5) * w;
            LaneSegment {
                id: j as SegmentId + 1,
                centerline: line(Vec2::new(0.0, y), Vec2::new(len, y)),
                width: w,
                successors: vec![],
                left_opposite_boundary: Some(median.clone()),
                right_road_edge: Some(edge.clone()),
            }
        })
        .collect();
    let sy = -n * w - SIDEWALK_GAP;
    let sidewalks = SidewalkNetwork::new(vec![line(Vec2::new(-10.0, sy), Vec2::new(len + 10.0, sy))], vec![])?;
    let roi = Polygon::new(vec![
        Vec2::new(0.0, sy - 3.0),
        Vec2::new(len - ROI_MARGIN, sy - 3.0),
        Vec2::new(len - ROI_MARGIN, 2.0),
        Vec2::new(0.0, 2.0),
    ])?;
    let spawn = segments.iter().map(|s| s.id).collect();
    RoadMap::new(segments, sidewalks, roi, spawn)
}

/// Straight two-way road along +x: lane 1 eastbound below the median at
/// y = 0, lane 2 westbound above it, with road edges and sidewalks on both
/// sides.
pub fn two_way_road(length: f64, lane_width: f64) -> Result<RoadMap, RoadError> {
    check(length > 0.0 && lane_width > 0.0, "length and lane_width must be positive")?;
    let w = lane_width;
    let east = |y: f64| line(Vec2::new(0.0, y), Vec2::new(length, y));
    let west = |y: f64| line(Vec2::new(length, y), Vec2::new(0.0, y));
    let segments = vec![
        LaneSegment {
            id: 1,
            centerline: east(-w / 2.0),
            width: w,
            successors: vec![],
            left_opposite_boundary: Some(east(0.0)),
            right_road_edge: Some(east(-w)),
        },
        LaneSegment {
            id: 2,
            centerline: west(w / 2.0),
            width: w,
            successors: vec![],
            left_opposite_boundary: Some(west(0.0)),
            right_road_edge: Some(west(w)),
        },
    ];
    let sy = w + SIDEWALK_GAP;
    let sidewalks = SidewalkNetwork::new(vec![east(-sy), west(sy)], vec![])?;
    let roi = Polygon::new(vec![
        Vec2::new(0.0, -sy - 3.0),
        Vec2::new(length, -sy - 3.0),
        Vec2::new(length, sy + 3.0),
        Vec2::new(0.0, sy + 3.0),
    ])?;
    RoadMap::new(segments, sidewalks, roi, vec![1, 2])
}

struct Arm {
    u: Vec2,
    /// CCW normal of `u`.
    n: Vec2,
}

fn arm_angles(arms: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..arms)
        .map(|k| {
            let jitter = if k == 0 { 0.0 } else { rng.random_range(-0.12..0.12) };
            math::TAU * k as f64 / arms as f64 + jitter
        })
        .collect()
}

/// Corner sidewalks between consecutive arms plus one crossing per arm.
/// Sidewalk `i` runs out along the left of arm `i`, through `corner(i)` and
/// back out along the right of arm `i + 1`. Arm `k` is crossed at distance
/// `crossing_at[k]` from the centre.
fn corner_sidewalks(
    arms: &[Arm],
    lateral: f64,
    far: f64,
    crossing_at: &[f64],
    corner: impl Fn(usize) -> Vec<Vec2>,
) -> Result<SidewalkNetwork, RoadError> {
    let k = arms.len();
    let mut sidewalks = Vec::with_capacity(k);
    for i in 0..k {
        let (a, b) = (&arms[i], &arms[(i + 1) % k]);
        let mut pts = vec![a.u * far + a.n * lateral];
        pts.extend(corner(i));
        pts.push(b.u * far - b.n * lateral);
        sidewalks.push(Polyline::from_points(pts)?);
    }
    let mut crossings = Vec::with_capacity(k);
    for (i, arm) in arms.iter().enumerate() {
        let left = i;
        let right = (i + k - 1) % k;
        let pl = arm.u * crossing_at[i] + arm.n * lateral;
        let pr = arm.u * crossing_at[i] - arm.n * lateral;
        crossings.push(Crossing {
            sidewalk_a: right,
            arc_a: sidewalks[right].project(pr).arc,
            sidewalk_b: left,
            arc_b: sidewalks[left].project(pl).arc,
        });
    }
    SidewalkNetwork::new(sidewalks, crossings)
}

/// Meeting point of the line `a.n·lat + a.u·t` with `−b.n·lat + b.u·s`, as
/// the arm distances `(t, s)`.
fn offset_corner(a: &Arm, b: &Arm, lat: f64) -> (f64, f64) {
    // a.u·t − b.u·s = −(a.n + b.n)·lat
    let rhs = -(a.n + b.n) * lat;
    let det = a.u.cross(-b.u);
    let t = rhs.cross(-b.u) / det;
    let s = a.u.cross(rhs) / det;
    (t, s)
}

fn intersection(p: &ScenarioParams, rng: &mut ChaCha8Rng) -> Result<RoadMap, RoadError> {
    let w = p.lane_width;
    let lanes = p.lanes;
    let half = lanes as f64 * w;
    let rj = half + 4.0;
    let far = rj + p.length;
    let arms: Vec<Arm> = arm_angles(p.arms, rng)
        .into_iter()
        .map(|a| {
            let u = Vec2::from_angle(a);
            Arm { u, n: u.perp() }
        })
        .collect();
    // ids: arm k incoming lane j -> 100k + j + 1, outgoing -> 100k + 50 + j + 1,
    // connectors k->m lane j -> 10_000 + 1000k + 100m + j + 1
    let incoming = |k: usize, j: usize| (100 * k + j + 1) as SegmentId;
    let outgoing = |k: usize, j: usize| (100 * k + 50 + j + 1) as SegmentId;
    let connector = |k: usize, m: usize, j: usize| (10_000 + 1000 * k + 100 * m + j + 1) as SegmentId;
    let mut segments = Vec::new();
    for (k, arm) in arms.iter().enumerate() {
        let median = line(arm.u * far, arm.u * rj);
        for j in 0..lanes {
            let off = (j as f64 + 0.5) * w;
            // incoming travels -u; its right-hand side is +n
            let s = arm.u * far + arm.n * off;
            let e = arm.u * rj + arm.n * off;
            segments.push(LaneSegment {
                id: incoming(k, j),
                centerline: line(s, e),
                width: w,
                successors: (0..p.arms).filter(|&m| m != k).map(|m| connector(k, m, j)).collect(),
                left_opposite_boundary: Some(median.clone()),
                right_road_edge: Some(line(arm.u * far + arm.n * half, arm.u * rj + arm.n * half)),
            });
            let s = arm.u * rj - arm.n * off;
            let e = arm.u * far - arm.n * off;
            segments.push(LaneSegment {
                id: outgoing(k, j),
                centerline: line(s, e),
                width: w,
                successors: vec![],
                left_opposite_boundary: Some(median.reversed()),
                right_road_edge: Some(line(arm.u * rj - arm.n * half, arm.u * far - arm.n * half)),
            });
        }
    }
    for (k, a) in arms.iter().enumerate() {
        for (m, b) in arms.iter().enumerate() {
            if m == k {
                continue;
            }
            for j in 0..lanes {
                let off = (j as f64 + 0.5) * w;
                let p0 = a.u * rj + a.n * off;
                let p3 = b.u * rj - b.n * off;
                let c = 0.45 * p0.distance(p3);
                segments.push(LaneSegment {
                    id: connector(k, m, j),
                    centerline: bezier(p0, p0 - a.u * c, p3 - b.u * c, p3, 12),
                    width: w,
                    successors: vec![outgoing(m, j)],
                    left_opposite_boundary: None,
                    right_road_edge: None,
                });
            }
        }
    }
    let lateral = half + SIDEWALK_GAP;
    let k = arms.len();
    let corners: Vec<(f64, f64)> = (0..k).map(|i| offset_corner(&arms[i], &arms[(i + 1) % k], lateral)).collect();
    // cross each arm just outside the junction and both adjacent corners
    let crossing_at: Vec<f64> = (0..k).map(|i| rj.max(corners[i].0).max(corners[(i + k - 1) % k].1) + 3.0).collect();
    let sidewalks = corner_sidewalks(&arms, lateral, far + 10.0, &crossing_at, |i| {
        let a = &arms[i];
        vec![a.n * lateral + a.u * corners[i].0]
    })?;
    let spawn = (0..p.arms).flat_map(|k| (0..lanes).map(move |j| incoming(k, j))).collect();
    RoadMap::new(segments, sidewalks, regular_roi(far - ROI_MARGIN), spawn)
}

fn roundabout(p: &ScenarioParams, rng: &mut ChaCha8Rng) -> Result<RoadMap, RoadError> {
    let w = p.lane_width;
    let r = p.radius;
    let far = r + p.length;
    let k = p.arms;
    let angles = arm_angles(k, rng);
    let arms: Vec<Arm> = angles
        .iter()
        .map(|&a| {
            let u = Vec2::from_angle(a);
            Arm { u, n: u.perp() }
        })
        .collect();
    let delta = math::asin((w / 2.0) / r);
    // entry k merges at angle_k + delta, exit k diverges at angle_k - delta
    let entry = |i: usize| (100 * i + 1) as SegmentId;
    let exit = |i: usize| (100 * i + 51) as SegmentId;
    let junction = |i: usize| (100 * i + 80) as SegmentId;
    let between = |i: usize| (100 * i + 90) as SegmentId;
    let ring_pt = |a: f64| Vec2::from_angle(a) * r;
    let mut segments = Vec::new();
    for i in 0..k {
        let arm = &arms[i];
        let a = angles[i];
        let next = (i + 1) % k;
        let mut a_next = angles[next];
        if a_next <= a {
            a_next += math::TAU;
        }
        let merge = ring_pt(a + delta);
        let diverge = ring_pt(a - delta);
        let start_t = r * math::cos(delta);
        let median = line(arm.u * far, arm.u * start_t);
        segments.push(LaneSegment {
            id: entry(i),
            centerline: line(arm.u * far + arm.n * (w / 2.0), merge),
            width: w,
            successors: vec![between(i)],
            left_opposite_boundary: Some(median.clone()),
            right_road_edge: Some(line(arm.u * far + arm.n * w, arm.u * (start_t + w) + arm.n * w)),
        });
        segments.push(LaneSegment {
            id: exit(i),
            centerline: line(diverge, arm.u * far - arm.n * (w / 2.0)),
            width: w,
            successors: vec![],
            left_opposite_boundary: Some(median.reversed()),
            right_road_edge: Some(line(arm.u * (start_t + w) - arm.n * w, arm.u * far - arm.n * w)),
        });
        segments.push(LaneSegment {
            id: junction(i),
            centerline: arc(Vec2::ZERO, r, a - delta, a + delta, 1.5),
            width: w,
            successors: vec![between(i)],
            left_opposite_boundary: None,
            right_road_edge: None,
        });
        let (b0, b1) = (a + delta, a_next - delta);
        let clear = 2.0 * delta;
        segments.push(LaneSegment {
            id: between(i),
            centerline: arc(Vec2::ZERO, r, b0, b1, 3.0),
            width: w,
            successors: vec![junction(next), exit(next)],
            left_opposite_boundary: Some(arc(Vec2::ZERO, r - w / 2.0 - 0.5, b0, b1, 3.0)),
            right_road_edge: if b1 - b0 > 3.0 * clear {
                Some(arc(Vec2::ZERO, r + w / 2.0 + 0.5, b0 + clear, b1 - clear, 3.0))
            } else {
                None
            },
        });
    }
    let lateral = w + SIDEWALK_GAP;
    let rho = r + w / 2.0 + 3.0 + lateral;
    let near = math::sqrt(rho * rho - lateral * lateral);
    let crossing_at = vec![near + 2.0; k];
    let sidewalks = corner_sidewalks(&arms, lateral, far + 10.0, &crossing_at, |i| {
        let (a, b) = (&arms[i], &arms[(i + 1) % k]);
        let a_near = a.u * near + a.n * lateral;
        let b_near = b.u * near - b.n * lateral;
        let (a0, mut a1) = (a_near.angle(), b_near.angle());
        if a1 <= a0 {
            a1 += math::TAU;
        }
        arc(Vec2::ZERO, rho, a0, a1, 3.0).points().to_vec()
    })?;
    let spawn = (0..k).map(entry).collect();
    RoadMap::new(segments, sidewalks, regular_roi(far - ROI_MARGIN), spawn).map_err(|e| match e {
        RoadError::Validation(m) => RoadError::Validation(format!("roundabout: {m}")),
        e => e,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::collections::BTreeSet;

    fn reachable(map: &RoadMap) -> BTreeSet<SegmentId> {
        let mut seen = BTreeSet::new();
        let mut stack: Vec<SegmentId> = map.spawn_segments.clone();
        while let Some(id) = stack.pop() {
            if seen.insert(id) {
                stack.extend(map.lanes.segment(id).unwrap().successors.iter().copied());
            }
        }
        seen
    }

    fn check_invariants(map: &RoadMap) {
        let all: BTreeSet<SegmentId> = map.lanes.segments().iter().map(|s| s.id).collect();
        assert_eq!(reachable(map), all);
        for s in map.lanes.segments() {
            for p in s.centerline.points() {
                assert!(map.occupancy.contains(*p), "segment {} point {p:?}", s.id);
            }
            for succ in &s.successors {
                let next = map.lanes.segment(*succ).unwrap();
                assert!(s.centerline.end().distance(next.centerline.start()) < 1e-6, "{} -> {}", s.id, succ);
            }
        }
    }

    #[test]
    fn highway_lanes_have_boundaries() {
        let p = ScenarioParams { lanes: 3, length: 500.0, ..Default::default() };
        let map = generate_scenario(ScenarioKind::Highway, &p, 1).unwrap();
        assert_eq!(map.lanes.segments().len(), 3);
        for s in map.lanes.segments() {
            assert!(s.left_opposite_boundary.is_some() && s.right_road_edge.is_some());
        }
        check_invariants(&map);
    }

    #[test]
    fn intersection_is_deterministic_and_connected() {
        let p = ScenarioParams { lanes: 2, arms: 4, ..Default::default() };
        let a = generate_scenario(ScenarioKind::Intersection, &p, 7).unwrap();
        let b = generate_scenario(ScenarioKind::Intersection, &p, 7).unwrap();
        assert_eq!(a.lanes.segments(), b.lanes.segments());
        assert_eq!(a.sidewalks, b.sidewalks);
        check_invariants(&a);
        assert_eq!(a.sidewalks.crossings().len(), 4);
        // sidewalks stay off the drivable area
        for arms in 3..=5 {
            for lanes in 2..=5 {
                let p = ScenarioParams { lanes, arms, ..Default::default() };
                let m = generate_scenario(ScenarioKind::Intersection, &p, 3).unwrap();
                for (i, s) in m.sidewalks.sidewalks().iter().enumerate() {
                    let n = (s.length() / 0.5) as usize;
                    for j in 0..=n {
                        let q = s.point_at(j as f64 * 0.5);
                        assert!(!m.occupancy.contains(q), "arms {arms} lanes {lanes} sidewalk {i} at {q:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn roundabout_entries_feed_the_ring() {
        let p = ScenarioParams { radius: 30.0, arms: 4, ..Default::default() };
        let map = generate_scenario(ScenarioKind::Roundabout, &p, 2).unwrap();
        check_invariants(&map);
        for id in &map.spawn_segments {
            let entry = map.lanes.segment(*id).unwrap();
            let ring = entry.successors.iter().any(|s| {
                let seg = map.lanes.segment(*s).unwrap();
                // ring pieces lie on the circle of radius 30
                seg.centerline.points().iter().all(|p| (p.norm() - 30.0).abs() < 1e-6)
            });
            assert!(ring, "entry {id}");
        }
    }

    #[test]
    fn out_of_range_params_rejected() {
        let p = ScenarioParams { lanes: 7, ..Default::default() };
        assert!(matches!(generate_scenario(ScenarioKind::Highway, &p, 0), Err(RoadError::Param(_))));
        let p = ScenarioParams { radius: 10.0, ..Default::default() };
        assert!(matches!(generate_scenario(ScenarioKind::Roundabout, &p, 0), Err(RoadError::Param(_))));
        let p = ScenarioParams { arms: 6, ..Default::default() };
        assert!(matches!(generate_scenario(ScenarioKind::Intersection, &p, 0), Err(RoadError::Param(_))));
    }
}
