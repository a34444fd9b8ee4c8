//! Closest-point program over a convex polygon intersected with half-planes.
//!
//! The solver is Seidel's randomized incremental method specialised to the
//! objective `min ‖v − v_pref‖`: constraints are added one at a time in a
//! shuffled order and, whenever the running optimum violates the new
//! constraint, the optimum is recomputed on that constraint's boundary line
//! against the constraints seen so far. Expected running time is linear.

use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::{ConvexPolygon, HalfPlane, Vec2, FEASIBILITY_TOL};

pub const DEFAULT_PROGRAM_SEED: u64 = 0x5eed_1e55_c0de_0001;

/// The intersection of the kinematic polygon and the half-planes is empty.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("velocity program is infeasible")]
pub struct Infeasible;

/// `argmin ‖v − v_pref‖` over `kin ∩ planes`, using the default shuffle seed.
pub fn solve_velocity_program(kin: &ConvexPolygon, planes: &[HalfPlane], v_pref: Vec2) -> Result<Vec2, Infeasible> {
    solve_velocity_program_seeded(kin, planes, v_pref, DEFAULT_PROGRAM_SEED)
}

pub fn solve_velocity_program_seeded(
    kin: &ConvexPolygon,
    planes: &[HalfPlane],
    v_pref: Vec2,
    seed: u64,
) -> Result<Vec2, Infeasible> {
    let mut all: Vec<HalfPlane> = kin.edge_planes().chain(planes.iter().copied()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    all.shuffle(&mut rng);
    incremental(&all, v_pref)
}

fn incremental(constraints: &[HalfPlane], target: Vec2) -> Result<Vec2, Infeasible> {
    let mut best = target;
    for (i, c) in constraints.iter().enumerate() {
        if c.contains(best, FEASIBILITY_TOL) {
            continue;
        }
        best = optimum_on_line(c, &constraints[..i], target)?;
    }
    Ok(best)
}

/// Closest point to `target` on the boundary of `line`, subject to `prior`.
fn optimum_on_line(line: &HalfPlane, prior: &[HalfPlane], target: Vec2) -> Result<Vec2, Infeasible> {
    let n = line.normal();
    let origin = n * line.offset();
    let dir = n.perp();
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    for c in prior {
        // c: dot(cn, origin + t dir) >= c.offset
        let denom = c.normal().dot(dir);
        let rhs = c.offset() - c.normal().dot(origin);
        if denom.abs() < 1e-12 {
            if rhs > FEASIBILITY_TOL {
                return Err(Infeasible);
            }
            continue;
        }
        let t = rhs / denom;
        if denom > 0.0 {
            lo = lo.max(t);
        } else {
            hi = hi.min(t);
        }
    }
    if lo > hi {
        // scale tolerance by the magnitude of the parameters involved
        let scale = 1.0 + lo.abs().max(hi.abs());
        if lo - hi > FEASIBILITY_TOL * scale {
            return Err(Infeasible);
        }
        let mid = 0.5 * (lo + hi);
        return Ok(origin + dir * mid);
    }
    let t = (target - origin).dot(dir).clamp(lo, hi);
    Ok(origin + dir * t)
}

/// Point of `kin` minimising the worst violation `max_i (offset_i − n_i · v)`;
/// among minimisers the one of smallest norm. Intended for the case where
/// [`solve_velocity_program`] reports [`Infeasible`].
pub fn least_violation_fallback(kin: &ConvexPolygon, planes: &[HalfPlane]) -> Vec2 {
    let kin_planes: Vec<HalfPlane> = kin.edge_planes().collect();
    let solve_relaxed = |slack: f64, target: Vec2| {
        let mut all = kin_planes.clone();
        all.extend(planes.iter().map(|p| p.relaxed(slack)));
        let mut rng = ChaCha8Rng::seed_from_u64(DEFAULT_PROGRAM_SEED);
        all.shuffle(&mut rng);
        incremental(&all, target)
    };
    if planes.is_empty() {
        return solve_relaxed(0.0, Vec2::ZERO).unwrap_or_else(|_| kin.centroid());
    }
    let c = kin.centroid();
    let mut hi = planes.iter().map(|p| p.violation(c)).fold(f64::NEG_INFINITY, f64::max);
    let mut lo = hi - kin.diameter() - 1.0;
    // any point of kin is feasible with slack `hi`; nothing is with `lo`
    for _ in 0..200 {
        if hi - lo <= 1e-11 * (1.0 + hi.abs()) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if solve_relaxed(mid, c).is_ok() {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let mut slack = hi;
    for _ in 0..8 {
        if let Ok(v) = solve_relaxed(slack, Vec2::ZERO) {
            return v;
        }
        slack += 1e-9 * (1.0 + slack.abs());
    }
    c
}

/// Solve, falling back to [`least_violation_fallback`] when infeasible.
/// The flag is `true` when the fallback was used.
pub fn solve_or_fallback(kin: &ConvexPolygon, planes: &[HalfPlane], v_pref: Vec2) -> (Vec2, bool) {
    match solve_velocity_program(kin, planes, v_pref) {
        Ok(v) => (v, false),
        Err(Infeasible) => (least_violation_fallback(kin, planes), true),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square(h: f64) -> ConvexPolygon {
        ConvexPolygon::rect(Vec2::new(-h, -h), Vec2::new(h, h)).unwrap()
    }

    fn plane(nx: f64, ny: f64, off: f64) -> HalfPlane {
        HalfPlane::new(Vec2::new(nx, ny), off).unwrap()
    }

    #[test]
    fn unconstrained_preference_is_returned() {
        let v = solve_velocity_program(&square(10.0), &[], Vec2::new(3.0, 0.0)).unwrap();
        assert_eq!(v, Vec2::new(3.0, 0.0));
    }

    #[test]
    fn single_plane_clips_preference() {
        // v_x <= 2; a 0.001 grid scan over the square gives (2, 0) as well
        let v = solve_velocity_program(&square(10.0), &[plane(-1.0, 0.0, -2.0)], Vec2::new(3.0, 0.0)).unwrap();
        assert!((v - Vec2::new(2.0, 0.0)).norm() < 1e-9, "{v:?}");
    }

    #[test]
    fn disjoint_sets_are_infeasible() {
        let r = solve_velocity_program(&square(1.0), &[plane(1.0, 0.0, 2.0)], Vec2::ZERO);
        assert_eq!(r, Err(Infeasible));
    }

    #[test]
    fn preference_outside_kin_projects_to_boundary() {
        let v = solve_velocity_program(&square(1.0), &[], Vec2::new(3.0, 0.5)).unwrap();
        assert!((v - Vec2::new(1.0, 0.5)).norm() < 1e-9);
    }

    #[test]
    fn fallback_nearest_boundary() {
        let v = least_violation_fallback(&square(1.0), &[plane(1.0, 0.0, 2.0)]);
        assert!((v - Vec2::new(1.0, 0.0)).norm() < 1e-6, "{v:?}");
    }

    #[test]
    fn fallback_balances_opposing_planes() {
        let v = least_violation_fallback(&square(1.0), &[plane(1.0, 0.0, 2.0), plane(-1.0, 0.0, 2.0)]);
        assert!(v.norm() < 1e-6, "{v:?}");
    }

    #[test]
    fn fallback_without_planes_picks_origin() {
        let v = least_violation_fallback(&square(1.0), &[]);
        assert_eq!(v, Vec2::ZERO);
    }

    #[test]
    fn seeded_solve_is_bitwise_deterministic() {
        let planes = [plane(1.0, 0.3, 0.5), plane(-0.2, 1.0, -0.4), plane(-1.0, -1.0, -3.0)];
        let a = solve_velocity_program_seeded(&square(5.0), &planes, Vec2::new(-4.0, 3.0), 7).unwrap();
        let b = solve_velocity_program_seeded(&square(5.0), &planes, Vec2::new(-4.0, 3.0), 7).unwrap();
        assert_eq!(a.x.to_bits(), b.x.to_bits());
        assert_eq!(a.y.to_bits(), b.y.to_bits());
    }
}
