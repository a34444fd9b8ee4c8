mod support;

use crowdsim_core::geom::{least_violation_fallback, solve_velocity_program, ConvexPolygon, HalfPlane, Vec2};
use support::grid_oracle::{coarse_argmin, grid_argmin, refined_argmin};

fn square(h: f64) -> ConvexPolygon {
    ConvexPolygon::rect(Vec2::new(-h, -h), Vec2::new(h, h)).unwrap()
}

#[test]
fn clipped_preference_matches_fine_grid() {
    let kin = square(10.0);
    let planes = [HalfPlane::new(Vec2::new(-1.0, 0.0), -2.0).unwrap()];
    let target = Vec2::new(3.0, 0.0);
    let grid = coarse_argmin(&kin, &planes, target, 0.001).best.unwrap();
    let lp = solve_velocity_program(&kin, &planes, target).unwrap();
    assert!((grid - Vec2::new(2.0, 0.0)).norm() <= 0.001 + 1e-9, "{grid:?}");
    assert!((lp - grid).norm() <= 0.002, "{lp:?} vs {grid:?}");
}

#[test]
fn fallback_matches_min_max_grid_search() {
    // min over a 0.001 grid of max violation for v_x >= 2 and v_x <= -2
    let kin = square(1.0);
    let planes =
        [HalfPlane::new(Vec2::new(1.0, 0.0), 2.0).unwrap(), HalfPlane::new(Vec2::new(-1.0, 0.0), 2.0).unwrap()];
    let h = 0.001;
    let mut best = (f64::INFINITY, f64::INFINITY, Vec2::ZERO);
    for i in 0..=2000 {
        for j in (0..=2000).step_by(50) {
            let v = Vec2::new(-1.0 + i as f64 * h, -1.0 + j as f64 * h);
            let worst = planes.iter().map(|p| p.violation(v)).fold(f64::NEG_INFINITY, f64::max);
            let key = (worst, v.norm());
            if key.0 < best.0 - 1e-12 || ((key.0 - best.0).abs() <= 1e-12 && key.1 < best.1) {
                best = (key.0, key.1, v);
            }
        }
    }
    let fb = least_violation_fallback(&kin, &planes);
    assert!((fb - best.2).norm() < 2.0 * h, "{fb:?} vs {:?}", best.2);
}

#[test]
fn grid_oracle_reports_empty_sets() {
    let kin = square(1.0);
    let planes = [HalfPlane::new(Vec2::new(1.0, 0.0), 2.0).unwrap()];
    let r = grid_argmin(&kin, &planes, Vec2::ZERO, Vec2::new(-1.0, -1.0), Vec2::new(1.0, 1.0), 0.01);
    assert!(r.best.is_none());
    assert_eq!(r.feasible_points, 0);
}

#[test]
fn refined_oracle_agrees_on_corner_optimum() {
    let kin = square(5.0);
    let planes =
        [HalfPlane::new(Vec2::new(-1.0, -0.2), -1.0).unwrap(), HalfPlane::new(Vec2::new(-0.3, -1.0), -1.5).unwrap()];
    let target = Vec2::new(4.0, 4.0);
    let lp = solve_velocity_program(&kin, &planes, target).unwrap();
    let g = refined_argmin(&kin, &planes, target, 0.01, 1e-6).unwrap();
    assert!((lp - g).norm() < 1e-4, "{lp:?} vs {g:?}");
}

#[test]
fn random_programs_match_grid_oracle() {
    use support::grid_oracle::instances::random_instance;
    let mut worst_refined = 0.0f64;
    let mut worst_coarse = 0.0f64;
    let mut coarse_misses = 0;
    let mut checked = 0;
    for seed in 0..200u64 {
        let inst = random_instance(seed);
        let lp = solve_velocity_program(&inst.kin, &inst.planes, inst.target);
        let coarse = coarse_argmin(&inst.kin, &inst.planes, inst.target, 0.01);
        match (lp, coarse.best) {
            (Ok(v), Some(g)) => {
                for p in &inst.planes {
                    assert!(p.violation(v) <= 1e-7, "seed {seed}");
                }
                assert!(inst.kin.contains(v, 1e-7), "seed {seed}");
                let r = refined_argmin(&inst.kin, &inst.planes, inst.target, 0.01, 1e-6).unwrap();
                worst_refined = worst_refined.max((v - r).norm());
                worst_coarse = worst_coarse.max((v - g).norm());
                if (v - g).norm() > 0.02 {
                    coarse_misses += 1;
                }
                checked += 1;
            }
            (Err(_), None) => {}
            (Err(_), Some(g)) => panic!("seed {seed}: solver infeasible, grid found {g:?}"),
            (Ok(v), None) => {
                assert!(!inst.feasible_by_construction, "seed {seed}");
                for p in &inst.planes {
                    assert!(p.violation(v) <= 1e-7, "seed {seed}: thin set, result must be feasible");
                }
            }
        }
    }
    eprintln!("checked {checked}, worst refined {worst_refined:.2e}, worst coarse {worst_coarse:.3}, coarse misses {coarse_misses}");
    assert!(worst_refined <= 0.02);
}
