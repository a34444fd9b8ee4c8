use crowdsim_core::agents::{
    collides, integrate_bicycle, lookahead_for, pure_pursuit, AgentClass, AgentProfile, AgentState,
};
use crowdsim_core::geom::{ConvexPolygon, Polyline, Vec2};
use crowdsim_core::roadnet::Route;
use proptest::prelude::*;

fn route() -> Route {
    Route::from_polyline(Polyline::new(vec![Vec2::new(-50.0, 0.0), Vec2::new(3000.0, 0.0)]).unwrap())
}

fn class() -> impl Strategy<Value = AgentClass> {
    prop::sample::select(AgentClass::ALL.to_vec())
}

/// Brute-force separating-axis check over densely sampled directions.
fn separated_on_sampled_axes(a: &ConvexPolygon, b: &ConvexPolygon) -> bool {
    (0..36_000).any(|k| {
        let d = Vec2::from_angle(k as f64 * std::f64::consts::PI / 36_000.0);
        let (amin, amax) = (-a.support(-d), a.support(d));
        let (bmin, bmax) = (-b.support(-d), b.support(d));
        amax < bmin || bmax < amin
    })
}

#[test]
fn corner_overlap_at_45_degrees_matches_axis_scan() {
    let prof = AgentProfile { half_length: 1.0, half_width: 0.5, ..AgentProfile::default_for(AgentClass::Car) };
    for (dx, dy) in [(2.6, 0.0), (1.84, 1.84), (2.0, 1.0), (0.0, 2.6), (2.2, 0.4)] {
        let a = AgentState::new(Vec2::ZERO, 0.0, 0.0, route());
        let b = AgentState::new(Vec2::new(dx, dy), std::f64::consts::FRAC_PI_4, 0.0, route());
        let pa = ConvexPolygon::oriented_rect(a.position, a.heading, 1.0, 0.5).unwrap();
        let pb = ConvexPolygon::oriented_rect(b.position, b.heading, 1.0, 0.5).unwrap();
        let expected = !separated_on_sampled_axes(&pa, &pb);
        assert_eq!(collides(&a, &prof, &b, &prof), expected, "offset ({dx}, {dy})");
    }
}

proptest! {
    #[test]
    fn bicycle_preserves_speed(speed in -6.0f64..6.0, steer in -0.6f64..0.6, h in -3.0f64..3.0, dt in 0.01f64..0.5) {
        let p = AgentProfile::default_for(AgentClass::Car);
        let s = AgentState::new(Vec2::new(1.0, -2.0), h, 1.0, route());
        let n = integrate_bicycle(&s, &p, speed, steer, dt);
        prop_assert!((n.velocity.norm() - speed.abs()).abs() <= 1e-12);
    }

    #[test]
    fn collides_is_symmetric(
        ca in class(), cb in class(),
        x in -8.0f64..8.0, y in -8.0f64..8.0,
        ha in -3.2f64..3.2, hb in -3.2f64..3.2,
    ) {
        let (pa, pb) = (AgentProfile::default_for(ca), AgentProfile::default_for(cb));
        let a = AgentState::new(Vec2::ZERO, ha, 0.0, route());
        let b = AgentState::new(Vec2::new(x, y), hb, 0.0, route());
        prop_assert_eq!(collides(&a, &pa, &b, &pb), collides(&b, &pb, &a, &pa));
    }

    #[test]
    fn pure_pursuit_converges_on_straight_path(
        e0 in -4.0f64..4.0,
        h0 in -std::f64::consts::FRAC_PI_4..std::f64::consts::FRAC_PI_4,
        speed in 1.0f64..6.0,
    ) {
        let path = route().polyline().clone();
        let p = AgentProfile::default_for(AgentClass::Car);
        let la = lookahead_for(speed);
        let mut s = AgentState::new(Vec2::new(0.0, e0), h0, speed, route());
        let bound = e0.abs() + la * h0.sin().abs() + 0.1;
        for _ in 0..800 {
            let steer = pure_pursuit(&s, &p, &path, la);
            s = integrate_bicycle(&s, &p, speed, steer, 0.05);
            prop_assert!(s.position.y.abs() <= bound);
        }
        prop_assert!(s.position.y.abs() < 1e-2, "final cross-track {}", s.position.y);
    }
}
