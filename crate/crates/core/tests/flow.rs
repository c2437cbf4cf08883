use conewave::flow::{
    self, passage_link_distance, relates, trace, ContinuationPolicy, InteractionKind, RayState,
    Relation, RelationKind, Terminal,
};
use conewave::surface::{
    branched_cover, double_exterior, facing_obstacles_scene, square_scene, triple_slit_scene,
    BoundaryCondition, ConeSurface, SurfacePoint,
};
use conewave::Vec2;
use proptest::prelude::*;
use std::f64::consts::PI;

fn square() -> ConeSurface {
    double_exterior(&square_scene(1.0, 1.0, 2.0, BoundaryCondition::Dirichlet)).unwrap()
}

fn cone_at(s: &ConeSurface, p: Vec2) -> usize {
    s.cone_points
        .iter()
        .find(|c| c.position.dist(p) < 1e-12)
        .expect("cone point")
        .id
}

#[test]
fn facing_scene_produces_trapped_diffractive_chain() {
    let s = double_exterior(&facing_obstacles_scene()).unwrap();
    let tip = cone_at(&s, Vec2::new(1.0, 0.0));
    let start = RayState::new(0, Vec2::new(0.0, 0.0), 0.0);
    let horizon = 14.0;
    let res = trace(&s, &start, horizon, ContinuationPolicy::DiffractiveFan(4));
    assert!(!res.truncated);
    let trapped: Vec<_> = res
        .chains
        .iter()
        .filter(|c| c.terminal == Terminal::Horizon && c.cones().iter().all(|k| *k == tip))
        .filter(|c| c.interactions.len() >= 3)
        .collect();
    assert!(!trapped.is_empty(), "no trapped chain among {}", res.chains.len());
    let ch = trapped[0];
    // Arrivals at t = 1, 5, 9, 13: period twice the gap length 2.
    for (k, i) in ch.interactions.iter().enumerate() {
        assert!((i.t_in - (1.0 + 4.0 * k as f64)).abs() < 1e-9, "{i:?}");
        assert_eq!(i.kind, InteractionKind::DiffractiveStrict);
    }
    // The geometric flow from the same start leaves.
    let geo = trace(&s, &start, 40.0, ContinuationPolicy::GeometricBranch);
    assert!(geo.chains.iter().all(|c| c.terminal == Terminal::Escaped));
}

#[test]
fn slit_vertical_line_is_geometric_through_three_cones() {
    let s = branched_cover(&triple_slit_scene()).unwrap();
    let start = RayState::new(0, Vec2::new(0.0, -2.0), PI / 2.0);
    let res = trace(&s, &start, 10.0, ContinuationPolicy::GeometricBranch);
    let straight = res
        .chains
        .iter()
        .find(|c| {
            c.interactions.len() == 3
                && c.segments.iter().all(|seg| seg.start.sheet == 0 && seg.dir.x.abs() < 1e-12)
        })
        .expect("straight chain on sheet 0");
    assert!(straight
        .interactions
        .iter()
        .all(|i| i.kind == InteractionKind::Geometric));
    assert!(straight.possibly_non_approximable());
    assert_eq!(straight.terminal, Terminal::Escaped);
}

#[test]
fn closure_of_near_passages() {
    let s = square();
    let r = 0.1;
    let c = 2.0 / r * 1.01;
    for b in [1e-2, 1e-3, 1e-4, 1e-5, 1e-6] {
        for cone in 0..4 {
            let d = passage_link_distance(&s, cone, b, r).unwrap();
            assert!((d - PI).abs() <= c * b, "b={b} cone={cone} d={d}");
            let d = passage_link_distance(&s, cone, -b, r).unwrap();
            assert!((d - PI).abs() <= c * b, "b=-{b} cone={cone} d={d}");
        }
    }
}

#[test]
fn free_segment_relates_both_kinds() {
    let s = square();
    let p = RayState::new(0, Vec2::new(-1.5, 1.2), 0.0);
    let q = RayState::new(0, Vec2::new(0.5, 1.2), 0.0);
    for kind in [RelationKind::Geometric, RelationKind::Diffractive] {
        assert_eq!(relates(&s, &p, &q, 2.0, kind, 1e-9).unwrap(), Relation::Related);
    }
}

#[test]
fn geometric_continuation_relates_geometrically() {
    let s = square();
    let v = Vec2::new(0.5, 0.5);
    let cone = &s.cone_points[cone_at(&s, v)];
    let p = RayState::new(0, v - Vec2::new(1.0, 0.3).normalized(), Vec2::new(1.0, 0.3).angle());
    let arrive = flow::step(&s, &p, 5.0);
    let flow::Hit::ConePoint { link_in, .. } = arrive.1 else {
        panic!("expected cone hit, got {:?}", arrive.1)
    };
    for out in flow::continuations(cone, link_in, ContinuationPolicy::GeometricBranch) {
        let leave = RayState::depart(cone, out, 0.0);
        let q = RayState {
            point: SurfacePoint {
                sheet: leave.point.sheet,
                pos: v + leave.dir * 0.7,
            },
            dir: leave.dir,
            time: 0.0,
            anchor: flow::Anchor::Free,
        };
        assert_eq!(
            relates(&s, &p, &q, 1.7, RelationKind::Geometric, 1e-9).unwrap(),
            Relation::Related
        );
    }
}

#[test]
fn generic_diffraction_is_d_but_not_g() {
    let s = square();
    let v = Vec2::new(0.5, 0.5);
    let cone = &s.cone_points[cone_at(&s, v)];
    let p = RayState::new(0, v - Vec2::new(1.0, 0.3).normalized(), Vec2::new(1.0, 0.3).angle());
    let flow::Hit::ConePoint { link_in, .. } = flow::step(&s, &p, 5.0).1 else {
        panic!()
    };
    // Oracle: enumerate the continuation set; a generic link is not among them.
    let out = link_in + 0.8;
    let geo = flow::continuations(cone, link_in, ContinuationPolicy::GeometricBranch);
    assert!(geo
        .iter()
        .all(|g| conewave::geom::circle_distance(*g, out, cone.angle) > 0.1));
    let leave = RayState::depart(cone, out, 0.0);
    let q = RayState {
        point: SurfacePoint {
            sheet: leave.point.sheet,
            pos: v + leave.dir * 0.6,
        },
        dir: leave.dir,
        time: 0.0,
        anchor: flow::Anchor::Free,
    };
    assert_eq!(
        relates(&s, &p, &q, 1.6, RelationKind::Geometric, 1e-6).unwrap(),
        Relation::NotRelated
    );
    assert_eq!(
        relates(&s, &p, &q, 1.6, RelationKind::Diffractive, 1e-6).unwrap(),
        Relation::Related
    );
}

#[test]
fn unfolding_matches_specular_billiard() {
    // Independent specular reflection off the square's sides.
    fn billiard(mut z: Vec2, mut d: Vec2, mut t: f64) -> Vec2 {
        let walls = [
            (Vec2::new(-0.5, -0.5), Vec2::new(0.5, -0.5)),
            (Vec2::new(0.5, -0.5), Vec2::new(0.5, 0.5)),
            (Vec2::new(0.5, 0.5), Vec2::new(-0.5, 0.5)),
            (Vec2::new(-0.5, 0.5), Vec2::new(-0.5, -0.5)),
        ];
        loop {
            let mut best: Option<(f64, Vec2, Vec2)> = None;
            for (a, b) in walls {
                if let Some((s, _)) = conewave::geom::ray_segment(z, d, a, b) {
                    if s > 1e-12 && best.is_none_or(|x| s < x.0) {
                        best = Some((s, a, b));
                    }
                }
            }
            match best {
                Some((s, a, b)) if s < t => {
                    z = z + d * s;
                    let n = (b - a).perp().normalized();
                    d = d - n * (2.0 * d.dot(n));
                    t -= s;
                }
                _ => return z + d * t,
            }
        }
    }
    let s = square();
    let mut checked = 0;
    for k in 0..200 {
        let th = 2.0 * PI * k as f64 / 200.0 + 0.001;
        let z = Vec2::new(1.5 * (0.37 * k as f64).cos(), 1.5 * (0.37 * k as f64).sin());
        let ray = RayState::new(0, z, th);
        let res = trace(&s, &ray, 3.0, ContinuationPolicy::Stop);
        let ch = &res.chains[0];
        if !ch.interactions.is_empty() || ch.terminal == Terminal::AtConePoint {
            continue;
        }
        let t = ch.total_time.min(3.0);
        let (at, _) = ch.state_at(t).unwrap();
        let expect = billiard(z, ray.dir, t);
        assert!(at.pos.dist(expect) < 1e-9, "k={k}: {:?} vs {:?}", at.pos, expect);
        checked += 1;
    }
    assert!(checked > 150);
}

#[test]
fn sheet_swap_preserves_distance() {
    let s = square();
    let pts = [
        Vec2::new(-1.2, 0.1),
        Vec2::new(0.9, 0.9),
        Vec2::new(0.0, -1.4),
        Vec2::new(1.5, -0.2),
    ];
    for a in pts {
        for b in pts {
            for (sa, sb) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
                let d = s.distance(
                    SurfacePoint { sheet: sa, pos: a },
                    SurfacePoint { sheet: sb, pos: b },
                );
                let e = s.distance(
                    SurfacePoint {
                        sheet: 1 - sa,
                        pos: a,
                    },
                    SurfacePoint {
                        sheet: 1 - sb,
                        pos: b,
                    },
                );
                assert!((d - e).abs() < 1e-12);
                if sa == sb {
                    assert!(d <= a.dist(b) + 2.0);
                }
            }
        }
    }
    // Across the seam: (-1.2, 0.1) to its own copy on sheet 1 touches the left edge.
    let d = s.distance(
        SurfacePoint {
            sheet: 0,
            pos: Vec2::new(-1.2, 0.1),
        },
        SurfacePoint {
            sheet: 1,
            pos: Vec2::new(-1.2, 0.1),
        },
    );
    assert!((d - 1.4).abs() < 1e-9, "{d}");
}

fn exterior_start() -> impl Strategy<Value = RayState> {
    (1.0f64..1.9, 0.0..2.0 * PI, 0.0..2.0 * PI)
        .prop_map(|(r, a, th)| RayState::new(0, Vec2::from_angle(a) * r, th))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn time_additivity(start in exterior_start(), t1 in 0.1f64..2.0, t2 in 0.1f64..2.0) {
        let s = square();
        let whole = trace(&s, &start, t1 + t2, ContinuationPolicy::Stop);
        let first = trace(&s, &start, t1, ContinuationPolicy::Stop);
        let a = &first.chains[0];
        prop_assume!(a.terminal == Terminal::Horizon);
        let b = trace(&s, &a.last, t2, ContinuationPolicy::Stop);
        let w = &whole.chains[0];
        let c = &b.chains[0];
        prop_assert_eq!(w.terminal, c.terminal);
        prop_assert!((w.total_time - (a.total_time + c.total_time)).abs() < 1e-9);
        prop_assert!(w.last.point.pos.dist(c.last.point.pos) < 1e-9);
        prop_assert_eq!(w.last.point.sheet, c.last.point.sheet);
    }

    #[test]
    fn reversibility(start in exterior_start(), t in 0.1f64..3.0) {
        let s = square();
        let fwd = trace(&s, &start, t, ContinuationPolicy::Stop);
        let ch = &fwd.chains[0];
        prop_assume!(ch.interactions.is_empty() && ch.terminal == Terminal::Horizon);
        let mut back_start = ch.last.reversed();
        back_start.anchor = flow::Anchor::Free;
        let back = trace(&s, &back_start, ch.total_time, ContinuationPolicy::Stop);
        let end = back.chains[0].last;
        prop_assert!(end.point.pos.dist(start.point.pos) < 1e-6 * ch.total_time.max(1.0));
        prop_assert_eq!(end.point.sheet, start.point.sheet);
    }
}
