use conewave::assumptions::check_collinear;
use conewave::flow::{self, ContinuationPolicy, RayState};
use conewave::surface::{
    branched_cover, double_exterior, square_scene, triple_slit_scene, BoundaryCondition, ConeSurface,
};
use conewave::words::{build_partition, classify_word, forbidden_scan, Letter, Tag, Word};
use conewave::Vec2;

fn square() -> ConeSurface {
    double_exterior(&square_scene(1.0, 2.0, 3.0, BoundaryCondition::Dirichlet)).unwrap()
}

fn patch(p: &conewave::words::Partition, sheet: usize, pos: Vec2, dir: Vec2) -> Letter {
    Letter::Patch(p.patch_of(sheet, pos, dir.angle()).expect("inside K"))
}

#[test]
fn free_segment_tags_no_cone() {
    let s = square();
    let p = build_partition(&s, 0.1, 1.0 / 300.0, 1).unwrap();
    let d = Vec2::new(1.0, 0.0);
    let w = Word::new(
        vec![patch(&p, 0, Vec2::new(-0.6, 0.8), d), patch(&p, 0, Vec2::new(0.1, 0.8), d)],
        vec![0.7],
    )
    .unwrap();
    assert_eq!(classify_word(&s, &p, &w).unwrap(), vec![Tag::NoCone]);
}

/// Patch centres placed before a vertex and after it along a chosen outgoing link.
fn across_vertex(s: &ConeSurface, p: &conewave::words::Partition, out_offset: Option<f64>) -> Word {
    let v = Vec2::new(0.5, 0.5);
    let cone = s.cone_points.iter().find(|c| c.position.dist(v) < 1e-12).unwrap();
    let din = -Vec2::new(0.4, 1.0).normalized();
    let start = RayState::new(0, v - din * 0.5, din.angle());
    let flow::Hit::ConePoint { link_in, .. } = flow::step(s, &start, 5.0).1 else {
        panic!()
    };
    let out = match out_offset {
        Some(o) => link_in + o,
        None => flow::continuations(cone, link_in, ContinuationPolicy::GeometricBranch)[0],
    };
    let leave = RayState::depart(cone, out, 0.0);
    let a = p.patch(p.patch_of(0, start.point.pos, din.angle()).unwrap()).unwrap();
    let q_pos = v + leave.dir * 0.45;
    let b = p.patch_of(leave.point.sheet, q_pos, leave.dir.angle()).unwrap();
    let t = start.point.pos.dist(v) + 0.45;
    Word::new(vec![Letter::Patch(a.id), Letter::Patch(b)], vec![t]).unwrap()
}

#[test]
fn vertex_aligned_at_pi_tags_g() {
    let s = square();
    let p = build_partition(&s, 0.1, 1.0 / 300.0, 1).unwrap();
    let w = across_vertex(&s, &p, None);
    assert_eq!(classify_word(&s, &p, &w).unwrap(), vec![Tag::G]);
}

#[test]
fn vertex_at_generic_link_tags_d() {
    let s = square();
    let p = build_partition(&s, 0.1, 1.0 / 300.0, 1).unwrap();
    let w = across_vertex(&s, &p, Some(0.9));
    assert_eq!(classify_word(&s, &p, &w).unwrap(), vec![Tag::D]);
}

#[test]
fn forbidden_scan_square_is_empty() {
    let s = square();
    let p = build_partition(&s, 0.1, 1.0 / 300.0, 1).unwrap();
    let scan = forbidden_scan(&s, &p, 4, 4.0).unwrap();
    assert!(scan.violations.is_empty());
    assert!(check_collinear(&s, 4.0, 256).passed());
}

#[test]
fn forbidden_scan_slit_cover_matches_collinearity() {
    let s = branched_cover(&triple_slit_scene()).unwrap();
    let p = build_partition(&s, 0.1, 1.0 / 300.0, 1).unwrap();
    let scan = forbidden_scan(&s, &p, 4, 2.5).unwrap();
    assert!(!scan.violations.is_empty(), "{scan:?}");
    assert!(!check_collinear(&s, 2.5, 256).passed());
    for w in &scan.violations {
        assert_eq!(w.tags[1], Tag::G);
        assert!(w.tags.iter().all(|t| t.interacts()));
    }
}

#[test]
fn short_words_are_never_forbidden() {
    let s = branched_cover(&triple_slit_scene()).unwrap();
    let p = build_partition(&s, 0.1, 1.0 / 300.0, 1).unwrap();
    assert!(forbidden_scan(&s, &p, 2, 2.5).unwrap().violations.is_empty());
}
