//! Polygon scenes and the flat cone surfaces built from them.
//!
//! A [`ConeSurface`] is a set of identical Euclidean sheets cut along a
//! common set of boundary edges, with each (sheet, edge) pair glued to a
//! twin on another sheet. Two constructions are provided:
//!
//! * [`double_exterior`]: two copies of the exterior of a polygonal
//!   obstacle set, glued edge-to-edge by reflection. Every obstacle vertex
//!   becomes a cone point of angle `2(2π − θ_int)`.
//! * [`branched_cover`]: the two-sheeted cover of the plane branched along
//!   a set of slits. Slit endpoints become cone points of angle `4π`.
//!
//! Cone-point links are parametrised by developing the punctured
//! neighbourhood into wedges, one per sheet corner, laid end to end.

use crate::geom::{self, point_in_polygon, point_segment_distance, signed_area2, Vec2};
use crate::{Error, Result};
use log::warn;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum BoundaryCondition {
    #[default]
    Dirichlet,
    Neumann,
}

/// Obstacles in the plane. Lengths are in units where the wave speed is 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolygonScene {
    #[serde(default)]
    pub obstacles: Vec<Vec<Vec2>>,
    /// Zero-width branch cuts. Only meaningful for [`branched_cover`].
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub slits: Vec<[Vec2; 2]>,
    #[serde(rename = "R0")]
    pub r0: f64,
    #[serde(rename = "R1")]
    pub r1: f64,
    #[serde(default)]
    pub bc: BoundaryCondition,
}

impl PolygonScene {
    pub fn new(obstacles: Vec<Vec<Vec2>>, r0: f64, r1: f64, bc: BoundaryCondition) -> Self {
        PolygonScene {
            obstacles,
            slits: Vec::new(),
            r0,
            r1,
            bc,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scene serializes")
    }

    /// Largest distance between two vertices (or slit endpoints).
    pub fn diameter(&self) -> f64 {
        let pts: Vec<Vec2> = self
            .obstacles
            .iter()
            .flatten()
            .copied()
            .chain(self.slits.iter().flat_map(|s| s.iter().copied()))
            .collect();
        let mut d = 0.0f64;
        for (i, a) in pts.iter().enumerate() {
            for b in &pts[i + 1..] {
                d = d.max(a.dist(*b));
            }
        }
        if d == 0.0 {
            self.r0.max(1.0)
        } else {
            d
        }
    }

    /// Copy with every loop in counterclockwise order.
    pub fn normalized(&self) -> Self {
        let mut s = self.clone();
        for l in &mut s.obstacles {
            if signed_area2(l) < 0.0 {
                l.reverse();
            }
        }
        s
    }

    /// Copy with straight (angle π) vertices removed.
    pub fn without_straight_vertices(&self) -> Self {
        let mut s = self.clone();
        for l in &mut s.obstacles {
            let mut changed = true;
            while changed && l.len() > 3 {
                changed = false;
                let n = l.len();
                for i in 0..n {
                    if is_straight(l[(i + n - 1) % n], l[i], l[(i + 1) % n]) {
                        l.remove(i);
                        changed = true;
                        break;
                    }
                }
            }
        }
        s
    }

    /// Checks every scene invariant.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidScene(m));
        if !(self.r0 > 0.0 && self.r1 > self.r0) {
            return bad(format!("need 0 < R0 < R1, got R0={} R1={}", self.r0, self.r1));
        }
        for (li, l) in self.obstacles.iter().enumerate() {
            if l.len() < 3 {
                return bad(format!("loop {li} has fewer than 3 vertices"));
            }
            for v in l {
                if !v.is_finite() {
                    return bad(format!("loop {li} has a non-finite vertex"));
                }
                if v.norm() >= self.r0 {
                    return bad(format!("loop {li} vertex {:?} not inside the R0 disc", v));
                }
            }
            if signed_area2(l).abs() < 1e-300 {
                return bad(format!("loop {li} has zero area"));
            }
            let n = l.len();
            for i in 0..n {
                if is_straight(l[(i + n - 1) % n], l[i], l[(i + 1) % n]) {
                    return Err(Error::RemovableConePoint {
                        loop_index: li,
                        vertex: i,
                    });
                }
            }
            // Non-adjacent edges must not meet.
            for i in 0..n {
                for j in i + 1..n {
                    let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                    let (a1, a2) = (l[i], l[(i + 1) % n]);
                    let (b1, b2) = (l[j], l[(j + 1) % n]);
                    if adjacent {
                        // Adjacent edges may only share their common vertex.
                        let shared = if j == i + 1 { a2 } else { a1 };
                        let (p, q) = if j == i + 1 { (a1, b2) } else { (a2, b1) };
                        if point_segment_distance(p, b1, b2) == 0.0 && p != shared
                            || point_segment_distance(q, a1, a2) == 0.0 && q != shared
                        {
                            return bad(format!("loop {li} folds back on itself at vertex {j}"));
                        }
                    } else if geom::segments_intersect(a1, a2, b1, b2) {
                        return bad(format!("loop {li} is not simple (edges {i} and {j} meet)"));
                    }
                }
            }
        }
        for (i, a) in self.obstacles.iter().enumerate() {
            for (j, b) in self.obstacles.iter().enumerate().skip(i + 1) {
                if loops_touch(a, b) {
                    return bad(format!("loops {i} and {j} intersect"));
                }
                if point_in_polygon(a[0], b) || point_in_polygon(b[0], a) {
                    return bad(format!("loops {i} and {j} are nested; exterior is disconnected"));
                }
            }
        }
        for (i, s) in self.slits.iter().enumerate() {
            if s[0] == s[1] || !s[0].is_finite() || !s[1].is_finite() {
                return bad(format!("slit {i} is degenerate"));
            }
            if s[0].norm() >= self.r0 || s[1].norm() >= self.r0 {
                return bad(format!("slit {i} not inside the R0 disc"));
            }
            for (j, t) in self.slits.iter().enumerate().skip(i + 1) {
                if geom::segments_intersect(s[0], s[1], t[0], t[1]) {
                    return bad(format!("slits {i} and {j} intersect"));
                }
            }
            for l in &self.obstacles {
                let n = l.len();
                if (0..n).any(|k| geom::segments_intersect(s[0], s[1], l[k], l[(k + 1) % n])) {
                    return bad(format!("slit {i} touches an obstacle"));
                }
            }
        }
        Ok(())
    }
}

fn is_straight(prev: Vec2, v: Vec2, next: Vec2) -> bool {
    let a = prev - v;
    let b = next - v;
    a.cross(b).abs() <= 1e-12 * a.norm() * b.norm() && a.dot(b) < 0.0
}

fn loops_touch(a: &[Vec2], b: &[Vec2]) -> bool {
    let (na, nb) = (a.len(), b.len());
    (0..na).any(|i| {
        (0..nb).any(|j| geom::segments_intersect(a[i], a[(i + 1) % na], b[j], b[(j + 1) % nb]))
    })
}

/// How crossing a glued edge maps the ray onto the twin sheet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GluingKind {
    /// Doubling: the direction is reflected across the edge.
    Mirror,
    /// Branch cut: the direction is unchanged.
    Transit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MetricKind {
    Flat,
    /// Reserved for curved conic metrics, which no operation supports.
    Curved,
}

/// A boundary segment, present at the same chart position on every sheet.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub a: Vec2,
    pub b: Vec2,
    pub cone_a: usize,
    pub cone_b: usize,
}

impl Edge {
    pub fn length(&self) -> f64 {
        self.a.dist(self.b)
    }
}

/// Identifies `(sheets[0], edge)` with `(sheets[1], edge)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gluing {
    pub edge: usize,
    pub sheets: [usize; 2],
    pub kind: GluingKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sheet {
    pub id: usize,
}

/// One sheet's wedge at a cone point, placed into the link.
///
/// A chart angle `φ` on `sheet` with `rel = (φ − start) mod 2π ≤ width` has
/// link coordinate `offset + orientation · rel`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Corner {
    pub sheet: usize,
    pub start: f64,
    pub width: f64,
    pub orientation: i8,
    pub offset: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConePoint {
    pub id: usize,
    pub position: Vec2,
    pub angle: f64,
    pub corners: Vec<Corner>,
}

impl ConePoint {
    /// Link coordinate in `[0, Θ)` of the chart direction `phi` on `sheet`.
    pub fn link_coordinate(&self, sheet: usize, phi: f64) -> Option<f64> {
        let tol = 1e-12;
        let mut best: Option<(f64, f64)> = None;
        for c in self.corners.iter().filter(|c| c.sheet == sheet) {
            let mut rel = geom::wrap_angle(phi - c.start);
            // Snap directions a hair below the start onto the wedge edge.
            if rel > TAU - tol {
                rel = 0.0;
            }
            let excess = (rel - c.width).max(0.0);
            if best.is_none_or(|(e, _)| excess < e) {
                let rel = rel.min(c.width);
                let link = c.offset + f64::from(c.orientation) * rel;
                best = Some((excess, geom::wrap_mod(link, self.angle)));
            }
        }
        best.filter(|(e, _)| *e <= 1e-9).map(|(_, l)| l)
    }

    /// Inverse of [`link_coordinate`](Self::link_coordinate): the sheet and chart angle.
    pub fn chart_direction(&self, link: f64) -> (usize, f64) {
        let link = geom::wrap_mod(link, self.angle);
        let mut best = (f64::INFINITY, 0usize, 0.0f64);
        for c in &self.corners {
            // Distance in the link from `link` to this corner's interval.
            let (lo, hi) = if c.orientation > 0 {
                (c.offset, c.offset + c.width)
            } else {
                (c.offset - c.width, c.offset)
            };
            let mut local = geom::wrap_mod(link - lo, self.angle);
            if local > hi - lo && self.angle - local < 1e-12 {
                local = 0.0;
            }
            let miss = if local <= hi - lo { 0.0 } else { local - (hi - lo) };
            if miss < best.0 {
                let l = local.min(hi - lo) + lo;
                let rel = if c.orientation > 0 { l - c.offset } else { c.offset - l };
                best = (miss, c.sheet, geom::wrap_angle(c.start + rel));
            }
        }
        (best.1, best.2)
    }

    /// Sum of the incident wedge angles, recomputed from the corner data.
    pub fn wedge_sum(&self) -> f64 {
        self.corners.iter().map(|c| c.width).sum()
    }
}

/// A point of the surface interior, given in a sheet chart.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfacePoint {
    pub sheet: usize,
    pub pos: Vec2,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Location {
    Interior(SurfacePoint),
    OnEdge { sheet: usize, edge: usize },
    AtConePoint { cone: usize, distance: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeSurface {
    pub sheets: Vec<Sheet>,
    pub edges: Vec<Edge>,
    pub gluings: Vec<Gluing>,
    pub cone_points: Vec<ConePoint>,
    /// Solid obstacle regions, identical on every sheet.
    pub obstacles: Vec<Vec<Vec2>>,
    pub r0: f64,
    pub euclidean_radius: f64,
    pub eps_hit: f64,
    pub bc: BoundaryCondition,
    pub metric: MetricKind,
}

/// Builds the doubled exterior of a polygon scene.
pub fn double_exterior(scene: &PolygonScene) -> Result<ConeSurface> {
    if !scene.slits.is_empty() {
        return Err(Error::InvalidScene(
            "scene has slits; use the branched cover construction".into(),
        ));
    }
    scene.validate()?;
    let scene = scene.normalized();
    let mut edges = Vec::new();
    let mut cones = Vec::new();
    for l in &scene.obstacles {
        let n = l.len();
        let base = cones.len();
        for i in 0..n {
            let (p, v, q) = (l[(i + n - 1) % n], l[i], l[(i + 1) % n]);
            let back = (p - v).angle();
            let interior = geom::wrap_angle(back - (q - v).angle());
            let width = TAU - interior;
            cones.push(ConePoint {
                id: base + i,
                position: v,
                angle: 2.0 * (TAU - interior),
                corners: vec![
                    Corner {
                        sheet: 0,
                        start: back,
                        width,
                        orientation: 1,
                        offset: 0.0,
                    },
                    Corner {
                        sheet: 1,
                        start: back,
                        width,
                        orientation: -1,
                        offset: 2.0 * width,
                    },
                ],
            });
            edges.push(Edge {
                a: v,
                b: q,
                cone_a: base + i,
                cone_b: base + (i + 1) % n,
            });
        }
    }
    let gluings = (0..edges.len())
        .map(|e| Gluing {
            edge: e,
            sheets: [0, 1],
            kind: GluingKind::Mirror,
        })
        .collect();
    Ok(ConeSurface {
        sheets: vec![Sheet { id: 0 }, Sheet { id: 1 }],
        edges,
        gluings,
        cone_points: cones,
        eps_hit: 1e-9 * scene.diameter(),
        obstacles: scene.obstacles.clone(),
        r0: scene.r0,
        euclidean_radius: scene.r1,
        bc: scene.bc,
        metric: MetricKind::Flat,
    })
}

/// Builds the two-sheeted cover of the plane branched along the scene's slits.
pub fn branched_cover(scene: &PolygonScene) -> Result<ConeSurface> {
    if !scene.obstacles.is_empty() {
        return Err(Error::Unsupported(
            "branched covers with solid obstacles".into(),
        ));
    }
    scene.validate()?;
    let mut edges = Vec::new();
    let mut cones = Vec::new();
    for s in &scene.slits {
        let ids = [cones.len(), cones.len() + 1];
        for (k, (v, w)) in [(s[0], s[1]), (s[1], s[0])].into_iter().enumerate() {
            let start = (w - v).angle();
            cones.push(ConePoint {
                id: ids[k],
                position: v,
                angle: 2.0 * TAU,
                corners: vec![
                    Corner {
                        sheet: 0,
                        start,
                        width: TAU,
                        orientation: 1,
                        offset: 0.0,
                    },
                    Corner {
                        sheet: 1,
                        start,
                        width: TAU,
                        orientation: 1,
                        offset: TAU,
                    },
                ],
            });
        }
        edges.push(Edge {
            a: s[0],
            b: s[1],
            cone_a: ids[0],
            cone_b: ids[1],
        });
    }
    let gluings = (0..edges.len())
        .map(|e| Gluing {
            edge: e,
            sheets: [0, 1],
            kind: GluingKind::Transit,
        })
        .collect();
    Ok(ConeSurface {
        sheets: vec![Sheet { id: 0 }, Sheet { id: 1 }],
        edges,
        gluings,
        cone_points: cones,
        obstacles: Vec::new(),
        eps_hit: 1e-9 * scene.diameter(),
        r0: scene.r0,
        euclidean_radius: scene.r1,
        bc: scene.bc,
        metric: MetricKind::Flat,
    })
}

/// Doubles polygon scenes and branches slit scenes.
pub fn surface_from_scene(scene: &PolygonScene) -> Result<ConeSurface> {
    if scene.slits.is_empty() {
        double_exterior(scene)
    } else {
        branched_cover(scene)
    }
}

impl ConeSurface {
    pub fn load(path: &Path) -> Result<Self> {
        let s: ConeSurface = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        s.audit()?;
        Ok(s)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("surface serializes")
    }

    pub fn with_eps_hit(mut self, eps: f64) -> Self {
        self.eps_hit = eps;
        self
    }

    /// The sheet glued to `sheet` across `edge`, with the gluing kind.
    pub fn across(&self, sheet: usize, edge: usize) -> (usize, GluingKind) {
        let g = &self.gluings[edge];
        debug_assert_eq!(g.edge, edge);
        let other = if g.sheets[0] == sheet {
            g.sheets[1]
        } else {
            g.sheets[0]
        };
        (other, g.kind)
    }

    /// Verifies gluing bookkeeping and the stored cone angles.
    pub fn audit(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidScene(m));
        let mut seen = vec![vec![0usize; self.edges.len()]; self.sheets.len()];
        for g in &self.gluings {
            let e = self.edges.get(g.edge);
            if e.is_none() || g.sheets.iter().any(|s| *s >= self.sheets.len()) {
                return bad(format!("gluing {:?} references a missing edge or sheet", g));
            }
            for s in g.sheets {
                seen[s][g.edge] += 1;
            }
        }
        if seen.iter().flatten().any(|c| *c != 1) {
            return bad("every (sheet, edge) must appear in exactly one gluing".into());
        }
        for c in &self.cone_points {
            if !(c.angle > 0.0) {
                return bad(format!("cone {} has non-positive angle", c.id));
            }
            if (c.angle - TAU).abs() <= 1e-12 * TAU {
                return bad(format!("cone {} has angle 2π (removable)", c.id));
            }
            if (c.wedge_sum() - c.angle).abs() > 1e-12 * c.angle {
                return bad(format!("cone {} angle does not match its wedges", c.id));
            }
        }
        Ok(())
    }

    pub fn diameter(&self) -> f64 {
        let mut d = 0.0f64;
        for a in &self.cone_points {
            for b in &self.cone_points {
                d = d.max(a.position.dist(b.position));
            }
        }
        if d == 0.0 {
            self.r0
        } else {
            d
        }
    }

    /// True when `p` lies strictly inside a solid obstacle.
    pub fn is_interior_of_obstacle(&self, p: Vec2) -> bool {
        self.obstacles.iter().any(|l| {
            point_in_polygon(p, l) && {
                let n = l.len();
                (0..n).all(|i| point_segment_distance(p, l[i], l[(i + 1) % n]) > 1e-12)
            }
        })
    }

    pub fn locate(&self, sheet: usize, pos: Vec2) -> Result<Location> {
        if !pos.is_finite() || sheet >= self.sheets.len() {
            return Err(Error::InvalidArgument(format!(
                "bad query point {:?} on sheet {sheet}",
                pos
            )));
        }
        for c in &self.cone_points {
            let d = c.position.dist(pos);
            if d < self.eps_hit {
                return Ok(Location::AtConePoint {
                    cone: c.id,
                    distance: d,
                });
            }
        }
        if self.is_interior_of_obstacle(pos) {
            return Err(Error::InteriorPoint { x: pos.x, y: pos.y });
        }
        for (i, e) in self.edges.iter().enumerate() {
            if point_segment_distance(pos, e.a, e.b) < self.eps_hit {
                return Ok(Location::OnEdge { sheet, edge: i });
            }
        }
        Ok(Location::Interior(SurfacePoint { sheet, pos }))
    }

    /// Whether the closed segment `[a, b]` stays in the closed exterior of every
    /// solid obstacle. Slits do not block (a branched cover is crossed, not hit).
    pub fn segment_clear(&self, a: Vec2, b: Vec2) -> bool {
        let d = b - a;
        let mut ts = vec![0.0, 1.0];
        for l in &self.obstacles {
            let n = l.len();
            for i in 0..n {
                let (p, q) = (l[i], l[(i + 1) % n]);
                for v in [p, q] {
                    let t = (v - a).dot(d) / d.norm_sq();
                    if (0.0..=1.0).contains(&t) && point_segment_distance(v, a, b) < 1e-12 {
                        ts.push(t);
                    }
                }
                if let Some((t, _)) = geom::ray_segment(a, d, p, q) {
                    if (0.0..=1.0).contains(&t) {
                        ts.push(t);
                    }
                }
            }
        }
        ts.sort_by(f64::total_cmp);
        ts.windows(2)
            .filter(|w| w[1] - w[0] > 1e-12)
            .all(|w| !self.is_interior_of_obstacle(a + d * (0.5 * (w[0] + w[1]))))
    }

    /// Exterior shortest-path distance between two cone points.
    ///
    /// Sheet swap maps any path onto sheet 0 without changing its length, so the
    /// surface distance equals the closed-exterior distance in one chart.
    pub fn cone_distance_matrix(&self) -> Vec<Vec<f64>> {
        let n = self.cone_points.len();
        let mut d = vec![vec![f64::INFINITY; n]; n];
        for i in 0..n {
            d[i][i] = 0.0;
            for j in i + 1..n {
                let (a, b) = (self.cone_points[i].position, self.cone_points[j].position);
                if self.segment_clear(a, b) {
                    d[i][j] = a.dist(b);
                    d[j][i] = d[i][j];
                }
            }
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let via = d[i][k] + d[k][j];
                    if via < d[i][j] {
                        d[i][j] = via;
                    }
                }
            }
        }
        d
    }
}

impl ConeSurface {
    /// Closed-exterior shortest-path distances from `p` to every cone point.
    fn distances_to_cones(&self, p: Vec2, cones: &[Vec<f64>]) -> Vec<f64> {
        let n = self.cone_points.len();
        let direct: Vec<f64> = self
            .cone_points
            .iter()
            .map(|c| {
                if self.segment_clear(p, c.position) {
                    p.dist(c.position)
                } else {
                    f64::INFINITY
                }
            })
            .collect();
        (0..n)
            .map(|j| (0..n).map(|k| direct[k] + cones[k][j]).fold(f64::INFINITY, f64::min))
            .collect()
    }

    fn exterior_distance(&self, p: Vec2, dp: &[f64], x: Vec2) -> f64 {
        let mut best = if self.segment_clear(p, x) {
            p.dist(x)
        } else {
            f64::INFINITY
        };
        for (c, d) in self.cone_points.iter().zip(dp) {
            if d.is_finite() && self.segment_clear(c.position, x) {
                best = best.min(d + c.position.dist(x));
            }
        }
        best
    }

    /// Geodesic distance between two surface points.
    ///
    /// Points on the same sheet are joined through the closed exterior; points
    /// on different sheets must pass through a glued edge. On branched covers a
    /// straight chart segment lands on the sheet given by its crossing parity;
    /// otherwise the path bends at one cone point.
    pub fn distance(&self, p: SurfacePoint, q: SurfacePoint) -> f64 {
        if self.gluings.iter().any(|g| g.kind == GluingKind::Transit) {
            let crossings = self
                .edges
                .iter()
                .filter(|e| geom::segments_intersect(p.pos, q.pos, e.a, e.b))
                .count();
            let straight = if (crossings % 2 == 1) == (p.sheet != q.sheet) {
                p.pos.dist(q.pos)
            } else {
                f64::INFINITY
            };
            return self
                .cone_points
                .iter()
                .map(|c| p.pos.dist(c.position) + c.position.dist(q.pos))
                .fold(straight, f64::min);
        }
        let cones = self.cone_distance_matrix();
        let dp = self.distances_to_cones(p.pos, &cones);
        if p.sheet == q.sheet {
            return self.exterior_distance(p.pos, &dp, q.pos);
        }
        let dq = self.distances_to_cones(q.pos, &cones);
        // A cone lies on both sheets, so any path through one costs dp + dq.
        let mut best = dp.iter().zip(&dq).map(|(a, b)| a + b).fold(f64::INFINITY, f64::min);
        // Otherwise the path crosses one edge at an interior point: unfold the
        // far part by reflecting its start across the edge line.
        let from: Vec<(Vec2, f64)> = std::iter::once((p.pos, 0.0))
            .chain(self.cone_points.iter().map(|c| c.position).zip(dp.iter().copied()))
            .filter(|(_, d)| d.is_finite())
            .collect();
        let to: Vec<(Vec2, f64)> = std::iter::once((q.pos, 0.0))
            .chain(self.cone_points.iter().map(|c| c.position).zip(dq.iter().copied()))
            .filter(|(_, d)| d.is_finite())
            .collect();
        for e in &self.edges {
            let t = e.b - e.a;
            if t.norm_sq() == 0.0 {
                continue;
            }
            let n = t.perp().normalized();
            for (u, du) in &from {
                for (v, dv) in &to {
                    let v2 = *v - n * (2.0 * (*v - e.a).dot(n));
                    let len = u.dist(v2);
                    if du + dv + len >= best {
                        continue;
                    }
                    let Some((s, w)) = geom::ray_segment(*u, v2 - *u, e.a, e.b) else {
                        continue;
                    };
                    if !(1e-12..=1.0 - 1e-12).contains(&w) || !(0.0..=1.0).contains(&s) {
                        continue;
                    }
                    let x = e.a + t * w;
                    if self.segment_clear(*u, x) && self.segment_clear(x, *v) {
                        best = du + dv + len;
                    }
                }
            }
        }
        best
    }
}

/// Minimum surface distance between two distinct cone points; `+∞` (with a
/// warning) when fewer than two exist.
pub fn min_cone_distance(surface: &ConeSurface) -> f64 {
    let n = surface.cone_points.len();
    if n < 2 {
        warn!("min_cone_distance: surface has {n} cone point(s); returning +inf");
        return f64::INFINITY;
    }
    let d = surface.cone_distance_matrix();
    let mut best = f64::INFINITY;
    for (i, row) in d.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            if i != j {
                best = best.min(*v);
            }
        }
    }
    best
}

/// Convenience: interior angle of a polygon vertex, in `(0, 2π)`.
pub fn interior_angle(prev: Vec2, v: Vec2, next: Vec2) -> f64 {
    geom::wrap_angle((prev - v).angle() - (next - v).angle())
}

/// Axis-aligned square obstacle of side `side` centred at the origin.
pub fn square_scene(side: f64, r0: f64, r1: f64, bc: BoundaryCondition) -> PolygonScene {
    let h = side / 2.0;
    PolygonScene::new(
        vec![vec![
            Vec2::new(-h, -h),
            Vec2::new(h, -h),
            Vec2::new(h, h),
            Vec2::new(-h, h),
        ]],
        r0,
        r1,
        bc,
    )
}

/// The two-obstacle example with a trapped diffractive orbit on `y = 0`
/// between the edge point `(-1, 0)` and the vertex `(1, 0)`.
pub fn facing_obstacles_scene() -> PolygonScene {
    PolygonScene::new(
        vec![
            vec![
                Vec2::new(-1.0, -1.0),
                Vec2::new(-3.0, -2.0),
                Vec2::new(-3.0, 1.0),
                Vec2::new(-1.0, 1.0),
            ],
            vec![Vec2::new(1.0, 0.0), Vec2::new(4.0, 1.0), Vec2::new(3.0, -2.0)],
        ],
        5.0,
        6.0,
        BoundaryCondition::Dirichlet,
    )
}

/// Three horizontal slits whose inner endpoints lie on the line `x = 0`,
/// alternating sides, so the vertical line through them is a geometric
/// geodesic meeting three cone points.
pub fn triple_slit_scene() -> PolygonScene {
    PolygonScene {
        obstacles: Vec::new(),
        slits: vec![
            [Vec2::new(0.0, -1.0), Vec2::new(1.5, -1.0)],
            [Vec2::new(0.0, 0.0), Vec2::new(-1.5, 0.0)],
            [Vec2::new(0.0, 1.0), Vec2::new(1.5, 1.0)],
        ],
        r0: 3.0,
        r1: 4.0,
        bc: BoundaryCondition::Dirichlet,
    }
}
