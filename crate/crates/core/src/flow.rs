//! Geodesic flow on a flat cone surface.
//!
//! Away from cone points geodesics are straight chart segments; crossing a
//! glued edge moves the ray to the twin sheet (mirrored for doubled
//! exteriors). At a cone point the ray may continue along any outgoing link
//! direction; continuations at link distance exactly π are geometric, all
//! others strictly diffractive.

use crate::geom::{self, circle_distance, Vec2};
use crate::surface::{ConePoint, ConeSurface, GluingKind, SurfacePoint};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt::Write as _;

/// Default band for classifying an interaction as geometric, in radians.
pub const TOL_G: f64 = 1e-7;
/// Default cap on the number of chains a single trace may produce.
pub const BRANCH_CAP: usize = 1_000_000;

/// What the ray last touched; used to suppress re-detection at `t = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Anchor {
    #[default]
    Free,
    Edge(usize),
    Cone(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RayState {
    pub point: SurfacePoint,
    pub dir: Vec2,
    pub time: f64,
    #[serde(default)]
    pub anchor: Anchor,
}

impl RayState {
    pub fn new(sheet: usize, pos: Vec2, theta: f64) -> Self {
        RayState {
            point: SurfacePoint { sheet, pos },
            dir: Vec2::from_angle(theta),
            time: 0.0,
            anchor: Anchor::Free,
        }
    }

    /// The reversed state (same point, opposite direction).
    pub fn reversed(&self) -> Self {
        RayState {
            dir: -self.dir,
            time: 0.0,
            ..*self
        }
    }

    /// Leaves cone `cone` along link coordinate `link`.
    pub fn depart(cone: &ConePoint, link: f64, time: f64) -> Self {
        let (sheet, phi) = cone.chart_direction(link);
        RayState {
            point: SurfacePoint {
                sheet,
                pos: cone.position,
            },
            dir: Vec2::from_angle(phi),
            time,
            anchor: Anchor::Cone(cone.id),
        }
    }

    /// Whether the state lies in the outgoing set outside the ball of radius `r1`.
    pub fn is_outgoing(&self, r1: f64) -> bool {
        self.point.pos.norm() >= r1 * (1.0 - 1e-12) && self.point.pos.dot(self.dir) > 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub start: SurfacePoint,
    pub dir: Vec2,
    pub length: f64,
}

impl Segment {
    pub fn end(&self) -> Vec2 {
        self.start.pos + self.dir * self.length
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Hit {
    ConePoint { cone: usize, link_in: f64 },
    EdgeCross { edge: usize, next: RayState },
    EscapeSphere,
    Horizon,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InteractionKind {
    Geometric,
    DiffractiveStrict,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interaction {
    pub cone: usize,
    pub t_in: f64,
    pub link_in: f64,
    pub link_out: f64,
    pub kind: InteractionKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Terminal {
    Escaped,
    Horizon,
    AtConePoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeodesicChain {
    pub start: RayState,
    pub segments: Vec<Segment>,
    pub interactions: Vec<Interaction>,
    /// Index into `segments` of the segment ending at each interaction.
    pub interaction_segments: Vec<usize>,
    pub total_time: f64,
    pub terminal: Terminal,
    /// Final state (for `AtConePoint` the arrival state).
    pub last: RayState,
}

impl GeodesicChain {
    fn new(start: RayState) -> Self {
        GeodesicChain {
            start,
            segments: Vec::new(),
            interactions: Vec::new(),
            interaction_segments: Vec::new(),
            total_time: 0.0,
            terminal: Terminal::Horizon,
            last: start,
        }
    }

    /// Cone points visited, in order.
    pub fn cones(&self) -> Vec<usize> {
        self.interactions.iter().map(|i| i.cone).collect()
    }

    /// Chains with two or more geometric interactions may fail to be globally
    /// approximable by unbroken geodesics. They are flagged, not excluded.
    pub fn possibly_non_approximable(&self) -> bool {
        self.interactions
            .iter()
            .filter(|i| i.kind == InteractionKind::Geometric)
            .count()
            >= 2
    }

    /// Position, sheet and direction at arc length `t` from the start. Escaped
    /// chains are extended straight past the sphere (nothing lies beyond it).
    pub fn state_at(&self, t: f64) -> Option<(SurfacePoint, Vec2)> {
        let t = t - self.start.time;
        let mut acc = 0.0;
        for s in &self.segments {
            if t <= acc + s.length {
                let pos = s.start.pos + s.dir * (t - acc).max(0.0);
                return Some((
                    SurfacePoint {
                        sheet: s.start.sheet,
                        pos,
                    },
                    s.dir,
                ));
            }
            acc += s.length;
        }
        match self.terminal {
            Terminal::Escaped => Some((
                SurfacePoint {
                    sheet: self.last.point.sheet,
                    pos: self.last.point.pos + self.last.dir * (t - acc),
                },
                self.last.dir,
            )),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ContinuationPolicy {
    GeometricBranch,
    /// `k` outgoing links equispaced around the link, starting at the arrival point.
    DiffractiveFan(usize),
    Stop,
}

impl std::str::FromStr for ContinuationPolicy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "geometric" => Ok(Self::GeometricBranch),
            "stop" => Ok(Self::Stop),
            _ => {
                let k = s
                    .strip_prefix("fan:")
                    .and_then(|k| k.parse::<usize>().ok())
                    .filter(|k| *k >= 1)
                    .ok_or_else(|| Error::InvalidArgument(format!("unknown policy {s:?}")))?;
                Ok(Self::DiffractiveFan(k))
            }
        }
    }
}

/// Arc distance in the link between two link coordinates.
pub fn link_distance(cone: &ConePoint, a: f64, b: f64) -> f64 {
    circle_distance(a, b, cone.angle)
}

pub fn classify(cone: &ConePoint, link_in: f64, link_out: f64, tol_g: f64) -> InteractionKind {
    if (link_distance(cone, link_in, link_out) - PI).abs() <= tol_g {
        InteractionKind::Geometric
    } else {
        InteractionKind::DiffractiveStrict
    }
}

/// Outgoing link coordinates allowed by `policy` after arriving at `link_in`.
pub fn continuations(cone: &ConePoint, link_in: f64, policy: ContinuationPolicy) -> Vec<f64> {
    let theta = cone.angle;
    match policy {
        ContinuationPolicy::Stop => Vec::new(),
        ContinuationPolicy::DiffractiveFan(k) => (0..k)
            .map(|j| geom::wrap_mod(link_in + theta * j as f64 / k as f64, theta))
            .collect(),
        ContinuationPolicy::GeometricBranch => {
            // Arc distance never exceeds Θ/2, so nothing sits at distance π when Θ < 2π.
            if theta < 2.0 * PI * (1.0 - 1e-12) {
                return Vec::new();
            }
            let a = geom::wrap_mod(link_in + PI, theta);
            let b = geom::wrap_mod(link_in - PI, theta);
            if circle_distance(a, b, theta) < 1e-12 {
                vec![a]
            } else {
                vec![a, b]
            }
        }
    }
}

/// Advances a ray along its straight chart segment until the first event or
/// until `max_len` of arc length has been used.
pub fn step(surface: &ConeSurface, ray: &RayState, max_len: f64) -> (Segment, Hit) {
    let z = ray.point.pos;
    let d = ray.dir;
    let sheet = ray.point.sheet;
    let eps = surface.eps_hit;
    let t_min = 1e-12 * surface.r0.max(1.0);
    let r1 = surface.euclidean_radius;
    let seg = |len: f64| Segment {
        start: ray.point,
        dir: d,
        length: len,
    };

    if ray.is_outgoing(r1) {
        return (seg(0.0), Hit::EscapeSphere);
    }
    let t_escape = geom::circle_exit_time(z, d, r1)
        .unwrap_or(-z.dot(d))
        .max(0.0);

    let mut best_t = t_escape;
    let mut best = Hit::EscapeSphere;

    let anchor_cone = match ray.anchor {
        Anchor::Cone(c) => Some(c),
        _ => None,
    };
    let cone_hit = |c: &ConePoint, t: f64, best_t: &mut f64, best: &mut Hit| {
        if t < *best_t + eps {
            let link_in = c
                .link_coordinate(sheet, (-d).angle())
                .unwrap_or_else(|| nearest_link(c, sheet, (-d).angle()));
            *best_t = t.min(*best_t);
            *best = Hit::ConePoint {
                cone: c.id,
                link_in,
            };
        }
    };

    for c in &surface.cone_points {
        if Some(c.id) == anchor_cone || !c.corners.iter().any(|k| k.sheet == sheet) {
            continue;
        }
        let w = c.position - z;
        let t = w.dot(d);
        if t > t_min && d.cross(w).abs() < eps {
            cone_hit(c, t, &mut best_t, &mut best);
        }
    }

    for (i, e) in surface.edges.iter().enumerate() {
        if ray.anchor == Anchor::Edge(i) {
            continue;
        }
        let Some((t, _)) = geom::ray_segment(z, d, e.a, e.b) else {
            continue;
        };
        if t <= t_min || t >= best_t + eps {
            continue;
        }
        let p = z + d * t;
        let near = [(e.a, e.cone_a), (e.b, e.cone_b)]
            .into_iter()
            .find(|(v, _)| p.dist(*v) < eps);
        if let Some((v, cid)) = near {
            if Some(cid) == anchor_cone {
                continue;
            }
            // Grazing an edge end: treat as reaching the cone point.
            let t_v = (v - z).dot(d);
            cone_hit(&surface.cone_points[cid], t_v, &mut best_t, &mut best);
            continue;
        }
        if t < best_t {
            let (other, kind) = surface.across(sheet, i);
            let dir = match kind {
                GluingKind::Mirror => d.reflect_across(e.b - e.a),
                GluingKind::Transit => d,
            };
            best_t = t;
            best = Hit::EdgeCross {
                edge: i,
                next: RayState {
                    point: SurfacePoint {
                        sheet: other,
                        pos: p,
                    },
                    dir,
                    time: ray.time + t,
                    anchor: Anchor::Edge(i),
                },
            };
        }
    }

    if best_t > max_len {
        return (seg(max_len.max(0.0)), Hit::Horizon);
    }
    (seg(best_t), best)
}

fn nearest_link(c: &ConePoint, sheet: usize, phi: f64) -> f64 {
    let mut best = (f64::INFINITY, 0.0);
    for k in c.corners.iter().filter(|k| k.sheet == sheet) {
        for (edge_rel, link) in [
            (0.0, k.offset),
            (k.width, k.offset + f64::from(k.orientation) * k.width),
        ] {
            let miss = circle_distance(phi, k.start + edge_rel, 2.0 * PI);
            if miss < best.0 {
                best = (miss, geom::wrap_mod(link, c.angle));
            }
        }
    }
    best.1
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceOptions {
    pub branch_cap: usize,
    pub tol_g: f64,
}

impl Default for TraceOptions {
    fn default() -> Self {
        TraceOptions {
            branch_cap: BRANCH_CAP,
            tol_g: TOL_G,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceResult {
    pub chains: Vec<GeodesicChain>,
    pub truncated: bool,
}

/// Expands every chain from `start` up to arc length `horizon`.
pub fn trace(
    surface: &ConeSurface,
    start: &RayState,
    horizon: f64,
    policy: ContinuationPolicy,
) -> TraceResult {
    trace_with(surface, start, horizon, policy, TraceOptions::default())
}

pub fn trace_with(
    surface: &ConeSurface,
    start: &RayState,
    horizon: f64,
    policy: ContinuationPolicy,
    opts: TraceOptions,
) -> TraceResult {
    let mut done = Vec::new();
    let mut truncated = false;
    let mut stack = vec![(GeodesicChain::new(*start), *start)];
    let t_end = start.time + horizon;
    while let Some((mut chain, mut ray)) = stack.pop() {
        loop {
            let (seg, hit) = step(surface, &ray, t_end - ray.time);
            if seg.length > 0.0 || chain.segments.is_empty() {
                chain.segments.push(seg);
            }
            chain.total_time += seg.length;
            let t_here = ray.time + seg.length;
            match hit {
                Hit::EdgeCross { next, .. } => {
                    ray = next;
                }
                Hit::Horizon | Hit::EscapeSphere => {
                    chain.terminal = if hit == Hit::Horizon {
                        Terminal::Horizon
                    } else {
                        Terminal::Escaped
                    };
                    chain.last = RayState {
                        point: SurfacePoint {
                            sheet: ray.point.sheet,
                            pos: seg.end(),
                        },
                        time: t_here,
                        ..ray
                    };
                    done.push(chain);
                    break;
                }
                Hit::ConePoint { cone, link_in } => {
                    let c = &surface.cone_points[cone];
                    let outs = continuations(c, link_in, policy);
                    chain.last = RayState {
                        point: SurfacePoint {
                            sheet: ray.point.sheet,
                            pos: c.position,
                        },
                        time: t_here,
                        anchor: Anchor::Cone(cone),
                        ..ray
                    };
                    if outs.is_empty() {
                        chain.terminal = Terminal::AtConePoint;
                        done.push(chain);
                        break;
                    }
                    let seg_index = chain.segments.len() - 1;
                    for link_out in outs.into_iter().rev() {
                        if done.len() + stack.len() >= opts.branch_cap {
                            truncated = true;
                            break;
                        }
                        let mut next_chain = chain.clone();
                        next_chain.interactions.push(Interaction {
                            cone,
                            t_in: t_here,
                            link_in,
                            link_out,
                            kind: classify(c, link_in, link_out, opts.tol_g),
                        });
                        next_chain.interaction_segments.push(seg_index);
                        stack.push((next_chain, RayState::depart(c, link_out, t_here)));
                    }
                    break;
                }
            }
        }
        if truncated {
            break;
        }
    }
    TraceResult {
        chains: done,
        truncated,
    }
}

/// Three-valued answer of a relation query.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    Related,
    NotRelated,
    Indeterminate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RelationKind {
    Geometric,
    Diffractive,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelateOptions {
    /// Initial fan resolution for diffractive continuations.
    pub fan: usize,
    /// Golden-section iterations when polishing a fan sample.
    pub polish_iters: usize,
    /// Polished seeds per cone point.
    pub polish_seeds: usize,
    /// Budget of `step` calls before giving up with `Indeterminate`.
    pub step_budget: usize,
}

impl Default for RelateOptions {
    fn default() -> Self {
        RelateOptions {
            fan: 64,
            polish_iters: 60,
            polish_seeds: 3,
            step_budget: 2_000_000,
        }
    }
}

/// Combined position + direction mismatch between a state and a target.
fn mismatch(at: (SurfacePoint, Vec2), q: &RayState) -> f64 {
    if at.0.sheet != q.point.sheet {
        return f64::INFINITY;
    }
    at.0.pos.dist(q.point.pos).max(at.1.dist(q.dir))
}

struct RelSearch<'a> {
    surface: &'a ConeSurface,
    q: RayState,
    kind: RelationKind,
    opts: RelateOptions,
    steps: usize,
    tol: f64,
}

impl RelSearch<'_> {
    /// Smallest mismatch reachable from `ray` after exactly `remaining` arc length.
    fn best(&mut self, ray: RayState, remaining: f64) -> f64 {
        let mut ray = ray;
        let mut remaining = remaining;
        loop {
            if self.steps >= self.opts.step_budget {
                return f64::INFINITY;
            }
            self.steps += 1;
            let (seg, hit) = step(self.surface, &ray, remaining);
            match hit {
                Hit::EdgeCross { next, .. } => {
                    remaining -= seg.length;
                    ray = next;
                }
                Hit::Horizon => {
                    let at = (
                        SurfacePoint {
                            sheet: ray.point.sheet,
                            pos: seg.start.pos + ray.dir * remaining,
                        },
                        ray.dir,
                    );
                    return mismatch(at, &self.q);
                }
                Hit::EscapeSphere => {
                    let at = (
                        SurfacePoint {
                            sheet: ray.point.sheet,
                            pos: seg.start.pos + ray.dir * remaining,
                        },
                        ray.dir,
                    );
                    return mismatch(at, &self.q);
                }
                Hit::ConePoint { cone, link_in } => {
                    let rest = remaining - seg.length;
                    let c = &self.surface.cone_points[cone];
                    if rest <= 0.0 {
                        return if c.corners.iter().any(|k| k.sheet == self.q.point.sheet) {
                            c.position.dist(self.q.point.pos)
                        } else {
                            f64::INFINITY
                        };
                    }
                    let t_here = ray.time + seg.length;
                    return self.at_cone(c, link_in, t_here, rest);
                }
            }
        }
    }

    fn at_cone(&mut self, c: &ConePoint, link_in: f64, t_here: f64, rest: f64) -> f64 {
        let mut best = f64::INFINITY;
        let geo = continuations(c, link_in, ContinuationPolicy::GeometricBranch);
        for l in &geo {
            best = best.min(self.best(RayState::depart(c, *l, t_here), rest));
            if best <= self.tol {
                return best;
            }
        }
        if self.kind == RelationKind::Geometric {
            return best;
        }
        let k = self.opts.fan.max(1);
        let width = c.angle / k as f64;
        let mut samples: Vec<(f64, f64)> = (0..k)
            .map(|j| geom::wrap_mod(link_in + width * j as f64, c.angle))
            .map(|l| (self.best(RayState::depart(c, l, t_here), rest), l))
            .collect();
        samples.extend(geo.iter().map(|l| (best, *l)));
        samples.sort_by(|a, b| a.0.total_cmp(&b.0));
        best = best.min(samples[0].0);
        for &(_, seed) in samples.iter().take(self.opts.polish_seeds) {
            if best <= self.tol {
                break;
            }
            best = best.min(self.polish(c, seed, width, t_here, rest));
        }
        best
    }

    /// Golden-section minimisation of the mismatch over `[seed − width, seed + width]`.
    fn polish(&mut self, c: &ConePoint, seed: f64, width: f64, t_here: f64, rest: f64) -> f64 {
        let g = (5f64.sqrt() - 1.0) / 2.0;
        let (mut a, mut b) = (seed - width, seed + width);
        let f = |s: &mut Self, l: f64| s.best(RayState::depart(c, l, t_here), rest);
        let mut x1 = b - g * (b - a);
        let mut x2 = a + g * (b - a);
        let mut f1 = f(self, x1);
        let mut f2 = f(self, x2);
        for _ in 0..self.opts.polish_iters {
            if f1.min(f2) <= self.tol {
                break;
            }
            if f1 < f2 {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - g * (b - a);
                f1 = f(self, x1);
            } else {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + g * (b - a);
                f2 = f(self, x2);
            }
        }
        f1.min(f2)
    }
}

/// Decides `p ∼_{G,t} q` or `p ∼_{D,t} q` to within `tol` in position and direction.
pub fn relates(
    surface: &ConeSurface,
    p: &RayState,
    q: &RayState,
    t: f64,
    kind: RelationKind,
    tol: f64,
) -> Result<Relation> {
    relates_with(surface, p, q, t, kind, tol, RelateOptions::default())
}

pub fn relates_with(
    surface: &ConeSurface,
    p: &RayState,
    q: &RayState,
    t: f64,
    kind: RelationKind,
    tol: f64,
    opts: RelateOptions,
) -> Result<Relation> {
    Ok(relation_miss(surface, p, q, t, kind, tol, opts)?.0)
}

/// Like [`relates_with`] but also returns the smallest mismatch found.
pub fn relation_miss(
    surface: &ConeSurface,
    p: &RayState,
    q: &RayState,
    t: f64,
    kind: RelationKind,
    tol: f64,
    opts: RelateOptions,
) -> Result<(Relation, f64)> {
    if !(t > 0.0) {
        return Err(Error::InvalidArgument(format!("relation time must be > 0, got {t}")));
    }
    let mut s = RelSearch {
        surface,
        q: *q,
        kind,
        opts,
        steps: 0,
        tol,
    };
    let m = s.best(*p, t);
    let rel = if m <= tol {
        Relation::Related
    } else if s.steps >= opts.step_budget {
        Relation::Indeterminate
    } else {
        Relation::NotRelated
    };
    Ok((rel, m))
}

/// Link distance between the entry and exit points of a ray that passes cone
/// `cone` at impact parameter `b`, measured where the ray crosses the circle of
/// radius `r` around the cone. Tends to π as `b → 0`.
pub fn passage_link_distance(surface: &ConeSurface, cone: usize, b: f64, r: f64) -> Result<f64> {
    let c = &surface.cone_points[cone];
    let corner = c
        .corners
        .iter()
        .find(|k| k.sheet == 0)
        .ok_or_else(|| Error::InvalidArgument("cone has no corner on sheet 0".into()))?;
    let u = Vec2::from_angle(corner.start + corner.width / 2.0);
    let d = -u;
    let start = c.position + u * (2.0 * r) + u.perp() * b;
    let ray = RayState {
        point: SurfacePoint {
            sheet: 0,
            pos: start,
        },
        dir: d,
        time: 0.0,
        anchor: Anchor::Free,
    };
    let res = trace(surface, &ray, 4.0 * r, ContinuationPolicy::Stop);
    let chain = &res.chains[0];
    if !chain.interactions.is_empty() || chain.terminal == Terminal::AtConePoint {
        return Err(Error::InvalidArgument(format!(
            "impact parameter {b} hit the cone point"
        )));
    }
    let mut crossings = Vec::new();
    for s in &chain.segments {
        let w = s.start.pos - c.position;
        let bq = w.dot(s.dir);
        let disc = bq * bq - (w.norm_sq() - r * r);
        if disc < 0.0 {
            continue;
        }
        for t in [-bq - disc.sqrt(), -bq + disc.sqrt()] {
            if t >= 0.0 && t <= s.length {
                let p = s.start.pos + s.dir * t;
                crossings.push((s.start.sheet, (p - c.position).angle()));
            }
        }
    }
    if crossings.len() < 2 {
        return Err(Error::InvalidArgument("ray does not cross the probe circle twice".into()));
    }
    let (s_in, a_in) = crossings[0];
    let (s_out, a_out) = crossings[crossings.len() - 1];
    let l_in = c.link_coordinate(s_in, a_in).unwrap_or(0.0);
    let l_out = c.link_coordinate(s_out, a_out).unwrap_or(0.0);
    Ok(link_distance(c, l_in, l_out))
}

/// A straight geodesic (possibly crossing glued edges) joining two cone points
/// with no cone point in between.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeLink {
    pub from: usize,
    pub to: usize,
    pub link_out: f64,
    pub link_in: f64,
    pub length: f64,
    pub edges: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Signature {
    Cone(Vec<usize>, usize),
    Other(Vec<usize>, bool),
}

fn signature(surface: &ConeSurface, ray: RayState, max_len: f64) -> (Signature, Option<(f64, f64)>) {
    let mut ray = ray;
    let mut edges = Vec::new();
    let mut used = 0.0;
    loop {
        let (seg, hit) = step(surface, &ray, max_len - used);
        used += seg.length;
        match hit {
            Hit::EdgeCross { edge, next } => {
                edges.push(edge);
                ray = next;
                if edges.len() > 10_000 {
                    return (Signature::Other(edges, false), None);
                }
            }
            Hit::ConePoint { cone, link_in } => {
                return (Signature::Cone(edges, cone), Some((link_in, used)));
            }
            Hit::EscapeSphere => return (Signature::Other(edges, true), None),
            Hit::Horizon => return (Signature::Other(edges, false), None),
        }
    }
}

/// Enumerates cone-to-cone geodesics of length at most `max_len` by shooting a
/// fan of `fan` departure links from every cone point and bisecting on every
/// change of combinatorial type. Each hit is polished by unfolding the target
/// through the mirrored edges.
pub fn cone_to_cone(surface: &ConeSurface, max_len: f64, fan: usize) -> Vec<ConeLink> {
    let mut out = Vec::new();
    for c in &surface.cone_points {
        let mut links: Vec<f64> = (0..fan)
            .map(|j| c.angle * j as f64 / fan as f64)
            .collect();
        // Wedge boundaries are seams along edges; sample them exactly.
        for k in &c.corners {
            links.push(geom::wrap_mod(k.offset, c.angle));
            links.push(geom::wrap_mod(
                k.offset + f64::from(k.orientation) * k.width,
                c.angle,
            ));
        }
        links.sort_by(f64::total_cmp);
        links.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
        let sigs: Vec<Signature> = links
            .iter()
            .map(|l| signature(surface, RayState::depart(c, *l, 0.0), max_len).0)
            .collect();
        let mut found: Vec<f64> = Vec::new();
        for (i, l) in links.iter().enumerate() {
            if matches!(sigs[i], Signature::Cone(..)) {
                found.push(*l);
            }
        }
        let n = links.len();
        for i in 0..n {
            let (lo, hi) = (links[i], if i + 1 < n { links[i + 1] } else { links[0] + c.angle });
            let shi = &sigs[(i + 1) % n];
            if sigs[i] != *shi {
                bisect(surface, c, lo, hi, sigs[i].clone(), shi.clone(), max_len, 0, &mut found);
            }
        }
        for l in found {
            if let Some(link) = polish_cone_link(surface, c, l, max_len) {
                let dup = out.iter().any(|o: &ConeLink| {
                    o.from == link.from
                        && o.to == link.to
                        && circle_distance(o.link_out, link.link_out, c.angle) < 1e-9
                });
                if !dup {
                    out.push(link);
                }
            }
        }
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn bisect(
    surface: &ConeSurface,
    c: &ConePoint,
    lo: f64,
    hi: f64,
    slo: Signature,
    shi: Signature,
    max_len: f64,
    depth: usize,
    found: &mut Vec<f64>,
) {
    let mid = 0.5 * (lo + hi);
    if depth >= 64 || hi - lo < 1e-15 {
        return;
    }
    let (smid, _) = signature(surface, RayState::depart(c, mid, 0.0), max_len);
    if matches!(smid, Signature::Cone(..)) && smid != slo && smid != shi {
        found.push(geom::wrap_mod(mid, c.angle));
    }
    if smid != slo {
        bisect(surface, c, lo, mid, slo, smid.clone(), max_len, depth + 1, found);
    }
    if smid != shi {
        bisect(surface, c, mid, hi, smid, shi, max_len, depth + 1, found);
    }
}

fn polish_cone_link(surface: &ConeSurface, c: &ConePoint, link: f64, max_len: f64) -> Option<ConeLink> {
    let depart = RayState::depart(c, link, 0.0);
    let (sig, _) = signature(surface, depart, max_len);
    let Signature::Cone(edges, target) = sig else {
        return None;
    };
    // Unfold the target back through the crossed edges onto the departure sheet.
    let mut p = surface.cone_points[target].position;
    for &e in edges.iter().rev() {
        let edge = &surface.edges[e];
        if surface.gluings[e].kind == GluingKind::Mirror {
            p = p.mirror_point(edge.a, edge.b);
        }
    }
    let exact_dir = (p - c.position).normalized();
    let exact = RayState {
        dir: exact_dir,
        ..depart
    };
    let (sig2, hit2) = signature(surface, exact, max_len);
    let (ray, hit) = match (&sig2, hit2) {
        (Signature::Cone(e2, t2), Some(h)) if *t2 == target && *e2 == edges => (exact, h),
        _ => {
            let (_, h) = signature(surface, depart, max_len);
            (depart, h?)
        }
    };
    let link_out = c
        .link_coordinate(ray.point.sheet, ray.dir.angle())
        .unwrap_or(link);
    Some(ConeLink {
        from: c.id,
        to: target,
        link_out,
        link_in: hit.0,
        length: hit.1,
        edges,
    })
}

/// Shortest path in the closed exterior from `a` to `b` through cone points.
/// Returns the length and the cone points visited. Reflected paths are never
/// shorter, so this is also the shortest diffractive chain between the points.
pub fn shortest_diffractive_path(surface: &ConeSurface, a: Vec2, b: Vec2) -> Option<(f64, Vec<usize>)> {
    use petgraph::algo::astar;
    use petgraph::graph::UnGraph;
    let n = surface.cone_points.len();
    let mut g = UnGraph::<Vec2, f64>::new_undirected();
    let mut nodes: Vec<_> = surface
        .cone_points
        .iter()
        .map(|c| g.add_node(c.position))
        .collect();
    nodes.push(g.add_node(a));
    nodes.push(g.add_node(b));
    let pos = |i: usize| {
        if i < n {
            surface.cone_points[i].position
        } else if i == n {
            a
        } else {
            b
        }
    };
    for i in 0..n + 2 {
        for j in i + 1..n + 2 {
            let (p, q) = (pos(i), pos(j));
            if surface.segment_clear(p, q) {
                g.add_edge(nodes[i], nodes[j], p.dist(q));
            }
        }
    }
    let (len, path) = astar(&g, nodes[n], |v| v == nodes[n + 1], |e| *e.weight(), |_| 0.0)?;
    let cones = path
        .iter()
        .map(|v| v.index())
        .filter(|i| *i < n)
        .collect();
    Some((len, cones))
}

/// CSV dump of traced chains, one row per segment.
pub fn chains_to_csv(chains: &[GeodesicChain]) -> String {
    let mut s = String::from(
        "chainId,segIndex,sheet,x0,y0,dirx,diry,length,coneId,linkIn,linkOut,kind,terminal\n",
    );
    for (ci, ch) in chains.iter().enumerate() {
        for (si, seg) in ch.segments.iter().enumerate() {
            let inter = ch
                .interaction_segments
                .iter()
                .position(|k| *k == si)
                .map(|k| ch.interactions[k]);
            let (cone, lin, lout, kind) = match inter {
                Some(i) => (
                    i.cone.to_string(),
                    format!("{:.15}", i.link_in),
                    format!("{:.15}", i.link_out),
                    match i.kind {
                        InteractionKind::Geometric => "G".to_string(),
                        InteractionKind::DiffractiveStrict => "D".to_string(),
                    },
                ),
                None => Default::default(),
            };
            let term = if si + 1 == ch.segments.len() {
                format!("{:?}", ch.terminal)
            } else {
                String::new()
            };
            let _ = writeln!(
                s,
                "{ci},{si},{},{:.15},{:.15},{:.15},{:.15},{:.15},{cone},{lin},{lout},{kind},{term}",
                seg.start.sheet, seg.start.pos.x, seg.start.pos.y, seg.dir.x, seg.dir.y, seg.length
            );
        }
    }
    s
}
