//! Microlocal partition, propagator words and the smoothing ledger.
//!
//! Phase space over the compact region `K = {|z| ≤ R0}` is cut into cubes in
//! `(x, y, θ)` (the A-patches), small discs around each cone point (ψ) and the
//! exterior `|z| > R0` (Υ). A word `j_0 … j_{k+1}` with times `t_0 … t_k`
//! records a sequence of propagations between these regions; each adjacent
//! pair is tagged by whether the flow joins the two regions freely, through a
//! geometric cone interaction or only diffractively.

use crate::assumptions::collinear_witnesses;
use crate::flow::{
    self, relation_miss, trace, ContinuationPolicy, RayState, RelateOptions, Relation,
    RelationKind, Terminal,
};
use crate::geom::{self, Vec2};
use crate::surface::{min_cone_distance, ConeSurface, SurfacePoint};
use crate::{Error, Result};
use num_rational::Rational64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;

/// One cube of the A-partition, treated as the ball of radius `h/√2` around
/// its centre in the phase-space distance `max(|Δx|, |Δω|)` (`ω` the unit
/// direction). The ball contains the cube and has diameter `√2·h < δ_A`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct APatch {
    pub id: usize,
    pub sheet: usize,
    pub center: Vec2,
    pub theta: f64,
    /// Half the cube side, spatially and in angle.
    pub half_side: f64,
    /// Radius of the ball around the centre that contains the cube.
    pub radius: f64,
}

impl APatch {
    pub fn state(&self) -> RayState {
        RayState::new(self.sheet, self.center, self.theta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PsiRegion {
    pub cone: usize,
    pub center: Vec2,
    pub radius: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Letter {
    Patch(usize),
    Psi(usize),
    Upsilon,
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Letter::Patch(i) => write!(f, "A{i}"),
            Letter::Psi(i) => write!(f, "P{i}"),
            Letter::Upsilon => write!(f, "U"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Partition {
    pub delta_a: f64,
    pub delta_psi: f64,
    /// Radius of `K`; Υ is everything beyond it.
    pub r0: f64,
    pub psi_regions: Vec<PsiRegion>,
    sheets: usize,
    origin: Vec2,
    h: f64,
    n_xy: usize,
    n_theta: usize,
    /// Spatial cell index (row-major) to compact id, `u32::MAX` when excluded.
    spatial: Vec<u32>,
    spatial_cells: Vec<u32>,
}

/// Region class of a phase-space point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegionClass {
    Patch(usize),
    Psi(usize),
    Upsilon,
    Uncovered,
}

impl Partition {
    pub fn patch_count(&self) -> usize {
        self.spatial_cells.len() * self.n_theta * self.sheets
    }

    pub fn cell_side(&self) -> f64 {
        self.h
    }

    pub fn patch(&self, id: usize) -> Option<APatch> {
        if id >= self.patch_count() {
            return None;
        }
        let k = id % self.n_theta;
        let rest = id / self.n_theta;
        let sid = rest % self.spatial_cells.len();
        let sheet = rest / self.spatial_cells.len();
        let cell = self.spatial_cells[sid] as usize;
        let (i, j) = (cell % self.n_xy, cell / self.n_xy);
        let center = self.origin + Vec2::new((i as f64 + 0.5) * self.h, (j as f64 + 0.5) * self.h);
        let htheta = 2.0 * PI / self.n_theta as f64;
        Some(APatch {
            id,
            sheet,
            center,
            theta: (k as f64 + 0.5) * htheta,
            half_side: self.h / 2.0,
            radius: self.h / std::f64::consts::SQRT_2,
        })
    }

    /// Patch whose cube contains the given state, if the state lies in `K ∖ ψ`.
    pub fn patch_of(&self, sheet: usize, pos: Vec2, theta: f64) -> Option<usize> {
        match self.classify_point(sheet, pos, theta) {
            RegionClass::Patch(id) => Some(id),
            _ => None,
        }
    }

    /// Region class by the support rules: ψ discs first, then Υ, then the
    /// cube containing the point.
    pub fn classify_point(&self, sheet: usize, pos: Vec2, theta: f64) -> RegionClass {
        if let Some(p) = self.psi_regions.iter().find(|p| p.center.dist(pos) < p.radius) {
            return RegionClass::Psi(p.cone);
        }
        if pos.norm() > self.r0 {
            return RegionClass::Upsilon;
        }
        if self.spatial_cells.is_empty() || sheet >= self.sheets {
            return RegionClass::Uncovered;
        }
        let rel = (pos - self.origin) / self.h;
        let (i, j) = (rel.x.floor(), rel.y.floor());
        if i < 0.0 || j < 0.0 || i >= self.n_xy as f64 || j >= self.n_xy as f64 {
            return RegionClass::Uncovered;
        }
        let sid = self.spatial[j as usize * self.n_xy + i as usize];
        if sid == u32::MAX {
            return RegionClass::Uncovered;
        }
        let htheta = 2.0 * PI / self.n_theta as f64;
        let k = ((geom::wrap_angle(theta) / htheta) as usize).min(self.n_theta - 1);
        RegionClass::Patch(
            (sheet * self.spatial_cells.len() + sid as usize) * self.n_theta + k,
        )
    }

    /// Fraction of random phase-space samples over the `R1` disc (outside
    /// obstacles) that fall in exactly one region class.
    pub fn coverage_audit(&self, surface: &ConeSurface, samples: usize, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r1 = surface.euclidean_radius;
        let mut covered = 0usize;
        let mut drawn = 0usize;
        while drawn < samples {
            let z = Vec2::new(rng.gen_range(-r1..r1), rng.gen_range(-r1..r1));
            if z.norm() > r1 || surface.is_interior_of_obstacle(z) {
                continue;
            }
            let sheet = rng.gen_range(0..surface.sheets.len());
            let th = rng.gen_range(0.0..2.0 * PI);
            drawn += 1;
            if self.classify_point(sheet, z, th) != RegionClass::Uncovered {
                covered += 1;
            }
        }
        covered as f64 / samples.max(1) as f64
    }
}

/// Builds the partition. Fails when `δ_ψ ≥ L/200`, `L` the minimum distance
/// between cone points.
pub fn build_partition(
    surface: &ConeSurface,
    delta_a: f64,
    delta_psi: f64,
    seed: u64,
) -> Result<Partition> {
    if !(delta_a > 0.0) || !(delta_psi > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "δ_A and δ_ψ must be positive (got {delta_a}, {delta_psi})"
        )));
    }
    let l = min_cone_distance(surface);
    if delta_psi >= l / 200.0 {
        return Err(Error::Constraint(format!(
            "δ_ψ = {delta_psi} must be < L/200 = {}",
            l / 200.0
        )));
    }
    let r0 = surface.r0;
    let h = 0.99 * delta_a / std::f64::consts::SQRT_2;
    let n_theta = ((2.0 * PI / h).ceil() as usize).max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let jitter = Vec2::new(rng.gen_range(0.0..h), rng.gen_range(0.0..h));
    let n_xy = if r0 > 0.0 { (2.0 * r0 / h).ceil() as usize + 1 } else { 0 };
    let origin = Vec2::new(-r0, -r0) - jitter;
    let psi_regions: Vec<PsiRegion> = surface
        .cone_points
        .iter()
        .map(|c| PsiRegion {
            cone: c.id,
            center: c.position,
            radius: delta_psi,
        })
        .collect();
    let in_support = |z: Vec2| {
        z.norm() <= r0
            && !surface.is_interior_of_obstacle(z)
            && psi_regions.iter().all(|p| p.center.dist(z) >= p.radius)
    };
    let mut spatial = vec![u32::MAX; n_xy * n_xy];
    let mut spatial_cells = Vec::new();
    for j in 0..n_xy {
        for i in 0..n_xy {
            let base = origin + Vec2::new(i as f64 * h, j as f64 * h);
            let hit = (0..3).any(|a| {
                (0..3).any(|b| in_support(base + Vec2::new(a as f64 * h / 2.0, b as f64 * h / 2.0)))
            });
            if hit {
                spatial[j * n_xy + i] = spatial_cells.len() as u32;
                spatial_cells.push((j * n_xy + i) as u32);
            }
        }
    }
    let p = Partition {
        delta_a,
        delta_psi,
        r0,
        psi_regions,
        sheets: surface.sheets.len(),
        origin,
        h,
        n_xy,
        n_theta,
        spatial,
        spatial_cells,
    };
    log::info!("partition: {} A-patches, {} ψ regions", p.patch_count(), p.psi_regions.len());
    Ok(p)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Tag {
    NoCone,
    G,
    D,
    Unrealizable,
    Indeterminate,
}

impl Tag {
    pub fn interacts(self) -> bool {
        matches!(self, Tag::G | Tag::D)
    }

    fn symbol(self) -> &'static str {
        match self {
            Tag::NoCone => "N",
            Tag::G => "G",
            Tag::D => "D",
            Tag::Unrealizable => "X",
            Tag::Indeterminate => "?",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Word {
    pub letters: Vec<Letter>,
    pub times: Vec<f64>,
    #[serde(default)]
    pub tags: Vec<Tag>,
}

impl Word {
    pub fn new(letters: Vec<Letter>, times: Vec<f64>) -> Result<Word> {
        if letters.len() < 2 || times.len() + 1 != letters.len() {
            return Err(Error::InvalidArgument(format!(
                "word needs len(times) = len(letters) - 1 >= 1, got {} letters and {} times",
                letters.len(),
                times.len()
            )));
        }
        if let Some(t) = times.iter().find(|t| !(**t > 0.0)) {
            return Err(Error::InvalidArgument(format!("word time {t} is not positive")));
        }
        Ok(Word {
            letters,
            times,
            tags: Vec::new(),
        })
    }

    pub fn realizable(&self) -> bool {
        !self.tags.is_empty() && self.tags.iter().all(|t| matches!(t, Tag::NoCone | Tag::G | Tag::D))
    }

    pub fn spelled(&self) -> String {
        self.letters.iter().map(|l| l.to_string()).collect::<Vec<_>>().join(" ")
    }
}

/// Representative states of a patch: the centre, the six face centres and,
/// for each cone point, a grid of rays in the cube that run straight into it.
fn patch_samples(surface: &ConeSurface, p: &APatch) -> Vec<RayState> {
    const GRID: usize = 7;
    let hs = p.half_side;
    let mut out = vec![p.state()];
    for (dx, dy, dt) in [
        (hs, 0.0, 0.0),
        (-hs, 0.0, 0.0),
        (0.0, hs, 0.0),
        (0.0, -hs, 0.0),
        (0.0, 0.0, hs),
        (0.0, 0.0, -hs),
    ] {
        let d = 0.9;
        out.push(RayState::new(p.sheet, p.center + Vec2::new(dx, dy) * d, p.theta + dt * d));
    }
    for c in surface.cone_points.iter().filter(|c| c.corners.iter().any(|k| k.sheet == p.sheet)) {
        let rel = c.position - p.center;
        if rel.norm() > surface.r0 * 4.0 + 1.0 {
            continue;
        }
        for i in 0..GRID {
            let th = p.theta + hs * (2.0 * i as f64 / (GRID - 1) as f64 - 1.0);
            let u = Vec2::from_angle(th);
            // Base points x(s) = c − s·u inside the cube, s > 0.
            let (mut lo, mut hi) = (1e-9f64, f64::INFINITY);
            for (r, du) in [(rel.x, u.x), (rel.y, u.y)] {
                if du.abs() < 1e-15 {
                    if r.abs() > hs {
                        hi = -1.0;
                    }
                    continue;
                }
                let (s1, s2) = ((r - hs) / du, (r + hs) / du);
                lo = lo.max(s1.min(s2));
                hi = hi.min(s1.max(s2));
            }
            if lo > hi {
                continue;
            }
            for j in 0..GRID {
                let sj = lo + (hi - lo) * j as f64 / (GRID - 1) as f64;
                out.push(RayState::new(p.sheet, c.position - u * sj, th));
            }
        }
    }
    out
}

/// Whether the free (cone-avoiding) flow carries `p` into the ball after time `t`.
fn free_reach(surface: &ConeSurface, p: &RayState, q: &APatch, t: f64) -> bool {
    let res = trace(surface, p, t, ContinuationPolicy::Stop);
    let ch = &res.chains[0];
    if !ch.interactions.is_empty() || ch.terminal == Terminal::AtConePoint || ch.total_time < t - 1e-12 {
        return false;
    }
    let Some((at, dir)) = ch.state_at(t) else {
        return false;
    };
    at.sheet == q.sheet && at.pos.dist(q.center) <= q.radius && dir.dist(Vec2::from_angle(q.theta)) <= q.radius
}

fn pair_tag(surface: &ConeSurface, p: &APatch, q: &APatch, t: f64, opts: RelateOptions) -> Result<Tag> {
    let target = q.state();
    let tol = q.radius;
    let samples = patch_samples(surface, p);
    let mut free = false;
    let mut diffractive = false;
    let mut unsure = false;
    for s in &samples {
        if free_reach(surface, s, q, t) {
            free = true;
            continue;
        }
        match relation_miss(surface, s, &target, t, RelationKind::Geometric, tol, opts)?.0 {
            Relation::Related => return Ok(Tag::G),
            Relation::Indeterminate => unsure = true,
            Relation::NotRelated => {}
        }
    }
    if free {
        return Ok(Tag::NoCone);
    }
    for s in &samples {
        match relation_miss(surface, s, &target, t, RelationKind::Diffractive, tol, opts)?.0 {
            Relation::Related => diffractive = true,
            Relation::Indeterminate => unsure = true,
            Relation::NotRelated => {}
        }
        if diffractive {
            break;
        }
    }
    Ok(if diffractive {
        Tag::D
    } else if unsure {
        Tag::Indeterminate
    } else {
        Tag::Unrealizable
    })
}

/// Tags each adjacent pair of an A-patch word. Propagation runs from
/// `letters[ℓ]` to `letters[ℓ+1]` over time `times[ℓ]`.
pub fn classify_word(surface: &ConeSurface, partition: &Partition, word: &Word) -> Result<Vec<Tag>> {
    classify_word_with(surface, partition, word, RelateOptions::default())
}

pub fn classify_word_with(
    surface: &ConeSurface,
    partition: &Partition,
    word: &Word,
    opts: RelateOptions,
) -> Result<Vec<Tag>> {
    let mut tags = Vec::with_capacity(word.times.len());
    for (l, t) in word.times.iter().enumerate() {
        if !(*t > 0.0) {
            return Err(Error::InvalidArgument(format!("word time {t} is not positive")));
        }
        let patch = |x: Letter| match x {
            Letter::Patch(id) => partition
                .patch(id)
                .ok_or_else(|| Error::InvalidArgument(format!("no patch {id}"))),
            other => Err(Error::Unsupported(format!(
                "pair classification is defined for A-patch letters, got {other}"
            ))),
        };
        let p = patch(word.letters[l])?;
        let q = patch(word.letters[l + 1])?;
        tags.push(pair_tag(surface, &p, &q, *t, opts)?);
    }
    Ok(tags)
}

#[derive(Debug, Clone)]
pub struct ForbiddenScan {
    pub violations: Vec<Word>,
    pub candidates: usize,
    /// Candidates skipped because a letter fell outside `K ∖ ψ`.
    pub skipped: usize,
    /// Candidate cap reached.
    pub partial: bool,
}

/// Cap on candidate words examined by one scan.
pub const SCAN_CAP: usize = 10_000;

/// State on a cone-to-cone link at fraction `f` of its length.
fn along_link(surface: &ConeSurface, link: &flow::ConeLink, f: f64) -> Option<(SurfacePoint, Vec2)> {
    let c = &surface.cone_points[link.from];
    let start = RayState::depart(c, link.link_out, 0.0);
    let res = trace(surface, &start, link.length, ContinuationPolicy::Stop);
    res.chains[0].state_at(f * link.length)
}

/// Four-letter word following `first` then `second` through three cone
/// points, with outer letters `lead` away from the end cones. `None` when a
/// letter falls outside the patched region.
fn link_pair_word(
    surface: &ConeSurface,
    partition: &Partition,
    first: &flow::ConeLink,
    second: &flow::ConeLink,
    lead: f64,
) -> Option<Word> {
    let a = &surface.cone_points[first.from];
    let g = &surface.cone_points[second.to];
    // i: approaching α along the reverse of its outgoing link.
    let back = RayState::depart(a, first.link_out + a.angle / 2.0, 0.0);
    let i_pos = a.position + back.dir * lead;
    let j = along_link(surface, first, 0.5)?;
    let k = along_link(surface, second, 0.5)?;
    // ℓ: leaving γ opposite to the arrival, clear of the link.
    let out = RayState::depart(g, second.link_in + g.angle / 2.0, 0.0);
    let l_pos = g.position + out.dir * lead;
    let letters = [
        partition.patch_of(back.point.sheet, i_pos, (-back.dir).angle())?,
        partition.patch_of(j.0.sheet, j.0.pos, j.1.angle())?,
        partition.patch_of(k.0.sheet, k.0.pos, k.1.angle())?,
        partition.patch_of(out.point.sheet, l_pos, out.dir.angle())?,
    ];
    let times = vec![
        lead + 0.5 * first.length,
        0.5 * (first.length + second.length),
        0.5 * second.length + lead,
    ];
    Word::new(letters.iter().map(|x| Letter::Patch(*x)).collect(), times).ok()
}

fn lead_distance(surface: &ConeSurface, partition: &Partition) -> f64 {
    let l = min_cone_distance(surface);
    // Clear of ψ, well inside K.
    (0.25 * l).min(4.0 * partition.cell_side()).max(2.0 * partition.delta_psi)
}

fn build_and_tag(
    surface: &ConeSurface,
    partition: &Partition,
    pairs: &[(&flow::ConeLink, &flow::ConeLink)],
) -> Result<(Vec<Word>, usize)> {
    let lead = lead_distance(surface, partition);
    let built: Vec<Option<Word>> = pairs
        .iter()
        .map(|(f, s)| link_pair_word(surface, partition, f, s, lead))
        .collect();
    let skipped = built.iter().filter(|w| w.is_none()).count();
    let words: Vec<Word> = built.into_iter().flatten().collect();
    let tagged = words
        .into_par_iter()
        .map(|mut w| {
            w.tags = classify_word(surface, partition, &w)?;
            Ok(w)
        })
        .collect::<Result<Vec<Word>>>()?;
    Ok((tagged, skipped))
}

/// Searches for realizable words `ijkℓ` whose three transitions all interact
/// with cone points and whose middle transition is geometric. Candidates are
/// built from pairs of cone-to-cone geodesics meeting at link distance π and
/// then confirmed by [`classify_word`].
pub fn forbidden_scan(
    surface: &ConeSurface,
    partition: &Partition,
    max_word_len: usize,
    horizon: f64,
) -> Result<ForbiddenScan> {
    let mut scan = ForbiddenScan {
        violations: Vec::new(),
        candidates: 0,
        skipped: 0,
        partial: false,
    };
    if max_word_len < 4 || surface.cone_points.len() < 2 {
        return Ok(scan);
    }
    let links = flow::cone_to_cone(surface, horizon, crate::assumptions::DEFAULT_FAN);
    let mut witnesses = collinear_witnesses(surface, &links, flow::TOL_G);
    if witnesses.len() > SCAN_CAP {
        witnesses.truncate(SCAN_CAP);
        scan.partial = true;
    }
    let pairs: Vec<_> = witnesses.iter().map(|w| (&w.first, &w.second)).collect();
    let (words, skipped) = build_and_tag(surface, partition, &pairs)?;
    scan.candidates = pairs.len();
    scan.skipped = skipped;
    scan.violations = words
        .into_iter()
        .filter(|w| w.tags.iter().all(|t| t.interacts()) && w.tags[1] == Tag::G)
        .collect();
    Ok(scan)
}

/// Tagged words through every chain of two consecutive cone-to-cone
/// geodesics of total length at most `horizon`, at most `cap` of them.
/// Returns the words and whether the cap was reached.
pub fn three_cone_words(
    surface: &ConeSurface,
    partition: &Partition,
    horizon: f64,
    cap: usize,
) -> Result<(Vec<Word>, bool)> {
    if surface.cone_points.len() < 2 {
        return Ok((Vec::new(), false));
    }
    let links = flow::cone_to_cone(surface, horizon, crate::assumptions::DEFAULT_FAN);
    let mut pairs = Vec::new();
    'outer: for f in &links {
        for s in links.iter().filter(|s| s.from == f.to && f.length + s.length <= horizon) {
            if pairs.len() == cap {
                break 'outer;
            }
            pairs.push((f, s));
        }
    }
    let partial = pairs.len() == cap;
    Ok((build_and_tag(surface, partition, &pairs)?.0, partial))
}

/// Sobolev order `value` or `value − ε` (the "−0" convention), kept exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Order {
    pub value: Rational64,
    pub minus_eps: bool,
}

impl Order {
    pub fn exact(value: Rational64) -> Order {
        Order {
            value,
            minus_eps: false,
        }
    }
}

impl fmt::Display for Order {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)?;
        if self.minus_eps {
            write!(f, "-eps")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LedgerOutput {
    /// Maps into every Sobolev space.
    Residual,
    /// Reaches the exterior region with the input order.
    Escaped(Order),
    Smoothed(Order),
    Indeterminate,
}

impl fmt::Display for LedgerOutput {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LedgerOutput::Residual => write!(f, "Residual"),
            LedgerOutput::Escaped(o) => write!(f, "Escaped({o})"),
            LedgerOutput::Smoothed(o) => write!(f, "Smoothed({o})"),
            LedgerOutput::Indeterminate => write!(f, "Indeterminate"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LedgerEntry {
    /// Cone-interaction pattern over {G, D}.
    pub pattern: String,
    pub output: LedgerOutput,
    pub rule: &'static str,
    /// Nonfocusing gain `n − 1`.
    pub gain: i64,
}

/// Regularity bookkeeping for a tagged word in dimension `n`.
pub fn smoothing_ledger(tags: &[Tag], n: u32, s_in: Rational64) -> Result<LedgerEntry> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("dimension must be >= 2, got {n}")));
    }
    let gain = n as i64 - 1;
    let pattern: String = tags.iter().filter(|t| t.interacts()).map(|t| t.symbol()).collect();
    let entry = |output, rule| {
        Ok(LedgerEntry {
            pattern: pattern.clone(),
            output,
            rule,
            gain,
        })
    };
    if tags.contains(&Tag::Indeterminate) {
        return entry(LedgerOutput::Indeterminate, "indeterminate relation");
    }
    if tags.contains(&Tag::Unrealizable) {
        return entry(LedgerOutput::Residual, "not diffractively realizable");
    }
    if pattern.len() > 3 {
        return Err(Error::InvalidArgument(format!(
            "ledger expects at most three cone interactions, got pattern {pattern}"
        )));
    }
    if pattern.contains("DD") {
        return entry(
            LedgerOutput::Smoothed(Order {
                value: s_in + Rational64::new(gain, 2),
                minus_eps: true,
            }),
            "two successive diffractions: nonfocusing gain (n-1)/2",
        );
    }
    if pattern.len() == 3 && &pattern[1..2] == "G" {
        return entry(LedgerOutput::Residual, "geometric middle interaction is not realizable");
    }
    if pattern == "GDG" {
        return entry(LedgerOutput::Escaped(Order::exact(s_in)), "GDG reaches the exterior");
    }
    entry(LedgerOutput::Escaped(Order::exact(s_in)), "fewer than three interactions: escapes")
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HuygensSchedule {
    pub k: u64,
    pub t_s: f64,
}

/// Smallest `k` with `k(n−1)/2 ≥ s_target` and the time `T_s = 5kT0` after
/// which that much smoothing is available.
pub fn huygens_schedule(s_target: Rational64, n: u32, t0: f64) -> Result<HuygensSchedule> {
    if n < 2 || !(t0 > 0.0) || s_target < Rational64::from_integer(0) {
        return Err(Error::InvalidArgument(format!(
            "huygens_schedule needs s >= 0, n >= 2, T0 > 0 (got {s_target}, {n}, {t0})"
        )));
    }
    let k = (s_target * 2 / Rational64::from_integer(n as i64 - 1)).ceil().to_integer() as u64;
    Ok(HuygensSchedule {
        k,
        t_s: 5.0 * k as f64 * t0,
    })
}

/// Offset `τ` with `2δ_ψ < τ < L/50` used when data is supported near a cone
/// point (midpoint of the admissible interval).
pub fn psi_offset(delta_psi: f64, l: f64) -> Option<f64> {
    let (lo, hi) = (2.0 * delta_psi, l / 50.0);
    (lo < hi).then(|| 0.5 * (lo + hi))
}

pub fn ledger_csv(rows: &[(Word, LedgerEntry)]) -> String {
    let mut s = String::from("word,times,tags,rule,outputOrder\n");
    for (w, e) in rows {
        let times: Vec<String> = w.times.iter().map(|t| format!("{t}")).collect();
        let tags: String = w.tags.iter().map(|t| t.symbol()).collect();
        s.push_str(&format!(
            "{},{},{},{},{}\n",
            w.spelled(),
            times.join(";"),
            tags,
            e.rule,
            e.output
        ));
    }
    s
}
