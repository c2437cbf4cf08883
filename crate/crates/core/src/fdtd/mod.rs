//! Finite-difference wave solver on polygon exteriors and doubled surfaces.
//!
//! Second-order leapfrog for `u_tt + σ u_t = Δu + f` on a cell-centred grid
//! with a staircase obstacle mask. Boundaries sit on cell faces: a Dirichlet
//! wall uses the antisymmetric ghost `−u`, a Neumann wall the mirror ghost
//! `u`. On the doubled surface the ghost across a wall is the same node on the
//! other sheet, so the sheet sum and difference evolve exactly like the
//! Neumann and Dirichlet exterior problems.

mod analysis;
mod io;
pub mod reference;

pub use analysis::{
    arrival_times, band_energy, band_pass, decay_report, diffraction_contrast, envelope,
    sponge_reflection, ArrivalOptions, ContrastReport, DecayReport, ProbeRole,
};
pub use io::{read_snapshot, series_svg, write_snapshot};

use crate::geom::{point_in_polygon, Vec2};
use crate::surface::{BoundaryCondition, ConeSurface, GluingKind, PolygonScene};
use crate::{Error, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub h: f64,
    pub dt: f64,
    /// Half side of the square computational domain.
    pub domain_radius: f64,
    pub sponge_width: f64,
    pub t_final: f64,
}

impl GridSpec {
    pub fn new(h: f64, dt: f64, domain_radius: f64, sponge_width: f64, t_final: f64) -> Result<GridSpec> {
        if !(h > 0.0 && dt > 0.0 && domain_radius > 0.0 && sponge_width >= 0.0 && t_final >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "grid needs h, dt, domain radius > 0 and sponge width, T >= 0 (h={h}, dt={dt}, D={domain_radius}, W={sponge_width}, T={t_final})"
            )));
        }
        let limit = h / 2f64.sqrt();
        if dt > limit {
            return Err(Error::Cfl { dt, limit });
        }
        Ok(GridSpec {
            h,
            dt,
            domain_radius,
            sponge_width,
            t_final,
        })
    }

    /// Grid with `dt = courant·h`.
    pub fn with_courant(h: f64, courant: f64, domain_radius: f64, sponge_width: f64, t_final: f64) -> Result<GridSpec> {
        GridSpec::new(h, courant * h, domain_radius, sponge_width, t_final)
    }

    pub fn steps(&self) -> usize {
        (self.t_final / self.dt - 1e-9).ceil().max(0.0) as usize
    }

    /// Nodes per axis; the half side is rounded up to a whole number of cells.
    pub fn nodes(&self) -> usize {
        2 * (self.domain_radius / self.h - 1e-9).ceil() as usize
    }
}

/// Gaussian in space, Ricker wavelet in time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Source {
    pub pos: Vec2,
    #[serde(default)]
    pub sheet: usize,
    pub f0: f64,
    pub sigma: f64,
    #[serde(default = "one")]
    pub amplitude: f64,
}

fn one() -> f64 {
    1.0
}

impl Source {
    /// Ricker pulse at `f0` with spatial width `4h`.
    pub fn ricker(pos: Vec2, f0: f64, h: f64) -> Source {
        Source {
            pos,
            sheet: 0,
            f0,
            sigma: 4.0 * h,
            amplitude: 1.0,
        }
    }

    /// Centre time of the wavelet; the wavelet is cut to `[0, 2·delay]`.
    pub fn delay(&self) -> f64 {
        2.0 / self.f0
    }

    /// Distance from the wavelet centre to its side-lobe minima.
    pub fn half_width(&self) -> f64 {
        1.5f64.sqrt() / (PI * self.f0)
    }

    pub fn support_radius(&self) -> f64 {
        6.0 * self.sigma
    }

    pub fn wavelet(&self, t: f64) -> f64 {
        let s = t - self.delay();
        if s.abs() > self.delay() {
            return 0.0;
        }
        let a = (PI * self.f0).powi(2) * s * s;
        self.amplitude * (1.0 - 2.0 * a) * (-a).exp()
    }

    pub fn spatial(&self, z: Vec2) -> f64 {
        let r2 = (z - self.pos).norm_sq();
        if r2 > self.support_radius().powi(2) {
            return 0.0;
        }
        (-r2 / (2.0 * self.sigma * self.sigma)).exp() / (2.0 * PI * self.sigma * self.sigma)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    pub id: usize,
    #[serde(default)]
    pub sheet: usize,
    pub pos: Vec2,
}

/// Outer edge treatment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outer {
    /// Graded sponge over `sponge_width`, Dirichlet at the very edge.
    Absorbing,
    /// Neumann walls, no sponge: the discrete energy is conserved.
    Reflecting,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Mode {
    Exterior(BoundaryCondition),
    Doubled,
}

const SOLID: u8 = 1 << 4;
const OUT_E: u8 = 1 << 5;
const OUT_W: u8 = 1 << 6;
const OUT_NS: u8 = 1 << 7;

/// Smooth cutoff: 1 for `|z − c| ≤ r − w`, cosine taper to 0 at `r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Chi {
    pub center: Vec2,
    pub radius: f64,
    pub taper: f64,
}

impl Chi {
    pub fn disc(radius: f64) -> Chi {
        Chi {
            center: Vec2::new(0.0, 0.0),
            radius,
            taper: 0.25 * radius,
        }
    }

    pub fn at(&self, z: Vec2) -> f64 {
        let r = (z - self.center).norm();
        if r <= self.radius - self.taper {
            1.0
        } else if r >= self.radius {
            0.0
        } else {
            let s = (r - (self.radius - self.taper)) / self.taper;
            0.5 * (1.0 + (PI * s).cos())
        }
    }
}

/// Grid state: per sheet the current and previous time level.
#[derive(Debug, Clone)]
pub struct WaveField {
    pub n: usize,
    pub h: f64,
    /// Coordinate of the lower-left cell corner.
    pub origin: Vec2,
    pub t: f64,
    pub step: usize,
    pub u: Vec<Vec<f64>>,
    pub u_prev: Vec<Vec<f64>>,
    /// Nodes inside obstacles.
    pub solid: Vec<bool>,
}

impl WaveField {
    pub fn node(&self, i: usize, j: usize) -> Vec2 {
        self.origin + Vec2::new((i as f64 + 0.5) * self.h, (j as f64 + 0.5) * self.h)
    }

    /// Bilinear interpolation over fluid nodes, falling back to the nearest
    /// fluid node next to walls.
    pub fn sample(&self, sheet: usize, z: Vec2) -> f64 {
        let u = &self.u[sheet];
        let rel = (z - self.origin) / self.h - Vec2::new(0.5, 0.5);
        let (fi, fj) = (rel.x.floor(), rel.y.floor());
        if fi < 0.0 || fj < 0.0 || fi >= (self.n - 1) as f64 || fj >= (self.n - 1) as f64 {
            return 0.0;
        }
        let (i, j) = (fi as usize, fj as usize);
        let (ax, ay) = (rel.x - fi, rel.y - fj);
        let ks = [j * self.n + i, j * self.n + i + 1, (j + 1) * self.n + i, (j + 1) * self.n + i + 1];
        if ks.iter().all(|k| !self.solid[*k]) {
            return (1.0 - ay) * ((1.0 - ax) * u[ks[0]] + ax * u[ks[1]])
                + ay * ((1.0 - ax) * u[ks[2]] + ax * u[ks[3]]);
        }
        let w = [(1.0 - ax) * (1.0 - ay), ax * (1.0 - ay), (1.0 - ax) * ay, ax * ay];
        let best = (0..4).filter(|q| !self.solid[ks[*q]]).max_by(|a, b| w[*a].total_cmp(&w[*b]));
        best.map(|q| u[ks[q]]).unwrap_or(0.0)
    }

    /// `½ h² Σ χ (u_t² + |∇u|²)` with `u_t` the backward difference and
    /// gradients over fluid–fluid links.
    pub fn local_energy(&self, chi: &Chi, dt: f64) -> f64 {
        let n = self.n;
        let mut e = 0.0;
        for (u, up) in self.u.iter().zip(&self.u_prev) {
            let rows: Vec<f64> = (0..n)
                .into_par_iter()
                .map(|j| {
                    let mut s = 0.0;
                    for i in 0..n {
                        let k = j * n + i;
                        if self.solid[k] {
                            continue;
                        }
                        let c = chi.at(self.node(i, j));
                        if c == 0.0 {
                            continue;
                        }
                        let ut = (u[k] - up[k]) / dt;
                        let mut g = 0.0;
                        if i + 1 < n && !self.solid[k + 1] {
                            g += (u[k + 1] - u[k]).powi(2);
                        }
                        if j + 1 < n && !self.solid[k + n] {
                            g += (u[k + n] - u[k]).powi(2);
                        }
                        s += c * (ut * ut + g / (self.h * self.h));
                    }
                    s
                })
                .collect();
            e += rows.iter().sum::<f64>();
        }
        0.5 * self.h * self.h * e
    }
}

/// Time-stepper shared by exterior and doubled runs.
pub struct Simulation {
    pub grid: GridSpec,
    pub field: WaveField,
    mode: Mode,
    outer: Outer,
    flags: Vec<u8>,
    sigma_axis: Vec<f64>,
    source: Option<Source>,
    source_nodes: Vec<(usize, f64)>,
    full_domain: bool,
    /// Discrete energy of the last step at which it was requested.
    last_energy: Option<f64>,
}

fn sponge_profile(grid: &GridSpec, outer: Outer, n: usize) -> Vec<f64> {
    let mut s = vec![0.0; n];
    if outer == Outer::Reflecting || grid.sponge_width <= 0.0 {
        return s;
    }
    let w = grid.sponge_width;
    // Round-trip attenuation exp(-2/3 σ_max W) = 1e-6.
    let smax = 3.0 * 1e6f64.ln() / (2.0 * w);
    let d = n as f64 * grid.h / 2.0;
    for (i, v) in s.iter_mut().enumerate() {
        let x = -d + (i as f64 + 0.5) * grid.h;
        let depth = x.abs() - (d - w);
        if depth > 0.0 {
            *v = smax * (depth / w).powi(2);
        }
    }
    s
}

fn build_flags(n: usize, solid: &[bool]) -> Vec<u8> {
    let mut f = vec![0u8; n * n];
    for j in 0..n {
        for i in 0..n {
            let k = j * n + i;
            if solid[k] {
                f[k] = SOLID;
                continue;
            }
            let mut b = 0u8;
            let nb = [
                (i + 1 < n).then(|| k + 1),
                (i > 0).then(|| k - 1),
                (j + 1 < n).then(|| k + n),
                (j > 0).then(|| k - n),
            ];
            for (d, q) in nb.iter().enumerate() {
                match q {
                    Some(q) if solid[*q] => b |= 1 << d,
                    Some(_) => {}
                    None => b |= [OUT_E, OUT_W, OUT_NS, OUT_NS][d],
                }
            }
            f[k] = b;
        }
    }
    f
}

impl Simulation {
    fn build(
        grid: GridSpec,
        obstacles: &[Vec<Vec2>],
        mode: Mode,
        source: Option<Source>,
        outer: Outer,
    ) -> Result<Simulation> {
        GridSpec::new(grid.h, grid.dt, grid.domain_radius, grid.sponge_width, grid.t_final)?;
        let n = grid.nodes();
        let h = grid.h;
        let d = n as f64 * h / 2.0;
        let origin = Vec2::new(-d, -d);
        let sheets = if mode == Mode::Doubled { 2 } else { 1 };
        let mut solid = vec![false; n * n];
        solid.par_chunks_mut(n).enumerate().for_each(|(j, row)| {
            for (i, s) in row.iter_mut().enumerate() {
                let z = origin + Vec2::new((i as f64 + 0.5) * h, (j as f64 + 0.5) * h);
                *s = obstacles.iter().any(|l| point_in_polygon(z, l));
            }
        });
        let field = WaveField {
            n,
            h,
            origin,
            t: 0.0,
            step: 0,
            u: vec![vec![0.0; n * n]; sheets],
            u_prev: vec![vec![0.0; n * n]; sheets],
            solid,
        };
        let mut source_nodes = Vec::new();
        if let Some(src) = source {
            if src.sheet >= sheets {
                return Err(Error::InvalidArgument(format!("source sheet {} out of range", src.sheet)));
            }
            if obstacles.iter().any(|l| point_in_polygon(src.pos, l)) {
                return Err(Error::InteriorPoint {
                    x: src.pos.x,
                    y: src.pos.y,
                });
            }
            let near = obstacles
                .iter()
                .flat_map(|l| l.iter())
                .map(|v| v.dist(src.pos))
                .fold(f64::INFINITY, f64::min);
            if near < 5.0 * h {
                return Err(Error::InvalidArgument(format!(
                    "source is {near} from a vertex; keep it at least 5h = {}",
                    5.0 * h
                )));
            }
            if src.pos.x.abs().max(src.pos.y.abs()) + src.support_radius() > d - grid.sponge_width {
                return Err(Error::InvalidArgument("source support reaches the sponge".into()));
            }
            let r = src.support_radius();
            let lo = ((src.pos - origin - Vec2::new(r, r)) / h).x.floor().max(0.0) as usize;
            let hi = (((src.pos - origin + Vec2::new(r, r)) / h).x.ceil() as usize).min(n);
            let lo_y = ((src.pos - origin - Vec2::new(r, r)) / h).y.floor().max(0.0) as usize;
            let hi_y = (((src.pos - origin + Vec2::new(r, r)) / h).y.ceil() as usize).min(n);
            for j in lo_y..hi_y {
                for i in lo..hi {
                    let k = j * n + i;
                    let w = src.spatial(field.node(i, j));
                    if w > 0.0 && !field.solid[k] {
                        source_nodes.push((k, w));
                    }
                }
            }
        }
        let flags = build_flags(n, &field.solid);
        Ok(Simulation {
            sigma_axis: sponge_profile(&grid, outer, n),
            grid,
            field,
            mode,
            outer,
            flags,
            source,
            source_nodes,
            full_domain: source.is_none(),
            last_energy: None,
        })
    }

    /// Exterior of a polygon scene with the scene's boundary condition.
    pub fn exterior(scene: &PolygonScene, grid: GridSpec, source: Option<Source>, outer: Outer) -> Result<Simulation> {
        if !scene.slits.is_empty() {
            return Err(Error::Unsupported("the wave solver does not model slits".into()));
        }
        if !scene.obstacles.is_empty() {
            scene.validate()?;
        }
        if outer == Outer::Absorbing && grid.domain_radius < scene.r1 + grid.sponge_width {
            return Err(Error::InvalidArgument(format!(
                "domain radius {} < R1 + sponge width = {}",
                grid.domain_radius,
                scene.r1 + grid.sponge_width
            )));
        }
        let scene = scene.normalized();
        Simulation::build(grid, &scene.obstacles, Mode::Exterior(scene.bc), source, outer)
    }

    /// Both sheets of a doubled exterior, coupled across the obstacle walls.
    pub fn doubled(surface: &ConeSurface, grid: GridSpec, source: Option<Source>, outer: Outer) -> Result<Simulation> {
        if surface.sheets.len() != 2 || surface.gluings.iter().any(|g| g.kind != GluingKind::Mirror) {
            return Err(Error::Unsupported("doubled runs need a two-sheet mirror-glued surface".into()));
        }
        if outer == Outer::Absorbing && grid.domain_radius < surface.euclidean_radius + grid.sponge_width {
            return Err(Error::InvalidArgument(format!(
                "domain radius {} < R1 + sponge width = {}",
                grid.domain_radius,
                surface.euclidean_radius + grid.sponge_width
            )));
        }
        Simulation::build(grid, &surface.obstacles, Mode::Doubled, source, outer)
    }

    pub fn sheets(&self) -> usize {
        self.field.u.len()
    }

    /// Sets `u = u_prev = g` (zero initial velocity) on one sheet.
    pub fn set_initial(&mut self, sheet: usize, g: impl Fn(Vec2) -> f64) {
        let n = self.field.n;
        for j in 0..n {
            for i in 0..n {
                let k = j * n + i;
                let v = if self.field.solid[k] { 0.0 } else { g(self.field.node(i, j)) };
                self.field.u[sheet][k] = v;
                self.field.u_prev[sheet][k] = v;
            }
        }
        self.full_domain = true;
    }

    /// Rows and columns that can be nonzero after the next step.
    fn active_box(&self) -> (usize, usize) {
        let n = self.field.n;
        match (self.full_domain, self.source) {
            (false, Some(src)) => {
                let r = self.field.t + self.grid.dt + src.support_radius() + 4.0 * self.grid.h;
                let rel = (src.pos - self.field.origin) / self.grid.h;
                let cells = r / self.grid.h;
                let lo = (rel.x.min(rel.y) - cells).floor().max(1.0) as usize - 1;
                let hi = ((rel.x.max(rel.y) + cells).ceil() as usize + 1).min(n);
                (lo, hi)
            }
            _ => (0, n),
        }
    }

    /// Discrete energy `½|D_t u|² − ½⟨u^{n+1}, L u^n⟩` of the most recent
    /// step taken with [`Simulation::step_with_energy`].
    pub fn last_energy(&self) -> Option<f64> {
        self.last_energy
    }

    pub fn step(&mut self) {
        self.advance(false);
    }

    pub fn step_with_energy(&mut self) -> f64 {
        self.advance(true);
        self.last_energy.unwrap_or(0.0)
    }

    pub fn run_to(&mut self, t: f64) {
        while self.field.t < t - 1e-9 * self.grid.dt {
            self.step();
        }
    }

    fn advance(&mut self, energy: bool) {
        let n = self.field.n;
        let dt = self.grid.dt;
        let c2 = (dt / self.grid.h).powi(2);
        let (lo, hi) = self.active_box();
        let sheets = self.sheets();
        let mode = self.mode;
        let outer = self.outer;
        let flags = &self.flags;
        let sig = &self.sigma_axis;
        let cur = &self.field.u;
        let mut sums = (0.0, 0.0);
        for s in 0..sheets {
            let u = &cur[s];
            let other = if sheets == 2 { Some(&cur[1 - s][..]) } else { None };
            let prev = &mut self.field.u_prev[s];
            let rows: Vec<(f64, f64)> = prev
                .par_chunks_mut(n)
                .enumerate()
                .skip(lo)
                .take(hi - lo)
                .map(|(j, row)| {
                    let mut kin = 0.0;
                    let mut pot = 0.0;
                    let sy = sig[j];
                    for i in lo..hi {
                        let k = j * n + i;
                        let f = flags[k];
                        if f & SOLID != 0 {
                            continue;
                        }
                        let uk = u[k];
                        let lap = if f == 0 {
                            u[k - 1] + u[k + 1] + u[k - n] + u[k + n] - 4.0 * uk
                        } else {
                            let ghost = |q: Option<usize>, bit: u8| -> f64 {
                                if f & bit != 0 {
                                    return match mode {
                                        Mode::Exterior(BoundaryCondition::Dirichlet) => -uk,
                                        Mode::Exterior(BoundaryCondition::Neumann) => uk,
                                        Mode::Doubled => other.map_or(0.0, |o| o[k]),
                                    };
                                }
                                match q {
                                    Some(q) => u[q],
                                    None if outer == Outer::Absorbing => -uk,
                                    None => uk,
                                }
                            };
                            let e = ghost((i + 1 < n).then(|| k + 1), 1);
                            let w = ghost((i > 0).then(|| k - 1), 2);
                            let nn = ghost((j + 1 < n).then(|| k + n), 4);
                            let ss = ghost((j > 0).then(|| k - n), 8);
                            e + w + nn + ss - 4.0 * uk
                        };
                        let sigma = sy + sig[i];
                        let new = if sigma == 0.0 {
                            2.0 * uk - row[i] + c2 * lap
                        } else {
                            let a = 0.5 * sigma * dt;
                            (2.0 * uk - (1.0 - a) * row[i] + c2 * lap) / (1.0 + a)
                        };
                        if energy {
                            kin += (new - uk).powi(2);
                            pot += new * lap;
                        }
                        row[i] = new;
                    }
                    (kin, pot)
                })
                .collect();
            for (a, b) in rows {
                sums.0 += a;
                sums.1 += b;
            }
        }
        // Source term dt²·f(t^n) on the new level.
        if let Some(src) = self.source {
            let amp = dt * dt * src.wavelet(self.field.t);
            if amp != 0.0 {
                let prev = &mut self.field.u_prev[src.sheet];
                for (k, w) in &self.source_nodes {
                    prev[*k] += amp * w;
                }
            }
        }
        for s in 0..sheets {
            let f = &mut self.field;
            std::mem::swap(&mut f.u[s], &mut f.u_prev[s]);
        }
        self.field.step += 1;
        self.field.t = self.field.step as f64 * dt;
        if energy {
            let h2 = self.grid.h * self.grid.h;
            self.last_energy = Some(0.5 * h2 * (sums.0 / (dt * dt) - sums.1 / h2));
        }
    }
}

/// Time series recorded during a run.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ProbeSeries {
    pub dt: f64,
    pub probes: Vec<Probe>,
    pub times: Vec<f64>,
    /// `u[p][n]` for probe `p` at `times[n]`.
    pub u: Vec<Vec<f64>>,
    /// Localized energy samples `(t, E_χ)`.
    pub e_chi: Vec<(f64, f64)>,
    /// Discrete total energy samples `(t, E)`.
    pub energy: Vec<(f64, f64)>,
}

impl ProbeSeries {
    /// Central-difference time derivative of probe `p`.
    pub fn dudt(&self, p: usize) -> Vec<f64> {
        let u = &self.u[p];
        let m = u.len();
        (0..m)
            .map(|i| {
                let a = if i > 0 { u[i - 1] } else { u[i] };
                let b = if i + 1 < m { u[i + 1] } else { u[i] };
                let span = (i + 1).min(m - 1) - i.saturating_sub(1);
                if span == 0 {
                    0.0
                } else {
                    (b - a) / (span as f64 * self.dt)
                }
            })
            .collect()
    }

    pub fn to_csv(&self, bands: &[(f64, f64)]) -> String {
        let mut s = String::from("t,probeId,u,dudt,E_chi");
        for (a, b) in bands {
            s.push_str(&format!(",band_{a}_{b}"));
        }
        s.push('\n');
        let band_e: Vec<Vec<f64>> = self
            .u
            .iter()
            .map(|u| bands.iter().map(|(a, b)| band_energy(u, self.dt, *a, *b)).collect())
            .collect();
        for (p, probe) in self.probes.iter().enumerate() {
            let du = self.dudt(p);
            for (n, t) in self.times.iter().enumerate() {
                let e = interp_series(&self.e_chi, *t);
                s.push_str(&format!("{t},{},{},{},{}", probe.id, self.u[p][n], du[n], e));
                for b in &band_e[p] {
                    s.push_str(&format!(",{b}"));
                }
                s.push('\n');
            }
        }
        s
    }
}

fn interp_series(xs: &[(f64, f64)], t: f64) -> f64 {
    match xs.iter().rposition(|(a, _)| *a <= t) {
        Some(i) => xs[i].1,
        None => 0.0,
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunOptions {
    pub probes: Vec<Probe>,
    pub chi: Option<Chi>,
    /// Steps between `E_χ` samples.
    pub chi_every: usize,
    /// Steps between discrete-energy samples; 0 disables them.
    pub energy_every: usize,
    pub outer: Outer,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            probes: Vec::new(),
            chi: None,
            chi_every: 10,
            energy_every: 0,
            outer: Outer::Absorbing,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub field: WaveField,
    pub series: ProbeSeries,
}

fn drive(mut sim: Simulation, opts: &RunOptions) -> RunOutput {
    let steps = sim.grid.steps();
    let mut series = ProbeSeries {
        dt: sim.grid.dt,
        probes: opts.probes.clone(),
        u: vec![Vec::with_capacity(steps + 1); opts.probes.len()],
        ..Default::default()
    };
    let record = |sim: &Simulation, series: &mut ProbeSeries| {
        series.times.push(sim.field.t);
        for (p, probe) in opts.probes.iter().enumerate() {
            series.u[p].push(sim.field.sample(probe.sheet, probe.pos));
        }
    };
    record(&sim, &mut series);
    for s in 1..=steps {
        if opts.energy_every > 0 && s % opts.energy_every == 0 {
            let e = sim.step_with_energy();
            series.energy.push((sim.field.t, e));
        } else {
            sim.step();
        }
        record(&sim, &mut series);
        if let Some(chi) = &opts.chi {
            if s % opts.chi_every.max(1) == 0 {
                series.e_chi.push((sim.field.t, sim.field.local_energy(chi, sim.grid.dt)));
            }
        }
    }
    RunOutput {
        field: sim.field,
        series,
    }
}

pub fn run_exterior(scene: &PolygonScene, grid: GridSpec, source: Source, opts: &RunOptions) -> Result<RunOutput> {
    Ok(drive(Simulation::exterior(scene, grid, Some(source), opts.outer)?, opts))
}

pub fn run_doubled(surface: &ConeSurface, grid: GridSpec, source: Source, opts: &RunOptions) -> Result<RunOutput> {
    Ok(drive(Simulation::doubled(surface, grid, Some(source), opts.outer)?, opts))
}
