//! Checkers for the three geometric hypotheses: non-trapping of geometric
//! geodesics, no geometric geodesic through three cone points, and no
//! conjugate cone points.

use crate::flow::{self, ConeLink, ContinuationPolicy, GeodesicChain, RayState, Terminal};
use crate::geom::{circle_distance, Vec2};
use crate::surface::{min_cone_distance, ConeSurface, MetricKind, SurfacePoint};
use crate::{Error, Result};
use log::{info, warn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;
use std::f64::consts::{PI, TAU};

/// Departure-fan resolution used when enumerating cone-to-cone geodesics.
pub const DEFAULT_FAN: usize = 4096;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum NonTrappingVerdict {
    Pass { t0: f64 },
    Fail { chain: Box<GeodesicChain> },
    Indeterminate { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonTrappingReport {
    pub verdict: NonTrappingVerdict,
    pub samples: usize,
    pub horizon: f64,
    /// Largest escape time observed over all sampled chains.
    pub max_escape: f64,
    pub margin: f64,
    /// Chains with two or more geometric interactions (kept, but flagged).
    pub non_approximable: usize,
    pub seed: u64,
}

impl NonTrappingReport {
    pub fn t0(&self) -> Option<f64> {
        match self.verdict {
            NonTrappingVerdict::Pass { t0 } => Some(t0),
            _ => None,
        }
    }

    pub fn passed(&self) -> bool {
        matches!(self.verdict, NonTrappingVerdict::Pass { .. })
    }

    pub fn to_json(&self) -> serde_json::Value {
        let (verdict, witnesses) = match &self.verdict {
            NonTrappingVerdict::Pass { .. } => ("Pass", vec![]),
            NonTrappingVerdict::Fail { chain } => ("Fail", vec![json!(chain)]),
            NonTrappingVerdict::Indeterminate { reason } => ("Indeterminate", vec![json!(reason)]),
        };
        json!({
            "assumption": 1,
            "verdict": verdict,
            "parameters": {
                "samples": self.samples, "horizon": self.horizon, "seed": self.seed,
            },
            "witnesses": witnesses,
            "certificates": [{
                "T0": self.t0(), "maxEscape": self.max_escape, "margin": self.margin,
                "nonApproximableChains": self.non_approximable,
            }],
        })
    }
}

/// Low-discrepancy point `i` in base `b`.
fn radical_inverse(mut i: u64, b: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    let inv = 1.0 / b as f64;
    while i > 0 {
        f *= inv;
        r += f * (i % b) as f64;
        i /= b;
    }
    r
}

/// Quasi-uniform initial conditions in `{|z| < R1}` outside the obstacles,
/// cycling over sheets. The Halton sequence is shifted by a seeded rotation.
pub fn sample_initial_conditions(surface: &ConeSurface, n: usize, seed: u64) -> Vec<RayState> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift: [f64; 3] = [rng.gen(), rng.gen(), rng.gen()];
    let r1 = surface.euclidean_radius;
    let sheets = surface.sheets.len().max(1);
    let mut out = Vec::with_capacity(n);
    let mut i = 1u64;
    while out.len() < n {
        let u = (radical_inverse(i, 2) + shift[0]).fract();
        let v = (radical_inverse(i, 3) + shift[1]).fract();
        let w = (radical_inverse(i, 5) + shift[2]).fract();
        i += 1;
        let pos = Vec2::from_angle(TAU * v) * (r1 * u.sqrt());
        if surface.is_interior_of_obstacle(pos) {
            continue;
        }
        let sheet = out.len() % sheets;
        let near_boundary = surface
            .edges
            .iter()
            .any(|e| crate::geom::point_segment_distance(pos, e.a, e.b) < 10.0 * surface.eps_hit);
        if near_boundary {
            continue;
        }
        out.push(RayState {
            point: SurfacePoint { sheet, pos },
            dir: Vec2::from_angle(TAU * w),
            time: 0.0,
            anchor: flow::Anchor::Free,
        });
    }
    out
}

/// Decides non-trapping of geometric geodesics by sampled branching traces.
pub fn check_nontrapping(
    surface: &ConeSurface,
    n_samples: usize,
    horizon: f64,
    seed: u64,
) -> Result<NonTrappingReport> {
    let r1 = surface.euclidean_radius;
    if !(horizon > 2.0 * r1) {
        return Err(Error::InvalidArgument(format!(
            "horizon {horizon} must exceed 2·R1 = {}",
            2.0 * r1
        )));
    }
    let starts = sample_initial_conditions(surface, n_samples, seed);
    // Per-sample: (max escape, trapped chain, truncated, non-approximable count, depth)
    let per: Vec<(f64, Option<GeodesicChain>, bool, usize, usize)> = starts
        .par_iter()
        .map(|s| {
            let res = flow::trace(surface, s, horizon, ContinuationPolicy::GeometricBranch);
            let mut max_t = 0.0f64;
            let mut trapped = None;
            let mut flagged = 0;
            let mut depth = 0;
            for ch in res.chains {
                if ch.possibly_non_approximable() {
                    flagged += 1;
                }
                depth = depth.max(ch.segments.len());
                match ch.terminal {
                    Terminal::Escaped => max_t = max_t.max(ch.total_time),
                    Terminal::Horizon => {
                        if trapped.is_none() {
                            trapped = Some(ch);
                        }
                    }
                    Terminal::AtConePoint => {}
                }
            }
            (max_t, trapped, res.truncated, flagged, depth)
        })
        .collect();
    let max_escape = per.iter().map(|p| p.0).fold(0.0, f64::max);
    let non_approximable = per.iter().map(|p| p.3).sum();
    let vol = PI * r1 * r1 * TAU * surface.sheets.len() as f64;
    let cell = (vol / n_samples.max(1) as f64).cbrt();
    let margin = cell * (1.0 + max_escape);
    let verdict = if let Some(ch) = per.iter().find_map(|p| p.1.clone()) {
        NonTrappingVerdict::Fail { chain: Box::new(ch) }
    } else if per.iter().any(|p| p.2) {
        NonTrappingVerdict::Indeterminate {
            reason: format!("branch cap {} reached", flow::BRANCH_CAP),
        }
    } else {
        NonTrappingVerdict::Pass {
            t0: max_escape + margin,
        }
    };
    info!("non-trapping: {verdict:?} over {} samples", starts.len());
    Ok(NonTrappingReport {
        verdict,
        samples: starts.len(),
        horizon,
        max_escape,
        margin,
        non_approximable,
        seed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollinearWitness {
    pub cones: [usize; 3],
    /// Link distance at the middle cone between arrival and departure.
    pub link_distance: f64,
    pub first: ConeLink,
    pub second: ConeLink,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollinearityReport {
    pub witnesses: Vec<CollinearWitness>,
    pub max_length: f64,
    pub fan: usize,
    /// Whether two successive fan resolutions agreed on the witness set.
    pub resolved: bool,
    pub segments_found: usize,
}

impl CollinearityReport {
    pub fn passed(&self) -> bool {
        self.witnesses.is_empty()
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "assumption": 2,
            "verdict": if self.passed() { "Pass" } else { "Fail" },
            "parameters": {
                "maxLength": self.max_length, "fan": self.fan, "resolved": self.resolved,
            },
            "witnesses": self.witnesses,
            "certificates": [{ "coneToConeSegments": self.segments_found }],
        })
    }
}

/// All `(α → β, β → γ)` pairs whose turn at `β` is at link distance π.
pub fn collinear_witnesses(surface: &ConeSurface, links: &[ConeLink], tol_g: f64) -> Vec<CollinearWitness> {
    let mut out = Vec::new();
    for a in links {
        let mid = &surface.cone_points[a.to];
        for b in links.iter().filter(|b| b.from == a.to) {
            let d = circle_distance(a.link_in, b.link_out, mid.angle);
            if (d - PI).abs() <= tol_g {
                out.push(CollinearWitness {
                    cones: [a.from, a.to, b.to],
                    link_distance: d,
                    first: a.clone(),
                    second: b.clone(),
                });
            }
        }
    }
    out
}

fn witness_key(w: &CollinearWitness) -> ([usize; 3], i64, i64) {
    (
        w.cones,
        (w.first.link_out * 1e6).round() as i64,
        (w.second.link_out * 1e6).round() as i64,
    )
}

/// Searches cone-to-cone geodesics up to `max_length` for a geometric turn.
pub fn check_collinear(surface: &ConeSurface, max_length: f64, fan: usize) -> CollinearityReport {
    let l = min_cone_distance(surface);
    if l.is_finite() && max_length < 2.0 * l {
        warn!("check_collinear: max_length {max_length} < 2L = {}", 2.0 * l);
    }
    let mut fan = fan.max(8);
    let mut links = flow::cone_to_cone(surface, max_length, fan);
    let mut w = collinear_witnesses(surface, &links, flow::TOL_G);
    let mut resolved = false;
    for _ in 0..3 {
        let finer = flow::cone_to_cone(surface, max_length, 2 * fan);
        let w2 = collinear_witnesses(surface, &finer, flow::TOL_G);
        let mut k1: Vec<_> = w.iter().map(witness_key).collect();
        let mut k2: Vec<_> = w2.iter().map(witness_key).collect();
        k1.sort();
        k2.sort();
        fan *= 2;
        let agree = k1 == k2 && links.len() == finer.len();
        links = finer;
        w = w2;
        if agree {
            resolved = true;
            break;
        }
    }
    CollinearityReport {
        witnesses: w,
        max_length,
        fan,
        resolved,
        segments_found: links.len(),
    }
}

/// Normal Jacobi field `W(t) = (a + b·t)·n(t)` along a straight geodesic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JacobiFrame {
    pub a: f64,
    pub b: f64,
}

/// Transports a flat Jacobi frame by arc length `len`.
pub fn transport_jacobi(frame: JacobiFrame, len: f64) -> JacobiFrame {
    JacobiFrame {
        a: frame.a + frame.b * len,
        b: frame.b,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConjugacyCertificate {
    pub from: usize,
    pub to: usize,
    pub length: f64,
    /// Determinant of the boundary system `a = 0, a + b·ℓ = 0`.
    pub determinant: f64,
    pub solution: JacobiFrame,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConjugacyReport {
    pub failures: Vec<ConjugacyCertificate>,
    pub certificates: Vec<ConjugacyCertificate>,
    pub t_max: f64,
}

impl ConjugacyReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "assumption": 3,
            "verdict": if self.passed() { "Pass" } else { "Fail" },
            "parameters": { "Tmax": self.t_max },
            "witnesses": self.failures,
            "certificates": self.certificates,
        })
    }
}

/// Solves for a b-normal Jacobi field (length vanishing at both cone ends)
/// along one cone-to-cone geodesic of length `len`.
pub fn conjugacy_certificate(from: usize, to: usize, len: f64) -> ConjugacyCertificate {
    // [1 0; 1 ℓ] (a, b)ᵀ = 0
    let det = len;
    let solution = if det != 0.0 {
        JacobiFrame { a: 0.0, b: 0.0 }
    } else {
        JacobiFrame { a: 0.0, b: 1.0 }
    };
    ConjugacyCertificate {
        from,
        to,
        length: len,
        determinant: det,
        solution,
    }
}

/// Looks for conjugate cone points along geodesics of length at most `t_max`.
pub fn check_conjugacy(surface: &ConeSurface, t_max: f64, fan: usize) -> Result<ConjugacyReport> {
    if surface.metric != MetricKind::Flat {
        return Err(Error::Unsupported(
            "conjugacy for curved conic metrics needs the Jacobi ODE".into(),
        ));
    }
    let links = flow::cone_to_cone(surface, t_max, fan);
    let mut certificates = Vec::new();
    let mut failures = Vec::new();
    for l in &links {
        let c = conjugacy_certificate(l.from, l.to, l.length);
        let s = c.solution;
        let end = transport_jacobi(s, l.length);
        if s.a == 0.0 && end.a == 0.0 && (s.b != 0.0) {
            failures.push(c.clone());
        }
        certificates.push(c);
    }
    Ok(ConjugacyReport {
        failures,
        certificates,
        t_max,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::{double_exterior, square_scene, BoundaryCondition};

    #[test]
    fn jacobi_transport_examples() {
        assert_eq!(
            transport_jacobi(JacobiFrame { a: 0.0, b: 1.0 }, 2.0),
            JacobiFrame { a: 2.0, b: 1.0 }
        );
        assert_eq!(
            transport_jacobi(JacobiFrame { a: 1.0, b: 0.0 }, 7.5),
            JacobiFrame { a: 1.0, b: 0.0 }
        );
        let f = JacobiFrame { a: 0.3, b: -1.2 };
        let two = transport_jacobi(transport_jacobi(f, 0.7), 1.9);
        let one = transport_jacobi(f, 2.6);
        assert!((two.a - one.a).abs() < 1e-15 && two.b == one.b);
    }

    #[test]
    fn certificate_forces_zero_field() {
        let c = conjugacy_certificate(0, 1, 1.5);
        assert_eq!(c.solution, JacobiFrame { a: 0.0, b: 0.0 });
        assert_eq!(c.determinant, 1.5);
    }

    #[test]
    fn curved_metric_is_unsupported() {
        let mut s =
            double_exterior(&square_scene(1.0, 1.0, 2.0, BoundaryCondition::Dirichlet)).unwrap();
        s.metric = MetricKind::Curved;
        let err = check_conjugacy(&s, 20.0, 64).unwrap_err();
        assert!(err.to_string().contains("unsupported geometry"));
    }

    #[test]
    fn horizon_must_exceed_diameter_of_omega() {
        let s = double_exterior(&square_scene(1.0, 1.0, 2.0, BoundaryCondition::Dirichlet)).unwrap();
        assert!(check_nontrapping(&s, 10, 3.0, 0).is_err());
    }

    #[test]
    fn samples_avoid_obstacles_and_are_seeded() {
        let s = double_exterior(&square_scene(1.0, 1.0, 2.0, BoundaryCondition::Dirichlet)).unwrap();
        let a = sample_initial_conditions(&s, 500, 7);
        let b = sample_initial_conditions(&s, 500, 7);
        assert_eq!(a, b);
        assert!(a.iter().all(|r| !s.is_interior_of_obstacle(r.point.pos)));
        assert!(a.iter().any(|r| r.point.sheet == 1));
    }
}
