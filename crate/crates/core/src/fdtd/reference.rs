//! Closed-form references for the wave solver.
//!
//! For the Gaussian–Ricker source the free-space solution is radial in the
//! distance `ρ` from the source centre:
//!
//! `u(ρ, t) = (1/2π) ∫₀^∞ e^{−k²σ²/2} J₀(kρ) r̂(k) sin(k(t − t₀)) dk`,
//!
//! with `r̂(k) = √(π/a) e^{−k²/4a} k²/(2a)`, `a = π²f₀²`, the Fourier
//! transform of the Ricker wavelet.

use super::Source;
use crate::geom::Vec2;
use std::f64::consts::PI;

/// Simpson quadrature of the radial integral at one `(ρ, t)`.
pub fn free_space(src: &Source, rho: f64, t: f64) -> f64 {
    let a = (PI * src.f0).powi(2);
    let kmax = (4.0 * a * 50.0).sqrt();
    let tau = t - src.delay();
    // Resolve the fastest oscillation with about 24 points per period.
    let m = (((rho + tau.abs()) * kmax / (2.0 * PI) * 24.0).ceil() as usize).max(400);
    let m = m + m % 2;
    let dk = kmax / m as f64;
    let norm = (PI / a).sqrt() / (2.0 * a);
    let f = |k: f64| {
        (-k * k * src.sigma * src.sigma / 2.0 - k * k / (4.0 * a)).exp()
            * libm::j0(k * rho)
            * k
            * k
            * (k * tau).sin()
    };
    let mut s = f(0.0) + f(kmax);
    for i in 1..m {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(i as f64 * dk);
    }
    src.amplitude * norm * s * dk / 3.0 / (2.0 * PI)
}

/// Free-space profile tabulated on `[0, rho_max]` at a fixed time.
pub struct RadialTable {
    pub t: f64,
    pub drho: f64,
    pub values: Vec<f64>,
    center: Vec2,
}

impl RadialTable {
    pub fn new(src: &Source, t: f64, rho_max: f64, m: usize) -> RadialTable {
        use rayon::prelude::*;
        let drho = rho_max / m as f64;
        let values = (0..=m).into_par_iter().map(|i| free_space(src, i as f64 * drho, t)).collect();
        RadialTable {
            t,
            drho,
            values,
            center: src.pos,
        }
    }

    pub fn at(&self, z: Vec2) -> f64 {
        let x = z.dist(self.center) / self.drho;
        let i = x.floor() as usize;
        if i + 1 >= self.values.len() {
            return 0.0;
        }
        let a = x - i as f64;
        (1.0 - a) * self.values[i] + a * self.values[i + 1]
    }
}

/// Half-plane reference by the method of images: the wall passes through
/// `wall` with unit normal `normal`; Dirichlet subtracts the mirrored source,
/// Neumann adds it.
pub fn half_plane(table: &RadialTable, z: Vec2, wall: Vec2, normal: Vec2, dirichlet: bool) -> f64 {
    let src = table.center;
    let mirror_src = src - normal * (2.0 * (src - wall).dot(normal));
    let direct = table.at(z);
    let image = table.at(z - mirror_src + src);
    if dirichlet {
        direct - image
    } else {
        direct + image
    }
}
