//! Observables extracted from probe series: arrivals, band content,
//! diffraction contrast and windowed decay.

use super::{Chi, GridSpec, Outer, PolygonScene, ProbeSeries, RunOptions, Simulation, Source};
use crate::surface::ConeSurface;
use crate::{Error, Result};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::Serialize;

fn spectrum(signal: &[f64]) -> (Vec<Complex<f64>>, usize) {
    let m = (2 * signal.len()).next_power_of_two().max(2);
    let mut buf: Vec<Complex<f64>> = signal.iter().map(|x| Complex::new(*x, 0.0)).collect();
    buf.resize(m, Complex::new(0.0, 0.0));
    FftPlanner::new().plan_fft_forward(m).process(&mut buf);
    (buf, m)
}

fn inverse(mut buf: Vec<Complex<f64>>, len: usize) -> Vec<Complex<f64>> {
    let m = buf.len();
    FftPlanner::new().plan_fft_inverse(m).process(&mut buf);
    buf.truncate(len);
    buf.iter().map(|c| c / m as f64).collect()
}

/// Ideal band-pass to `[f_lo, f_hi]` (cycles per unit time).
pub fn band_pass(signal: &[f64], dt: f64, f_lo: f64, f_hi: f64) -> Vec<f64> {
    if signal.is_empty() {
        return Vec::new();
    }
    let (mut buf, m) = spectrum(signal);
    for (i, c) in buf.iter_mut().enumerate() {
        let f = i.min(m - i) as f64 / (m as f64 * dt);
        if f < f_lo || f > f_hi {
            *c = Complex::new(0.0, 0.0);
        }
    }
    inverse(buf, signal.len()).iter().map(|c| c.re).collect()
}

/// `∫ |band-passed signal|² dt`.
pub fn band_energy(signal: &[f64], dt: f64, f_lo: f64, f_hi: f64) -> f64 {
    band_pass(signal, dt, f_lo, f_hi).iter().map(|x| x * x).sum::<f64>() * dt
}

/// Modulus of the analytic signal.
pub fn envelope(signal: &[f64]) -> Vec<f64> {
    if signal.is_empty() {
        return Vec::new();
    }
    let (mut buf, m) = spectrum(signal);
    for (i, c) in buf.iter_mut().enumerate() {
        if i > 0 && i < m / 2 {
            *c *= 2.0;
        } else if i > m / 2 {
            *c = Complex::new(0.0, 0.0);
        }
    }
    inverse(buf, signal.len()).iter().map(|c| c.norm()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrivalOptions {
    /// Fraction of the envelope maximum an arrival must exceed.
    pub threshold: f64,
    /// Optional band-pass before the envelope.
    pub band: Option<(f64, f64)>,
    /// Source delay subtracted from the picked times.
    pub delay: f64,
    /// Arrivals closer than this are merged.
    pub min_separation: f64,
}

impl ArrivalOptions {
    pub fn for_source(src: &Source) -> ArrivalOptions {
        ArrivalOptions {
            threshold: 0.1,
            band: None,
            delay: src.delay(),
            min_separation: 2.0 * src.half_width(),
        }
    }
}

/// Travel times of the successive envelope peaks of probe `p`, earliest first.
/// Empty when the signal never rises above the threshold.
pub fn arrival_times(series: &ProbeSeries, p: usize, opts: &ArrivalOptions) -> Vec<f64> {
    let raw = &series.u[p];
    let sig = match opts.band {
        Some((a, b)) => band_pass(raw, series.dt, a, b),
        None => raw.clone(),
    };
    let env = envelope(&sig);
    let peak = env.iter().cloned().fold(0.0, f64::max);
    if peak <= 0.0 {
        return Vec::new();
    }
    let thr = opts.threshold * peak;
    let mut out: Vec<f64> = Vec::new();
    for i in 1..env.len().saturating_sub(1) {
        if env[i] >= thr && env[i] >= env[i - 1] && env[i] > env[i + 1] {
            let t = series.times[i] - opts.delay;
            match out.last() {
                Some(last) if t - last < opts.min_separation => {}
                _ => out.push(t),
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ProbeRole {
    Geometric,
    Diffracted,
}

#[derive(Debug, Clone, Serialize)]
pub struct ContrastReport {
    pub band: (f64, f64),
    pub path_length: f64,
    pub geometric_peak: f64,
    pub diffracted_peak: f64,
    /// Diffracted over geometric high-band peak amplitude.
    pub ratio: f64,
}

/// Compares the high-band peaks of a line-of-sight probe and a shadow probe
/// at the same travel distance `path_length`, inside a window of three pulse
/// half-widths around the expected arrival.
pub fn diffraction_contrast(
    surface: &ConeSurface,
    source: &Source,
    series: &ProbeSeries,
    probes: [(usize, ProbeRole); 2],
    path_length: f64,
    band: (f64, f64),
) -> Result<ContrastReport> {
    let mut geo = None;
    let mut diff = None;
    for (p, role) in probes {
        let probe = series
            .probes
            .get(p)
            .ok_or_else(|| Error::InvalidArgument(format!("no probe {p}")))?;
        let visible = surface.segment_clear(source.pos, probe.pos) && probe.sheet == source.sheet;
        match role {
            ProbeRole::Geometric if visible => geo = Some(p),
            ProbeRole::Diffracted if !visible => diff = Some(p),
            ProbeRole::Geometric => {
                return Err(Error::InvalidArgument(format!("geometric probe {p} is not in line of sight")))
            }
            ProbeRole::Diffracted => {
                return Err(Error::InvalidArgument(format!(
                    "diffracted probe {p} is in line of sight of the source"
                )))
            }
        }
    }
    let (Some(g), Some(d)) = (geo, diff) else {
        return Err(Error::InvalidArgument("need one geometric and one diffracted probe".into()));
    };
    let t_c = source.delay() + path_length;
    let w = 3.0 * source.half_width();
    let peak = |p: usize| {
        let bp = band_pass(&series.u[p], series.dt, band.0, band.1);
        bp.iter()
            .zip(&series.times)
            .filter(|(_, t)| (**t - t_c).abs() <= w)
            .map(|(x, _)| x.abs())
            .fold(0.0, f64::max)
    };
    let (gp, dp) = (peak(g), peak(d));
    Ok(ContrastReport {
        band,
        path_length,
        geometric_peak: gp,
        diffracted_peak: dp,
        ratio: dp / gp,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct DecayReport {
    pub e_chi: Vec<(f64, f64)>,
    pub max_e_chi: f64,
    /// First time after the peak at which `E_χ < 10⁻³·max`.
    pub t_below: Option<f64>,
    /// Time after which the sampled `E_χ` never increases again.
    pub monotone_after: Option<f64>,
    pub t0: f64,
    /// Top-band energy of `χu` over `[5kT0, 5(k+1)T0]`, k = 0, 1, ….
    pub window_energy: Vec<f64>,
    pub windows_decreasing: bool,
    pub sponge_reflection: f64,
    /// False when the sponge reflected more than 1% of the incident energy.
    pub valid: bool,
}

/// Summarises decay of a run. `band` selects the top band; probe series are
/// weighted by `χ` at the probe positions.
pub fn decay_report(
    series: &ProbeSeries,
    chi: &Chi,
    t0: f64,
    windows: usize,
    band: (f64, f64),
    sponge_reflection: f64,
) -> DecayReport {
    let e = series.e_chi.clone();
    let (imax, max) = e
        .iter()
        .enumerate()
        .fold((0, 0.0), |acc, (i, (_, v))| if *v > acc.1 { (i, *v) } else { acc });
    let t_below = e[imax.min(e.len().saturating_sub(1))..]
        .iter()
        .find(|(_, v)| *v < 1e-3 * max)
        .map(|(t, _)| *t);
    let mut monotone_after = e.last().map(|(t, _)| *t);
    for i in (1..e.len()).rev() {
        if e[i].1 > e[i - 1].1 * (1.0 + 1e-12) {
            break;
        }
        monotone_after = Some(e[i - 1].0);
    }
    let mut window_energy = Vec::with_capacity(windows);
    for k in 0..windows {
        let (a, b) = (5.0 * k as f64 * t0, 5.0 * (k + 1) as f64 * t0);
        let idx: Vec<usize> = (0..series.times.len())
            .filter(|i| series.times[*i] >= a && series.times[*i] < b)
            .collect();
        let mut total = 0.0;
        for (p, probe) in series.probes.iter().enumerate() {
            let c = chi.at(probe.pos);
            if c == 0.0 || idx.is_empty() {
                continue;
            }
            let m = idx.len();
            let seg: Vec<f64> = idx
                .iter()
                .enumerate()
                .map(|(q, i)| {
                    let hann = 0.5 - 0.5 * (2.0 * std::f64::consts::PI * q as f64 / (m.max(2) - 1) as f64).cos();
                    c * series.u[p][*i] * hann
                })
                .collect();
            total += band_energy(&seg, series.dt, band.0, band.1);
        }
        window_energy.push(total);
    }
    let windows_decreasing = window_energy.windows(2).all(|w| w[1] < w[0]);
    DecayReport {
        e_chi: e,
        max_e_chi: max,
        t_below,
        monotone_after,
        t0,
        window_energy,
        windows_decreasing,
        sponge_reflection,
        valid: sponge_reflection <= 0.01,
    }
}

/// Fraction of the peak local energy that comes back from the sponge: the
/// run is compared step by step with a run on a domain large enough that no
/// wave reaches its sponge before `T`, and the `χ`-energy of the difference
/// is measured.
pub fn sponge_reflection(scene: &PolygonScene, grid: GridSpec, source: Source, chi: &Chi) -> Result<f64> {
    let reach = source.pos.norm() + source.support_radius() + grid.t_final + grid.sponge_width + grid.h;
    let big = GridSpec {
        domain_radius: grid.domain_radius.max(reach + chi.radius),
        ..grid
    };
    let mut a = Simulation::exterior(scene, grid, Some(source), Outer::Absorbing)?;
    let mut b = Simulation::exterior(scene, big, Some(source), Outer::Absorbing)?;
    let off = (b.field.n - a.field.n) / 2;
    let (na, nb) = (a.field.n, b.field.n);
    let every = RunOptions::default().chi_every;
    let mut worst: f64 = 0.0;
    let mut peak: f64 = 0.0;
    let mut diff = a.field.clone();
    for s in 1..=grid.steps() {
        a.step();
        b.step();
        if s % every != 0 {
            continue;
        }
        for j in 0..na {
            for i in 0..na {
                let ka = j * na + i;
                let kb = (j + off) * nb + i + off;
                diff.u[0][ka] = a.field.u[0][ka] - b.field.u[0][kb];
                diff.u_prev[0][ka] = a.field.u_prev[0][ka] - b.field.u_prev[0][kb];
            }
        }
        worst = worst.max(diff.local_energy(chi, grid.dt));
        peak = peak.max(a.field.local_energy(chi, grid.dt));
    }
    Ok(if peak > 0.0 { worst / peak } else { 0.0 })
}
