//! Amplitude of the averaged limit cycle past a Hopf point, and the fattened meander path it generates.

use rayon::prelude::*;
use serde::Serialize;

use super::equilibria::{newton, NewtonOptions};
use super::RationalField;
use crate::geometry::{rotate, Vec2};
use crate::meander_analysis::flower_thickness;
use crate::ode::rk4_step;
use crate::tip_track::TipPath;
use crate::trig::RotationSeries;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HopfOptions {
    pub dt: f64,
    /// Transient length in units of `1 / |zeta - zeta0|`.
    pub transient_scale: f64,
    /// Recorded window after the transient.
    pub window: f64,
    /// Initial offset from the dead equilibrium.
    pub kick: f64,
    /// Amplitudes below this are reported as zero.
    pub floor: f64,
    /// Epsilon used to map slow time to the fast time of the meander path.
    pub eps: f64,
    /// Fast-time sampling interval of the reconstructed path.
    pub path_dt: f64,
}

impl Default for HopfOptions {
    fn default() -> Self {
        Self {
            dt: 0.05,
            transient_scale: 40.0,
            window: 200.0,
            kick: 0.05,
            floor: 1e-6,
            eps: 0.01,
            path_dt: 0.05,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HopfSample {
    pub zeta: f64,
    /// Distance of the dead equilibrium from the Hopf point in `zeta`.
    pub distance: f64,
    pub equilibrium: [f64; 3],
    /// `max |psi(t) - psi_eq|` on the attractor.
    pub amplitude: f64,
    /// Band width of the reconstructed meander path, when requested.
    pub thickness: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HopfScan {
    pub zeta0: f64,
    pub samples: Vec<HopfSample>,
    /// Slope of `log amplitude` against `log |zeta - zeta0|` over samples above the floor.
    pub exponent: Option<f64>,
    pub prefactor: Option<f64>,
}

fn averaged<F: RationalField>(field: &F, zeta: f64) -> impl Fn(&[f64; 3]) -> [f64; 3] + '_ {
    move |x| {
        let (a, b) = field.eval(Vec2::new(x[0], x[1]), x[2]);
        [a.x, a.y, b + zeta]
    }
}

/// Integrates the averaged attractor near the dead equilibrium; returns slow-time samples of `(psi, phi)`.
fn attractor<F: RationalField>(field: &F, zeta: f64, eq: [f64; 3], dist: f64, opts: &HopfOptions) -> Vec<[f64; 4]> {
    let f = averaged(field, zeta);
    let mut y = [eq[0] + opts.kick, eq[1], eq[2]];
    let transient = opts.transient_scale / dist.max(1e-3);
    for _ in 0..(transient / opts.dt).ceil() as usize {
        y = rk4_step(&f, &y, opts.dt);
    }
    let n = (opts.window / opts.dt).ceil() as usize;
    let mut out = Vec::with_capacity(n + 1);
    for i in 0..=n {
        out.push([i as f64 * opts.dt, y[0], y[1], y[2]]);
        y = rk4_step(&f, &y, opts.dt);
    }
    out
}

fn fit_power_law(samples: &[HopfSample], floor: f64) -> Option<(f64, f64)> {
    let pts: Vec<(f64, f64)> = samples
        .iter()
        .filter(|s| s.amplitude > floor && s.distance > 0.0)
        .map(|s| (s.distance.ln(), s.amplitude.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    Some((slope, (my - slope * mx).exp()))
}

/// Measures the limit-cycle amplitude at each `zeta` and fits the power law.
///
/// The dead equilibrium at each `zeta` is found by Newton from `eq_guess`.
/// When `base` is given, the fattened path is reconstructed over `path_span`
/// fast-time units and its thickness measured.
pub fn hopf_amplitude_scan<F: RationalField>(
    field: &F,
    zeta0: f64,
    eq_guess: [f64; 3],
    zetas: &[f64],
    base: Option<(&RotationSeries, f64)>,
    opts: &HopfOptions,
) -> HopfScan {
    let (k, l) = field.ratio();
    let samples: Vec<HopfSample> = zetas
        .par_iter()
        .map(|&zeta| {
            let f = averaged(field, zeta);
            let r = newton(&f, eq_guess, &NewtonOptions::default());
            let eq = r.x;
            let dist = (zeta - zeta0).abs();
            let traj = attractor(field, zeta, eq, dist, opts);
            let amp = traj
                .iter()
                .map(|s| (Vec2::new(s[1], s[2]) - Vec2::new(eq[0], eq[1])).norm())
                .fold(0.0, f64::max);
            let amplitude = if amp > opts.floor { amp } else { 0.0 };
            let thickness = base.and_then(|(s, span)| {
                let path = reconstruct_fattened_path(&traj, k, l, s, opts.eps, span, opts.path_dt);
                petal_segment(&path, Vec2::new(eq[0], eq[1]), s).and_then(|seg| flower_thickness(&path, seg).ok())
            });
            HopfSample {
                zeta,
                distance: dist,
                equilibrium: eq,
                amplitude,
                thickness,
            }
        })
        .collect();
    let fit = fit_power_law(&samples, opts.floor);
    HopfScan {
        zeta0,
        samples,
        exponent: fit.map(|f| f.0),
        prefactor: fit.map(|f| f.1),
    }
}

/// Leading-order meander path `psi(eps t) + R_{phi(eps t) + k t / l} S(t)` from slow-time samples.
///
/// `slow` holds `(tau, psi1, psi2, phi)` at uniform slow time; it is interpolated
/// linearly and wrapped periodically when `span` exceeds its length.
pub fn reconstruct_fattened_path(
    slow: &[[f64; 4]],
    k: i32,
    l: i32,
    base: &RotationSeries,
    eps: f64,
    span: f64,
    dt: f64,
) -> TipPath {
    let w = k as f64 / l as f64;
    let n = (span / dt).ceil() as usize;
    let dtau = if slow.len() >= 2 { slow[1][0] - slow[0][0] } else { 1.0 };
    let last = slow.len().saturating_sub(1).max(1);
    let mut path = TipPath::default();
    for i in 0..=n {
        let t = i as f64 * dt;
        let s = (eps * t / dtau) % last as f64;
        let a = s.floor() as usize;
        let fr = s - a as f64;
        let b = (a + 1).min(slow.len() - 1);
        let lerp = |c: usize| slow[a][c] * (1.0 - fr) + slow[b][c] * fr;
        let psi = Vec2::new(lerp(1), lerp(2));
        let p = psi + rotate(lerp(3) + w * t, base.eval(t));
        path.push(t, p);
    }
    path
}

/// Radial segment through the outermost point of the path around `center`.
fn petal_segment(path: &TipPath, center: Vec2, base: &RotationSeries) -> Option<(Vec2, Vec2)> {
    let pts = path.points();
    let far = pts
        .iter()
        .max_by(|a, b| (*a - center).norm().total_cmp(&(*b - center).norm()))?;
    let dir = (far - center).try_normalize(1e-12)?;
    let reach = 0.25 * base.coeffs().values().map(|v| v.norm()).sum::<f64>().max(1e-3);
    Some((far - reach * dir, far + reach * dir))
}

#[cfg(test)]
mod tests {
    use super::super::hopf_plant;
    use super::*;
    use std::collections::BTreeMap;

    fn zetas(z0: f64) -> Vec<f64> {
        (0..6).map(|i| z0 + 0.001 * 2f64.powi(i)).collect()
    }

    #[test]
    fn normal_form_exponent_is_one_half() {
        let plant = hopf_plant();
        let z0 = plant.hopf_zeta();
        let zs = zetas(z0);
        let guess = [0.0, 0.0, plant.branch_phi(z0).unwrap()];
        let scan = hopf_amplitude_scan(&plant.averaged(), z0, guess, &zs, None, &HopfOptions::default());
        let e = scan.exponent.unwrap();
        assert!((e - 0.5).abs() < 0.05, "exponent {e}: {:?}", scan.samples);
    }

    #[test]
    fn dead_side_amplitude_is_zero() {
        let plant = hopf_plant();
        let z0 = plant.hopf_zeta();
        let guess = [0.0, 0.0, plant.branch_phi(z0).unwrap()];
        let scan = hopf_amplitude_scan(
            &plant.averaged(),
            z0,
            guess,
            &[z0 - 0.05],
            None,
            &HopfOptions::default(),
        );
        assert_eq!(scan.samples[0].amplitude, 0.0);
    }

    #[test]
    fn thickness_grows_with_distance() {
        let plant = hopf_plant();
        let z0 = plant.hopf_zeta();
        let zs = [z0 + 0.002, z0 + 0.008, z0 + 0.032];
        let guess = [0.0, 0.0, plant.branch_phi(z0).unwrap()];
        let mut m = BTreeMap::new();
        m.insert(0, Vec2::new(1.0, 0.0));
        m.insert(1, Vec2::new(0.5, 0.0));
        let base = RotationSeries::new(m);
        let opts = HopfOptions {
            window: 400.0,
            ..HopfOptions::default()
        };
        let scan = hopf_amplitude_scan(&plant.averaged(), z0, guess, &zs, Some((&base, 40_000.0)), &opts);
        let th: Vec<f64> = scan.samples.iter().map(|s| s.thickness.unwrap()).collect();
        assert!(th.windows(2).all(|w| w[1] > w[0]), "{th:?}");
    }
}
