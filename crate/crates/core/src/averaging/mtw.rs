//! Orientation locking of the integer-`omega` standard form: modulated travelling waves.

use std::f64::consts::TAU;

use rayon::prelude::*;
use serde::Serialize;

use crate::center_bundle::IntStandardForm;
use crate::geometry::{angle_diff, rotate, Vec2};
use crate::ode::rk4_step;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MtwOptions {
    pub psi_nodes: usize,
    pub theta_nodes: usize,
    pub phi_grid: usize,
    /// Transient in units of `1 / (eps |alpha|)`.
    pub transient_rates: f64,
    /// Recorded window after the transient.
    pub window: f64,
    pub dt: f64,
    /// Initial offset of `phi` from the root.
    pub phi_offset: f64,
    /// Allowed drift-angle error in radians.
    pub angle_tol: f64,
    /// Accepted range of the band ratio between the first two `eps`.
    pub ratio_window: (f64, f64),
}

impl Default for MtwOptions {
    fn default() -> Self {
        Self {
            psi_nodes: 64,
            theta_nodes: 32,
            phi_grid: 64,
            transient_rates: 16.0,
            window: 400.0,
            dt: 0.2,
            phi_offset: 0.05,
            angle_tol: 0.01,
            ratio_window: (5.0, 20.0),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OrientationRoot {
    pub phi0: f64,
    /// `Z'(phi0)`.
    pub alpha: f64,
    pub stable: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MtwRun {
    pub eps: f64,
    pub phi0: f64,
    /// `max phi - min phi` over the window.
    pub band: f64,
    pub phi_mean: f64,
    pub drift_angle: f64,
    pub expected_angle: f64,
    pub angle_error: f64,
    pub speed: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MtwVerdict {
    pub roots: Vec<OrientationRoot>,
    pub runs: Vec<MtwRun>,
    /// `band(eps_0) / band(eps_1)` for the first stable root.
    pub band_ratio: Option<f64>,
    pub ratio_window: (f64, f64),
    pub angle_tol: f64,
    /// Set when `Z` has no root: the orientation does not lock.
    pub no_root: bool,
}

impl MtwVerdict {
    pub fn drift_ok(&self) -> bool {
        !self.runs.is_empty() && self.runs.iter().all(|r| r.angle_error <= self.angle_tol)
    }

    pub fn band_ratio_ok(&self) -> bool {
        self.band_ratio
            .is_some_and(|r| r >= self.ratio_window.0 && r <= self.ratio_window.1)
    }
}

/// `Z(phi) = (2 pi)^-3 int H2(psi, phi, theta) dpsi dtheta` by the tensor trapezoid rule.
pub fn orientation_average<S: IntStandardForm>(form: &S, phi: f64, psi_nodes: usize, theta_nodes: usize) -> f64 {
    let total: f64 = (0..psi_nodes)
        .into_par_iter()
        .map(|a| {
            let x = TAU * a as f64 / psi_nodes as f64;
            let mut s = 0.0;
            for b in 0..psi_nodes {
                let y = TAU * b as f64 / psi_nodes as f64;
                for c in 0..theta_nodes {
                    let th = TAU * c as f64 / theta_nodes as f64;
                    s += form.h2(Vec2::new(x, y), phi, th);
                }
            }
            s
        })
        .sum();
    total / (psi_nodes * psi_nodes * theta_nodes) as f64
}

fn find_roots(z: &dyn Fn(f64) -> f64, grid: usize) -> Vec<OrientationRoot> {
    let xs: Vec<f64> = (0..=grid).map(|i| TAU * i as f64 / grid as f64).collect();
    let mut vals: Vec<f64> = xs[..grid].iter().map(|&x| z(x)).collect();
    vals.push(vals[0]);
    let mut roots = Vec::new();
    for i in 0..grid {
        let (mut a, mut b) = (xs[i], xs[i + 1]);
        let (mut fa, fb) = (vals[i], vals[i + 1]);
        if fa == 0.0 {
            roots.push(a);
            continue;
        }
        if fa * fb > 0.0 || fb == 0.0 {
            continue;
        }
        while b - a > 1e-13 {
            let m = 0.5 * (a + b);
            let fm = z(m);
            if fm == 0.0 {
                a = m;
                b = m;
                break;
            }
            if fa * fm < 0.0 {
                b = m;
            } else {
                a = m;
                fa = fm;
            }
        }
        roots.push(0.5 * (a + b));
    }
    let h = 1e-5;
    roots
        .into_iter()
        .map(|phi0| {
            let alpha = (z(phi0 + h) - z(phi0 - h)) / (2.0 * h);
            OrientationRoot {
                phi0: crate::geometry::wrap_angle(phi0),
                alpha,
                stable: alpha < 0.0,
            }
        })
        .collect()
}

/// Integrates the full integer-`omega` standard form from near a stable orientation and measures the `phi` band and drift.
pub fn mtw_run<S: IntStandardForm>(form: &S, root: &OrientationRoot, eps: f64, opts: &MtwOptions) -> MtwRun {
    let f = |s: &[f64; 4]| form.rhs(eps, s);
    let phi_start = if eps > 0.0 {
        root.phi0 + opts.phi_offset
    } else {
        root.phi0
    };
    let mut y = [0.0, 0.0, phi_start, 0.0];
    let transient = if eps > 0.0 {
        opts.transient_rates / (eps * root.alpha.abs().max(1e-12))
    } else {
        0.0
    };
    for _ in 0..(transient / opts.dt).ceil() as usize {
        y = rk4_step(&f, &y, opts.dt);
    }
    let start = Vec2::new(y[0], y[1]);
    let n = (opts.window / opts.dt).ceil() as usize;
    let (mut lo, mut hi, mut sum) = (y[2], y[2], 0.0);
    for _ in 0..n {
        y = rk4_step(&f, &y, opts.dt);
        lo = lo.min(y[2]);
        hi = hi.max(y[2]);
        sum += y[2];
    }
    let disp = Vec2::new(y[0], y[1]) - start;
    let phi_ref = if eps > 0.0 { root.phi0 } else { phi_start };
    let expected = rotate(phi_ref, form.drift());
    let drift_angle = disp.y.atan2(disp.x);
    let expected_angle = expected.y.atan2(expected.x);
    MtwRun {
        eps,
        phi0: root.phi0,
        band: hi - lo,
        phi_mean: sum / n as f64,
        drift_angle,
        expected_angle,
        angle_error: angle_diff(drift_angle, expected_angle).abs(),
        speed: disp.norm() / (n as f64 * opts.dt),
    }
}

/// Locates orientation roots of `Z` and checks the stable ones at each `eps`.
pub fn modulated_travelling_wave_check<S: IntStandardForm>(
    form: &S,
    eps_list: &[f64],
    opts: &MtwOptions,
) -> MtwVerdict {
    let z = |phi: f64| orientation_average(form, phi, opts.psi_nodes, opts.theta_nodes);
    let roots = find_roots(&z, opts.phi_grid);
    let stable: Vec<OrientationRoot> = roots.iter().copied().filter(|r| r.stable).collect();
    let runs: Vec<MtwRun> = stable
        .first()
        .map(|r| eps_list.par_iter().map(|&e| mtw_run(form, r, e, opts)).collect())
        .unwrap_or_default();
    let band_ratio = (runs.len() >= 2 && runs[1].band > 0.0).then(|| runs[0].band / runs[1].band);
    MtwVerdict {
        no_root: roots.is_empty(),
        roots,
        runs,
        band_ratio,
        ratio_window: opts.ratio_window,
        angle_tol: opts.angle_tol,
    }
}
