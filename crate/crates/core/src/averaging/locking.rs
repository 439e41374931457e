//! Locked periodic orbits of the rational standard form.

use std::f64::consts::{PI, TAU};

use serde::Serialize;

use crate::center_bundle::NonIntStandardForm;
use crate::geometry::{angle_diff, minus_j_pow, Vec2};
use crate::ode::rk4_step;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LockingOptions {
    /// Integration time discarded before measuring; `None` uses `40 / eps`.
    pub transient: Option<f64>,
    /// Number of `2 pi l` circuits recorded after the transient.
    pub circuits: usize,
    pub steps_per_2pi: usize,
    /// Allowed relative period error.
    pub period_tol: f64,
    /// Allowed offset from the averaged equilibrium, in units of `eps`.
    pub offset_factor: f64,
    /// Closure error at the detected period relative to the orbit amplitude.
    pub closure_rel: f64,
}

impl Default for LockingOptions {
    fn default() -> Self {
        Self {
            transient: None,
            circuits: 4,
            steps_per_2pi: 64,
            period_tol: 1e-3,
            offset_factor: 20.0,
            closure_rel: 1e-2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LockingVerdict {
    pub locked: bool,
    pub expected_period: f64,
    pub period: Option<f64>,
    /// `max |psi - psi0| + |phi_hat - phi0|` over the recorded window.
    pub offset: f64,
    pub offset_bound: f64,
    /// Peak-to-peak size of `psi` over the window.
    pub amplitude: f64,
    pub closure_error: f64,
    pub reason: Option<String>,
    /// One circuit `(t, psi1, psi2, phi_hat)` sampled at `2 pi / steps_per_2pi`, starting at `theta = 0 mod 2 pi`.
    pub orbit: Vec<[f64; 4]>,
}

/// Integrates from `(psi0, phi0, theta = 0)` and tests for a `2 pi l`-periodic orbit near the equilibrium.
pub fn verify_locking<S: NonIntStandardForm>(
    form: &S,
    k: i32,
    l: i32,
    psi0: Vec2,
    phi0: f64,
    eps: f64,
    opts: &LockingOptions,
) -> LockingVerdict {
    let w = k as f64 / l as f64;
    let expected = TAU * l as f64;
    let h = TAU / opts.steps_per_2pi as f64;
    let per_circuit = opts.steps_per_2pi * l as usize;
    let mut verdict = LockingVerdict {
        locked: false,
        expected_period: expected,
        period: None,
        offset: 0.0,
        offset_bound: opts.offset_factor * eps,
        amplitude: 0.0,
        closure_error: f64::INFINITY,
        reason: None,
        orbit: Vec::new(),
    };
    if eps <= 0.0 {
        verdict.reason = Some("eps = 0: unperturbed torus flow, every state is invariant".into());
        return verdict;
    }
    let transient = opts.transient.unwrap_or(40.0 / eps);
    let transient_steps = ((transient / expected).ceil() as usize) * per_circuit;
    let f = |s: &[f64; 4]| form.rhs(eps, s);
    let mut y = [psi0.x, psi0.y, phi0, 0.0];
    for _ in 0..transient_steps {
        y = rk4_step(&f, &y, h);
        if !y.iter().all(|v| v.is_finite()) {
            verdict.reason = Some("trajectory blew up during the transient".into());
            return verdict;
        }
    }
    let total = opts.circuits.max(2) * per_circuit;
    let mut rec = Vec::with_capacity(total + 1);
    let t0 = transient_steps as f64 * h;
    for i in 0..=total {
        let phi_hat = y[2] - w * y[3];
        rec.push([t0 + i as f64 * h, y[0], y[1], phi_hat]);
        if i < total {
            y = rk4_step(&f, &y, h);
        }
    }

    let mut lo = Vec2::repeat(f64::INFINITY);
    let mut hi = Vec2::repeat(f64::NEG_INFINITY);
    for r in &rec {
        let p = Vec2::new(r[1], r[2]);
        lo = lo.inf(&p);
        hi = hi.sup(&p);
        let off = (p - psi0).norm() + angle_diff(r[3], phi0).abs();
        verdict.offset = verdict.offset.max(off);
    }
    verdict.amplitude = (hi - lo).norm();
    verdict.orbit = rec[..per_circuit].to_vec();
    if verdict.offset > verdict.offset_bound {
        verdict.reason = Some(format!(
            "trajectory left the O(eps) neighbourhood: offset {:.3e} > {:.3e}",
            verdict.offset, verdict.offset_bound
        ));
        return verdict;
    }
    if verdict.amplitude < 1e-14 {
        verdict.reason = Some("orbit is stationary".into());
        return verdict;
    }

    // Closure error e(m) over shifts m, averaged over the first circuit; the
    // period is the first local minimum below threshold after e(m) has left it.
    let m_lo = 1;
    let m_hi = (3 * per_circuit / 2).min(total - per_circuit);
    let err = |m: usize| -> f64 {
        let mut s = 0.0;
        for i in 0..per_circuit {
            let a = &rec[i];
            let b = &rec[i + m];
            s += (b[1] - a[1]).powi(2) + (b[2] - a[2]).powi(2) + angle_diff(b[3], a[3]).powi(2);
        }
        (s / per_circuit as f64).sqrt()
    };
    let errs: Vec<f64> = (m_lo..=m_hi).map(err).collect();
    let thresh = opts.closure_rel * verdict.amplitude;
    let mut best: Option<usize> = None;
    let mut departed = false;
    for i in 1..errs.len().saturating_sub(1) {
        departed |= errs[i] > 2.0 * thresh;
        if departed && errs[i] <= errs[i - 1] && errs[i] <= errs[i + 1] && errs[i] < thresh {
            best = Some(i);
            break;
        }
    }
    let Some(i) = best else {
        verdict.closure_error = errs
            .iter()
            .skip_while(|e| **e <= 2.0 * thresh)
            .cloned()
            .fold(f64::INFINITY, f64::min);
        verdict.reason = Some("no closing period within 3 pi l".into());
        return verdict;
    };
    // Parabolic refinement on e^2.
    let (a, b, c) = (errs[i - 1].powi(2), errs[i].powi(2), errs[i + 1].powi(2));
    let denom = a - 2.0 * b + c;
    let frac = if denom > 0.0 { 0.5 * (a - c) / denom } else { 0.0 };
    let period = ((m_lo + i) as f64 + frac) * h;
    verdict.period = Some(period);
    verdict.closure_error = errs[i];
    // A shorter period that divides 2 pi l still gives a 2 pi l-periodic orbit.
    let ratio = expected / period;
    if (ratio - ratio.round()).abs() > opts.period_tol * ratio.round().max(1.0) || ratio.round() < 1.0 {
        verdict.reason = Some(format!("period {period:.6} does not divide 2 pi l = {expected:.6}"));
        return verdict;
    }
    verdict.locked = true;
    verdict
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpatioTemporalReport {
    /// `max |f(theta + pi l) + f(theta)|`, for `l` even.
    pub half_period: Option<f64>,
    /// `max |f(theta + pi l / 2) - (-J)^k f(theta)|`, for `l = 0 mod 4`.
    pub quarter_period: Option<f64>,
}

impl SpatioTemporalReport {
    pub fn max_violation(&self) -> f64 {
        self.half_period.unwrap_or(0.0).max(self.quarter_period.unwrap_or(0.0))
    }
}

/// Checks the time-shift symmetries of a locked orbit about `psi0 = 0`.
pub fn spatio_temporal_symmetry(verdict: &LockingVerdict, k: i32, l: i32) -> SpatioTemporalReport {
    let orbit = &verdict.orbit;
    let n = orbit.len();
    let shift_err = |shift_time: f64, map: &dyn Fn(Vec2) -> Vec2| -> Option<f64> {
        if n == 0 {
            return None;
        }
        let steps = shift_time / (orbit.get(1)?[0] - orbit[0][0]);
        let m = steps.round() as usize;
        if (steps - m as f64).abs() > 1e-6 {
            return None;
        }
        let mut worst: f64 = 0.0;
        for i in 0..n {
            let a = Vec2::new(orbit[i][1], orbit[i][2]);
            let bj = &orbit[(i + m) % n];
            let b = Vec2::new(bj[1], bj[2]);
            worst = worst.max((b - map(a)).norm());
        }
        Some(worst)
    };
    let half = if l % 2 == 0 {
        shift_err(PI * l as f64, &|v| -v)
    } else {
        None
    };
    let quarter = if l % 4 == 0 {
        shift_err(PI * l as f64 / 2.0, &|v| minus_j_pow(k, v))
    } else {
        None
    };
    SpatioTemporalReport {
        half_period: half,
        quarter_period: quarter,
    }
}
