//! Natural-parameter continuation of averaged equilibria in the detuning `zeta`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::equilibria::{find_equilibria, linearize, newton, NewtonOptions};
use super::{rational_action, RationalField};
use crate::geometry::angle_diff;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ContinuationOptions {
    pub step: f64,
    pub min_step: f64,
    /// Largest accepted change of the solution per unit step.
    pub max_jump: f64,
    /// Bisection tolerance when locating a stability change.
    pub locate_tol: f64,
}

impl Default for ContinuationOptions {
    fn default() -> Self {
        Self {
            step: 0.01,
            min_step: 1e-6,
            max_jump: 0.5,
            locate_tol: 1e-9,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BranchPoint {
    pub zeta: f64,
    pub x: Vec<f64>,
    pub eigenvalues: Vec<(f64, f64)>,
    pub stable: bool,
}

impl BranchPoint {
    pub fn leading(&self) -> Complex64 {
        self.eigenvalues
            .iter()
            .map(|&(re, im)| Complex64::new(re, im))
            .max_by(|a, b| a.re.total_cmp(&b.re).then(a.im.abs().total_cmp(&b.im.abs())))
            .unwrap_or_default()
    }

    pub fn max_real(&self) -> f64 {
        self.leading().re
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryKind {
    SaddleNode,
    Hopf,
    Other,
    /// The scan range ended with the branch still stable.
    None,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanBoundary {
    pub zeta: f64,
    pub kind: BoundaryKind,
    /// Eigenvalues at the last stable point and, if it exists, the first unstable one.
    pub before: BranchPoint,
    pub after: Option<BranchPoint>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WindowReport {
    pub zeta_range: (f64, f64),
    pub zeta_start: f64,
    /// `None` when no stable equilibrium exists at `zeta_start`.
    pub window: Option<(f64, f64)>,
    pub lower: Option<ScanBoundary>,
    pub upper: Option<ScanBoundary>,
    pub branch: Vec<BranchPoint>,
}

fn point<const N: usize, F>(f: &F, x: [f64; N], zeta: f64, nopts: &NewtonOptions) -> BranchPoint
where
    F: Fn(&[f64; N], f64) -> [f64; N],
{
    let g = |y: &[f64; N]| f(y, zeta);
    let (ev, stable, _) = linearize(&g, x, nopts);
    BranchPoint {
        zeta,
        x: x.to_vec(),
        eigenvalues: ev.iter().map(|e| (e.re, e.im)).collect(),
        stable,
    }
}

/// Continues an equilibrium from `zeta0` toward `zeta_end`.
///
/// Stops at the end of the range, at the first loss of stability (the crossing
/// is located by bisection) or when the step collapses below `min_step`.
/// Returns the points and whether the branch folded.
pub fn continue_branch<const N: usize, F>(
    f: &F,
    x0: [f64; N],
    zeta0: f64,
    zeta_end: f64,
    opts: &ContinuationOptions,
    nopts: &NewtonOptions,
) -> (Vec<BranchPoint>, bool)
where
    F: Fn(&[f64; N], f64) -> [f64; N],
{
    let dir = (zeta_end - zeta0).signum();
    let mut pts = vec![point(f, x0, zeta0, nopts)];
    let mut xs = vec![x0];
    let mut step = opts.step;
    let mut zeta = zeta0;
    let dist = |a: &[f64; N], b: &[f64; N]| a.iter().zip(b).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
    while (zeta_end - zeta) * dir > 1e-15 {
        let trial = step.min((zeta_end - zeta).abs());
        let x = *xs.last().unwrap();
        let mut pred = x;
        if xs.len() >= 2 {
            let prev = xs[xs.len() - 2];
            let dz = (pts[pts.len() - 1].zeta - pts[pts.len() - 2].zeta).abs().max(1e-300);
            for i in 0..N {
                pred[i] += (x[i] - prev[i]) * trial / dz;
            }
        }
        let zn = zeta + dir * trial;
        let r = newton(&|y: &[f64; N]| f(y, zn), pred, nopts);
        if !r.converged || dist(&r.x, &x) > opts.max_jump * trial.max(opts.step) {
            step *= 0.5;
            if step < opts.min_step {
                return (pts, true);
            }
            continue;
        }
        let p = point(f, r.x, zn, nopts);
        let was_stable = pts.last().unwrap().stable;
        if was_stable && !p.stable {
            let (a, b) = locate_crossing(f, (zeta, x), (zn, r.x), opts, nopts);
            pts.push(a);
            pts.push(b);
            return (pts, false);
        }
        pts.push(p);
        xs.push(r.x);
        zeta = zn;
        step = (step * 1.5).min(opts.step);
    }
    (pts, false)
}

/// Bisects a stability change between a stable and an unstable point.
fn locate_crossing<const N: usize, F>(
    f: &F,
    stable: (f64, [f64; N]),
    unstable: (f64, [f64; N]),
    opts: &ContinuationOptions,
    nopts: &NewtonOptions,
) -> (BranchPoint, BranchPoint)
where
    F: Fn(&[f64; N], f64) -> [f64; N],
{
    let (mut za, mut xa) = stable;
    let (mut zb, mut xb) = unstable;
    while (zb - za).abs() > opts.locate_tol {
        let zm = 0.5 * (za + zb);
        let guess: [f64; N] = std::array::from_fn(|i| 0.5 * (xa[i] + xb[i]));
        let r = newton(&|y: &[f64; N]| f(y, zm), guess, nopts);
        if !r.converged {
            break;
        }
        if point(f, r.x, zm, nopts).stable {
            (za, xa) = (zm, r.x);
        } else {
            (zb, xb) = (zm, r.x);
        }
    }
    (point(f, xa, za, nopts), point(f, xb, zb, nopts))
}

/// Classifies how a continued branch left the stable region.
///
/// `branch` ends at the boundary; `folded` reports a parameter-step collapse.
pub fn classify_boundary(branch: &[BranchPoint], folded: bool) -> BoundaryKind {
    const IM_MIN: f64 = 1e-6;
    let Some(last) = branch.last() else {
        return BoundaryKind::None;
    };
    if branch.len() >= 2 {
        let prev = &branch[branch.len() - 2];
        if prev.stable && !last.stable {
            let lead = last.leading();
            return if lead.im.abs() >= IM_MIN {
                BoundaryKind::Hopf
            } else if folded {
                BoundaryKind::SaddleNode
            } else {
                BoundaryKind::Other
            };
        }
    }
    if folded {
        let lead = last.leading();
        let scale = last
            .eigenvalues
            .iter()
            .map(|e| e.0.hypot(e.1))
            .fold(0.0, f64::max)
            .max(1e-300);
        // The leading eigenvalue tends to zero along the fold.
        if lead.im.abs() < IM_MIN && lead.re.abs() < 0.2 * scale {
            return BoundaryKind::SaddleNode;
        }
        return BoundaryKind::Other;
    }
    BoundaryKind::None
}

/// Scans the averaged system `(G1, G2 + zeta)` for the phase-locking window containing `zeta_start`.
///
/// The branch starts from the stable root found from `seeds` closest to `(0, 0, 0)`.
pub fn detuning_scan<F: RationalField>(
    field: &F,
    zeta_range: (f64, f64),
    zeta_start: f64,
    seeds: &[[f64; 3]],
    opts: &ContinuationOptions,
    nopts: &NewtonOptions,
) -> WindowReport {
    let f = |x: &[f64; 3], zeta: f64| {
        let (a, b) = field.eval(crate::Vec2::new(x[0], x[1]), x[2]);
        [a.x, a.y, b + zeta]
    };
    let g = |x: &[f64; 3]| f(x, zeta_start);
    let search = find_equilibria(
        &g,
        seeds,
        nopts,
        [false, false, true],
        Some(&rational_action as &(dyn Fn(&[f64; 3]) -> [f64; 3] + Sync)),
    );
    let mut report = WindowReport {
        zeta_range,
        zeta_start,
        window: None,
        lower: None,
        upper: None,
        branch: Vec::new(),
    };
    let start = search.equilibria.iter().filter(|e| e.stable).min_by(|a, b| {
        let na = a.x[0].hypot(a.x[1]) + angle_diff(a.x[2], 0.0).abs();
        let nb = b.x[0].hypot(b.x[1]) + angle_diff(b.x[2], 0.0).abs();
        na.total_cmp(&nb)
    });
    let Some(start) = start else {
        return report;
    };
    let x0 = start.x;
    let ends = [zeta_range.0, zeta_range.1];
    let halves: Vec<(Vec<BranchPoint>, bool)> = ends
        .par_iter()
        .map(|&end| continue_branch(&f, x0, zeta_start, end, opts, nopts))
        .collect();
    let boundary = |(pts, folded): &(Vec<BranchPoint>, bool)| -> ScanBoundary {
        let kind = classify_boundary(pts, *folded);
        let last_stable = pts.iter().rev().find(|p| p.stable).unwrap_or(&pts[0]).clone();
        let after = pts.last().filter(|p| !p.stable).cloned();
        let zeta = match (&after, kind) {
            (Some(a), _) => 0.5 * (a.zeta + last_stable.zeta),
            _ => last_stable.zeta,
        };
        ScanBoundary {
            zeta,
            kind,
            before: last_stable,
            after,
        }
    };
    let lo = boundary(&halves[0]);
    let hi = boundary(&halves[1]);
    report.window = Some((lo.zeta, hi.zeta));
    let mut branch: Vec<BranchPoint> = halves[0].0.iter().rev().cloned().collect();
    branch.extend(halves[1].0.iter().skip(1).cloned());
    report.branch = branch;
    report.lower = Some(lo);
    report.upper = Some(hi);
    report
}
