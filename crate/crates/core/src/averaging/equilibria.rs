//! Damped Newton root finding, finite-difference Jacobians and equilibrium records.

use nalgebra::{DMatrix, SMatrix};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

/// Newton and deduplication settings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NewtonOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub damping: f64,
    pub damping_floor: f64,
    pub dedup_radius: f64,
    pub fd_step: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 50,
            damping: 0.5,
            damping_floor: 1e-4,
            dedup_radius: 1e-6,
            fd_step: 1e-6,
        }
    }
}

/// Central-difference Jacobian.
pub fn jacobian<const N: usize, F>(f: &F, x: &[f64; N], h: f64) -> SMatrix<f64, N, N>
where
    F: Fn(&[f64; N]) -> [f64; N],
{
    let mut jac = SMatrix::<f64, N, N>::zeros();
    for c in 0..N {
        let mut xp = *x;
        let mut xm = *x;
        xp[c] += h;
        xm[c] -= h;
        let fp = f(&xp);
        let fm = f(&xm);
        for r in 0..N {
            jac[(r, c)] = (fp[r] - fm[r]) / (2.0 * h);
        }
    }
    jac
}

/// Eigenvalues sorted by decreasing real part.
pub fn eigenvalues<const N: usize>(m: &SMatrix<f64, N, N>) -> Vec<Complex64> {
    let d = DMatrix::from_column_slice(N, N, m.as_slice());
    let mut ev: Vec<Complex64> = d.complex_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
    ev
}

fn norm<const N: usize>(v: &[f64; N]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Outcome of one Newton solve.
#[derive(Clone, Debug, PartialEq)]
pub struct NewtonResult<const N: usize> {
    pub x: [f64; N],
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Damped Newton iteration: full steps are halved until the residual decreases,
/// down to `damping_floor`.
pub fn newton<const N: usize, F>(f: &F, x0: [f64; N], opts: &NewtonOptions) -> NewtonResult<N>
where
    F: Fn(&[f64; N]) -> [f64; N],
{
    let mut x = x0;
    let mut fx = f(&x);
    let mut r = norm(&fx);
    for it in 0..opts.max_iter {
        if !r.is_finite() {
            break;
        }
        if r <= opts.tol {
            return NewtonResult {
                x,
                residual: r,
                iterations: it,
                converged: true,
            };
        }
        let jac = jacobian(f, &x, opts.fd_step);
        let rhs = nalgebra::DVector::from_column_slice(&fx);
        let Some(step) = DMatrix::from_column_slice(N, N, jac.as_slice()).lu().solve(&rhs) else {
            break;
        };
        let mut lambda = 1.0;
        let mut accepted = false;
        while lambda >= opts.damping_floor {
            let mut xn = x;
            for i in 0..N {
                xn[i] -= lambda * step[i];
            }
            let fn_ = f(&xn);
            let rn = norm(&fn_);
            if rn < r || rn <= opts.tol {
                x = xn;
                fx = fn_;
                r = rn;
                accepted = true;
                break;
            }
            lambda *= opts.damping;
        }
        if !accepted {
            break;
        }
    }
    NewtonResult {
        x,
        residual: r,
        iterations: opts.max_iter,
        converged: r <= opts.tol,
    }
}

/// A located equilibrium with its linearization.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EquilibriumRecord<const N: usize> {
    #[serde(with = "serde_arrays")]
    pub x: [f64; N],
    pub residual: f64,
    pub eigenvalues: Vec<(f64, f64)>,
    pub stable: bool,
    /// False when the Jacobian is numerically singular (e.g. a curve of equilibria).
    pub isolated: bool,
    pub conjugates: Vec<Vec<f64>>,
}

mod serde_arrays {
    use serde::Serializer;

    pub fn serialize<S: Serializer, const N: usize>(x: &[f64; N], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(x.iter())
    }
}

impl<const N: usize> EquilibriumRecord<N> {
    pub fn eigenvalues_complex(&self) -> Vec<Complex64> {
        self.eigenvalues
            .iter()
            .map(|&(re, im)| Complex64::new(re, im))
            .collect()
    }

    pub fn max_real_eigenvalue(&self) -> f64 {
        self.eigenvalues.iter().map(|e| e.0).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn hyperbolic(&self) -> bool {
        self.isolated && self.eigenvalues.iter().all(|e| e.0.abs() > 1e-9)
    }
}

/// Seeds, diagnostics and results of a multi-start search.
#[derive(Clone, Debug, PartialEq)]
pub struct EquilibriumSearch<const N: usize> {
    pub equilibria: Vec<EquilibriumRecord<N>>,
    pub failed_seeds: usize,
}

fn distance<const N: usize>(a: &[f64; N], b: &[f64; N], periodic: &[bool; N]) -> f64 {
    let mut s = 0.0;
    for i in 0..N {
        let d = if periodic[i] {
            crate::geometry::angle_diff(a[i], b[i])
        } else {
            a[i] - b[i]
        };
        s += d * d;
    }
    s.sqrt()
}

/// Classifies a single root.
pub fn linearize<const N: usize, F>(f: &F, x: [f64; N], opts: &NewtonOptions) -> (Vec<Complex64>, bool, bool)
where
    F: Fn(&[f64; N]) -> [f64; N],
{
    let jac = jacobian(f, &x, opts.fd_step);
    let ev = eigenvalues(&jac);
    let scale = jac.abs().max().max(1e-300);
    let isolated = ev.iter().all(|e| e.norm() > 1e-7 * scale);
    let stable = ev.iter().all(|e| e.re < 0.0);
    (ev, stable, isolated)
}

/// Symmetry map applied to roots.
pub type SymmetryAction<'a, const N: usize> = &'a (dyn Fn(&[f64; N]) -> [f64; N] + Sync);

/// Multi-start damped Newton with deduplication and conjugate generation.
///
/// Seeds that fail to converge are counted in `failed_seeds`. `periodic` marks
/// angle coordinates, compared modulo `2 pi` and reported in `[0, 2 pi)`.
/// `action` maps a root to its symmetry image; images `action^n(x)`, `n = 1..3`,
/// are stored as conjugates.
pub fn find_equilibria<const N: usize, F>(
    f: &F,
    seeds: &[[f64; N]],
    opts: &NewtonOptions,
    periodic: [bool; N],
    action: Option<SymmetryAction<'_, N>>,
) -> EquilibriumSearch<N>
where
    F: Fn(&[f64; N]) -> [f64; N] + Sync,
{
    let results: Vec<NewtonResult<N>> = seeds.par_iter().map(|s| newton(f, *s, opts)).collect();
    let mut failed = 0;
    let mut roots: Vec<([f64; N], f64)> = Vec::new();
    for r in results {
        if !r.converged {
            failed += 1;
            continue;
        }
        let mut x = r.x;
        for i in 0..N {
            if periodic[i] {
                x[i] = crate::geometry::wrap_angle(x[i]);
            }
        }
        if roots
            .iter()
            .all(|(y, _)| distance(&x, y, &periodic) > opts.dedup_radius)
        {
            roots.push((x, r.residual));
        }
    }
    let equilibria = roots
        .into_iter()
        .map(|(x, residual)| {
            let (ev, stable, isolated) = linearize(f, x, opts);
            let mut conjugates = Vec::new();
            if let Some(g) = action {
                let mut y = x;
                for _ in 1..4 {
                    y = g(&y);
                    let mut w = y;
                    for i in 0..N {
                        if periodic[i] {
                            w[i] = crate::geometry::wrap_angle(w[i]);
                        }
                    }
                    conjugates.push(w.to_vec());
                }
            }
            EquilibriumRecord {
                x,
                residual,
                eigenvalues: ev.iter().map(|e| (e.re, e.im)).collect(),
                stable,
                isolated,
                conjugates,
            }
        })
        .collect();
    EquilibriumSearch {
        equilibria,
        failed_seeds: failed,
    }
}

/// Uniform seed grid with `n` points per axis over the given ranges.
pub fn seed_grid<const N: usize>(ranges: [(f64, f64); N], n: usize) -> Vec<[f64; N]> {
    let total = n.pow(N as u32);
    (0..total)
        .map(|mut idx| {
            let mut x = [0.0; N];
            for (d, (lo, hi)) in ranges.iter().enumerate() {
                let k = idx % n;
                idx /= n;
                x[d] = lo + (hi - lo) * (k as f64 + 0.5) / n as f64;
            }
            x
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_sink() {
        let f = |x: &[f64; 2]| [-x[0], -x[1]];
        let seeds = seed_grid([(-2.0, 2.0); 2], 4);
        let s = find_equilibria(&f, &seeds, &NewtonOptions::default(), [false; 2], None);
        assert_eq!(s.equilibria.len(), 1);
        let e = &s.equilibria[0];
        assert!(e.x[0].abs() < 1e-12 && e.x[1].abs() < 1e-12);
        assert!(e.stable && e.isolated);
        for &(re, im) in &e.eigenvalues {
            assert!((re + 1.0).abs() < 1e-8 && im.abs() < 1e-8);
        }
    }

    #[test]
    fn circle_of_equilibria_is_flagged() {
        let f = |x: &[f64; 2]| {
            let r2 = x[0] * x[0] + x[1] * x[1];
            [x[0] - r2 * x[0], x[1] - r2 * x[1]]
        };
        let seeds = seed_grid([(-1.5, 1.5); 2], 6);
        let s = find_equilibria(&f, &seeds, &NewtonOptions::default(), [false; 2], None);
        let origin = s
            .equilibria
            .iter()
            .find(|e| e.x[0].abs() < 1e-9 && e.x[1].abs() < 1e-9)
            .unwrap();
        assert!(!origin.stable && origin.isolated);
        let ring: Vec<_> = s
            .equilibria
            .iter()
            .filter(|e| (e.x[0].hypot(e.x[1]) - 1.0).abs() < 1e-9)
            .collect();
        assert!(!ring.is_empty());
        assert!(ring.iter().all(|e| !e.isolated));
    }

    #[test]
    fn planted_root_recovered() {
        let target = [0.3, -0.7, 1.1];
        let f = move |x: &[f64; 3]| {
            [
                (x[0] - target[0]) + 0.2 * (x[1] - target[1]).sin(),
                (x[1] - target[1]).sinh(),
                (x[2] - target[2]).sin(),
            ]
        };
        let r = newton(&f, [0.0, 0.0, 0.8], &NewtonOptions::default());
        assert!(r.converged);
        for (x, t) in r.x.iter().zip(target) {
            assert!((x - t).abs() < 1e-12);
        }
    }

    #[test]
    fn conjugates_follow_action() {
        let f = |x: &[f64; 2]| [x[0] - 1.0, x[1]];
        let rot = |x: &[f64; 2]| [x[1], -x[0]];
        let s = find_equilibria(&f, &[[0.5, 0.5]], &NewtonOptions::default(), [false; 2], Some(&rot));
        let c = &s.equilibria[0].conjugates;
        assert_eq!(c.len(), 3);
        assert!((c[0][0]).abs() < 1e-12 && (c[0][1] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn non_convergent_seeds_counted() {
        let f = |x: &[f64; 1]| [x[0] * x[0] + 1.0];
        let s = find_equilibria(&f, &[[0.3], [2.0]], &NewtonOptions::default(), [false], None);
        assert!(s.equilibria.is_empty());
        assert_eq!(s.failed_seeds, 2);
    }
}
