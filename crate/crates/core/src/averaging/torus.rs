//! Invariant two-tori of the irrational standard form near a hyperbolic averaged equilibrium.

use std::f64::consts::{FRAC_PI_2, TAU};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use crate::center_bundle::NonIntStandardForm;
use crate::geometry::Vec2;
use crate::ode::rk4_step;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TorusOptions {
    /// Discarded time, in units of `1 / eps`.
    pub transient_over_eps: f64,
    /// Recorded time after the transient.
    pub window: f64,
    pub dt: f64,
    pub sample_every: usize,
    /// Fourier cut-off `|p|, |q| <= harmonics` in `(phi, theta)`.
    pub harmonics: i32,
    /// Accepted range of the deviation ratio between `eps` and `eps / 100`.
    pub ratio_window: (f64, f64),
}

impl Default for TorusOptions {
    fn default() -> Self {
        Self {
            transient_over_eps: 20.0,
            window: 400.0,
            dt: 0.1,
            sample_every: 5,
            harmonics: 4,
            ratio_window: (5.0, 20.0),
        }
    }
}

/// Least-squares fit `psi - psi* = sum a_pq exp(i (p phi + q theta))` in complex form.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TorusFit {
    pub harmonics: i32,
    /// `(p, q, re, im)`.
    pub coeffs: Vec<(i32, i32, f64, f64)>,
    pub residual_rms: f64,
    pub data_rms: f64,
}

impl TorusFit {
    pub fn eval(&self, phi: f64, theta: f64) -> Vec2 {
        let mut z = Complex64::new(0.0, 0.0);
        for &(p, q, re, im) in &self.coeffs {
            z += Complex64::new(re, im) * Complex64::from_polar(1.0, p as f64 * phi + q as f64 * theta);
        }
        Vec2::new(z.re, z.im)
    }

    /// Norm of the coefficients violating `sigma(phi - pi/2, theta) = J sigma(phi, theta)`.
    ///
    /// The identity holds exactly when only harmonics with `p = 1 mod 4` are present.
    pub fn symmetry_defect(&self) -> f64 {
        self.coeffs
            .iter()
            .filter(|c| c.0.rem_euclid(4) != 1)
            .map(|c| c.2 * c.2 + c.3 * c.3)
            .sum::<f64>()
            .sqrt()
    }

    /// Sampled `max |sigma(phi - pi/2, theta) - J sigma(phi, theta)|`.
    pub fn symmetry_defect_sampled(&self, n: usize) -> f64 {
        let mut worst: f64 = 0.0;
        for a in 0..n {
            for b in 0..n {
                let phi = TAU * a as f64 / n as f64;
                let th = TAU * b as f64 / n as f64;
                let s = self.eval(phi, th);
                let js = Vec2::new(s.y, -s.x);
                worst = worst.max((self.eval(phi - FRAC_PI_2, th) - js).norm());
            }
        }
        worst
    }
}

/// Fits `z_i ~ sigma(phi_i, theta_i)` on the `(2h + 1)^2` complex exponentials.
pub fn fit_torus(samples: &[(f64, f64, Vec2)], harmonics: i32) -> TorusFit {
    let modes: Vec<(i32, i32)> = (-harmonics..=harmonics)
        .flat_map(|p| (-harmonics..=harmonics).map(move |q| (p, q)))
        .collect();
    let n = samples.len();
    let a = DMatrix::from_fn(n, modes.len(), |i, c| {
        let (phi, th, _) = samples[i];
        let (p, q) = modes[c];
        Complex64::from_polar(1.0, p as f64 * phi + q as f64 * th)
    });
    let b = DVector::from_iterator(n, samples.iter().map(|s| Complex64::new(s.2.x, s.2.y)));
    let svd = a.clone().svd(true, true);
    let x = svd.solve(&b, 1e-12).expect("svd with both factors");
    let r = &a * &x - &b;
    let residual_rms = (r.iter().map(|c| c.norm_sqr()).sum::<f64>() / n as f64).sqrt();
    let data_rms = (b.iter().map(|c| c.norm_sqr()).sum::<f64>() / n as f64).sqrt();
    TorusFit {
        harmonics,
        coeffs: modes
            .iter()
            .zip(x.iter())
            .map(|(&(p, q), c)| (p, q, c.re, c.im))
            .collect(),
        residual_rms,
        data_rms,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TorusRun {
    pub eps: f64,
    /// `max |psi(t) - psi*|` over the window.
    pub deviation: f64,
    pub fit: TorusFit,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TorusReport {
    pub psi_star: (f64, f64),
    pub runs: Vec<TorusRun>,
    /// `deviation(eps_0) / deviation(eps_1)` for the first two runs.
    pub ratio: Option<f64>,
    pub ratio_window: (f64, f64),
}

impl TorusReport {
    pub fn ratio_in_window(&self) -> bool {
        self.ratio
            .is_some_and(|r| r >= self.ratio_window.0 && r <= self.ratio_window.1)
    }
}

/// Integrates from `(psi*, 0, 0)` at each `eps` and measures the deviation of the attractor from `psi*`.
pub fn verify_torus_attractor<S: NonIntStandardForm>(
    form: &S,
    psi_star: Vec2,
    eps_list: &[f64],
    opts: &TorusOptions,
) -> TorusReport {
    let runs: Vec<TorusRun> = eps_list
        .iter()
        .map(|&eps| torus_run(form, psi_star, eps, opts))
        .collect();
    let ratio = (runs.len() >= 2 && runs[1].deviation > 0.0).then(|| runs[0].deviation / runs[1].deviation);
    TorusReport {
        psi_star: (psi_star.x, psi_star.y),
        runs,
        ratio,
        ratio_window: opts.ratio_window,
    }
}

fn torus_run<S: NonIntStandardForm>(form: &S, psi_star: Vec2, eps: f64, opts: &TorusOptions) -> TorusRun {
    let f = |s: &[f64; 4]| form.rhs(eps, s);
    let mut y = [psi_star.x, psi_star.y, 0.0, 0.0];
    let transient = if eps > 0.0 { opts.transient_over_eps / eps } else { 0.0 };
    let steps = (transient / opts.dt).ceil() as usize;
    for _ in 0..steps {
        y = rk4_step(&f, &y, opts.dt);
    }
    let n = (opts.window / opts.dt).ceil() as usize;
    let mut samples = Vec::with_capacity(n / opts.sample_every + 1);
    let mut deviation: f64 = 0.0;
    for i in 0..=n {
        let d = Vec2::new(y[0], y[1]) - psi_star;
        deviation = deviation.max(d.norm());
        if i % opts.sample_every.max(1) == 0 {
            samples.push((y[2], y[3], d));
        }
        if i < n {
            y = rk4_step(&f, &y, opts.dt);
        }
    }
    TorusRun {
        eps,
        deviation,
        fit: fit_torus(&samples, opts.harmonics),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::center_bundle::PolynomialNonIntForm;
    use crate::geometry::rotate;
    use crate::trig::{TorusPolynomial, VectorPolynomial};

    const GOLDEN: f64 = 0.618_033_988_749_894_8;

    struct Relaxation {
        star: Vec2,
    }

    impl NonIntStandardForm for Relaxation {
        fn omega(&self) -> f64 {
            GOLDEN
        }

        fn g1(&self, psi: Vec2, phi: f64, theta: f64) -> Vec2 {
            rotate(-phi, -(psi - self.star)) + Vec2::new(theta.cos(), (phi + theta).sin())
        }

        fn g2(&self, _psi: Vec2, _phi: f64, theta: f64) -> f64 {
            0.3 * theta.sin()
        }
    }

    /// `R_{-phi}(-s) + (cos theta, sin theta)`, lattice invariant with `psi* = 0`.
    fn symmetric_form() -> PolynomialNonIntForm {
        let s = VectorPolynomial::from_components(
            &TorusPolynomial::sin_mode(&[1, 0, 0, 0], 1.0),
            &TorusPolynomial::sin_mode(&[0, 1, 0, 0], 1.0),
        );
        let fast = VectorPolynomial::from_components(
            &TorusPolynomial::cos_mode(&[0, 0, 0, 1], 1.0),
            &TorusPolynomial::sin_mode(&[0, 0, 0, 1], 1.0),
        );
        let g1 = s.scale(-1.0).rotate_by_slot(2, -1).add(&fast);
        assert!(g1.lattice_defect() < 1e-15);
        PolynomialNonIntForm {
            omega: GOLDEN,
            g1,
            g2: TorusPolynomial::cos_mode(&[0, 0, 4, 1], 0.2),
        }
    }

    #[test]
    fn fit_recovers_planted_coefficients() {
        let samples: Vec<_> = (0..400)
            .map(|i| {
                let t = i as f64 * 0.37;
                let phi = GOLDEN * t;
                let z = Complex64::new(0.1, -0.2) * Complex64::from_polar(1.0, phi - 2.0 * t)
                    + Complex64::new(0.05, 0.0) * Complex64::from_polar(1.0, 3.0 * t);
                (phi, t, Vec2::new(z.re, z.im))
            })
            .collect();
        let fit = fit_torus(&samples, 3);
        assert!(fit.residual_rms < 1e-12);
        let c = fit.coeffs.iter().find(|c| c.0 == 1 && c.1 == -2).unwrap();
        assert!((c.2 - 0.1).abs() < 1e-10 && (c.3 + 0.2).abs() < 1e-10);
    }

    #[test]
    fn zero_eps_has_zero_deviation() {
        let form = Relaxation {
            star: Vec2::new(0.3, -0.1),
        };
        let rep = verify_torus_attractor(&form, Vec2::new(0.3, -0.1), &[0.0], &TorusOptions::default());
        assert_eq!(rep.runs[0].deviation, 0.0);
    }

    #[test]
    fn deviation_is_linear_in_eps() {
        let form = Relaxation {
            star: Vec2::new(0.3, -0.1),
        };
        let opts = TorusOptions {
            window: 200.0,
            ..TorusOptions::default()
        };
        let rep = verify_torus_attractor(&form, Vec2::new(0.3, -0.1), &[1e-2, 1e-3], &opts);
        let r = rep.ratio.unwrap();
        assert!((r - 10.0).abs() < 0.5, "ratio {r}");
    }

    #[test]
    fn symmetric_torus_fit_has_quarter_turn_symmetry() {
        let opts = TorusOptions {
            window: 300.0,
            ..TorusOptions::default()
        };
        let rep = verify_torus_attractor(&symmetric_form(), Vec2::zeros(), &[1e-2], &opts);
        let fit = &rep.runs[0].fit;
        assert!(fit.residual_rms < 1e-2 * fit.data_rms, "{fit:?}");
        assert!(fit.symmetry_defect() <= fit.residual_rms.max(1e-10));
    }
}
