//! The center-bundle system on `R^2 x T^2` driven by a clock angle, and its
//! reduction to standard form.
//!
//! The system is
//!
//! ```text
//! psi'   = R_phi [h1(theta) + eps F1(psi, phi, theta)]
//! phi'   = omega + h2(theta) + eps F2(psi, phi, theta)
//! theta' = 1
//! ```
//!
//! with state layout `[psi1, psi2, phi, theta]`. The transforms build
//! `H(theta) = int_0^theta h2`, `K = R_H h1`, the periodic solution `M` of
//! `M' - omega J M = K` and `Q(phi, theta) = R_phi R_{-H(theta)} M(theta)`.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, TAU};

use num_complex::Complex64;
use rand::Rng;
use rustfft::FftPlanner;
use thiserror::Error;

use crate::geometry::{j, rotate, Vec2};
use crate::ode::{self, Trajectory};
use crate::trig::{RotationSeries, TorusPolynomial, VectorPolynomial};

/// Quadrature nodes for the re-expansion of `K`.
pub const K_NODES: usize = 1024;
/// Highest harmonic kept in the re-expansion of `K`.
pub const K_MAX_HARMONIC: i32 = 128;
/// Largest admissible energy in the discarded harmonics of `K`.
pub const K_TAIL_TOL: f64 = 1e-12;
/// Distance to the nearest integer below which `omega` is flagged as near-resonant.
pub const NEAR_INTEGER_WARNING: f64 = 0.05;

const INTEGER_TOL: f64 = 1e-12;
const MEAN_TOL: f64 = 1e-14;
const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum CbError {
    #[error("h2 has nonzero mean {0}")]
    NonZeroMeanH2(f64),
    #[error("{0} is not real-valued")]
    NotReal(&'static str),
    #[error("{field} must live on T^{expected}, got T^{got}")]
    Dimension {
        field: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("{field} violates the lattice symmetry (coefficient defect {defect:e})")]
    Asymmetric { field: &'static str, defect: f64 },
    #[error("omega = {0} is an integer; use the resonant solver")]
    IntegerOmega(f64),
    #[error("omega = {0} is not an integer")]
    NonIntegerOmega(f64),
    #[error("re-expansion tail energy {0:e} exceeds tolerance")]
    TruncationTail(f64),
}

/// Nearest integer when `omega` is an integer within round-off.
pub fn integer_omega(omega: f64) -> Option<i32> {
    let r = omega.round();
    ((omega - r).abs() < INTEGER_TOL).then_some(r as i32)
}

/// Distance to the nearest integer, when below [`NEAR_INTEGER_WARNING`] but nonzero.
pub fn near_integer_warning(omega: f64) -> Option<f64> {
    let d = (omega - omega.round()).abs();
    (INTEGER_TOL..NEAR_INTEGER_WARNING).contains(&d).then_some(d)
}

/// Shape of a random system: `h1` has harmonics `|k| <= h1_harmonics`, `h2` is
/// zero-mean with harmonics up to `h2_harmonics`, and `F1`, `F2` have `f_terms`
/// random modes of degree at most `f_degree` per slot before symmetrization.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RandomSystemSpec {
    pub h1_harmonics: i32,
    pub h2_harmonics: i32,
    pub f_terms: usize,
    pub f_degree: i32,
    pub amplitude: f64,
}

impl Default for RandomSystemSpec {
    fn default() -> Self {
        Self {
            h1_harmonics: 3,
            h2_harmonics: 2,
            f_terms: 4,
            f_degree: 2,
            amplitude: 0.5,
        }
    }
}

/// Coefficient tables of a center-bundle system.
#[derive(Clone, Debug, PartialEq)]
pub struct CenterBundleSystem {
    omega: f64,
    epsilon: f64,
    h1: RotationSeries,
    h2: TorusPolynomial,
    f1: VectorPolynomial,
    f2: TorusPolynomial,
}

impl CenterBundleSystem {
    /// Validates zero mean of `h2`, reality, dimensions and the lattice symmetry of `F1`, `F2`.
    pub fn new(
        omega: f64,
        epsilon: f64,
        h1: RotationSeries,
        h2: TorusPolynomial,
        f1: VectorPolynomial,
        f2: TorusPolynomial,
    ) -> Result<Self, CbError> {
        let dims = [("h2", 1, h2.dim()), ("F1", 4, f1.dim()), ("F2", 4, f2.dim())];
        for (field, expected, got) in dims {
            if expected != got {
                return Err(CbError::Dimension { field, expected, got });
            }
        }
        if !h2.is_real(1e-14) {
            return Err(CbError::NotReal("h2"));
        }
        if !f2.is_real(1e-14) {
            return Err(CbError::NotReal("F2"));
        }
        if h2.mean().norm() > MEAN_TOL {
            return Err(CbError::NonZeroMeanH2(h2.mean().re));
        }
        for (field, defect) in [("F1", f1.lattice_defect()), ("F2", f2.lattice_defect())] {
            if defect > SYMMETRY_TOL {
                return Err(CbError::Asymmetric { field, defect });
            }
        }
        Ok(Self {
            omega,
            epsilon,
            h1,
            h2,
            f1,
            f2,
        })
    }

    /// Random system with symmetrized perturbation terms.
    pub fn random_symmetric<R: Rng>(rng: &mut R, omega: f64, epsilon: f64, spec: &RandomSystemSpec) -> Self {
        let RandomSystemSpec {
            h1_harmonics,
            h2_harmonics,
            f_terms,
            f_degree,
            amplitude,
        } = *spec;
        let h1 = RotationSeries::new(
            (-h1_harmonics..=h1_harmonics)
                .map(|k| {
                    let b = Vec2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                    (k, b * amplitude / (1.0 + k.abs() as f64))
                })
                .collect(),
        );
        let mut h2 = TorusPolynomial::zero(1);
        for k in 1..=h2_harmonics {
            let s = amplitude / k as f64;
            h2 = h2
                .add(&TorusPolynomial::cos_mode(&[k], s * rng.gen_range(-1.0..1.0)))
                .add(&TorusPolynomial::sin_mode(&[k], s * rng.gen_range(-1.0..1.0)));
        }
        let mut f1a = TorusPolynomial::zero(4);
        let mut f1b = TorusPolynomial::zero(4);
        let mut f2 = TorusPolynomial::zero(4);
        for _ in 0..f_terms {
            for p in [&mut f1a, &mut f1b, &mut f2] {
                let m: Vec<i32> = (0..4).map(|_| rng.gen_range(-f_degree..=f_degree)).collect();
                *p = p
                    .add(&TorusPolynomial::cos_mode(&m, rng.gen_range(-1.0..1.0)))
                    .add(&TorusPolynomial::sin_mode(&m, rng.gen_range(-1.0..1.0)));
            }
        }
        let f1 = VectorPolynomial::from_components(&f1a, &f1b).lattice_symmetrize();
        let f2 = f2.lattice_symmetrize();
        Self::new(omega, epsilon, h1, h2, f1, f2).expect("symmetrized random system is valid")
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Self {
        Self {
            epsilon,
            ..self.clone()
        }
    }

    pub fn h1(&self) -> &RotationSeries {
        &self.h1
    }

    pub fn h2(&self) -> &TorusPolynomial {
        &self.h2
    }

    pub fn f1(&self) -> &VectorPolynomial {
        &self.f1
    }

    pub fn f2(&self) -> &TorusPolynomial {
        &self.f2
    }

    /// Vector field at `[psi1, psi2, phi, theta]`.
    pub fn eval(&self, s: &[f64; 4]) -> [f64; 4] {
        let mut base = self.h1.eval(s[3]);
        let mut dphi = self.omega + self.h2.eval_real(&s[3..4]);
        if self.epsilon != 0.0 {
            base += self.epsilon * self.f1.eval(s);
            dphi += self.epsilon * self.f2.eval_real(s);
        }
        let dpsi = rotate(s[2], base);
        [dpsi.x, dpsi.y, dphi, 1.0]
    }

    /// RK4 trajectory; angles are kept unwrapped.
    pub fn integrate(&self, initial: [f64; 4], t_end: f64, dt: f64, sample_every: usize) -> Trajectory<4> {
        ode::integrate(|s| self.eval(s), initial, 0.0, t_end, dt, sample_every)
    }
}

/// The conjugate state `(J psi, phi - pi/2, theta)`.
pub fn conjugate_state(s: &[f64; 4]) -> [f64; 4] {
    let p = j(Vec2::new(s[0], s[1]));
    [p.x, p.y, s[2] - FRAC_PI_2, s[3]]
}

/// `H(theta) = int_0^theta h2`, exact for zero-mean trig polynomials.
pub fn integrate_h2(h2: &TorusPolynomial) -> Result<TorusPolynomial, CbError> {
    if h2.mean().norm() > MEAN_TOL {
        return Err(CbError::NonZeroMeanH2(h2.mean().re));
    }
    let mut terms = Vec::new();
    let mut constant = Complex64::new(0.0, 0.0);
    for (m, c) in h2.coeffs() {
        if m[0] == 0 {
            continue;
        }
        let a = c / Complex64::new(0.0, m[0] as f64);
        terms.push((m.clone(), a));
        constant -= a;
    }
    terms.push((vec![0], constant));
    Ok(TorusPolynomial::from_terms(1, terms))
}

/// `K(theta) = R_{H(theta)} h1(theta)` as a rotation-harmonic series.
///
/// With `h2 = 0` the result is `h1` exactly; otherwise the coefficients come from
/// an FFT on [`K_NODES`] nodes truncated at [`K_MAX_HARMONIC`].
pub fn build_k(h1: &RotationSeries, h2: &TorusPolynomial) -> Result<RotationSeries, CbError> {
    let h_int = integrate_h2(h2)?;
    if h2.is_zero() {
        return Ok(h1.clone());
    }
    let n = K_NODES;
    let mut buf: Vec<Complex64> = (0..n)
        .map(|i| {
            let t = TAU * i as f64 / n as f64;
            let k = rotate(h_int.eval_real(&[t]), h1.eval(t));
            Complex64::new(k.x, k.y)
        })
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let scale = 1.0 / n as f64;
    let mut tail = 0.0;
    let mut kept = BTreeMap::new();
    let peak = buf.iter().map(|c| c.norm()).fold(0.0, f64::max) * scale;
    for (i, c) in buf.iter().enumerate() {
        let k = if i <= n / 2 { i as i32 } else { i as i32 - n as i32 };
        let c = c * scale;
        if k.abs() > K_MAX_HARMONIC {
            tail += c.norm_sqr();
        } else if c.norm() > 1e-17 * peak.max(1e-300) {
            kept.insert(k, Vec2::new(c.re, c.im));
        }
    }
    if tail > K_TAIL_TOL {
        return Err(CbError::TruncationTail(tail));
    }
    Ok(RotationSeries::new(kept))
}

/// Periodic solution of `M' - omega J M = K`: `A_k = J B_k / (k + omega)`.
pub fn solve_m(k: &RotationSeries, omega: f64) -> Result<RotationSeries, CbError> {
    if integer_omega(omega).is_some() {
        return Err(CbError::IntegerOmega(omega));
    }
    Ok(k.map(|kk, b| j(b) / (kk as f64 + omega)))
}

/// Resonant variant for `omega = -j`: returns `(M~, V)` with `A_j = 0` and `V = B_j`.
pub fn solve_m_resonant(k: &RotationSeries, omega: f64) -> Result<(RotationSeries, Vec2), CbError> {
    let jr = -integer_omega(omega).ok_or(CbError::NonIntegerOmega(omega))?;
    let v = k.coeff(jr);
    let m = k.without(jr).map(|kk, b| j(b) / (kk - jr) as f64);
    Ok((m, v))
}

/// Max of `|M' - omega J M - K|` on `nodes` uniform points, with `K` given pointwise.
pub fn m_residual(m: &RotationSeries, omega: f64, k: impl Fn(f64) -> Vec2, nodes: usize) -> f64 {
    let dm = m.derivative();
    (0..nodes)
        .map(|i| {
            let t = TAU * i as f64 / nodes as f64;
            (dm.eval(t) - omega * j(m.eval(t)) - k(t)).norm()
        })
        .fold(0.0, f64::max)
}

/// `S(theta) = R_{-H(theta)} M(theta)` and `Q(phi, theta) = R_phi S(theta)`.
#[derive(Clone, Debug, PartialEq)]
pub struct QFunction {
    m: RotationSeries,
    dm: RotationSeries,
    h2: TorusPolynomial,
    h_int: TorusPolynomial,
}

impl QFunction {
    pub fn new(m: RotationSeries, h2: &TorusPolynomial) -> Result<Self, CbError> {
        Ok(Self {
            dm: m.derivative(),
            h_int: integrate_h2(h2)?,
            h2: h2.clone(),
            m,
        })
    }

    pub fn m(&self) -> &RotationSeries {
        &self.m
    }

    pub fn h_int(&self, theta: f64) -> f64 {
        self.h_int.eval_real(&[theta])
    }

    pub fn s(&self, theta: f64) -> Vec2 {
        rotate(-self.h_int(theta), self.m.eval(theta))
    }

    /// `S' = h2 J S + R_{-H} M'`.
    pub fn ds(&self, theta: f64) -> Vec2 {
        let s = self.s(theta);
        self.h2.eval_real(&[theta]) * j(s) + rotate(-self.h_int(theta), self.dm.eval(theta))
    }

    pub fn q(&self, phi: f64, theta: f64) -> Vec2 {
        rotate(phi, self.s(theta))
    }

    /// `dQ/dphi = -J R_phi S`.
    pub fn dq_dphi(&self, phi: f64, theta: f64) -> Vec2 {
        -j(self.q(phi, theta))
    }

    pub fn dq_dtheta(&self, phi: f64, theta: f64) -> Vec2 {
        rotate(phi, self.ds(theta))
    }

    /// Max of `|(omega + h2) dQ/dphi + dQ/dtheta - R_phi h1 + R_phi R_{-H} f(theta)|` on an
    /// `n x n` grid, where `f` is the harmonic removed in the resonant case (zero otherwise).
    pub fn pde_residual(&self, omega: f64, h1: &RotationSeries, removed: impl Fn(f64) -> Vec2, n: usize) -> f64 {
        let mut worst = 0.0f64;
        for a in 0..n {
            let phi = TAU * a as f64 / n as f64;
            for b in 0..n {
                let th = TAU * b as f64 / n as f64;
                let lhs = (omega + self.h2.eval_real(&[th])) * self.dq_dphi(phi, th) + self.dq_dtheta(phi, th);
                let rhs = rotate(phi, h1.eval(th)) - rotate(phi, rotate(-self.h_int(th), removed(th)));
                worst = worst.max((lhs - rhs).norm());
            }
        }
        worst
    }
}

/// Evaluable standard form for non-integer `omega`:
/// `psi' = eps R_phi G1`, `phi' = omega + eps G2`, `theta' = 1`.
pub trait NonIntStandardForm: Sync {
    fn omega(&self) -> f64;
    fn g1(&self, psi: Vec2, phi: f64, theta: f64) -> Vec2;
    fn g2(&self, psi: Vec2, phi: f64, theta: f64) -> f64;

    fn rhs(&self, eps: f64, s: &[f64; 4]) -> [f64; 4] {
        let psi = Vec2::new(s[0], s[1]);
        let d = eps * rotate(s[2], self.g1(psi, s[2], s[3]));
        [d.x, d.y, self.omega() + eps * self.g2(psi, s[2], s[3]), 1.0]
    }
}

impl<T: NonIntStandardForm + ?Sized> NonIntStandardForm for &T {
    fn omega(&self) -> f64 {
        (**self).omega()
    }

    fn g1(&self, psi: Vec2, phi: f64, theta: f64) -> Vec2 {
        (**self).g1(psi, phi, theta)
    }

    fn g2(&self, psi: Vec2, phi: f64, theta: f64) -> f64 {
        (**self).g2(psi, phi, theta)
    }
}

/// Evaluable standard form for `omega = -j`:
/// `psi' = R_phi V + eps R_phi H1`, `phi' = eps H2`, `theta' = 1`.
pub trait IntStandardForm: Sync {
    fn resonance(&self) -> i32;
    fn drift(&self) -> Vec2;
    fn h1(&self, psi: Vec2, phi: f64, theta: f64) -> Vec2;
    fn h2(&self, psi: Vec2, phi: f64, theta: f64) -> f64;

    fn rhs(&self, eps: f64, s: &[f64; 4]) -> [f64; 4] {
        let psi = Vec2::new(s[0], s[1]);
        let d = rotate(s[2], self.drift() + eps * self.h1(psi, s[2], s[3]));
        [d.x, d.y, eps * self.h2(psi, s[2], s[3]), 1.0]
    }
}

impl<T: IntStandardForm + ?Sized> IntStandardForm for &T {
    fn resonance(&self) -> i32 {
        (**self).resonance()
    }

    fn drift(&self) -> Vec2 {
        (**self).drift()
    }

    fn h1(&self, psi: Vec2, phi: f64, theta: f64) -> Vec2 {
        (**self).h1(psi, phi, theta)
    }

    fn h2(&self, psi: Vec2, phi: f64, theta: f64) -> f64 {
        (**self).h2(psi, phi, theta)
    }
}

/// Standard form obtained from a [`CenterBundleSystem`] with non-integer `omega`.
#[derive(Clone, Debug, PartialEq)]
pub struct StandardFormNonInt {
    sys: CenterBundleSystem,
    k: RotationSeries,
    q: QFunction,
    near_integer: Option<f64>,
}

impl StandardFormNonInt {
    pub fn k(&self) -> &RotationSeries {
        &self.k
    }

    pub fn q_function(&self) -> &QFunction {
        &self.q
    }

    pub fn system(&self) -> &CenterBundleSystem {
        &self.sys
    }

    /// Distance of `omega` to the nearest integer when it is small enough to amplify `M`.
    pub fn near_integer_warning(&self) -> Option<f64> {
        self.near_integer
    }

    /// `(psi - Q(phi, theta), phi - H(theta), theta)`.
    pub fn to_standard_coords(&self, s: &[f64; 4]) -> [f64; 4] {
        let q = self.q.q(s[2], s[3]);
        [s[0] - q.x, s[1] - q.y, s[2] - self.q.h_int(s[3]), s[3]]
    }

    fn m1_g2(&self, psi: Vec2, phi_p: f64, theta: f64) -> (Vec2, f64) {
        let s = self.q.s(theta);
        let p = psi + rotate(phi_p, s);
        let x = [p.x, p.y, phi_p, theta];
        let f2 = self.sys.f2.eval_real(&x);
        (self.sys.f1.eval(&x) + f2 * j(s), f2)
    }

    pub fn integrate(&self, initial: [f64; 4], t_end: f64, dt: f64, sample_every: usize) -> Trajectory<4> {
        let eps = self.sys.epsilon;
        ode::integrate(|s| self.rhs(eps, s), initial, 0.0, t_end, dt, sample_every)
    }
}

impl NonIntStandardForm for StandardFormNonInt {
    fn omega(&self) -> f64 {
        self.sys.omega
    }

    fn g1(&self, psi: Vec2, phi: f64, theta: f64) -> Vec2 {
        let h = self.q.h_int(theta);
        rotate(h, self.m1_g2(psi, phi + h, theta).0)
    }

    fn g2(&self, psi: Vec2, phi: f64, theta: f64) -> f64 {
        let h = self.q.h_int(theta);
        self.m1_g2(psi, phi + h, theta).1
    }
}

/// Standard form obtained from a [`CenterBundleSystem`] with `omega = -j`.
#[derive(Clone, Debug, PartialEq)]
pub struct StandardFormInt {
    sys: CenterBundleSystem,
    resonance: i32,
    v: Vec2,
    k: RotationSeries,
    q: QFunction,
}

impl StandardFormInt {
    pub fn k(&self) -> &RotationSeries {
        &self.k
    }

    pub fn q_function(&self) -> &QFunction {
        &self.q
    }

    pub fn system(&self) -> &CenterBundleSystem {
        &self.sys
    }

    /// `(psi - Q~(phi, theta), phi - H(theta) + j theta, theta)`.
    pub fn to_standard_coords(&self, s: &[f64; 4]) -> [f64; 4] {
        let q = self.q.q(s[2], s[3]);
        let jr = self.resonance as f64;
        [s[0] - q.x, s[1] - q.y, s[2] - self.q.h_int(s[3]) + jr * s[3], s[3]]
    }

    fn shift(&self, theta: f64) -> f64 {
        self.q.h_int(theta) - self.resonance as f64 * theta
    }

    fn n1_n2(&self, psi: Vec2, phi_p: f64, theta: f64) -> (Vec2, f64) {
        let s = self.q.s(theta);
        let p = psi + rotate(phi_p, s);
        let x = [p.x, p.y, phi_p, theta];
        let f2 = self.sys.f2.eval_real(&x);
        (self.sys.f1.eval(&x) + f2 * j(s), f2)
    }

    pub fn integrate(&self, initial: [f64; 4], t_end: f64, dt: f64, sample_every: usize) -> Trajectory<4> {
        let eps = self.sys.epsilon;
        ode::integrate(|s| self.rhs(eps, s), initial, 0.0, t_end, dt, sample_every)
    }
}

impl IntStandardForm for StandardFormInt {
    fn resonance(&self) -> i32 {
        self.resonance
    }

    fn drift(&self) -> Vec2 {
        self.v
    }

    fn h1(&self, psi: Vec2, phi: f64, theta: f64) -> Vec2 {
        let sh = self.shift(theta);
        rotate(sh, self.n1_n2(psi, phi + sh, theta).0)
    }

    fn h2(&self, psi: Vec2, phi: f64, theta: f64) -> f64 {
        let sh = self.shift(theta);
        self.n1_n2(psi, phi + sh, theta).1
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum StandardForm {
    NonInt(StandardFormNonInt),
    Int(StandardFormInt),
}

/// Builds `H`, `K`, `M` (or `M~`, `V`) and `Q`, and returns the matching standard form.
pub fn to_standard_form(sys: &CenterBundleSystem) -> Result<StandardForm, CbError> {
    let k = build_k(&sys.h1, &sys.h2)?;
    match integer_omega(sys.omega) {
        None => {
            let m = solve_m(&k, sys.omega)?;
            Ok(StandardForm::NonInt(StandardFormNonInt {
                sys: sys.clone(),
                q: QFunction::new(m, &sys.h2)?,
                k,
                near_integer: near_integer_warning(sys.omega),
            }))
        }
        Some(n) => {
            let (m, v) = solve_m_resonant(&k, sys.omega)?;
            Ok(StandardForm::Int(StandardFormInt {
                sys: sys.clone(),
                resonance: -n,
                v,
                q: QFunction::new(m, &sys.h2)?,
                k,
            }))
        }
    }
}

/// Standard form whose `G1`, `G2` are given trigonometric polynomials on `T^4`.
#[derive(Clone, Debug, PartialEq)]
pub struct PolynomialNonIntForm {
    pub omega: f64,
    pub g1: VectorPolynomial,
    pub g2: TorusPolynomial,
}

impl NonIntStandardForm for PolynomialNonIntForm {
    fn omega(&self) -> f64 {
        self.omega
    }

    fn g1(&self, psi: Vec2, phi: f64, theta: f64) -> Vec2 {
        self.g1.eval(&[psi.x, psi.y, phi, theta])
    }

    fn g2(&self, psi: Vec2, phi: f64, theta: f64) -> f64 {
        self.g2.eval_real(&[psi.x, psi.y, phi, theta])
    }
}

/// Integer-`omega` standard form with polynomial `H1`, `H2`.
#[derive(Clone, Debug, PartialEq)]
pub struct PolynomialIntForm {
    pub resonance: i32,
    pub v: Vec2,
    pub h1: VectorPolynomial,
    pub h2: TorusPolynomial,
}

impl IntStandardForm for PolynomialIntForm {
    fn resonance(&self) -> i32 {
        self.resonance
    }

    fn drift(&self) -> Vec2 {
        self.v
    }

    fn h1(&self, psi: Vec2, phi: f64, theta: f64) -> Vec2 {
        self.h1.eval(&[psi.x, psi.y, phi, theta])
    }

    fn h2(&self, psi: Vec2, phi: f64, theta: f64) -> f64 {
        self.h2.eval_real(&[psi.x, psi.y, phi, theta])
    }
}

/// A system with `h1 = h2 = 0`, for which the standard form is `G = F`.
pub fn system_from_forms(
    omega: f64,
    epsilon: f64,
    g1: VectorPolynomial,
    g2: TorusPolynomial,
) -> Result<CenterBundleSystem, CbError> {
    CenterBundleSystem::new(omega, epsilon, RotationSeries::zero(), TorusPolynomial::zero(1), g1, g2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    fn system(seed: u64, omega: f64, eps: f64) -> CenterBundleSystem {
        let mut rng = StdRng::seed_from_u64(seed);
        CenterBundleSystem::random_symmetric(&mut rng, omega, eps, &RandomSystemSpec::default())
    }

    /// `J_n(x)` by its power series.
    fn bessel_j(n: i32, x: f64) -> f64 {
        let (n_abs, sign) = if n < 0 && n % 2 != 0 {
            (-n, -1.0)
        } else {
            (n.abs(), 1.0)
        };
        let mut term = (x / 2.0).powi(n_abs) / (1..=n_abs).map(|k| k as f64).product::<f64>();
        let mut sum = term;
        for m in 1..40 {
            term *= -(x * x / 4.0) / (m as f64 * (m + n_abs) as f64);
            sum += term;
        }
        sign * sum
    }

    #[test]
    fn bare_flow() {
        let sys = system_from_forms(0.7, 0.0, VectorPolynomial::zero(4), TorusPolynomial::zero(4)).unwrap();
        assert_eq!(sys.eval(&[1.0, 2.0, 0.3, 0.4]), [0.0, 0.0, 0.7, 1.0]);
        let sys = CenterBundleSystem::new(
            0.7,
            0.0,
            RotationSeries::constant(Vec2::new(1.0, 0.0)),
            TorusPolynomial::zero(1),
            VectorPolynomial::zero(4),
            TorusPolynomial::zero(4),
        )
        .unwrap();
        let d = sys.eval(&[0.0, 0.0, FRAC_PI_2, 0.0]);
        assert!((d[0]).abs() < 1e-15 && (d[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_invalid_systems() {
        let h2 = TorusPolynomial::constant(1, 0.1);
        let e = CenterBundleSystem::new(
            0.5,
            0.0,
            RotationSeries::zero(),
            h2,
            VectorPolynomial::zero(4),
            TorusPolynomial::zero(4),
        );
        assert!(matches!(e, Err(CbError::NonZeroMeanH2(_))));
        let f2 = TorusPolynomial::cos_mode(&[1, 0, 0, 0], 1.0);
        let e = system_from_forms(0.5, 0.1, VectorPolynomial::zero(4), f2);
        assert!(matches!(e, Err(CbError::Asymmetric { field: "F2", .. })));
    }

    #[test]
    fn conjugate_state_maps_vector_field() {
        let sys = system(1, 0.37, 0.2);
        let s = [0.4, -1.1, 2.3, 0.9];
        let a = sys.eval(&s);
        let b = sys.eval(&conjugate_state(&s));
        let ja = j(Vec2::new(a[0], a[1]));
        assert!((b[0] - ja.x).abs() < 1e-12 && (b[1] - ja.y).abs() < 1e-12);
        assert!((b[2] - a[2]).abs() < 1e-12);
        assert_eq!(b[3], 1.0);
    }

    #[test]
    fn integration_closed_form_without_h1() {
        let mut h2 = TorusPolynomial::cos_mode(&[1], 0.3);
        h2 = h2.add(&TorusPolynomial::sin_mode(&[2], -0.2));
        let sys = CenterBundleSystem::new(
            0.6,
            0.0,
            RotationSeries::zero(),
            h2.clone(),
            VectorPolynomial::zero(4),
            TorusPolynomial::zero(4),
        )
        .unwrap();
        let tr = sys.integrate([0.2, 0.3, 1.0, 0.0], 10.0, 0.01, 100);
        let (t, y) = tr.last().unwrap();
        let h = integrate_h2(&h2).unwrap().eval_real(&[t]);
        assert!((y[0] - 0.2).abs() < 1e-15 && (y[1] - 0.3).abs() < 1e-15);
        assert!((y[2] - (1.0 + 0.6 * t + h)).abs() < 1e-9);
        assert!((y[3] - t).abs() < 1e-12);
    }

    #[test]
    fn h_is_antiderivative() {
        let h2 = TorusPolynomial::cos_mode(&[1], 0.3).add(&TorusPolynomial::sin_mode(&[3], 0.7));
        let h = integrate_h2(&h2).unwrap();
        assert!(h.eval_real(&[0.0]).abs() < 1e-15);
        let dh = h.derivative(0);
        for &t in &[0.1, 1.7, 4.0] {
            assert!((dh.eval_real(&[t]) - h2.eval_real(&[t])).abs() < 1e-14);
        }
    }

    #[test]
    fn k_identity_without_h2() {
        let h1 = RotationSeries::new([(2, Vec2::new(0.5, 1.0))].into_iter().collect());
        assert_eq!(build_k(&h1, &TorusPolynomial::zero(1)).unwrap(), h1);
    }

    #[test]
    fn k_matches_jacobi_anger() {
        let h1 = RotationSeries::constant(Vec2::new(1.0, 0.0));
        let h2 = TorusPolynomial::cos_mode(&[1], 1.0);
        let k = build_k(&h1, &h2).unwrap();
        for n in -12..=12 {
            let b = k.coeff(n);
            assert!((b.x - bessel_j(n, 1.0)).abs() < 1e-10, "n={n}");
            assert!(b.y.abs() < 1e-10);
        }
        for &t in &[0.0f64, 0.8, 3.3] {
            let direct = Vec2::new(t.sin().cos(), t.sin().sin());
            assert!((k.eval(t) - direct).norm() < 1e-12);
            assert!((k.eval(t + TAU) - k.eval(t)).norm() < 1e-12);
        }
    }

    #[test]
    fn solve_m_example() {
        let k = RotationSeries::new([(1, Vec2::new(1.0, 0.0))].into_iter().collect());
        let m = solve_m(&k, 0.5).unwrap();
        let a = m.coeff(1);
        assert!((a - Vec2::new(0.0, -2.0 / 3.0)).norm() < 1e-15);
        assert!(m_residual(&m, 0.5, |t| k.eval(t), 1024) < 1e-12);
        assert!(solve_m(&RotationSeries::zero(), 0.5).unwrap().is_zero());
        assert!(matches!(solve_m(&k, 2.0), Err(CbError::IntegerOmega(_))));
    }

    #[test]
    fn resonant_examples() {
        let b = Vec2::new(0.3, -0.8);
        let k = RotationSeries::new([(1, b)].into_iter().collect());
        let (m, v) = solve_m_resonant(&k, -1.0).unwrap();
        assert!(m.is_zero());
        assert_eq!(v, b);
        let c = Vec2::new(1.0, 2.0);
        let (m, v) = solve_m_resonant(&RotationSeries::constant(c), 0.0).unwrap();
        assert!(m.is_zero());
        assert_eq!(v, c);
    }

    #[test]
    fn q_shift_by_quarter_turn() {
        let sys = system(3, 0.41, 0.1);
        let StandardForm::NonInt(sf) = to_standard_form(&sys).unwrap() else {
            panic!()
        };
        let q = sf.q_function();
        for &(p, t) in &[(0.3, 1.2), (2.0, -0.4), (5.5, 3.3)] {
            let lhs = q.q(p + FRAC_PI_2, t);
            let rhs = -j(q.q(p, t));
            assert!((lhs - rhs).norm() < 1e-12);
        }
    }

    #[test]
    fn q_solves_transport_equation() {
        let sys = system(4, 0.63, 0.1);
        let StandardForm::NonInt(sf) = to_standard_form(&sys).unwrap() else {
            panic!()
        };
        let r = sf
            .q_function()
            .pde_residual(sys.omega(), sys.h1(), |_| Vec2::zeros(), 64);
        assert!(r < 1e-10, "{r}");
    }

    #[test]
    fn standard_form_is_periodic_and_symmetric() {
        let sys = system(5, 0.29, 0.1);
        let StandardForm::NonInt(sf) = to_standard_form(&sys).unwrap() else {
            panic!()
        };
        let psi = Vec2::new(0.7, -0.2);
        let a = sf.g1(psi, 1.1, 0.4);
        let b = sf.g1(psi + Vec2::new(TAU, -TAU), 1.1 + TAU, 0.4 - TAU);
        assert!((a - b).norm() < 1e-12);
        let c = sf.g1(Vec2::new(-psi.y, psi.x), 1.1 + FRAC_PI_2, 0.4);
        assert!((a - c).norm() < 1e-12);
        let g = sf.g2(psi, 1.1, 0.4);
        assert!((g - sf.g2(Vec2::new(-psi.y, psi.x), 1.1 + FRAC_PI_2, 0.4)).abs() < 1e-12);
    }

    #[test]
    fn trivial_transform_reproduces_forms() {
        let f1 = VectorPolynomial::from_components(
            &TorusPolynomial::sin_mode(&[1, 0, 0, 0], 1.0),
            &TorusPolynomial::sin_mode(&[0, 1, 0, 0], 1.0),
        )
        .rotate_by_slot(2, -1);
        let f2 = TorusPolynomial::cos_mode(&[0, 0, 4, 0], 0.5);
        let sys = system_from_forms(1.0 / 3.0, 0.01, f1.clone(), f2.clone()).unwrap();
        let StandardForm::NonInt(sf) = to_standard_form(&sys).unwrap() else {
            panic!()
        };
        let x = [0.3, 0.9, 1.7, 2.2];
        let p = Vec2::new(x[0], x[1]);
        assert!((sf.g1(p, x[2], x[3]) - f1.eval(&x)).norm() < 1e-15);
        assert!((sf.g2(p, x[2], x[3]) - f2.eval_real(&x)).abs() < 1e-15);
    }

    #[test]
    fn resonant_drift_slope() {
        // omega = -1 and h1 = R_theta B: psi' = R_{phi0 - t} R_t B = R_{phi0} B.
        let b = Vec2::new(0.6, 0.2);
        let h1 = RotationSeries::new([(1, b), (3, Vec2::new(0.1, 0.0))].into_iter().collect());
        let sys = CenterBundleSystem::new(
            -1.0,
            0.0,
            h1,
            TorusPolynomial::zero(1),
            VectorPolynomial::zero(4),
            TorusPolynomial::zero(4),
        )
        .unwrap();
        let StandardForm::Int(sf) = to_standard_form(&sys).unwrap() else {
            panic!()
        };
        assert_eq!(sf.drift(), b);
        let t_end = 200.0 * std::f64::consts::PI;
        let tr = sys.integrate([0.0, 0.0, 0.5, 0.0], t_end, 0.01, 1000);
        let (_, y) = tr.last().unwrap();
        let slope = Vec2::new(y[0], y[1]).norm() / t_end;
        assert!((slope - b.norm()).abs() < 1e-6, "{slope}");
    }

    #[test]
    fn conjugate_trajectories() {
        let sys = system(8, 0.45, 0.3);
        let s0 = [0.2, 0.5, 0.1, 0.0];
        let a = sys.integrate(s0, 100.0, 0.01, 100);
        let b = sys.integrate(conjugate_state(&s0), 100.0, 0.01, 100);
        for (ya, yb) in a.y.iter().zip(&b.y) {
            let c = conjugate_state(ya);
            for i in 0..4 {
                assert!((c[i] - yb[i]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn near_integer_is_flagged() {
        assert!(near_integer_warning(1.02).is_some());
        assert!(near_integer_warning(1.5).is_none());
        assert!(near_integer_warning(2.0).is_none());
    }
}
