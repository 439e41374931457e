//! Finite Fourier series on tori.
//!
//! [`TorusPolynomial`] stores `f(x) = sum_m c_m exp(i <m, x>)` for a finite set of
//! integer multi-indices. Real scalar functions carry conjugate-symmetric
//! coefficients (`c_{-m} = conj(c_m)`).
//!
//! Planar vector fields are stored through the bijection `(a, b) <-> a + i b`:
//! a [`VectorPolynomial`] is a complex series `z` whose real and imaginary
//! parts are the two components. In this representation `J` is
//! multiplication by `-i` and `R_{n x_s}` shifts index slot `s` by `n`.
//!
//! For the four-torus the slot convention is `(psi1, psi2, phi, theta)`.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use smallvec::SmallVec;

use crate::geometry::Vec2;

pub const PSI1: usize = 0;
pub const PSI2: usize = 1;
pub const PHI: usize = 2;
pub const THETA: usize = 3;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// `i^n` for any integer `n`.
pub fn i_pow(n: i32) -> Complex64 {
    match n.rem_euclid(4) {
        0 => Complex64::new(1.0, 0.0),
        1 => I,
        2 => Complex64::new(-1.0, 0.0),
        _ => -I,
    }
}

/// A finite complex Fourier series on the `dim`-torus.
#[derive(Clone, PartialEq)]
pub struct TorusPolynomial {
    dim: usize,
    coeffs: BTreeMap<Vec<i32>, Complex64>,
    flat_idx: Vec<i32>,
    flat_coef: Vec<Complex64>,
    max_deg: Vec<usize>,
}

impl fmt::Debug for TorusPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TorusPolynomial")
            .field("dim", &self.dim)
            .field("coeffs", &self.coeffs)
            .finish()
    }
}

impl TorusPolynomial {
    /// Builds a series from an explicit coefficient map. Exact zeros are dropped.
    pub fn from_map(dim: usize, coeffs: BTreeMap<Vec<i32>, Complex64>) -> Self {
        let coeffs: BTreeMap<_, _> = coeffs
            .into_iter()
            .filter(|(m, c)| {
                assert_eq!(m.len(), dim, "multi-index length must equal dim");
                *c != Complex64::new(0.0, 0.0)
            })
            .collect();
        let mut max_deg = vec![0usize; dim];
        let mut flat_idx = Vec::with_capacity(coeffs.len() * dim);
        let mut flat_coef = Vec::with_capacity(coeffs.len());
        for (m, c) in &coeffs {
            for (d, &k) in m.iter().enumerate() {
                max_deg[d] = max_deg[d].max(k.unsigned_abs() as usize);
            }
            flat_idx.extend_from_slice(m);
            flat_coef.push(*c);
        }
        Self {
            dim,
            coeffs,
            flat_idx,
            flat_coef,
            max_deg,
        }
    }

    pub fn from_terms<I2>(dim: usize, terms: I2) -> Self
    where
        I2: IntoIterator<Item = (Vec<i32>, Complex64)>,
    {
        let mut map = BTreeMap::new();
        for (m, c) in terms {
            *map.entry(m).or_insert(Complex64::new(0.0, 0.0)) += c;
        }
        Self::from_map(dim, map)
    }

    pub fn zero(dim: usize) -> Self {
        Self::from_map(dim, BTreeMap::new())
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        Self::from_terms(dim, [(vec![0; dim], Complex64::new(c, 0.0))])
    }

    /// `amp * cos(<m, x>)`.
    pub fn cos_mode(m: &[i32], amp: f64) -> Self {
        let dim = m.len();
        if m.iter().all(|&k| k == 0) {
            return Self::constant(dim, amp);
        }
        let neg: Vec<i32> = m.iter().map(|k| -k).collect();
        Self::from_terms(
            dim,
            [
                (m.to_vec(), Complex64::new(amp / 2.0, 0.0)),
                (neg, Complex64::new(amp / 2.0, 0.0)),
            ],
        )
    }

    /// `amp * sin(<m, x>)`.
    pub fn sin_mode(m: &[i32], amp: f64) -> Self {
        let dim = m.len();
        if m.iter().all(|&k| k == 0) {
            return Self::zero(dim);
        }
        let neg: Vec<i32> = m.iter().map(|k| -k).collect();
        Self::from_terms(
            dim,
            [
                (m.to_vec(), Complex64::new(0.0, -amp / 2.0)),
                (neg, Complex64::new(0.0, amp / 2.0)),
            ],
        )
    }

    /// `c * exp(i <m, x>)`.
    pub fn monomial(m: &[i32], c: Complex64) -> Self {
        Self::from_terms(m.len(), [(m.to_vec(), c)])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn coeffs(&self) -> &BTreeMap<Vec<i32>, Complex64> {
        &self.coeffs
    }

    pub fn coeff(&self, m: &[i32]) -> Complex64 {
        self.coeffs.get(m).copied().unwrap_or_default()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Largest `|m_d|` appearing in slot `d`.
    pub fn degree(&self, d: usize) -> usize {
        self.max_deg[d]
    }

    /// Coefficient of the zero multi-index.
    pub fn mean(&self) -> Complex64 {
        self.coeff(&vec![0; self.dim])
    }

    /// Max over `m` of `|c_{-m} - conj(c_m)|`; zero for real-valued series.
    pub fn reality_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for (m, c) in &self.coeffs {
            let neg: Vec<i32> = m.iter().map(|k| -k).collect();
            worst = worst.max((self.coeff(&neg) - c.conj()).norm());
        }
        worst
    }

    pub fn is_real(&self, tol: f64) -> bool {
        self.reality_defect() <= tol
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn eval(&self, x: &[f64]) -> Complex64 {
        debug_assert_eq!(x.len(), self.dim);
        if self.flat_coef.is_empty() {
            return Complex64::new(0.0, 0.0);
        }
        let mut offsets: SmallVec<[usize; 8]> = SmallVec::new();
        let mut table: SmallVec<[Complex64; 96]> = SmallVec::new();
        for (&xd, &deg) in x.iter().zip(&self.max_deg) {
            offsets.push(table.len());
            let base = Complex64::cis(xd);
            let mut p = Complex64::new(1.0, 0.0);
            table.push(p);
            for n in 1..=deg {
                p = if n % 16 == 0 {
                    Complex64::cis(n as f64 * xd)
                } else {
                    p * base
                };
                table.push(p);
            }
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for (t, c) in self.flat_coef.iter().enumerate() {
            let idx = &self.flat_idx[t * self.dim..(t + 1) * self.dim];
            let mut term = *c;
            for (d, &k) in idx.iter().enumerate() {
                if k > 0 {
                    term *= table[offsets[d] + k as usize];
                } else if k < 0 {
                    term *= table[offsets[d] + (-k) as usize].conj();
                }
            }
            acc += term;
        }
        acc
    }

    /// Real part of [`eval`](Self::eval); the value for real-valued series.
    pub fn eval_real(&self, x: &[f64]) -> f64 {
        self.eval(x).re
    }

    pub fn map_coeffs(&self, f: impl Fn(&[i32], Complex64) -> Complex64) -> Self {
        Self::from_map(
            self.dim,
            self.coeffs.iter().map(|(m, c)| (m.clone(), f(m, *c))).collect(),
        )
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map_coeffs(|_, c| c * s)
    }

    pub fn scale_complex(&self, s: Complex64) -> Self {
        self.map_coeffs(|_, c| c * s)
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        let mut map = self.coeffs.clone();
        for (m, c) in &other.coeffs {
            *map.entry(m.clone()).or_default() += c;
        }
        Self::from_map(self.dim, map)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1.0))
    }

    /// Product of two series (convolution of coefficients).
    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        let mut map: BTreeMap<Vec<i32>, Complex64> = BTreeMap::new();
        for (m1, c1) in &self.coeffs {
            for (m2, c2) in &other.coeffs {
                let m: Vec<i32> = m1.iter().zip(m2).map(|(a, b)| a + b).collect();
                *map.entry(m).or_default() += c1 * c2;
            }
        }
        Self::from_map(self.dim, map)
    }

    /// Partial derivative with respect to slot `slot`.
    pub fn derivative(&self, slot: usize) -> Self {
        self.map_coeffs(|m, c| c * I * m[slot] as f64)
    }

    /// Multiplication by `exp(i n x_slot)`.
    pub fn shift(&self, slot: usize, n: i32) -> Self {
        Self::from_map(
            self.dim,
            self.coeffs
                .iter()
                .map(|(m, c)| {
                    let mut m = m.clone();
                    m[slot] += n;
                    (m, *c)
                })
                .collect(),
        )
    }

    /// Pointwise complex conjugate: `x -> conj(f(x))`.
    pub fn conj_fn(&self) -> Self {
        Self::from_map(
            self.dim,
            self.coeffs
                .iter()
                .map(|(m, c)| (m.iter().map(|k| -k).collect(), c.conj()))
                .collect(),
        )
    }

    /// Real part as a real-valued series.
    pub fn real_part(&self) -> Self {
        self.add(&self.conj_fn()).scale(0.5)
    }

    /// Imaginary part as a real-valued series.
    pub fn imag_part(&self) -> Self {
        self.sub(&self.conj_fn()).scale_complex(Complex64::new(0.0, -0.5))
    }

    /// Places this series into a higher-dimensional torus; old slot `i` becomes `slots[i]`.
    pub fn embed(&self, new_dim: usize, slots: &[usize]) -> Self {
        assert_eq!(slots.len(), self.dim);
        Self::from_map(
            new_dim,
            self.coeffs
                .iter()
                .map(|(m, c)| {
                    let mut nm = vec![0; new_dim];
                    for (i, &k) in m.iter().enumerate() {
                        nm[slots[i]] += k;
                    }
                    (nm, *c)
                })
                .collect(),
        )
    }

    /// Composition with the lattice action `(psi, phi) -> (-J psi, phi + pi/2)`.
    ///
    /// Slots 0 and 1 are `psi`; slot 2, when present, is `phi`; remaining slots are
    /// untouched. The returned series is `x -> f(g x)`.
    pub fn lattice_action(&self) -> Self {
        assert!(self.dim >= 2, "lattice action needs two translation slots");
        Self::from_map(
            self.dim,
            self.coeffs
                .iter()
                .map(|(m, c)| {
                    let mut nm = m.clone();
                    nm[0] = m[1];
                    nm[1] = -m[0];
                    let phase = if self.dim > 2 {
                        i_pow(m[2])
                    } else {
                        Complex64::new(1.0, 0.0)
                    };
                    (nm, c * phase)
                })
                .collect(),
        )
    }

    /// Group average `(1/4) sum_n f o g^n`, which is lattice-invariant.
    pub fn lattice_symmetrize(&self) -> Self {
        let mut acc = self.clone();
        let mut g = self.clone();
        for _ in 0..3 {
            g = g.lattice_action();
            acc = acc.add(&g);
        }
        acc.scale(0.25)
    }

    /// Max coefficient difference between `f o g` and `f`.
    pub fn lattice_defect(&self) -> f64 {
        let d = self.lattice_action().sub(self);
        d.max_abs_coeff()
    }
}

/// A planar vector field stored as the complex series `z = a + i b`.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorPolynomial {
    z: TorusPolynomial,
}

impl VectorPolynomial {
    pub fn from_complex(z: TorusPolynomial) -> Self {
        Self { z }
    }

    /// Builds `(a, b)` from two real-valued scalar series.
    pub fn from_components(a: &TorusPolynomial, b: &TorusPolynomial) -> Self {
        Self {
            z: a.add(&b.scale_complex(I)),
        }
    }

    pub fn zero(dim: usize) -> Self {
        Self {
            z: TorusPolynomial::zero(dim),
        }
    }

    /// Constant vector field.
    pub fn constant(dim: usize, v: Vec2) -> Self {
        Self {
            z: TorusPolynomial::monomial(&vec![0; dim], Complex64::new(v.x, v.y)),
        }
    }

    pub fn complex(&self) -> &TorusPolynomial {
        &self.z
    }

    pub fn dim(&self) -> usize {
        self.z.dim()
    }

    pub fn x(&self) -> TorusPolynomial {
        self.z.real_part()
    }

    pub fn y(&self) -> TorusPolynomial {
        self.z.imag_part()
    }

    pub fn eval(&self, x: &[f64]) -> Vec2 {
        let z = self.z.eval(x);
        Vec2::new(z.re, z.im)
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            z: self.z.add(&other.z),
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { z: self.z.scale(s) }
    }

    /// Pointwise product with a real scalar series.
    pub fn mul_scalar(&self, s: &TorusPolynomial) -> Self {
        Self { z: self.z.mul(s) }
    }

    /// `J v`.
    pub fn apply_j(&self) -> Self {
        Self {
            z: self.z.scale_complex(-I),
        }
    }

    /// `R_{n x_slot} v`.
    pub fn rotate_by_slot(&self, slot: usize, n: i32) -> Self {
        Self {
            z: self.z.shift(slot, n),
        }
    }

    pub fn derivative(&self, slot: usize) -> Self {
        Self {
            z: self.z.derivative(slot),
        }
    }

    pub fn embed(&self, new_dim: usize, slots: &[usize]) -> Self {
        Self {
            z: self.z.embed(new_dim, slots),
        }
    }

    /// Componentwise composition with the lattice action (invariance form).
    pub fn lattice_action(&self) -> Self {
        Self {
            z: self.z.lattice_action(),
        }
    }

    /// Projection onto fields with `F(-J psi, phi + pi/2, .) = F(psi, phi, .)`.
    pub fn lattice_symmetrize(&self) -> Self {
        Self {
            z: self.z.lattice_symmetrize(),
        }
    }

    pub fn lattice_defect(&self) -> f64 {
        self.z.lattice_defect()
    }

    /// Projection onto fields with `W(-J psi, phi + pi/2) = -J W(psi, phi)`.
    pub fn lattice_equivariantize(&self) -> Self {
        // (-J)^{-n} corresponds to multiplication by i^{-n}.
        let mut acc = self.z.clone();
        let mut g = self.z.clone();
        for n in 1..4 {
            g = g.lattice_action();
            acc = acc.add(&g.scale_complex(i_pow(-n)));
        }
        Self { z: acc.scale(0.25) }
    }
}

/// One-dimensional vector Fourier series in the rotation-harmonic basis:
/// `K(theta) = sum_k R_{k theta} B_k` with `B_k` in `R^2`.
///
/// The bijection to complex series is `B_k = (Re c_k, Im c_k)` where
/// `K_1 + i K_2 = sum_k c_k exp(i k theta)`.
#[derive(Clone, Debug, PartialEq)]
pub struct RotationSeries {
    coeffs: BTreeMap<i32, Vec2>,
    kmin: i32,
    dense: Vec<Complex64>,
}

impl RotationSeries {
    pub fn new(coeffs: BTreeMap<i32, Vec2>) -> Self {
        let coeffs: BTreeMap<i32, Vec2> = coeffs.into_iter().filter(|(_, b)| b.x != 0.0 || b.y != 0.0).collect();
        let kmin = coeffs.keys().next().copied().unwrap_or(0);
        let kmax = coeffs.keys().next_back().copied().unwrap_or(0);
        let mut dense = vec![Complex64::new(0.0, 0.0); (kmax - kmin + 1) as usize];
        for (&k, b) in &coeffs {
            dense[(k - kmin) as usize] = Complex64::new(b.x, b.y);
        }
        Self { coeffs, kmin, dense }
    }

    pub fn zero() -> Self {
        Self::new(BTreeMap::new())
    }

    pub fn constant(v: Vec2) -> Self {
        Self::new([(0, v)].into_iter().collect())
    }

    pub fn coeffs(&self) -> &BTreeMap<i32, Vec2> {
        &self.coeffs
    }

    pub fn coeff(&self, k: i32) -> Vec2 {
        self.coeffs.get(&k).copied().unwrap_or_else(Vec2::zeros)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn max_harmonic(&self) -> i32 {
        self.coeffs.keys().map(|k| k.abs()).max().unwrap_or(0)
    }

    pub fn eval(&self, theta: f64) -> Vec2 {
        if self.coeffs.is_empty() {
            return Vec2::zeros();
        }
        // Horner in w = exp(i theta), then shift by w^kmin.
        let w = Complex64::cis(theta);
        let mut acc = Complex64::new(0.0, 0.0);
        for c in self.dense.iter().rev() {
            acc = acc * w + c;
        }
        let z = acc * Complex64::cis(self.kmin as f64 * theta);
        Vec2::new(z.re, z.im)
    }

    /// `K'(theta) = sum_k R_{k theta} (-k J B_k)`.
    pub fn derivative(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .map(|(&k, b)| (k, -(k as f64) * crate::geometry::j(*b)))
                .collect(),
        )
    }

    pub fn to_vector_polynomial(&self) -> VectorPolynomial {
        VectorPolynomial::from_complex(TorusPolynomial::from_terms(
            1,
            self.coeffs.iter().map(|(&k, b)| (vec![k], Complex64::new(b.x, b.y))),
        ))
    }

    /// Inverse of [`to_vector_polynomial`](Self::to_vector_polynomial); requires `dim == 1`.
    pub fn from_vector_polynomial(p: &VectorPolynomial) -> Self {
        assert_eq!(p.dim(), 1);
        Self::new(
            p.complex()
                .coeffs()
                .iter()
                .map(|(m, c)| (m[0], Vec2::new(c.re, c.im)))
                .collect(),
        )
    }

    pub fn map(&self, f: impl Fn(i32, Vec2) -> Vec2) -> Self {
        Self::new(self.coeffs.iter().map(|(&k, b)| (k, f(k, *b))).collect())
    }

    pub fn without(&self, k: i32) -> Self {
        let mut c = self.coeffs.clone();
        c.remove(&k);
        Self::new(c)
    }
}
