//! Standard forms with a prescribed rational average.
//!
//! For `W(psi, phi)`, `U(psi, phi)` whose `phi`-harmonics are multiples of `l`,
//! `G1 = R_{-phi} W(psi, phi - k theta / l)` and `G2 = U(psi, phi - k theta / l)`
//! average to exactly `(W, U)`.

use std::collections::BTreeMap;

use num_complex::Complex64;

use super::AnalyticRationalField;
use crate::center_bundle::PolynomialNonIntForm;
use crate::geometry::{j, Vec2};
use crate::trig::{TorusPolynomial, VectorPolynomial, PHI};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum PlantError {
    #[error("phi-harmonic {0} is not a multiple of l = {1}")]
    Harmonic(i32, i32),
    #[error("expected polynomials in (psi1, psi2, phi), got dimension {0}")]
    Dimension(usize),
    #[error("W is not equivariant (defect {0:.3e})")]
    NotEquivariant(f64),
    #[error("U is not invariant (defect {0:.3e})")]
    NotInvariant(f64),
}

fn substitute(p: &TorusPolynomial, k: i32, l: i32) -> Result<TorusPolynomial, PlantError> {
    if p.dim() != 3 {
        return Err(PlantError::Dimension(p.dim()));
    }
    let mut map = BTreeMap::new();
    for (m, c) in p.coeffs() {
        if m[PHI] % l != 0 {
            return Err(PlantError::Harmonic(m[PHI], l));
        }
        let idx = vec![m[0], m[1], m[PHI], -m[PHI] / l * k];
        *map.entry(idx).or_insert(Complex64::new(0.0, 0.0)) += *c;
    }
    Ok(TorusPolynomial::from_map(4, map))
}

/// Builds a `T^4` standard form at `omega = k / l` averaging to `(W, U)`.
pub fn plant_rational(
    k: i32,
    l: i32,
    w: &VectorPolynomial,
    u: &TorusPolynomial,
) -> Result<PolynomialNonIntForm, PlantError> {
    let dw = w.lattice_equivariantize().add(&w.scale(-1.0)).complex().max_abs_coeff();
    if dw > 1e-12 {
        return Err(PlantError::NotEquivariant(dw));
    }
    let du = u.lattice_defect();
    if du > 1e-12 {
        return Err(PlantError::NotInvariant(du));
    }
    let g1 = VectorPolynomial::from_complex(substitute(w.complex(), k, l)?).rotate_by_slot(PHI, -1);
    let g2 = substitute(u, k, l)?;
    Ok(PolynomialNonIntForm {
        omega: k as f64 / l as f64,
        g1,
        g2,
    })
}

/// A planted `l = 4` averaged system with a Hopf point on its locked branch.
///
/// `G1 = (p + q cos 4 phi) s + r J s - kappa s^3`, `G2 = -d sin 4 phi + c |s|^2`,
/// with `s = (sin psi1, sin psi2)` and `s^3` taken componentwise.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct HopfPlant {
    pub p: f64,
    pub q: f64,
    pub r: f64,
    pub kappa: f64,
    pub d: f64,
    pub c: f64,
}

impl Default for HopfPlant {
    fn default() -> Self {
        Self {
            p: 0.5,
            q: -1.0,
            r: 1.0,
            kappa: 1.0,
            d: 1.0,
            c: -0.5,
        }
    }
}

pub fn hopf_plant() -> HopfPlant {
    HopfPlant::default()
}

impl HopfPlant {
    pub const K: i32 = 1;
    pub const L: i32 = 4;

    /// Detuning at which the stable locked branch loses stability.
    pub fn hopf_zeta(&self) -> f64 {
        let x = -self.p / self.q;
        self.d * (1.0 - x * x).sqrt()
    }

    /// Detuning at which the locked branch folds.
    pub fn fold_zeta(&self) -> f64 {
        self.d
    }

    /// Stable-branch root of `zeta - d sin 4 phi` with `cos 4 phi > 0`.
    pub fn branch_phi(&self, zeta: f64) -> Option<f64> {
        let s = zeta / self.d;
        (s.abs() <= 1.0).then(|| s.asin() / 4.0)
    }

    /// Real part of the rotating pair on the stable branch.
    pub fn growth_rate(&self, zeta: f64) -> Option<f64> {
        let phi = self.branch_phi(zeta)?;
        Some(self.p + self.q * (4.0 * phi).cos())
    }

    pub fn w(&self) -> VectorPolynomial {
        let sin1 = TorusPolynomial::sin_mode(&[1, 0, 0], 1.0);
        let sin2 = TorusPolynomial::sin_mode(&[0, 1, 0], 1.0);
        let sin31 = TorusPolynomial::sin_mode(&[3, 0, 0], 1.0);
        let sin32 = TorusPolynomial::sin_mode(&[0, 3, 0], 1.0);
        let s = VectorPolynomial::from_components(&sin1, &sin2);
        // sin^3 x = (3 sin x - sin 3x) / 4
        let s3 = VectorPolynomial::from_components(
            &sin1.scale(0.75).sub(&sin31.scale(0.25)),
            &sin2.scale(0.75).sub(&sin32.scale(0.25)),
        );
        let mu = TorusPolynomial::constant(3, self.p).add(&TorusPolynomial::cos_mode(&[0, 0, 4], self.q));
        s.mul_scalar(&mu)
            .add(&s.apply_j().scale(self.r))
            .add(&s3.scale(-self.kappa))
    }

    pub fn u(&self) -> TorusPolynomial {
        // sin^2 x = (1 - cos 2x) / 2
        let s2 = TorusPolynomial::constant(3, 1.0)
            .sub(&TorusPolynomial::cos_mode(&[2, 0, 0], 0.5))
            .sub(&TorusPolynomial::cos_mode(&[0, 2, 0], 0.5));
        TorusPolynomial::sin_mode(&[0, 0, 4], -self.d).add(&s2.scale(self.c))
    }

    /// The `T^4` standard form whose average is this plant.
    pub fn form(&self) -> PolynomialNonIntForm {
        plant_rational(Self::K, Self::L, &self.w(), &self.u()).expect("hopf plant is symmetric")
    }

    /// Closed-form averaged field.
    pub fn averaged(&self) -> AnalyticRationalField<impl Fn(Vec2, f64) -> (Vec2, f64) + Sync + Copy> {
        let h = *self;
        AnalyticRationalField {
            k: Self::K,
            l: Self::L,
            f: move |psi: Vec2, phi: f64| {
                let s = Vec2::new(psi.x.sin(), psi.y.sin());
                let s3 = Vec2::new(s.x.powi(3), s.y.powi(3));
                let mu = h.p + h.q * (4.0 * phi).cos();
                let g1 = mu * s + h.r * j(s) - h.kappa * s3;
                let g2 = -h.d * (4.0 * phi).sin() + h.c * s.norm_squared();
                (g1, g2)
            },
        }
    }
}
