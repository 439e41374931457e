//! Averaged vector fields of the standard forms and the invariant objects they predict.
//!
//! Irrational `omega` averages `R_phi G1` over both angles and yields a planar,
//! `Z4`-equivariant field. Rational `omega = k/l` averages along the resonant
//! direction `phi + k theta / l` over `2 pi l` and yields a field on `(psi, phi)`.

mod continuation;
mod equilibria;
mod hopf;
mod locking;
mod mtw;
mod plant;
mod torus;

use std::f64::consts::{FRAC_PI_2, TAU};

use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use serde::Serialize;

use crate::center_bundle::NonIntStandardForm;
use crate::geometry::{j, minus_j, rotate, Vec2};

pub use continuation::{
    classify_boundary, continue_branch, detuning_scan, BoundaryKind, BranchPoint, ContinuationOptions, ScanBoundary,
    WindowReport,
};
pub use equilibria::{
    eigenvalues, find_equilibria, jacobian, linearize, newton, seed_grid, EquilibriumRecord, EquilibriumSearch,
    NewtonOptions, NewtonResult, SymmetryAction,
};
pub use hopf::{hopf_amplitude_scan, reconstruct_fattened_path, HopfOptions, HopfSample, HopfScan};
pub use locking::{spatio_temporal_symmetry, verify_locking, LockingOptions, LockingVerdict, SpatioTemporalReport};
pub use mtw::{modulated_travelling_wave_check, orientation_average, MtwOptions, MtwVerdict, OrientationRoot};
pub use plant::{hopf_plant, plant_rational, HopfPlant, PlantError};
pub use torus::{fit_torus, verify_torus_attractor, TorusFit, TorusOptions, TorusReport};

/// Quadrature nodes per angle.
pub const NODES_PER_ANGLE: usize = 256;

/// A planar vector field `R^2 -> R^2`.
pub trait PlanarField: Sync {
    fn eval(&self, psi: Vec2) -> Vec2;

    fn state_fn(&self) -> impl Fn(&[f64; 2]) -> [f64; 2] + Sync + '_ {
        move |x| {
            let v = self.eval(Vec2::new(x[0], x[1]));
            [v.x, v.y]
        }
    }
}

impl<F: Fn(Vec2) -> Vec2 + Sync> PlanarField for F {
    fn eval(&self, psi: Vec2) -> Vec2 {
        self(psi)
    }
}

/// An averaged field on `(psi, phi)` for `omega = k / l`.
pub trait RationalField: Sync {
    fn ratio(&self) -> (i32, i32);
    fn eval(&self, psi: Vec2, phi: f64) -> (Vec2, f64);

    /// `(G1, G2 + zeta)` as a function of `[psi1, psi2, phi]`.
    fn state_fn(&self, zeta: f64) -> impl Fn(&[f64; 3]) -> [f64; 3] + Sync + '_ {
        move |x| {
            let (a, b) = self.eval(Vec2::new(x[0], x[1]), x[2]);
            [a.x, a.y, b + zeta]
        }
    }
}

impl<T: RationalField + ?Sized> RationalField for &T {
    fn ratio(&self) -> (i32, i32) {
        (**self).ratio()
    }

    fn eval(&self, psi: Vec2, phi: f64) -> (Vec2, f64) {
        (**self).eval(psi, phi)
    }
}

/// A rational field given in closed form.
pub struct AnalyticRationalField<F> {
    pub k: i32,
    pub l: i32,
    pub f: F,
}

impl<F: Fn(Vec2, f64) -> (Vec2, f64) + Sync> RationalField for AnalyticRationalField<F> {
    fn ratio(&self) -> (i32, i32) {
        (self.k, self.l)
    }

    fn eval(&self, psi: Vec2, phi: f64) -> (Vec2, f64) {
        (self.f)(psi, phi)
    }
}

/// `G(psi) = (2 pi)^-2 int int R_phi G1(psi, phi, theta) dphi dtheta`.
#[derive(Clone, Debug)]
pub struct AveragedPlanarField<S> {
    std: S,
    nodes: usize,
}

pub fn average_irrational<S: NonIntStandardForm>(std: S) -> AveragedPlanarField<S> {
    AveragedPlanarField::with_nodes(std, NODES_PER_ANGLE)
}

impl<S: NonIntStandardForm> AveragedPlanarField<S> {
    pub fn with_nodes(std: S, nodes: usize) -> Self {
        Self { std, nodes }
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn standard_form(&self) -> &S {
        &self.std
    }
}

impl<S: NonIntStandardForm> PlanarField for AveragedPlanarField<S> {
    fn eval(&self, psi: Vec2) -> Vec2 {
        let n = self.nodes;
        let mut acc = Vec2::zeros();
        for a in 0..n {
            let phi = TAU * a as f64 / n as f64;
            let mut row = Vec2::zeros();
            for b in 0..n {
                let th = TAU * b as f64 / n as f64;
                row += self.std.g1(psi, phi, th);
            }
            acc += rotate(phi, row);
        }
        acc / (n * n) as f64
    }
}

/// Averages of the rational form over `theta in [0, 2 pi l)`.
#[derive(Clone, Debug)]
pub struct AveragedRationalSystem<S> {
    std: S,
    k: i32,
    l: i32,
    nodes: usize,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum AveragingError {
    #[error("k = {k} and l = {l} are not coprime with l >= 2")]
    InvalidRatio { k: i32, l: i32 },
    #[error("standard form has omega = {omega}, expected {k}/{l}")]
    OmegaMismatch { omega: f64, k: i32, l: i32 },
}

fn gcd(a: i32, b: i32) -> i32 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Builds the rational averages with `l * 256` quadrature nodes.
pub fn average_rational<S: NonIntStandardForm>(
    std: S,
    k: i32,
    l: i32,
) -> Result<AveragedRationalSystem<S>, AveragingError> {
    AveragedRationalSystem::with_nodes(std, k, l, l.max(1) as usize * NODES_PER_ANGLE)
}

impl<S: NonIntStandardForm> AveragedRationalSystem<S> {
    pub fn with_nodes(std: S, k: i32, l: i32, nodes: usize) -> Result<Self, AveragingError> {
        if l < 2 || gcd(k, l) != 1 {
            return Err(AveragingError::InvalidRatio { k, l });
        }
        let omega = std.omega();
        if (omega - k as f64 / l as f64).abs() > 1e-12 {
            return Err(AveragingError::OmegaMismatch { omega, k, l });
        }
        Ok(Self { std, k, l, nodes })
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn standard_form(&self) -> &S {
        &self.std
    }
}

impl<S: NonIntStandardForm> RationalField for AveragedRationalSystem<S> {
    fn ratio(&self) -> (i32, i32) {
        (self.k, self.l)
    }

    fn eval(&self, psi: Vec2, phi: f64) -> (Vec2, f64) {
        let n = self.nodes;
        let w = self.k as f64 / self.l as f64;
        let span = TAU * self.l as f64;
        let mut g1 = Vec2::zeros();
        let mut g2 = 0.0;
        for i in 0..n {
            let th = span * i as f64 / n as f64;
            let shift = w * th;
            g1 += rotate(shift, self.std.g1(psi, phi + shift, th));
            g2 += self.std.g2(psi, phi + shift, th);
        }
        (rotate(phi, g1) / n as f64, g2 / n as f64)
    }
}

/// Largest violation of `G(J psi) = J G(psi)` over `samples` random points.
pub fn planar_equivariance_defect<F: PlanarField>(field: &F, samples: usize, radius: f64, seed: u64) -> f64 {
    let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
    let pts: Vec<Vec2> = (0..samples)
        .map(|_| Vec2::new(rng.gen_range(-radius..radius), rng.gen_range(-radius..radius)))
        .collect();
    pts.par_iter()
        .map(|&p| {
            let a = (field.eval(j(p)) - j(field.eval(p))).norm();
            let b = (field.eval(minus_j(p)) - minus_j(field.eval(p))).norm();
            a.max(b)
        })
        .reduce(|| 0.0, f64::max)
}

/// Maximum violations of the averaged-field identities.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SymmetryReport {
    pub k: i32,
    pub l: i32,
    pub samples: usize,
    /// `G1(-J psi, phi + pi/2) = -J G1` and `G2(-J psi, phi + pi/2) = G2`.
    pub lattice_g1: f64,
    pub lattice_g2: f64,
    /// `G1(J psi, phi) = J G1`, `G2(J psi, phi) = G2`; only when `l = 0 mod 4`.
    pub quarter_turn: Option<(f64, f64)>,
    /// `G1(-psi, phi) = -G1`, `G2(-psi, phi) = G2`; only when `l` is even.
    pub half_turn: Option<(f64, f64)>,
    /// `sup |G1(0, phi)|`; only when `l` is even.
    pub origin: Option<f64>,
}

impl SymmetryReport {
    /// Largest violation among the applicable identities.
    pub fn max_violation(&self) -> f64 {
        let mut m = self.lattice_g1.max(self.lattice_g2);
        if let Some((a, b)) = self.quarter_turn {
            m = m.max(a).max(b);
        }
        if let Some((a, b)) = self.half_turn {
            m = m.max(a).max(b);
        }
        if let Some(o) = self.origin {
            m = m.max(o);
        }
        m
    }
}

/// Samples the symmetry identities of a rational averaged field.
pub fn check_symmetries<F: RationalField>(field: &F, samples: usize, seed: u64) -> SymmetryReport {
    let (k, l) = field.ratio();
    let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
    let pts: Vec<(Vec2, f64)> = (0..samples)
        .map(|_| {
            (
                Vec2::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)),
                rng.gen_range(0.0..TAU),
            )
        })
        .collect();
    let quarter = l % 4 == 0;
    let half = l % 2 == 0;
    let rows: Vec<[f64; 7]> = pts
        .par_iter()
        .map(|&(p, phi)| {
            let (a1, a2) = field.eval(p, phi);
            let (b1, b2) = field.eval(minus_j(p), phi + FRAC_PI_2);
            let mut r = [0.0; 7];
            r[0] = (b1 - minus_j(a1)).norm();
            r[1] = (b2 - a2).abs();
            if quarter {
                let (c1, c2) = field.eval(j(p), phi);
                r[2] = (c1 - j(a1)).norm();
                r[3] = (c2 - a2).abs();
            }
            if half {
                let (d1, d2) = field.eval(-p, phi);
                r[4] = (d1 + a1).norm();
                r[5] = (d2 - a2).abs();
                r[6] = field.eval(Vec2::zeros(), phi).0.norm();
            }
            r
        })
        .collect();
    let col = |c: usize| rows.iter().map(|r| r[c]).fold(0.0, f64::max);
    SymmetryReport {
        k,
        l,
        samples,
        lattice_g1: col(0),
        lattice_g2: col(1),
        quarter_turn: quarter.then(|| (col(2), col(3))),
        half_turn: half.then(|| (col(4), col(5))),
        origin: half.then(|| col(6)),
    }
}

/// Conjugate action `(psi, phi) -> (-J psi, phi + pi/2)` on `[psi1, psi2, phi]`.
pub fn rational_action(x: &[f64; 3]) -> [f64; 3] {
    [-x[1], x[0], x[2] + FRAC_PI_2]
}

/// Planar conjugate action `psi -> J psi`.
pub fn planar_action(x: &[f64; 2]) -> [f64; 2] {
    [x[1], -x[0]]
}
