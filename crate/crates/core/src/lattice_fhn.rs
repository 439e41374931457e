//! Forward-Euler finite differences for FitzHugh–Nagumo with a square-lattice inhomogeneity.
//!
//! ```text
//! u_t = lap u + (u - u^3/3 - v) / tau + eps g1(x, y)
//! v_t = tau (u + beta - gamma v + eps g2(x, y))
//! ```
//!
//! on `[-L, L]^2` with homogeneous Neumann boundaries, where each `g_i` is
//! `A_i + B_i (cos(x/2) + cos(y/2)) + C_i (cos((3x - 2y)/2) + cos((2x + 3y)/2))`.
//!
//! Fields are stored row-major: sample `(i, j)` sits at `x = x_i`, `y = y_j`,
//! index `j * n + i`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::Vec2;
use crate::tip_track::{continue_path, find_tips, TipPath};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum FhnError {
    #[error("invalid kinetics: {0}")]
    Kinetics(String),
    #[error("invalid grid: {0}")]
    Grid(String),
    #[error("dt = {dt} exceeds the explicit stability bound dx^2/4 = {bound}")]
    Unstable { dt: f64, bound: f64 },
    #[error("non-finite value at index {index} (i = {i}, j = {j}) at t = {t}")]
    BlowUp { index: usize, i: usize, j: usize, t: f64 },
    #[error("state has {got} samples, grid expects {expected}")]
    Shape { got: usize, expected: usize },
    #[error("t_end = {t_end} precedes the initial time {t0}")]
    Time { t_end: f64, t0: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KineticParams {
    pub tau: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl KineticParams {
    pub fn new(tau: f64, beta: f64, gamma: f64) -> Result<Self, FhnError> {
        let p = Self { tau, beta, gamma };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), FhnError> {
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(FhnError::Kinetics(format!("tau must be positive, got {}", self.tau)));
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(FhnError::Kinetics(format!(
                "gamma must be non-negative, got {}",
                self.gamma
            )));
        }
        if !self.beta.is_finite() {
            return Err(FhnError::Kinetics("beta must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationSpec {
    #[serde(default)]
    pub epsilon: f64,
    #[serde(default)]
    pub a1: f64,
    #[serde(default)]
    pub a2: f64,
    #[serde(default)]
    pub b1: f64,
    #[serde(default)]
    pub b2: f64,
    #[serde(default)]
    pub c1: f64,
    #[serde(default)]
    pub c2: f64,
}

impl PerturbationSpec {
    pub fn homogeneous() -> Self {
        Self::default()
    }

    pub fn validate(&self) -> Result<(), FhnError> {
        let all = [self.epsilon, self.a1, self.a2, self.b1, self.b2, self.c1, self.c2];
        if !all.iter().all(|v| v.is_finite()) || self.epsilon < 0.0 {
            return Err(FhnError::Kinetics(
                "perturbation coefficients must be finite with epsilon >= 0".into(),
            ));
        }
        Ok(())
    }

    /// `(g1, g2)` at `(x, y)`, without the `epsilon` factor.
    pub fn eval(&self, x: f64, y: f64) -> (f64, f64) {
        let b = (x / 2.0).cos() + (y / 2.0).cos();
        let c = ((3.0 * x - 2.0 * y) / 2.0).cos() + ((2.0 * x + 3.0 * y) / 2.0).cos();
        (self.a1 + self.b1 * b + self.c1 * c, self.a2 + self.b2 * b + self.c2 * c)
    }
}

/// Free-function form of [`PerturbationSpec::eval`].
pub fn eval_perturbation(spec: &PerturbationSpec, x: f64, y: f64) -> (f64, f64) {
    spec.eval(x, y)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    n: usize,
    half_width: f64,
    dt: f64,
}

impl GridSpec {
    pub const DEFAULT_HALF_WIDTH: f64 = 10.0 * PI;

    /// `dt = None` selects `0.9 dx^2 / 4`.
    pub fn new(n: usize, half_width: f64, dt: Option<f64>) -> Result<Self, FhnError> {
        if n < 3 {
            return Err(FhnError::Grid(format!("need n >= 3, got {n}")));
        }
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(FhnError::Grid(format!("half_width must be positive, got {half_width}")));
        }
        let dx = 2.0 * half_width / (n - 1) as f64;
        let bound = dx * dx / 4.0;
        let dt = dt.unwrap_or(0.9 * bound);
        if dt.is_nan() || dt <= 0.0 {
            return Err(FhnError::Grid(format!("dt must be positive, got {dt}")));
        }
        if dt > bound {
            return Err(FhnError::Unstable { dt, bound });
        }
        Ok(Self { n, half_width, dt })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.half_width / (self.n - 1) as f64
    }

    pub fn coord(&self, i: usize) -> f64 {
        -self.half_width + i as f64 * self.dx()
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, p: Vec2) -> bool {
        p.x.abs() <= self.half_width && p.y.abs() <= self.half_width
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FieldState {
    pub n: usize,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub t: f64,
}

impl FieldState {
    pub fn uniform(n: usize, u: f64, v: f64) -> Self {
        Self {
            n,
            u: vec![u; n * n],
            v: vec![v; n * n],
            t: 0.0,
        }
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.n + i
    }

    /// Quarter turn about the grid centre: `(x, y) -> (-y, x)`.
    pub fn rotate_quarter(&self) -> Self {
        let n = self.n;
        let mut out = self.clone();
        for j in 0..n {
            for i in 0..n {
                // Sample at (x_i, y_j) moves to (-y_j, x_i), i.e. column n-1-j, row i.
                let dst = i * n + (n - 1 - j);
                out.u[dst] = self.u[j * n + i];
                out.v[dst] = self.v[j * n + i];
            }
        }
        out
    }

    pub fn check_shape(&self, grid: &GridSpec) -> Result<(), FhnError> {
        if self.n != grid.n || self.u.len() != grid.len() || self.v.len() != grid.len() {
            return Err(FhnError::Shape {
                got: self.u.len().min(self.v.len()),
                expected: grid.len(),
            });
        }
        Ok(())
    }
}

/// Uniform rest state `(u*, v*)` of the homogeneous kinetics.
pub fn rest_state(params: &KineticParams) -> Result<(f64, f64), FhnError> {
    params.validate()?;
    let (b, g) = (params.beta, params.gamma);
    if g == 0.0 {
        let u = -b;
        return Ok((u, u - u * u * u / 3.0));
    }
    let f = |u: f64| u - u * u * u / 3.0 - (u + b) / g;
    let mut lo = -(3.0 + b.abs() + 1.0 / g);
    let mut hi = -lo;
    let (mut flo, fhi) = (f(lo), f(hi));
    if flo * fhi > 0.0 {
        return Err(FhnError::Kinetics("rest state not bracketed".into()));
    }
    for _ in 0..200 {
        let m = 0.5 * (lo + hi);
        let fm = f(m);
        if fm == 0.0 || hi - lo < 1e-15 {
            lo = m;
            hi = m;
            break;
        }
        if flo * fm < 0.0 {
            hi = m;
        } else {
            lo = m;
            flo = fm;
        }
    }
    let mut u = 0.5 * (lo + hi);
    for _ in 0..3 {
        let d = 1.0 - u * u - 1.0 / g;
        if d != 0.0 {
            u -= f(u) / d;
        }
    }
    Ok((u, (u + b) / g))
}

/// Crossed-gradient seed: `u = u* + 2` for `y > 0`, `v = v* + 1` for `x < 0`.
pub fn make_spiral_initial(grid: &GridSpec, params: &KineticParams) -> Result<FieldState, FhnError> {
    let (us, vs) = rest_state(params)?;
    let n = grid.n;
    let mut st = FieldState::uniform(n, us, vs);
    for j in 0..n {
        let y = grid.coord(j);
        for i in 0..n {
            let x = grid.coord(i);
            let k = j * n + i;
            if y > 0.0 {
                st.u[k] = us + 2.0;
            }
            if x < 0.0 {
                st.v[k] = vs + 1.0;
            }
        }
    }
    Ok(st)
}

/// Precomputed stepper for fixed kinetics, perturbation and grid.
#[derive(Clone, Debug)]
pub struct Stepper {
    grid: GridSpec,
    params: KineticParams,
    eps_g1: Vec<f64>,
    eps_g2: Vec<f64>,
    scratch_u: Vec<f64>,
    scratch_v: Vec<f64>,
}

impl Stepper {
    pub fn new(grid: GridSpec, params: KineticParams, pert: &PerturbationSpec) -> Result<Self, FhnError> {
        params.validate()?;
        pert.validate()?;
        let n = grid.n;
        let mut eps_g1 = vec![0.0; n * n];
        let mut eps_g2 = vec![0.0; n * n];
        if pert.epsilon != 0.0 {
            for j in 0..n {
                for i in 0..n {
                    let (g1, g2) = pert.eval(grid.coord(i), grid.coord(j));
                    eps_g1[j * n + i] = pert.epsilon * g1;
                    eps_g2[j * n + i] = pert.epsilon * g2;
                }
            }
        }
        Ok(Self {
            grid,
            params,
            eps_g1,
            eps_g2,
            scratch_u: vec![0.0; n * n],
            scratch_v: vec![0.0; n * n],
        })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// Advances `state` by one step in place.
    pub fn step(&mut self, state: &mut FieldState) -> Result<(), FhnError> {
        state.check_shape(&self.grid)?;
        let n = self.grid.n;
        let dt = self.grid.dt;
        let inv_dx2 = 1.0 / (self.grid.dx() * self.grid.dx());
        let KineticParams { tau, beta, gamma } = self.params;
        let inv_tau = 1.0 / tau;
        let (u, v) = (&state.u, &state.v);
        let (g1, g2) = (&self.eps_g1, &self.eps_g2);
        self.scratch_u
            .par_chunks_mut(n)
            .zip(self.scratch_v.par_chunks_mut(n))
            .enumerate()
            .for_each(|(j, (ur, vr))| {
                let jm = if j == 0 { 1 } else { j - 1 };
                let jp = if j == n - 1 { n - 2 } else { j + 1 };
                for i in 0..n {
                    let im = if i == 0 { 1 } else { i - 1 };
                    let ip = if i == n - 1 { n - 2 } else { i + 1 };
                    let k = j * n + i;
                    let c = u[k];
                    let lap = ((u[j * n + im] + u[j * n + ip]) + (u[jm * n + i] + u[jp * n + i]) - 4.0 * c) * inv_dx2;
                    let vk = v[k];
                    ur[i] = c + dt * (lap + (c - c * c * c / 3.0 - vk) * inv_tau + g1[k]);
                    vr[i] = vk + dt * tau * (c + beta - gamma * vk + g2[k]);
                }
            });
        std::mem::swap(&mut state.u, &mut self.scratch_u);
        std::mem::swap(&mut state.v, &mut self.scratch_v);
        state.t += dt;
        if let Some(k) = state
            .u
            .iter()
            .zip(&state.v)
            .position(|(a, b)| !a.is_finite() || !b.is_finite())
        {
            return Err(FhnError::BlowUp {
                index: k,
                i: k % n,
                j: k / n,
                t: state.t,
            });
        }
        Ok(())
    }
}

/// One forward-Euler step.
pub fn step(
    state: &FieldState,
    params: &KineticParams,
    pert: &PerturbationSpec,
    grid: &GridSpec,
) -> Result<FieldState, FhnError> {
    let mut s = state.clone();
    Stepper::new(*grid, *params, pert)?.step(&mut s)?;
    Ok(s)
}

/// Steps from `initial` to `t_end`, tracking the tip every `sample_every` steps.
pub fn run(
    initial: &FieldState,
    params: &KineticParams,
    pert: &PerturbationSpec,
    grid: &GridSpec,
    t_end: f64,
    sample_every: usize,
    tip_tracking: bool,
) -> Result<(TipPath, FieldState), FhnError> {
    run_with_progress(initial, params, pert, grid, t_end, sample_every, tip_tracking, |_| {})
}

/// [`run`] with a callback receiving the simulation time at each sample.
#[allow(clippy::too_many_arguments)]
pub fn run_with_progress(
    initial: &FieldState,
    params: &KineticParams,
    pert: &PerturbationSpec,
    grid: &GridSpec,
    t_end: f64,
    sample_every: usize,
    tip_tracking: bool,
    mut progress: impl FnMut(f64),
) -> Result<(TipPath, FieldState), FhnError> {
    initial.check_shape(grid)?;
    if t_end < initial.t {
        return Err(FhnError::Time { t_end, t0: initial.t });
    }
    let mut stepper = Stepper::new(*grid, *params, pert)?;
    let mut state = initial.clone();
    let mut path = TipPath::default();
    let steps = ((t_end - initial.t) / grid.dt - 1e-9).ceil().max(0.0) as usize;
    let every = sample_every.max(1);
    let max_jump = 4.0 * grid.dx();
    for s in 1..=steps {
        stepper.step(&mut state)?;
        if s % every == 0 {
            if tip_tracking {
                let tips = find_tips(&state, grid);
                continue_path(&mut path, &tips, state.t, max_jump);
            }
            progress(state.t);
        }
    }
    Ok((path, state))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn fig2() -> KineticParams {
        KineticParams::new(0.1858, 0.755, 0.5).unwrap()
    }

    fn spec1() -> PerturbationSpec {
        PerturbationSpec {
            epsilon: 0.01,
            a1: -0.1997,
            a2: 0.3,
            b1: 0.001,
            b2: -0.2,
            c1: -1.0,
            c2: 0.7,
        }
    }

    #[test]
    fn perturbation_at_origin() {
        let (g1, _) = spec1().eval(0.0, 0.0);
        assert!((g1 - (-2.1977)).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn perturbation_lattice_symmetry(x in -50.0..50.0f64, y in -50.0..50.0f64, m in -3i32..3, k in -3i32..3) {
            let s = spec1();
            let (a1, a2) = s.eval(x, y);
            let (b1, b2) = s.eval(x + 4.0 * PI * m as f64, y + 4.0 * PI * k as f64);
            let (c1, c2) = s.eval(-y, x);
            prop_assert!((a1 - b1).abs() < 1e-12 && (a2 - b2).abs() < 1e-12);
            prop_assert!((a1 - c1).abs() < 1e-12 && (a2 - c2).abs() < 1e-12);
        }

        #[test]
        fn rest_state_residual(beta in -1.0..1.0f64, gamma in 0.05..2.0f64) {
            let p = KineticParams::new(0.2, beta, gamma).unwrap();
            let (u, v) = rest_state(&p).unwrap();
            prop_assert!((u - u * u * u / 3.0 - v).abs() < 1e-12);
            prop_assert!((u + beta - gamma * v).abs() < 1e-12);
        }
    }

    #[test]
    fn rest_state_cases() {
        let (u, v) = rest_state(&KineticParams::new(1.0, 0.0, 1.0).unwrap()).unwrap();
        assert!(u.abs() < 1e-14 && v.abs() < 1e-14);
        let (u, v) = rest_state(&KineticParams::new(1.0, 0.3, 0.0).unwrap()).unwrap();
        assert_eq!(u, -0.3);
        assert!((v - (-0.3 + 0.027 / 3.0)).abs() < 1e-15);
        // Independent bisection on the cubic for beta = 0.755, gamma = 0.5.
        let f = |u: f64| u - u * u * u / 3.0 - (u + 0.755) / 0.5;
        let (mut a, mut b) = (-3.0, 0.0);
        for _ in 0..100 {
            let m = 0.5 * (a + b);
            if f(a) * f(m) <= 0.0 {
                b = m;
            } else {
                a = m;
            }
        }
        let (u, _) = rest_state(&fig2()).unwrap();
        assert!((u - a).abs() < 1e-12);
    }

    #[test]
    fn grid_guard() {
        assert!(GridSpec::new(2, 1.0, None).is_err());
        let g = GridSpec::new(101, 10.0 * PI, None).unwrap();
        let bound = g.dx() * g.dx() / 4.0;
        assert!((g.dt() - 0.9 * bound).abs() < 1e-15);
        assert!(matches!(
            GridSpec::new(101, 10.0 * PI, Some(1.01 * bound)),
            Err(FhnError::Unstable { .. })
        ));
    }

    #[test]
    fn initial_seed() {
        let grid = GridSpec::new(21, 2.0, None).unwrap();
        let p = fig2();
        let (us, vs) = rest_state(&p).unwrap();
        let st = make_spiral_initial(&grid, &p).unwrap();
        // (-1, -1) and (1, 1) are grid nodes i = 5 and 15.
        assert_eq!(st.u[st.idx(5, 5)], us);
        assert_eq!(st.v[st.idx(5, 5)], vs + 1.0);
        assert_eq!(st.u[st.idx(15, 15)], us + 2.0);
        assert_eq!(st.v[st.idx(15, 15)], vs);
        let mean = st.u.iter().sum::<f64>() / st.u.len() as f64;
        let frac = (0..21).filter(|&j| grid.coord(j) > 0.0).count() as f64 / 21.0;
        assert!((mean - (us + 2.0 * frac)).abs() < 1e-12);
    }

    #[test]
    fn rest_state_is_fixed() {
        let grid = GridSpec::new(11, 5.0, None).unwrap();
        let p = fig2();
        let (us, vs) = rest_state(&p).unwrap();
        let st = FieldState::uniform(11, us, vs);
        let mut s = st.clone();
        let mut stp = Stepper::new(grid, p, &PerturbationSpec::homogeneous()).unwrap();
        for _ in 0..10 {
            let before = s.clone();
            stp.step(&mut s).unwrap();
            for k in 0..s.u.len() {
                assert!((s.u[k] - before.u[k]).abs() < 1e-14);
                assert!((s.v[k] - before.v[k]).abs() < 1e-14);
            }
        }
        assert!((s.t - 10.0 * grid.dt()).abs() < 1e-15);
    }

    #[test]
    fn single_point_stencil() {
        let grid = GridSpec::new(5, 2.0, None).unwrap();
        let p = KineticParams::new(1.0, 0.0, 1.0).unwrap();
        let mut st = FieldState::uniform(5, 0.0, 0.0);
        let c = st.idx(2, 2);
        st.u[c] = 1.0;
        let out = step(&st, &p, &PerturbationSpec::homogeneous(), &grid).unwrap();
        let dt = grid.dt();
        let r = dt / (grid.dx() * grid.dx());
        let kin = 1.0 - 1.0 / 3.0;
        assert!((out.u[c] - (1.0 - 4.0 * r + dt * kin)).abs() < 1e-15);
        for (i, j) in [(1, 2), (3, 2), (2, 1), (2, 3)] {
            assert!((out.u[out.idx(i, j)] - r).abs() < 1e-15);
        }
        assert_eq!(out.u[out.idx(1, 1)], 0.0);
        assert!((out.v[c] - dt).abs() < 1e-15);
    }

    #[test]
    fn quarter_turn_commutes_bitwise() {
        let grid = GridSpec::new(24, 6.0, None).unwrap();
        let p = fig2();
        let mut st = make_spiral_initial(&grid, &p).unwrap();
        // Break any accidental symmetry of the seed.
        let k = st.idx(3, 7);
        st.u[k] += 0.37;
        let mut stp = Stepper::new(grid, p, &PerturbationSpec::homogeneous()).unwrap();
        let mut a = st.clone();
        let mut b = st.rotate_quarter();
        for _ in 0..50 {
            stp.step(&mut a).unwrap();
            stp.step(&mut b).unwrap();
        }
        let ra = a.rotate_quarter();
        assert!(ra.u.iter().zip(&b.u).all(|(x, y)| x.to_bits() == y.to_bits()));
        assert!(ra.v.iter().zip(&b.v).all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    #[test]
    fn four_quarter_turns_are_identity() {
        let mut st = FieldState::uniform(7, 0.0, 0.0);
        for k in 0..49 {
            st.u[k] = k as f64;
        }
        let r = st.rotate_quarter().rotate_quarter().rotate_quarter().rotate_quarter();
        assert_eq!(r, st);
        // Sample at (x_0, y_0) = (-1, -1) moves to (1, -1) = (x_6, y_0).
        let q = st.rotate_quarter();
        assert_eq!(q.u[q.idx(6, 0)], st.u[st.idx(0, 0)]);
    }

    #[test]
    fn blow_up_is_reported() {
        let grid = GridSpec::new(5, 2.0, None).unwrap();
        let p = KineticParams::new(1.0, 0.0, 1.0).unwrap();
        let mut st = FieldState::uniform(5, 0.0, 0.0);
        st.u[7] = f64::NAN;
        let e = step(&st, &p, &PerturbationSpec::homogeneous(), &grid).unwrap_err();
        assert!(matches!(e, FhnError::BlowUp { .. }));
    }

    #[test]
    fn zero_length_run() {
        let grid = GridSpec::new(11, 5.0, None).unwrap();
        let p = fig2();
        let st = make_spiral_initial(&grid, &p).unwrap();
        let (path, fin) = run(&st, &p, &PerturbationSpec::homogeneous(), &grid, 0.0, 1, true).unwrap();
        assert!(path.is_empty());
        assert_eq!(fin, st);
    }
}
