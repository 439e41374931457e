//! Fixed-step classical Runge–Kutta integration for small autonomous systems.

/// Dense output of a fixed-step integration.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory<const N: usize> {
    pub t: Vec<f64>,
    pub y: Vec<[f64; N]>,
}

impl<const N: usize> Trajectory<N> {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn last(&self) -> Option<(f64, [f64; N])> {
        Some((*self.t.last()?, *self.y.last()?))
    }
}

#[inline]
fn axpy<const N: usize>(y: &[f64; N], h: f64, k: &[f64; N]) -> [f64; N] {
    let mut out = *y;
    for i in 0..N {
        out[i] += h * k[i];
    }
    out
}

/// One RK4 step of size `h`.
#[inline]
pub fn rk4_step<const N: usize, F>(f: &F, y: &[f64; N], h: f64) -> [f64; N]
where
    F: Fn(&[f64; N]) -> [f64; N],
{
    let k1 = f(y);
    let k2 = f(&axpy(y, 0.5 * h, &k1));
    let k3 = f(&axpy(y, 0.5 * h, &k2));
    let k4 = f(&axpy(y, h, &k3));
    let mut out = *y;
    for i in 0..N {
        out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

/// Integrates `y' = f(y)` from `t0` over `[t0, t0 + duration]`.
///
/// The step is adjusted downward so that an integer number of steps lands on
/// the end time. Every `sample_every`-th state is recorded, including both ends.
pub fn integrate<const N: usize, F>(
    f: F,
    y0: [f64; N],
    t0: f64,
    duration: f64,
    dt: f64,
    sample_every: usize,
) -> Trajectory<N>
where
    F: Fn(&[f64; N]) -> [f64; N],
{
    assert!(dt > 0.0, "dt must be positive");
    let sample_every = sample_every.max(1);
    let steps = (duration / dt).ceil().max(0.0) as usize;
    let h = if steps == 0 { 0.0 } else { duration / steps as f64 };
    let mut traj = Trajectory {
        t: vec![t0],
        y: vec![y0],
    };
    let mut y = y0;
    for s in 1..=steps {
        y = rk4_step(&f, &y, h);
        if s % sample_every == 0 || s == steps {
            traj.t.push(t0 + s as f64 * h);
            traj.y.push(y);
        }
    }
    traj
}

/// Final state only; avoids storing the trajectory.
pub fn integrate_final<const N: usize, F>(f: F, y0: [f64; N], duration: f64, dt: f64) -> [f64; N]
where
    F: Fn(&[f64; N]) -> [f64; N],
{
    let steps = (duration / dt).ceil().max(0.0) as usize;
    if steps == 0 {
        return y0;
    }
    let h = duration / steps as f64;
    let mut y = y0;
    for _ in 0..steps {
        y = rk4_step(&f, &y, h);
    }
    y
}
