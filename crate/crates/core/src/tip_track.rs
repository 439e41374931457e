//! Spiral tip as the joint zero of the bilinear interpolants of `u` and `v`.

use serde::{Deserialize, Serialize};

use crate::geometry::Vec2;
use crate::lattice_fhn::{FieldState, GridSpec};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TipSample {
    pub t: f64,
    pub x: f64,
    pub y: f64,
}

impl TipSample {
    pub fn point(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }
}

/// Interval during which no admissible tip was found.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gap {
    /// Index of the first sample after the gap.
    pub index: usize,
    pub t_lost: f64,
    pub t_found: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TipPath {
    pub samples: Vec<TipSample>,
    pub gaps: Vec<Gap>,
    /// Free-form provenance (preset, grid, kinetics).
    pub provenance: Vec<(String, String)>,
}

impl TipPath {
    pub fn from_points(t: &[f64], p: &[Vec2]) -> Self {
        Self {
            samples: t.iter().zip(p).map(|(&t, q)| TipSample { t, x: q.x, y: q.y }).collect(),
            ..Self::default()
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn push(&mut self, t: f64, p: Vec2) {
        self.samples.push(TipSample { t, x: p.x, y: p.y });
    }

    pub fn points(&self) -> Vec<Vec2> {
        self.samples.iter().map(TipSample::point).collect()
    }

    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    pub fn last(&self) -> Option<&TipSample> {
        self.samples.last()
    }

    /// Index ranges of the continuous pieces between gaps.
    pub fn segments(&self) -> Vec<std::ops::Range<usize>> {
        let mut cuts: Vec<usize> = self.gaps.iter().map(|g| g.index).filter(|&i| i > 0).collect();
        cuts.dedup();
        let mut out = Vec::new();
        let mut start = 0;
        for c in cuts {
            if c > start && c <= self.len() {
                out.push(start..c);
                start = c;
            }
        }
        if start < self.len() {
            out.push(start..self.len());
        }
        out
    }

    /// Samples from index `start` on, with gaps re-indexed.
    pub fn tail(&self, start: usize) -> Self {
        let start = start.min(self.len());
        Self {
            samples: self.samples[start..].to_vec(),
            gaps: self
                .gaps
                .iter()
                .filter(|g| g.index > start)
                .map(|g| Gap {
                    index: g.index - start,
                    ..*g
                })
                .collect(),
            provenance: self.provenance.clone(),
        }
    }

    fn gap_open(&self) -> bool {
        self.gaps.last().is_some_and(|g| g.t_found.is_none())
    }
}

const NEWTON_ITERS: usize = 20;
const NEWTON_TOL: f64 = 1e-12;

/// Joint zero in `[0, 1]^2` of two bilinear interpolants given by corner values `(00, 10, 01, 11)`.
fn bilinear_root(u: [f64; 4], v: [f64; 4]) -> Option<(f64, f64)> {
    let eval = |c: &[f64; 4], s: f64, t: f64| {
        let f = c[0] * (1.0 - s) * (1.0 - t) + c[1] * s * (1.0 - t) + c[2] * (1.0 - s) * t + c[3] * s * t;
        let fs = (c[1] - c[0]) * (1.0 - t) + (c[3] - c[2]) * t;
        let ft = (c[2] - c[0]) * (1.0 - s) + (c[3] - c[1]) * s;
        (f, fs, ft)
    };
    let scale = u.iter().chain(&v).map(|x| x.abs()).fold(0.0, f64::max).max(1e-300);
    let (mut s, mut t) = (0.5, 0.5);
    let mut converged = false;
    for _ in 0..NEWTON_ITERS {
        let (fu, us, ut) = eval(&u, s, t);
        let (fv, vs, vt) = eval(&v, s, t);
        let det = us * vt - ut * vs;
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        let ds = (fu * vt - ut * fv) / det;
        let dt = (us * fv - fu * vs) / det;
        s -= ds;
        t -= dt;
        if ds.abs().max(dt.abs()) < NEWTON_TOL {
            converged = true;
            break;
        }
    }
    if !converged {
        let (fu, _, _) = eval(&u, s, t);
        let (fv, _, _) = eval(&v, s, t);
        if fu.abs().max(fv.abs()) > 1e-10 * scale {
            return None;
        }
    }
    let tol = 1e-9;
    (s >= -tol && s <= 1.0 + tol && t >= -tol && t <= 1.0 + tol).then_some((s.clamp(0.0, 1.0), t.clamp(0.0, 1.0)))
}

fn changes_sign(c: &[f64; 4]) -> bool {
    let lo = c.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = c.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    lo <= 0.0 && hi >= 0.0 && (lo < 0.0 || hi > 0.0)
}

/// All intersections of the `u = 0` and `v = 0` curves of the bilinear interpolants.
pub fn find_tips(state: &FieldState, grid: &GridSpec) -> Vec<Vec2> {
    let n = state.n;
    let dx = grid.dx();
    let mut tips: Vec<Vec2> = Vec::new();
    for j in 0..n - 1 {
        for i in 0..n - 1 {
            let k = [
                state.idx(i, j),
                state.idx(i + 1, j),
                state.idx(i, j + 1),
                state.idx(i + 1, j + 1),
            ];
            let u = k.map(|k| state.u[k]);
            if !changes_sign(&u) {
                continue;
            }
            let v = k.map(|k| state.v[k]);
            if !changes_sign(&v) {
                continue;
            }
            if let Some((s, t)) = bilinear_root(u, v) {
                let p = Vec2::new(grid.coord(i) + s * dx, grid.coord(j) + t * dx);
                if tips.iter().all(|q| (q - p).norm() > 1e-9 * dx) {
                    tips.push(p);
                }
            }
        }
    }
    tips
}

/// Extends the path with the candidate nearest its last sample, or records a gap.
///
/// On an empty path the candidate closest to the origin starts the path. When the
/// nearest candidate is farther than `max_jump`, a gap is recorded and the path
/// restarts only if exactly one candidate exists.
pub fn continue_path(path: &mut TipPath, candidates: &[Vec2], t: f64, max_jump: f64) {
    let close_gap = |path: &mut TipPath| {
        if let Some(g) = path.gaps.last_mut() {
            if g.t_found.is_none() {
                g.t_found = Some(t);
                g.index = path.samples.len();
            }
        }
    };
    let open_gap = |path: &mut TipPath| {
        if !path.gap_open() {
            let index = path.samples.len();
            path.gaps.push(Gap {
                index,
                t_lost: t,
                t_found: None,
            });
        }
    };
    let nearest = |to: Vec2| {
        candidates
            .iter()
            .copied()
            .min_by(|a, b| (a - to).norm().total_cmp(&(b - to).norm()))
    };
    let Some(last) = path.last().map(TipSample::point) else {
        if let Some(p) = nearest(Vec2::zeros()) {
            close_gap(path);
            path.push(t, p);
        }
        return;
    };
    match nearest(last) {
        Some(p) if (p - last).norm() <= max_jump => {
            close_gap(path);
            path.push(t, p);
        }
        Some(_) if candidates.len() == 1 => {
            open_gap(path);
            close_gap(path);
            path.push(t, candidates[0]);
        }
        _ => open_gap(path),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample(n: usize, hw: f64, f: impl Fn(f64, f64) -> (f64, f64)) -> (FieldState, GridSpec) {
        let grid = GridSpec::new(n, hw, None).unwrap();
        let mut st = FieldState::uniform(n, 0.0, 0.0);
        for j in 0..n {
            for i in 0..n {
                let (u, v) = f(grid.coord(i), grid.coord(j));
                let k = st.idx(i, j);
                st.u[k] = u;
                st.v[k] = v;
            }
        }
        (st, grid)
    }

    #[test]
    fn linear_fields() {
        let (st, g) = sample(11, 3.0, |x, y| (x, y));
        let tips = find_tips(&st, &g);
        assert_eq!(tips.len(), 1);
        assert!(tips[0].norm() < 1e-12);
        let (st, g) = sample(12, 3.0, |x, y| (x - y, x + y - 2.0));
        let tips = find_tips(&st, &g);
        assert_eq!(tips.len(), 1);
        assert!((tips[0] - Vec2::new(1.0, 1.0)).norm() < 1e-12);
    }

    #[test]
    fn phase_singularity_located() {
        let c = Vec2::new(0.37, -1.21);
        let (st, g) = sample(40, 6.0, |x, y| {
            let (dx, dy) = (x - c.x, y - c.y);
            let r = dx.hypot(dy);
            let a = dy.atan2(dx) - 0.8 * r;
            (r * a.cos(), r * a.sin())
        });
        let tips = find_tips(&st, &g);
        let best = tips.iter().map(|p| (p - c).norm()).fold(f64::INFINITY, f64::min);
        assert!(best < g.dx(), "{tips:?}");
    }

    #[test]
    fn tips_lie_in_their_cells() {
        let (st, g) = sample(17, 4.0, |x, y| ((x * 1.3).sin() + 0.2 * y, (y * 0.9).cos() - 0.3 * x));
        for p in find_tips(&st, &g) {
            assert!(g.contains(p));
        }
    }

    proptest! {
        #[test]
        fn tips_rotate_with_fields(a in -1.0..1.0f64, b in -1.0..1.0f64, w in 0.3..1.2f64) {
            let f = |x: f64, y: f64| ((w * x).sin() + a * y + 0.1, (w * y).cos() * 0.5 + b * x - 0.2);
            let (st, g) = sample(15, 3.0, f);
            let rot = st.rotate_quarter();
            let mut p0: Vec<Vec2> = find_tips(&st, &g).iter().map(|p| Vec2::new(-p.y, p.x)).collect();
            let mut p1 = find_tips(&rot, &g);
            let key = |p: &Vec2| (p.x * 1e6).round() as i64 * 1_000_000_007 + (p.y * 1e6).round() as i64;
            p0.sort_by_key(key);
            p1.sort_by_key(key);
            prop_assert_eq!(p0.len(), p1.len());
            for (x, y) in p0.iter().zip(&p1) {
                prop_assert!((x - y).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn continuation_rules() {
        let mut p = TipPath::default();
        continue_path(&mut p, &[Vec2::new(0.0, 0.0)], 0.0, 1.0);
        assert_eq!(p.len(), 1);
        continue_path(&mut p, &[Vec2::new(0.1, 0.0), Vec2::new(5.0, 5.0)], 1.0, 1.0);
        assert_eq!(p.len(), 2);
        assert_eq!(p.last().unwrap().point(), Vec2::new(0.1, 0.0));
        continue_path(&mut p, &[Vec2::new(5.0, 5.0)], 2.0, 1.0);
        assert_eq!(p.len(), 3);
        assert_eq!(p.gaps.len(), 1);
        assert_eq!(p.gaps[0].index, 2);
        assert_eq!(p.segments(), vec![0..2, 2..3]);
    }

    #[test]
    fn lost_tip_opens_one_gap() {
        let mut p = TipPath::default();
        continue_path(&mut p, &[Vec2::new(0.0, 0.0)], 0.0, 1.0);
        continue_path(&mut p, &[], 1.0, 1.0);
        continue_path(&mut p, &[Vec2::new(3.0, 0.0), Vec2::new(-3.0, 0.0)], 2.0, 1.0);
        assert_eq!(p.gaps.len(), 1);
        assert!(p.gaps[0].t_found.is_none());
        continue_path(&mut p, &[Vec2::new(0.2, 0.0)], 3.0, 1.0);
        assert_eq!(p.gaps[0].t_found, Some(3.0));
        assert_eq!(p.len(), 2);
    }
}
