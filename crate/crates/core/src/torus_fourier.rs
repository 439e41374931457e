//! Small divisors on the n-torus: Diophantine checks and the linear
//! transport equation `sum_k w_k d r / d x_k = s` for trigonometric-polynomial `s`.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::trig::TorusPolynomial;

#[derive(Debug, Error, PartialEq)]
pub enum FourierError {
    #[error("frequency vector must be non-empty with finite components")]
    InvalidFrequencies,
    #[error("forcing has nonzero mean coefficient {0}")]
    NonZeroMean(Complex64),
    #[error("exact resonance <m, w> = 0 at m = {0:?}")]
    ExactResonance(Vec<i32>),
    #[error("dimension mismatch: series on T^{series}, frequencies in R^{freq}")]
    DimensionMismatch { series: usize, freq: usize },
}

/// Frequencies `w_1..w_n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrequencyVector(Vec<f64>);

impl FrequencyVector {
    pub fn new(w: Vec<f64>) -> Result<Self, FourierError> {
        if w.is_empty() || w.iter().any(|x| !x.is_finite()) {
            return Err(FourierError::InvalidFrequencies);
        }
        Ok(Self(w))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn dot(&self, m: &[i32]) -> f64 {
        self.0.iter().zip(m).map(|(w, &k)| w * k as f64).sum()
    }

    /// Threshold below which `|<m, w>|` is treated as an exact zero.
    fn resonance_tol(&self, m: &[i32]) -> f64 {
        let scale = self.0.iter().fold(0.0f64, |a, w| a.max(w.abs())).max(1.0);
        1e-13 * l1(m) as f64 * scale
    }
}

fn l1(m: &[i32]) -> i64 {
    m.iter().map(|k| k.unsigned_abs() as i64).sum()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum DiophantineVerdict {
    SatisfiedUpToBound,
    Violated { m: Vec<i32>, divisor: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiophantineReport {
    pub rho: f64,
    pub mu: f64,
    pub n_max: u32,
    pub verdict: DiophantineVerdict,
    /// Smallest `|<m, w>| |m|^mu` over the searched range.
    pub worst_ratio: f64,
    pub worst_m: Vec<i32>,
}

impl DiophantineReport {
    pub fn is_satisfied(&self) -> bool {
        self.verdict == DiophantineVerdict::SatisfiedUpToBound
    }
}

/// All `m` with `|m|_1 = s` whose first nonzero entry is positive, in lexicographic order.
fn representatives(dim: usize, s: i32) -> Vec<Vec<i32>> {
    fn rec(dim: usize, rem: i32, leading: bool, cur: &mut Vec<i32>, out: &mut Vec<Vec<i32>>) {
        let pos = cur.len();
        if pos == dim - 1 {
            for v in [-rem, rem] {
                if leading && v <= 0 {
                    continue;
                }
                cur.push(v);
                out.push(cur.clone());
                cur.pop();
                if rem == 0 {
                    break;
                }
            }
            return;
        }
        let lo = if leading { 0 } else { -rem };
        for v in lo..=rem {
            cur.push(v);
            rec(dim, rem - v.abs(), leading && v == 0, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(dim, s, true, &mut Vec::with_capacity(dim), &mut out);
    out
}

/// Exhaustive test of `|<m, w>| >= rho |m|^{-mu}` over `0 < |m|_1 <= n_max`.
///
/// Indices are visited by increasing `|m|_1`, lexicographically within a shell,
/// one representative per `+-m` pair. An exact resonance violates the condition
/// for every `rho` and takes precedence in the verdict; otherwise the first
/// violation in visiting order is reported.
pub fn diophantine_check(w: &FrequencyVector, rho: f64, mu: f64, n_max: u32) -> DiophantineReport {
    assert!(rho > 0.0, "rho must be positive");
    assert!(n_max >= 1, "n_max must be at least 1");
    let mut first_violation: Option<(Vec<i32>, f64)> = None;
    let mut first_exact: Option<(Vec<i32>, f64)> = None;
    let mut worst_ratio = f64::INFINITY;
    let mut worst_m = Vec::new();
    for s in 1..=n_max as i32 {
        for m in representatives(w.dim(), s) {
            let d = w.dot(&m).abs();
            let norm = s as f64;
            let ratio = d * norm.powf(mu);
            if ratio < worst_ratio {
                worst_ratio = ratio;
                worst_m = m.clone();
            }
            if first_exact.is_none() && d <= w.resonance_tol(&m) {
                first_exact = Some((m.clone(), d));
            }
            if first_violation.is_none() && d < rho * norm.powf(-mu) {
                first_violation = Some((m, d));
            }
        }
    }
    let verdict = match first_exact.or(first_violation) {
        Some((m, divisor)) => DiophantineVerdict::Violated { m, divisor },
        None => DiophantineVerdict::SatisfiedUpToBound,
    };
    DiophantineReport {
        rho,
        mu,
        n_max,
        verdict,
        worst_ratio,
        worst_m,
    }
}

/// Solves `sum_k w_k d r / d x_k = s` with `r` of zero mean: `A_m = B_m / (i <m, w>)`.
pub fn solve_torus_pde(s: &TorusPolynomial, w: &FrequencyVector) -> Result<TorusPolynomial, FourierError> {
    if s.dim() != w.dim() {
        return Err(FourierError::DimensionMismatch {
            series: s.dim(),
            freq: w.dim(),
        });
    }
    let b0 = s.mean();
    if b0.norm() > 1e-14 * s.max_abs_coeff().max(1.0) {
        return Err(FourierError::NonZeroMean(b0));
    }
    let mut terms = Vec::with_capacity(s.len());
    for (m, b) in s.coeffs() {
        if m.iter().all(|&k| k == 0) {
            continue;
        }
        let d = w.dot(m);
        if d.abs() <= w.resonance_tol(m) {
            return Err(FourierError::ExactResonance(m.clone()));
        }
        terms.push((m.clone(), b / Complex64::new(0.0, d)));
    }
    Ok(TorusPolynomial::from_terms(s.dim(), terms))
}

/// Max of `|sum_k w_k d r / d x_k - s|` at `samples` random torus points.
pub fn pde_residual(r: &TorusPolynomial, s: &TorusPolynomial, w: &FrequencyVector, samples: usize, seed: u64) -> f64 {
    let n = w.dim();
    let mut lhs = TorusPolynomial::zero(n);
    for (k, &wk) in w.as_slice().iter().enumerate() {
        lhs = lhs.add(&r.derivative(k).scale(wk));
    }
    let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
    let mut x = vec![0.0; n];
    let mut worst = 0.0f64;
    for _ in 0..samples {
        for xi in x.iter_mut() {
            *xi = rng.gen_range(0.0..std::f64::consts::TAU);
        }
        worst = worst.max((lhs.eval(&x) - s.eval(&x)).norm());
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::{prop_assert, proptest};
    use rand::rngs::StdRng;

    fn golden() -> FrequencyVector {
        FrequencyVector::new(vec![(5f64.sqrt() - 1.0) / 2.0, 1.0]).unwrap()
    }

    fn random_forcing(rng: &mut StdRng, dim: usize, terms: usize, deg: i32) -> TorusPolynomial {
        let mut s = TorusPolynomial::zero(dim);
        for _ in 0..terms {
            let m: Vec<i32> = (0..dim).map(|_| rng.gen_range(-deg..=deg)).collect();
            if m.iter().all(|&k| k == 0) {
                continue;
            }
            s = s
                .add(&TorusPolynomial::cos_mode(&m, rng.gen_range(-1.0..1.0)))
                .add(&TorusPolynomial::sin_mode(&m, rng.gen_range(-1.0..1.0)));
        }
        s
    }

    #[test]
    fn shell_enumeration_order() {
        let r = representatives(2, 3);
        assert_eq!(
            r,
            vec![vec![0, 3], vec![1, -2], vec![1, 2], vec![2, -1], vec![2, 1], vec![3, 0]]
        );
        assert_eq!(representatives(3, 1), vec![vec![0, 0, 1], vec![0, 1, 0], vec![1, 0, 0]]);
    }

    #[test]
    fn shell_sizes_match_count() {
        // In 2D the shell |m|_1 = s has 4s points, half of them representatives.
        for s in 1..8 {
            assert_eq!(representatives(2, s).len(), 2 * s as usize);
        }
    }

    #[test]
    fn rational_vector_is_resonant() {
        let w = FrequencyVector::new(vec![0.5, 1.0]).unwrap();
        for rho in [1e-3, 0.2, 5.0] {
            let rep = diophantine_check(&w, rho, 1.0, 5);
            assert_eq!(
                rep.verdict,
                DiophantineVerdict::Violated {
                    m: vec![2, -1],
                    divisor: 0.0
                }
            );
        }
    }

    #[test]
    fn golden_mean_passes() {
        let rep = diophantine_check(&golden(), 0.2, 1.0, 50);
        assert!(rep.is_satisfied());
        assert!(rep.worst_ratio >= 0.2);
    }

    #[test]
    fn near_resonance_is_caught() {
        let w = FrequencyVector::new(vec![0.5000001, 1.0]).unwrap();
        let rep = diophantine_check(&w, 0.2, 1.0, 10);
        match rep.verdict {
            DiophantineVerdict::Violated { m, divisor } => {
                assert_eq!(m, vec![2, -1]);
                assert!((divisor - 2e-7).abs() < 1e-12);
            }
            _ => panic!("expected violation"),
        }
    }

    #[test]
    fn single_harmonic_solution() {
        let w = golden();
        let s = TorusPolynomial::cos_mode(&[1, 0], 2.0);
        let r = solve_torus_pde(&s, &w).unwrap();
        let expect = Complex64::new(1.0, 0.0) / Complex64::new(0.0, w.as_slice()[0]);
        assert!((r.coeff(&[1, 0]) - expect).norm() < 1e-15);
        assert!(pde_residual(&r, &s, &w, 200, 1) < 1e-14);
    }

    #[test]
    fn zero_forcing() {
        let s = TorusPolynomial::zero(2);
        let r = solve_torus_pde(&s, &golden()).unwrap();
        assert!(r.is_zero());
        assert_eq!(pde_residual(&r, &s, &golden(), 10, 0), 0.0);
    }

    #[test]
    fn resonant_and_mean_errors() {
        let w = FrequencyVector::new(vec![0.5, 1.0]).unwrap();
        let s = TorusPolynomial::cos_mode(&[2, -1], 1.0);
        assert!(matches!(solve_torus_pde(&s, &w), Err(FourierError::ExactResonance(_))));
        let s = TorusPolynomial::constant(2, 1.0);
        assert!(matches!(solve_torus_pde(&s, &w), Err(FourierError::NonZeroMean(_))));
        assert!(FrequencyVector::new(vec![]).is_err());
    }

    #[test]
    fn perturbed_solution_residual_scales_with_divisor() {
        let w = golden();
        let s = TorusPolynomial::cos_mode(&[1, 1], 1.0);
        let r = solve_torus_pde(&s, &w).unwrap();
        let bumped = r.add(&TorusPolynomial::monomial(&[1, 1], Complex64::new(1e-3, 0.0)));
        let res = pde_residual(&bumped, &s, &w, 500, 3);
        let expect = 1e-3 * w.dot(&[1, 1]).abs();
        assert!((res - expect).abs() < 1e-12, "{res} vs {expect}");
    }

    #[test]
    fn random_instances_three_dim() {
        let mut rng = StdRng::seed_from_u64(11);
        let w = FrequencyVector::new(vec![1.0, 2f64.sqrt(), 3f64.sqrt()]).unwrap();
        for _ in 0..10 {
            let s = random_forcing(&mut rng, 3, 8, 4);
            let r = solve_torus_pde(&s, &w).unwrap();
            assert!(r.is_real(1e-14));
            assert!(pde_residual(&r, &s, &w, 1000, 5) < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn linearity(seed in 0u64..300, a in -2.0f64..2.0, b in -2.0f64..2.0) {
            let mut rng = StdRng::seed_from_u64(seed);
            let w = golden();
            let s1 = random_forcing(&mut rng, 2, 5, 5);
            let s2 = random_forcing(&mut rng, 2, 5, 5);
            let lhs = solve_torus_pde(&s1.scale(a).add(&s2.scale(b)), &w).unwrap();
            let rhs = solve_torus_pde(&s1, &w).unwrap().scale(a)
                .add(&solve_torus_pde(&s2, &w).unwrap().scale(b));
            prop_assert!(lhs.sub(&rhs).max_abs_coeff() < 1e-12);
        }

        #[test]
        fn monotone_in_rho(w0 in 0.01f64..0.99, rho in 0.01f64..0.5, shrink in 0.0f64..1.0) {
            let w = FrequencyVector::new(vec![w0, 1.0]).unwrap();
            let a = diophantine_check(&w, rho, 1.0, 20);
            if a.is_satisfied() {
                let smaller = rho * shrink.max(1e-3);
                prop_assert!(diophantine_check(&w, smaller, 1.0, 20).is_satisfied());
            }
        }

        #[test]
        fn reported_violation_is_genuine(w0 in 0.01f64..0.99, rho in 0.01f64..1.0) {
            let w = FrequencyVector::new(vec![w0, 1.0]).unwrap();
            let rep = diophantine_check(&w, rho, 1.0, 15);
            if let DiophantineVerdict::Violated { m, divisor } = rep.verdict {
                let norm = l1(&m) as f64;
                prop_assert!(divisor < rho / norm || divisor <= 1e-12);
            }
        }
    }
}
