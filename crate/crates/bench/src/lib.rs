//! Fixtures shared by the kernel benchmarks.

use meander_core::averaging::hopf_plant;
use meander_core::center_bundle::PolynomialNonIntForm;
use meander_core::lattice_fhn::{make_spiral_initial, FieldState, GridSpec, KineticParams, Stepper};
use meander_core::torus_fourier::FrequencyVector;
use meander_core::TorusPolynomial;

pub fn fig2_kinetics() -> KineticParams {
    KineticParams {
        tau: 0.1858,
        beta: 0.755,
        gamma: 0.5,
    }
}

/// Grid with `dt = min(default, 0.05)` and the spiral state after `warm` steps.
pub fn spiral(n: usize, warm: usize) -> (GridSpec, FieldState) {
    let hw = 10.0 * std::f64::consts::PI;
    let auto = GridSpec::new(n, hw, None).expect("grid");
    let grid = GridSpec::new(n, hw, Some(auto.dt().min(0.05))).expect("grid");
    let kin = fig2_kinetics();
    let mut s = make_spiral_initial(&grid, &kin).expect("initial state");
    let mut st = Stepper::new(grid, kin, &Default::default()).expect("stepper");
    for _ in 0..warm {
        st.step(&mut s).expect("step");
    }
    (grid, s)
}

/// The planted `l = 4` standard form.
pub fn plant_form() -> PolynomialNonIntForm {
    hopf_plant().form()
}

/// `sum_{0 < |m|_inf <= h} cos(<m, x>) / (1 + |m|_1)` on `T^dim`.
pub fn dense_torus_series(dim: usize, h: i32) -> (TorusPolynomial, FrequencyVector) {
    let mut s = TorusPolynomial::zero(dim);
    let mut m = vec![-h; dim];
    loop {
        if m.iter().any(|&v| v != 0) {
            let w = 1.0 / (1.0 + m.iter().map(|v| v.abs()).sum::<i32>() as f64);
            s = s.add(&TorusPolynomial::cos_mode(&m, w));
        }
        let mut i = 0;
        while i < dim && m[i] == h {
            m[i] = -h;
            i += 1;
        }
        if i == dim {
            break;
        }
        m[i] += 1;
    }
    let w: Vec<f64> = (0..dim).map(|k| ((k + 2) as f64).sqrt()).collect();
    (s, FrequencyVector::new(w).expect("frequencies"))
}
