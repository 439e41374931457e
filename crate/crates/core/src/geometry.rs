//! Planar rotations and the quarter-turn matrix `J`.

use nalgebra::{Matrix2, Vector2};

pub type Vec2 = Vector2<f64>;

/// Rotation matrix `R_a`.
#[inline]
pub fn rot(a: f64) -> Matrix2<f64> {
    let (s, c) = a.sin_cos();
    Matrix2::new(c, -s, s, c)
}

/// `R_a v`.
#[inline]
pub fn rotate(a: f64, v: Vec2) -> Vec2 {
    let (s, c) = a.sin_cos();
    Vec2::new(c * v.x - s * v.y, s * v.x + c * v.y)
}

/// `J v` with `J = R_{-pi/2}`.
#[inline]
pub fn j(v: Vec2) -> Vec2 {
    Vec2::new(v.y, -v.x)
}

/// `-J v = R_{pi/2} v`.
#[inline]
pub fn minus_j(v: Vec2) -> Vec2 {
    Vec2::new(-v.y, v.x)
}

/// `(-J)^n v` for any integer `n`.
pub fn minus_j_pow(n: i32, v: Vec2) -> Vec2 {
    match n.rem_euclid(4) {
        0 => v,
        1 => minus_j(v),
        2 => -v,
        _ => j(v),
    }
}

/// Reduces an angle to `[0, 2pi)`.
#[inline]
pub fn wrap_angle(a: f64) -> f64 {
    a.rem_euclid(std::f64::consts::TAU)
}

/// Signed difference `a - b` reduced to `(-pi, pi]`.
pub fn angle_diff(a: f64, b: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let d = (a - b).rem_euclid(TAU);
    if d > PI {
        d - TAU
    } else {
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn j_is_rotation_by_minus_quarter_turn() {
        let v = Vec2::new(0.3, -1.7);
        assert!((rot(-FRAC_PI_2) * v - j(v)).norm() < 1e-15);
        assert!((rot(FRAC_PI_2) * v - minus_j(v)).norm() < 1e-15);
        assert!((rotate(0.7, v) - rot(0.7) * v).norm() < 1e-15);
    }

    #[test]
    fn powers_of_minus_j_cycle() {
        let v = Vec2::new(1.0, 2.0);
        assert_eq!(minus_j_pow(4, v), v);
        assert_eq!(minus_j_pow(-1, v), j(v));
        assert_eq!(minus_j_pow(2, v), -v);
    }

    #[test]
    fn angle_diff_range() {
        assert!((angle_diff(0.1, 6.2) - (0.1 - 6.2 + std::f64::consts::TAU)).abs() < 1e-12);
        assert!(angle_diff(3.0, -3.0).abs() <= std::f64::consts::PI);
    }
}
