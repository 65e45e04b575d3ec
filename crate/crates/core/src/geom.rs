//! Planar geometry helpers shared by the signal estimators and the simulator.

use std::f64::consts::{PI, TAU};

/// Wrap an angle to the half-open interval (-pi, pi].
pub fn wrap_angle(a: f64) -> f64 {
    let mut r = a % TAU;
    if r <= -PI {
        r += TAU;
    } else if r > PI {
        r -= TAU;
    }
    r
}

/// Euclidean distance between two points.
pub fn distance(ax: f64, ay: f64, bx: f64, by: f64) -> f64 {
    let dx = bx - ax;
    let dy = by - ay;
    (dx * dx + dy * dy).sqrt()
}

/// Bearing of point (tx, ty) as seen from (fx, fy), in (-pi, pi].
pub fn bearing(fx: f64, fy: f64, tx: f64, ty: f64) -> f64 {
    (ty - fy).atan2(tx - fx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrap_stays_in_half_open_interval() {
        for k in -20..=20 {
            let a = k as f64 * 0.7;
            let w = wrap_angle(a);
            assert!(w > -PI && w <= PI, "wrap({a}) = {w}");
            // Same direction up to a full turn.
            assert!(((w - a).rem_euclid(TAU)).min(TAU - (w - a).rem_euclid(TAU)) < 1e-9);
        }
    }

    #[test]
    fn wrap_maps_negative_pi_to_positive_pi() {
        assert_eq!(wrap_angle(-PI), PI);
        assert_eq!(wrap_angle(PI), PI);
        assert_eq!(wrap_angle(3.0 * PI), PI);
    }

    #[test]
    fn bearing_of_east_is_zero() {
        assert_eq!(bearing(1.0, 1.0, 5.0, 1.0), 0.0);
        assert!((bearing(0.0, 0.0, 0.0, 2.0) - PI / 2.0).abs() < 1e-15);
    }
}
