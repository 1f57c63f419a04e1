//! Speed-density fundamental diagram shared by the analytical model and the
//! simulator: `v = v_min + (v_max − v_min) (1 − u^α₁)^α₂` with `u = k / k_jam`.

/// Speed at density ratio `u`, clamped to `[0, 1]`.
#[inline]
pub fn speed(u: f64, v_min: f64, v_max: f64, alpha1: f64, alpha2: f64) -> f64 {
    let u = u.clamp(0.0, 1.0);
    let free = 1.0 - libm::pow(u, alpha1);
    v_min + (v_max - v_min) * libm::pow(free.max(0.0), alpha2)
}

/// `dv/du` on the open interval `(0, 1)`; zero at and beyond the clamp
/// boundaries.
#[inline]
pub fn speed_slope(u: f64, v_min: f64, v_max: f64, alpha1: f64, alpha2: f64) -> f64 {
    if u <= 0.0 || u >= 1.0 {
        return 0.0;
    }
    let ua = libm::pow(u, alpha1);
    let free = 1.0 - ua;
    // d/du (1 − u^a1)^a2 = −a1 a2 u^(a1−1) (1 − u^a1)^(a2−1)
    -(v_max - v_min) * alpha1 * alpha2 * (ua / u) * libm::pow(free, alpha2 - 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoints() {
        assert_eq!(speed(0.0, 1.0, 30.0, 2.0, 2.0), 30.0);
        assert_eq!(speed(1.0, 1.0, 30.0, 2.0, 2.0), 1.0);
        assert_eq!(speed(7.0, 1.0, 30.0, 2.0, 2.0), 1.0);
    }

    #[test]
    fn linear_case_midpoint() {
        assert_eq!(speed(0.5, 5.0, 105.0, 1.0, 1.0), 55.0);
    }

    #[test]
    fn slope_matches_difference_quotient() {
        let (a1, a2) = (2.3, 1.7);
        for &u in &[0.1, 0.4, 0.8] {
            let h = 1e-6;
            let fd = (speed(u + h, 2.0, 30.0, a1, a2) - speed(u - h, 2.0, 30.0, a1, a2)) / (2.0 * h);
            let an = speed_slope(u, 2.0, 30.0, a1, a2);
            assert!((fd - an).abs() <= 1e-6 * an.abs().max(1.0), "u={u}: {fd} vs {an}");
        }
    }
}
