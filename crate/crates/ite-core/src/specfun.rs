//! Spherical Bessel/Hankel functions for complex arguments and Legendre
//! polynomials.
//!
//! `j_p` is computed by downward (Miller) recurrence normalized against the
//! closed forms for orders 0 and 1, which stays accurate when `p` exceeds
//! `|z|`. `y_p` is the dominant solution and is computed by upward
//! recurrence. Both accept complex arguments since the contour-integral
//! eigensolver evaluates everything slightly off the real axis.

use num_complex::Complex64;
use thiserror::Error;

/// Default cap on the mode order. Series terms decay super-exponentially
/// once `p` exceeds `|z|`, so this covers `|z|` up to ~60 with margin.
pub const P_MAX: usize = 80;

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpecFunError {
    #[error("spherical Neumann/Hankel functions have a pole at z = 0")]
    PoleAtZero,
    #[error("order {order} exceeds the supported cap {cap}")]
    OrderTooLarge { order: usize, cap: usize },
    #[error("evaluation overflowed for order {order} at |z| = {abs_z:.3e}")]
    Overflow { order: usize, abs_z: f64 },
}

fn check_order(p: usize) -> Result<(), SpecFunError> {
    if p > P_MAX {
        return Err(SpecFunError::OrderTooLarge { order: p, cap: P_MAX });
    }
    Ok(())
}

/// j_0 and j_1 from their closed forms; the anchors for Miller normalization.
fn j0_j1(z: Complex64) -> (Complex64, Complex64) {
    let (s, c) = (z.sin(), z.cos());
    (s / z, s / (z * z) - c / z)
}

/// Sequence j_0(z), ..., j_{p_max}(z) by downward recurrence.
pub fn sph_bessel_j_seq(p_max: usize, z: Complex64) -> Result<Vec<Complex64>, SpecFunError> {
    check_order(p_max)?;
    let zero = Complex64::new(0.0, 0.0);
    if z == zero {
        let mut out = vec![zero; p_max + 1];
        out[0] = Complex64::new(1.0, 0.0);
        return Ok(out);
    }
    // Start high enough above both the requested order and |z| that the
    // minimal solution dominates at the seed.
    let start = p_max + 16 + z.norm().ceil() as usize;
    let mut f = vec![zero; start + 2];
    f[start + 1] = zero;
    f[start] = Complex64::new(1e-280, 0.0);
    for p in (1..=start).rev() {
        let next = Complex64::new((2 * p + 1) as f64, 0.0) / z * f[p] - f[p + 1];
        f[p - 1] = next;
        if f[p - 1].norm() > 1e250 {
            let scale = 1e-250;
            for item in f.iter_mut().skip(p - 1) {
                *item *= scale;
            }
        }
    }
    // Bring the raw recurrence values to O(1) before dividing: complex
    // division squares the denominator magnitude, which underflows for the
    // tiny un-normalized values.
    let mag = f[0].norm().max(f[1].norm());
    if mag > 0.0 {
        let inv = 1.0 / mag;
        for item in f.iter_mut() {
            *item *= inv;
        }
    }
    // Anchor on whichever of j_0, j_1 is larger so zeros of sin(z) cannot
    // destroy the normalization.
    let (j0, j1) = j0_j1(z);
    let scale = if j0.norm() >= j1.norm() { j0 / f[0] } else { j1 / f[1] };
    let out: Vec<Complex64> = f.iter().take(p_max + 1).map(|v| v * scale).collect();
    if out.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(SpecFunError::Overflow { order: p_max, abs_z: z.norm() });
    }
    Ok(out)
}

/// Sequence y_0(z), ..., y_{p_max}(z) by upward recurrence.
pub fn sph_bessel_y_seq(p_max: usize, z: Complex64) -> Result<Vec<Complex64>, SpecFunError> {
    check_order(p_max)?;
    if z == Complex64::new(0.0, 0.0) {
        return Err(SpecFunError::PoleAtZero);
    }
    let (s, c) = (z.sin(), z.cos());
    let mut out = Vec::with_capacity(p_max + 1);
    out.push(-c / z);
    if p_max >= 1 {
        out.push(-c / (z * z) - s / z);
    }
    for p in 1..p_max {
        let next = Complex64::new((2 * p + 1) as f64, 0.0) / z * out[p] - out[p - 1];
        out.push(next);
    }
    if out.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(SpecFunError::Overflow { order: p_max, abs_z: z.norm() });
    }
    Ok(out)
}

/// Spherical Bessel function of the first kind, j_p(z). Total at z = 0.
pub fn sph_bessel_j(p: usize, z: Complex64) -> Result<Complex64, SpecFunError> {
    Ok(sph_bessel_j_seq(p, z)?[p])
}

/// Spherical Bessel function of the second kind, y_p(z).
pub fn sph_bessel_y(p: usize, z: Complex64) -> Result<Complex64, SpecFunError> {
    Ok(sph_bessel_y_seq(p, z)?[p])
}

/// f_p'(z) = f_{p-1}(z) - (p+1)/z f_p(z); shared by j, y, and h.
fn deriv_from_pair(p: usize, z: Complex64, f_prev: Complex64, f_p: Complex64) -> Complex64 {
    debug_assert!(p >= 1);
    f_prev - Complex64::new((p + 1) as f64, 0.0) / z * f_p
}

/// Derivative j_p'(z).
pub fn sph_bessel_j_deriv(p: usize, z: Complex64) -> Result<Complex64, SpecFunError> {
    if z == Complex64::new(0.0, 0.0) {
        // Series limits: j_1'(0) = 1/3, every other order has j_p'(0) = 0.
        let v = if p == 1 { 1.0 / 3.0 } else { 0.0 };
        check_order(p)?;
        return Ok(Complex64::new(v, 0.0));
    }
    let seq = sph_bessel_j_seq(p.max(1), z)?;
    if p == 0 {
        Ok(-seq[1])
    } else {
        Ok(deriv_from_pair(p, z, seq[p - 1], seq[p]))
    }
}

/// Derivative y_p'(z).
pub fn sph_bessel_y_deriv(p: usize, z: Complex64) -> Result<Complex64, SpecFunError> {
    let seq = sph_bessel_y_seq(p.max(1), z)?;
    if p == 0 {
        Ok(-seq[1])
    } else {
        Ok(deriv_from_pair(p, z, seq[p - 1], seq[p]))
    }
}

/// Spherical Hankel function of the first kind, h_p^{(1)} = j_p + i y_p.
pub fn sph_hankel1(p: usize, z: Complex64) -> Result<Complex64, SpecFunError> {
    Ok(sph_bessel_j(p, z)? + I * sph_bessel_y(p, z)?)
}

/// Derivative of the spherical Hankel function of the first kind.
pub fn sph_hankel1_deriv(p: usize, z: Complex64) -> Result<Complex64, SpecFunError> {
    Ok(sph_bessel_j_deriv(p, z)? + I * sph_bessel_y_deriv(p, z)?)
}

/// Legendre polynomial P_p(t) on [-1, 1] by the three-term recurrence.
pub fn legendre_p(p: usize, t: f64) -> f64 {
    debug_assert!(t.abs() <= 1.0 + 1e-12);
    match p {
        0 => 1.0,
        1 => t,
        _ => {
            let mut prev = 1.0;
            let mut cur = t;
            for q in 1..p {
                let next = ((2 * q + 1) as f64 * t * cur - q as f64 * prev) / (q + 1) as f64;
                prev = cur;
                cur = next;
            }
            cur
        }
    }
}

/// All of P_0(t), ..., P_{p_max}(t) in one recurrence pass.
pub fn legendre_p_seq(p_max: usize, t: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(p_max + 1);
    out.push(1.0);
    if p_max >= 1 {
        out.push(t);
    }
    for q in 1..p_max {
        let next = ((2 * q + 1) as f64 * t * out[q] - q as f64 * out[q - 1]) / (q + 1) as f64;
        out.push(next);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const PI: f64 = std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Independent ascending power series for j_p, truncated once the term
    /// drops below 1e-18 of the running sum. Valid for moderate |z|.
    fn j_series(p: usize, z: Complex64) -> Complex64 {
        // j_p(z) = z^p sum_m (-z^2/2)^m / (m! (2p+2m+1)!!)
        let mut double_fact = 1.0;
        for q in 0..=p {
            double_fact *= (2 * q + 1) as f64;
        }
        let mut term = z.powu(p as u32) / double_fact;
        let mut sum = term;
        for m in 1..200 {
            term *= -z * z / (2.0 * m as f64 * (2 * (p + m) + 1) as f64);
            sum += term;
            if term.norm() < 1e-18 * sum.norm() {
                break;
            }
        }
        sum
    }

    #[test]
    fn j0_at_pi_vanishes() {
        assert!(sph_bessel_j(0, c(PI, 0.0)).unwrap().norm() < 1e-14);
    }

    #[test]
    fn j0_at_origin_is_one() {
        assert_eq!(sph_bessel_j(0, c(0.0, 0.0)).unwrap(), c(1.0, 0.0));
        assert_eq!(sph_bessel_j(7, c(0.0, 0.0)).unwrap(), c(0.0, 0.0));
    }

    #[test]
    fn j5_matches_power_series_oracle() {
        let z = c(2.0, 0.0);
        let got = sph_bessel_j(5, z).unwrap();
        let want = j_series(5, z);
        assert!((got - want).norm() <= 1e-12 * want.norm().max(1.0));
    }

    #[test]
    fn j_matches_power_series_oracle_complex() {
        for (p, z) in [(3, c(1.5, 0.7)), (8, c(4.0, -1.0)), (20, c(6.0, 0.3))] {
            let got = sph_bessel_j(p, z).unwrap();
            let want = j_series(p, z);
            assert!(
                (got - want).norm() <= 1e-12 * want.norm(),
                "p={p} z={z} got={got} want={want}"
            );
        }
    }

    #[test]
    fn j_deriv_trivial_values() {
        assert_eq!(sph_bessel_j_deriv(0, c(0.0, 0.0)).unwrap(), c(0.0, 0.0));
        let got = sph_bessel_j_deriv(0, c(PI, 0.0)).unwrap();
        let want = -1.0 / PI; // -j_1(pi)
        assert!((got - c(want, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn j_deriv_matches_finite_difference_oracle() {
        // Central difference with one Richardson extrapolation step.
        let p = 3;
        let z = c(1.5, 0.0);
        let f = |x: Complex64| sph_bessel_j(p, x).unwrap();
        let d = |h: f64| (f(z + c(h, 0.0)) - f(z - c(h, 0.0))) / (2.0 * h);
        let (d1, d2) = (d(1e-4), d(5e-5));
        let oracle = (4.0 * d2 - d1) / 3.0;
        let got = sph_bessel_j_deriv(p, z).unwrap();
        assert!((got - oracle).norm() < 1e-10);
    }

    #[test]
    fn h0_closed_form() {
        // h_0^{(1)}(z) = -i e^{iz}/z, so h_0^{(1)}(1) = sin(1) - i cos(1).
        let got = sph_hankel1(0, c(1.0, 0.0)).unwrap();
        let want = c(1.0_f64.sin(), -(1.0_f64.cos()));
        assert!((got - want).norm() < 1e-14);
    }

    #[test]
    fn h_deriv_matches_finite_difference_oracle() {
        let z = c(2.3, 0.0);
        let f = |x: Complex64| sph_hankel1(0, x).unwrap();
        let d = |h: f64| (f(z + c(h, 0.0)) - f(z - c(h, 0.0))) / (2.0 * h);
        let (d1, d2) = (d(1e-4), d(5e-5));
        let oracle = (4.0 * d2 - d1) / 3.0;
        let got = sph_hankel1_deriv(0, z).unwrap();
        assert!((got - oracle).norm() < 1e-10);
    }

    #[test]
    fn hankel_pole_at_zero() {
        assert_eq!(sph_hankel1(2, c(0.0, 0.0)), Err(SpecFunError::PoleAtZero));
    }

    #[test]
    fn order_cap_enforced() {
        assert!(matches!(
            sph_bessel_j(P_MAX + 1, c(1.0, 0.0)),
            Err(SpecFunError::OrderTooLarge { .. })
        ));
    }

    #[test]
    fn overflow_reported_for_extreme_order() {
        assert!(matches!(
            sph_bessel_y(80, c(0.001, 0.0)),
            Err(SpecFunError::Overflow { .. })
        ));
    }

    #[test]
    fn wronskian_identity() {
        // j_p(x) y_p'(x) - j_p'(x) y_p(x) = 1/x^2
        for &x in &[0.5, 1.0, 5.0, 20.0] {
            for p in 0..=10 {
                let z = c(x, 0.0);
                let w = sph_bessel_j(p, z).unwrap() * sph_bessel_y_deriv(p, z).unwrap()
                    - sph_bessel_j_deriv(p, z).unwrap() * sph_bessel_y(p, z).unwrap();
                let want = 1.0 / (x * x);
                assert!(
                    (w - c(want, 0.0)).norm() <= 1e-12 * want,
                    "p={p} x={x} w={w}"
                );
            }
        }
    }

    #[test]
    fn legendre_trivial() {
        for p in 0..30 {
            assert_eq!(legendre_p(p, 1.0), 1.0);
        }
        assert_eq!(legendre_p(1, 0.37), 0.37);
    }

    #[test]
    fn legendre_p6_monomial_oracle() {
        // P_6(t) = (231 t^6 - 315 t^4 + 105 t^2 - 5)/16
        let t: f64 = 0.3;
        let want = (231.0 * t.powi(6) - 315.0 * t.powi(4) + 105.0 * t * t - 5.0) / 16.0;
        assert!((legendre_p(6, t) - want).abs() < 1e-14);
    }

    proptest! {
        #[test]
        fn recurrence_residual_small(
            r in 0.1f64..40.0,
            theta in 0.0f64..std::f64::consts::TAU,
            p in 1usize..40,
        ) {
            let z = Complex64::from_polar(r, theta);
            let j = sph_bessel_j_seq(p + 1, z).unwrap();
            let res = (Complex64::new((2 * p + 1) as f64, 0.0) / z * j[p] - j[p - 1] - j[p + 1]).norm();
            prop_assert!(res <= 1e-11 * j[p - 1].norm().max(j[p + 1].norm()).max(1e-300));
            if let Ok(y) = sph_bessel_y_seq(p + 1, z) {
                let res = (Complex64::new((2 * p + 1) as f64, 0.0) / z * y[p] - y[p - 1] - y[p + 1]).norm();
                prop_assert!(res <= 1e-11 * y[p - 1].norm().max(y[p + 1].norm()));
            }
        }

        #[test]
        fn real_argument_stays_real(x in 0.1f64..40.0, p in 0usize..30) {
            let z = Complex64::new(x, 0.0);
            prop_assert!(sph_bessel_j(p, z).unwrap().im.abs() <= 1e-15);
            prop_assert!(sph_bessel_y(p, z).unwrap().im.abs() <= 1e-15);
        }

        #[test]
        fn conjugate_symmetry(
            re in -10.0f64..10.0,
            im in 0.01f64..5.0,
            p in 0usize..25,
        ) {
            let z = Complex64::new(re, im);
            let a = sph_bessel_j(p, z.conj()).unwrap();
            let b = sph_bessel_j(p, z).unwrap().conj();
            prop_assert!((a - b).norm() <= 1e-11 * b.norm().max(1e-300));
        }

        #[test]
        fn legendre_bounded(p in 0usize..60, t in -1.0f64..1.0) {
            prop_assert!(legendre_p(p, t).abs() <= 1.0 + 1e-12);
        }
    }
}
