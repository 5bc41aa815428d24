//! Bessel and sphere-measure helpers.

use std::f64::consts::PI;

/// Bessel function `J_0`.
#[inline]
pub fn bessel_j0(x: f64) -> f64 {
    puruspe::Jn(0, x.abs())
}

/// Fourier transform of the surface measure of `S^{d-1}` evaluated at radius `s`,
/// i.e. `∫_{S^{d-1}} e^{-i s ω_1} dω`. Real and even in `s`.
#[inline]
pub fn sphere_fourier(d: usize, s: f64) -> f64 {
    match d {
        1 => 2.0 * s.cos(),
        2 => 2.0 * PI * bessel_j0(s),
        3 => {
            if s.abs() < 1e-4 {
                4.0 * PI * (1.0 - s * s / 6.0 + s.powi(4) / 120.0)
            } else {
                4.0 * PI * s.sin() / s
            }
        }
        _ => panic!("sphere_fourier: dimension {d} not supported"),
    }
}

/// Surface area `|S^{d-1}|` (with `|S^0| = 2`).
pub fn sphere_area(d: usize) -> f64 {
    match d {
        1 => 2.0,
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        _ => panic!("sphere_area: dimension {d} not supported"),
    }
}

/// Binomial coefficient as `usize`.
pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as usize
}

#[cfg(test)]
mod tests {
    use super::*;

    fn j0_series(x: f64) -> f64 {
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..80 {
            term *= -(x * x / 4.0) / (k as f64 * k as f64);
            sum += term;
        }
        sum
    }

    #[test]
    fn j0_matches_series() {
        for &x in &[0.0f64, 0.3, 1.0, 2.404825557695773, 5.0, 7.9, 8.1, 11.0] {
            // the alternating series loses about e^x/x of relative accuracy
            let tol = 1e-15 * (1.0 + x.exp() / x.max(1.0));
            assert!((bessel_j0(x) - j0_series(x)).abs() < tol, "x={x}");
        }
    }

    #[test]
    fn j0_large_argument_asymptotics() {
        let x = 5000.0f64;
        let asym = (2.0 / (PI * x)).sqrt() * ((x - PI / 4.0).cos() + (x - PI / 4.0).sin() / (8.0 * x));
        assert!((bessel_j0(x) - asym).abs() < 1e-9);
    }

    #[test]
    fn sphere_fourier_at_origin_is_area() {
        for d in 1..=3 {
            assert!((sphere_fourier(d, 0.0) - sphere_area(d)).abs() < 1e-14);
        }
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(5, 2), 10);
        assert_eq!(binomial(34, 2), 561);
        assert_eq!(binomial(3, 5), 0);
    }
}
