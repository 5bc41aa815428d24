//! Gauss rules used across the crate.
//!
//! Hermite weights are returned *folded*: `W_i = w_i e^{x_i²}`, so that
//! `Σ W_i f(x_i) ≈ ∫ f dx` for functions that already carry their Gaussian decay.

use crate::hermite_basis::hermite_values;
use nalgebra::DMatrix;

/// Gauss–Hermite nodes (ascending) and folded weights.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    if n == 1 {
        return (vec![0.0], vec![std::f64::consts::PI.sqrt()]);
    }
    let mut jac = DMatrix::<f64>::zeros(n, n);
    for k in 1..n {
        let b = (k as f64 / 2.0).sqrt();
        jac[(k - 1, k)] = b;
        jac[(k, k - 1)] = b;
    }
    let mut nodes: Vec<f64> = jac.symmetric_eigenvalues().iter().copied().collect();
    nodes.sort_by(|a, b| a.partial_cmp(b).unwrap());
    // symmetrize, then polish each node with Newton on h_n
    for i in 0..n / 2 {
        let a = 0.5 * (nodes[n - 1 - i] - nodes[i]);
        nodes[i] = -a;
        nodes[n - 1 - i] = a;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    let mut weights = vec![0.0; n];
    let mut buf = vec![0.0; n + 1];
    for (x, w) in nodes.iter_mut().zip(weights.iter_mut()) {
        for _ in 0..3 {
            hermite_values(n, *x, &mut buf);
            let d = (2.0 * n as f64).sqrt() * buf[n - 1] - *x * buf[n];
            if d != 0.0 && d.is_finite() {
                let step = buf[n] / d;
                if step.is_finite() {
                    *x -= step;
                }
            }
        }
        *w = folded_weight(n, *x);
    }
    (nodes, weights)
}

/// `1 / Σ_{k<n} h_k(x)²`, computed with the Gaussian factor kept in log form.
fn folded_weight(n: usize, x: f64) -> f64 {
    let (mut a, mut b) = (0.0f64, std::f64::consts::PI.powf(-0.25));
    let mut log_scale = -0.5 * x * x;
    let mut sum = b * b;
    for k in 0..n - 1 {
        let kf = k as f64;
        let next = (2.0 / (kf + 1.0)).sqrt() * x * b - (kf / (kf + 1.0)).sqrt() * a;
        a = b;
        b = next;
        sum += b * b;
        if b.abs() > 1e100 {
            a *= 1e-100;
            b *= 1e-100;
            sum *= 1e-200;
            log_scale += 100.0 * std::f64::consts::LN_10;
        }
    }
    (-(2.0 * log_scale)).exp() / sum
}

/// Gauss–Legendre nodes and weights on `[a, b]`.
pub fn gauss_legendre(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let m = (n + 1) / 2;
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        if d.is_finite() {
            dp = d;
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = mid - half * z;
        x[n - 1 - i] = mid + half * z;
        w[i] = half * wi;
        w[n - 1 - i] = half * wi;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, z);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn hermite_rule_integrates_gaussian() {
        let (x, w) = gauss_hermite(40);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * (-x * x).exp()).sum();
        assert_relative_eq!(s, std::f64::consts::PI.sqrt(), max_relative = 1e-13);
        let s2: f64 = x.iter().zip(&w).map(|(x, w)| w * x * x * (-x * x).exp()).sum();
        assert_relative_eq!(s2, std::f64::consts::PI.sqrt() / 2.0, max_relative = 1e-13);
    }

    #[test]
    fn large_hermite_rule_is_finite() {
        let (x, w) = gauss_hermite(700);
        assert!(w.iter().all(|w| w.is_finite() && *w > 0.0));
        assert!(x.windows(2).all(|p| p[1] > p[0]));
        // ∫ e^{-x²/4} = 2√π
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * (-x * x / 4.0).exp()).sum();
        assert_relative_eq!(s, 2.0 * std::f64::consts::PI.sqrt(), max_relative = 1e-12);
    }

    #[test]
    fn legendre_rule_polynomials() {
        let (x, w) = gauss_legendre(7, 0.0, 2.0);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(13)).sum();
        assert_relative_eq!(s, 2f64.powi(14) / 14.0, max_relative = 1e-13);
        let (x, w) = gauss_legendre(2000, -1.0, 1.0);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.cos()).sum();
        assert_relative_eq!(s, 2.0 * 1f64.sin(), max_relative = 1e-12);
    }
}
