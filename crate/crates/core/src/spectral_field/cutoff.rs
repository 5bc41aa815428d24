//! Smooth dyadic cutoffs built by telescoping.
//!
//! `θ` equals 1 on `[0, plateau_end]` and vanishes from `support_end` on; the annular
//! profile is `χ(ρ) = θ(ρ) - θ(2ρ)`. Sums of `χ(ρ/I)` over consecutive dyadic `I`
//! telescope, so the partition of unity is exact up to rounding.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DyadicCutoff {
    pub plateau_end: f64,
    pub support_end: f64,
}

impl Default for DyadicCutoff {
    fn default() -> Self {
        Self { plateau_end: 1.25, support_end: 2.0 }
    }
}

#[inline]
fn psi(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        (-1.0 / t).exp()
    }
}

/// C^∞ step: 0 for `t ≤ 0`, 1 for `t ≥ 1`.
#[inline]
pub fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        let a = psi(t);
        a / (a + psi(1.0 - t))
    }
}

impl DyadicCutoff {
    pub fn new(plateau_end: f64, support_end: f64) -> Self {
        assert!(plateau_end > 0.0 && support_end > plateau_end && support_end <= 2.0 * plateau_end);
        Self { plateau_end, support_end }
    }

    /// Low-pass profile `θ`.
    #[inline]
    pub fn theta(&self, rho: f64) -> f64 {
        1.0 - smooth_step((rho.abs() - self.plateau_end) / (self.support_end - self.plateau_end))
    }

    /// Annular profile `χ(ρ) = θ(ρ) - θ(2ρ)`.
    #[inline]
    pub fn chi(&self, rho: f64) -> f64 {
        self.theta(rho) - self.theta(2.0 * rho)
    }

    /// `χ(ρ/I)`.
    #[inline]
    pub fn chi_at(&self, rho: f64, scale: f64) -> f64 {
        self.chi(rho / scale)
    }

    /// `(c_lo, c_hi)` with `supp χ ⊂ [c_lo, c_hi]`.
    pub fn support(&self) -> (f64, f64) {
        (0.5 * self.plateau_end, self.support_end)
    }

    /// Interval on which `χ = 1`.
    pub fn plateau(&self) -> (f64, f64) {
        (0.5 * self.support_end, self.plateau_end)
    }

    /// `Σ_{I = 2^j, j_lo ≤ j ≤ j_hi} χ(ρ/I)`.
    pub fn partition_sum(&self, rho: f64, j_lo: i32, j_hi: i32) -> f64 {
        (j_lo..=j_hi).map(|j| self.chi_at(rho, 2f64.powi(j))).sum()
    }
}

/// Dyadic scales `I` paired with mode `m` inside block `A`:
/// `A ≤ 1 + (2m+d1) I < 2A`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockWindow {
    /// Explicit scales (exponents of two).
    pub exponents: Vec<i32>,
    /// For `A = 1` every smaller scale also belongs; the tail telescopes to `θ(ρ/I_top)`.
    pub low_pass_top: Option<i32>,
}

impl BlockWindow {
    pub fn new(m: usize, a: u64, d1: usize) -> Self {
        assert!(a.is_power_of_two());
        let lam = (2 * m + d1) as f64;
        if a == 1 {
            // (2m+d1) I < 1, I dyadic
            let mut j = (1.0 / lam).log2().floor() as i32;
            while lam * 2f64.powi(j) >= 1.0 {
                j -= 1;
            }
            return Self { exponents: vec![], low_pass_top: Some(j) };
        }
        let af = a as f64;
        let lo = (af - 1.0) / lam;
        let hi = (2.0 * af - 1.0) / lam;
        let mut j = lo.log2().floor() as i32 - 1;
        let mut exps = Vec::new();
        while 2f64.powi(j) < hi {
            let i = 2f64.powi(j);
            if 1.0 + lam * i >= af && 1.0 + lam * i < 2.0 * af {
                exps.push(j);
            }
            j += 1;
        }
        Self { exponents: exps, low_pass_top: None }
    }

    /// Smooth block weight `Σ_{I in block} χ(ρ/I)`, including `ρ = 0` for `A = 1`.
    pub fn weight(&self, cut: &DyadicCutoff, rho: f64) -> f64 {
        let mut w: f64 = self.exponents.iter().map(|&j| cut.chi_at(rho, 2f64.powi(j))).sum();
        if let Some(j) = self.low_pass_top {
            w += cut.theta(rho / 2f64.powi(j));
        }
        w
    }

    /// Radial interval outside of which the weight vanishes.
    pub fn support(&self, cut: &DyadicCutoff) -> (f64, f64) {
        let (lo, hi) = cut.support();
        let mut a = f64::INFINITY;
        let mut b = 0.0f64;
        for &j in &self.exponents {
            a = a.min(lo * 2f64.powi(j));
            b = b.max(hi * 2f64.powi(j));
        }
        if let Some(j) = self.low_pass_top {
            a = 0.0;
            b = b.max(hi * 2f64.powi(j));
        }
        (a, b)
    }
}

/// Dyadic block `A = 2^⌊log2(1+λ)⌋` containing spectral parameter `λ = (2m+d1)|η|`
/// under the sharp half-open convention.
pub fn sharp_block(lambda: f64) -> u64 {
    let v = 1.0 + lambda;
    let mut a = 1u64 << (v.log2().floor().max(0.0) as u32);
    while (a as f64) > v {
        a >>= 1;
    }
    while 2.0 * (a as f64) <= v {
        a <<= 1;
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_partition_of_unity() {
        let c = DyadicCutoff::default();
        for i in 1..2000 {
            let rho = 1e-3 * (i as f64).powf(1.7);
            let s = c.partition_sum(rho, -40, 40);
            assert!((s - 1.0).abs() <= 4.0 * f64::EPSILON, "rho={rho} s={s}");
        }
    }

    #[test]
    fn support_and_plateau() {
        let c = DyadicCutoff::default();
        let (lo, hi) = c.support();
        assert!(lo > 0.0 && lo < 1.0 && hi > 1.0);
        assert_eq!(c.chi(lo * 0.999), 0.0);
        assert_eq!(c.chi(hi), 0.0);
        assert!(lo >= 0.5 && hi <= 2.5);
        let (p0, p1) = c.plateau();
        assert!(p0 <= 1.0 && 1.0 <= p1);
        for i in 0..=10 {
            let r = p0 + (p1 - p0) * i as f64 / 10.0;
            assert_eq!(c.chi(r), 1.0);
        }
    }

    #[test]
    fn every_scale_in_exactly_one_block() {
        for d1 in 1..=2 {
            for m in 0..12 {
                for j in -12..10 {
                    let lam = (2 * m + d1) as f64;
                    let i = 2f64.powi(j);
                    let mut hits = 0;
                    for e in 0..24 {
                        let a = 1u64 << e;
                        let w = BlockWindow::new(m, a, d1);
                        let member = w.exponents.contains(&j) || w.low_pass_top.is_some_and(|t| j <= t);
                        if member {
                            hits += 1;
                            assert!(1.0 + lam * i >= a as f64 && 1.0 + lam * i < 2.0 * a as f64);
                        }
                    }
                    assert_eq!(hits, 1, "m={m} j={j}");
                }
            }
        }
    }

    #[test]
    fn block_weights_sum_to_one() {
        let c = DyadicCutoff::default();
        for m in 0..5 {
            for &rho in &[0.0, 0.01, 0.3, 1.0, 7.7, 150.0] {
                let s: f64 = (0..30).map(|e| BlockWindow::new(m, 1 << e, 1).weight(&c, rho)).sum();
                assert!((s - 1.0).abs() < 1e-14, "m={m} rho={rho} s={s}");
            }
        }
    }

    #[test]
    fn sharp_block_values() {
        assert_eq!(sharp_block(0.0), 1);
        assert_eq!(sharp_block(0.999), 1);
        assert_eq!(sharp_block(1.0), 2);
        assert_eq!(sharp_block(6.0), 4);
        assert_eq!(sharp_block(7.0), 8);
    }
}
