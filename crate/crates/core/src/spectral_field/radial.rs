//! Fields on `R^{d1} x R^{d2}` that are radial in `y`, with continuum frequencies.
//!
//! Each Hermite mode carries a profile `f_{m,k}(|η|)` sampled on its own radial
//! Gauss–Legendre rule. With `û(x,η) = Σ f_{m,k}(|η|) h̃_{m,k}(x;|η|)` the field is
//! `u(x,y) = (2π)^{-d2} ∫ û(x,η) e^{iη·y} dη`, so Parseval reads
//! `‖u‖² = (2π)^{-d2} |S^{d2-1}| Σ ∫ |f(r)|² r^{d2-1} dr`.

use super::EtaMultiplier;
use crate::hermite_basis::{hermite_values, unflatten, ModeTable};
use crate::quadrature::{gauss_hermite, gauss_legendre};
use crate::special::{sphere_area, sphere_fourier};
use crate::{Complex64, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct RadialSegment {
    /// Flat `(m, k)` index into the mode table.
    pub mode: usize,
    pub r: Vec<f64>,
    pub w: Vec<f64>,
    pub f: Vec<Complex64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadialField {
    pub d1: usize,
    pub d2: usize,
    pub m_max: usize,
    pub table: ModeTable,
    pub segments: Vec<RadialSegment>,
}

impl RadialField {
    pub fn new(d1: usize, d2: usize, m_max: usize) -> Result<Self> {
        if !(1..=3).contains(&d2) || d1 == 0 {
            return Err(Error::InvalidArgument(format!("radial fields need d1 ≥ 1 and 1 ≤ d2 ≤ 3, got ({d1}, {d2})")));
        }
        Ok(Self { d1, d2, m_max, table: ModeTable::new(d1, m_max), segments: Vec::new() })
    }

    /// Add the profile of mode `(m, k)` on `[lo, hi]` with `n` Gauss–Legendre nodes.
    pub fn add_profile(
        &mut self,
        m: usize,
        k: usize,
        lo: f64,
        hi: f64,
        n: usize,
        profile: impl Fn(f64) -> Complex64,
    ) -> Result<()> {
        if m > self.m_max {
            return Err(Error::InvalidArgument(format!("mode {m} above m_max {}", self.m_max)));
        }
        if !(hi > lo && lo >= 0.0) {
            return Err(Error::InvalidArgument(format!("bad radial interval [{lo}, {hi}]")));
        }
        let (r, w) = gauss_legendre(n, lo, hi);
        let f = r.iter().map(|&x| profile(x)).collect();
        self.segments.push(RadialSegment { mode: self.table.index(m, k), r, w, f });
        Ok(())
    }

    /// `(2π)^{-d2} |S^{d2-1}|`.
    pub fn measure(&self) -> f64 {
        sphere_area(self.d2) / (2.0 * std::f64::consts::PI).powi(self.d2 as i32)
    }

    pub fn mode_of(&self, seg: &RadialSegment) -> usize {
        self.table.modes[seg.mode]
    }

    /// Largest radial frequency carried.
    pub fn r_max(&self) -> f64 {
        self.segments.iter().flat_map(|s| s.r.iter().copied()).fold(0.0, f64::max)
    }

    /// The rescaled datum `u_λ(x, y) = u(λx, λ²y)`, represented exactly.
    pub fn rescale(&self, lambda: f64) -> Self {
        let l2 = lambda * lambda;
        let amp = lambda.powf(-2.0 * self.d2 as f64 - self.d1 as f64 / 2.0);
        let mut out = self.clone();
        for s in &mut out.segments {
            s.r.iter_mut().for_each(|r| *r *= l2);
            s.w.iter_mut().for_each(|w| *w *= l2);
            s.f.iter_mut().for_each(|f| *f *= amp);
        }
        out
    }

    /// Direct evaluation of `u(x_p, |y| = ρ_j)` as `[p][j]`.
    pub fn sample(&self, x_points: &[f64], rho: &[f64]) -> Vec<Complex64> {
        let np = x_points.len() / self.d1;
        let c = (2.0 * std::f64::consts::PI).powi(-(self.d2 as i32));
        let mut out = vec![Complex64::new(0.0, 0.0); np * rho.len()];
        let mut buf = vec![0.0; self.m_max + 1];
        for seg in &self.segments {
            let alpha = &self.table.alphas[seg.mode];
            for ((&r, &w), &f) in seg.r.iter().zip(&seg.w).zip(&seg.f) {
                let coef = f * (c * w * r.powi(self.d2 as i32 - 1));
                for (p, x) in x_points.chunks(self.d1).enumerate() {
                    let mut h = r.powf(self.d1 as f64 / 4.0);
                    for (xj, &aj) in x.iter().zip(alpha) {
                        hermite_values(aj, r.sqrt() * xj, &mut buf);
                        h *= buf[aj];
                    }
                    let hc = coef * h;
                    for (j, &rh) in rho.iter().enumerate() {
                        out[p * rho.len() + j] += hc * sphere_fourier(self.d2, r * rh);
                    }
                }
            }
        }
        out
    }

    /// `‖⟨∂_x⟩^s u‖_{L²}`, computed fiber-wise on the radial nodes.
    pub fn x_sobolev_norm(&self, s: f64, quad_order: usize) -> f64 {
        let nm = self.table.len();
        let q = XSobolevQuad::new(&self.table, quad_order);
        let mut total = 0.0;
        for seg in &self.segments {
            let mut c = vec![Complex64::new(0.0, 0.0); nm];
            for ((&r, &w), &f) in seg.r.iter().zip(&seg.w).zip(&seg.f) {
                c[seg.mode] = f;
                total += w * r.powi(self.d2 as i32 - 1) * q.norm_sqr(&c, r, s);
            }
        }
        (self.measure() * total).sqrt()
    }
}

impl EtaMultiplier for RadialField {
    fn d1(&self) -> usize {
        self.d1
    }

    fn m_max(&self) -> usize {
        self.m_max
    }

    fn values(&self) -> Vec<Complex64> {
        self.segments.iter().flat_map(|s| s.f.iter().copied()).collect()
    }

    fn map_symbol<F: Fn(usize, f64, Complex64) -> Complex64 + Sync>(&self, f: F) -> Self {
        let mut out = self.clone();
        for s in &mut out.segments {
            let m = self.table.modes[s.mode];
            for (v, &r) in s.f.iter_mut().zip(&s.r) {
                *v = f(m, r, *v);
            }
        }
        out
    }

    fn weighted_norm_sqr<F: Fn(usize, f64) -> f64 + Sync>(&self, wf: F) -> f64 {
        let mut total = 0.0;
        for s in &self.segments {
            let m = self.table.modes[s.mode];
            for ((&r, &w), f) in s.r.iter().zip(&s.w).zip(&s.f) {
                let n2 = f.norm_sqr();
                if n2 > 0.0 {
                    total += w * r.powi(self.d2 as i32 - 1) * wf(m, r) * n2;
                }
            }
        }
        self.measure() * total
    }
}

/// Quadrature for `‖⟨∂_x⟩^s v‖²_{L²_x}` with `v = Σ_α c_α h̃_α(·; a)`.
///
/// The x-Fourier transform maps `h̃_α(·;a)` to `(-i)^{|α|} a^{-d1/4} h_α(ζ/√a)`, which
/// after `ζ = √a ξ` leaves `∫ (1 + a|ξ|²)^s |Σ c_α (-i)^{|α|} h_α(ξ)|² dξ`.
pub struct XSobolevQuad<'a> {
    table: &'a ModeTable,
    n: usize,
    xi: Vec<f64>,
    wi: Vec<f64>,
    h: Vec<f64>,
}

impl<'a> XSobolevQuad<'a> {
    pub fn new(table: &'a ModeTable, quad_order: usize) -> Self {
        let (xi, wi) = gauss_hermite(quad_order);
        let w = table.m_max + 1;
        let mut h = vec![0.0; quad_order * w];
        for (i, &x) in xi.iter().enumerate() {
            hermite_values(table.m_max, x, &mut h[i * w..(i + 1) * w]);
        }
        Self { table, n: quad_order, xi, wi, h }
    }

    pub fn norm_sqr(&self, c: &[Complex64], a: f64, s: f64) -> f64 {
        let table = self.table;
        if c.iter().all(|v| v.norm_sqr() == 0.0) {
            return 0.0;
        }
        let w = table.m_max + 1;
        let phase = |m: usize| match m % 4 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, -1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, 1.0),
        };
        let mut idx = vec![0usize; table.d1];
        let mut total = 0.0;
        for p in 0..self.n.pow(table.d1 as u32) {
            unflatten(p, self.n, &mut idx);
            let mut wt = 1.0;
            let mut r2 = 0.0;
            for &i in &idx {
                wt *= self.wi[i];
                r2 += self.xi[i] * self.xi[i];
            }
            let mut acc = Complex64::new(0.0, 0.0);
            for ((cv, alpha), &m) in c.iter().zip(&table.alphas).zip(&table.modes) {
                if cv.norm_sqr() == 0.0 {
                    continue;
                }
                let v: f64 = idx.iter().zip(alpha).map(|(&i, &aj)| self.h[i * w + aj]).product();
                acc += cv * phase(m) * v;
            }
            total += wt * (1.0 + a * r2).powf(s) * acc.norm_sqr();
        }
        total
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::gauss_legendre;

    fn bump(r: f64) -> Complex64 {
        let c = crate::spectral_field::cutoff::DyadicCutoff::default();
        Complex64::new(c.chi(r), 0.0)
    }

    #[test]
    fn parseval_against_sampling_d2_2() {
        let mut f = RadialField::new(1, 2, 1).unwrap();
        f.add_profile(0, 0, 0.625, 2.0, 60, bump).unwrap();
        let (x, w) = gauss_hermite(30);
        let (rho, wr) = gauss_legendre(400, 0.0, 60.0);
        let vals = f.sample(&x, &rho);
        let mut n2 = 0.0;
        for p in 0..x.len() {
            for j in 0..rho.len() {
                n2 += w[p] * wr[j] * rho[j] * 2.0 * std::f64::consts::PI * vals[p * rho.len() + j].norm_sqr();
            }
        }
        assert!((n2.sqrt() / f.l2_norm() - 1.0).abs() < 1e-6, "{} {}", n2.sqrt(), f.l2_norm());
    }

    #[test]
    fn rescaling_is_exact() {
        let mut f = RadialField::new(1, 2, 1).unwrap();
        f.add_profile(1, 0, 0.625, 2.0, 40, bump).unwrap();
        let g = f.rescale(2.0);
        let (x, _) = gauss_hermite(8);
        let rho = [0.0, 0.3, 1.1];
        let a = f.sample(&x.iter().map(|v| v * 2.0).collect::<Vec<_>>(), &rho.iter().map(|r| r * 4.0).collect::<Vec<_>>());
        let b = g.sample(&x, &rho);
        for (u, v) in a.iter().zip(&b) {
            assert!((u - v).norm() < 1e-12 * (1.0 + u.norm()));
        }
    }

    #[test]
    fn x_sobolev_identity_at_s1() {
        // ‖v‖² + ‖∂_x v‖² for v = h̃_1(·;a): ‖∂_x h̃_1‖² = a(1 + 1/2)
        let t = ModeTable::new(1, 3);
        let mut c = vec![Complex64::new(0.0, 0.0); t.len()];
        c[1] = Complex64::new(1.0, 0.0);
        let a = 2.5;
        let q = XSobolevQuad::new(&t, 40);
        assert!((q.norm_sqr(&c, a, 1.0) - (1.0 + 1.5 * a)).abs() < 1e-12);
        assert!((q.norm_sqr(&c, a, 0.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_dims() {
        assert!(RadialField::new(1, 4, 0).is_err());
    }
}
