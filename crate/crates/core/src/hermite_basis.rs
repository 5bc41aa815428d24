//! Harmonic-oscillator eigenbasis in `d1` dimensions and its `|η|`-rescaled form.
//!
//! One-dimensional functions are the L²-normalized Hermite functions
//! `h_n(x) = (2^n n! √π)^{-1/2} H_n(x) e^{-x²/2}`, generated by the normalized three-term
//! recurrence. Multi-dimensional eigenfunctions are tensor products indexed by
//! multi-indices `α` with `|α| = m`, listed in lexicographic order (descending in `α_1`).

use crate::quadrature::gauss_hermite;
use crate::special::binomial;
use crate::{Complex64, Error, Result};

/// Fill `out[0..=n_max]` with `h_0(x), …, h_{n_max}(x)`.
///
/// The recurrence runs on a rescaled mantissa so that large `|x|` does not underflow
/// the low-order terms before the high-order ones become representable.
pub fn hermite_values(n_max: usize, x: f64, out: &mut [f64]) {
    let pi4 = std::f64::consts::PI.powf(-0.25);
    let mut log_scale = -0.5 * x * x;
    let (mut a, mut b) = (0.0f64, pi4);
    let emit = |v: f64, s: f64| if s < -745.0 { v * (s + 700.0).exp() * (-700.0f64).exp() } else { v * s.exp() };
    out[0] = emit(b, log_scale);
    for k in 0..n_max {
        let kf = k as f64;
        let next = (2.0 / (kf + 1.0)).sqrt() * x * b - (kf / (kf + 1.0)).sqrt() * a;
        a = b;
        b = next;
        if b.abs() > 1e100 {
            a *= 1e-100;
            b *= 1e-100;
            log_scale += 100.0 * std::f64::consts::LN_10;
        }
        out[k + 1] = emit(b, log_scale);
    }
}

/// Values and first derivatives, using `h_n' = √(2n) h_{n-1} - x h_n`.
pub fn hermite_values_and_derivs(n_max: usize, x: f64, vals: &mut [f64], ders: &mut [f64]) {
    hermite_values(n_max, x, vals);
    ders[0] = -x * vals[0];
    for n in 1..=n_max {
        ders[n] = (2.0 * n as f64).sqrt() * vals[n - 1] - x * vals[n];
    }
}

/// Number of multi-indices `α ∈ ℕ^{d1}` with `|α| = m`.
pub fn multiplicity(d1: usize, m: usize) -> usize {
    binomial(m + d1 - 1, d1 - 1)
}

/// Multi-indices of total degree `m`, lexicographically descending in the leading slot.
pub fn multi_indices(d1: usize, m: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::with_capacity(multiplicity(d1, m));
    let mut cur = vec![0usize; d1];
    fn rec(pos: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if pos + 1 == cur.len() {
            cur[pos] = left;
            out.push(cur.clone());
            return;
        }
        for v in (0..=left).rev() {
            cur[pos] = v;
            rec(pos + 1, left - v, cur, out);
        }
    }
    rec(0, m, &mut cur, &mut out);
    out
}

/// Flat listing of all `(m, k, α)` with `m ≤ m_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeTable {
    pub d1: usize,
    pub m_max: usize,
    /// `offsets[m]` is the flat index of `(m, 0)`; `offsets[m_max + 1]` is the total.
    pub offsets: Vec<usize>,
    pub alphas: Vec<Vec<usize>>,
    pub modes: Vec<usize>,
}

impl ModeTable {
    pub fn new(d1: usize, m_max: usize) -> Self {
        let mut offsets = Vec::with_capacity(m_max + 2);
        let mut alphas = Vec::new();
        let mut modes = Vec::new();
        for m in 0..=m_max {
            offsets.push(alphas.len());
            for a in multi_indices(d1, m) {
                alphas.push(a);
                modes.push(m);
            }
        }
        offsets.push(alphas.len());
        Self { d1, m_max, offsets, alphas, modes }
    }

    pub fn len(&self) -> usize {
        self.alphas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alphas.is_empty()
    }

    pub fn index(&self, m: usize, k: usize) -> usize {
        assert!(m <= self.m_max && k < self.offsets[m + 1] - self.offsets[m]);
        self.offsets[m] + k
    }

    /// `(m, k)` for a flat index.
    pub fn mode_k(&self, idx: usize) -> (usize, usize) {
        let m = self.modes[idx];
        (m, idx - self.offsets[m])
    }
}

/// Precomputed oscillator basis with its Gauss–Hermite rule.
#[derive(Debug, Clone)]
pub struct HermiteBasis {
    pub d1: usize,
    pub m_max: usize,
    pub quad_order: usize,
    /// 1D Gauss–Hermite abscissae at unit scale.
    pub nodes: Vec<f64>,
    /// Folded weights: `Σ W_i f(x_i) ≈ ∫ f dx`.
    pub weights: Vec<f64>,
    pub table: ModeTable,
}

impl HermiteBasis {
    pub fn build(d1: usize, m_max: usize, quad_order: usize) -> Result<Self> {
        if d1 == 0 {
            return Err(Error::InvalidArgument("d1 must be at least 1".into()));
        }
        if quad_order < 2 * (m_max + 1) {
            return Err(Error::QuadratureUnderresolved(format!(
                "quad_order {quad_order} < 2(m_max+1) = {}",
                2 * (m_max + 1)
            )));
        }
        let (nodes, weights) = gauss_hermite(quad_order);
        Ok(Self { d1, m_max, quad_order, nodes, weights, table: ModeTable::new(d1, m_max) })
    }

    /// Basis with the default rule of `4(m_max+1)` nodes.
    pub fn new(d1: usize, m_max: usize) -> Result<Self> {
        Self::build(d1, m_max, 4 * (m_max + 1))
    }

    pub fn lambda(&self, m: usize) -> f64 {
        (2 * m + self.d1) as f64
    }

    pub fn multiplicity(&self, m: usize) -> usize {
        multiplicity(self.d1, m)
    }

    pub fn n_modes(&self) -> usize {
        self.table.len()
    }

    /// Number of tensor-product nodes.
    pub fn n_points(&self) -> usize {
        self.quad_order.pow(self.d1 as u32)
    }

    /// Tensor nodes rescaled to `x = ξ/√scale` (flat, stride `d1`) and matching weights.
    pub fn scaled_nodes(&self, scale: f64) -> (Vec<f64>, Vec<f64>) {
        tensor_nodes(&self.nodes, &self.weights, self.d1, scale)
    }

    /// `h̃_{m,k}(x; η)` at flat points (stride `d1`); `eta` is `|η|`.
    pub fn eval_scaled(&self, m: usize, k: usize, eta: f64, points: &[f64]) -> Result<Vec<f64>> {
        if eta == 0.0 {
            return Err(Error::DegenerateFrequency);
        }
        self.eval_at_scale(m, k, eta.abs(), points)
    }

    /// Unscaled `h_{m,k}(x)`; used on the zero-frequency fiber.
    pub fn eval_unscaled(&self, m: usize, k: usize, points: &[f64]) -> Result<Vec<f64>> {
        self.eval_at_scale(m, k, 1.0, points)
    }

    fn eval_at_scale(&self, m: usize, k: usize, a: f64, points: &[f64]) -> Result<Vec<f64>> {
        if m > self.m_max {
            return Err(Error::InvalidArgument(format!("mode {m} exceeds m_max {}", self.m_max)));
        }
        if k >= self.multiplicity(m) {
            return Err(Error::InvalidArgument(format!("k = {k} outside Λ_{m}")));
        }
        if points.len() % self.d1 != 0 {
            return Err(Error::LengthMismatch { expected: self.d1, got: points.len() % self.d1 });
        }
        let alpha = &self.table.alphas[self.table.index(m, k)];
        let sa = a.sqrt();
        let pre = a.powf(self.d1 as f64 / 4.0);
        let mut buf = vec![0.0; m + 1];
        Ok(points
            .chunks(self.d1)
            .map(|p| {
                let mut v = pre;
                for (j, &xj) in p.iter().enumerate() {
                    hermite_values(alpha[j], sa * xj, &mut buf);
                    v *= buf[alpha[j]];
                }
                v
            })
            .collect())
    }

    /// Project samples taken at `scaled_nodes(scale)` onto all modes `≤ m_max`.
    ///
    /// `scale = |η|`; pass `0.0` for the zero fiber, which uses the unscaled basis.
    pub fn hermite_transform(&self, samples: &[Complex64], eta: f64) -> Result<Vec<Complex64>> {
        if samples.len() != self.n_points() {
            return Err(Error::LengthMismatch { expected: self.n_points(), got: samples.len() });
        }
        let a = if eta == 0.0 { 1.0 } else { eta.abs() };
        let h1 = self.unit_table();
        let pre = a.powf(-(self.d1 as f64) / 4.0);
        let n = self.quad_order;
        let mut out = vec![Complex64::new(0.0, 0.0); self.n_modes()];
        let mut idx = vec![0usize; self.d1];
        for (p, s) in samples.iter().enumerate() {
            unflatten(p, n, &mut idx);
            let w: f64 = idx.iter().map(|&i| self.weights[i]).product();
            for (c, alpha) in out.iter_mut().zip(&self.table.alphas) {
                let mut v = w;
                for (j, &i) in idx.iter().enumerate() {
                    v *= h1[i * (self.m_max + 1) + alpha[j]];
                }
                *c += s * v;
            }
        }
        out.iter_mut().for_each(|c| *c *= pre);
        Ok(out)
    }

    /// Inverse of [`hermite_transform`](Self::hermite_transform): values at `scaled_nodes(scale)`.
    pub fn inverse_hermite_transform(&self, coeffs: &[Complex64], eta: f64) -> Result<Vec<Complex64>> {
        if coeffs.len() != self.n_modes() {
            return Err(Error::LengthMismatch { expected: self.n_modes(), got: coeffs.len() });
        }
        let a = if eta == 0.0 { 1.0 } else { eta.abs() };
        let h1 = self.unit_table();
        let pre = a.powf(self.d1 as f64 / 4.0);
        let n = self.quad_order;
        let mut idx = vec![0usize; self.d1];
        Ok((0..self.n_points())
            .map(|p| {
                unflatten(p, n, &mut idx);
                let mut acc = Complex64::new(0.0, 0.0);
                for (c, alpha) in coeffs.iter().zip(&self.table.alphas) {
                    let mut v = pre;
                    for (j, &i) in idx.iter().enumerate() {
                        v *= h1[i * (self.m_max + 1) + alpha[j]];
                    }
                    acc += c * v;
                }
                acc
            })
            .collect())
    }

    /// `h_n(ξ_i)` for all unit-scale nodes, row-major `[i][n]`.
    fn unit_table(&self) -> Vec<f64> {
        let w = self.m_max + 1;
        let mut t = vec![0.0; self.quad_order * w];
        for (i, &x) in self.nodes.iter().enumerate() {
            hermite_values(self.m_max, x, &mut t[i * w..(i + 1) * w]);
        }
        t
    }

    /// Max `|⟨h_α, h_β⟩ - δ_{αβ}|` over all modes `≤ m_limit`, under the stored rule.
    ///
    /// The tensor rule factorizes, so the multi-dimensional Gram entry is the product
    /// of one-dimensional quadrature Gram entries.
    pub fn orthonormality_defect(&self, m_limit: usize) -> f64 {
        let m_limit = m_limit.min(self.m_max);
        let g = gram_1d(&self.nodes, &self.weights, m_limit, 1.0, 1.0);
        let w = m_limit + 1;
        let table = ModeTable::new(self.d1, m_limit);
        let mut worst = 0.0f64;
        for (i, a) in table.alphas.iter().enumerate() {
            for (j, b) in table.alphas.iter().enumerate().skip(i) {
                let v: f64 = a.iter().zip(b).map(|(&p, &q)| g[p * w + q]).product();
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((v - target).abs());
            }
        }
        worst
    }

    /// Relative residual of `(-Δ_x + |η|²|x|²) h̃ = |η|(2m+d1) h̃`, with the Laplacian
    /// applied by spectral differentiation in Hermite-coefficient space.
    pub fn eigen_residual(&self, m: usize, k: usize, eta: f64) -> Result<f64> {
        if eta == 0.0 {
            return Err(Error::DegenerateFrequency);
        }
        if m > self.m_max || k >= self.multiplicity(m) {
            return Err(Error::InvalidArgument(format!("(m, k) = ({m}, {k}) outside the basis")));
        }
        let a = eta.abs();
        let sa = a.sqrt();
        let alpha = &self.table.alphas[self.table.index(m, k)];
        // 1D table: coordinates x_i = ξ_i/√a and h_n(√a x_i) for n ≤ m+2
        let n1 = self.nodes.len();
        let w = m + 3;
        let xs: Vec<f64> = self.nodes.iter().map(|&xi| xi / sa).collect();
        let mut table = vec![0.0; n1 * w];
        for (row, &x) in table.chunks_mut(w).zip(&xs) {
            hermite_values(m + 2, sa * x, row);
        }
        // d²/dξ² h_n expanded in h_{n-2}, h_n, h_{n+2}
        let second: Vec<Vec<f64>> = alpha
            .iter()
            .map(|&n| {
                let nf = n as f64;
                (0..n1)
                    .map(|i| {
                        let h = &table[i * w..(i + 1) * w];
                        let lo = if n >= 2 { 0.5 * (nf * (nf - 1.0)).sqrt() * h[n - 2] } else { 0.0 };
                        lo - (nf + 0.5) * h[n] + 0.5 * ((nf + 1.0) * (nf + 2.0)).sqrt() * h[n + 2]
                    })
                    .collect()
            })
            .collect();
        let pre = a.powf(self.d1 as f64 / 4.0);
        let lam = a * self.lambda(m);
        let mut idx = vec![0usize; self.d1];
        let mut worst = 0.0f64;
        let mut scale_ref = 0.0f64;
        for p in 0..self.n_points() {
            unflatten(p, n1, &mut idx);
            let vals: Vec<f64> = idx.iter().zip(alpha).map(|(&i, &n)| table[i * w + n]).collect();
            let b = pre * vals.iter().product::<f64>();
            let mut lap = 0.0;
            for j in 0..self.d1 {
                let others: f64 = vals.iter().enumerate().filter(|&(i, _)| i != j).map(|(_, v)| v).product();
                lap += a * pre * second[j][idx[j]] * others;
            }
            let r2: f64 = idx.iter().map(|&i| xs[i] * xs[i]).sum();
            let lhs = -lap + a * a * r2 * b;
            worst = worst.max((lhs - lam * b).abs());
            scale_ref = scale_ref.max((lam * b).abs());
        }
        Ok(worst / scale_ref)
    }
}

/// Tensor product of a 1D rule rescaled to `x = ξ/√scale`.
pub fn tensor_nodes(nodes: &[f64], weights: &[f64], d1: usize, scale: f64) -> (Vec<f64>, Vec<f64>) {
    let n = nodes.len();
    let total = n.pow(d1 as u32);
    let s = scale.sqrt();
    let mut pts = Vec::with_capacity(total * d1);
    let mut w = Vec::with_capacity(total);
    let mut idx = vec![0usize; d1];
    for p in 0..total {
        unflatten(p, n, &mut idx);
        let mut wp = 1.0;
        for &i in &idx {
            pts.push(nodes[i] / s);
            wp *= weights[i] / s;
        }
        w.push(wp);
    }
    (pts, w)
}

/// Lexicographic multi-index of flat position `p` in a grid with `n` points per axis.
pub fn unflatten(mut p: usize, n: usize, idx: &mut [usize]) {
    for slot in idx.iter_mut().rev() {
        *slot = p % n;
        p /= n;
    }
}

/// Quadrature Gram matrix of `h̃_i(·; a)`, `i ≤ m_top`, on nodes `ξ/√s` (row-major).
pub fn gram_1d(nodes: &[f64], weights: &[f64], m_top: usize, a: f64, s: f64) -> Vec<f64> {
    let w = m_top + 1;
    let mut g = vec![0.0; w * w];
    let mut buf = vec![0.0; w];
    let ratio = (a / s).sqrt();
    for (&x, &wt) in nodes.iter().zip(weights) {
        hermite_values(m_top, ratio * x, &mut buf);
        let ww = wt * ratio;
        for i in 0..w {
            let bi = buf[i] * ww;
            if bi == 0.0 {
                continue;
            }
            for j in i..w {
                g[i * w + j] += bi * buf[j];
            }
        }
    }
    for i in 0..w {
        for j in 0..i {
            g[i * w + j] = g[j * w + i];
        }
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ground_state_at_origin() {
        let b = HermiteBasis::new(1, 0).unwrap();
        let v = b.eval_unscaled(0, 0, &[0.0]).unwrap();
        assert!((v[0] - 0.751125544464943).abs() < 1e-14);
        let v = b.eval_scaled(0, 0, 1.0, &[0.0]).unwrap();
        assert!((v[0] - std::f64::consts::PI.powf(-0.25)).abs() < 1e-15);
    }

    #[test]
    fn scaled_ground_state_value() {
        let b = HermiteBasis::new(1, 0).unwrap();
        let v = b.eval_scaled(0, 0, 4.0, &[0.0]).unwrap()[0];
        let oracle = 4f64.powf(0.25) * std::f64::consts::PI.powf(-0.25);
        assert!((v - oracle).abs() < 1e-14);
        assert!((v - 1.062252).abs() < 1e-6);
    }

    #[test]
    fn eigenvalue_law() {
        let b = HermiteBasis::new(1, 5).unwrap();
        assert_eq!(b.lambda(3), 7.0);
        let b2 = HermiteBasis::new(3, 2).unwrap();
        assert_eq!(b2.lambda(2), 7.0);
    }

    #[test]
    fn multiplicity_matches_brute_force() {
        for d1 in 1..=3 {
            for m in 0..=20 {
                let brute = (0..(m + 1usize).pow(d1 as u32))
                    .filter(|&p| {
                        let mut idx = vec![0; d1];
                        unflatten(p, m + 1, &mut idx);
                        idx.iter().sum::<usize>() == m
                    })
                    .count();
                assert_eq!(multiplicity(d1, m), brute);
                assert_eq!(multi_indices(d1, m).len(), brute);
            }
        }
        assert_eq!(multiplicity(2, 3), 4);
    }

    #[test]
    fn multi_indices_are_lexicographic() {
        let v = multi_indices(2, 2);
        assert_eq!(v, vec![vec![2, 0], vec![1, 1], vec![0, 2]]);
    }

    #[test]
    fn degenerate_frequency_rejected() {
        let b = HermiteBasis::new(1, 2).unwrap();
        assert_eq!(b.eval_scaled(0, 0, 0.0, &[0.0]), Err(Error::DegenerateFrequency));
    }

    #[test]
    fn quad_order_too_small() {
        assert!(matches!(HermiteBasis::build(1, 10, 20), Err(Error::QuadratureUnderresolved(_))));
        assert!(HermiteBasis::build(1, 10, 22).is_ok());
    }

    #[test]
    fn scaled_functions_are_normalized() {
        let b = HermiteBasis::new(2, 4).unwrap();
        for &eta in &[0.3, 1.0, 7.5] {
            let (pts, w) = b.scaled_nodes(eta);
            for m in 0..=4 {
                for k in 0..b.multiplicity(m) {
                    let v = b.eval_scaled(m, k, eta, &pts).unwrap();
                    let n2: f64 = v.iter().zip(&w).map(|(v, w)| v * v * w).sum();
                    assert!((n2 - 1.0).abs() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn transform_of_single_mode() {
        let b = HermiteBasis::new(1, 6).unwrap();
        let eta = 2.5;
        let (pts, _) = b.scaled_nodes(eta);
        let s: Vec<Complex64> = b.eval_scaled(2, 0, eta, &pts).unwrap().into_iter().map(|v| v.into()).collect();
        let c = b.hermite_transform(&s, eta).unwrap();
        for (i, ci) in c.iter().enumerate() {
            let t = if i == 2 { 1.0 } else { 0.0 };
            assert!((ci - t).norm() < 1e-8);
        }
    }

    #[test]
    fn transform_of_zero_and_combination() {
        let b = HermiteBasis::new(1, 5).unwrap();
        let eta = 0.7;
        let (pts, w) = b.scaled_nodes(eta);
        let zero = vec![Complex64::new(0.0, 0.0); b.n_points()];
        assert!(b.hermite_transform(&zero, eta).unwrap().iter().all(|c| c.norm() == 0.0));
        let h0 = b.eval_scaled(0, 0, eta, &pts).unwrap();
        let h1 = b.eval_scaled(1, 0, eta, &pts).unwrap();
        let s: Vec<Complex64> = h0.iter().zip(&h1).map(|(a, b)| Complex64::from(a + 0.5 * b)).collect();
        let c = b.hermite_transform(&s, eta).unwrap();
        // direct quadrature oracle
        let direct0: f64 = h0.iter().zip(&h1).zip(&w).map(|((a, b), w)| (a + 0.5 * b) * a * w).sum();
        let direct1: f64 = h0.iter().zip(&h1).zip(&w).map(|((a, b), w)| (a + 0.5 * b) * b * w).sum();
        assert!((c[0].re - direct0).abs() < 1e-12 && (c[0].re - 1.0).abs() < 1e-8);
        assert!((c[1].re - direct1).abs() < 1e-12 && (c[1].re - 0.5).abs() < 1e-8);
        assert!(c[2..].iter().all(|c| c.norm() < 1e-8));
    }

    #[test]
    fn transform_round_trip_d2() {
        let b = HermiteBasis::new(2, 5).unwrap();
        let coeffs: Vec<Complex64> =
            (0..b.n_modes()).map(|i| Complex64::new((i as f64).sin(), (i as f64 * 0.37).cos())).collect();
        let vals = b.inverse_hermite_transform(&coeffs, 3.0).unwrap();
        let back = b.hermite_transform(&vals, 3.0).unwrap();
        let err: f64 = back.iter().zip(&coeffs).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
        assert!(err < 1e-8);
        assert!(matches!(b.hermite_transform(&vals[1..], 3.0), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn derivative_identity() {
        let n = 6;
        let x = 0.83;
        let mut v = vec![0.0; n + 1];
        let mut d = vec![0.0; n + 1];
        hermite_values_and_derivs(n, x, &mut v, &mut d);
        let h = 1e-6;
        let mut vp = vec![0.0; n + 1];
        let mut vm = vec![0.0; n + 1];
        hermite_values(n, x + h, &mut vp);
        hermite_values(n, x - h, &mut vm);
        for k in 0..=n {
            assert!(((vp[k] - vm[k]) / (2.0 * h) - d[k]).abs() < 1e-8);
        }
    }

    #[test]
    fn high_order_values_stay_finite() {
        let mut v = vec![0.0; 401];
        hermite_values(400, 25.0, &mut v);
        assert!(v.iter().all(|x| x.is_finite()));
        // Cramér-type bound |h_n| ≤ π^{-1/4}
        assert!(v.iter().all(|x| x.abs() <= 0.7512));
    }

    #[test]
    fn eigen_residual_small() {
        let b = HermiteBasis::new(1, 16).unwrap();
        for m in 0..=8 {
            assert!(b.eigen_residual(m, 0, 3.0).unwrap() < 1e-10);
        }
        let b2 = HermiteBasis::new(2, 8).unwrap();
        assert!(b2.eigen_residual(3, 2, 0.5).unwrap() < 1e-10);
    }
}
